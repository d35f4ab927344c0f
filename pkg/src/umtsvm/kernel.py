"""Gaussian and linear kernels evaluated against a stacked basis of samples."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ConfigurationError, ValidationError


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice.

    ``gamma`` is only used by the Gaussian kernel ``exp(-gamma * ||x - y||^2)``.
    Gaussian models always work in the empirical feature space
    ``[k(x, D), 1]``. A linear spec works on raw features ``[x, 1]`` unless
    ``use_basis`` is set, in which case it maps through ``x D^T`` as well.
    """

    kind: str = "linear"
    gamma: float = 1.0
    use_basis: bool = False

    def __post_init__(self):
        if self.kind not in ("linear", "gaussian"):
            raise ConfigurationError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "gaussian" and not self.gamma > 0:
            raise ConfigurationError("gamma must be positive for the gaussian kernel")

    @property
    def is_linear(self) -> bool:
        return self.kind == "linear"

    @property
    def kernelized(self) -> bool:
        return self.kind == "gaussian" or self.use_basis


LINEAR = KernelSpec("linear")


@dataclass(frozen=True)
class Basis:
    """Row stack ``D`` of all labelled samples, ordered A_1, B_1, ..., A_T, B_T."""

    D: np.ndarray

    @classmethod
    def from_dataset(cls, ds) -> "Basis":
        D = np.vstack([np.vstack([t.positives, t.negatives]) for t in ds.tasks])
        D.setflags(write=False)
        return cls(D)

    @property
    def size(self) -> int:
        return self.D.shape[0]


def gaussian_kernel(x, y, gamma: float) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValidationError(f"dimension mismatch: {x.shape} vs {y.shape}")
    diff = x - y
    return float(np.exp(-gamma * np.dot(diff, diff)))


def kernel_matrix(X, basis: Basis | np.ndarray, spec: KernelSpec) -> np.ndarray:
    """Matrix ``K[i, j] = k(X_i, D_j)``, shape ``(len(X), len(D))``."""
    D = basis.D if isinstance(basis, Basis) else np.asarray(basis, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or D.ndim != 2 or X.shape[1] != D.shape[1]:
        raise ValidationError(f"dimension mismatch: X {X.shape}, basis {D.shape}")
    if spec.is_linear:
        return X @ D.T
    if X.shape[0] == 0:
        return np.empty((0, D.shape[0]))
    return np.exp(-spec.gamma * cdist(X, D, "sqeuclidean"))
