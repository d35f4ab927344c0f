"""Fit the four linear classifiers on one synthetic multi-task problem.

Run from the repository root:  python demos/01_linear_models.py
"""
from dataclasses import replace

import numpy as np

import umtsvm as m

ds = m.synth_multitask(tasks=3, per_class=30, dimension=4, task_shift=1.0, noise=0.8, seed=3)
train, scaling = m.normalize(ds)
train = m.generate_universum(train, m.UniversumConfig(fraction=0.5, seed=0))
X, y, task = ds.to_rows()

hp = m.Hyperparams(c1=1.0, c2=1.0, c_u=0.25, c_u_star=0.25, mu1=1.0, mu2=1.0)
for method in m.METHODS:
    model = m.fit(train, hp, method)
    pred = m.predict_batch(replace(model, scaling=scaling), X, task)
    norms = ", ".join(f"{np.linalg.norm(model.u_t[i]):.3f}" for i in range(len(model.task_ids)))
    print(f"{method:<10} train accuracy {m.accuracy(pred, y):6.2f}%  "
          f"converged={model.converged}  task-specific |u_t|: {norms}")

# mu weighs the penalty on task-specific parts; large mu pulls tasks onto the shared plane
for mu in (2.0**-6, 1.0, 2.0**6):
    model = m.fit(train, hp.replace(mu1=mu, mu2=mu), "ls_umtsvm")
    spread = max(np.linalg.norm(u) for u in model.u_t)
    print(f"mu={mu:8.4f}  largest |u_t| = {spread:.4f}")
