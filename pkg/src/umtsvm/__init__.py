"""Multi-task twin support vector machines with Universum data.

Linear and Gaussian-kernel classifiers solved either through box-constrained
dual QPs (``dmtsvm``, ``umtsvm``) or through SPD linear systems (``mtls``,
``ls_umtsvm``), plus the cross-validation protocol used to compare them.
"""
from .data import (
    Interval,
    LabeledRows,
    PartitionRule,
    ScalingRecord,
    Task,
    TaskDataset,
    load_csv,
    read_features,
    normalize,
    partition_tasks,
    read_rows,
    synth_multitask,
    write_csv,
)
from .errors import (
    ConfigurationError,
    FormatError,
    NumericError,
    ParseError,
    UMTSVMError,
    ValidationError,
)
from .evaluation import (
    CvReport,
    GridSpec,
    accuracy,
    cross_validate,
    grid_search,
    kfold_split,
    paper_grid,
)
from .kernel import Basis, KernelSpec, gaussian_kernel, kernel_matrix
from .models import (
    METHODS,
    Hyperparams,
    TrainedModel,
    fit,
    fit_dmtsvm,
    fit_ls_umtsvm,
    fit_mtls_twsvm,
    fit_umtsvm,
    load_model,
    predict,
    predict_batch,
    save_model,
)
from .qp import solve_box_qp
from .lsys import solve_spd
from .universum import UniversumConfig, generate_universum, split_universum_by_task

__version__ = "0.1.0"
