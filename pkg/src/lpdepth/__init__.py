"""L_p depth based classification with a data driven choice of p."""

from .classify import (
    ClassifierD2,
    MaxDepthClassifier,
    TrainedClass,
    class_density,
    classify_d1,
    classify_d2,
    fit_common_p,
    fit_threshold_k,
    train_d2,
    train_max_depth,
)
from .core import LpModel, density_from_depth, depth, lp_constant, lp_norm
from .errors import (
    ConfigError,
    DataError,
    DegenerateGeometryError,
    DegenerateSampleError,
    DomainError,
    InsufficientDataError,
    LpDepthError,
    NumericError,
    SingularityError,
    TrimError,
    UndefinedRegretError,
)
from .fit import DEFAULT_GRID, MD_GRID, PGrid, TrimSpec, estimate_p, fit_class, moment_estimates, tr_sqrt
from .kde import DepthKde, sj_bandwidth

__version__ = "0.1.0"
