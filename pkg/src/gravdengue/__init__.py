"""Multi-patch vector-host epidemic model with gravity coupling."""
from .errors import (
    AllIterationsFailedError,
    BoundsError,
    ConfigurationError,
    DataFormatError,
    DegenerateDistanceError,
    DomainError,
    IllConditionedError,
    InsufficientDataError,
    ModelError,
    NumericalBlowupError,
    StructuralError,
    UnmappedDataError,
)
from .model import (
    COMPARTMENTS,
    DiseaseParams,
    EpidemicSeries,
    PatchGeometry,
    PatchState,
    SeasonalBeta,
    Trajectory,
    integrate,
    rhs,
    weekly_incidence,
)
from .gravity import CouplingMatrix, GravityParams, gravity_matrix, identity_matrix, uniform_matrix
from .fitting import FitProblem, FitResult, ModelConfig, Sampler, fit, least_squares, pearson_chi2

__version__ = "0.1.0"
