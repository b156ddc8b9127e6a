"""prlandscape: empirical certification of the intensity least-squares
phase-retrieval landscape at desk scale.

The toolkit samples Gaussian measurement ensembles, evaluates the
intensity loss and its derivatives through a compiled kernel core (with a
pure-numpy fallback selected at import), and certifies the benign-landscape
picture: no spurious minima, strict saddles, strong convexity near the
planted signal, and a strict maximum at the origin.
"""

from ._backend import BACKEND
from .ensemble import MeasurementEnsemble, load_ensemble, sample_ensemble, save_ensemble
from .errors import (
    CapacityError,
    ConfigurationError,
    ConvergenceError,
    DegenerateMomentError,
    FormatError,
    IntegrityError,
    InvalidSignalError,
    NormalizationError,
    PRLandscapeError,
    SamplingError,
    ShapeError,
)
from .experiments import (
    ConcentrationStat,
    SolverConfig,
    SolverTrace,
    TransitionCell,
    check_cross_moment,
    check_cubic_moment,
    check_quartic_lower,
    check_spectral_norm,
    gradient_descent,
    negative_curvature_descent,
    phase_transition,
    spectral_init,
    truncation_split,
)
from .geometry import (
    EmpiricalMoments,
    PolarPoint,
    PopulationMoments,
    RegionMembership,
    classify_region,
    coverage_check,
    critical_radius,
    critical_relation_residual,
    empirical_moments,
    polar,
    population_critical_points,
    population_gradient,
    population_hessian,
    population_loss,
    population_moments,
)
from .landscape import (
    CriticalPointRecord,
    CriticalSearch,
    LandscapeReport,
    LemmaVerdict,
    find_critical_points,
    run_landscape_report,
    verify_R1_curvature,
    verify_R2_no_critical,
    verify_R3_convexity,
    verify_origin_max,
)
from .objective import (
    CurvatureProbe,
    ObjectiveEvaluation,
    evaluate,
    extreme_eigenvalues,
    fd_gradient,
    fd_hessian_vector_product,
    full_hessian,
    gradient,
    hessian_quadratic_form,
    hessian_vector_product,
    loss,
    loss_and_gradient,
)
from .rng import TrialSeed, derive_seed

__version__ = "0.1.0"
