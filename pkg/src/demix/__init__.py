"""Two-phase demixing via Wasserstein minimizing movements, with built-in
verification of the scheme's a priori estimates."""

from .constitutive import (
    ArcsinDeGennes,
    ConstitutiveError,
    ConstitutiveModel,
    LinearCH,
    PowerGamma,
    model_from_string,
)
from .energy import (
    MixtureState,
    ModelParams,
    StateError,
    energy_E,
    energy_E1,
    entropy_H,
    frak_F,
    state_from_c1,
    variational_derivative,
)
from .grid import Grid1D, Profile, gradient, laplacian, norm
from .jko import JkoConfig, JkoStepRecord, jko_step, normalize_potentials, run_trajectory
from .report import EstimateReport
from .transport import (
    MetricParams,
    TransportError,
    TransportResult,
    check_mollify_bound,
    check_w2_to_l2,
    metric_d_sq,
    regularize_delta,
    sinkhorn,
    wasserstein_1d,
    wasserstein_distance_sq,
)

__version__ = "0.1.0"

__all__ = [
    "ArcsinDeGennes",
    "ConstitutiveError",
    "ConstitutiveModel",
    "EstimateReport",
    "Grid1D",
    "JkoConfig",
    "JkoStepRecord",
    "LinearCH",
    "MetricParams",
    "MixtureState",
    "ModelParams",
    "PowerGamma",
    "Profile",
    "StateError",
    "TransportError",
    "TransportResult",
    "check_mollify_bound",
    "check_w2_to_l2",
    "energy_E",
    "energy_E1",
    "entropy_H",
    "frak_F",
    "gradient",
    "jko_step",
    "laplacian",
    "metric_d_sq",
    "model_from_string",
    "norm",
    "normalize_potentials",
    "regularize_delta",
    "run_trajectory",
    "sinkhorn",
    "state_from_c1",
    "variational_derivative",
    "wasserstein_1d",
    "wasserstein_distance_sq",
]
