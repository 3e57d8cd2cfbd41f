"""Height-periodic boundary laws and gradient Gibbs measures on regular trees."""

from .boundary_law import RadialBoundaryLaw, apply_F, build, free_law, law_from_seed, outbound_convergence
from .errors import (
    BoundaryError,
    ConfigError,
    DepthError,
    DomainError,
    GGMError,
    NoGapError,
    NumericalError,
    PreconditionError,
    SeedError,
    ShapeError,
    StepSizeError,
    TruncationError,
    UnsupportedOffset,
)
from .ggm_layer import (
    edge_marginal,
    kernel,
    path_increment_distribution,
    period_fingerprint,
    sample,
    subtree_marginal,
    subtree_marginal_many,
    ti_scalar,
)
from .simplex_dynamics import (
    apply_S,
    backward_orbit,
    equidistribution,
    hadamard_power,
    jacobian_fd,
    manifold_orbit,
    seed_on_manifold,
    spectrum_at_eq,
    unstable_subspace,
)
from .thresholds import (
    dobrushin_unique,
    invsq_min_period,
    invsq_region,
    scan_q0,
    sos_min_period,
    sos_region,
    threshold_report,
)
from .transfer_ops import FuzzyOperator, TailRule, TransferOperator, cutoff, evaluate, fourier, fuzzy
from .tree import FiniteSubtree

__version__ = "0.1.0"
