"""Asset-market dynamics: orbits, local and global stability, Hopf analysis
and a finite-agent market simulator.

The core object is the planar map on (price, excess demand) defined in
:mod:`mdyn.dynamics`; the other modules analyse it.
"""

from .distributions import EvaluationDistribution, custom, heterogeneity, normal_zero_mean
from .dynamics import (
    MarketParams,
    OmegaConfig,
    OmegaKind,
    OmegaLimitVerdict,
    Orbit,
    State,
    detect_omega_limit,
    g,
    simulate,
    simulate_batch,
    step,
)
from .errors import (
    AssumptionViolatedError,
    DegenerateDistributionError,
    InsufficientDataError,
    InvalidParameterError,
    MdynError,
    NumericError,
)
from .global_stability import D_of, R_of, constants, verify_global_convergence
from .hiam import HiamConfig, compare_to_deterministic, replicate, run_hiam
from .hopf import ParamFamily, coefficient_A, coefficient_A_numeric, find_eta0, hopf_scan
from .stability import Region, UWCoordinates, Verdict, classify, classify_params, phase_diagram, uw_of

__version__ = "0.1.0"
