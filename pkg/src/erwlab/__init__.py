"""erwlab: simulation and verification lab for excited random walks with
periodic and Markovian cookie stacks."""

import warnings

# the sandbox TBB is older than numba wants; the fallback layer is fine
warnings.filterwarnings("ignore", message=".*TBB.*", category=Warning)

from .env import (  # noqa: E402
    CoupledEnv,
    InvalidEnvironment,
    MarkovStack,
    ModelParams,
    PeriodicStack,
    Regime,
    classify,
    compute_params,
    cookie,
    env_from_spec,
    make_periodic,
    theta_coupled,
)
from .walk import (  # noqa: E402
    DiagnosticsReport,
    EdgeLocalTimes,
    WalkRecord,
    drift_gap,
    edge_local_times,
    hitting_time,
    simulate_walk,
    walk_diagnostics,
)
from .blp import (  # noqa: E402
    BlpKind,
    BlpTrajectory,
    CorrespondenceReport,
    Estimate,
    InconclusiveError,
    blp_step,
    coupled_domination_check,
    estimate_drift,
    estimate_variance,
    psi_check,
    rayknight_check,
    simulate_blp,
    tail_survey,
)
from .diffusion import (  # noqa: E402
    DiffusionPath,
    pbm_marginal_samples,
    pbm_reconstruction_residual,
    simulate_sqbessel,
    solve_pbm,
    sqbessel_marginal_samples,
)
from .stats import (  # noqa: E402
    SampleSet,
    TailFit,
    find_boundary,
    ks_distance,
    qv_statistic,
    tail_exponent,
)

__version__ = "0.1.0"
