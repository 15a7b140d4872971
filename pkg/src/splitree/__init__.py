"""splitree: splitting-tree broadcast protocols, exactly and by simulation.

Exact rational moment tables and generating functions for the
conflict-resolution / leader-election family of randomized splitting
algorithms, a seeded Monte Carlo simulator for all nine variants,
high-precision asymptotic constants, and the maximum-stable-throughput
solver. The `splitree` CLI fronts everything with JSON/CSV output.
"""

from .model import (
    DepthCapExceeded,
    DomainError,
    ExactLimitExceeded,
    MomentRecord,
    NoRootFound,
    NonConvergence,
    PrecisionUnachievable,
    ScriptedSource,
    ScriptExhausted,
    ScriptLengthMismatch,
    SeededSource,
    TreeTrace,
    TrialOutcome,
    UnsupportedVariant,
    Variant,
    next_bits,
    trial_stream,
)
from .exact import (
    SortMoments,
    conflict_mean_series,
    moment_table,
    pgf_eval,
    sort_moments,
)
from .simulate import (
    SimulationSummary,
    estimate,
    estimate_joint_election,
    paired_conflict_maxfind,
    run_trial,
)
from .asymptotics import (
    ConstantId,
    ResidualProfile,
    asymptotic_prediction,
    constant,
    residual_profile,
)
from .throughput import (
    ThroughputRoot,
    blocked_lambda,
    critical_report,
    equation_residual,
    lambda_critical,
)

__version__ = "0.1.0"
