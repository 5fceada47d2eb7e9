"""Random energy models, their Gaussian hierarchical extension and variational bounds."""

__version__ = "0.1.0"

from .bounds import (
    BETA_C,
    CriticalTemps,
    DegenerateParamsError,
    DegenerateParamsWarning,
    VariationalPoint,
    critical_temperatures,
    grem_decomposition,
    grem_objective,
    numeric_optimize,
    optimize,
    q_grem,
    q_rem,
    rem_objective,
)
from .cascade import (
    CascadeRealization,
    PppRealization,
    TailTooLargeError,
    cascade_invariance_test,
    invariance_test,
    sample_cascade,
    sample_ppp,
    weight_sum,
)
from .exact import (
    OverlapEstimate,
    PressureEstimate,
    annealed_pressure_rem,
    log_partition,
    log_partitions,
    overlap_expectation,
    pressure_curve,
    pressure_derivative,
    quenched_pressure,
)
from .model import (
    CapacityError,
    DisorderSample,
    GremParams,
    ParameterError,
    SpinConfig,
    covariance,
    energy,
    project,
    sample_disorder,
)
from .verify import CheckReport, run_suite
