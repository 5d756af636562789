"""Full-duplex relay-assisted random access with multi-packet reception.

Analytical model (success probabilities, relay-queue drift and steady state,
throughput and delay) cross-validated against an exact enumeration oracle, a
truncated Markov-chain oracle, and a slot-level Monte Carlo simulator.
"""

from .drift import DriftDistribution, drift_for, enumerate_drift, n_user_drift, two_user_drift
from .errors import (
    BetaWarning,
    ContractError,
    EnumerationLimitError,
    ModelError,
    ParameterError,
    QueueFormWarning,
    TruncationError,
    UnstableQueueError,
)
from .metrics import (
    PerformanceReport,
    aggregate_throughput_unstable,
    average_delay,
    full_report,
    no_relay_baseline,
    relayed_fraction,
    throughput_n_user,
    throughput_two_user,
)
from .params import NetworkParams
from .phy import (
    DEST,
    MODE_EQ1,
    MODE_LITERAL,
    RELAY,
    LinkBudget,
    SuccessTable,
    build_success_table,
    compare_table_modes,
    link_budget,
    link_gain,
    success_probability,
)
from .queueing import (
    DtmcSolution,
    RelayQueueMetrics,
    analyze_relay_queue,
    dtmc_steady_state,
    empty_probability,
    mean_arrival_rate,
    mean_queue_length,
    q0_min,
    service_rate,
)
from .sim import (
    KERNEL_BACKEND,
    MODE_PROBABILITY,
    MODE_SINR,
    SimConfig,
    SimResult,
    available_backends,
    estimate_success_probability_sinr,
    get_kernel,
    run_simulation,
    stability_probe,
)

__version__ = "0.1.0"

__all__ = [
    "BetaWarning",
    "ContractError",
    "DEST",
    "DriftDistribution",
    "DtmcSolution",
    "EnumerationLimitError",
    "KERNEL_BACKEND",
    "LinkBudget",
    "MODE_EQ1",
    "MODE_LITERAL",
    "MODE_PROBABILITY",
    "MODE_SINR",
    "ModelError",
    "NetworkParams",
    "ParameterError",
    "PerformanceReport",
    "QueueFormWarning",
    "RELAY",
    "RelayQueueMetrics",
    "SimConfig",
    "SimResult",
    "SuccessTable",
    "TruncationError",
    "UnstableQueueError",
    "aggregate_throughput_unstable",
    "analyze_relay_queue",
    "available_backends",
    "average_delay",
    "build_success_table",
    "compare_table_modes",
    "dtmc_steady_state",
    "drift_for",
    "empty_probability",
    "enumerate_drift",
    "estimate_success_probability_sinr",
    "full_report",
    "get_kernel",
    "link_budget",
    "link_gain",
    "mean_arrival_rate",
    "mean_queue_length",
    "n_user_drift",
    "no_relay_baseline",
    "q0_min",
    "relayed_fraction",
    "run_simulation",
    "service_rate",
    "stability_probe",
    "success_probability",
    "throughput_n_user",
    "throughput_two_user",
    "two_user_drift",
]
