"""Diversity-multiplexing-delay analysis for multihop ARQ relay networks.

The package splits into analysis layers that build on each other:

- tradeoff: antenna/topology/protocol types and the single-hop tradeoff
- asymptotic: high-SNR tradeoff curves of relay chains under ARQ
- finite_snr: outage, service times, deadline tails, window optimization
- netsim: Monte Carlo fading and queueing simulation
- numerics: the gamma, quadrature, and grid-search routines underneath
- cli: the mharq command built on all of the above
"""

__version__ = "0.1.0"

from .asymptotic import (
    DmdtCurve,
    FixedWindowOptimum,
    fbl_dmdt_3node,
    fixed_dmdt_3node,
    fixed_optimal_windows,
    nnode_fbl_bounds,
    nnode_fixed_bounds,
    nnode_vbl_dmdt,
    sweep_curve,
    vbl_closed_form,
    vbl_dmdt_3node,
)
from .finite_snr import (
    ErrorBreakdown,
    FiniteSnrScenario,
    ServiceModel,
    UnstableQueueError,
    WindowInfeasibleError,
    WindowOptimum,
    deadline_exponent,
    deadline_probability,
    finite_multiplexing,
    mean_service_time,
    message_error,
    optimize_windows,
    ostbc_outage,
    per_hop_outage,
    service_time_distribution,
)
from .netsim import (
    DelayExponentFit,
    SimConfig,
    SimResult,
    estimate_delay_exponent,
    run_network_sim,
)
from .numerics import (
    BoxDomain,
    IntegrationError,
    Interval,
    integrate,
    lower_incomplete_gamma,
    minimize_box,
    regularized_lower_gamma,
)
from .tradeoff import (
    AntennaPair,
    ArqProtocol,
    ChannelAssumption,
    ExponentSchedule,
    ExponentVector,
    FblArq,
    FixedArq,
    Topology,
    VblArq,
    WindowAllocation,
    capacity_exponent,
    decoding_time_blockwise,
    decoding_time_continuous,
    dmt,
    exponent_cost,
)

__all__ = [
    "__version__",
    # tradeoff
    "AntennaPair",
    "ArqProtocol",
    "ChannelAssumption",
    "ExponentSchedule",
    "ExponentVector",
    "FblArq",
    "FixedArq",
    "Topology",
    "VblArq",
    "WindowAllocation",
    "capacity_exponent",
    "decoding_time_blockwise",
    "decoding_time_continuous",
    "dmt",
    "exponent_cost",
    # asymptotic
    "DmdtCurve",
    "FixedWindowOptimum",
    "fbl_dmdt_3node",
    "fixed_dmdt_3node",
    "fixed_optimal_windows",
    "nnode_fbl_bounds",
    "nnode_fixed_bounds",
    "nnode_vbl_dmdt",
    "sweep_curve",
    "vbl_closed_form",
    "vbl_dmdt_3node",
    # finite snr
    "ErrorBreakdown",
    "FiniteSnrScenario",
    "ServiceModel",
    "UnstableQueueError",
    "WindowInfeasibleError",
    "WindowOptimum",
    "deadline_exponent",
    "deadline_probability",
    "finite_multiplexing",
    "mean_service_time",
    "message_error",
    "optimize_windows",
    "ostbc_outage",
    "per_hop_outage",
    "service_time_distribution",
    # netsim
    "DelayExponentFit",
    "SimConfig",
    "SimResult",
    "estimate_delay_exponent",
    "run_network_sim",
    # numerics
    "BoxDomain",
    "IntegrationError",
    "Interval",
    "integrate",
    "lower_incomplete_gamma",
    "minimize_box",
    "regularized_lower_gamma",
]
