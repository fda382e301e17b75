"""Entropy-conserving conversions between discrete random symbol streams.

Build state-machine reductions between known distributions, compose and
chain them, and verify the output law exactly (rational arithmetic) or
statistically. See the CLI (`randred`) for stream conversion, analysis,
parameter sweeps, and verification reports.
"""

from .core import (
    Alphabet,
    Dist,
    ExactSampler,
    PcdResult,
    PrefixCode,
    Protocol,
    UnknownGlyphError,
    KraftInfeasibleError,
    assign_codewords,
    canonical_codewords,
    entropy,
    identity_protocol,
    is_prefix,
    kraft_sum,
    prefix_code_of,
)
from .combinators import (
    EpochStats,
    RestartProtocol,
    RestartSpec,
    SerialChain,
    SerialEfficiency,
    SerialProtocol,
    build_restart,
    build_serial,
    check_growth_condition,
    compose,
    epoch_stats,
    serial_partial_efficiency,
    stats_from_moments,
)
from .reductions import (
    ResidualCascadeProtocol,
    ResidualState,
    TypeClass,
    arbitrary_to_uniform,
    arbitrary_to_uniform_stats,
    biased_information_bound,
    biased_to_uniform,
    biased_to_uniform_stats,
    binomialary_representation,
    dirichlet_qualifies,
    find_dirichlet_k,
    multinomial_coefficient,
    multinomial_rank,
    type_classes,
    uniform_to_arbitrary,
    uniform_to_rational,
    uniform_to_rational_stats,
    uniform_to_uniform,
    uniform_to_uniform_stats,
    uniform_uniform_chain,
)
from .analysis import (
    ChiSquareResult,
    EfficiencyEstimate,
    LatencyEstimate,
    VerificationReport,
    absolute_efficiency_bound,
    chi_square_prefixes,
    latency_empirical,
    monte_carlo_efficiency,
    output_length_ratio_bound,
    verify_reduction_exact,
    verify_reduction_lazy,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
