"""Achievable outage rate regions of the two-user MISO interference channel.

Subpackage map:

- channel: channel model, validation, reproducible Gaussian sampling
- rate_core: per-realization rates, power frontiers, feasibility oracle
- outage_mc: case classification, Monte-Carlo estimates, policy simulation
- regions: membership conditions, bias intervals, boundary tracing
- stat_csi: closed-form statistical-CSI regions with fixed beamformers
- cli: batch front-end (run configs, CSV boundaries, JSON manifests)
"""

__version__ = "0.1.0"

from .channel import (
    ChannelRealization,
    ChannelStatistics,
    SampleSource,
    ValidationError,
    factor_covariance,
    sample_batch,
    validate_statistics,
)
from .outage_mc import (
    CaseLabel,
    CaseProbabilities,
    PolicyOutcome,
    classify,
    estimate_case_probs,
    simulate_policy,
)
from .rate_core import (
    FeasibilityWitness,
    PowerFrontier,
    frontier_point,
    frontier_qmin,
    is_achievable,
    max_r2_given_r1,
    mrt,
    power_frontier,
    rate_bf,
    rate_cov,
    su_rate,
    zf,
)
from .regions import (
    BiasInterval,
    BoundaryPoint,
    GridConfig,
    InstantaneousRegionPipeline,
    OutageSpec,
    RegionBoundary,
    bias_interval,
    common_inst_member,
    fixed_choice_member,
    individual_inst_member,
    trace_boundary,
    write_boundary_csv,
)
from .stat_csi import (
    ExponentialLinkModel,
    StatRegionSearch,
    StatSearchConfig,
    effective_means,
    link_success_closed_form,
    rate_for_success,
    search_stat_boundary,
    stat_member,
    stat_member_mc,
)

__all__ = [
    "__version__",
    "BiasInterval",
    "BoundaryPoint",
    "CaseLabel",
    "CaseProbabilities",
    "ChannelRealization",
    "ChannelStatistics",
    "ExponentialLinkModel",
    "FeasibilityWitness",
    "GridConfig",
    "InstantaneousRegionPipeline",
    "OutageSpec",
    "PolicyOutcome",
    "PowerFrontier",
    "RegionBoundary",
    "SampleSource",
    "StatRegionSearch",
    "StatSearchConfig",
    "ValidationError",
    "bias_interval",
    "classify",
    "common_inst_member",
    "effective_means",
    "estimate_case_probs",
    "factor_covariance",
    "fixed_choice_member",
    "frontier_point",
    "frontier_qmin",
    "individual_inst_member",
    "is_achievable",
    "link_success_closed_form",
    "max_r2_given_r1",
    "mrt",
    "power_frontier",
    "rate_bf",
    "rate_cov",
    "rate_for_success",
    "sample_batch",
    "search_stat_boundary",
    "simulate_policy",
    "stat_member",
    "stat_member_mc",
    "su_rate",
    "trace_boundary",
    "validate_statistics",
    "write_boundary_csv",
    "zf",
]
