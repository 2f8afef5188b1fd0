"""Burning N-th price auction: simulation, incentive audits and block replay."""

from .audit import (
    AllPivotPoints,
    AuditConfig,
    AuditResult,
    AuditSummary,
    BlockAudit,
    UniformStep,
    audit_block,
    audit_dataset,
    audit_mic,
    audit_scp,
    audit_uic,
    audit_uic_by_direction,
    summarize,
)
from .auction import (
    AuctionOutcome,
    AuctionParams,
    Bid,
    Mempool,
    Origin,
    TieBreak,
    Winner,
    miner_payoff,
    pad_to_2n,
    run_auction,
    sort_descending,
    user_payoff,
)
from .errors import (
    AuditError,
    BnpError,
    CollusionError,
    DatasetError,
    DominatedBidError,
    FetchError,
    InfeasibleAuditError,
    NotADeviationError,
    SchemaVersionError,
    ValidationError,
)
from .strategy import (
    DeviationKind,
    DeviationScenario,
    FutureCostModel,
    FutureKind,
    ScenarioResult,
    SimulationResult,
    SyntheticArrivals,
    collusion,
    evaluate_collusion,
    evaluate_miner_fake_bid,
    evaluate_scenario,
    evaluate_user_deviation,
    fake_user_bid,
    miner_fake_bid,
    simulate_rounds,
    user_deviation,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
