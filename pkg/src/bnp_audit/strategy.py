"""Deviations from honest play and their payoff consequences.

A deviation is always scored against a frozen honest counterfactual of the
same round: everyone else keeps their bid. Transactions that miss the
current block can still be mined later; what that costs is decided by a
:class:`FutureCostModel`.
"""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .auction import (
    AuctionOutcome,
    AuctionParams,
    Bid,
    Mempool,
    Origin,
    run_auction,
    sort_descending,
)
from .errors import AuditError, CollusionError, DominatedBidError, NotADeviationError, ValidationError

ArrivalStream = Callable[[int], Sequence[Bid]]


def miner_id(round: int) -> str:
    """Actor id of the block producer of ``round``."""
    return f"miner@{round}"


def fake_tx_id(actor: str, round: int) -> str:
    return f"fake:{actor}:{round}"


class FutureKind(enum.Enum):
    NEXT_ROUND_REALIZED = "next_round"
    FIXED_OFFSET = "fixed_offset"
    PESSIMISTIC = "pessimistic"


@dataclass(frozen=True)
class FutureCostModel:
    """Price a deferred transaction pays when a later block includes it.

    ``NEXT_ROUND_REALIZED`` runs the next auction on the deferred bids plus
    ``arrivals(round + 1)``. ``FIXED_OFFSET`` prices it at ``b_2N + delta``
    and ``PESSIMISTIC`` at the current ``b_N``, both taken from the honest
    round. A genuine transaction is only mined later if its bid covers the
    price; a fake one is always charged (falling back to ``b_N`` when the
    next round leaves it out).
    """

    kind: FutureKind = FutureKind.NEXT_ROUND_REALIZED
    delta: int = 1
    arrivals: ArrivalStream | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind is FutureKind.FIXED_OFFSET and (not isinstance(self.delta, int) or self.delta < 1):
            raise ValidationError("FixedOffset future model needs delta >= 1 so that b' > b_2N")

    @classmethod
    def next_round(cls, arrivals: ArrivalStream | None = None) -> "FutureCostModel":
        return cls(FutureKind.NEXT_ROUND_REALIZED, arrivals=arrivals)

    @classmethod
    def fixed_offset(cls, delta: int = 1) -> "FutureCostModel":
        return cls(FutureKind.FIXED_OFFSET, delta=delta)

    @classmethod
    def pessimistic(cls) -> "FutureCostModel":
        return cls(FutureKind.PESSIMISTIC)

    def arrivals_for(self, round: int) -> tuple[Bid, ...]:
        if self.kind is not FutureKind.NEXT_ROUND_REALIZED or self.arrivals is None:
            return ()
        return tuple(self.arrivals(round))

    def fixed_price(self, honest: AuctionOutcome) -> int | None:
        n = honest.n
        if self.kind is FutureKind.FIXED_OFFSET:
            return honest.padded[2 * n - 1] + self.delta
        if self.kind is FutureKind.PESSIMISTIC:
            return honest.clearing_price
        return None

    def describe(self) -> str:
        if self.kind is FutureKind.FIXED_OFFSET:
            return f"fixed_offset:{self.delta}"
        return self.kind.value


class SyntheticArrivals:
    """Seeded stream of honest arrivals; the same round always yields the same bids."""

    def __init__(self, rate: float, low: int, high: int, seed: int = 0, prefix: str = "arr"):
        if rate < 0 or low < 0 or high < low:
            raise ValidationError("arrivals need rate >= 0 and 0 <= low <= high")
        self.rate = rate
        self.low = low
        self.high = high
        self.seed = seed
        self.prefix = prefix

    def __call__(self, round: int) -> tuple[Bid, ...]:
        rng = np.random.default_rng([self.seed, round])
        count = int(rng.poisson(self.rate))
        amounts = rng.integers(self.low, self.high + 1, size=count)
        return tuple(
            Bid(f"{self.prefix}{round}-{i:06d}", f"{self.prefix}-user{round}-{i}", int(a), int(a))
            for i, a in enumerate(amounts)
        )


class DeviationKind(enum.Enum):
    OVERBID = "overbid"
    UNDERBID = "underbid"
    FAKE_USER_BID = "fake_user_bid"
    MINER_FAKE_BID = "miner_fake_bid"
    COLLUSION = "collusion"


@dataclass(frozen=True)
class DeviationScenario:
    kind: DeviationKind
    actor: str
    altered_bids: Mapping[str, int] = field(default_factory=dict)
    injected_bids: tuple[Bid, ...] = ()
    case_label: str = ""
    round: int | None = None

    def apply(self, mempool: Mempool) -> Mempool:
        origin = Origin.COLLUDER_RAISED if self.kind is DeviationKind.COLLUSION else None
        return mempool.replace(dict(self.altered_bids), self.injected_bids, origin)


@dataclass(frozen=True)
class ScenarioResult:
    honest_payoff: int
    deviant_payoff: int
    delta: int
    case_label: str
    future_fee_charged: int = 0
    scenario: DeviationScenario | None = field(default=None, compare=False)


class _Scored:
    """Payoffs of chosen bids in one (honest or deviated) round."""

    def __init__(self, pool: Mempool, params: AuctionParams, model: FutureCostModel, honest: AuctionOutcome | None):
        self.outcome = run_auction(pool, params)
        honest = honest or self.outcome
        self.model = model
        self.fixed = model.fixed_price(honest)
        self.fallback = honest.clearing_price
        self.next: AuctionOutcome | None = None
        if model.kind is FutureKind.NEXT_ROUND_REALIZED:
            deferred = self.outcome.deferred
            arrivals = model.arrivals_for(deferred.round)
            self.next = run_auction(Mempool(deferred.bids + arrivals, deferred.round), params)
        self._now = self.outcome.winner_ids()
        self._later = self.next.winner_ids() if self.next is not None else set()

    def payoff(self, bid: Bid) -> tuple[int, int]:
        """(payoff, future price paid) of ``bid``; fake bids have no value."""
        true = 0 if bid.is_fake else bid.true_value
        if true is None:
            raise AuditError(f"bid {bid.tx_id!r} has no true value; cannot score its payoff")
        if bid.tx_id in self._now:
            return true - self.outcome.clearing_price, 0
        if self.next is not None:
            if bid.tx_id in self._later:
                return true - self.next.clearing_price, self.next.clearing_price
            return (-self.fallback, self.fallback) if bid.is_fake else (0, 0)
        if bid.is_fake:
            return -self.fixed, self.fixed
        if bid.amount >= self.fixed:
            return true - self.fixed, self.fixed
        return 0, 0

    def bidder_payoff(self, pool: Mempool, bidder_id: str) -> tuple[int, int]:
        total = fee = 0
        for b in pool.bids:
            if b.bidder_id == bidder_id:
                p, f = self.payoff(b)
                total += p
                fee += f
        return total, fee


def _lookup(mempool: Mempool, tx_id) -> Bid:
    try:
        return mempool.get(tx_id)
    except KeyError:
        raise ValidationError(f"tx_id {tx_id!r} is not in the mempool") from None


def classify_user_deviation(mempool: Mempool, tx_id, new_amount: int, params: AuctionParams) -> str:
    """Which overbid/underbid case a re-bid of ``tx_id`` falls into."""
    bid = _lookup(mempool, tx_id)
    if bid.true_value is None:
        raise AuditError(f"bid {tx_id!r} has no true value")
    true = bid.true_value
    if new_amount == true:
        raise NotADeviationError(f"bid {tx_id!r}: {new_amount} equals the true value, not a deviation")
    honest = run_auction(mempool, params)
    n = params.n
    b_n = honest.padded[n - 1]
    included = honest.is_included(tx_id)
    if new_amount > true:
        if included:
            return "OB-3a" if true == b_n else "OB-3b"
        return "OB-2" if new_amount >= b_n else "OB-1"
    if not included:
        return "UB-1"
    if new_amount >= b_n:
        return "UB-3"
    return "UB-2b" if new_amount > honest.padded[n] else "UB-2a"


def user_deviation(mempool: Mempool, tx_id, new_amount: int, params: AuctionParams) -> DeviationScenario:
    bid = _lookup(mempool, tx_id)
    label = classify_user_deviation(mempool, tx_id, new_amount, params)
    kind = DeviationKind.OVERBID if new_amount > bid.true_value else DeviationKind.UNDERBID
    return DeviationScenario(kind, bid.bidder_id, {tx_id: new_amount}, (), label, mempool.round)


def evaluate_user_deviation(
    mempool: Mempool,
    tx_id,
    new_amount: int,
    params: AuctionParams,
    future_model: FutureCostModel | None = None,
) -> ScenarioResult:
    future_model = future_model or FutureCostModel()
    scenario = user_deviation(mempool, tx_id, new_amount, params)
    return evaluate_scenario(mempool, scenario, params, future_model)


def fake_user_bid(mempool: Mempool, bidder_id: str, amount: int, tx_id=None) -> DeviationScenario:
    tx_id = tx_id or fake_tx_id(bidder_id, mempool.round)
    fake = Bid(tx_id, bidder_id, amount, 0, Origin.USER_FAKE)
    return DeviationScenario(DeviationKind.FAKE_USER_BID, bidder_id, {}, (fake,), "FAKE", mempool.round)


def _mic_label(position: int, n: int) -> str:
    if position < n - 1:
        return "MIC-3"
    if position == n - 1:
        return "MIC-2"
    if position < 2 * n:
        return "MIC-1"
    return "MIC-0"


def miner_fake_bid(mempool: Mempool, b_fake: int, params: AuctionParams, tx_id=None) -> DeviationScenario:
    honest = run_auction(mempool, params)
    n = params.n
    b_2n = honest.padded[2 * n - 1]
    if b_fake < b_2n:
        raise DominatedBidError(
            f"fake bid {b_fake} is below b_2N={b_2n}: it cannot change miner revenue and only costs fees"
        )
    actor = miner_id(mempool.round)
    fake = Bid(tx_id or fake_tx_id(actor, mempool.round), actor, b_fake, 0, Origin.MINER_FAKE)
    ranked = sort_descending(list(mempool.bids) + [fake])
    position = next(i for i, b in enumerate(ranked) if b.tx_id == fake.tx_id)
    return DeviationScenario(
        DeviationKind.MINER_FAKE_BID, actor, {}, (fake,), _mic_label(position, n), mempool.round
    )


def evaluate_miner_fake_bid(
    mempool: Mempool,
    b_fake: int,
    params: AuctionParams,
    future_model: FutureCostModel | None = None,
    tx_id=None,
) -> ScenarioResult:
    if not any(not b.is_fake for b in mempool.bids):
        raise ValidationError("miner fake-bid evaluation needs at least one genuine bid")
    future_model = future_model or FutureCostModel()
    scenario = miner_fake_bid(mempool, b_fake, params, tx_id)
    return evaluate_scenario(mempool, scenario, params, future_model)


def _scp_label(honest_pos: int, deviated_pos: int, n: int) -> str:
    in_window = honest_pos < 2 * n
    if deviated_pos < n:
        return "SCP-1" if in_window else "SCP-2"
    if deviated_pos < 2 * n:
        return "SCP-3" if in_window else "SCP-4"
    return "SCP-0"


def collusion(
    mempool: Mempool, colluders: Sequence[tuple[str, int]], params: AuctionParams
) -> DeviationScenario:
    if not colluders:
        raise ValidationError("a collusion needs at least one colluding user")
    ids = [t for t, _ in colluders]
    if len(set(ids)) != len(ids):
        raise ValidationError("a colluding transaction is listed twice")
    honest = run_auction(mempool, params)
    winners = honest.winner_ids()
    for tx_id, raised in colluders:
        bid = _lookup(mempool, tx_id)
        if tx_id in winners:
            raise CollusionError(
                f"colluder {tx_id!r} is already in the top N; raising its bid cannot "
                "change miner revenue and only raises the user's cost"
            )
        if raised < bid.amount:
            raise ValidationError(f"colluder {tx_id!r}: {raised} lowers the bid {bid.amount}; collusion raises bids")
        if bid.true_value is None:
            raise AuditError(f"colluder {tx_id!r} has no true value")
    label = f"SCP-c{len(colluders)}"
    if len(colluders) == 1:
        tx_id, raised = colluders[0]
        honest_pos = _position(mempool.bids, tx_id)
        deviated = mempool.replace({tx_id: raised})
        label = _scp_label(honest_pos, _position(deviated.bids, tx_id), params.n)
    return DeviationScenario(
        DeviationKind.COLLUSION, miner_id(mempool.round), dict(colluders), (), label, mempool.round
    )


def _position(bids: Iterable[Bid], tx_id) -> int:
    return next(i for i, b in enumerate(sort_descending(bids)) if b.tx_id == tx_id)


def evaluate_collusion(
    mempool: Mempool,
    colluders: Sequence[tuple[str, int]],
    params: AuctionParams,
    future_model: FutureCostModel | None = None,
) -> ScenarioResult:
    future_model = future_model or FutureCostModel()
    scenario = collusion(mempool, colluders, params)
    return evaluate_scenario(mempool, scenario, params, future_model)


def evaluate_scenario(
    mempool: Mempool,
    scenario: DeviationScenario,
    params: AuctionParams,
    future_model: FutureCostModel | None = None,
) -> ScenarioResult:
    """Score any deviation against the honest round it was built from."""
    future_model = future_model or FutureCostModel()
    honest = _Scored(mempool, params, future_model, None)
    pool = scenario.apply(mempool)
    dev = _Scored(pool, params, future_model, honest.outcome)
    kind = scenario.kind
    if kind in (DeviationKind.OVERBID, DeviationKind.UNDERBID, DeviationKind.FAKE_USER_BID):
        h, _ = honest.bidder_payoff(mempool, scenario.actor)
        d, fee = dev.bidder_payoff(pool, scenario.actor)
    elif kind is DeviationKind.MINER_FAKE_BID:
        h = honest.outcome.miner_revenue
        d = dev.outcome.miner_revenue
        fee = 0
        for fake in scenario.injected_bids:
            p, f = dev.payoff(fake)
            d += p
            fee += f
    else:
        h = honest.outcome.miner_revenue
        d = dev.outcome.miner_revenue
        fee = 0
        for tx_id in scenario.altered_bids:
            h += honest.payoff(mempool.get(tx_id))[0]
            p, f = dev.payoff(pool.get(tx_id))
            d += p
            fee += f
    return ScenarioResult(h, d, d - h, scenario.case_label, fee, scenario)


@dataclass
class SimulationResult:
    outcomes: list[AuctionOutcome]
    ledger: dict[str, int]
    burned: int
    rounds: list[dict] = field(default_factory=list)


def simulate_rounds(
    initial: Mempool,
    arrivals: ArrivalStream | None,
    params: AuctionParams,
    rounds: int,
    interventions: Sequence[DeviationScenario] = (),
) -> SimulationResult:
    """Run ``rounds`` consecutive auctions and accumulate payoffs per actor.

    Round ``r`` auctions ``deferred + arrivals(r)``; the initial mempool is
    the whole first round. Interventions fire in the round they name (or the
    first round when unnamed). The producer of round ``r`` is
    :func:`miner_id` ``(r)``. Fake bids still unmined at the horizon are
    charged the honest ``b_N`` of the round they were injected in.
    """
    if rounds < 1:
        raise ValidationError("simulate_rounds needs rounds >= 1")
    start = initial.round
    scheduled: dict[int, list[DeviationScenario]] = defaultdict(list)
    for sc in interventions:
        scheduled[start if sc.round is None else sc.round].append(sc)
    pool = initial
    ledger: dict[str, int] = defaultdict(int)
    outcomes = []
    history = []
    pending_fakes: dict[str, tuple[str, int]] = {}
    burned = 0
    for step in range(rounds):
        r = start + step
        if step and arrivals is not None:
            pool = Mempool(pool.bids + tuple(arrivals(r)), r)
        if scheduled.get(r):
            reference = run_auction(pool, params).clearing_price
            for sc in scheduled[r]:
                pool = sc.apply(pool)
                for b in sc.injected_bids:
                    if b.is_fake:
                        pending_fakes[b.tx_id] = (b.bidder_id, reference)
        out = run_auction(pool, params)
        ledger[miner_id(r)] += out.miner_revenue
        burned += out.burned
        by_id = {b.tx_id: b for b in out.ranked[: params.n]}
        for w in out.winners:
            bid = by_id[w.tx_id]
            pending_fakes.pop(w.tx_id, None)
            true = 0 if bid.is_fake else bid.true_value
            if true is not None:
                ledger[bid.bidder_id] += true - w.paid
        outcomes.append(out)
        history.append(
            {
                "round": r,
                "included": len(out.winners),
                "clearing_price": out.clearing_price,
                "miner_revenue": out.miner_revenue,
                "burned": out.burned,
                "pending": len(out.deferred),
            }
        )
        pool = out.deferred
    for bidder, price in pending_fakes.values():
        ledger[bidder] -= price
    return SimulationResult(outcomes, dict(ledger), burned, history)
