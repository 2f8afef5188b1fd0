"""Burning N-th price auction.

Pending transactions are ranked by bid, highest first, with equal bids
ordered by ascending tx id. The top ``N`` are included and every one of them
pays the N-th bid. The ranked list is padded with zeros to length ``2N``;
bids ``N+1 .. 2N`` form the miner's priority fee and the rest of the
``N * b_N`` collected is burned.

All amounts are integers in the smallest currency unit. Payoffs are signed
integers. Nothing in here rounds.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import AuditError, ValidationError

Amount = int

# Above this many bids run_auction partitions with numpy before sorting.
_PARTITION_MIN = 50_000
_INT64_SAFE = 2**62


class Origin(enum.Enum):
    GENUINE = "genuine"
    MINER_FAKE = "miner_fake"
    COLLUDER_RAISED = "colluder_raised"
    USER_FAKE = "user_fake"


class TieBreak(enum.Enum):
    BY_TX_ID_ASCENDING = "tx_id_ascending"


@dataclass(frozen=True, slots=True)
class Bid:
    tx_id: str
    bidder_id: str
    amount: Amount
    true_value: Amount | None = None
    origin: Origin = Origin.GENUINE

    def __post_init__(self):
        if not isinstance(self.amount, int) or self.amount < 0:
            raise ValidationError(f"bid {self.tx_id!r}: amount must be a non-negative integer, got {self.amount!r}")
        if self.true_value is not None and (not isinstance(self.true_value, int) or self.true_value < 0):
            raise ValidationError(f"bid {self.tx_id!r}: true_value must be a non-negative integer")

    @property
    def is_fake(self) -> bool:
        return self.origin in (Origin.MINER_FAKE, Origin.USER_FAKE)


def sort_key(bid: Bid):
    return (-bid.amount, bid.tx_id)


class Mempool:
    """Pending bids for one auction round.

    Equality ignores the order bids were supplied in.
    """

    __slots__ = ("bids", "round", "_ids")

    def __init__(self, bids: Iterable[Bid] = (), round: int = 0):
        bids = tuple(bids)
        if not isinstance(round, int) or round < 0:
            raise ValidationError(f"mempool round must be a non-negative integer, got {round!r}")
        ids = {b.tx_id for b in bids}
        if len(ids) != len(bids):
            seen: set = set()
            dups = sorted({b.tx_id for b in bids if b.tx_id in seen or seen.add(b.tx_id)})
            raise ValidationError(f"duplicate tx_id in mempool: {', '.join(map(str, dups[:5]))}")
        self.bids = bids
        self.round = round
        self._ids = ids

    @classmethod
    def _trusted(cls, bids: tuple[Bid, ...], round: int, ids: set | None = None) -> "Mempool":
        pool = cls.__new__(cls)
        pool.bids = bids
        pool.round = round
        pool._ids = ids if ids is not None else {b.tx_id for b in bids}
        return pool

    def __len__(self):
        return len(self.bids)

    def __iter__(self):
        return iter(self.bids)

    def __contains__(self, tx_id) -> bool:
        return tx_id in self._ids

    def __eq__(self, other):
        if not isinstance(other, Mempool):
            return NotImplemented
        return self.round == other.round and frozenset(self.bids) == frozenset(other.bids)

    def __hash__(self):
        return hash((self.round, frozenset(self.bids)))

    def __repr__(self):
        return f"Mempool(round={self.round}, bids={len(self.bids)})"

    def get(self, tx_id) -> Bid:
        for b in self.bids:
            if b.tx_id == tx_id:
                return b
        raise KeyError(tx_id)

    def with_bids(self, bids: Iterable[Bid]) -> "Mempool":
        return Mempool(bids, self.round)

    def replace(self, altered: dict, injected: Sequence[Bid] = (), origin: Origin | None = None) -> "Mempool":
        """Copy with some amounts changed and extra bids appended."""
        missing = [t for t in altered if t not in self._ids]
        if missing:
            raise KeyError(f"tx_id not in mempool: {missing[0]!r}")
        out = []
        for b in self.bids:
            if b.tx_id in altered:
                b = Bid(b.tx_id, b.bidder_id, altered[b.tx_id], b.true_value, origin or b.origin)
            out.append(b)
        out.extend(injected)
        return Mempool(out, self.round)


@dataclass(frozen=True, slots=True)
class AuctionParams:
    n: int
    tie_break: TieBreak = TieBreak.BY_TX_ID_ASCENDING

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValidationError(f"block capacity n must be a positive integer, got {self.n!r}")


class Winner(NamedTuple):
    tx_id: str
    paid: Amount
    refund: Amount


@dataclass(frozen=True)
class AuctionOutcome:
    winners: tuple[Winner, ...]
    clearing_price: Amount
    miner_revenue: Amount
    burned: Amount
    total_collected: Amount
    deferred: Mempool
    n: int
    padded: tuple[Amount, ...] = field(repr=False)
    ranked: tuple[Bid, ...] = field(repr=False, compare=False)

    def winner_ids(self) -> set:
        return {w.tx_id for w in self.winners}

    def is_included(self, tx_id) -> bool:
        return any(w.tx_id == tx_id for w in self.winners)


def sort_descending(mempool: Mempool | Iterable[Bid]) -> list[Bid]:
    """Bids by amount, highest first; equal amounts by ascending tx id."""
    bids = mempool.bids if isinstance(mempool, Mempool) else tuple(mempool)
    return sorted(bids, key=sort_key)


def pad_to_2n(sorted_bids: Sequence, params: AuctionParams) -> list[Amount]:
    """Top ``2N`` amounts of an already descending list, zero-filled to length ``2N``."""
    width = 2 * params.n
    amounts = [b.amount if isinstance(b, Bid) else int(b) for b in sorted_bids[:width]]
    return amounts + [0] * (width - len(amounts))


def _top_ranked(bids: tuple[Bid, ...], k: int) -> list[Bid]:
    m = len(bids)
    if m <= k or m < _PARTITION_MIN:
        return sorted(bids, key=sort_key)[:k]
    amounts = [b.amount for b in bids]
    if max(amounts) >= _INT64_SAFE:
        return heapq.nsmallest(k, bids, key=sort_key)
    arr = np.fromiter(amounts, dtype=np.int64, count=m)
    # k-th largest amount; every bid strictly above it is in the top k and
    # ties at it are resolved by tx id below.
    threshold = int(np.partition(arr, m - k)[m - k])
    idx = np.flatnonzero(arr >= threshold)
    return sorted((bids[i] for i in idx.tolist()), key=sort_key)[:k]


def run_auction(mempool: Mempool, params: AuctionParams) -> AuctionOutcome:
    n = params.n
    ranked = _top_ranked(mempool.bids, 2 * n)
    padded = tuple(pad_to_2n(ranked, params))
    clearing = padded[n - 1]
    winners = tuple(Winner(b.tx_id, clearing, b.amount - clearing) for b in ranked[:n])
    revenue = sum(padded[n:])
    total = len(winners) * clearing
    win_ids = {w.tx_id for w in winners}
    rest = tuple(b for b in mempool.bids if b.tx_id not in win_ids)
    deferred = Mempool._trusted(rest, mempool.round + 1, mempool._ids - win_ids)
    return AuctionOutcome(
        winners=winners,
        clearing_price=clearing,
        miner_revenue=revenue,
        burned=total - revenue,
        total_collected=total,
        deferred=deferred,
        n=n,
        padded=padded,
        ranked=tuple(ranked),
    )


def miner_payoff(outcome: AuctionOutcome) -> Amount:
    """Priority fee: sum of padded positions ``N+1 .. 2N``."""
    return sum(outcome.padded[outcome.n : 2 * outcome.n])


def user_payoff(true_value: Amount | None, included: bool, clearing_price: Amount) -> int:
    if true_value is None:
        raise AuditError("cannot score a user payoff without the bid's true value")
    return true_value - clearing_price if included else 0
