from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from ..auction import Bid, Mempool
from ..errors import ValidationError


@dataclass(frozen=True)
class TxRecord:
    tx_id: str
    bid_amount: int
    baseline_paid: int
    sender: str

    def __post_init__(self):
        for name in ("bid_amount", "baseline_paid"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 0:
                raise ValidationError(f"tx {self.tx_id!r}: {name} must be a non-negative integer, got {v!r}")


@dataclass(frozen=True)
class BlockRecord:
    """One block (or mempool snapshot) in dataset form.

    ``capacity_n`` is the N used when replaying the block. ``pending_pool``
    holds transactions that were waiting but not included; ``None`` means no
    snapshot was captured. ``base_fee`` is only needed for the EIP-1559
    baseline mode.
    """

    block_number: int
    timestamp: int
    capacity_n: int
    txs: tuple[TxRecord, ...]
    pending_pool: tuple[TxRecord, ...] | None = None
    base_fee: int | None = None

    def __post_init__(self):
        if self.capacity_n < 1:
            raise ValidationError(f"block {self.block_number}: capacity_n must be >= 1")
        if self.block_number < 0:
            raise ValidationError(f"block number must be non-negative, got {self.block_number}")
        ids = [t.tx_id for t in self.txs]
        if self.pending_pool is not None:
            ids += [t.tx_id for t in self.pending_pool]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"block {self.block_number}: duplicate tx_id")

    def competing(self) -> tuple[TxRecord, ...]:
        """Transactions that bid for this block: the included ones plus the pending snapshot."""
        return self.txs + (self.pending_pool or ())


def record_to_mempool(record: BlockRecord) -> Mempool:
    """Historical bids are taken as truthful: each bid's true value is its amount."""
    bids = [Bid(t.tx_id, t.sender, t.bid_amount, t.bid_amount) for t in record.competing()]
    return Mempool(bids, record.block_number)


@dataclass(frozen=True)
class ReplayComparison:
    block_number: int
    transactions: int
    capacity_n: int
    baseline_user_total: int
    bnp_user_total: int
    baseline_miner_revenue: int
    bnp_miner_revenue: int
    bnp_burned: int
    bnp_clearing_price: int
    user_reduction_pct: Fraction
    miner_reduction_pct: Fraction


class DatasetArrivals:
    """Arrival stream read from the dataset: round ``r`` brings block ``r``'s new bids.

    Transactions already competing in block ``r - 1`` are left out, since
    they are the deferred bids the next-round auction already carries.
    """

    def __init__(self, records):
        self._by_block = {r.block_number: r for r in records}

    def __call__(self, round: int) -> tuple[Bid, ...]:
        rec = self._by_block.get(round)
        if rec is None:
            return ()
        prev = self._by_block.get(round - 1)
        seen = {t.tx_id for t in prev.competing()} if prev is not None else set()
        return tuple(
            Bid(t.tx_id, t.sender, t.bid_amount, t.bid_amount) for t in rec.competing() if t.tx_id not in seen
        )
