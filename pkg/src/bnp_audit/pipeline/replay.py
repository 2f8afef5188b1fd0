"""Congestion filtering and BNP-versus-baseline replay of recorded blocks."""

from __future__ import annotations

import logging
from fractions import Fraction
from typing import Iterable, Sequence

from ..auction import AuctionParams, run_auction
from ..errors import ValidationError
from .records import BlockRecord, ReplayComparison, record_to_mempool

log = logging.getLogger(__name__)

FIRST_PRICE = "first-price"
EIP1559 = "eip1559"
BASELINES = (FIRST_PRICE, EIP1559)


def _ratio(value) -> Fraction:
    r = Fraction(str(value)) if isinstance(value, float) else Fraction(value)
    if r < 0:
        raise ValidationError(f"threshold ratio must be non-negative, got {value}")
    return r


def filter_congested(records: Iterable[BlockRecord], threshold_ratio=2) -> list[BlockRecord]:
    """Keep blocks whose competing transactions number at least ``threshold_ratio * capacity_n``.

    The competing set is the block's own transactions plus its pending
    snapshot. A record whose snapshot exists but is empty is dropped with a
    warning, as is one without any snapshot that falls short of the bound.
    """
    ratio = _ratio(threshold_ratio)
    kept = []
    for rec in records:
        if rec.pending_pool is not None and not rec.pending_pool:
            log.warning("block %d: empty pending pool, dropped", rec.block_number)
            continue
        if len(rec.competing()) >= ratio * rec.capacity_n:
            kept.append(rec)
    return kept


def _pct(before: int, after: int) -> Fraction:
    if before == 0:
        return Fraction(0)
    return Fraction(100 * (before - after), before)


def replay_compare(record: BlockRecord, params: AuctionParams | None = None,
                   baseline: str = FIRST_PRICE) -> ReplayComparison:
    """Compare what the block's users and miner got against a BNP auction over the same bids.

    The baseline sums ``baseline_paid`` over the included transactions. In
    first-price mode the miner keeps all of it; in ``eip1559`` mode the
    base fee share of each payment is burned instead.
    """
    if baseline not in BASELINES:
        raise ValidationError(f"unknown baseline {baseline!r}; expected one of {', '.join(BASELINES)}")
    params = params or AuctionParams(record.capacity_n)
    user_total = sum(t.baseline_paid for t in record.txs)
    if baseline == EIP1559:
        if record.base_fee is None:
            raise ValidationError(f"block {record.block_number}: eip1559 baseline needs base_fee")
        miner_total = sum(max(0, t.baseline_paid - record.base_fee) for t in record.txs)
    else:
        miner_total = user_total
    out = run_auction(record_to_mempool(record), params)
    return ReplayComparison(
        block_number=record.block_number,
        transactions=len(record.competing()),
        capacity_n=params.n,
        baseline_user_total=user_total,
        bnp_user_total=out.total_collected,
        baseline_miner_revenue=miner_total,
        bnp_miner_revenue=out.miner_revenue,
        bnp_burned=out.burned,
        bnp_clearing_price=out.clearing_price,
        user_reduction_pct=_pct(user_total, out.total_collected),
        miner_reduction_pct=_pct(miner_total, out.miner_revenue),
    )


def replay_summary(comparisons: Sequence[ReplayComparison]) -> list[tuple[str, object]]:
    """Dataset-level statistics as (metric, value) rows; percentages stay exact."""
    if not comparisons:
        raise ValidationError("no blocks after filtering")
    k = len(comparisons)
    mean_user = sum((c.user_reduction_pct for c in comparisons), Fraction(0)) / k
    mean_miner = sum((c.miner_reduction_pct for c in comparisons), Fraction(0)) / k
    saved = max(comparisons, key=lambda c: (c.baseline_user_total - c.bnp_user_total, -c.block_number))
    return [
        ("blocks", k),
        ("transactions", sum(c.transactions for c in comparisons)),
        ("baseline_user_total", sum(c.baseline_user_total for c in comparisons)),
        ("bnp_user_total", sum(c.bnp_user_total for c in comparisons)),
        ("baseline_miner_revenue", sum(c.baseline_miner_revenue for c in comparisons)),
        ("bnp_miner_revenue", sum(c.bnp_miner_revenue for c in comparisons)),
        ("bnp_burned", sum(c.bnp_burned for c in comparisons)),
        ("mean_user_reduction_pct", mean_user),
        ("mean_miner_reduction_pct", mean_miner),
        ("max_user_saving", saved.baseline_user_total - saved.bnp_user_total),
        ("max_user_saving_block", saved.block_number),
        ("max_miner_reduction_pct", max(c.miner_reduction_pct for c in comparisons)),
        ("min_miner_reduction_pct", min(c.miner_reduction_pct for c in comparisons)),
    ]
