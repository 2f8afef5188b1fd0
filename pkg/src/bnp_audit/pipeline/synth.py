"""Seeded synthetic congested blocks, for fixtures and offline runs."""

from __future__ import annotations

import numpy as np

from .records import BlockRecord, TxRecord

GWEI = 10**9


def _hex(rng: np.random.Generator, nbytes: int) -> str:
    return "0x" + bytes(rng.integers(0, 256, nbytes, dtype=np.uint8)).hex()


def synthetic_blocks(
    count: int,
    seed: int = 0,
    first_block: int = 15_357_273,
    n_range: tuple[int, int] = (3, 8),
    overfill: tuple[float, float] = (2.0, 3.0),
    gwei_range: tuple[int, int] = (10, 60),
    start_time: int = 1_660_600_000,
) -> list[BlockRecord]:
    """Blocks whose miner packed the N highest bids, with the rest left pending.

    Bids are whole-gwei levels plus a small wei jitter, so amounts are
    realistic in magnitude and almost never tied. Baseline payment is
    pay-your-bid.
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        k = int(np.ceil(n * rng.uniform(*overfill)))
        levels = rng.integers(gwei_range[0], gwei_range[1] + 1, k)
        # heavy right tail: a few urgent bidders overpay
        boost = np.where(rng.random(k) < 0.1, rng.integers(2, 10, k), 1)
        jitter = rng.integers(0, GWEI // 100, k)
        amounts = [int(a) * int(b) * GWEI + int(j) for a, b, j in zip(levels, boost, jitter)]
        txs = [TxRecord(_hex(rng, 32), a, a, _hex(rng, 20)) for a in amounts]
        txs.sort(key=lambda t: (-t.bid_amount, t.tx_id))
        out.append(BlockRecord(
            block_number=first_block + i,
            timestamp=start_time + 12 * i,
            capacity_n=n,
            txs=tuple(txs[:n]),
            pending_pool=tuple(txs[n:]),
        ))
    return out
