"""Exhaustive incentive audits of single blocks and whole datasets.

Each audit searches a grid of candidate amounts for the most profitable
deviation of one kind (user re-bid or fake bid, miner fake bid, miner plus
colluding users) and reports the raw signed optimum together with a witness
scenario that :func:`bnp_audit.strategy.evaluate_scenario` reproduces
exactly. Payoffs are piecewise linear in any one bid with breakpoints at
existing amounts and model thresholds, so probing every such amount and its
two neighbours finds the same optimum as scanning every integer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels
from .auction import AuctionParams, Mempool, _top_ranked, run_auction, sort_descending, sort_key
from .errors import AuditError, InfeasibleAuditError
from .strategy import (
    DeviationScenario,
    FutureCostModel,
    FutureKind,
    collusion,
    evaluate_scenario,
    fake_tx_id,
    fake_user_bid,
    miner_fake_bid,
    miner_id,
    user_deviation,
)

MAX_COALITION = 3
MAX_SCP_POOL = 64


@dataclass(frozen=True)
class AllPivotPoints:
    """Every amount that occurs (bids, arrivals, model thresholds) and its +/-1 neighbours."""

    def values(self, amounts: Sequence[int], extra: Sequence[int] = ()) -> list[int]:
        out = {0}
        for a in (*amounts, *extra):
            out.update((a - 1, a, a + 1))
        out.discard(-1)
        return sorted(out)


@dataclass(frozen=True)
class UniformStep:
    step: int

    def __post_init__(self):
        if self.step < 1:
            raise ValueError("grid step must be >= 1")

    def values(self, amounts: Sequence[int], extra: Sequence[int] = ()) -> list[int]:
        top = max([0, *amounts, *extra])
        return list(range(0, top + self.step + 1, self.step))


@dataclass(frozen=True)
class AuditConfig:
    bid_grid: AllPivotPoints | UniformStep = AllPivotPoints()
    collusion_c: int = 1
    future_model: FutureCostModel = field(default_factory=FutureCostModel)
    tolerance: int = 0
    max_evaluations: int = 20_000_000
    samples: int = 0
    seed: int = 0
    backend: str | None = None


class AuditResult(NamedTuple):
    best_delta: int
    witness: DeviationScenario | None
    evaluations: int


class _Ranked:
    """A pool ranked once, with integer tie-break ranks for the kernels."""

    def __init__(self, mempool: Mempool, params: AuctionParams, model: FutureCostModel,
                 extra_ids: Sequence[str] = (), limit: int | None = None):
        n = params.n
        self.n = n
        self.model = model
        self.mempool = mempool
        if limit is None:
            self.bids = sort_descending(mempool)
        else:
            self.bids = _top_ranked(mempool.bids, limit)
        padded = [b.amount for b in self.bids[: 2 * n]]
        padded += [0] * (2 * n - len(padded))
        self.padded = padded
        self.b_n = padded[n - 1]
        self.b_2n = padded[2 * n - 1]
        if model.kind is FutureKind.NEXT_ROUND_REALIZED:
            self.kind = 0
            self.fixed = 0
            arrivals = sorted(model.arrivals_for(mempool.round + 1), key=sort_key)
        else:
            self.kind = 1 if model.kind is FutureKind.FIXED_OFFSET else 2
            self.fixed = self.b_2n + model.delta if self.kind == 1 else self.b_n
            arrivals = []
        self.arrivals = arrivals
        ids = sorted({b.tx_id for b in self.bids} | {b.tx_id for b in arrivals} | set(extra_ids))
        rank = {t: i for i, t in enumerate(ids)}
        self.rank = rank
        self.amt = [b.amount for b in self.bids]
        self.tid = [rank[b.tx_id] for b in self.bids]
        self.arr_amt = [b.amount for b in arrivals]
        self.arr_tid = [rank[b.tx_id] for b in arrivals]

    def thresholds(self) -> list[int]:
        return [self.b_n, self.b_2n, self.fixed]

    def grid(self, config: AuditConfig) -> list[int]:
        return config.bid_grid.values(self.amt + self.arr_amt, self.thresholds())


def _guard(evaluations: int, config: AuditConfig, what: str):
    if evaluations > config.max_evaluations:
        raise InfeasibleAuditError(
            f"{what} needs {evaluations} evaluations, above the limit of {config.max_evaluations}; "
            "use a coarser grid (UniformStep) or raise max_evaluations",
            evaluations=evaluations,
            limit=config.max_evaluations,
        )


def _uic_setup(mempool: Mempool, params: AuctionParams, config: AuditConfig):
    genuine = [b for b in mempool.bids if not b.is_fake]
    missing = [b.tx_id for b in genuine if b.true_value is None]
    if missing:
        raise AuditError(f"UIC audit needs true values; bid {missing[0]!r} has none")
    untruthful = [b.tx_id for b in genuine if b.amount != b.true_value]
    if untruthful:
        raise AuditError(
            f"UIC audit measures deviations from truthful bidding; bid {untruthful[0]!r} "
            "does not bid its true value"
        )
    owners = sorted({b.bidder_id for b in genuine})
    fake_ids = [fake_tx_id(o, mempool.round) for o in owners]
    ctx = _Ranked(mempool, params, config.future_model, fake_ids)
    by_owner: dict[str, list[int]] = {o: [] for o in owners}
    for i, b in enumerate(ctx.bids):
        if not b.is_fake:
            by_owner[b.bidder_id].append(i)
    ptr = [0]
    txs: list[int] = []
    for o in owners:
        txs.extend(by_owner[o])
        ptr.append(len(txs))
    return owners, fake_ids, ctx, ptr, txs


def _uic_run(mempool, params, config, setup, direction):
    owners, fake_ids, ctx, ptr, txs = setup
    grid = ctx.grid(config)
    _guard((len(txs) + (0 if direction else len(owners))) * len(grid), config, "UIC audit")
    true = [b.true_value if b.true_value is not None else 0 for b in ctx.bids]
    best, u, src, v, count = kernels.uic_search(
        ctx.amt, ctx.tid, true, ctx.n, ptr, txs, [ctx.rank[f] for f in fake_ids], grid,
        ctx.kind, ctx.fixed, ctx.b_n, ctx.arr_amt, ctx.arr_tid, backend=config.backend, direction=direction,
    )
    if best is None:
        return AuditResult(0, None, 0)
    if src >= 0:
        witness = user_deviation(mempool, ctx.bids[src].tx_id, v, params)
    else:
        witness = fake_user_bid(mempool, owners[u], v)
    return AuditResult(best, witness, count)


def audit_uic(mempool: Mempool, params: AuctionParams, config: AuditConfig | None = None) -> AuditResult:
    """Best single-user deviation: re-bidding an own transaction or adding a fake one."""
    config = config or AuditConfig()
    return _uic_run(mempool, params, config, _uic_setup(mempool, params, config), 0)


def audit_uic_by_direction(
    mempool: Mempool, params: AuctionParams, config: AuditConfig | None = None
) -> dict[str, AuditResult]:
    """Best overbid and best underbid separately, fake bids excluded.

    Useful when a profitable underbid would otherwise mask a smaller but
    still profitable overbid in the combined search.
    """
    config = config or AuditConfig()
    setup = _uic_setup(mempool, params, config)
    return {
        "overbid": _uic_run(mempool, params, config, setup, 1),
        "underbid": _uic_run(mempool, params, config, setup, -1),
    }


def _mic_context(mempool, params, model):
    n = params.n
    actor = miner_id(mempool.round)
    fid = fake_tx_id(actor, mempool.round)
    ctx = _Ranked(mempool, params, model, [fid], limit=2 * n + 1)
    # honest next round: deferred (ranked from N on) plus arrivals
    nxt = sorted(ctx.bids[n:] + ctx.arrivals, key=sort_key)[: n + 1]
    return ctx, fid, nxt


def audit_mic(mempool: Mempool, params: AuctionParams, config: AuditConfig | None = None) -> AuditResult:
    """Best single fake bid the miner can inject."""
    config = config or AuditConfig()
    if not any(not b.is_fake for b in mempool.bids):
        return AuditResult(0, None, 0)
    ctx, fid, nxt = _mic_context(mempool, params, config.future_model)
    grid = [v for v in ctx.grid(config) if v >= ctx.b_2n]
    _guard(len(grid), config, "MIC audit")
    best, v, _pos, count = kernels.mic_search(
        ctx.amt, ctx.tid, ctx.n, grid, ctx.rank[fid], ctx.kind, ctx.fixed, ctx.b_n,
        [b.amount for b in nxt], [ctx.rank[b.tx_id] for b in nxt], backend=config.backend,
    )
    if best is None:
        return AuditResult(0, None, 0)
    return AuditResult(best, miner_fake_bid(mempool, v, params), count)


def scp_evaluations(mempool: Mempool, params: AuctionParams, c: int, config: AuditConfig) -> int:
    """Number of coalition scenarios an exhaustive c-SCP audit evaluates."""
    ctx = _Ranked(mempool, params, config.future_model)
    grid = ctx.grid(config)
    counts = [len(grid) - int(np.searchsorted(grid, ctx.amt[i] + 1)) for i in _eligible(ctx)]
    # sum over subsets of size 1..c of the product of per-colluder grid sizes
    poly = [1] + [0] * c
    for k in counts:
        for j in range(c, 0, -1):
            poly[j] += poly[j - 1] * k
    return sum(poly[1:])


def _eligible(ctx: _Ranked) -> list[int]:
    return [i for i in range(ctx.n, len(ctx.bids))
            if not ctx.bids[i].is_fake and ctx.bids[i].true_value is not None]


def audit_scp(mempool: Mempool, params: AuctionParams, c: int, config: AuditConfig | None = None) -> AuditResult:
    """Best joint deviation of the miner and up to ``c`` users bidding below ``b_N``.

    The coalition may also fall back to a plain miner fake bid, so the result
    never drops below :func:`audit_mic`. ``c = 0`` is exactly the MIC audit.
    """
    config = config or AuditConfig()
    if c < 0:
        raise ValueError("coalition size must be >= 0")
    mic = audit_mic(mempool, params, config)
    if c == 0:
        return mic
    if c > MAX_COALITION or len(mempool) > MAX_SCP_POOL:
        raise InfeasibleAuditError(
            f"exhaustive c-SCP audit is limited to c <= {MAX_COALITION} and pools of at most "
            f"{MAX_SCP_POOL} bids (got c={c}, {len(mempool)} bids)",
            limit=MAX_SCP_POOL,
        )
    ctx = _Ranked(mempool, params, config.future_model)
    grid = ctx.grid(config)
    cand = _eligible(ctx)
    _guard(scp_evaluations(mempool, params, c, config), config, f"{c}-SCP audit")
    true = [b.true_value if b.true_value is not None else 0 for b in ctx.bids]
    best, srcs, vals, count = kernels.scp_search(
        ctx.amt, ctx.tid, true, ctx.n, cand, c, grid, ctx.kind, ctx.fixed, ctx.b_n,
        ctx.arr_amt, ctx.arr_tid, backend=config.backend,
    )
    count += mic.evaluations
    if best is None or (mic.witness is not None and mic.best_delta >= best):
        # ties go to the plain fake bid, the smaller deviation
        return AuditResult(mic.best_delta, mic.witness, count)
    witness = collusion(mempool, [(ctx.bids[s].tx_id, v) for s, v in zip(srcs, vals)], params)
    return AuditResult(best, witness, count)


@dataclass
class BlockAudit:
    block_id: int
    uic_best_delta: int
    mic_best_delta: int
    scp_best_delta: dict[int, int]
    violating: dict[str, bool]
    uic_witness: str = ""
    mic_witness: str = ""
    scp_witness: str = ""
    scp_price_delta: int = 0
    sampled: dict[str, Fraction] = field(default_factory=dict)


@dataclass
class AuditSummary:
    blocks: int
    violating: dict[str, int]
    mean_best_delta: dict[str, Fraction]
    mean_sampled_delta: dict[str, Fraction]


def _describe(w: DeviationScenario | None) -> str:
    if w is None:
        return ""
    parts = [w.case_label or w.kind.value]
    parts += [f"{t}->{a}" for t, a in w.altered_bids.items()]
    parts += [f"+{b.tx_id}@{b.amount}" for b in w.injected_bids]
    return " ".join(parts)


def _sample(mempool, params, config, block_id) -> dict[str, Fraction]:
    rng = np.random.default_rng([config.seed, block_id])
    model = config.future_model
    ctx = _Ranked(mempool, params, model)
    grid = ctx.grid(config)
    out: dict[str, Fraction] = {}
    genuine = [b for b in ctx.bids if not b.is_fake]
    uic = []
    for _ in range(config.samples if genuine else 0):
        b = genuine[int(rng.integers(len(genuine)))]
        choices = [v for v in grid if v != b.true_value]
        v = choices[int(rng.integers(len(choices)))]
        uic.append(evaluate_scenario(mempool, user_deviation(mempool, b.tx_id, v, params), params, model).delta)
    mic = []
    fakes = [v for v in grid if v >= ctx.b_2n]
    for _ in range(config.samples if genuine else 0):
        v = fakes[int(rng.integers(len(fakes)))]
        mic.append(evaluate_scenario(mempool, miner_fake_bid(mempool, v, params), params, model).delta)
    scp = []
    cand = [ctx.bids[i] for i in _eligible(ctx)]
    for _ in range(config.samples if cand else 0):
        b = cand[int(rng.integers(len(cand)))]
        raises = [v for v in grid if v > b.amount]
        v = raises[int(rng.integers(len(raises)))]
        scp.append(evaluate_scenario(mempool, collusion(mempool, [(b.tx_id, v)], params), params, model).delta)
    for key, vals in (("uic", uic), ("mic", mic), ("scp", scp)):
        if vals:
            out[key] = Fraction(sum(vals), len(vals))
    return out


def audit_block(block_id: int, mempool: Mempool, params: AuctionParams, config: AuditConfig) -> BlockAudit:
    uic = audit_uic(mempool, params, config)
    mic = audit_mic(mempool, params, config)
    scp = {}
    scp_witness = None
    for c in range(1, config.collusion_c + 1):
        res = audit_scp(mempool, params, c, config)
        scp[c] = res.best_delta
        if c == 1:
            scp_witness = res.witness
    price_delta = 0
    if scp_witness is not None:
        before = run_auction(mempool, params).clearing_price
        after = run_auction(scp_witness.apply(mempool), params).clearing_price
        price_delta = after - before
    tol = config.tolerance
    violating = {"uic": uic.best_delta > tol, "mic": mic.best_delta > tol}
    for c, d in scp.items():
        violating[f"scp{c}"] = d > tol
    sampled = _sample(mempool, params, config, block_id) if config.samples else {}
    return BlockAudit(
        block_id, uic.best_delta, mic.best_delta, scp, violating,
        _describe(uic.witness), _describe(mic.witness), _describe(scp_witness), price_delta, sampled,
    )


def summarize(audits: Sequence[BlockAudit]) -> AuditSummary:
    keys: list[str] = []
    for a in audits:
        for k in a.violating:
            if k not in keys:
                keys.append(k)
    violating = {k: sum(1 for a in audits if a.violating.get(k)) for k in keys}
    means: dict[str, Fraction] = {}
    if audits:
        means["uic"] = Fraction(sum(a.uic_best_delta for a in audits), len(audits))
        means["mic"] = Fraction(sum(a.mic_best_delta for a in audits), len(audits))
        for k in keys:
            if k.startswith("scp"):
                c = int(k[3:])
                means[k] = Fraction(sum(a.scp_best_delta[c] for a in audits), len(audits))
    sampled: dict[str, Fraction] = {}
    for k in ("uic", "mic", "scp"):
        vals = [a.sampled[k] for a in audits if k in a.sampled]
        if vals:
            sampled[k] = sum(vals, Fraction(0)) / len(vals)
    return AuditSummary(len(audits), violating, means, sampled)


def audit_dataset(blocks, params: AuctionParams | None = None, config: AuditConfig | None = None):
    """Audit every block; ``params`` overrides each record's own capacity."""
    from .pipeline.records import record_to_mempool

    config = config or AuditConfig()
    audits = []
    for rec in blocks:
        p = params or AuctionParams(rec.capacity_n)
        audits.append(audit_block(rec.block_number, record_to_mempool(rec), p, config))
    return audits, summarize(audits)
