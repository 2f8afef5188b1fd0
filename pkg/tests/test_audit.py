import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from bnp_audit import (
    AuctionParams,
    AuditConfig,
    AuditError,
    Bid,
    FutureCostModel,
    InfeasibleAuditError,
    Mempool,
    SyntheticArrivals,
    UniformStep,
    audit_block,
    audit_dataset,
    audit_mic,
    audit_scp,
    audit_uic,
    audit_uic_by_direction,
    evaluate_collusion,
    evaluate_scenario,
    run_auction,
    summarize,
)
from bnp_audit.audit import scp_evaluations
from bnp_audit.pipeline import BlockRecord, TxRecord
from test_strategy import oracle_bids, oracle_model

PESS = AuditConfig(future_model=FutureCostModel.pessimistic())
FIXED1 = AuditConfig(future_model=FutureCostModel.fixed_offset(1))
NRR = AuditConfig()


def truthful(*amounts, owners=None):
    return Mempool([Bid(f"t{i:02d}", owners[i] if owners else f"u{i}", a, a) for i, a in enumerate(amounts)])


# ---- examples ------------------------------------------------------------


def test_tightly_packed_pool_underbid_gain_at_most_one():
    m = truthful(20, 19, 18, 17, 16, 15, 14, 13)
    r = audit_uic(m, AuctionParams(3), PESS)
    assert r.best_delta <= 1


def test_no_underbid_window_when_b_n_equals_next():
    m = truthful(20, 12, 12, 12, 12, 9, 3)
    r = audit_uic(m, AuctionParams(3), PESS)
    assert r.best_delta == 0


def test_single_bid_pool_has_nothing_to_gain():
    m = truthful(7)
    for cfg in (PESS, FIXED1, NRR):
        assert audit_uic(m, AuctionParams(3), cfg).best_delta == 0


def test_mic_unprofitable_when_window_is_thick():
    m = truthful(12, 11, 10, 9, 8, 7)  # b_N = 10 < 2 * b_2N = 14
    assert audit_mic(m, AuctionParams(3), FIXED1).best_delta < 0


def test_mic_flags_wide_spread():
    m = truthful(120, 110, 100, 1, 1, 1)
    r = audit_mic(m, AuctionParams(3), FIXED1)
    assert r.best_delta > 0
    block = audit_block(1, m, AuctionParams(3), FIXED1)
    assert block.violating["mic"]
    assert evaluate_scenario(m, r.witness, AuctionParams(3), FIXED1.future_model).delta == r.best_delta


def test_empty_pool():
    for f in (audit_uic, audit_mic):
        assert f(Mempool(), AuctionParams(2), NRR).best_delta == 0
    assert audit_scp(Mempool(), AuctionParams(2), 1, NRR).best_delta == 0


def test_c_zero_is_mic():
    m = truthful(30, 25, 20, 12, 11, 3, 2)
    assert audit_scp(m, AuctionParams(3), 0, FIXED1) == audit_mic(m, AuctionParams(3), FIXED1)


def test_tightly_packed_collusion_matches_oracle():
    amounts = (20, 19, 18, 17, 16, 15, 14, 13)
    m = truthful(*amounts)
    for cfg in (NRR, PESS):
        for c in (1, 2):
            got = audit_scp(m, AuctionParams(3), c, cfg).best_delta
            ob = oracle_bids(m)
            om = oracle_model(cfg.future_model)
            assert got == oracle.best_scp(ob, 3, om, oracle.pivot_grid(ob, 3, om), c, "fake:miner@0:0")


def test_scp3_optimum_is_just_below_clearing_price():
    # colluder t05 sits in the window; inside the SCP-3 geometry the joint
    # payoff grows with the raised bid, so the best raise is the top of the range
    m = truthful(30, 28, 26, 20, 18, 16, 10)
    params = AuctionParams(3)
    b_n = 26
    deltas = {}
    for v in range(17, b_n + 1):
        r = evaluate_collusion(m, [("t05", v)], params, FutureCostModel.fixed_offset(1))
        if r.case_label == "SCP-3":
            deltas[v] = r.delta
    best = max(deltas, key=lambda v: (deltas[v], v))
    assert best in (b_n - 1, b_n)
    ordered = [deltas[v] for v in sorted(deltas)]
    assert ordered == sorted(ordered)


# ---- errors and guardrails ------------------------------------------------


def test_uic_needs_true_values():
    with pytest.raises(AuditError):
        audit_uic(Mempool([Bid("a", "x", 3)]), AuctionParams(1), NRR)
    with pytest.raises(AuditError):
        audit_uic(Mempool([Bid("a", "x", 3, 5)]), AuctionParams(1), NRR)


def test_scp_guardrails():
    m = truthful(*range(10, 0, -1))
    with pytest.raises(InfeasibleAuditError, match="c <= 3"):
        audit_scp(m, AuctionParams(2), 4, NRR)
    with pytest.raises(InfeasibleAuditError, match="64"):
        audit_scp(truthful(*range(70)), AuctionParams(2), 1, NRR)
    with pytest.raises(InfeasibleAuditError) as info:
        audit_scp(m, AuctionParams(2), 3, AuditConfig(max_evaluations=100))
    assert info.value.evaluations == scp_evaluations(m, AuctionParams(2), 3, AuditConfig())
    with pytest.raises(ValueError):
        audit_scp(m, AuctionParams(2), -1, NRR)


def test_uniform_step_grid():
    m = truthful(40, 30, 20, 10)
    r = audit_uic(m, AuctionParams(2), AuditConfig(bid_grid=UniformStep(5),
                                                   future_model=FutureCostModel.pessimistic()))
    assert r.witness is None or all(v % 5 == 0 for v in r.witness.altered_bids.values())
    with pytest.raises(ValueError):
        UniformStep(0)


# ---- properties ------------------------------------------------------------

model_st = st.sampled_from([
    FutureCostModel(),
    FutureCostModel.fixed_offset(1),
    FutureCostModel.fixed_offset(2),
    FutureCostModel.pessimistic(),
    FutureCostModel.next_round(SyntheticArrivals(2, 0, 12, seed=4)),
])


def _pool(amounts, owner_ids):
    return truthful(*amounts, owners=[f"u{o}" for o in owner_ids])


pool_st = st.integers(0, 10).flatmap(
    lambda k: st.tuples(st.lists(st.integers(0, 12), min_size=k, max_size=k),
                        st.lists(st.integers(0, 3), min_size=k, max_size=k)))


@settings(max_examples=60, deadline=None)
@given(pool_st, st.integers(1, 3), model_st)
def test_grid_sufficiency_against_every_integer(pool, n, model):
    amounts, owners = pool
    m = _pool(amounts, owners)
    params = AuctionParams(n)
    cfg = AuditConfig(future_model=model)
    ob = oracle_bids(m)
    om = oracle_model(model)
    top = max([0, *amounts, *(a["amount"] for a in om.arrivals), run_auction(m, params).padded[-1] + model.delta])
    every = list(range(top + 2))
    assert audit_uic(m, params, cfg).best_delta == oracle.best_uic(ob, n, om, every)
    assert audit_mic(m, params, cfg).best_delta == oracle.best_mic(ob, n, om, every, "fake:miner@0:0")
    assert audit_scp(m, params, 1, cfg).best_delta == oracle.best_scp(ob, n, om, every, 1, "fake:miner@0:0")


@settings(max_examples=60, deadline=None)
@given(pool_st, st.integers(1, 3), model_st)
def test_witnesses_reproduce_best_delta(pool, n, model):
    amounts, owners = pool
    m = _pool(amounts, owners)
    params = AuctionParams(n)
    cfg = AuditConfig(future_model=model)
    for res in (audit_uic(m, params, cfg), audit_mic(m, params, cfg), audit_scp(m, params, 1, cfg),
                audit_scp(m, params, 2, cfg)):
        if res.witness is None:
            assert res.best_delta == 0
        else:
            assert evaluate_scenario(m, res.witness, params, model).delta == res.best_delta


@settings(max_examples=60, deadline=None)
@given(pool_st, st.integers(1, 3), model_st)
def test_monotone_in_coalition_size(pool, n, model):
    amounts, owners = pool
    m = _pool(amounts, owners)
    params = AuctionParams(n)
    cfg = AuditConfig(future_model=model)
    d = [audit_scp(m, params, c, cfg).best_delta for c in range(0, 4)]
    if m.bids:
        assert d[0] <= d[1] <= d[2] <= d[3]


# ---- block and dataset level -----------------------------------------------


def _record(number, amounts, n):
    txs = tuple(TxRecord(f"0x{number:04x}{i:02x}", a, a, f"s{i}") for i, a in enumerate(amounts))
    return BlockRecord(number, 0, n, txs[:n], txs[n:])


def test_violation_flag_follows_tolerance():
    m = truthful(120, 110, 100, 1, 1, 1)
    strict = audit_block(1, m, AuctionParams(3), FIXED1)
    loose = audit_block(1, m, AuctionParams(3), AuditConfig(future_model=FutureCostModel.fixed_offset(1),
                                                             tolerance=10**6))
    assert strict.violating["mic"] and not loose.violating["mic"]
    for a in (strict, loose):
        assert a.violating["uic"] == (a.uic_best_delta > (0 if a is strict else 10**6))


def test_dataset_of_one_block_summarizes_to_itself():
    rec = _record(7, [50, 40, 30, 20, 10, 5], 3)
    audits, summary = audit_dataset([rec], config=FIXED1)
    (a,) = audits
    assert summary.blocks == 1
    assert summary.mean_best_delta["uic"] == a.uic_best_delta
    assert summary.mean_best_delta["scp1"] == a.scp_best_delta[1]
    assert summary.violating == {k: int(v) for k, v in a.violating.items()}


def test_summary_is_order_independent_and_sampling_is_seeded():
    recs = [_record(i, [50 - i, 40, 30 + i, 20, 10, 5, 3], 3) for i in range(4)]
    cfg = AuditConfig(future_model=FutureCostModel.fixed_offset(1), samples=5, seed=11)
    audits, summary = audit_dataset(recs, config=cfg)
    again, _ = audit_dataset(recs, config=cfg)
    assert audits == again
    assert summarize(list(reversed(audits))) == summary
    assert all(set(a.sampled) == {"uic", "mic", "scp"} for a in audits)


def _oracle_directional(ob, n, om, values):
    honest = oracle.World(ob, n, om)
    best = {"overbid": None, "underbid": None}
    for b in ob:
        base = oracle.owner_payoff(honest, ob, b["owner"])
        for v in values:
            if v == b["amount"]:
                continue
            dev = oracle.replace(ob, b["tx"], v)
            d = oracle.owner_payoff(oracle.World(dev, n, om, honest.now), dev, b["owner"]) - base
            key = "overbid" if v > b["amount"] else "underbid"
            best[key] = d if best[key] is None else max(best[key], d)
    return {k: 0 if v is None else v for k, v in best.items()}


@settings(max_examples=60, deadline=None)
@given(pool_st, st.integers(1, 3), model_st)
def test_directional_uic_matches_oracle(pool, n, model):
    amounts, owners = pool
    m = _pool(amounts, owners)
    params = AuctionParams(n)
    cfg = AuditConfig(future_model=model)
    got = audit_uic_by_direction(m, params, cfg)
    ob = oracle_bids(m)
    om = oracle_model(model)
    top = max([0, *amounts, *(a["amount"] for a in om.arrivals), run_auction(m, params).padded[-1] + model.delta])
    want = _oracle_directional(ob, n, om, list(range(top + 2)))
    assert {k: r.best_delta for k, r in got.items()} == want
    combined = audit_uic(m, params, cfg).best_delta
    assert combined >= max(want.values()) or not m.bids
    for key, r in got.items():
        if r.witness is not None:
            (tx, v), = r.witness.altered_bids.items()
            assert (v > m.get(tx).amount) == (key == "overbid")
