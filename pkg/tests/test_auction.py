import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from bnp_audit import (
    AuctionParams,
    AuditError,
    Bid,
    Mempool,
    Origin,
    ValidationError,
    miner_payoff,
    pad_to_2n,
    run_auction,
    sort_descending,
    user_payoff,
)
from bnp_audit.auction import _PARTITION_MIN


def pool(*amounts, prefix="t"):
    return Mempool([Bid(f"{prefix}{i}", f"u{i}", a, a) for i, a in enumerate(amounts)])


def test_sort_descending_orders_by_amount_then_tx_id():
    m = Mempool([Bid("a", "x", 5), Bid("b", "y", 3), Bid("c", "z", 9)])
    assert [b.tx_id for b in sort_descending(m)] == ["c", "a", "b"]
    m = Mempool([Bid("b", "x", 5), Bid("a", "y", 5)])
    assert [b.tx_id for b in sort_descending(m)] == ["a", "b"]
    assert sort_descending(Mempool()) == []


@pytest.mark.parametrize(
    "amounts,n,expected",
    [([5, 4, 3], 3, [5, 4, 3, 0, 0, 0]), ([], 2, [0, 0, 0, 0]), ([9, 8, 7, 6, 5, 4, 3], 3, [9, 8, 7, 6, 5, 4])],
)
def test_pad_to_2n(amounts, n, expected):
    assert pad_to_2n(amounts, AuctionParams(n)) == expected


def test_five_bids_three_slots():
    out = run_auction(pool(5, 4, 3, 2, 1), AuctionParams(3))
    assert out.padded == (5, 4, 3, 2, 1, 0)
    # the N-th (3rd) highest bid clears
    assert out.clearing_price == 3
    assert [w.paid for w in out.winners] == [3, 3, 3]
    assert [w.refund for w in out.winners] == [2, 1, 0]
    assert out.miner_revenue == 3
    assert out.total_collected == 9
    assert out.burned == 6


def test_equal_bids_burn_nothing():
    out = run_auction(pool(7, 7, 7, 7), AuctionParams(2))
    assert [w.tx_id for w in out.winners] == ["t0", "t1"]
    assert (out.clearing_price, out.miner_revenue, out.burned) == (7, 14, 0)


def test_single_bid_pays_nothing():
    out = run_auction(pool(5), AuctionParams(3))
    assert out.padded == (5, 0, 0, 0, 0, 0)
    assert out.winners[0].paid == 0 and out.winners[0].refund == 5
    assert (out.miner_revenue, out.burned, out.total_collected) == (0, 0, 0)


def test_empty_pool():
    out = run_auction(Mempool(), AuctionParams(2))
    assert out.winners == () and out.clearing_price == 0 and out.burned == 0
    assert miner_payoff(out) == 0


def test_deferred_carries_losers_to_next_round():
    m = Mempool([Bid(f"t{i}", "u", a) for i, a in enumerate([5, 4, 3, 2, 1])], round=4)
    out = run_auction(m, AuctionParams(2))
    assert out.deferred.round == 5
    assert {b.tx_id for b in out.deferred} == {"t2", "t3", "t4"}
    assert all(b.amount == m.get(b.tx_id).amount for b in out.deferred)


def test_miner_payoff_matches_priority_window():
    assert miner_payoff(run_auction(pool(5, 4, 3, 2, 1), AuctionParams(3))) == 3
    assert miner_payoff(run_auction(pool(9, 8, 7, 6, 5, 4), AuctionParams(3))) == 15


def test_user_payoff():
    assert user_payoff(10, True, 7) == 3
    assert user_payoff(10, False, 7) == 0
    assert user_payoff(5, True, 7) == -2
    with pytest.raises(AuditError):
        user_payoff(None, True, 7)


def test_validation():
    with pytest.raises(ValidationError):
        Bid("a", "x", -1)
    with pytest.raises(ValidationError):
        Bid("a", "x", 1.5)
    with pytest.raises(ValidationError):
        AuctionParams(0)
    with pytest.raises(ValidationError, match="duplicate"):
        Mempool([Bid("a", "x", 1), Bid("a", "y", 2)])
    with pytest.raises(ValidationError):
        Mempool([], round=-1)


def test_mempool_equality_ignores_order():
    a = [Bid("a", "x", 1), Bid("b", "y", 2)]
    assert Mempool(a) == Mempool(list(reversed(a)))
    assert Mempool(a) != Mempool(a, round=1)


def test_fake_origin_flags():
    assert Bid("f", "m", 1, 0, Origin.MINER_FAKE).is_fake
    assert Bid("f", "m", 1, 0, Origin.USER_FAKE).is_fake
    assert not Bid("f", "m", 1, 0, Origin.COLLUDER_RAISED).is_fake


amounts_st = st.lists(st.integers(0, 10**12), max_size=40)


@settings(max_examples=300, deadline=None)
@given(amounts_st, st.integers(1, 10), st.randoms(use_true_random=False))
def test_conservation_and_permutation_invariance(amounts, n, rnd):
    bids = [Bid(f"t{i:03d}", f"u{i}", a) for i, a in enumerate(amounts)]
    params = AuctionParams(n)
    out = run_auction(Mempool(bids), params)
    assert out.total_collected == out.burned + out.miner_revenue
    assert out.burned >= 0
    assert out.miner_revenue <= n * out.clearing_price
    assert len(out.winners) == min(n, len(bids))
    for w in out.winners:
        assert w.paid == out.clearing_price and w.refund >= 0
        assert w.paid + w.refund == next(b.amount for b in bids if b.tx_id == w.tx_id)
    shuffled = list(bids)
    rnd.shuffle(shuffled)
    assert run_auction(Mempool(shuffled), params) == out


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(0, 6), max_size=8), st.integers(1, 4))
def test_agrees_with_oracle(amounts, n):
    bids = [Bid(f"t{i}", f"u{i}", a) for i, a in enumerate(amounts)]
    out = run_auction(Mempool(bids), AuctionParams(n))
    ref = oracle.bnp([oracle.bid(f"t{i}", a) for i, a in enumerate(amounts)], n)
    assert list(out.padded) == ref["padded"]
    assert out.clearing_price == ref["price"]
    assert out.winner_ids() == ref["winners"]
    assert (out.miner_revenue, out.burned, out.total_collected) == (ref["revenue"], ref["burned"], ref["collected"])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 50), min_size=1, max_size=20), st.integers(1, 5), st.integers(0, 50))
def test_bid_below_b2n_changes_nothing(amounts, n, extra):
    m = pool(*amounts)
    out = run_auction(m, AuctionParams(n))
    b2n = out.padded[-1]
    if extra >= b2n:
        return
    bigger = Mempool(list(m.bids) + [Bid("z-low", "v", extra)])
    out2 = run_auction(bigger, AuctionParams(n))
    assert (out2.clearing_price, out2.miner_revenue) == (out.clearing_price, out.miner_revenue)


def test_large_pool_partition_path_matches_sort():
    rng = random.Random(5)
    size = _PARTITION_MIN + 1000
    # few distinct amounts so ties straddle the partition threshold
    bids = [Bid(f"t{i:07d}", "u", rng.randrange(40)) for i in range(size)]
    rng.shuffle(bids)
    params = AuctionParams(700)
    out = run_auction(Mempool(bids), params)
    ranked = sorted(bids, key=lambda b: (-b.amount, b.tx_id))
    assert [w.tx_id for w in out.winners] == [b.tx_id for b in ranked[:700]]
    assert list(out.padded) == [b.amount for b in ranked[:1400]]


def test_huge_amounts_stay_exact():
    big = 2**80
    out = run_auction(pool(big + 3, big + 2, big + 1, big), AuctionParams(2))
    assert out.clearing_price == big + 2
    assert out.miner_revenue == 2 * big + 1
    assert out.burned == 2 * (big + 2) - (2 * big + 1)
