"""Pure-Python search kernels.

Every function works on a pool that has already been ranked: ``amt`` holds
amounts in descending order and ``tid`` the tx-id rank used to break ties, so
``(amt[i], tid[i])`` sorts strictly before ``(amt[i+1], tid[i+1])``. A
deviation removes a few ranked entries and inserts a few new keys; the
kernels rebuild only the top ``2N`` of the deviated ranking plus the top
``N`` of the following round, which is all the payoffs depend on.

Future-cost models are passed as ``kind``:

* ``0`` next round realized: the next round is ``deferred + arrivals``,
  whose first ``N`` entries are ``arr_amt``/``arr_tid``;
* ``1`` or ``2`` a fixed future price ``fixed`` (offset above ``b_2N`` or
  the current ``b_N``).

``fallback`` is what a fake transaction is charged when the next round does
not include it.

The compiled module ``_ckernel`` exports the same functions with the same
signatures and must return identical results.
"""

from __future__ import annotations

from bisect import bisect_left

NRR = 0

BACKEND = "python"


def _before(a1, t1, a2, t2):
    return a1 > a2 or (a1 == a2 and t1 < t2)


def _materialize(amt, tid, m, n, removed, ins):
    """Top ``2n`` of the ranking with ``removed`` indices dropped and ``ins`` merged in.

    ``ins`` is a list of ``(amount, tid, src)`` already in ranking order.
    Returns parallel lists (amounts, tids, srcs); honest entries carry their
    index as src.
    """
    width = 2 * n
    d_amt = []
    d_tid = []
    d_src = []
    i = 0
    j = 0
    k = len(ins)
    while len(d_amt) < width:
        while i < m and i in removed:
            i += 1
        if j < k and (i >= m or _before(ins[j][0], ins[j][1], amt[i], tid[i])):
            a, t, s = ins[j]
            j += 1
        elif i < m:
            a, t, s = amt[i], tid[i], i
            i += 1
        else:
            break
        d_amt.append(a)
        d_tid.append(t)
        d_src.append(s)
    return d_amt, d_tid, d_src


def _next_round(d_amt, d_tid, d_src, n, arr_amt, arr_tid):
    """Clearing price and included srcs of the next round (deferred + arrivals)."""
    i = n
    j = 0
    na = len(arr_amt)
    nd = len(d_amt)
    srcs = []
    last = 0
    count = 0
    while count < n:
        take_d = i < nd and (j >= na or _before(d_amt[i], d_tid[i], arr_amt[j], arr_tid[j]))
        if take_d:
            last = d_amt[i]
            srcs.append(d_src[i])
            i += 1
        elif j < na:
            last = arr_amt[j]
            srcs.append(None)
            j += 1
        else:
            return 0, srcs
        count += 1
    return last, srcs


class _Round:
    __slots__ = ("clearing", "revenue", "now", "nxt", "next_clearing")

    def __init__(self, amt, tid, m, n, removed, ins, kind, arr_amt, arr_tid):
        d_amt, d_tid, d_src = _materialize(amt, tid, m, n, removed, ins)
        self.clearing = d_amt[n - 1] if len(d_amt) >= n else 0
        self.revenue = sum(d_amt[n:])
        self.now = set(d_src[:n])
        if kind == NRR:
            self.next_clearing, nxt = _next_round(d_amt, d_tid, d_src, n, arr_amt, arr_tid)
            self.nxt = set(nxt)
        else:
            self.next_clearing = 0
            self.nxt = None

    def payoff(self, src, bid, true, fake, kind, fixed, fallback):
        if src in self.now:
            return true - self.clearing
        if kind == NRR:
            if src in self.nxt:
                return true - self.next_clearing
            return -fallback if fake else 0
        if fake:
            return -fixed
        return true - fixed if bid >= fixed else 0


def _owner_payoff(rnd, txs, amt, true, alt_src, alt_bid, kind, fixed, fallback):
    total = 0
    for s in txs:
        bid = alt_bid if s == alt_src else amt[s]
        total += rnd.payoff(s, bid, true[s], False, kind, fixed, fallback)
    return total


def uic_search(amt, tid, true, n, owner_ptr, owner_txs, fake_tid, grid, kind, fixed, fallback, arr_amt, arr_tid,
               direction=0):
    """Best single-user deviation: re-bid one own transaction, or add one fake bid.

    ``direction`` +1 keeps only re-bids above the current amount, -1 only
    those below; either skips fake bids.

    Returns ``(best_delta, owner, src, amount, evaluations)``; ``src`` is -1
    for a fake bid and ``best_delta`` is None when nothing was evaluated.
    """
    amt = list(amt)
    tid = list(tid)
    true = list(true)
    grid = list(grid)
    m = len(amt)
    arr_amt = list(arr_amt)
    arr_tid = list(arr_tid)
    honest = _Round(amt, tid, m, n, (), [], kind, arr_amt, arr_tid)
    best = None
    best_u = best_s = best_v = -1
    count = 0
    for u in range(len(owner_ptr) - 1):
        txs = owner_txs[owner_ptr[u] : owner_ptr[u + 1]]
        base = _owner_payoff(honest, txs, amt, true, -1, 0, kind, fixed, fallback)
        for r in txs:
            for v in grid:
                if v == amt[r] or (direction > 0 and v < amt[r]) or (direction < 0 and v > amt[r]):
                    continue
                rnd = _Round(amt, tid, m, n, (r,), [(v, tid[r], r)], kind, arr_amt, arr_tid)
                delta = _owner_payoff(rnd, txs, amt, true, r, v, kind, fixed, fallback) - base
                count += 1
                if best is None or delta > best:
                    best, best_u, best_s, best_v = delta, u, r, v
        if direction:
            continue
        ft = fake_tid[u]
        for v in grid:
            rnd = _Round(amt, tid, m, n, (), [(v, ft, -1)], kind, arr_amt, arr_tid)
            delta = _owner_payoff(rnd, txs, amt, true, -1, 0, kind, fixed, fallback)
            delta += rnd.payoff(-1, v, 0, True, kind, fixed, fallback) - base
            count += 1
            if best is None or delta > best:
                best, best_u, best_s, best_v = delta, u, -1, v
    return best, best_u, best_s, best_v, count


def _insert_pos(amt, tid, v, t):
    # index of the first entry that (v, t) sorts before
    lo, hi = 0, len(amt)
    while lo < hi:
        mid = (lo + hi) // 2
        if _before(amt[mid], tid[mid], v, t):
            lo = mid + 1
        else:
            hi = mid
    return lo


def mic_search(amt, tid, n, grid, fake_tid, kind, fixed, fallback, nxt_amt, nxt_tid):
    """Best single miner fake bid over ``grid`` (amounts below ``b_2N`` are skipped).

    ``nxt_amt``/``nxt_tid`` is the honest next-round pool (honest deferred
    plus arrivals) in ranking order; only its first ``N + 1`` entries are
    read. Each candidate costs O(log m).

    Returns ``(best_delta, amount, position, evaluations)``.
    """
    amt = list(amt)
    tid = list(tid)
    m = len(amt)
    width = 2 * n

    def val(k):
        return amt[k] if k < m else 0

    # prefix[k] = sum of padded positions < k, for k <= 2n
    prefix = [0] * (width + 1)
    for k in range(width):
        prefix[k + 1] = prefix[k] + val(k)
    honest_rev = prefix[width] - prefix[n]
    b2n = val(width - 1)
    nm = len(nxt_amt)

    def nval(k):
        return nxt_amt[k] if k < nm else 0

    best = None
    best_v = best_p = -1
    count = 0
    for v in grid:
        if v < b2n:
            continue
        p = _insert_pos(amt, tid, v, fake_tid)
        # revenue over deviated positions n .. 2n-1
        if p < n:
            rev = prefix[width - 1] - prefix[n - 1]
        elif p < width:
            rev = (prefix[p] - prefix[n]) + v + (prefix[width - 1] - prefix[p])
        else:
            rev = honest_rev
        if p < n:
            charge = v if p == n - 1 else val(n - 2)
        elif kind == NRR:
            # deviated next pool = honest next pool + the fake
            q = _insert_pos(nxt_amt, nxt_tid, v, fake_tid)
            if q < n:
                if q == n - 1:
                    charge = v
                else:
                    charge = nval(n - 2)
            else:
                charge = fallback
        else:
            charge = fixed
        delta = rev - charge - honest_rev
        count += 1
        if best is None or delta > best:
            best, best_v, best_p = delta, v, p
    return best, best_v, best_p, count


def scp_search(amt, tid, true, n, cand, c, grid, kind, fixed, fallback, arr_amt, arr_tid):
    """Best raise of up to ``c`` candidate transactions by the miner's coalition.

    ``cand`` lists ranked indices of eligible colluders (outside the top N).
    Each colluder is raised to a grid amount strictly above its honest bid.
    Returns ``(best_delta, srcs, amounts, evaluations)``.
    """
    amt = list(amt)
    tid = list(tid)
    true = list(true)
    grid = sorted(grid)
    m = len(amt)
    arr_amt = list(arr_amt)
    arr_tid = list(arr_tid)
    honest = _Round(amt, tid, m, n, (), [], kind, arr_amt, arr_tid)
    base_pay = {r: honest.payoff(r, amt[r], true[r], False, kind, fixed, fallback) for r in cand}
    starts = {r: bisect_left(grid, amt[r] + 1) for r in cand}
    best = None
    best_srcs: tuple = ()
    best_vals: tuple = ()
    count = 0
    nc = len(cand)
    g = len(grid)
    for size in range(1, c + 1):
        if size > nc:
            break
        combo = list(range(size))
        while True:
            srcs = [cand[i] for i in combo]
            base = honest.revenue + sum(base_pay[r] for r in srcs)
            pos = [starts[r] for r in srcs]
            if all(p < g for p in pos):
                while True:
                    vals = [grid[p] for p in pos]
                    ins = sorted(
                        ((vals[i], tid[srcs[i]], srcs[i]) for i in range(size)),
                        key=lambda e: (-e[0], e[1]),
                    )
                    rnd = _Round(amt, tid, m, n, set(srcs), ins, kind, arr_amt, arr_tid)
                    total = rnd.revenue
                    for i in range(size):
                        s = srcs[i]
                        total += rnd.payoff(s, vals[i], true[s], False, kind, fixed, fallback)
                    delta = total - base
                    count += 1
                    if best is None or delta > best:
                        best, best_srcs, best_vals = delta, tuple(srcs), tuple(vals)
                    # odometer over the value grid, last colluder fastest
                    i = size - 1
                    while i >= 0:
                        pos[i] += 1
                        if pos[i] < g:
                            break
                        pos[i] = starts[srcs[i]]
                        i -= 1
                    if i < 0:
                        break
            # next combination of candidate indices
            i = size - 1
            while i >= 0 and combo[i] == nc - size + i:
                i -= 1
            if i < 0:
                break
            combo[i] += 1
            for j in range(i + 1, size):
                combo[j] = combo[j - 1] + 1
    return best, best_srcs, best_vals, count
