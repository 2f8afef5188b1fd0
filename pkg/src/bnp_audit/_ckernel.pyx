# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twin of ``_pykernel``: same functions, same arguments, same results.

Inputs arrive as contiguous int64 arrays (see ``kernels``), which keeps every
sum inside 64 bits for the pools ``kernels`` routes here. Membership tests
("is this transaction included now / next round") use generation stamps
indexed by ``src + 1`` so a fake bid (src -1) gets slot 0.
"""

from libc.stdlib cimport free, malloc

BACKEND = "c"

ctypedef long long i64
ctypedef Py_ssize_t idx

cdef enum:
    NRR = 0


cdef inline bint before(i64 a1, i64 t1, i64 a2, i64 t2) noexcept nogil:
    return a1 > a2 or (a1 == a2 and t1 < t2)


cdef inline const i64* ptr(const i64[::1] a) noexcept:
    return &a[0] if a.shape[0] > 0 else NULL


cdef struct Ctx:
    const i64* amt
    const i64* tid
    const i64* true_
    idx m
    idx n
    int kind
    i64 fixed
    i64 fallback
    const i64* arr_amt
    const i64* arr_tid
    idx na
    i64* d_amt
    i64* d_tid
    idx* d_src
    idx nd
    i64* now_stamp
    i64* nxt_stamp
    i64 gen
    i64 clearing
    i64 revenue
    i64 next_clearing
    # deviation being evaluated
    idx* removed
    idx nrem
    i64* ins_a
    i64* ins_t
    idx* ins_s
    idx nins


cdef int ctx_init(Ctx* c, const i64* amt, const i64* tid, const i64* true_, idx m, idx n, int kind,
                  i64 fixed, i64 fallback, const i64* arr_amt, const i64* arr_tid, idx na, idx slots) except -1:
    c.amt = amt
    c.tid = tid
    c.true_ = true_
    c.m = m
    c.n = n
    c.kind = kind
    c.fixed = fixed
    c.fallback = fallback
    c.arr_amt = arr_amt
    c.arr_tid = arr_tid
    c.na = na
    c.d_amt = <i64*> malloc(2 * n * sizeof(i64))
    c.d_tid = <i64*> malloc(2 * n * sizeof(i64))
    c.d_src = <idx*> malloc(2 * n * sizeof(idx))
    c.now_stamp = <i64*> malloc((m + 1) * sizeof(i64))
    c.nxt_stamp = <i64*> malloc((m + 1) * sizeof(i64))
    c.removed = <idx*> malloc((slots + 1) * sizeof(idx))
    c.ins_a = <i64*> malloc((slots + 1) * sizeof(i64))
    c.ins_t = <i64*> malloc((slots + 1) * sizeof(i64))
    c.ins_s = <idx*> malloc((slots + 1) * sizeof(idx))
    if (c.d_amt == NULL or c.d_tid == NULL or c.d_src == NULL or c.now_stamp == NULL
            or c.nxt_stamp == NULL or c.removed == NULL or c.ins_a == NULL or c.ins_t == NULL
            or c.ins_s == NULL):
        ctx_free(c)
        raise MemoryError()
    cdef idx k
    for k in range(m + 1):
        c.now_stamp[k] = 0
        c.nxt_stamp[k] = 0
    c.gen = 0
    c.nrem = 0
    c.nins = 0
    return 0


cdef void ctx_free(Ctx* c) noexcept:
    free(c.d_amt)
    free(c.d_tid)
    free(c.d_src)
    free(c.now_stamp)
    free(c.nxt_stamp)
    free(c.removed)
    free(c.ins_a)
    free(c.ins_t)
    free(c.ins_s)
    c.d_amt = NULL
    c.d_tid = NULL
    c.d_src = NULL
    c.now_stamp = NULL
    c.nxt_stamp = NULL
    c.removed = NULL
    c.ins_a = NULL
    c.ins_t = NULL
    c.ins_s = NULL


cdef inline bint is_removed(Ctx* c, idx i) noexcept nogil:
    cdef idx k
    for k in range(c.nrem):
        if c.removed[k] == i:
            return True
    return False


cdef void run_round(Ctx* c) noexcept nogil:
    """Materialize the deviated top 2N, then score this round and (NRR) the next one."""
    cdef idx width = 2 * c.n
    cdef idx i = 0, j = 0, cnt = 0, k
    cdef i64 a, t
    cdef idx s
    while cnt < width:
        while i < c.m and is_removed(c, i):
            i += 1
        if j < c.nins and (i >= c.m or before(c.ins_a[j], c.ins_t[j], c.amt[i], c.tid[i])):
            a = c.ins_a[j]
            t = c.ins_t[j]
            s = c.ins_s[j]
            j += 1
        elif i < c.m:
            a = c.amt[i]
            t = c.tid[i]
            s = i
            i += 1
        else:
            break
        c.d_amt[cnt] = a
        c.d_tid[cnt] = t
        c.d_src[cnt] = s
        cnt += 1
    c.nd = cnt
    c.gen += 1
    c.clearing = c.d_amt[c.n - 1] if cnt >= c.n else 0
    c.revenue = 0
    for k in range(c.n, cnt):
        c.revenue += c.d_amt[k]
    for k in range(c.n if c.n < cnt else cnt):
        c.now_stamp[c.d_src[k] + 1] = c.gen
    if c.kind != NRR:
        c.next_clearing = 0
        return
    # next round: deferred (positions N..) merged with the arrivals
    i = c.n
    j = 0
    cnt = 0
    c.next_clearing = 0
    while cnt < c.n:
        if i < c.nd and (j >= c.na or before(c.d_amt[i], c.d_tid[i], c.arr_amt[j], c.arr_tid[j])):
            c.next_clearing = c.d_amt[i]
            c.nxt_stamp[c.d_src[i] + 1] = c.gen
            i += 1
        elif j < c.na:
            c.next_clearing = c.arr_amt[j]
            j += 1
        else:
            c.next_clearing = 0
            return
        cnt += 1


cdef inline i64 payoff(Ctx* c, idx src, i64 bid, i64 true_, bint fake) noexcept nogil:
    if c.now_stamp[src + 1] == c.gen:
        return true_ - c.clearing
    if c.kind == NRR:
        if c.nxt_stamp[src + 1] == c.gen:
            return true_ - c.next_clearing
        return -c.fallback if fake else 0
    if fake:
        return -c.fixed
    return true_ - c.fixed if bid >= c.fixed else 0


cdef i64 owner_payoff(Ctx* c, const i64* txs, idx lo, idx hi, idx alt_src, i64 alt_bid) noexcept nogil:
    cdef i64 total = 0
    cdef idx k, s
    for k in range(lo, hi):
        s = <idx> txs[k]
        total += payoff(c, s, alt_bid if s == alt_src else c.amt[s], c.true_[s], False)
    return total


def uic_search(const i64[::1] amt, const i64[::1] tid, const i64[::1] true, idx n,
               const i64[::1] owner_ptr, const i64[::1] owner_txs, const i64[::1] fake_tid,
               const i64[::1] grid, int kind, i64 fixed, i64 fallback,
               const i64[::1] arr_amt, const i64[::1] arr_tid, int direction=0):
    cdef Ctx c
    cdef idx m = amt.shape[0], g = grid.shape[0], owners = owner_ptr.shape[0] - 1
    cdef idx u, k, r, gi, lo, hi
    cdef i64 base, delta, v, best = 0
    cdef bint has_best = False
    cdef idx best_u = -1, best_s = -1
    cdef i64 best_v = -1, count = 0
    cdef const i64* txs = ptr(owner_txs)
    ctx_init(&c, ptr(amt), ptr(tid), ptr(true), m, n, kind, fixed, fallback,
             ptr(arr_amt), ptr(arr_tid), arr_amt.shape[0], 1)
    try:
        with nogil:
            for u in range(owners):
                lo = <idx> owner_ptr[u]
                hi = <idx> owner_ptr[u + 1]
                c.nrem = 0
                c.nins = 0
                run_round(&c)
                base = owner_payoff(&c, txs, lo, hi, -1, 0)
                for k in range(lo, hi):
                    r = <idx> txs[k]
                    c.nrem = 1
                    c.removed[0] = r
                    c.nins = 1
                    c.ins_t[0] = c.tid[r]
                    c.ins_s[0] = r
                    for gi in range(g):
                        v = grid[gi]
                        if v == c.amt[r] or (direction > 0 and v < c.amt[r]) or (direction < 0 and v > c.amt[r]):
                            continue
                        c.ins_a[0] = v
                        run_round(&c)
                        delta = owner_payoff(&c, txs, lo, hi, r, v) - base
                        count += 1
                        if not has_best or delta > best:
                            has_best = True
                            best = delta
                            best_u = u
                            best_s = r
                            best_v = v
                if direction != 0:
                    continue
                c.nrem = 0
                c.nins = 1
                c.ins_t[0] = fake_tid[u]
                c.ins_s[0] = -1
                for gi in range(g):
                    v = grid[gi]
                    c.ins_a[0] = v
                    run_round(&c)
                    delta = owner_payoff(&c, txs, lo, hi, -1, 0) + payoff(&c, -1, v, 0, True) - base
                    count += 1
                    if not has_best or delta > best:
                        has_best = True
                        best = delta
                        best_u = u
                        best_s = -1
                        best_v = v
    finally:
        ctx_free(&c)
    return (best if has_best else None), best_u, best_s, best_v, count


cdef inline idx insert_pos(const i64* a, const i64* t, idx m, i64 v, i64 tv) noexcept nogil:
    cdef idx lo = 0, hi = m, mid
    while lo < hi:
        mid = (lo + hi) // 2
        if before(a[mid], t[mid], v, tv):
            lo = mid + 1
        else:
            hi = mid
    return lo


def mic_search(const i64[::1] amt, const i64[::1] tid, idx n, const i64[::1] grid, i64 fake_tid,
               int kind, i64 fixed, i64 fallback, const i64[::1] nxt_amt, const i64[::1] nxt_tid):
    cdef idx m = amt.shape[0], nm = nxt_amt.shape[0], g = grid.shape[0], width = 2 * n
    cdef const i64* a = ptr(amt)
    cdef const i64* t = ptr(tid)
    cdef const i64* na = ptr(nxt_amt)
    cdef const i64* nt = ptr(nxt_tid)
    cdef i64* prefix = <i64*> malloc((width + 1) * sizeof(i64))
    if prefix == NULL:
        raise MemoryError()
    cdef idx k, p, q, gi
    cdef i64 v, rev, charge, delta, honest_rev, b2n, best = 0, best_v = -1, count = 0
    cdef idx best_p = -1
    cdef bint has_best = False
    try:
        with nogil:
            prefix[0] = 0
            for k in range(width):
                prefix[k + 1] = prefix[k] + (a[k] if k < m else 0)
            honest_rev = prefix[width] - prefix[n]
            b2n = a[width - 1] if width - 1 < m else 0
            for gi in range(g):
                v = grid[gi]
                if v < b2n:
                    continue
                p = insert_pos(a, t, m, v, fake_tid)
                if p < n:
                    rev = prefix[width - 1] - prefix[n - 1]
                elif p < width:
                    rev = (prefix[p] - prefix[n]) + v + (prefix[width - 1] - prefix[p])
                else:
                    rev = honest_rev
                if p < n:
                    if p == n - 1:
                        charge = v
                    else:
                        charge = a[n - 2] if n - 2 < m else 0
                elif kind == NRR:
                    q = insert_pos(na, nt, nm, v, fake_tid)
                    if q < n:
                        if q == n - 1:
                            charge = v
                        else:
                            charge = na[n - 2] if n - 2 < nm else 0
                    else:
                        charge = fallback
                else:
                    charge = fixed
                delta = rev - charge - honest_rev
                count += 1
                if not has_best or delta > best:
                    has_best = True
                    best = delta
                    best_v = v
                    best_p = p
    finally:
        free(prefix)
    return (best if has_best else None), best_v, best_p, count


cdef idx lower_bound(const i64* a, idx m, i64 v) noexcept nogil:
    cdef idx lo = 0, hi = m, mid
    while lo < hi:
        mid = (lo + hi) // 2
        if a[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


def scp_search(const i64[::1] amt, const i64[::1] tid, const i64[::1] true, idx n, const i64[::1] cand,
               idx c, grid_in, int kind, i64 fixed, i64 fallback,
               const i64[::1] arr_amt, const i64[::1] arr_tid):
    import numpy as np

    cdef const i64[::1] grid = np.sort(np.asarray(grid_in, dtype=np.int64))
    cdef Ctx ctx
    cdef idx m = amt.shape[0], nc = cand.shape[0], g = grid.shape[0]
    cdef idx size, i, j, s, x
    cdef i64 honest_rev, base, total, delta, best = 0, count = 0
    cdef bint has_best = False, ok
    cdef idx* combo = <idx*> malloc((c + 1) * sizeof(idx))
    cdef idx* pos = <idx*> malloc((c + 1) * sizeof(idx))
    cdef idx* srcs = <idx*> malloc((c + 1) * sizeof(idx))
    cdef idx* starts = <idx*> malloc((nc + 1) * sizeof(idx))
    cdef i64* base_pay = <i64*> malloc((nc + 1) * sizeof(i64))
    cdef idx* best_srcs = <idx*> malloc((c + 1) * sizeof(idx))
    cdef i64* best_vals = <i64*> malloc((c + 1) * sizeof(i64))
    cdef idx best_size = 0
    cdef i64 ka, kt
    cdef idx ks
    if (combo == NULL or pos == NULL or srcs == NULL or starts == NULL or base_pay == NULL
            or best_srcs == NULL or best_vals == NULL):
        free(combo); free(pos); free(srcs); free(starts); free(base_pay); free(best_srcs); free(best_vals)
        raise MemoryError()
    ctx_init(&ctx, ptr(amt), ptr(tid), ptr(true), m, n, kind, fixed, fallback,
             ptr(arr_amt), ptr(arr_tid), arr_amt.shape[0], c)
    cdef const i64* gp = ptr(grid)
    try:
        with nogil:
            ctx.nrem = 0
            ctx.nins = 0
            run_round(&ctx)
            honest_rev = ctx.revenue
            for i in range(nc):
                s = <idx> cand[i]
                base_pay[i] = payoff(&ctx, s, ctx.amt[s], ctx.true_[s], False)
                starts[i] = lower_bound(gp, g, ctx.amt[s] + 1)
            for size in range(1, c + 1):
                if size > nc:
                    break
                for i in range(size):
                    combo[i] = i
                while True:
                    base = honest_rev
                    ok = True
                    for i in range(size):
                        srcs[i] = <idx> cand[combo[i]]
                        base += base_pay[combo[i]]
                        pos[i] = starts[combo[i]]
                        if pos[i] >= g:
                            ok = False
                    if ok:
                        ctx.nrem = size
                        ctx.nins = size
                        for i in range(size):
                            ctx.removed[i] = srcs[i]
                        while True:
                            # insertions in ranking order (insertion sort; size is tiny)
                            for i in range(size):
                                ka = gp[pos[i]]
                                kt = ctx.tid[srcs[i]]
                                ks = srcs[i]
                                j = i
                                while j > 0 and before(ka, kt, ctx.ins_a[j - 1], ctx.ins_t[j - 1]):
                                    ctx.ins_a[j] = ctx.ins_a[j - 1]
                                    ctx.ins_t[j] = ctx.ins_t[j - 1]
                                    ctx.ins_s[j] = ctx.ins_s[j - 1]
                                    j -= 1
                                ctx.ins_a[j] = ka
                                ctx.ins_t[j] = kt
                                ctx.ins_s[j] = ks
                            run_round(&ctx)
                            total = ctx.revenue
                            for i in range(size):
                                s = srcs[i]
                                total += payoff(&ctx, s, gp[pos[i]], ctx.true_[s], False)
                            delta = total - base
                            count += 1
                            if not has_best or delta > best:
                                has_best = True
                                best = delta
                                best_size = size
                                for i in range(size):
                                    best_srcs[i] = srcs[i]
                                    best_vals[i] = gp[pos[i]]
                            x = size - 1
                            while x >= 0:
                                pos[x] += 1
                                if pos[x] < g:
                                    break
                                pos[x] = starts[combo[x]]
                                x -= 1
                            if x < 0:
                                break
                    x = size - 1
                    while x >= 0 and combo[x] == nc - size + x:
                        x -= 1
                    if x < 0:
                        break
                    combo[x] += 1
                    for j in range(x + 1, size):
                        combo[j] = combo[j - 1] + 1
        out_srcs = tuple(best_srcs[i] for i in range(best_size))
        out_vals = tuple(best_vals[i] for i in range(best_size))
    finally:
        ctx_free(&ctx)
        free(combo); free(pos); free(srcs); free(starts); free(base_pay); free(best_srcs); free(best_vals)
    return (best if has_best else None), out_srcs, out_vals, count
