"""Time the pure-Python and compiled search kernels on the same audits.

    python3 benchmarks/bench_kernels.py [--pools 10] [--repeat 3] [--seed 0]

Each row audits the same random truthful pools with both backends and
checks the results are identical. Reported times are the median over pools
of the fastest of ``--repeat`` runs.
"""

from __future__ import annotations

import argparse
import random
import statistics
import time

from bnp_audit import AuctionParams, AuditConfig, Bid, FutureCostModel, Mempool, kernels
from bnp_audit import audit_mic, audit_scp, audit_uic

SHAPES = [(3, 12), (8, 40), (16, 64)]
MODELS = {"next_round": FutureCostModel(), "fixed_offset": FutureCostModel.fixed_offset(1)}
AUDITS = {
    "uic": lambda m, p, c: audit_uic(m, p, c),
    "mic": lambda m, p, c: audit_mic(m, p, c),
    "scp1": lambda m, p, c: audit_scp(m, p, 1, c),
    "scp2": lambda m, p, c: audit_scp(m, p, 2, c),
}


def pools(rng: random.Random, n: int, size: int, count: int):
    for _ in range(count):
        amounts = [rng.randrange(10**9, 6 * 10**10) for _ in range(size)]
        yield Mempool([Bid(f"t{i:03d}", f"u{i}", a, a) for i, a in enumerate(amounts)])


def best_time(fn, pool, params, cfg, repeat=3):
    times, result = [], None
    for _ in range(repeat):
        t = time.perf_counter()
        result = fn(pool, params, cfg)
        times.append(time.perf_counter() - t)
    return min(times), result


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pools", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--repeat", type=int, default=3, help="timings per pool; the fastest is kept")
    args = ap.parse_args(argv)
    if "c" not in kernels.available():
        raise SystemExit("compiled kernel not built; reinstall with Cython available")
    rng = random.Random(args.seed)
    print(f"{'audit':<6}{'model':<14}{'N':>4}{'bids':>6}{'python ms':>12}{'c ms':>10}{'speedup':>9}")
    for n, size in SHAPES:
        batch = list(pools(rng, n, size, args.pools))
        params = AuctionParams(n)
        for mname, model in MODELS.items():
            for aname, fn in AUDITS.items():
                # the pure-Python c=2 search is quadratic in losers and grid points
                if aname == "scp2" and size > 12:
                    continue
                py_t, c_t = [], []
                for pool in batch:
                    py_cfg = AuditConfig(future_model=model, backend="python")
                    tp, rp = best_time(fn, pool, params, py_cfg, args.repeat)
                    tc, rc = best_time(fn, pool, params, AuditConfig(future_model=model, backend="c"), args.repeat)
                    if rp != rc:
                        raise SystemExit(f"backends disagree on {aname}/{mname}: {rp} != {rc}")
                    py_t.append(tp)
                    c_t.append(tc)
                p, c = statistics.median(py_t) * 1e3, statistics.median(c_t) * 1e3
                print(f"{aname:<6}{mname:<14}{n:>4}{size:>6}{p:>12.2f}{c:>10.2f}{p / c:>8.1f}x", flush=True)


if __name__ == "__main__":
    main()
