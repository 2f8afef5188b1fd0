"""Backend selection for the search kernels.

The compiled ``_ckernel`` extension is used when it imported successfully;
``BNP_AUDIT_KERNEL=python`` forces the pure-Python twin. Pools whose amounts
could overflow 64-bit sums always go to the Python kernel.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernel

try:
    from . import _ckernel
except ImportError:  # extension not built
    _ckernel = None

_forced = os.environ.get("BNP_AUDIT_KERNEL", "").strip().lower()
if _forced not in ("", "python", "c"):
    raise ImportError(f"BNP_AUDIT_KERNEL must be 'python' or 'c', got {_forced!r}")
if _forced == "c" and _ckernel is None:
    raise ImportError("BNP_AUDIT_KERNEL=c but the compiled kernel is not built")

_default = _pykernel if _forced == "python" or _ckernel is None else _ckernel
BACKEND = _default.BACKEND


def available() -> list[str]:
    return ["python"] + (["c"] if _ckernel is not None else [])


def select(name: str | None = None):
    if name is None:
        return _default
    if name == "python":
        return _pykernel
    if name == "c":
        if _ckernel is None:
            raise ImportError("compiled kernel is not built")
        return _ckernel
    raise ValueError(f"unknown kernel backend {name!r}")


def _fits(max_value: int, n: int) -> bool:
    return max_value * (4 * n + 8) < 2**63


def _i64(xs) -> np.ndarray:
    return np.asarray(xs, dtype=np.int64)


def uic_search(amt, tid, true, n, owner_ptr, owner_txs, fake_tid, grid, kind, fixed, fallback,
               arr_amt, arr_tid, backend=None, direction=0):
    impl = select(backend)
    top = max([0, fixed, *amt, *true, *grid, *arr_amt])
    if impl is _pykernel or not _fits(top, n):
        return _pykernel.uic_search(amt, tid, true, n, owner_ptr, owner_txs, fake_tid, grid, kind,
                                    fixed, fallback, arr_amt, arr_tid, direction)
    return impl.uic_search(_i64(amt), _i64(tid), _i64(true), n, _i64(owner_ptr), _i64(owner_txs),
                           _i64(fake_tid), _i64(grid), kind, fixed, fallback, _i64(arr_amt), _i64(arr_tid),
                           direction)


def mic_search(amt, tid, n, grid, fake_tid, kind, fixed, fallback, nxt_amt, nxt_tid, backend=None):
    impl = select(backend)
    top = max([0, fixed, fallback, *amt, *grid, *nxt_amt])
    if impl is _pykernel or not _fits(top, n):
        return _pykernel.mic_search(amt, tid, n, grid, fake_tid, kind, fixed, fallback, nxt_amt, nxt_tid)
    return impl.mic_search(_i64(amt), _i64(tid), n, _i64(grid), fake_tid, kind, fixed, fallback,
                           _i64(nxt_amt), _i64(nxt_tid))


def scp_search(amt, tid, true, n, cand, c, grid, kind, fixed, fallback, arr_amt, arr_tid, backend=None):
    impl = select(backend)
    top = max([0, fixed, *amt, *true, *grid, *arr_amt])
    if impl is _pykernel or not _fits(top, n):
        return _pykernel.scp_search(amt, tid, true, n, cand, c, grid, kind, fixed, fallback, arr_amt, arr_tid)
    return impl.scp_search(_i64(amt), _i64(tid), _i64(true), n, _i64(cand), c, _i64(grid), kind, fixed,
                           fallback, _i64(arr_amt), _i64(arr_tid))
