import importlib
import os
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bnp_audit import AuctionParams, AuditConfig, Bid, FutureCostModel, Mempool, SyntheticArrivals, kernels
from bnp_audit import audit_mic, audit_scp, audit_uic, audit_uic_by_direction

needs_c = pytest.mark.skipif("c" not in kernels.available(), reason="compiled kernel not built")

model_st = st.sampled_from([
    FutureCostModel(),
    FutureCostModel.fixed_offset(1),
    FutureCostModel.fixed_offset(4),
    FutureCostModel.pessimistic(),
    FutureCostModel.next_round(SyntheticArrivals(3, 0, 40, seed=2)),
])


@needs_c
@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 40), st.integers(0, 4)), max_size=16), st.integers(1, 5), model_st,
       st.integers(0, 3))
def test_backends_agree(shape, n, model, round_):
    m = Mempool([Bid(f"t{i:02d}", f"u{o}", a, a) for i, (a, o) in enumerate(shape)], round_)
    params = AuctionParams(n)
    py = AuditConfig(future_model=model, backend="python")
    c = AuditConfig(future_model=model, backend="c")
    assert audit_uic(m, params, py) == audit_uic(m, params, c)
    assert audit_mic(m, params, py) == audit_mic(m, params, c)
    assert audit_scp(m, params, 2, py) == audit_scp(m, params, 2, c)
    assert audit_uic_by_direction(m, params, py) == audit_uic_by_direction(m, params, c)


@needs_c
def test_oversized_amounts_fall_back_to_python():
    big = 2**62
    m = Mempool([Bid(f"t{i}", f"u{i}", big + i, big + i) for i in range(6)])
    r = audit_uic(m, AuctionParams(2), AuditConfig(backend="c", future_model=FutureCostModel.pessimistic()))
    assert r == audit_uic(m, AuctionParams(2), AuditConfig(backend="python",
                                                           future_model=FutureCostModel.pessimistic()))


def test_select():
    assert kernels.select("python").BACKEND == "python"
    with pytest.raises(ValueError):
        kernels.select("fortran")
    assert "python" in kernels.available()


def test_env_var_forces_python_backend():
    code = "from bnp_audit import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, BNP_AUDIT_KERNEL="python")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    env["BNP_AUDIT_KERNEL"] = "bogus"
    bad = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert bad.returncode != 0 and "BNP_AUDIT_KERNEL" in bad.stderr


def test_python_kernel_importable_on_its_own():
    mod = importlib.import_module("bnp_audit._pykernel")
    best, v, p, count = mod.mic_search([10, 9, 8, 7, 6, 5], [0, 1, 2, 3, 4, 5], 3, [7], 6, 1, 6, 8, [], [])
    assert (best, v, count) == (-4, 7, 1)
