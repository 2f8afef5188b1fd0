import csv
import filecmp
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from bnp_audit.cli import main
from bnp_audit.pipeline import load, store, synthetic_blocks
from test_rpc import FakeNode

HERE = Path(__file__).parent
FIXTURE = HERE / "fixtures" / "blocks20.jsonl"
GOLDEN = HERE / "golden"


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def tree(root: Path):
    return sorted(p.relative_to(root) for p in root.rglob("*") if p.is_file())


# ---- exit codes ------------------------------------------------------------


def test_usage_errors_exit_1(capsys, tmp_path):
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["replay", "--no-such-flag", "1"])
    assert info.value.code == 1
    assert main(["replay", "--output-dir", str(tmp_path)]) == 1
    assert "no dataset" in capsys.readouterr().err


def test_input_errors_exit_2(capsys, tmp_path):
    assert main(["replay", "--dataset", str(tmp_path / "missing.jsonl")]) == 2
    assert main(["audit", "--dataset", str(FIXTURE), "--future-model", "psychic"]) == 2
    assert main(["audit", "--dataset", str(FIXTURE), "--n", "many"]) == 2
    bad = tmp_path / "bad.jsonl"
    bad.write_bytes(FIXTURE.read_bytes()[:500])
    assert main(["replay", "--dataset", str(bad), "--output-dir", str(tmp_path / "o")]) == 2
    assert "byte offset" in capsys.readouterr().err


def test_nothing_congested_exits_2(capsys, tmp_path):
    assert main(["replay", "--dataset", str(FIXTURE), "--threshold-ratio", "100",
                 "--output-dir", str(tmp_path)]) == 2
    assert "no blocks after filtering" in capsys.readouterr().err


def test_report_on_empty_input_exits_2(capsys, tmp_path):
    assert main(["report", "--input-dir", str(tmp_path), "--output-dir", str(tmp_path / "r")]) == 2
    assert "no blocks after filtering" in capsys.readouterr().err


def test_infeasible_audit_exits_3(capsys, tmp_path):
    code = main(["audit", "--dataset", str(FIXTURE), "--collusion-c", "4", "--output-dir", str(tmp_path)])
    assert code == 3
    assert "infeasible" in capsys.readouterr().err
    code = main(["audit", "--dataset", str(FIXTURE), "--collusion-c", "3", "--max-evaluations", "10",
                 "--output-dir", str(tmp_path)])
    assert code == 3


# ---- outputs against oracle goldens ----------------------------------------


def test_replay_matches_golden_bytes(tmp_path):
    assert main(["replay", "--dataset", str(FIXTURE), "--output-dir", str(tmp_path)]) == 0
    assert (tmp_path / "replay.csv").read_bytes() == (GOLDEN / "replay.csv").read_bytes()
    assert (tmp_path / "replay_summary.csv").read_bytes() == (GOLDEN / "replay_summary.csv").read_bytes()


def test_audit_deltas_match_golden(tmp_path):
    assert main(["audit", "--dataset", str(FIXTURE), "--output-dir", str(tmp_path)]) == 0
    want = rows(GOLDEN / "audit_deltas.csv")
    got = rows(tmp_path / "audit.csv")
    assert [{k: g[k] for k in want[0]} for g in got] == want


def test_audit_is_deterministic(tmp_path):
    out = tmp_path / "out"
    args = ["audit", "--dataset", str(FIXTURE), "--output-dir", str(out), "--samples", "3", "--seed", "5"]
    assert main(args) == 0
    shutil.copytree(out, tmp_path / "first")
    shutil.rmtree(out)
    assert main(args) == 0
    assert tree(out) == tree(tmp_path / "first")
    for rel in tree(out):
        assert (out / rel).read_bytes() == (tmp_path / "first" / rel).read_bytes(), rel
    # a process pool changes only the recorded config
    parallel = tmp_path / "par"
    assert main(args[:3] + ["--output-dir", str(parallel), "--samples", "3", "--seed", "5", "--workers", "2"]) == 0
    for name in ("audit.csv", "audit_summary.csv"):
        assert (parallel / name).read_bytes() == (out / name).read_bytes()


def test_filter_then_replay_equals_run(tmp_path):
    assert main(["filter", "--dataset", str(FIXTURE), "--output-dir", str(tmp_path / "f")]) == 0
    assert main(["replay", "--dataset", str(tmp_path / "f" / "filtered.jsonl"),
                 "--output-dir", str(tmp_path / "r")]) == 0
    assert main(["run", "--dataset", str(FIXTURE), "--output-dir", str(tmp_path / "all")]) == 0
    for name in ("replay.csv", "replay_summary.csv"):
        assert filecmp.cmp(tmp_path / "r" / name, tmp_path / "all" / name, shallow=False)
    assert load(tmp_path / "f" / "filtered.jsonl") == load(tmp_path / "all" / "filtered.jsonl")
    for name in ("fig2_user_fees.csv", "fig3_miner_revenue.csv", "fig4_uic.csv", "fig5_mic.csv", "fig6_scp.csv",
                 "summary.txt", "audit_summary.csv", "config.txt"):
        assert (tmp_path / "all" / name).exists()
    summary = (tmp_path / "all" / "summary.txt").read_text()
    assert "replayed blocks: 20" in summary and "audited blocks: 20" in summary


def test_report_from_separate_outputs(tmp_path):
    assert main(["run", "--dataset", str(FIXTURE), "--output-dir", str(tmp_path / "all")]) == 0
    assert main(["report", "--input-dir", str(tmp_path / "all"), "--output-dir", str(tmp_path / "rep")]) == 0
    for name in ("fig2_user_fees.csv", "fig6_scp.csv", "summary.txt"):
        assert (tmp_path / "rep" / name).read_bytes() == (tmp_path / "all" / name).read_bytes()


# ---- configuration ---------------------------------------------------------


def test_flags_override_file_which_overrides_defaults(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text(f"# test\ndataset = {FIXTURE}\nthreshold_ratio = 100\ncollusion_c = 2\n\n")
    assert main(["--config", str(conf), "audit", "--output-dir", str(tmp_path / "a")]) == 2
    assert main(["--config", str(conf), "audit", "--threshold-ratio", "2", "--output-dir", str(tmp_path / "b")]) == 0
    written = (tmp_path / "b" / "config.txt").read_text()
    assert "threshold_ratio = 2\n" in written and "collusion_c = 2\n" in written and "samples = 0\n" in written
    assert "scp2_best_delta" in rows(tmp_path / "b" / "audit.csv")[0]
    # the written config reproduces the run
    assert main(["--config", str(tmp_path / "b" / "config.txt"), "audit", "--output-dir", str(tmp_path / "b")]) == 0


def test_unknown_config_key_is_an_input_error(tmp_path, capsys):
    conf = tmp_path / "bad.conf"
    conf.write_text("colusion_c = 2\n")
    assert main(["--config", str(conf), "replay"]) == 2
    assert "colusion_c" in capsys.readouterr().err


# ---- other commands --------------------------------------------------------


def test_synth_and_simulate(tmp_path):
    data = tmp_path / "s.jsonl"
    assert main(["synth", "--dataset", str(data), "--seed", "4", "--count", "3"]) == 0
    assert load(data) == synthetic_blocks(3, seed=4)
    out = tmp_path / "sim"
    assert main(["simulate", "--dataset", str(data), "--rounds", "3", "--output-dir", str(out)]) == 0
    rounds = rows(out / "simulate_rounds.csv")
    assert len(rounds) == 3
    ledger = rows(out / "simulate_ledger.csv")
    assert ledger and all(r["actor"] for r in ledger)


def test_simulate_with_fake_bid(tmp_path):
    data = tmp_path / "s.jsonl"
    recs = synthetic_blocks(2, seed=1)
    store(recs, data)
    b2n = sorted((t.bid_amount for t in recs[0].competing()), reverse=True)[2 * recs[0].capacity_n - 1]
    code = main(["simulate", "--dataset", str(data), "--rounds", "2", "--fake-bid", str(b2n + 1),
                 "--arrivals", "none", "--output-dir", str(tmp_path / "o")])
    assert code == 0
    actors = {r["actor"] for r in rows(tmp_path / "o" / "simulate_ledger.csv")}
    assert any(a.startswith("miner@") for a in actors)


def test_fetch_through_fake_node(tmp_path, capsys):
    node = FakeNode(100, 102)
    node.thread.start()
    try:
        out = tmp_path / "f"
        code = main(["fetch", "--endpoint", node.url, "--start-block", "100", "--end-block", "102",
                     "--output-dir", str(out)])
        assert code == 0
        recs = load(out / "dataset.jsonl")
        assert [r.block_number for r in recs] == [100, 101, 102]
        assert len(rows(out / "rejections.csv")) == 6
        code = main(["fetch", "--endpoint", node.url, "--start-block", "101", "--end-block", "103",
                     "--retries", "0", "--output-dir", str(tmp_path / "g")])
        assert code == 4
        err = capsys.readouterr().err
        assert "block 103" in err
        # the blocks that did arrive are still written
        assert [r.block_number for r in load(tmp_path / "g" / "dataset.jsonl")] == [101, 102]
    finally:
        node.server.shutdown()
        node.server.server_close()


def test_fetch_without_endpoint_is_usage_error(monkeypatch, tmp_path):
    monkeypatch.delenv("BNP_RPC_ENDPOINT", raising=False)
    assert main(["fetch", "--output-dir", str(tmp_path)]) == 1


def test_console_script_entry_point(tmp_path):
    exe = shutil.which("bnp-audit")
    cmd = [exe] if exe else [sys.executable, "-m", "bnp_audit.cli"]
    res = subprocess.run(cmd + ["replay", "--dataset", str(FIXTURE), "--output-dir", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "replay.csv").read_bytes() == (GOLDEN / "replay.csv").read_bytes()
