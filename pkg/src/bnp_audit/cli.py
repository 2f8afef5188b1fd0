"""``bnp-audit`` command line.

Subcommands::

    synth     write a seeded synthetic dataset
    fetch     pull blocks over JSON-RPC into a dataset
    filter    keep congested blocks
    replay    BNP versus baseline fees, per block
    audit     exhaustive UIC / MIC / c-SCP audits, per block
    simulate  multi-round simulation starting from a dataset block
    report    figure-ready CSVs and a text summary from replay/audit outputs
    run       filter, replay, audit and report in one go

Exit codes: 0 success, 1 usage error, 2 input or validation error,
3 infeasible audit, 4 network failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

from .audit import AuditConfig, BlockAudit, audit_block, summarize
from .auction import AuctionParams
from .config import RunConfig
from .errors import (
    AuditError,
    BnpError,
    DatasetError,
    FetchError,
    InfeasibleAuditError,
    ValidationError,
)
from .pipeline import dataset as ds
from .pipeline.normalize import normalize
from .pipeline.records import BlockRecord, DatasetArrivals, record_to_mempool
from .pipeline.replay import filter_congested, replay_compare, replay_summary
from .pipeline.rpc import ENDPOINT_ENV, RpcClient, fetch_blocks
from .pipeline.synth import synthetic_blocks
from .strategy import miner_fake_bid, simulate_rounds

log = logging.getLogger("bnp_audit")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_NETWORK = 0, 1, 2, 3, 4
NO_BLOCKS = "no blocks after filtering"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- helpers


def _params(cfg: RunConfig, rec: BlockRecord) -> AuctionParams:
    return AuctionParams(cfg.n or rec.capacity_n)


def _records(cfg: RunConfig) -> list[BlockRecord]:
    if not cfg.dataset:
        raise UsageError("no dataset given (use --dataset or 'dataset = ...' in the config)")
    return ds.load(cfg.dataset)


def _congested(cfg: RunConfig) -> list[BlockRecord]:
    kept = filter_congested(_records(cfg), Fraction(cfg.threshold_ratio))
    if not kept:
        raise ValidationError(NO_BLOCKS)
    return kept


def _out(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg.write(out)
    return out


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return ds.format_pct(x)
    if isinstance(x, bool):
        return "1" if x else "0"
    return str(x)


# ---------------------------------------------------------------- commands


def cmd_synth(cfg: RunConfig, count: int) -> int:
    if not cfg.dataset:
        raise UsageError("synth needs --dataset as the output path")
    ds.store(synthetic_blocks(count, cfg.seed), cfg.dataset)
    print(f"wrote {count} blocks to {cfg.dataset}")
    return EXIT_OK


def cmd_fetch(cfg: RunConfig) -> int:
    endpoint = cfg.endpoint or os.environ.get(ENDPOINT_ENV, "")
    if not endpoint:
        raise UsageError(f"no RPC endpoint (set 'endpoint' or {ENDPOINT_ENV})")
    if cfg.end_block < cfg.start_block:
        raise UsageError("end_block must be >= start_block")
    out = _out(cfg)
    cache = cfg.cache_dir or str(out / "raw")
    client = RpcClient(endpoint, retries=cfg.retries)
    result = fetch_blocks(endpoint, range(cfg.start_block, cfg.end_block + 1), cache,
                          parallelism=cfg.parallelism, client=client)
    pending = client.pending_pool() if cfg.fetch_pending else None
    records, rejections = [], []
    for num, payload in result.payloads.items():
        try:
            rec, rej = normalize(payload, cfg.capacity or None, pending if num == cfg.end_block else None)
        except ValidationError as exc:
            rejections.append((num, "", f"block rejected: {exc}"))
            continue
        records.append(rec)
        rejections.extend(rej)
    ds.store(records, out / "dataset.jsonl")
    ds.write_csv(out / "rejections.csv", ["block_number", "tx_id", "reason"],
                 ([b, t or "", r] for b, t, r in rejections))
    print(f"fetched {len(result.payloads)} blocks ({len(result.cached)} from cache), "
          f"{len(rejections)} rejections -> {out / 'dataset.jsonl'}")
    result.raise_for_failures()
    return EXIT_OK


def cmd_filter(cfg: RunConfig) -> int:
    kept = _congested(cfg)
    out = _out(cfg)
    ds.store(kept, out / "filtered.jsonl")
    print(f"kept {len(kept)} congested blocks -> {out / 'filtered.jsonl'}")
    return EXIT_OK


def _replay(cfg: RunConfig, records: list[BlockRecord], out: Path):
    comps = [replay_compare(r, _params(cfg, r), cfg.baseline) for r in records]
    ds.write_replay_csv(out / "replay.csv", comps)
    ds.write_csv(out / "replay_summary.csv", ["metric", "value"],
                 ([k, _fmt(v)] for k, v in replay_summary(comps)))
    return comps


def cmd_replay(cfg: RunConfig) -> int:
    records = _congested(cfg)
    out = _out(cfg)
    _replay(cfg, records, out)
    print(f"replayed {len(records)} blocks -> {out / 'replay.csv'}")
    return EXIT_OK


def _audit_one(job) -> BlockAudit:
    rec, n, config = job
    return audit_block(rec.block_number, record_to_mempool(rec), AuctionParams(n), config)


def _audit_columns(c: int) -> list[str]:
    scp = [f"scp{k}_best_delta" for k in range(1, c + 1)]
    flags = ["uic_violating", "mic_violating"] + [f"scp{k}_violating" for k in range(1, c + 1)]
    return (["block_number", "uic_best_delta", "mic_best_delta", *scp, *flags, "scp_price_delta",
             "uic_sampled_delta", "mic_sampled_delta", "scp_sampled_delta",
             "uic_witness", "mic_witness", "scp_witness"])


def _audit_row(a: BlockAudit, c: int) -> list:
    row = [a.block_id, a.uic_best_delta, a.mic_best_delta]
    row += [a.scp_best_delta[k] for k in range(1, c + 1)]
    row += [_fmt(a.violating["uic"]), _fmt(a.violating["mic"])]
    row += [_fmt(a.violating[f"scp{k}"]) for k in range(1, c + 1)]
    row.append(a.scp_price_delta)
    row += [_fmt(a.sampled[k]) if k in a.sampled else "" for k in ("uic", "mic", "scp")]
    row += [a.uic_witness, a.mic_witness, a.scp_witness]
    return row


def _audit(cfg: RunConfig, records: list[BlockRecord], out: Path) -> list[BlockAudit]:
    config: AuditConfig = cfg.audit_config(DatasetArrivals(records))
    jobs = [(r, cfg.n or r.capacity_n, config) for r in records]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            audits = list(pool.map(_audit_one, jobs))
    else:
        audits = [_audit_one(j) for j in jobs]
    c = cfg.collusion_c
    ds.write_csv(out / "audit.csv", _audit_columns(c), (_audit_row(a, c) for a in audits))
    summary = summarize(audits)
    rows = [["blocks", summary.blocks]]
    rows += [[f"{k}_violating_blocks", v] for k, v in summary.violating.items()]
    rows += [[f"{k}_mean_best_delta", _fmt(v)] for k, v in summary.mean_best_delta.items()]
    rows += [[f"{k}_mean_sampled_delta", _fmt(v)] for k, v in summary.mean_sampled_delta.items()]
    ds.write_csv(out / "audit_summary.csv", ["metric", "value"], rows)
    return audits


def cmd_audit(cfg: RunConfig) -> int:
    records = _congested(cfg)
    out = _out(cfg)
    audits = _audit(cfg, records, out)
    flagged = sum(1 for a in audits if any(a.violating.values()))
    print(f"audited {len(audits)} blocks, {flagged} with a profitable deviation -> {out / 'audit.csv'}")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    records = _records(cfg)
    if not records:
        raise ValidationError(NO_BLOCKS)
    first = records[0]
    params = _params(cfg, first)
    pool = record_to_mempool(first)
    arrivals = cfg.arrival_stream(DatasetArrivals(records))
    interventions = [miner_fake_bid(pool, cfg.fake_bid, params)] if cfg.fake_bid else []
    result = simulate_rounds(pool, arrivals, params, cfg.rounds, interventions)
    out = _out(cfg)
    cols = ["round", "included", "clearing_price", "miner_revenue", "burned", "pending"]
    ds.write_csv(out / "simulate_rounds.csv", cols, ([h[c] for c in cols] for h in result.rounds))
    ds.write_csv(out / "simulate_ledger.csv", ["actor", "payoff"], sorted(result.ledger.items()))
    print(f"simulated {cfg.rounds} rounds from block {first.block_number}, burned {result.burned}")
    return EXIT_OK


def _read_csv(path: Path) -> list[dict]:
    if not path.exists():
        return []
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def cmd_report(cfg: RunConfig, input_dir: str | None = None) -> int:
    src = Path(input_dir or cfg.output_dir)
    replay = _read_csv(src / "replay.csv")
    audit = _read_csv(src / "audit.csv")
    if not replay and not audit:
        raise ValidationError(NO_BLOCKS)
    out = _out(cfg)

    def fig(name, rows, cols):
        ds.write_csv(out / name, cols, ([r[c] for c in cols] for r in rows))

    lines = []
    if replay:
        fig("fig2_user_fees.csv", replay, ["block_number", "baseline_user_total", "bnp_user_total"])
        fig("fig3_miner_revenue.csv", replay,
            ["block_number", "baseline_miner_revenue", "bnp_miner_revenue", "bnp_burned"])
        summary = {r["metric"]: r["value"] for r in _read_csv(src / "replay_summary.csv")}
        lines += [
            f"replayed blocks: {len(replay)}",
            f"mean user fee reduction: {summary.get('mean_user_reduction_pct', '?')}%",
            f"mean miner revenue reduction: {summary.get('mean_miner_reduction_pct', '?')}%",
            f"largest per-block user saving: {summary.get('max_user_saving', '?')} wei "
            f"(block {summary.get('max_user_saving_block', '?')})",
            f"miner revenue reduction range: {summary.get('min_miner_reduction_pct', '?')}% "
            f"to {summary.get('max_miner_reduction_pct', '?')}%",
        ]
    if audit:
        scp_cols = sorted(c for c in audit[0] if c.startswith("scp") and c.endswith("_best_delta"))
        fig("fig4_uic.csv", audit, ["block_number", "uic_best_delta", "uic_sampled_delta"])
        fig("fig5_mic.csv", audit, ["block_number", "mic_best_delta", "mic_sampled_delta"])
        fig("fig6_scp.csv", audit, ["block_number", *scp_cols, "scp_price_delta", "scp_sampled_delta"])
        k = len(audit)
        count = lambda col: sum(1 for r in audit if r[col] == "1")  # noqa: E731
        lines += [
            f"audited blocks: {k}",
            f"blocks with a profitable user deviation: {count('uic_violating')} of {k}",
            f"blocks with a profitable miner fake bid: {count('mic_violating')} of {k}",
        ]
        for col in scp_cols:
            c = col[3:].split("_")[0]
            lines.append(f"blocks with a profitable miner plus {c}-user coalition: "
                         f"{count(f'scp{c}_violating')} of {k}")
        mean_price = Fraction(sum(int(r["scp_price_delta"]) for r in audit), k)
        lines.append(f"mean clearing price change under the best 1-user coalition: "
                     f"{ds.format_pct(mean_price)} wei")
    (out / "summary.txt").write_bytes(("\n".join(lines) + "\n").encode("utf-8"))
    print("\n".join(lines))
    return EXIT_OK


def cmd_run(cfg: RunConfig) -> int:
    records = _congested(cfg)
    out = _out(cfg)
    ds.store(records, out / "filtered.jsonl")
    _replay(cfg, records, out)
    _audit(cfg, records, out)
    return cmd_report(cfg, str(out))


# ---------------------------------------------------------------- parser


FLAG_KEYS = {
    "fetch": ["endpoint", "start_block", "end_block", "capacity", "cache_dir", "parallelism", "retries",
              "fetch_pending", "output_dir"],
    "filter": ["dataset", "threshold_ratio", "output_dir"],
    "replay": ["dataset", "threshold_ratio", "n", "baseline", "output_dir"],
    "audit": ["dataset", "threshold_ratio", "n", "future_model", "arrivals", "arrival_rate", "arrival_low",
              "arrival_high", "grid", "collusion_c", "tolerance", "samples", "seed", "max_evaluations",
              "workers", "output_dir"],
    "simulate": ["dataset", "n", "arrivals", "arrival_rate", "arrival_low", "arrival_high", "rounds",
                 "fake_bid", "seed", "output_dir"],
    "report": ["output_dir"],
    "synth": ["dataset", "seed"],
}
FLAG_KEYS["run"] = list(dict.fromkeys(FLAG_KEYS["replay"] + FLAG_KEYS["audit"]))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bnp-audit", description="Burning N-th price auction: replay and incentive audits.")
    p.add_argument("--config", help="flat key = value config file; flags override it")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, keys in FLAG_KEYS.items():
        sp = sub.add_parser(name)
        for key in keys:
            sp.add_argument("--" + key.replace("_", "-"), dest=key, default=None, metavar=key.upper())
        if name == "report":
            sp.add_argument("--input-dir", default=None, help="directory holding replay.csv / audit.csv")
        if name == "synth":
            sp.add_argument("--count", type=int, default=20)
    return p


def resolve(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    for key in FLAG_KEYS[args.command]:
        value = getattr(args, key, None)
        if value is not None:
            cfg.set(key, value, f"--{key.replace('_', '-')}")
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args)
        cmd = args.command
        if cmd == "synth":
            return cmd_synth(cfg, args.count)
        if cmd == "report":
            return cmd_report(cfg, args.input_dir)
        return {
            "fetch": cmd_fetch, "filter": cmd_filter, "replay": cmd_replay, "audit": cmd_audit,
            "simulate": cmd_simulate, "run": cmd_run,
        }[cmd](cfg)
    except UsageError as exc:
        print(f"bnp-audit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleAuditError as exc:
        print(f"bnp-audit: infeasible audit: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except FetchError as exc:
        for block, reason in sorted(exc.failures.items()):
            print(f"bnp-audit: block {block}: {reason}", file=sys.stderr)
        print(f"bnp-audit: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    except (ValidationError, DatasetError, AuditError, BnpError, OSError) as exc:
        print(f"bnp-audit: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
