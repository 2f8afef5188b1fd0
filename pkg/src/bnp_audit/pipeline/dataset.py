"""Dataset (JSON Lines) and results (CSV) persistence."""

from __future__ import annotations

import csv
import io
import json
import os
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from ..errors import DatasetError, SchemaVersionError, ValidationError
from .records import BlockRecord, ReplayComparison, TxRecord

SCHEMA_VERSION = 1

REPLAY_COLUMNS = [
    "block_number",
    "transactions",
    "capacity_n",
    "baseline_user_total",
    "bnp_user_total",
    "baseline_miner_revenue",
    "bnp_miner_revenue",
    "bnp_burned",
    "bnp_clearing_price",
    "user_reduction_pct",
    "miner_reduction_pct",
]


def _tx_json(t: TxRecord) -> dict:
    return {
        "tx_id": t.tx_id,
        "bid_amount": str(t.bid_amount),
        "baseline_paid": str(t.baseline_paid),
        "sender": t.sender,
    }


def record_to_json(rec: BlockRecord) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "block_number": rec.block_number,
        "timestamp": rec.timestamp,
        "capacity_n": rec.capacity_n,
        "base_fee": None if rec.base_fee is None else str(rec.base_fee),
        "txs": [_tx_json(t) for t in rec.txs],
        "pending_pool": None if rec.pending_pool is None else [_tx_json(t) for t in rec.pending_pool],
    }


def _amount(v, where: str) -> int:
    if not isinstance(v, str) or not v.isdigit():
        raise DatasetError(f"{where}: amount must be a decimal string, got {v!r}")
    return int(v)


def _tx_from(d, where: str) -> TxRecord:
    try:
        return TxRecord(
            str(d["tx_id"]),
            _amount(d["bid_amount"], where),
            _amount(d["baseline_paid"], where),
            str(d["sender"]),
        )
    except KeyError as exc:
        raise DatasetError(f"{where}: transaction missing field {exc}") from None


def record_from_json(d: dict, where: str = "record") -> BlockRecord:
    if not isinstance(d, dict):
        raise DatasetError(f"{where}: not a JSON object")
    version = d.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(version, SCHEMA_VERSION)
    try:
        pending = d["pending_pool"]
        base_fee = d.get("base_fee")
        return BlockRecord(
            int(d["block_number"]),
            int(d["timestamp"]),
            int(d["capacity_n"]),
            tuple(_tx_from(t, where) for t in d["txs"]),
            None if pending is None else tuple(_tx_from(t, where) for t in pending),
            None if base_fee is None else _amount(base_fee, where),
        )
    except KeyError as exc:
        raise DatasetError(f"{where}: missing field {exc}") from None
    except ValidationError as exc:
        raise DatasetError(f"{where}: {exc}") from None


def dumps_records(records: Iterable[BlockRecord]) -> bytes:
    lines = [json.dumps(record_to_json(r), separators=(",", ":")) for r in records]
    return "".join(line + "\n" for line in lines).encode("utf-8")


def store(records: Iterable[BlockRecord], path: str | os.PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(dumps_records(records))
    os.replace(tmp, path)
    return path


def loads_records(data: bytes, source: str = "<bytes>") -> list[BlockRecord]:
    records = []
    offset = 0
    for lineno, raw in enumerate(data.splitlines(keepends=True), start=1):
        start = offset
        offset += len(raw)
        text = raw.strip()
        if not text:
            continue
        where = f"{source}: line {lineno} (byte offset {start})"
        try:
            obj = json.loads(text.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            pos = start + getattr(exc, "pos", 0)
            raise DatasetError(f"{where}: invalid or truncated JSON at byte offset {pos}: {exc}") from None
        if not raw.endswith(b"\n"):
            raise DatasetError(f"{where}: record not terminated by a newline at byte offset {offset}; file truncated?")
        records.append(record_from_json(obj, where))
    return records


def load(path: str | os.PathLike) -> list[BlockRecord]:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise DatasetError(f"cannot read dataset {path}: {exc}") from None
    return loads_records(data, str(path))


def format_pct(value: Fraction, places: int = 2) -> str:
    """Exact rational rendered with ``places`` decimals, ties to even."""
    scaled = round(Fraction(value) * 10**places)
    sign = "-" if scaled < 0 else ""
    scaled = abs(scaled)
    whole, frac = divmod(scaled, 10**places)
    return f"{sign}{whole}.{frac:0{places}d}" if places else f"{sign}{whole}"


def write_csv(path: str | os.PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    path.write_bytes(buf.getvalue().encode("utf-8"))
    return path


def replay_rows(comparisons: Iterable[ReplayComparison]):
    for c in comparisons:
        yield [
            c.block_number,
            c.transactions,
            c.capacity_n,
            c.baseline_user_total,
            c.bnp_user_total,
            c.baseline_miner_revenue,
            c.bnp_miner_revenue,
            c.bnp_burned,
            c.bnp_clearing_price,
            format_pct(c.user_reduction_pct),
            format_pct(c.miner_reduction_pct),
        ]


def write_replay_csv(path, comparisons: Iterable[ReplayComparison]) -> Path:
    return write_csv(path, REPLAY_COLUMNS, replay_rows(comparisons))
