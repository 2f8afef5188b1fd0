"""Turn ``eth_getBlockByNumber`` payloads into :class:`BlockRecord` s.

A transaction's bid is what it offered per unit of gas: ``gasPrice`` for
legacy and access-list transactions, ``maxFeePerGas`` for fee-market ones.
Its baseline payment is the per-gas price it actually paid. Gas quantities
are ignored because the auction counts transactions, not gas.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

from ..errors import ValidationError
from .records import BlockRecord, TxRecord

LEGACY_TYPES = {0, 1}
FEE_MARKET_TYPES = {2, 3, 4}


class Rejection(NamedTuple):
    block_number: int | None
    tx_id: str | None
    reason: str


def parse_quantity(value) -> int:
    """JSON-RPC quantity: ``0x``-prefixed hex string, decimal string or int."""
    if isinstance(value, bool):
        raise ValueError("boolean is not a quantity")
    if isinstance(value, int):
        if value < 0:
            raise ValueError("negative quantity")
        return value
    if isinstance(value, str):
        s = value.strip()
        if s[:2].lower() == "0x":
            return int(s, 16)
        if s.isdigit():
            return int(s)
    raise ValueError(f"not a quantity: {value!r}")


def _field(tx: dict, name: str) -> int | None:
    v = tx.get(name)
    return None if v is None else parse_quantity(v)


def normalize_tx(tx: dict, base_fee: int | None) -> TxRecord:
    """One transaction object; raises ``ValueError`` with the rejection reason."""
    if not isinstance(tx, dict):
        raise ValueError("transaction is not an object (block fetched without full transactions?)")
    tx_id = tx.get("hash")
    if not isinstance(tx_id, str) or not tx_id:
        raise ValueError("missing hash")
    sender = tx.get("from") or ""
    tx_type = _field(tx, "type") or 0
    effective = _field(tx, "effectiveGasPrice")
    if tx_type in LEGACY_TYPES:
        bid = _field(tx, "gasPrice")
        if bid is None:
            raise ValueError("legacy transaction without gasPrice")
        paid = bid if effective is None else effective
    elif tx_type in FEE_MARKET_TYPES:
        bid = _field(tx, "maxFeePerGas")
        if bid is None:
            raise ValueError(f"type-{tx_type} transaction without maxFeePerGas")
        if effective is not None:
            paid = effective
        else:
            tip = _field(tx, "maxPriorityFeePerGas")
            if tip is None or base_fee is None:
                raise ValueError("cannot derive the paid price: need maxPriorityFeePerGas and the block base fee")
            paid = min(bid, base_fee + tip)
    else:
        raise ValueError(f"unsupported transaction type {tx_type}")
    return TxRecord(tx_id, bid, paid, sender)


def normalize(
    payload: dict,
    capacity_n: int | None = None,
    pending: Sequence[dict] | None = None,
) -> tuple[BlockRecord, list[Rejection]]:
    """Normalize a block payload; every transaction is either kept or rejected with a reason.

    ``capacity_n`` defaults to the number of normalized transactions.
    """
    if not isinstance(payload, dict):
        raise ValidationError("block payload is not a JSON object")
    try:
        number = parse_quantity(payload["number"])
        timestamp = parse_quantity(payload.get("timestamp", 0))
    except (KeyError, ValueError) as exc:
        raise ValidationError(f"block payload without a valid number/timestamp: {exc}") from None
    base_fee = payload.get("baseFeePerGas")
    base_fee = None if base_fee is None else parse_quantity(base_fee)
    raw = payload.get("transactions")
    if not isinstance(raw, list):
        raise ValidationError(f"block {number}: payload has no transaction list")
    txs: list[TxRecord] = []
    rejections: list[Rejection] = []
    seen: set[str] = set()

    def take(items, into):
        for tx in items:
            tx_id = tx.get("hash") if isinstance(tx, dict) else None
            try:
                rec = normalize_tx(tx, base_fee)
            except ValueError as exc:
                rejections.append(Rejection(number, tx_id, str(exc)))
                continue
            if rec.tx_id in seen:
                rejections.append(Rejection(number, rec.tx_id, "duplicate transaction hash"))
                continue
            seen.add(rec.tx_id)
            into.append(rec)

    take(raw, txs)
    pool = None
    if pending is not None:
        pool = []
        take(pending, pool)
    n = capacity_n if capacity_n is not None else max(1, len(txs))
    record = BlockRecord(number, timestamp, n, tuple(txs), None if pool is None else tuple(pool), base_fee)
    return record, rejections
