"""Block ingestion, normalization, persistence and replay."""

from .dataset import SCHEMA_VERSION, dumps_records, format_pct, load, loads_records, store, write_csv, write_replay_csv
from .normalize import Rejection, normalize, normalize_tx, parse_quantity
from .records import BlockRecord, DatasetArrivals, ReplayComparison, TxRecord, record_to_mempool
from .replay import EIP1559, FIRST_PRICE, filter_congested, replay_compare, replay_summary
from .rpc import FetchResult, RpcClient, fetch_blocks
from .synth import synthetic_blocks

__all__ = [
    "SCHEMA_VERSION", "BlockRecord", "DatasetArrivals", "TxRecord", "ReplayComparison", "Rejection", "FetchResult",
    "RpcClient", "EIP1559", "FIRST_PRICE", "fetch_blocks", "normalize", "normalize_tx",
    "parse_quantity", "record_to_mempool", "filter_congested", "replay_compare", "replay_summary",
    "store", "load", "loads_records", "dumps_records", "format_pct", "write_csv", "write_replay_csv", "synthetic_blocks",
]
