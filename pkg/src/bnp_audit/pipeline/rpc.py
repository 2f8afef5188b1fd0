"""Ethereum JSON-RPC block fetcher with retries and an on-disk cache."""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import requests

from ..errors import FetchError

log = logging.getLogger(__name__)

ENDPOINT_ENV = "BNP_RPC_ENDPOINT"
TOKEN_ENV = "BNP_RPC_TOKEN"


class RpcError(Exception):
    """The node answered with a JSON-RPC error object."""


class _Permanent(Exception):
    """A failure that retrying cannot fix (missing block, malformed payload)."""


@dataclass
class FetchResult:
    payloads: dict[int, dict] = field(default_factory=dict)
    failures: dict[int, str] = field(default_factory=dict)
    cached: list[int] = field(default_factory=list)

    def raise_for_failures(self):
        if self.failures:
            raise FetchError(self.failures, self.payloads)


class RpcClient:
    def __init__(
        self,
        endpoint: str,
        token: str | None = None,
        timeout: float = 30.0,
        retries: int = 4,
        backoff: float = 0.5,
        max_backoff: float = 8.0,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.max_backoff = max_backoff
        self.sleep = sleep
        self.headers = {"Content-Type": "application/json"}
        token = token if token is not None else os.environ.get(TOKEN_ENV)
        if token:
            self.headers["Authorization"] = f"Bearer {token}"
        self._ids = iter(range(1, 1 << 62))

    def call(self, method: str, params: list):
        body = {"jsonrpc": "2.0", "id": next(self._ids), "method": method, "params": params}
        delay = self.backoff
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                self.sleep(delay)
                delay = min(delay * 2, self.max_backoff)
            try:
                resp = requests.post(self.endpoint, json=body, headers=self.headers, timeout=self.timeout)
                if resp.status_code == 429 or resp.status_code >= 500:
                    last = RpcError(f"HTTP {resp.status_code}")
                    continue
                resp.raise_for_status()
                data = resp.json()
            except (requests.RequestException, ValueError) as exc:
                last = exc
                continue
            if not isinstance(data, dict):
                raise _Permanent("response is not a JSON-RPC object")
            if data.get("error"):
                err = data["error"]
                raise RpcError(err.get("message", str(err)) if isinstance(err, dict) else str(err))
            return data.get("result")
        raise ConnectionError(f"{method} failed after {self.retries + 1} attempts: {last}")

    def block_by_number(self, number: int) -> dict:
        result = self.call("eth_getBlockByNumber", [hex(number), True])
        if result is None:
            raise _Permanent("block not found (not yet produced?)")
        if not isinstance(result, dict) or not isinstance(result.get("transactions"), list):
            raise _Permanent("malformed block payload")
        try:
            got = int(result.get("number", "0x-1"), 16)
        except (TypeError, ValueError):
            raise _Permanent("malformed block payload: bad number") from None
        if got != number:
            raise _Permanent(f"node returned block {got} for {number}")
        return result

    def pending_pool(self) -> list[dict]:
        """``txpool_content`` pending transactions, flattened; empty if unsupported."""
        try:
            result = self.call("txpool_content", [])
        except RpcError as exc:
            log.warning("node does not expose txpool_content: %s", exc)
            return []
        out = []
        for by_nonce in (result or {}).get("pending", {}).values():
            out.extend(by_nonce.values())
        return out


def _cache_path(cache_dir: Path, number: int) -> Path:
    return cache_dir / f"{number}.json"


def _write_atomic(path: Path, payload: dict):
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")
    os.replace(tmp, path)


def fetch_blocks(
    endpoint: str,
    blocks: Iterable[int],
    cache_dir: str | os.PathLike | None = None,
    parallelism: int = 4,
    client: RpcClient | None = None,
    **client_kwargs,
) -> FetchResult:
    """Fetch full blocks by number; blocks already in ``cache_dir`` are not requested again.

    Failures are collected per block instead of aborting the batch.
    """
    numbers = list(dict.fromkeys(int(b) for b in blocks))
    if not numbers:
        raise ValueError("empty block range")
    client = client or RpcClient(endpoint, **client_kwargs)
    result = FetchResult()
    cache = Path(cache_dir) if cache_dir is not None else None
    todo = []
    for num in numbers:
        if cache is not None and _cache_path(cache, num).exists():
            try:
                result.payloads[num] = json.loads(_cache_path(cache, num).read_text(encoding="utf-8"))
                result.cached.append(num)
                continue
            except ValueError:
                log.warning("cached block %d is unreadable, refetching", num)
        todo.append(num)
    if cache is not None:
        cache.mkdir(parents=True, exist_ok=True)

    def one(num):
        try:
            payload = client.block_by_number(num)
        except _Permanent as exc:
            return num, None, str(exc)
        except (RpcError, ConnectionError) as exc:
            return num, None, str(exc)
        if cache is not None:
            _write_atomic(_cache_path(cache, num), payload)
        return num, payload, None

    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        for num, payload, err in pool.map(one, todo):
            if err is None:
                result.payloads[num] = payload
            else:
                result.failures[num] = err
    result.payloads = dict(sorted(result.payloads.items()))
    return result
