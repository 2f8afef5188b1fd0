"""Run configuration: a flat ``key = value`` text file with a fixed schema.

Values are resolved in this order, later winning: built-in defaults, the
config file, command-line flags. Blank lines and lines starting with ``#``
are ignored. Unknown keys are an error so typos never pass silently. The
RPC auth token is never part of the config; it is read from
``BNP_RPC_TOKEN``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

from .audit import AllPivotPoints, AuditConfig, UniformStep
from .errors import ValidationError
from .pipeline.replay import BASELINES
from .strategy import FutureCostModel, SyntheticArrivals

ARRIVAL_SOURCES = ("dataset", "synthetic", "none")


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


@dataclass
class RunConfig:
    dataset: str = ""
    output_dir: str = "out"
    n: int = 0
    threshold_ratio: str = "2"
    baseline: str = "first-price"
    future_model: str = "next_round"
    arrivals: str = "dataset"
    arrival_rate: float = 0.0
    arrival_low: int = 0
    arrival_high: int = 0
    grid: str = "pivots"
    collusion_c: int = 1
    tolerance: int = 0
    samples: int = 0
    seed: int = 0
    max_evaluations: int = 20_000_000
    workers: int = 1
    rounds: int = 10
    fake_bid: int = 0
    endpoint: str = ""
    start_block: int = 0
    end_block: int = -1
    capacity: int = 0
    cache_dir: str = ""
    parallelism: int = 4
    retries: int = 4
    fetch_pending: bool = False

    # ---- parsing -------------------------------------------------------
    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def set(self, key: str, raw: str, where: str = "config"):
        types = {f.name: f.type for f in fields(self)}
        if key not in types:
            raise ValidationError(f"{where}: unknown config key {key!r}")
        kind = types[key]
        try:
            if kind == "int":
                value = int(raw)
            elif kind == "float":
                value = float(raw)
            elif kind == "bool":
                value = _bool(raw)
            else:
                value = raw.strip()
        except ValueError:
            raise ValidationError(f"{where}: bad value {raw!r} for {key} (expected {kind})") from None
        setattr(self, key, value)

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "RunConfig":
        cfg = cls()
        cfg.update_from_text(Path(path).read_text(encoding="utf-8"), str(path))
        return cfg

    def update_from_text(self, text: str, source: str = "config"):
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationError(f"{source}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            self.set(key.strip(), value.strip(), f"{source}:{lineno}")

    def to_text(self) -> str:
        lines = ["# bnp-audit run configuration"]
        for key in self.keys():
            v = getattr(self, key)
            if isinstance(v, bool):
                v = "true" if v else "false"
            lines.append(f"{key} = {v}")
        return "\n".join(lines) + "\n"

    def write(self, directory: str | os.PathLike) -> Path:
        path = Path(directory) / "config.txt"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(self.to_text().encode("utf-8"))
        return path

    # ---- derived objects -----------------------------------------------
    def validate(self):
        if self.baseline not in BASELINES:
            raise ValidationError(f"baseline must be one of {', '.join(BASELINES)}, got {self.baseline!r}")
        if self.arrivals not in ARRIVAL_SOURCES:
            raise ValidationError(f"arrivals must be one of {', '.join(ARRIVAL_SOURCES)}, got {self.arrivals!r}")
        if self.n < 0 or self.collusion_c < 0 or self.samples < 0 or self.tolerance < 0:
            raise ValidationError("n, collusion_c, samples and tolerance must be non-negative")
        self.grid_strategy()
        self.future(None)

    def grid_strategy(self):
        if self.grid == "pivots":
            return AllPivotPoints()
        if self.grid.startswith("step:"):
            try:
                return UniformStep(int(self.grid[5:]))
            except ValueError:
                pass
        raise ValidationError(f"grid must be 'pivots' or 'step:<amount>', got {self.grid!r}")

    def future(self, dataset_arrivals) -> FutureCostModel:
        choice = self.future_model
        if choice == "pessimistic":
            return FutureCostModel.pessimistic()
        if choice.startswith("fixed_offset"):
            _, _, delta = choice.partition(":")
            try:
                return FutureCostModel.fixed_offset(int(delta or 1))
            except ValueError:
                raise ValidationError(f"bad fixed_offset delta in {choice!r}") from None
        if choice == "next_round":
            return FutureCostModel.next_round(self.arrival_stream(dataset_arrivals))
        raise ValidationError(
            f"future_model must be next_round, fixed_offset[:delta] or pessimistic, got {choice!r}"
        )

    def arrival_stream(self, dataset_arrivals):
        if self.arrivals == "none":
            return None
        if self.arrivals == "synthetic":
            return SyntheticArrivals(self.arrival_rate, self.arrival_low, self.arrival_high, self.seed)
        return dataset_arrivals

    def audit_config(self, dataset_arrivals=None) -> AuditConfig:
        return AuditConfig(
            bid_grid=self.grid_strategy(),
            collusion_c=self.collusion_c,
            future_model=self.future(dataset_arrivals),
            tolerance=self.tolerance,
            max_evaluations=self.max_evaluations,
            samples=self.samples,
            seed=self.seed,
        )
