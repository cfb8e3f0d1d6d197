"""Run configuration shared by the CLI commands.

Every module-level knob appears exactly once, under one canonical name,
and the same names are accepted in the JSON config file. Precedence is
flags > config file > built-in defaults.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .losses import LossConfig
from .matching import MatchConfig


@dataclass(frozen=True)
class RunConfig:
    q: float = 2.0
    diagonal_weight: float = 1.0
    normalize_spatial: bool = True
    spatial_floor: float = 0.0
    lambda_tc: float = 0.05
    lambda_ts: float = 0.0002
    bin_threshold: float = 0.5
    extractor_weights: str | None = None
    out_dir: str = "."

    def __post_init__(self):
        if not 0.0 <= self.bin_threshold <= 1.0:
            raise ValueError("bin_threshold must lie in [0, 1]")
        # range checks for the matching/loss knobs live in their owners
        self.match_config()
        LossConfig(self.lambda_tc, self.lambda_ts)

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        raw = json.loads(Path(path).read_text())
        if not isinstance(raw, dict):
            raise ValueError("config file must hold a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    def with_overrides(self, **overrides) -> "RunConfig":
        """Apply non-None overrides (flag values win over file values)."""
        effective = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **effective) if effective else self

    def match_config(self) -> MatchConfig:
        return MatchConfig(
            q=self.q,
            diagonal_weight=self.diagonal_weight,
            normalize_spatial=self.normalize_spatial,
            spatial_floor=self.spatial_floor,
        )

    def loss_config(self) -> LossConfig:
        return LossConfig(self.lambda_tc, self.lambda_ts, self.match_config())

    def to_json_obj(self) -> dict:
        return asdict(self)


def load_config(path: str | Path | None, **overrides) -> RunConfig:
    base = RunConfig.from_file(path) if path is not None else RunConfig()
    return base.with_overrides(**overrides)
