"""Run configuration: one nested, validated, JSON-round-trippable object.

Every stage reads its parameters from here, and a serialized snapshot is
embedded in each evaluation report so a result can be audited without
the original command line.  All defaults match the protocol's reference
settings: top 100 statistical candidates cut to 20 traded pairs, lag
sweep 1..5, 60/30-day train/test windows stepping by the test length,
trigger threshold 0, 7-day hold, position size 100.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from .backtest import TradeConfig
from .errors import InvalidParameter, SchemaError
from .semantic import ScorerConfig
from .series import DEFAULT_CLIP_EPSILON, DEFAULT_MIN_OVERLAP


@dataclass(frozen=True)
class ScreeningConfig:
    """Candidate discovery parameters (stationarizing + causality screen)."""

    k: int = 100
    lag_set: tuple[int, ...] = (1, 2, 3, 4, 5)
    min_overlap: int = DEFAULT_MIN_OVERLAP
    min_obs: int = 30
    min_std: float = 0.5
    clip_epsilon: float = DEFAULT_CLIP_EPSILON
    max_diffs: int = 2

    def __post_init__(self):
        object.__setattr__(self, "lag_set", tuple(int(v) for v in self.lag_set))
        if self.k < 1:
            raise InvalidParameter(f"k must be >= 1, got {self.k}")
        if not self.lag_set or min(self.lag_set) < 1:
            raise InvalidParameter("lag_set must be non-empty positive integers")
        if self.min_overlap < 1:
            raise InvalidParameter("min_overlap must be >= 1")
        if self.min_obs < 1:
            raise InvalidParameter("min_obs must be >= 1")
        if self.min_std < 0.0:
            raise InvalidParameter("min_std must be >= 0")
        if self.max_diffs < 0:
            raise InvalidParameter("max_diffs must be >= 0")


@dataclass(frozen=True)
class RerankConfig:
    """Semantic re-ranking parameters."""

    m: int = 20
    scorer: ScorerConfig = field(default_factory=ScorerConfig)

    def __post_init__(self):
        if self.m < 1:
            raise InvalidParameter(f"m must be >= 1, got {self.m}")


@dataclass(frozen=True)
class WindowConfig:
    """Rolling train/test schedule."""

    train_days: int = 60
    test_days: int = 30
    step_days: int = 30
    post_cutoff_date: date | None = None

    def __post_init__(self):
        for name in ("train_days", "test_days", "step_days"):
            if getattr(self, name) < 1:
                raise InvalidParameter(f"{name} must be >= 1")


@dataclass(frozen=True)
class IoConfig:
    """Default file locations; CLI flags override these."""

    prices: str | None = None
    metadata: str | None = None
    out_dir: str = "out"


@dataclass(frozen=True)
class RunConfig:
    """Top-level configuration for a full evaluation run."""

    screening: ScreeningConfig = field(default_factory=ScreeningConfig)
    rerank: RerankConfig = field(default_factory=RerankConfig)
    trading: TradeConfig = field(default_factory=TradeConfig)
    windows: WindowConfig = field(default_factory=WindowConfig)
    io: IoConfig = field(default_factory=IoConfig)
    ablation_horizons: tuple[int, ...] = (1, 3, 5, 7, 10, 14, 21)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "ablation_horizons",
                           tuple(int(h) for h in self.ablation_horizons))
        if self.rerank.m > self.screening.k:
            raise InvalidParameter(
                f"rerank.m ({self.rerank.m}) cannot exceed screening.k "
                f"({self.screening.k})")
        if any(h < 1 for h in self.ablation_horizons):
            raise InvalidParameter("ablation horizons must be >= 1")


_SECTION_TYPES = {
    "screening": ScreeningConfig,
    "rerank": RerankConfig,
    "trading": TradeConfig,
    "windows": WindowConfig,
    "io": IoConfig,
}


def _build_section(cls, data: dict, context: str):
    if not isinstance(data, dict):
        raise SchemaError(f"config section {context!r} must be an object")
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise SchemaError(f"unknown config key {context}.{key}")
        if key == "scorer":
            value = _build_section(ScorerConfig, value, f"{context}.scorer")
        elif key == "post_cutoff_date" and value is not None:
            try:
                value = date.fromisoformat(value)
            except (TypeError, ValueError) as exc:
                raise SchemaError(
                    f"{context}.post_cutoff_date must be YYYY-MM-DD") from exc
        elif key in ("lag_set", "ablation_horizons") and isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except InvalidParameter as exc:
        raise SchemaError(f"config section {context!r}: {exc}") from exc


def load_config(path=None, data: dict | None = None) -> RunConfig:
    """Build a RunConfig from a JSON file and/or a dict of overrides.

    Unknown keys fail loudly with SchemaError rather than being ignored.
    With neither argument, returns the defaults.
    """
    merged: dict = {}
    if path is not None:
        text = Path(path).read_text()
        try:
            loaded = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
        if not isinstance(loaded, dict):
            raise SchemaError(f"{path}: config must be a JSON object")
        merged = loaded
    if data:
        for key, value in data.items():
            if isinstance(value, dict) and isinstance(merged.get(key), dict):
                merged[key] = {**merged[key], **value}
            else:
                merged[key] = value

    kwargs = {}
    for key, value in merged.items():
        if key in _SECTION_TYPES:
            kwargs[key] = _build_section(_SECTION_TYPES[key], value, key)
        elif key == "ablation_horizons":
            kwargs[key] = tuple(value)
        elif key == "seed":
            kwargs[key] = int(value)
        else:
            raise SchemaError(f"unknown config key {key!r}")
    try:
        return RunConfig(**kwargs)
    except InvalidParameter as exc:
        raise SchemaError(str(exc)) from exc


def config_snapshot(config: RunConfig) -> dict:
    """JSON-safe dict of the full configuration for report embedding.

    The scorer's stub table (if any) is summarized by size; everything
    else round-trips.
    """
    def encode(obj):
        if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
            out = {}
            for f in dataclasses.fields(obj):
                out[f.name] = encode(getattr(obj, f.name))
            return out
        if isinstance(obj, date):
            return obj.isoformat()
        if isinstance(obj, tuple):
            return [encode(v) for v in obj]
        if isinstance(obj, dict):
            return {"entries": len(obj)}  # stub tables are not serializable
        return obj

    snap = encode(config)
    scorer = snap["rerank"]["scorer"]
    table = config.rerank.scorer.stub_table
    scorer["stub_table"] = None if table is None else {"entries": len(table)}
    return snap
