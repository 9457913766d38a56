"""Run configuration: one JSON document, every section optional.

::

    {
      "rng_seed": 0,
      "anchor":       {"base_size": 128, "scales": [...], "aspect_ratios": [...], "stride": 16},
      "sampling":     {"minibatch_size": 256, "positive_fraction": 0.5, "pos_iou": 0.6,
                       "neg_iou": 0.3, "force_best_match": true},
      "proposal":     {"train_nms_iou": 0.7, "test_nms_iou": 0.6, "max_proposals": 300},
      "roi":          {"out_h": 16, "out_w": 16},
      "detector":     {"detect_threshold": 0.9, "dedup_cosine": 0.999},
      "post_learn":   {"fp_score_threshold": 0.99, "reliable_score_threshold": 0.99,
                       "fp_augmentation": [...], "offline_augmentation": "rot"},
      "eval":         {"fps": 25, "duplicates_as_fp": false},
      "augmentation": {"strategy": "none", "visibility_threshold": 0.5},
      "optimizer":    {"momentum": 0.9, "learning_rate": 0.001, "max_epochs": 30}
    }

The optimizer block is provenance only; the exemplar detector has no
gradient training. Unknown keys are rejected.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Optional

from .augmentation import AugmentationStrategy
from .errors import ConfigError
from .evaluation import EvalConfig
from .post_learning import PostLearnConfig
from .proposal import AnchorConfig, ProposalConfig, RoiConfig, SamplingConfig


@dataclass(frozen=True)
class DetectorConfig:
    detect_threshold: float = 0.9
    dedup_cosine: float = 0.999

    def __post_init__(self) -> None:
        if not 0 <= self.detect_threshold <= 1:
            raise ValueError("detect_threshold must lie in [0, 1]")
        if not 0 < self.dedup_cosine <= 1:
            raise ValueError("dedup_cosine must lie in (0, 1]")


@dataclass(frozen=True)
class AugmentationConfig:
    strategy: str = "none"
    visibility_threshold: float = 0.5

    def __post_init__(self) -> None:
        self.build()

    def build(self) -> AugmentationStrategy:
        return AugmentationStrategy.named(self.strategy, visibility_threshold=self.visibility_threshold)


@dataclass(frozen=True)
class OptimizerProvenance:
    momentum: float = 0.9
    learning_rate: float = 1e-3
    max_epochs: int = 30


@dataclass(frozen=True)
class SamplingSection:
    """SamplingConfig without the seed, which lives at the top level."""

    minibatch_size: int = 256
    positive_fraction: float = 0.5
    pos_iou: float = 0.6
    neg_iou: float = 0.3
    force_best_match: bool = True

    def __post_init__(self) -> None:
        self.build(0)

    def build(self, seed: int) -> SamplingConfig:
        return SamplingConfig(rng_seed=seed, **asdict(self))


_SECTIONS = {
    "anchor": AnchorConfig,
    "sampling": SamplingSection,
    "proposal": ProposalConfig,
    "roi": RoiConfig,
    "detector": DetectorConfig,
    "post_learn": PostLearnConfig,
    "eval": EvalConfig,
    "augmentation": AugmentationConfig,
    "optimizer": OptimizerProvenance,
}

_TUPLE_FIELDS = {("anchor", "scales"), ("anchor", "aspect_ratios"), ("post_learn", "fp_augmentation")}


@dataclass(frozen=True)
class RunConfig:
    rng_seed: int = 0
    anchor: AnchorConfig = field(default_factory=AnchorConfig)
    sampling: SamplingSection = field(default_factory=SamplingSection)
    proposal: ProposalConfig = field(default_factory=ProposalConfig)
    roi: RoiConfig = field(default_factory=RoiConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    post_learn: PostLearnConfig = field(default_factory=PostLearnConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    augmentation: AugmentationConfig = field(default_factory=AugmentationConfig)
    optimizer: OptimizerProvenance = field(default_factory=OptimizerProvenance)

    @property
    def sampling_config(self) -> SamplingConfig:
        return self.sampling.build(self.rng_seed)

    def to_dict(self) -> dict:
        out = {"rng_seed": self.rng_seed}
        for name in _SECTIONS:
            section = asdict(getattr(self, name))
            out[name] = {k: list(v) if isinstance(v, tuple) else v for k, v in section.items()}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def sha256(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - set(_SECTIONS) - {"rng_seed"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        if "rng_seed" in data:
            seed = data["rng_seed"]
            if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
                raise ConfigError(f"rng_seed must be a non-negative integer, got {seed!r}")
            kwargs["rng_seed"] = seed
        for name, section_cls in _SECTIONS.items():
            if name not in data:
                continue
            body = data[name]
            if not isinstance(body, dict):
                raise ConfigError(f"config section {name!r} must be an object")
            allowed = {f.name for f in fields(section_cls)}
            bad = set(body) - allowed
            if bad:
                raise ConfigError(f"unknown keys in section {name!r}: {sorted(bad)}")
            body = {k: tuple(v) if (name, k) in _TUPLE_FIELDS and isinstance(v, list) else v for k, v in body.items()}
            try:
                kwargs[name] = section_cls(**body)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"invalid section {name!r}: {exc}") from exc
        return cls(**kwargs)

    def with_overrides(self, assignments: Iterable[str]) -> "RunConfig":
        """Apply ``section.key=value`` (or ``rng_seed=value``) strings; values are JSON."""
        data = self.to_dict()
        for item in assignments:
            key, sep, raw = item.partition("=")
            if not sep:
                raise ConfigError(f"override {item!r} is not of the form section.key=value")
            try:
                value = json.loads(raw)
            except json.JSONDecodeError:
                value = raw
            path = key.strip().split(".")
            if path == ["rng_seed"]:
                data["rng_seed"] = value
            elif len(path) == 2 and path[0] in _SECTIONS:
                data[path[0]][path[1]] = value
            else:
                raise ConfigError(f"override key {key!r} does not name a config field")
        return RunConfig.from_dict(data)


def load_config(path: Optional[str] = None) -> RunConfig:
    if path is None:
        return RunConfig()
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"config not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON ({exc})") from exc
    return RunConfig.from_dict(data)


def with_seed(cfg: RunConfig, seed: Optional[int]) -> RunConfig:
    if seed is None:
        return cfg
    if seed < 0:
        raise ConfigError("seed must be non-negative")
    return replace(cfg, rng_seed=seed)
