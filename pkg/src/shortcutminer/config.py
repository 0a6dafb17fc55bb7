"""Run configuration: flat key-value files, flag overrides, stable hashing.

A config file is a flat "section.key = value" document (values parse as
JSON where possible, bare strings otherwise; # starts a comment). Flags
always win over file values. The canonical-JSON hash of the resolved
configuration is embedded in every output artifact so runs can be told
apart and reproduced.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .causality import PipelineConfig
from .miner import PRESETS, MinerConfig
from .predictor import NativeModelConfig


class ConfigError(ValueError):
    """Bad configuration file or flag combination."""


@dataclass
class ModelSection:
    kind: str = "naive_bayes"           # native kinds, or "external"
    ngram_orders: tuple[int, ...] = (1, 2)
    alpha: float = 1.0
    l2: float = 1.0
    transport: str | None = None        # "stdio" | "http" (external only)
    endpoint: str | None = None         # URL (http) or command line (stdio)

    def native_config(self) -> NativeModelConfig:
        return NativeModelConfig(
            kind=self.kind, ngram_orders=self.ngram_orders, alpha=self.alpha, l2=self.l2
        )


@dataclass
class RunConfig:
    dataset: str = ""
    out_dir: str = "out"
    seed: int = 0
    threads: int = 1
    model: ModelSection = field(default_factory=ModelSection)
    miner: MinerConfig = field(default_factory=MinerConfig)
    npmi_threshold: float = 0.5
    eps_n: float = 0.1
    mean_threshold: float = 0.7
    max_contexts: int = 100
    min_contexts: int = 20

    def validate(self) -> None:
        if not -1.0 <= self.npmi_threshold <= 1.0:
            raise ConfigError(f"npmi_threshold must be in [-1, 1], got {self.npmi_threshold}")
        if not 0.0 < self.eps_n < 1.0:
            raise ConfigError(f"eps_n must be in (0, 1), got {self.eps_n}")
        if not 0.0 <= self.mean_threshold <= 1.0:
            raise ConfigError(f"mean_threshold must be in [0, 1], got {self.mean_threshold}")
        if self.min_contexts < 1 or self.max_contexts < self.min_contexts:
            raise ConfigError(
                f"need 1 <= min_contexts <= max_contexts, got "
                f"{self.min_contexts}/{self.max_contexts}"
            )
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")

    def pipeline(self) -> PipelineConfig:
        return PipelineConfig(
            miner=self.miner,
            npmi_threshold=self.npmi_threshold,
            eps_n=self.eps_n,
            mean_threshold=self.mean_threshold,
            max_contexts=self.max_contexts,
            min_contexts=self.min_contexts,
            seed=self.seed,
            threads=self.threads,
        )

    def to_dict(self) -> dict:
        # out_dir and threads are execution details: they never change what
        # gets computed, so they stay out of the hashed configuration
        return {
            "dataset": self.dataset,
            "seed": self.seed,
            "model": {
                "kind": self.model.kind,
                "ngram_orders": list(self.model.ngram_orders),
                "alpha": self.model.alpha,
                "l2": self.model.l2,
                "transport": self.model.transport,
                "endpoint": self.model.endpoint,
            },
            "miner": {
                "doc_len_range": list(self.miner.doc_len_range),
                "query_len_range": list(self.miner.query_len_range)
                if self.miner.query_len_range is not None
                else None,
                "min_support": self.miner.min_support,
            },
            "scorer": {"npmi_threshold": self.npmi_threshold},
            "causality": {
                "eps_n": self.eps_n,
                "mean_threshold": self.mean_threshold,
                "max_contexts": self.max_contexts,
                "min_contexts": self.min_contexts,
            },
        }

    def hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _parse_value(raw: str):
    raw = raw.strip()
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def read_config_file(path: str | Path) -> dict[str, object]:
    """Parse a flat 'section.key = value' document into a dotted-key map."""
    values: dict[str, object] = {}
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{line_no}: expected 'key = value'")
        key, raw = stripped.split("=", 1)
        values[key.strip()] = _parse_value(raw)
    return values


_KEY_ALIASES = {
    "scorer.npmi_threshold": "npmi_threshold",
    "causality.eps_n": "eps_n",
    "causality.mean_threshold": "mean_threshold",
    "causality.max_contexts": "max_contexts",
    "causality.min_contexts": "min_contexts",
}


def _apply_key(config: RunConfig, key: str, value) -> None:
    key = _KEY_ALIASES.get(key, key)
    try:
        if key in ("dataset", "out_dir"):
            setattr(config, key, str(value))
        elif key in ("seed", "threads", "max_contexts", "min_contexts"):
            setattr(config, key, int(value))
        elif key in ("npmi_threshold", "eps_n", "mean_threshold"):
            setattr(config, key, float(value))
        elif key == "model.kind":
            config.model.kind = str(value)
        elif key == "model.ngram_orders":
            config.model.ngram_orders = tuple(int(v) for v in value)
        elif key == "model.alpha":
            config.model.alpha = float(value)
        elif key == "model.l2":
            config.model.l2 = float(value)
        elif key == "model.transport":
            config.model.transport = str(value) if value is not None else None
        elif key == "model.endpoint":
            config.model.endpoint = str(value) if value is not None else None
        elif key == "miner.preset":
            if value not in PRESETS:
                raise ConfigError(f"unknown miner preset {value!r}; options: {sorted(PRESETS)}")
            config.miner = PRESETS[value]
        elif key == "miner.doc_len_range":
            lo, hi = value
            config.miner = MinerConfig(
                (int(lo), int(hi)), config.miner.query_len_range, config.miner.min_support
            )
        elif key == "miner.query_len_range":
            rng = None if value is None else (int(value[0]), int(value[1]))
            config.miner = MinerConfig(
                config.miner.doc_len_range, rng, config.miner.min_support
            )
        elif key == "miner.min_support":
            config.miner = MinerConfig(
                config.miner.doc_len_range, config.miner.query_len_range, int(value)
            )
        else:
            raise ConfigError(f"unknown config key {key!r}")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad value for {key!r}: {value!r} ({exc})") from exc


def build_run_config(
    file_path: str | Path | None, overrides: dict[str, object]
) -> RunConfig:
    """Resolve the configuration: defaults, then file, then flags.

    *overrides* maps dotted keys to values; None values are skipped so
    unset flags never mask file settings.
    """
    config = RunConfig()
    if file_path is not None:
        for key, value in read_config_file(file_path).items():
            _apply_key(config, key, value)
    for key, value in overrides.items():
        if value is not None:
            _apply_key(config, key, value)
    config.validate()
    return config
