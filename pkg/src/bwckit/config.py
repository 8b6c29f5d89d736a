"""Run configuration: YAML file plus flag overrides.

Only the store path may come from the environment (BWCKIT_STORE_PATH);
everything else lives in the config file so a run is reproducible from
one artifact.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .backends import DEFAULT_TIMEOUT_S
from .corpus import DEFAULT_CHUNK_LEN, DEFAULT_OVERLAP
from .ensemble import EnsembleWeights
from .insights import SummarizationBackendDescriptor
from .lexicon import default_lexicon_path
from .separation import SeparationBackendDescriptor
from .transcription import TranscriptionBackendDescriptor

STORE_PATH_ENV = "BWCKIT_STORE_PATH"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    dataset_root: str
    store_path: str
    chunk_len: float = DEFAULT_CHUNK_LEN
    overlap: float = DEFAULT_OVERLAP
    parallelism: int = 1
    retries: int = 1
    separation: SeparationBackendDescriptor = field(
        default_factory=lambda: SeparationBackendDescriptor(name="bandsplit", max_speakers=2)
    )
    transcription: TranscriptionBackendDescriptor = field(
        default_factory=lambda: TranscriptionBackendDescriptor(name="sidecar")
    )
    summarization: SummarizationBackendDescriptor = field(
        default_factory=lambda: SummarizationBackendDescriptor(name="extractive")
    )
    dictionary_path: str | None = None
    lexicon_path: str | None = None
    weights: EnsembleWeights | None = None
    calibrate: bool = False
    save_streams: bool = False

    def validate(self) -> None:
        if self.chunk_len <= 0:
            raise ConfigError("chunk_len must be positive")
        if not 0 <= self.overlap < self.chunk_len:
            raise ConfigError("overlap must satisfy 0 <= overlap < chunk_len")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        if self.retries < 0:
            raise ConfigError("retries must be >= 0")

    def resolved_lexicon_path(self) -> Path:
        return Path(self.lexicon_path) if self.lexicon_path else default_lexicon_path()

    def fingerprint(self) -> str:
        """Stable hash over the fields that change pipeline outputs.

        Used to key per-asset checkpoints: a changed configuration
        invalidates prior completions instead of silently reusing them.
        """
        payload = {
            "chunk_len": self.chunk_len,
            "overlap": self.overlap,
            "separation": [self.separation.name, self.separation.invocation,
                           self.separation.max_speakers],
            "transcription": [self.transcription.name, self.transcription.invocation,
                              self.transcription.truth_dir],
            "summarization": [self.summarization.name, self.summarization.invocation],
            "lexicon": str(self.resolved_lexicon_path()),
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def _backend_section(raw: dict, kind: str):
    section = raw or {}
    name = section.get("name")
    if not name:
        raise ConfigError(f"backends.{kind} needs a name")
    common = {
        "name": name,
        "invocation": section.get("command"),
        "timeout_s": float(section.get("timeout_s", DEFAULT_TIMEOUT_S)),
    }
    if kind == "separation":
        return SeparationBackendDescriptor(max_speakers=int(section.get("max_speakers", 2)), **common)
    if kind == "transcription":
        return TranscriptionBackendDescriptor(truth_dir=section.get("truth_dir"), **common)
    return SummarizationBackendDescriptor(**common)


def load_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    """Load a YAML run config, apply flag overrides, then the env override."""
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})

    for required in ("dataset_root", "store_path"):
        if not raw.get(required):
            raise ConfigError(f"config is missing {required}")

    backends = raw.get("backends", {})
    weights_raw = raw.get("weights")
    weights = None
    if weights_raw:
        weights = EnsembleWeights(
            alpha=float(weights_raw.get("alpha", 0.0)),
            beta=float(weights_raw.get("beta", 0.0)),
            gamma=float(weights_raw.get("gamma", 0.0)),
        )

    config = RunConfig(
        dataset_root=str(raw["dataset_root"]),
        store_path=os.environ.get(STORE_PATH_ENV) or str(raw["store_path"]),
        chunk_len=float(raw.get("chunk_len", DEFAULT_CHUNK_LEN)),
        overlap=float(raw.get("overlap", DEFAULT_OVERLAP)),
        parallelism=int(raw.get("parallelism", 1)),
        retries=int(raw.get("retries", 1)),
        separation=_backend_section(backends.get("separation", {"name": "bandsplit"}), "separation"),
        transcription=_backend_section(backends.get("transcription", {"name": "sidecar"}), "transcription"),
        summarization=_backend_section(backends.get("summarization", {"name": "extractive"}), "summarization"),
        dictionary_path=raw.get("dictionary"),
        lexicon_path=raw.get("lexicon"),
        weights=weights,
        calibrate=bool(raw.get("calibrate", False)),
        save_streams=bool(raw.get("save_streams", False)),
    )
    config.validate()
    return config
