"""Pipeline configuration: one YAML document, every key mirrored by a CLI flag.

A run should be reproducible from the config file alone, so the effective
configuration is kept in a single flat object that the CLI echoes to its log.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

import yaml

from .alignment import CASING_AU, CASING_FU
from .backends import (
    DEFAULT_TIMEOUT_S,
    BuiltinVad,
    CorruptionConfig,
    DecodeOptions,
    ExternalBackend,
    ExternalVad,
    MockOracleBackend,
)
from .errors import ConfigError
from .segmentation import STRATEGY_EVEN, STRATEGY_VAD, SegmentationConfig
from .selftrain import LoopConfig

__all__ = ["PipelineConfig"]


@dataclass(frozen=True)
class PipelineConfig:
    l_max_s: float = 15.0
    sample_rate_hz: int = 16000
    strategy: str = STRATEGY_VAD
    casing: str = CASING_FU
    dedup: bool = True
    pack: bool = True
    max_iterations: int = 3
    workers: int = 2
    output_dir: str = "longspeech-out"
    state_path: str | None = None

    beam_size: int | None = 10
    prompt_depth: int = 0

    # exactly one of backend_command / mock may be used per run
    backend_command: str | None = None
    mock_manifest: str | None = None
    mock_substitution_rate: float = 0.0
    mock_insertion_rate: float = 0.0
    mock_deletion_rate: float = 0.0
    mock_timestamp_jitter_s: float = 0.0
    mock_seed: int = 0
    mock_vocab: tuple[str, ...] | None = None

    vad_command: str | None = None
    vad_frame_ms: float = 30.0
    vad_hop_ms: float = 10.0
    vad_threshold_db: float = 6.0
    vad_hangover_frames: int = 20

    train_hook: str | None = None
    manual: bool = False
    timeout_s: float = DEFAULT_TIMEOUT_S

    def __post_init__(self):
        if self.l_max_s <= 0:
            raise ConfigError(f"l_max_s must be positive, got {self.l_max_s}")
        if self.sample_rate_hz <= 0:
            raise ConfigError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if self.strategy not in (STRATEGY_EVEN, STRATEGY_VAD):
            raise ConfigError(f"strategy must be 'even' or 'vad', got {self.strategy!r}")
        if self.casing not in (CASING_AU, CASING_FU):
            raise ConfigError(f"casing must be 'AU' or 'FU', got {self.casing!r}")
        if self.max_iterations < 1:
            raise ConfigError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.beam_size is not None and self.beam_size < 1:
            raise ConfigError(f"beam_size must be >= 1, got {self.beam_size}")
        if self.prompt_depth not in (0, 1, 2):
            raise ConfigError(f"prompt_depth must be 0, 1, or 2, got {self.prompt_depth}")
        if self.timeout_s <= 0:
            raise ConfigError(f"timeout_s must be positive, got {self.timeout_s}")

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        with open(path, encoding="utf-8") as f:
            doc = yaml.safe_load(f)
        if doc is None:
            doc = {}
        if not isinstance(doc, dict):
            raise ConfigError(f"config file {path} must hold a mapping")
        return cls.from_dict(doc)

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "mock_vocab" in doc and doc["mock_vocab"] is not None:
            doc = dict(doc, mock_vocab=tuple(str(w) for w in doc["mock_vocab"]))
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def override(self, **updates) -> "PipelineConfig":
        """Apply CLI flag values; None means the flag was not given."""
        updates = {k: v for k, v in updates.items() if v is not None}
        return replace(self, **updates) if updates else self

    def to_dict(self) -> dict:
        doc = {}
        for f in fields(self):
            value = getattr(self, f.name)
            doc[f.name] = list(value) if isinstance(value, tuple) else value
        return doc

    # factory views consumed by the pipeline modules

    def seg_config(self) -> SegmentationConfig:
        return SegmentationConfig(l_max_s=self.l_max_s, sample_rate_hz=self.sample_rate_hz)

    def decode_options(self) -> DecodeOptions:
        return DecodeOptions(beam_size=self.beam_size, prompt_depth=self.prompt_depth)

    def loop_config(self) -> LoopConfig:
        return LoopConfig(strategy=self.strategy, casing=self.casing, pack=self.pack,
                          dedup=self.dedup, max_iterations=self.max_iterations,
                          workers=self.workers, output_dir=Path(self.output_dir))

    def corruption(self) -> CorruptionConfig:
        kwargs = dict(
            substitution_rate=self.mock_substitution_rate,
            insertion_rate=self.mock_insertion_rate,
            deletion_rate=self.mock_deletion_rate,
            timestamp_jitter_s=self.mock_timestamp_jitter_s,
            seed=self.mock_seed,
        )
        if self.mock_vocab is not None:
            kwargs["vocab"] = self.mock_vocab
        return CorruptionConfig(**kwargs)

    def wants_mock(self) -> bool:
        return self.mock_manifest is not None or self.backend_command is None

    def build_backend(self, fallback_entries=None):
        """Construct the configured backend; mock unless a command is given.

        The mock needs ground truth: the mock_manifest file if set, else the
        entries the caller is already working from.
        """
        if self.backend_command is not None and self.mock_manifest is not None:
            raise ConfigError("configure either backend_command or mock_manifest, not both")
        if self.backend_command is not None:
            return ExternalBackend(self.backend_command, timeout_s=self.timeout_s)
        if self.mock_manifest is not None:
            from .manifest import read_manifest
            entries = read_manifest(self.mock_manifest)
        elif fallback_entries is not None:
            entries = fallback_entries
        else:
            raise ConfigError("mock backend needs mock_manifest for its ground truth")
        return MockOracleBackend(entries, self.corruption())

    def build_vad(self):
        if self.vad_command is not None:
            return ExternalVad(self.vad_command, timeout_s=self.timeout_s)
        return BuiltinVad(frame_ms=self.vad_frame_ms, hop_ms=self.vad_hop_ms,
                          threshold_db=self.vad_threshold_db,
                          hangover_frames=self.vad_hangover_frames)
