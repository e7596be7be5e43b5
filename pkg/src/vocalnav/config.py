"""Configuration objects and the JSON config-file loader.

Defaults live on the dataclasses; a config file (see README for the schema)
or CLI flags override individual fields. ``snapshot`` round-trips the whole
configuration into a report so a run can be reproduced exactly.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError


@dataclass(frozen=True)
class VocalThresholds:
    """Prosodic analysis parameters.

    ``theta_l`` (dB) and ``theta_p`` (semitones) gate loudness- and
    pitch-change events; segments longer than ``rate_abs_limit`` seconds or
    ``rate_rel_limit`` times the median segment duration are flagged as
    hesitant.
    """

    theta_l: float = 6.0
    theta_p: float = 2.0
    frame_ms: float = 25.0
    hop_ms: float = 10.0
    pitch_band_hz: tuple[float, float] = (60.0, 400.0)
    rate_abs_limit: float = 6.0
    rate_rel_limit: float = 3.0

    def __post_init__(self):
        values = (
            self.theta_l,
            self.theta_p,
            self.frame_ms,
            self.hop_ms,
            self.pitch_band_hz[0],
            self.pitch_band_hz[1],
            self.rate_abs_limit,
            self.rate_rel_limit,
        )
        if any(v <= 0 for v in values):
            raise ConfigError("all vocal thresholds must be positive")
        if self.pitch_band_hz[0] >= self.pitch_band_hz[1]:
            raise ConfigError("pitch band low must be below high")


@dataclass(frozen=True)
class SimPolicy:
    """Simulator policy parameters (distances in meters)."""

    cell_pitch: float = 0.25
    vision_distance: float = 1.5
    affinity_threshold: float = 0.5
    min_visible_objects: int = 2
    step_budget: int = 200
    supervisor_step_penalty: int = 2
    conjecture_enabled: bool = True

    def __post_init__(self):
        if self.cell_pitch <= 0 or self.vision_distance <= 0 or self.step_budget <= 0:
            raise ConfigError("simulator distances and budget must be positive")


@dataclass(frozen=True)
class BackendSettings:
    """How to reach the language model; ``kind`` is "mock" or "http".

    For evaluation runs the temperature stays 0 so rankings are deterministic.
    """

    kind: str = "mock"
    endpoint: str = ""
    credential_env: str = "TRUSTNAV_LLM_KEY"
    model: str = ""
    temperature: float = 0.0
    top_logprobs: int = 5
    rules_path: str = ""  # mock only; empty -> packaged default rules
    timeout_s: float = 30.0

    def __post_init__(self):
        if self.kind not in ("mock", "http"):
            raise ConfigError(f"unknown backend kind {self.kind!r}")


@dataclass(frozen=True)
class PipelineConfig:
    audio: VocalThresholds = field(default_factory=VocalThresholds)
    sim: SimPolicy = field(default_factory=SimPolicy)
    backend: BackendSettings = field(default_factory=BackendSettings)
    workers: int = 1
    seed: int = 0
    skip_errors: bool = False
    include_vocal_cues: bool = True  # --no-vocal clears this

    def replace(self, **kwargs) -> "PipelineConfig":
        return dataclasses.replace(self, **kwargs)


def _build(section_cls, data: dict, where: str):
    known = {f.name for f in dataclasses.fields(section_cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    if "pitch_band_hz" in data:
        data = dict(data, pitch_band_hz=tuple(data["pitch_band_hz"]))
    return section_cls(**data)


def config_from_dict(data: dict) -> PipelineConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    cfg = PipelineConfig(
        audio=_build(VocalThresholds, data.get("audio", {}), "audio"),
        sim=_build(SimPolicy, data.get("sim", {}), "sim"),
        backend=_build(BackendSettings, data.get("backend", {}), "backend"),
    )
    for key in ("workers", "seed", "skip_errors", "include_vocal_cues"):
        if key in data:
            cfg = cfg.replace(**{key: data[key]})
    extra = set(data) - {"audio", "sim", "backend", "workers", "seed", "skip_errors", "include_vocal_cues", "schema_version"}
    if extra:
        raise ConfigError(f"unknown top-level config keys: {sorted(extra)}")
    return cfg


def load_config(path: str | Path) -> PipelineConfig:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def snapshot(cfg: PipelineConfig) -> dict:
    """JSON-safe dict from which ``config_from_dict`` rebuilds the config."""
    data = dataclasses.asdict(cfg)
    data["audio"]["pitch_band_hz"] = list(cfg.audio.pitch_band_hz)
    return data


def apply_override(cfg: PipelineConfig, assignment: str) -> PipelineConfig:
    """Apply one ``section.field=value`` override (CLI ``--set``).

    Values parse as JSON when possible, else as bare strings, so
    ``audio.theta_l=6.5`` and ``backend.model=gpt-x`` both work.
    """
    try:
        key, raw = assignment.split("=", 1)
    except ValueError:
        raise ConfigError(f"override {assignment!r} is not KEY=VALUE") from None
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    data = snapshot(cfg)
    node = data
    parts = key.strip().split(".")
    for part in parts[:-1]:
        if part not in node or not isinstance(node[part], dict):
            raise ConfigError(f"unknown config section {part!r} in {key!r}")
        node = node[part]
    if parts[-1] not in node:
        raise ConfigError(f"unknown config field {key!r}")
    node[parts[-1]] = value
    return config_from_dict(data)
