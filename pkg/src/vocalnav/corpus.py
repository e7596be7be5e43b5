"""Synthetic corpus generation.

Clips are tone-sequence proxies for speech: each transcript word becomes a
constant-pitch tone, words are separated by short gaps and clauses by longer
ones, and uncertainty patterns are planted with exact ground truth — an
amplitude step or pitch jump inside a known word, an elongated phrase, or
disfluent wording. Every clip gets a matching environment in which the
instruction's literal final direction is correct for clean clips and wrong
for uncertain ones (with a co-occurring object on the true side), so the
navigation consequences of trusting or distrusting the command are scripted.

Everything is deterministic in (spec, seed).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import AudioClip, encode_wav
from .errors import ConfigError
from .navsim import Environment, RobotPose, SceneObject, env_to_dict

SCHEMA_VERSION = 1
SAMPLE_RATE = 16000

LU_PATTERNS = ("hedge", "repair", "filler")
VU_PATTERNS = ("pitch", "loudness", "hesitation")
BOTH_PATTERN = "filler_pitch"

# designed labels: what the packaged vocal-weighted mock rules will choose
PATTERN_LABEL = {
    "clean": "A",
    "hedge": "E",
    "repair": "E",
    "filler": "B",
    "pitch": "B",
    "loudness": "B",
    "hesitation": "B",
    BOTH_PATTERN: "B",
}
PATTERN_CATEGORY = {
    "clean": "CLEAN",
    "hedge": "LU",
    "repair": "LU",
    "filler": "LU",
    "pitch": "VU",
    "loudness": "VU",
    "hesitation": "VU",
    BOTH_PATTERN: "VU",
}

_LANDMARKS = ("drawer", "desk", "bookshelf", "dining table")
_TARGET_BUDDIES = (
    ("remote control", "television"),
    ("pillow", "bed"),
    ("keyboard", "monitor"),
    ("mouse", "laptop"),
    ("alarm clock", "nightstand"),
)

_WORD_GAP_S = 0.1
_CLAUSE_GAP_S = 0.5
_LEAD_S = 0.25
_TAIL_S = 0.25
_BASE_AMP = 0.3
_STEP_AMP_LO = 0.12
_STEP_AMP_HI = 0.72  # 20*log10(0.72/0.12) = 15.56 dB
_PITCH_JUMP_SEMITONES = 6.0
_HESITATION_WORD_S = 6.5


@dataclass(frozen=True)
class CorpusSpec:
    lu: int = 0
    vu: int = 0
    clean: int = 0
    both: int = 0
    mismatches: int = 0
    lu_pattern: str | None = None  # force a single LU pattern
    vu_pattern: str | None = None  # force a single VU pattern
    target_pair: tuple[str, str] | None = None  # force (target, buddy)
    name: str = "synthetic"

    def __post_init__(self):
        if min(self.lu, self.vu, self.clean, self.both, self.mismatches) < 0:
            raise ConfigError("corpus counts must be nonnegative")
        if self.lu + self.vu + self.clean + self.both == 0:
            raise ConfigError("corpus must contain at least one clip")
        if self.mismatches > self.lu + self.vu + self.clean + self.both:
            raise ConfigError("more mismatches than clips")
        if self.lu_pattern is not None and self.lu_pattern not in LU_PATTERNS:
            raise ConfigError(f"unknown LU pattern {self.lu_pattern!r}")
        if self.vu_pattern is not None and self.vu_pattern not in VU_PATTERNS:
            raise ConfigError(f"unknown VU pattern {self.vu_pattern!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "CorpusSpec":
        known = {
            "lu", "vu", "clean", "both", "mismatches",
            "lu_pattern", "vu_pattern", "target_pair", "name",
        }
        unknown = set(data) - known - {"schema_version"}
        if unknown:
            raise ConfigError(f"unknown corpus spec keys: {sorted(unknown)}")
        fields = {k: v for k, v in data.items() if k in known}
        if fields.get("target_pair") is not None:
            fields["target_pair"] = tuple(fields["target_pair"])
        return cls(**fields)


def _patterns_for(spec: CorpusSpec) -> list[str]:
    patterns = []
    for i in range(spec.lu):
        patterns.append(spec.lu_pattern or LU_PATTERNS[i % len(LU_PATTERNS)])
    for i in range(spec.vu):
        patterns.append(spec.vu_pattern or VU_PATTERNS[i % len(VU_PATTERNS)])
    patterns.extend([BOTH_PATTERN] * spec.both)
    patterns.extend(["clean"] * spec.clean)
    return patterns


def _template(pattern: str, landmark: str, target: str, direction: str) -> list[str]:
    wrong = "right" if direction == "left" else "left"
    final = f"the {target} is on your {direction}".split()
    prefix = f"go straight to the {landmark},".split()
    if pattern == "hedge":
        final = f"the {target} maybe is on your {direction}".split()
    elif pattern == "filler" or pattern == BOTH_PATTERN:
        final = f"err the {target} umm is on your {direction}".split()
    elif pattern == "repair":
        return (
            prefix
            + f"turn {wrong},".split()
            + f"no I mean turn {direction} and move to the {target}".split()
        )
    return prefix + final


def _plant_word_index(pattern: str, words: list[str], direction: str) -> int | None:
    """Word the audio event is planted in (the final direction word)."""
    if pattern not in ("pitch", "loudness", BOTH_PATTERN, "hesitation"):
        return None
    if pattern == "hesitation":
        return len(words) - 1
    for i in range(len(words) - 1, -1, -1):
        if words[i].strip(",.").lower() == direction:
            return i
    return len(words) - 1


@dataclass
class _ClipAudio:
    samples: np.ndarray
    word_spans: list[tuple[float, float]]
    planted_time: float | None


def _synthesize(
    words: list[str],
    pattern: str,
    base_hz: float,
    plant_idx: int | None,
    word_durs: list[float],
) -> _ClipAudio:
    sr = SAMPLE_RATE
    chunks: list[np.ndarray] = [np.zeros(int(_LEAD_S * sr))]
    spans: list[tuple[float, float]] = []
    planted_time = None
    cursor = int(_LEAD_S * sr)
    for i, word in enumerate(words):
        dur = word_durs[i]
        n = int(round(dur * sr))
        t = np.arange(n) / sr
        amp = np.full(n, _BASE_AMP)
        freq = np.full(n, base_hz)
        if plant_idx == i and pattern in ("loudness",):
            k = int(0.4 * n)
            amp[:k] = _STEP_AMP_LO
            amp[k:] = _STEP_AMP_HI
            planted_time = (cursor + k) / sr
        elif plant_idx == i and pattern in ("pitch", BOTH_PATTERN):
            k = int(0.4 * n)
            freq[k:] = base_hz * 2 ** (_PITCH_JUMP_SEMITONES / 12.0)
            planted_time = (cursor + k) / sr
        phase = 2.0 * math.pi * np.cumsum(freq) / sr
        chunks.append(amp * np.sin(phase))
        spans.append((cursor / sr, (cursor + n) / sr))
        cursor += n
        gap = _CLAUSE_GAP_S if word.endswith((",", ".")) else _WORD_GAP_S
        if i < len(words) - 1:
            g = int(gap * sr)
            chunks.append(np.zeros(g))
            cursor += g
    chunks.append(np.zeros(int(_TAIL_S * sr)))
    return _ClipAudio(
        samples=np.concatenate(chunks), word_spans=spans, planted_time=planted_time
    )


def _build_environment(
    landmark: str, target: str, buddy: str, direction: str, correct: bool
) -> Environment:
    """Open room; literal final direction correct or wrong as requested.

    The robot starts facing +x; the prefix landmark sits ahead. With the
    instruction wrong, the target and a co-occurring buddy object sit on the
    opposite side of the explore point, visible from it.
    """
    width, height = 24, 20
    walls = {(x, y) for x in range(width) for y in (0, height - 1)}
    walls |= {(x, y) for y in range(height) for x in (0, width - 1)}
    side = 1 if direction == "left" else -1  # heading 0: left is +y
    target_side = side if correct else -side
    pitch = 0.25
    mid = 10  # start row; the target sits 7 rows off it, beyond vision range

    def pos(cell: tuple[int, int]) -> tuple[float, float]:
        return ((cell[0] + 0.5) * pitch, (cell[1] + 0.5) * pitch)

    objects = [
        SceneObject(id="landmark", category=landmark, position=pos((16, mid))),
        SceneObject(id="target", category=target, position=pos((12, mid + 7 * target_side))),
    ]
    if not correct:
        objects.append(
            SceneObject(id="buddy", category=buddy, position=pos((12, mid + 5 * target_side)))
        )
    return Environment(
        width=width,
        height=height,
        occupied=frozenset(walls),
        objects=tuple(objects),
        start=RobotPose(cell=(2, mid), heading=0),
        target_id="target",
    )


def generate_corpus(spec: CorpusSpec, seed: int, out_dir: str | Path) -> dict:
    """Write audio, environments, and the manifest; return the manifest dict."""
    out = Path(out_dir)
    (out / "audio").mkdir(parents=True, exist_ok=True)
    (out / "environments").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    patterns = _patterns_for(spec)
    clips = []
    for i, pattern in enumerate(patterns):
        clip_id = f"clip_{i:04d}"
        base_hz = float(rng.integers(160, 261))
        direction = "left" if rng.integers(0, 2) == 0 else "right"
        landmark = _LANDMARKS[int(rng.integers(0, len(_LANDMARKS)))]
        target, buddy = _TARGET_BUDDIES[int(rng.integers(0, len(_TARGET_BUDDIES)))]
        if spec.target_pair is not None:
            target, buddy = spec.target_pair
        words = _template(pattern, landmark, target, direction)
        durs = [round(float(rng.uniform(0.28, 0.42)), 3) for _ in words]
        plant_idx = _plant_word_index(pattern, words, direction)
        if pattern == "hesitation" and plant_idx is not None:
            durs[plant_idx] = _HESITATION_WORD_S
        audio = _synthesize(words, pattern, base_hz, plant_idx, durs)
        wav_path = out / "audio" / f"{clip_id}.wav"
        wav_path.write_bytes(
            encode_wav(AudioClip(samples=audio.samples, sample_rate=SAMPLE_RATE))
        )
        env = _build_environment(landmark, target, buddy, direction, correct=(pattern == "clean"))
        env_id = f"env_{i:04d}"
        (out / "environments" / f"{env_id}.json").write_text(
            json.dumps(env_to_dict(env), sort_keys=True, indent=1)
        )
        planted = None
        if audio.planted_time is not None:
            kind = "pitch" if pattern in ("pitch", BOTH_PATTERN) else "loudness"
            planted = {"kind": kind, "time": audio.planted_time, "word": plant_idx}
        elif pattern == "hesitation":
            planted = {"kind": "hesitation", "word": plant_idx}
        clips.append(
            {
                "id": clip_id,
                "audio": f"audio/{clip_id}.wav",
                "category": PATTERN_CATEGORY[pattern],
                "pattern": pattern,
                "words": [
                    {"text": w, "start": s, "end": e}
                    for w, (s, e) in zip(words, audio.word_spans)
                ],
                "label": PATTERN_LABEL[pattern],
                "target": target,
                "environment": env_id,
                "planted": planted,
                "mismatch": False,
            }
        )
    # deliberate annotation mismatches: flip the ground truth away from the
    # label the packaged mock rules will choose
    for clip in clips[: spec.mismatches]:
        clip["label"] = "E" if clip["label"] != "E" else "A"
        clip["mismatch"] = True
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "name": spec.name,
        "seed": seed,
        "clips": clips,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1))
    return manifest


def load_manifest(path: str | Path) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load manifest {path}: {exc}") from exc
    if "clips" not in data or not isinstance(data["clips"], list):
        raise ConfigError(f"manifest {path} has no clip list")
    ids = [c.get("id") for c in data["clips"]]
    if len(set(ids)) != len(ids):
        raise ConfigError("manifest clip ids must be unique")
    base = path.parent
    for clip in data["clips"]:
        audio_path = base / clip["audio"]
        if not audio_path.exists():
            raise ConfigError(f"manifest references missing audio {audio_path}")
    data["_base_dir"] = str(base)
    return data


def build_conjecture_demo(out_dir: str | Path, seed: int = 7) -> dict:
    """One scripted scenario: wrong spoken turn, television on the true side.

    The target is a remote control and the instruction's pitch makes the
    final turn sound unsure. The full pipeline should recover via scene
    conjecture; a run with conjecture disabled follows the literal
    instruction and fails.
    """
    spec = CorpusSpec(
        vu=1,
        vu_pattern="pitch",
        target_pair=("remote control", "television"),
        name="conjecture-demo",
    )
    return generate_corpus(spec, seed, out_dir)
