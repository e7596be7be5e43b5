"""Deterministic token attack: swap uncertainty wording for confident
phrasing and measure how far the pipeline's decisions degrade.

The attack rewrites only the transcript; audio bytes are untouched, so the
vocal cue report of every clip must be byte-identical before and after. A
pipeline that weighs vocal signals therefore keeps the decisions those
signals drive, which is the robustness property this module measures.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .language import FILLERS, HEDGES, Transcript, transform_transcript

_DATA_DIR = Path(__file__).parent / "data"


@dataclass(frozen=True)
class AttackLexicon:
    """Hedge phrase -> confident replacement (empty tuple deletes)."""

    replacements: dict[tuple[str, ...], tuple[str, ...]]
    delete_fillers: bool = True
    collapse_repairs: bool = True

    def __post_init__(self):
        lexicon_tokens = {tok for phrase in HEDGES for tok in phrase} | {
            tok for phrase in FILLERS for tok in phrase
        }
        for phrase, replacement in self.replacements.items():
            clash = set(replacement) & lexicon_tokens
            if clash:
                raise ConfigError(
                    f"replacement for {' '.join(phrase)!r} reintroduces lexicon tokens {sorted(clash)}"
                )

    @classmethod
    def from_file(cls, path: str | Path) -> "AttackLexicon":
        data = json.loads(Path(path).read_text())
        replacements = {
            tuple(phrase.split()): tuple(new.split())
            for phrase, new in data.get("replacements", {}).items()
        }
        return cls(
            replacements=replacements,
            delete_fillers=bool(data.get("delete_fillers", True)),
            collapse_repairs=bool(data.get("collapse_repairs", True)),
        )

    @classmethod
    def default(cls) -> "AttackLexicon":
        return cls.from_file(_DATA_DIR / "attack_lexicon.json")


@dataclass(frozen=True)
class AttackResult:
    metric: str
    baseline: float
    attacked: float

    @property
    def decrease(self) -> float:
        return self.baseline - self.attacked


def token_attack(t: Transcript, lexicon: AttackLexicon | None = None) -> Transcript:
    """Confident paraphrase of a transcript.

    Hedges are swapped per the lexicon (unlisted hedges are deleted),
    fillers are deleted, repairs collapse to their replacement clause.
    Surviving words keep their timestamps. Idempotent by construction: the
    rewritten text contains no lexicon tokens.
    """
    lexicon = lexicon or AttackLexicon.default()
    hedge_map: dict[tuple[str, ...], tuple[str, ...]] = {phrase: () for phrase in HEDGES}
    hedge_map.update(lexicon.replacements)
    return transform_transcript(
        t,
        hedge_map=hedge_map,
        drop_fillers=lexicon.delete_fillers,
        collapse_repairs=lexicon.collapse_repairs,
    )


def run_robustness(manifest, cfg, backend, envs_dir=None, lexicon=None):
    """Baseline-vs-attacked pipeline comparison; see ``pipeline.run_robustness``."""
    from .pipeline import run_robustness as _run

    return _run(manifest, cfg, backend, envs_dir=envs_dir, lexicon=lexicon)
