"""End-to-end orchestration: manifest in, decisions and metrics out.

Each clip flows audio -> vocal cues -> transcript flags -> alignment ->
prompt -> options -> label distribution -> decision, and optionally on into
the simulator. Clips are processed independently (optionally by a thread
pool) and results are merged in clip-id order, so output never depends on
scheduling.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .attack import AttackLexicon, AttackResult, token_attack
from .audio import VocalCueReport, activity_segments, decode_audio, extract_vocal_cues
from .backends import Backend
from .config import PipelineConfig
from .decision import Decision, decide
from .errors import ConfigError, VocalNavError
from .language import AlignedCueSet, Transcript, align, parse_transcript
from .navsim import (
    CoOccurrenceTable,
    EpisodeResult,
    compile_plan,
    execute,
    load_environment,
)
from .prompting import build_prompt, request_options, score_options


@dataclass(frozen=True)
class ClipAnalysis:
    transcript: Transcript
    segments: list[tuple[float, float]]
    report: VocalCueReport
    cues: AlignedCueSet


@dataclass(frozen=True)
class ClipOutcome:
    clip_id: str
    category: str
    pattern: str
    truth: str
    decision: Decision | None
    cue_digest: str
    nav: EpisodeResult | None = None
    trajectory: object | None = None  # navsim.Trajectory when simulated
    error: str | None = None

    @property
    def correct(self) -> bool | None:
        if self.decision is None:
            return None
        return self.decision.chosen == self.truth


def analyze_clip(
    entry: dict, base_dir: Path, cfg: PipelineConfig, transcript: Transcript | None = None
) -> ClipAnalysis:
    """Audio and transcript analysis for one manifest entry.

    ``transcript`` overrides the manifest words (used for attacked text);
    the vocal cue report always comes from the unmodified audio bytes.
    """
    clip = decode_audio((base_dir / entry["audio"]).read_bytes())
    t = transcript if transcript is not None else parse_transcript(entry, clip_id=entry["id"])
    segments = activity_segments(clip, cfg.audio)
    report = extract_vocal_cues(clip, segments, cfg.audio)
    cues = align(t, segments, report)
    return ClipAnalysis(transcript=t, segments=segments, report=report, cues=cues)


def cue_digest(report: VocalCueReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True)


def decide_clip(
    analysis: ClipAnalysis, clip_id: str, cfg: PipelineConfig, backend: Backend
) -> tuple[Decision, "OptionBundle"]:
    bundle = build_prompt(
        analysis.transcript, analysis.cues, include_vocal=cfg.include_vocal_cues
    )
    options = request_options(bundle, backend)
    dist = score_options(bundle, options, backend)
    return decide(clip_id, dist), OptionBundle(bundle=bundle, options=options)


@dataclass(frozen=True)
class OptionBundle:
    bundle: object
    options: object


def _process_clip(
    entry: dict,
    base_dir: Path,
    cfg: PipelineConfig,
    backend: Backend,
    envs_dir: Path | None,
    table: CoOccurrenceTable | None,
    transcript: Transcript | None = None,
) -> ClipOutcome:
    clip_id = entry["id"]
    category = entry.get("category", "")
    pattern = entry.get("pattern", "")
    truth = entry.get("label", "")
    try:
        analysis = analyze_clip(entry, base_dir, cfg, transcript=transcript)
        decision, ob = decide_clip(analysis, clip_id, cfg, backend)
        nav = None
        trajectory = None
        if envs_dir is not None:
            env_id = entry.get("environment")
            if not env_id:
                raise ConfigError(f"clip {clip_id} names no environment")
            env = load_environment(envs_dir / f"{env_id}.json")
            chosen_option = ob.options[decision.chosen]
            commands = compile_plan(chosen_option)
            trajectory, nav = execute(commands, env, cfg.sim, table=table)
        return ClipOutcome(
            clip_id=clip_id,
            category=category,
            pattern=pattern,
            truth=truth,
            decision=decision,
            cue_digest=cue_digest(analysis.report),
            nav=nav,
            trajectory=trajectory,
        )
    except VocalNavError as exc:
        if not cfg.skip_errors:
            raise
        return ClipOutcome(
            clip_id=clip_id,
            category=category,
            pattern=pattern,
            truth=truth,
            decision=None,
            cue_digest="",
            error=str(exc),
        )


def run_clips(
    manifest: dict,
    cfg: PipelineConfig,
    backend: Backend,
    envs_dir: Path | None = None,
    transcripts: dict[str, Transcript] | None = None,
) -> list[ClipOutcome]:
    """Process every clip; output is sorted by clip id regardless of workers."""
    base_dir = Path(manifest.get("_base_dir", "."))
    table = CoOccurrenceTable.default() if envs_dir is not None else None
    entries = sorted(manifest["clips"], key=lambda c: c["id"])

    def work(entry: dict) -> ClipOutcome:
        t = transcripts.get(entry["id"]) if transcripts else None
        return _process_clip(entry, base_dir, cfg, backend, envs_dir, table, transcript=t)

    if cfg.workers <= 1:
        outcomes = [work(e) for e in entries]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(work, entries))
    return sorted(outcomes, key=lambda o: o.clip_id)


def attacked_transcripts(
    manifest: dict, lexicon: AttackLexicon | None = None
) -> dict[str, Transcript]:
    """Confidently paraphrased transcript per clip id."""
    out = {}
    for entry in manifest["clips"]:
        t = parse_transcript(entry, clip_id=entry["id"])
        out[entry["id"]] = token_attack(t, lexicon)
    return out


def run_robustness(
    manifest: dict,
    cfg: PipelineConfig,
    backend: Backend,
    envs_dir: Path | None = None,
    lexicon: AttackLexicon | None = None,
) -> tuple[list[ClipOutcome], list[ClipOutcome], list[AttackResult]]:
    """Run the pipeline on original and attacked transcripts and diff metrics.

    Audio bytes are identical across the two runs; the per-clip cue digests
    in the outcomes let callers verify the vocal reports did not move.
    """
    baseline = run_clips(manifest, cfg, backend, envs_dir=envs_dir)
    attacked = run_clips(
        manifest, cfg, backend, envs_dir=envs_dir, transcripts=attacked_transcripts(manifest, lexicon)
    )

    def pssr_of(outcomes: list[ClipOutcome]) -> float:
        scored = [o for o in outcomes if o.decision is not None]
        if not scored:
            return 0.0
        return sum(1 for o in scored if o.correct) / len(scored)

    results = [AttackResult(metric="pssr", baseline=pssr_of(baseline), attacked=pssr_of(attacked))]
    if envs_dir is not None:
        def nav_mean(outcomes: list[ClipOutcome], field: str) -> float:
            navs = [o.nav for o in outcomes if o.nav is not None]
            if not navs:
                return 0.0
            return sum(getattr(n, field) for n in navs) / len(navs)

        results.append(
            AttackResult(
                metric="distance_to_target",
                baseline=nav_mean(baseline, "distance_to_target"),
                attacked=nav_mean(attacked, "distance_to_target"),
            )
        )
        results.append(
            AttackResult(
                metric="spl",
                baseline=nav_mean(baseline, "spl_term"),
                attacked=nav_mean(attacked, "spl_term"),
            )
        )
    return baseline, attacked, results
