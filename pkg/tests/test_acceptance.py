"""Acceptance suite: eight end-to-end criteria, one pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as they
print. Every tolerance is pinned here; nothing is deferred to calibration.
"""

import json
import math
import random
import time
from contextlib import contextmanager

import pytest

from vocalnav.audio import AudioClip, loudness_track, pitch_track
from vocalnav.backends import LABELS, MockBackend
from vocalnav.cli import main
from vocalnav.config import PipelineConfig, VocalThresholds
from vocalnav.corpus import CorpusSpec, build_conjecture_demo, generate_corpus, load_manifest
from vocalnav.decision import confidence_score
from vocalnav.navsim import EpisodeResult, episode_metrics, spl_term
from vocalnav.pipeline import analyze_clip, run_clips, run_robustness
from vocalnav.prompting import TokenDistribution

from conftest import SR, sine
from test_navsim import enumerate_shortest

import numpy as np


@contextmanager
def criterion(num: int, desc: str):
    try:
        yield
    except BaseException:
        print(f"[criterion {num}] {desc}: FAIL", flush=True)
        raise
    print(f"[criterion {num}] {desc}: PASS", flush=True)


def test_criterion_1_vocal_event_recovery(tmp_path):
    with criterion(1, "planted vocal events localized within 2 hops, under 10 s"):
        cfg = PipelineConfig()
        dirs = []
        for pattern, seed in (("pitch", 101), ("loudness", 202)):
            out = tmp_path / pattern
            generate_corpus(CorpusSpec(vu=25, vu_pattern=pattern), seed, out)
            dirs.append(out)
        jobs = []
        for out in dirs:
            manifest = load_manifest(out)
            for clip in manifest["clips"]:
                jobs.append((clip, out))
        assert len(jobs) == 50
        started = time.perf_counter()
        hits = 0
        for clip, base in jobs:
            analysis = analyze_clip(clip, base, cfg)
            planted = clip["planted"]
            event = (
                analysis.report.pitch_event
                if planted["kind"] == "pitch"
                else analysis.report.loudness_event
            )
            if event is not None and abs(event.time - planted["time"]) <= 0.020:
                hits += 1
        elapsed = time.perf_counter() - started
        assert hits / len(jobs) >= 0.95, f"recovered only {hits}/50"
        assert elapsed < 10.0, f"extraction took {elapsed:.2f}s"


def test_criterion_2_loudness_calibration():
    with criterion(2, "dBFS calibration and exact gain-shift law"):
        cfg = VocalThresholds()
        base = sine(440, 2.0, 1.0)
        track = loudness_track(AudioClip(samples=base, sample_rate=SR), cfg)
        assert np.all(np.abs(track.values - (-3.01)) <= 0.1)
        for gain in (0.1, 0.5, 2**-0.5):
            scaled = loudness_track(AudioClip(samples=base * gain, sample_rate=SR), cfg)
            shift = scaled.values - track.values
            expected = 20.0 * math.log10(gain)
            assert np.all(np.abs(shift - expected) <= 0.01), f"gain {gain} violates shift law"


def test_criterion_3_confidence_score():
    with criterion(3, "confidence value and strict monotonicity"):
        uniform = TokenDistribution(probs={label: 0.2 for label in LABELS})
        assert abs(confidence_score(uniform, "A") - 1.0 / math.log(5.0)) <= 1e-6
        assert abs(confidence_score(uniform, "A") - 0.6213349) <= 1e-6

        rng = random.Random(31)
        points = []
        for _ in range(1000):
            raw = [rng.random() + 1e-6 for _ in range(5)]
            total = sum(raw)
            dist = TokenDistribution(probs={l: v / total for l, v in zip(LABELS, raw)})
            points.append((dist.probs["B"], confidence_score(dist, "B")))
        for i in range(len(points)):
            for j in range(i + 1, len(points)):
                p1, c1 = points[i]
                p2, c2 = points[j]
                if p1 < p2:
                    assert c1 < c2
                elif p2 < p1:
                    assert c2 < c1


def test_criterion_4_spl_oracle_equivalence():
    with criterion(4, "shortest paths match enumeration; SPL arithmetic exact"):
        from vocalnav.navsim import Environment, RobotPose, shortest_path

        rng = random.Random(77)
        checked = 0
        while checked < 100:
            w, h = rng.randint(2, 6), rng.randint(2, 6)
            cells = [(x, y) for x in range(w) for y in range(h)]
            walls = {c for c in cells if rng.random() < 0.3}
            frees = [c for c in cells if c not in walls]
            if len(frees) < 2:
                continue
            frm, to = rng.sample(frees, 2)
            env = Environment.__new__(Environment)
            object.__setattr__(env, "width", w)
            object.__setattr__(env, "height", h)
            object.__setattr__(env, "occupied", frozenset(walls))
            object.__setattr__(env, "objects", ())
            object.__setattr__(env, "start", RobotPose(cell=frm, heading=0))
            object.__setattr__(env, "target_id", "t")
            object.__setattr__(env, "cell_pitch", 0.25)
            expected = enumerate_shortest(env, frm, to)
            got = shortest_path(env, frm, to)
            assert (math.isinf(expected) and math.isinf(got)) or got == expected
            checked += 1

        def episode(success, path, shortest):
            return EpisodeResult(
                success=success,
                steps=0,
                path_distance=path,
                distance_to_target=0.0,
                shortest_path=shortest,
                spl_term=spl_term(success, path, shortest),
            )

        assert abs(episode_metrics([episode(True, 2.0, 2.0)]).spl - 1.0) <= 1e-9
        assert abs(episode_metrics([episode(True, 4.0, 2.0)]).spl - 0.5) <= 1e-9
        mixed = episode_metrics([episode(True, 2.0, 2.0), episode(False, 1.0, 2.0)])
        assert abs(mixed.spl - 0.5) <= 1e-9
        assert abs(mixed.success_rate - 0.5) <= 1e-9


def test_criterion_5_conjecture_scenario(tmp_path):
    with criterion(5, "scripted television scenario: conjecture succeeds, blind run fails"):
        demo = tmp_path / "demo"
        build_conjecture_demo(demo, seed=7)
        manifest = load_manifest(demo)
        started = time.perf_counter()
        full = run_clips(
            manifest, PipelineConfig(), MockBackend.default(), envs_dir=demo / "environments"
        )
        assert len(full) == 1
        assert full[0].nav.success, "full pipeline must reach the remote control"
        assert full[0].nav.distance_to_target <= 1.5

        import dataclasses

        cfg = PipelineConfig()
        blind_cfg = cfg.replace(sim=dataclasses.replace(cfg.sim, conjecture_enabled=False))
        blind = run_clips(
            manifest, blind_cfg, MockBackend.default(), envs_dir=demo / "environments"
        )
        assert not blind[0].nav.success, "blind run must follow the wrong turn and fail"
        elapsed = time.perf_counter() - started
        assert elapsed < 1.0, f"scenario took {elapsed:.2f}s"


def test_criterion_6_attack_robustness_ordering(tmp_path):
    with criterion(6, "vocal pipeline loses no more PSSR than text-only under attack"):
        out = tmp_path / "mixed"
        generate_corpus(CorpusSpec(lu=30, vu=30, clean=20, both=20), 404, out)
        manifest = load_manifest(out)
        assert len(manifest["clips"]) == 100
        backend = MockBackend.default()

        base_full, att_full, res_full = run_robustness(manifest, PipelineConfig(), backend)
        for b, a in zip(base_full, att_full):
            assert b.cue_digest == a.cue_digest, f"cue report moved for {b.clip_id}"

        text_cfg = PipelineConfig().replace(include_vocal_cues=False)
        _, _, res_text = run_robustness(manifest, text_cfg, backend)

        dec_full = next(r for r in res_full if r.metric == "pssr").decrease
        dec_text = next(r for r in res_text if r.metric == "pssr").decrease
        assert dec_full <= dec_text, f"full {dec_full} vs text-only {dec_text}"
        assert dec_text > dec_full, "ordering should be strict on a mixed corpus"


def test_criterion_7_end_to_end_determinism(tmp_path):
    with criterion(7, "evaluate and simulate reports byte-identical across 3 runs"):
        corpus = tmp_path / "corpus"
        generate_corpus(CorpusSpec(lu=3, vu=3, clean=2, both=1), 42, corpus)
        for command in ("evaluate", "simulate"):
            blobs = []
            for run in range(3):
                out = tmp_path / f"{command}_{run}"
                code = main(
                    [
                        command,
                        "--manifest",
                        str(corpus),
                        "--out",
                        str(out),
                        "--seed",
                        "42",
                    ]
                )
                assert code == 0
                blobs.append((out / "report.json").read_bytes())
            assert blobs[0] == blobs[1] == blobs[2], f"{command} reports differ"


def test_criterion_8_construction_exact_pssr(tmp_path):
    with criterion(8, "agreement corpus PSSR 1.0; four-mismatch variant exactly 0.9"):
        spec = CorpusSpec(lu=12, vu=12, clean=8, both=8)
        agree = tmp_path / "agree"
        generate_corpus(spec, 2024, agree)
        manifest = load_manifest(agree)
        assert len(manifest["clips"]) == 40
        outcomes = run_clips(manifest, PipelineConfig(), MockBackend.default())
        pssr = sum(1 for o in outcomes if o.correct) / len(outcomes)
        assert pssr == 1.0

        import dataclasses

        mismatched = tmp_path / "mismatch"
        generate_corpus(dataclasses.replace(spec, mismatches=4), 2024, mismatched)
        manifest2 = load_manifest(mismatched)
        outcomes2 = run_clips(manifest2, PipelineConfig(), MockBackend.default())
        pssr2 = sum(1 for o in outcomes2 if o.correct) / len(outcomes2)
        assert pssr2 == 0.9
