"""Command-line interface.

Subcommands: generate, analyze, decide, evaluate, simulate, attack, report.
Exit codes: 0 success, 1 evaluation failure, 2 I/O or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .attack import AttackLexicon
from .backends import make_backend
from .config import PipelineConfig, apply_override, load_config, snapshot
from .corpus import CorpusSpec, build_conjecture_demo, generate_corpus, load_manifest
from .errors import BackendError, ConfigError, VocalNavError
from .pipeline import analyze_clip, decide_clip, run_clips, run_robustness
from .reports import (
    EvalReport,
    attack_aggregates,
    evaluate_aggregates,
    load_report,
    outcome_row,
    recompute_aggregates,
    simulate_aggregates,
    write_report,
)

EXIT_OK = 0
EXIT_EVAL = 1
EXIT_IO = 2


def _common_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="run seed recorded in reports")
    parser.add_argument("--backend", choices=["mock", "http"], default=None)
    parser.add_argument("--rules", help="mock rule table JSON (mock backend only)")
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--gzip", action="store_true", help="gzip the JSON report")
    parser.add_argument("--skip-errors", action="store_true", help="record per-clip failures instead of aborting")
    parser.add_argument("--no-vocal", action="store_true", help="drop vocal cues from prompts")
    parser.add_argument("--no-vision", action="store_true", help="disable scene-direction conjecture")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config field, e.g. --set audio.theta_l=6.5",
    )


def _build_config(args, evaluation: bool = False) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    for assignment in getattr(args, "overrides", []):
        cfg = apply_override(cfg, assignment)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if args.workers is not None:
        cfg = cfg.replace(workers=args.workers)
    if args.backend is not None or args.rules:
        backend = cfg.backend
        kind = args.backend or backend.kind
        import dataclasses

        backend = dataclasses.replace(backend, kind=kind, rules_path=args.rules or backend.rules_path)
        cfg = cfg.replace(backend=backend)
    if args.skip_errors:
        cfg = cfg.replace(skip_errors=True)
    if args.no_vocal:
        cfg = cfg.replace(include_vocal_cues=False)
    if args.no_vision:
        import dataclasses

        cfg = cfg.replace(sim=dataclasses.replace(cfg.sim, conjecture_enabled=False))
    if evaluation and cfg.backend.temperature != 0.0:
        raise ConfigError("evaluation runs require backend temperature 0")
    return cfg


def _snapshot(cfg: PipelineConfig, command: str, **extra) -> dict:
    data = {"command": command, "config": snapshot(cfg), "seed": cfg.seed, "version": __version__}
    data.update(extra)
    return data


def _print_selection(aggregates: dict):
    sel = aggregates["selection"]
    for cat in sorted(sel):
        block = sel[cat]
        if block["pssr"] is None:
            print(f"  {cat:8s} n={block['count']}  (no scored clips)")
        else:
            print(
                f"  {cat:8s} n={block['count']:<4d} PSSR={block['pssr']:.4f}  CS={block['mean_cs']:.4f}"
            )


def _print_navigation(aggregates: dict):
    nav = aggregates.get("navigation")
    if not nav:
        return
    for cat in sorted(nav):
        block = nav[cat]
        if not block.get("count"):
            continue
        print(
            f"  {cat:8s} n={block['count']:<4d} SR={block['success_rate']:.3f} "
            f"steps={block['mean_steps']:.1f} path={block['mean_path_distance']:.2f}m "
            f"dist={block['mean_distance_to_target']:.2f}m SPL={block['spl']:.4f}"
        )


def cmd_generate(args) -> int:
    if args.spec:
        spec = CorpusSpec.from_dict(json.loads(Path(args.spec).read_text()))
    elif args.demo:
        out = args.out or "conjecture_demo"
        build_conjecture_demo(out, seed=args.seed if args.seed is not None else 7)
        print(f"wrote conjecture demo corpus to {out}")
        return EXIT_OK
    else:
        spec = CorpusSpec(
            lu=args.lu, vu=args.vu, clean=args.clean, both=args.both, mismatches=args.mismatches
        )
    if not args.out:
        raise ConfigError("generate needs --out")
    seed = args.seed if args.seed is not None else 0
    manifest = generate_corpus(spec, seed, args.out)
    print(f"wrote {len(manifest['clips'])} clips to {args.out} (seed {seed})")
    return EXIT_OK


def _manifest_and_entry(args, cfg):
    manifest = load_manifest(args.manifest)
    entry = next((c for c in manifest["clips"] if c["id"] == args.clip), None)
    if entry is None:
        raise ConfigError(f"clip {args.clip!r} not in manifest")
    return manifest, entry


def cmd_analyze(args) -> int:
    cfg = _build_config(args)
    manifest, entry = _manifest_and_entry(args, cfg)
    analysis = analyze_clip(entry, Path(manifest["_base_dir"]), cfg)
    cues = analysis.cues
    out = {
        "clip_id": entry["id"],
        "transcript": analysis.transcript.text,
        "vocal_report": analysis.report.to_dict(),
        "aligned": {
            "loudness_word": cues.loudness_word,
            "pitch_word": cues.pitch_word,
            "hesitant_segments": list(cues.hesitant_segments),
            "ambiguous_hits": list(cues.semantic.ambiguous_hits),
            "repairs": [list(map(list, r)) for r in cues.semantic.repairs],
            "hesitations": list(cues.semantic.hesitations),
        },
    }
    print(json.dumps(out, indent=1, sort_keys=True))
    return EXIT_OK


def cmd_decide(args) -> int:
    cfg = _build_config(args)
    manifest, entry = _manifest_and_entry(args, cfg)
    backend = make_backend(cfg.backend)
    analysis = analyze_clip(entry, Path(manifest["_base_dir"]), cfg)
    decision, ob = decide_clip(analysis, entry["id"], cfg, backend)
    print(f"clip {entry['id']}")
    for option in ob.options.options:
        marker = "*" if option.label == decision.chosen else " "
        prob = decision.distribution.probs[option.label]
        print(f" {marker} {option.label} p={prob:.4f} {option.text}")
    print(f"chosen: {decision.chosen}  confidence: {decision.confidence:.4f}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _build_config(args, evaluation=True)
    manifest = load_manifest(args.manifest)
    backend = make_backend(cfg.backend)
    outcomes = run_clips(manifest, cfg, backend)
    rows = [outcome_row(o) for o in outcomes]
    aggregates = evaluate_aggregates(rows)
    report = EvalReport(
        kind="evaluate",
        rows=rows,
        aggregates=aggregates,
        config_snapshot=_snapshot(cfg, "evaluate", manifest=str(args.manifest)),
    )
    if args.out:
        path = write_report(report, args.out, use_gzip=args.gzip)
        print(f"report: {path}")
    print("selection success:")
    _print_selection(aggregates)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _build_config(args, evaluation=True)
    manifest = load_manifest(args.manifest)
    envs_dir = Path(args.environments) if args.environments else Path(manifest["_base_dir"]) / "environments"
    if not envs_dir.is_dir():
        raise ConfigError(f"environment directory {envs_dir} not found")
    backend = make_backend(cfg.backend)
    outcomes = run_clips(manifest, cfg, backend, envs_dir=envs_dir)
    if args.trajectories:
        from .navsim import load_environment, trajectory_to_dict

        traj_dir = Path(args.trajectories)
        traj_dir.mkdir(parents=True, exist_ok=True)
        by_id = {c["id"]: c for c in manifest["clips"]}
        for outcome in outcomes:
            if outcome.trajectory is None:
                continue
            env = load_environment(envs_dir / f"{by_id[outcome.clip_id]['environment']}.json")
            (traj_dir / f"{outcome.clip_id}.json").write_text(
                json.dumps(trajectory_to_dict(outcome.trajectory, env), sort_keys=True, indent=1)
            )
    rows = [outcome_row(o) for o in outcomes]
    aggregates = simulate_aggregates(rows)
    report = EvalReport(
        kind="simulate",
        rows=rows,
        aggregates=aggregates,
        config_snapshot=_snapshot(
            cfg, "simulate", manifest=str(args.manifest), environments=str(envs_dir)
        ),
    )
    if args.out:
        path = write_report(report, args.out, use_gzip=args.gzip)
        print(f"report: {path}")
    print("selection success:")
    _print_selection(aggregates)
    print("navigation:")
    _print_navigation(aggregates)
    return EXIT_OK


def cmd_attack(args) -> int:
    cfg = _build_config(args, evaluation=True)
    manifest = load_manifest(args.manifest)
    backend = make_backend(cfg.backend)
    lexicon = AttackLexicon.from_file(args.lexicon) if args.lexicon else None
    envs_dir = None
    if args.environments:
        envs_dir = Path(args.environments)
    else:
        candidate = Path(manifest["_base_dir"]) / "environments"
        if candidate.is_dir() and not args.no_sim:
            envs_dir = candidate
    baseline, attacked, results = run_robustness(
        manifest, cfg, backend, envs_dir=envs_dir, lexicon=lexicon
    )
    rows = [outcome_row(o, condition="baseline") for o in baseline]
    rows += [outcome_row(o, condition="attacked") for o in attacked]
    aggregates = attack_aggregates(rows)
    report = EvalReport(
        kind="attack",
        rows=rows,
        aggregates=aggregates,
        config_snapshot=_snapshot(cfg, "attack", manifest=str(args.manifest)),
    )
    if args.out:
        path = write_report(report, args.out, use_gzip=args.gzip)
        print(f"report: {path}")
    for res in results:
        print(
            f"  {res.metric:20s} baseline={res.baseline:.4f} attacked={res.attacked:.4f} "
            f"decrease={res.decrease:+.4f}"
        )
    print(f"  vocal reports identical: {aggregates['vocal_reports_identical']}")
    return EXIT_OK


def cmd_report(args) -> int:
    report = load_report(args.report)
    recomputed = recompute_aggregates(report)
    if recomputed != report.aggregates:
        print("aggregates do NOT match the per-clip rows", file=sys.stderr)
        return EXIT_EVAL
    print(f"kind: {report.kind}; rows: {len(report.rows)}; aggregates verified")
    if report.kind == "attack":
        base = report.aggregates["baseline"]["selection"]["overall"]
        att = report.aggregates["attacked"]["selection"]["overall"]
        print(f"  PSSR baseline={base['pssr']:.4f} attacked={att['pssr']:.4f}")
    elif "selection" in report.aggregates:
        _print_selection(report.aggregates)
        _print_navigation(report.aggregates)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vocalnav",
        description="Trust-aware audio-guided navigation evaluation harness",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthesize a corpus with audio and environments")
    p.add_argument("--spec", help="corpus spec JSON file")
    p.add_argument("--lu", type=int, default=0)
    p.add_argument("--vu", type=int, default=0)
    p.add_argument("--clean", type=int, default=0)
    p.add_argument("--both", type=int, default=0)
    p.add_argument("--mismatches", type=int, default=0)
    p.add_argument("--demo", action="store_true", help="write the scripted conjecture scenario")
    _common_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("analyze", help="print vocal and semantic cues for one clip")
    p.add_argument("--manifest", required=True)
    p.add_argument("--clip", required=True)
    _common_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("decide", help="show options and the chosen action for one clip")
    p.add_argument("--manifest", required=True)
    p.add_argument("--clip", required=True)
    _common_flags(p)
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("evaluate", help="selection-success evaluation over a manifest")
    p.add_argument("--manifest", required=True)
    _common_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="full decide-and-navigate evaluation")
    p.add_argument("--manifest", required=True)
    p.add_argument("--environments", help="directory of environment JSON files")
    p.add_argument("--trajectories", help="directory to dump per-clip trajectory JSON")
    _common_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("attack", help="token-attack robustness comparison")
    p.add_argument("--manifest", required=True)
    p.add_argument("--environments")
    p.add_argument("--lexicon", help="attack lexicon JSON")
    p.add_argument("--no-sim", action="store_true", help="skip navigation metrics")
    _common_flags(p)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("report", help="verify and summarize a saved report")
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except BackendError as exc:
        detail = f" (raw reply: {exc.raw_reply!r})" if exc.raw_reply else ""
        print(f"backend error: {exc}{detail}", file=sys.stderr)
        return EXIT_EVAL
    except VocalNavError as exc:
        print(f"evaluation error: {exc}", file=sys.stderr)
        return EXIT_EVAL


if __name__ == "__main__":
    sys.exit(main())
