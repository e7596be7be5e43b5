"""Evaluation reports: per-clip rows plus aggregates, emitted as JSON and CSV.

Aggregates are always a pure function of the rows, recomputable exactly
(same arithmetic over rows in clip-id order), and reports carry the full
configuration snapshot and seed so a run can be reproduced byte-for-byte.
No timestamps or host details go into a report.
"""

from __future__ import annotations

import csv
import gzip as gzip_mod
import io
import json
from dataclasses import dataclass
from pathlib import Path

from .decision import confidence_score
from .pipeline import ClipOutcome

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class EvalReport:
    kind: str  # evaluate | simulate | attack
    rows: list[dict]
    aggregates: dict
    config_snapshot: dict
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "kind": self.kind,
            "config": self.config_snapshot,
            "rows": self.rows,
            "aggregates": self.aggregates,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def outcome_row(outcome: ClipOutcome, condition: str | None = None) -> dict:
    row: dict = {
        "clip_id": outcome.clip_id,
        "category": outcome.category,
        "pattern": outcome.pattern,
        "truth": outcome.truth,
        "error": outcome.error,
        "cue_digest": outcome.cue_digest,
    }
    if condition is not None:
        row["condition"] = condition
    if outcome.decision is None:
        row.update({"chosen": None, "correct": None, "confidence": None, "cs_truth": None, "probs": None})
    else:
        dist = outcome.decision.distribution
        row.update(
            {
                "chosen": outcome.decision.chosen,
                "correct": outcome.correct,
                "confidence": outcome.decision.confidence,
                "cs_truth": confidence_score(dist, outcome.truth) if outcome.truth else None,
                "probs": {k: dist.probs[k] for k in sorted(dist.probs)},
            }
        )
    if outcome.nav is not None:
        row.update(
            {
                "success": outcome.nav.success,
                "steps": outcome.nav.steps,
                "path_distance": outcome.nav.path_distance,
                "distance_to_target": outcome.nav.distance_to_target,
                "shortest_path": outcome.nav.shortest_path,
                "spl_term": outcome.nav.spl_term,
                "supervisor_calls": outcome.nav.supervisor_calls,
            }
        )
    return row


def _scored(rows: list[dict]) -> list[dict]:
    return [r for r in rows if r.get("chosen") is not None]


def _selection_block(rows: list[dict]) -> dict:
    scored = _scored(rows)
    if not scored:
        return {"count": 0, "errors": len(rows), "pssr": None, "mean_cs": None}
    correct = sum(1 for r in scored if r["correct"])
    return {
        "count": len(scored),
        "errors": len(rows) - len(scored),
        "pssr": correct / len(scored),
        "mean_cs": sum(r["cs_truth"] for r in scored) / len(scored),
    }


def _nav_block(rows: list[dict]) -> dict:
    navs = [r for r in rows if "success" in r]
    if not navs:
        return {"count": 0}
    return {
        "count": len(navs),
        "success_rate": sum(1 for r in navs if r["success"]) / len(navs),
        "mean_steps": sum(r["steps"] for r in navs) / len(navs),
        "mean_path_distance": sum(r["path_distance"] for r in navs) / len(navs),
        "mean_distance_to_target": sum(r["distance_to_target"] for r in navs) / len(navs),
        "spl": sum(r["spl_term"] for r in navs) / len(navs),
    }


def _by_category(rows: list[dict], block) -> dict:
    cats = sorted({r["category"] for r in rows})
    out = {"overall": block(rows)}
    for cat in cats:
        out[cat] = block([r for r in rows if r["category"] == cat])
    return out


def evaluate_aggregates(rows: list[dict]) -> dict:
    return {"selection": _by_category(rows, _selection_block)}


def simulate_aggregates(rows: list[dict]) -> dict:
    return {
        "selection": _by_category(rows, _selection_block),
        "navigation": _by_category(rows, _nav_block),
    }


def attack_aggregates(rows: list[dict]) -> dict:
    base = [r for r in rows if r.get("condition") == "baseline"]
    att = [r for r in rows if r.get("condition") == "attacked"]
    digests_match = (
        len(base) == len(att)
        and all(
            b["cue_digest"] == a["cue_digest"]
            for b, a in zip(
                sorted(base, key=lambda r: r["clip_id"]),
                sorted(att, key=lambda r: r["clip_id"]),
            )
        )
    )
    out = {
        "baseline": {"selection": _by_category(base, _selection_block)},
        "attacked": {"selection": _by_category(att, _selection_block)},
        "vocal_reports_identical": digests_match,
    }
    if any("success" in r for r in rows):
        out["baseline"]["navigation"] = _by_category(base, _nav_block)
        out["attacked"]["navigation"] = _by_category(att, _nav_block)
    decreases = {}
    b_sel = out["baseline"]["selection"]["overall"]
    a_sel = out["attacked"]["selection"]["overall"]
    if b_sel["pssr"] is not None and a_sel["pssr"] is not None:
        decreases["pssr"] = b_sel["pssr"] - a_sel["pssr"]
    if "navigation" in out["baseline"]:
        b_nav = out["baseline"]["navigation"]["overall"]
        a_nav = out["attacked"]["navigation"]["overall"]
        if b_nav.get("count"):
            decreases["distance_to_target"] = (
                b_nav["mean_distance_to_target"] - a_nav["mean_distance_to_target"]
            )
            decreases["spl"] = b_nav["spl"] - a_nav["spl"]
    out["decrease"] = decreases
    return out


def recompute_aggregates(report: EvalReport) -> dict:
    if report.kind == "evaluate":
        return evaluate_aggregates(report.rows)
    if report.kind == "simulate":
        return simulate_aggregates(report.rows)
    if report.kind == "attack":
        return attack_aggregates(report.rows)
    raise ValueError(f"unknown report kind {report.kind!r}")


_CSV_ORDER = [
    "clip_id", "condition", "category", "pattern", "truth", "chosen", "correct",
    "confidence", "cs_truth", "success", "steps", "path_distance",
    "distance_to_target", "shortest_path", "spl_term", "supervisor_calls",
    "error",
]


def rows_csv(rows: list[dict]) -> str:
    fields = [f for f in _CSV_ORDER if any(f in r for r in rows)]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row.get(k) for k in fields})
    return buf.getvalue()


def aggregates_csv(aggregates: dict) -> str:
    """Flatten the aggregate tree into (path, value) lines."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["metric", "value"])

    def walk(prefix: str, node):
        if isinstance(node, dict):
            for key in sorted(node):
                walk(f"{prefix}.{key}" if prefix else str(key), node[key])
        else:
            writer.writerow([prefix, node])

    walk("", aggregates)
    return buf.getvalue()


def write_report(report: EvalReport, out_dir: str | Path, use_gzip: bool = False) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = report.to_json()
    if use_gzip:
        json_path = out / "report.json.gz"
        # fixed mtime so identical runs produce identical bytes
        json_path.write_bytes(
            gzip_mod.compress(payload.encode(), mtime=0)
        )
    else:
        json_path = out / "report.json"
        json_path.write_text(payload)
    (out / "rows.csv").write_text(rows_csv(report.rows))
    (out / "aggregates.csv").write_text(aggregates_csv(report.aggregates))
    return json_path


def load_report(path: str | Path) -> EvalReport:
    path = Path(path)
    if path.suffix == ".gz":
        data = json.loads(gzip_mod.decompress(path.read_bytes()).decode())
    else:
        data = json.loads(path.read_text())
    return EvalReport(
        kind=data["kind"],
        rows=data["rows"],
        aggregates=data["aggregates"],
        config_snapshot=data["config"],
        schema_version=data.get("schema_version", SCHEMA_VERSION),
    )
