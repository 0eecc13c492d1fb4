"""Run the reproduction suite and write its artifacts.

Layout of ``out``::

    summary.txt          fixed-width table, one row per construction
    summary.json         the same rows plus pass flags and notes
    scenes/<slug>.json   every scene that was verified
    reports/<slug>.json  one report per verdict
"""

import json
import re
import sys

from .scene import dumps, emit_scene, report_text
from .suite import run_suite


def slug(name):
    return re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")


def _value(row):
    v = row["value"]
    return "-" if v is None else f"{v:.4g}"


def summary_table(checks):
    head = f"{'construction':<34} {'bodies':>6} {'verdict':<13} {'slack/miss':>11} {'ms':>10}  met"
    lines = [head, "-" * len(head)]
    for c in checks:
        for r in c.rows:
            lines.append(f"{r['construction']:<34} {r['bodies']:>6} {r['verdict']:<13} {_value(r):>11} "
                         f"{r['timings_ms']['total']:>10.1f}  {'yes' if r['met'] else 'NO'}")
    lines.append("")
    for c in checks:
        lines.append(f"{c.key:<10} {'PASS' if c.passed else 'FAIL'}  {c.title}")
        for n in c.notes:
            lines.append(f"           note: {n}")
    return "\n".join(lines) + "\n"


def write_artifacts(out, checks):
    (out / "scenes").mkdir(parents=True, exist_ok=True)
    (out / "reports").mkdir(parents=True, exist_ok=True)
    for c in checks:
        for name, sc in c.scenes.items():
            (out / "scenes" / f"{slug(name)}.json").write_text(emit_scene(sc), encoding="utf-8")
        for name, rep in c.reports.items():
            (out / "reports" / f"{slug(name)}.json").write_text(report_text(rep), encoding="utf-8")
    summary = {"checks": [{"key": c.key, "title": c.title, "passed": c.passed, "notes": c.notes,
                           "rows": c.rows} for c in checks]}
    (out / "summary.json").write_text(dumps(summary), encoding="utf-8")
    (out / "summary.txt").write_text(summary_table(checks), encoding="utf-8")


def mismatches(checks):
    """Rows whose expectation was not met, as ``expected ... got ...`` lines."""
    out = []
    for c in checks:
        for r in c.rows:
            if not r["met"]:
                out.append(f"- {c.key}: {r['construction']}: expectation not met "
                           f"(got verdict={r['verdict']}, value={_value(r)})")
        if not c.passed and all(r["met"] for r in c.rows):
            out.append(f"- {c.key}: check failed (see notes)")
    return out


def run_demo(out, seed=0, workers=1, only=None, stream=sys.stdout):
    checks = run_suite(seed=seed, workers=workers, only=only)
    write_artifacts(out, checks)
    stream.write(summary_table(checks))
    bad = mismatches(checks)
    if bad:
        stream.write("\nmismatches:\n" + "\n".join(bad) + "\n")
        return 1
    return 0


def load_reports(out):
    """{slug: report dict} for a finished demo directory."""
    return {p.stem: json.loads(p.read_text(encoding="utf-8")) for p in sorted((out / "reports").glob("*.json"))}
