"""Check reports as deterministic JSON or plain text."""
from __future__ import annotations

import json
import math

import jsonschema

from .. import __version__
from .spec import Structure, load_schema

REPORT_VERSION = 1
FLOAT_FORMAT = "%.12e"


def _num(x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite number {x!r} in report")
    return 0.0 if x == 0 else x


def build_report(st: Structure, results: list) -> dict:
    checks = []
    for res in results:
        entry = {
            "name": res.name,
            "tag": res.tag,
            "verdict": res.verdict,
            "residual_max": _num(max(res.per_point, default=0.0)),
            "residual_per_point": [_num(v) for v in res.per_point],
            "witnesses": [{"point": [_num(x) for x in p], "items": items} for p, items in res.witnesses()],
            "items": [{
                "name": it.name,
                "tag": it.tag,
                "verdict": res.item_verdict(it),
                "residual_max": _num(it.residual.max_relative),
                "absolute_max": _num(it.residual.max_absolute),
                "residual_per_point": [_num(v) for v in it.residual.relative],
            } for it in res.items],
        }
        if res.connection is not None:
            entry["connection"] = res.connection
        checks.append(entry)
    summary = {"PASS": 0, "FAIL": 0, "INDETERMINATE": 0}
    for c in checks:
        summary[c["verdict"]] += 1
    overall = "FAIL" if summary["FAIL"] else "INDETERMINATE" if summary["INDETERMINATE"] else "PASS"
    hold = results[0].hold if results else st.hold
    violate = results[0].violate if results else st.violate
    return {
        "report_version": REPORT_VERSION,
        "tool": "cartan-dual",
        "tool_version": __version__,
        "spec_name": st.name,
        "conventions": {"ricci_convention": st.ricci_convention, "dual_pair": st.dual_pair,
                        "orientation": st.orientation},
        "tolerances": {"hold": _num(hold), "violate": _num(violate)},
        "sample_points": [[_num(x) for x in p] for p in st.points],
        "checks": checks,
        "summary": summary,
        "verdict": overall,
    }


def validate_report(report: dict) -> None:
    jsonschema.validate(report, load_schema("check-report"))


def _dump(obj, indent: int, level: int, out: list) -> None:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        keys = sorted(obj)
        for k, key in enumerate(keys):
            out.append(pad + json.dumps(key) + ": ")
            _dump(obj[key], indent, level + 1, out)
            out.append(",\n" if k < len(keys) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        if all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in obj):
            out.append("[" + ", ".join(_scalar(x) for x in obj) + "]")
            return
        out.append("[\n")
        for k, x in enumerate(obj):
            out.append(pad)
            _dump(x, indent, level + 1, out)
            out.append(",\n" if k < len(obj) - 1 else "\n")
        out.append(end + "]")
    else:
        out.append(_scalar(obj))


def _scalar(x) -> str:
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, int):
        return str(x)
    return FLOAT_FORMAT % x


def to_json(report: dict) -> bytes:
    """Sorted keys, two-space indent, every float as ``%.12e``."""
    out: list = []
    _dump(report, 2, 0, out)
    return ("".join(out) + "\n").encode("utf-8")


def to_text(report: dict) -> bytes:
    lines = [f"cartan-dual {report['tool_version']}  spec: {report['spec_name']}  "
             f"ricci: {report['conventions']['ricci_convention']}  "
             f"dual pair: {report['conventions']['dual_pair']}  "
             f"orientation: {report['conventions']['orientation']:+d}",
             f"tolerances: hold < {report['tolerances']['hold']:.1e}, "
             f"violate > {report['tolerances']['violate']:.1e}", ""]
    for c in report["checks"]:
        lines.append(f"{c['name']:<22} {c['verdict']:<13} max {c['residual_max']:.3e}  [{c['tag']}]")
        for it in c["items"]:
            lines.append(f"    {it['name']:<34} {it['verdict']:<13} {it['residual_max']:.3e}  [{it['tag']}]")
        for w in c["witnesses"]:
            pt = ", ".join(f"{x:g}" for x in w["point"])
            lines.append(f"    witness ({pt}): {', '.join(w['items'])}")
    s = report["summary"]
    lines += ["", f"{s['PASS']} PASS, {s['FAIL']} FAIL, {s['INDETERMINATE']} INDETERMINATE; "
                  f"overall {report['verdict']}"]
    return ("\n".join(lines) + "\n").encode("utf-8")


def emit_report(report: dict, fmt: str = "json") -> bytes:
    if fmt == "json":
        return to_json(report)
    if fmt == "text":
        return to_text(report)
    raise ValueError(f"unknown report format {fmt!r}")
