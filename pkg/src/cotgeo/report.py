"""Check reports: a deterministic JSON document plus a plain-text table."""
from __future__ import annotations

import datetime as _dt
import json
import math
from typing import Any, TextIO

from . import __version__
from .checks import CheckRecord, Tolerances, overall_pass
from .sampling import GENERATOR


def _num(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == int(x) and abs(x) < 1e17:
        return f"{x:.1f}" if abs(x) < 1e16 else "%.17g" % x
    return "%.17g" % x


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON with floats written to 17 significant digits and keys in
    insertion order, so equal inputs give byte-identical output."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _num(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "tolist"):
        return dumps(obj.tolist(), indent, _level)
    if hasattr(obj, "item"):
        return dumps(obj.item(), indent, _level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def build_report(command: str, model_name: str, seed: int, count: int, tol: Tolerances,
                 records: list[CheckRecord], extra: dict | None = None, timestamp: bool = True) -> dict:
    rep = {
        "model": model_name,
        "command": command,
        "tool": "geocli",
        "version": __version__,
        "generator": GENERATOR,
        "seed": int(seed),
        "count": int(count),
        "tolerances": {
            "algebraic": tol.algebraic,
            "identity": tol.identity,
            "symbolic": tol.symbolic,
            "numeric": tol.numeric,
        },
        "records": [r.as_dict() for r in records],
    }
    if extra:
        rep.update(extra)
    rep["pass"] = overall_pass(records)
    if timestamp:
        rep["timestamp"] = _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()
    return rep


def write_table(records: list[CheckRecord], out: TextIO) -> None:
    width = max((len(r.name) for r in records), default=10)
    for r in records:
        status = "info" if r.informational else ("PASS" if r.passed else "FAIL")
        out.write(f"{status:4}  {r.name:<{width}}  {r.max_abs_residual:.3e}  (tol {r.tolerance:.0e})\n")
    verdict = "PASS" if overall_pass(records) else "FAIL"
    failed = sum(1 for r in records if not r.informational and not r.passed)
    out.write(f"overall: {verdict} ({len(records)} records, {failed} failed)\n")
