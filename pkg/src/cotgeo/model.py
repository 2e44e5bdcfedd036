"""JSON model files: validation, eager parsing, and assembly of the
geometric ingredients (H, J, rho, N) a check run needs."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .expr import Chart, ParseError, ScalarField, parse_scalar_field
from .frame import PhaseVectorField
from .sampling import SamplingPlan

FIELDS = ("name", "dimension", "hamiltonian", "lagrangian", "connection",
          "tangent_structure", "vector_field", "sampling")
SAMPLING_FIELDS = ("x_box", "p_box", "p_min_norm", "seed", "count")


class ModelError(ValueError):
    """Invalid model file.  ``field`` is a dotted path, ``offset`` a byte
    offset into the offending expression when the error is a parse error."""

    def __init__(self, field: str, message: str, offset: int | None = None):
        where = f"{field}" + (f" (offset {offset})" if offset is not None else "")
        super().__init__(f"{where}: {message}")
        self.field = field
        self.offset = offset


@dataclass
class ModelFile:
    n: int
    name: str = "model"
    hamiltonian: ScalarField | None = None
    lagrangian: ScalarField | None = None
    connection: list | None = None
    tangent_structure: list | None = None
    vector_field: PhaseVectorField | None = None
    sampling: SamplingPlan = None
    source: dict = field(default_factory=dict)

    @property
    def chart(self) -> Chart:
        return Chart.cotangent(self.n)

    @property
    def tangent_chart(self) -> Chart:
        return Chart.tangent(self.n)


def _expr(text: Any, chart: Chart, where: str) -> ScalarField:
    if not isinstance(text, (str, int, float)) or isinstance(text, bool):
        raise ModelError(where, f"expected expression text, got {type(text).__name__}")
    try:
        return parse_scalar_field(str(text), chart)
    except ParseError as exc:
        raise ModelError(where, str(exc), exc.offset) from exc


def _vector(value: Any, n: int, chart: Chart, where: str) -> list[ScalarField]:
    if not isinstance(value, list) or len(value) != n:
        raise ModelError(where, f"shape error: expected a list of {n} expressions")
    return [_expr(t, chart, f"{where}[{i}]") for i, t in enumerate(value)]


def _matrix(value: Any, n: int, chart: Chart, where: str) -> list[list[ScalarField]]:
    if not isinstance(value, list) or len(value) != n or any(not isinstance(r, list) or len(r) != n for r in value):
        raise ModelError(where, f"shape error: expected a {n}x{n} matrix of expressions")
    return [[_expr(t, chart, f"{where}[{i}][{j}]") for j, t in enumerate(r)] for i, r in enumerate(value)]


def _number(value: Any, where: str, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelError(where, "expected a number")
    if kind is int and int(value) != value:
        raise ModelError(where, "expected an integer")
    return kind(value)


def _box(value: Any, n: int, where: str) -> tuple:
    if not isinstance(value, list) or len(value) != n:
        raise ModelError(where, f"shape error: expected {n} intervals")
    out = []
    for i, iv in enumerate(value):
        if not isinstance(iv, list) or len(iv) != 2:
            raise ModelError(f"{where}[{i}]", "expected [low, high]")
        lo, hi = (_number(v, f"{where}[{i}]") for v in iv)
        out.append((lo, hi))
    return tuple(out)


def _sampling(value: Any, n: int) -> SamplingPlan:
    if value is None:
        return SamplingPlan(n)
    if not isinstance(value, dict):
        raise ModelError("sampling", "expected an object")
    for key in value:
        if key not in SAMPLING_FIELDS:
            raise ModelError(f"sampling.{key}", "unknown field")
    kw = {}
    if "x_box" in value:
        kw["x_box"] = _box(value["x_box"], n, "sampling.x_box")
    if "p_box" in value:
        kw["p_box"] = _box(value["p_box"], n, "sampling.p_box")
    if "p_min_norm" in value:
        kw["p_min_norm"] = _number(value["p_min_norm"], "sampling.p_min_norm")
    if "seed" in value:
        kw["seed"] = _number(value["seed"], "sampling.seed", int)
    if "count" in value:
        kw["count"] = _number(value["count"], "sampling.count", int)
    try:
        return SamplingPlan(n, **kw)
    except ValueError as exc:
        raise ModelError("sampling", str(exc)) from exc


def parse_model(data: Any, name: str = "model") -> ModelFile:
    if not isinstance(data, dict):
        raise ModelError("<root>", "model must be a JSON object")
    for key in data:
        if key not in FIELDS:
            raise ModelError(key, "unknown field")
    if "dimension" not in data:
        raise ModelError("dimension", "missing")
    n = _number(data["dimension"], "dimension", int)
    if n < 1:
        raise ModelError("dimension", "must be a positive integer")
    chart, tchart = Chart.cotangent(n), Chart.tangent(n)
    m = ModelFile(n=n, name=str(data.get("name", name)), source=data)
    if data.get("hamiltonian") is not None:
        m.hamiltonian = _expr(data["hamiltonian"], chart, "hamiltonian")
    if data.get("lagrangian") is not None:
        m.lagrangian = _expr(data["lagrangian"], tchart, "lagrangian")
    if data.get("connection") is not None:
        m.connection = _matrix(data["connection"], n, chart, "connection")
    if data.get("tangent_structure") is not None:
        m.tangent_structure = _matrix(data["tangent_structure"], n, chart, "tangent_structure")
    if data.get("vector_field") is not None:
        vf = data["vector_field"]
        if not isinstance(vf, dict) or set(vf) != {"xi", "chi"}:
            raise ModelError("vector_field", "expected an object with fields 'xi' and 'chi'")
        m.vector_field = PhaseVectorField(
            _vector(vf["xi"], n, chart, "vector_field.xi") + _vector(vf["chi"], n, chart, "vector_field.chi"), chart)
    if m.hamiltonian is None and (m.tangent_structure is None or m.vector_field is None):
        raise ModelError("hamiltonian", "need a hamiltonian, or both tangent_structure and vector_field")
    m.sampling = _sampling(data.get("sampling"), n)
    return m


def load_model(path: str | Path) -> ModelFile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelError("<file>", f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError("<json>", exc.msg, exc.pos) from exc
    return parse_model(data, name=path.stem)
