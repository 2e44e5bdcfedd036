"""Coordinate calculus on the 2n-dimensional phase chart.

Vector fields, 1-forms and (1,1)-tensors carry ScalarField components in
the coordinate frame (d/dx^1..d/dx^n, d/dp_1..d/dp_n).  Brackets and Lie
derivatives are assembled symbolically; vector-valued 2-forms are kept as
recipes evaluated on demand against concrete pairs of fields.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .expr import Chart, ChartMismatchError, ScalarField, evaluate_fields


def _same_chart(*objs):
    chart = objs[0].chart
    for o in objs[1:]:
        if o.chart != chart:
            raise ChartMismatchError(f"{o.chart} vs {chart}")
    return chart


def _zero(chart: Chart) -> ScalarField:
    return ScalarField.constant(0.0, chart)


def _sum(terms: Sequence[ScalarField], chart: Chart) -> ScalarField:
    out = _zero(chart)
    for t in terms:
        if not t.is_zero:
            out = out + t
    return out


class PhaseVectorField:
    """X = xi^i d/dx^i + chi_i d/dp_i."""

    __slots__ = ("chart", "components")

    def __init__(self, components: Sequence[ScalarField], chart: Chart | None = None):
        components = tuple(components)
        chart = chart or components[0].chart
        if len(components) != chart.dim:
            raise ValueError(f"need {chart.dim} components, got {len(components)}")
        for c in components:
            if c.chart != chart:
                raise ChartMismatchError("components on different charts")
        self.chart = chart
        self.components = components

    @classmethod
    def from_parts(cls, base: Sequence[ScalarField], fiber: Sequence[ScalarField]):
        return cls(tuple(base) + tuple(fiber))

    @classmethod
    def zero(cls, chart: Chart) -> "PhaseVectorField":
        return cls([_zero(chart)] * chart.dim, chart)

    @property
    def base(self) -> tuple[ScalarField, ...]:
        return self.components[: self.chart.n]

    @property
    def fiber(self) -> tuple[ScalarField, ...]:
        return self.components[self.chart.n:]

    def __call__(self, f: ScalarField) -> ScalarField:
        """Directional derivative X(f)."""
        _same_chart(self, f)
        terms = [c * f.diff(name) for c, name in zip(self.components, self.chart.coords) if not c.is_zero]
        return _sum(terms, self.chart)

    def __add__(self, other: "PhaseVectorField") -> "PhaseVectorField":
        _same_chart(self, other)
        return PhaseVectorField([a + b for a, b in zip(self.components, other.components)], self.chart)

    def __sub__(self, other: "PhaseVectorField") -> "PhaseVectorField":
        _same_chart(self, other)
        return PhaseVectorField([a - b for a, b in zip(self.components, other.components)], self.chart)

    def __neg__(self):
        return PhaseVectorField([-a for a in self.components], self.chart)

    def scale(self, f) -> "PhaseVectorField":
        return PhaseVectorField([f * c for c in self.components], self.chart)

    def evaluate(self, points) -> np.ndarray:
        """Components at each point, shape (m, 2n)."""
        return evaluate_fields(list(self.components), points).T

    def __repr__(self):
        return "PhaseVectorField(" + ", ".join(str(c) for c in self.components) + ")"


def coordinate_frame(chart: Chart) -> list[PhaseVectorField]:
    one, zero = ScalarField.constant(1.0, chart), _zero(chart)
    return [PhaseVectorField([one if b == a else zero for b in range(chart.dim)], chart) for a in range(chart.dim)]


class OneForm:
    """phi = phi_a dc^a in the coordinate coframe."""

    __slots__ = ("chart", "components")

    def __init__(self, components: Sequence[ScalarField], chart: Chart | None = None):
        components = tuple(components)
        chart = chart or components[0].chart
        if len(components) != chart.dim:
            raise ValueError(f"need {chart.dim} components, got {len(components)}")
        self.chart = chart
        self.components = components

    def __call__(self, X: PhaseVectorField) -> ScalarField:
        _same_chart(self, X)
        return _sum([a * b for a, b in zip(self.components, X.components) if not (a.is_zero or b.is_zero)], self.chart)

    def __sub__(self, other: "OneForm") -> "OneForm":
        return OneForm([a - b for a, b in zip(self.components, other.components)], self.chart)

    def scale(self, f) -> "OneForm":
        return OneForm([f * c for c in self.components], self.chart)

    def evaluate(self, points) -> np.ndarray:
        return evaluate_fields(list(self.components), points).T


def coordinate_coframe(chart: Chart) -> list[OneForm]:
    return [OneForm(X.components, chart) for X in coordinate_frame(chart)]


class FullTensor11:
    """(1,1)-tensor A with (A X)^a = A^a_b X^b in the coordinate frame."""

    __slots__ = ("chart", "rows")

    def __init__(self, rows: Sequence[Sequence[ScalarField]], chart: Chart | None = None):
        rows = tuple(tuple(r) for r in rows)
        chart = chart or rows[0][0].chart
        d = chart.dim
        if len(rows) != d or any(len(r) != d for r in rows):
            raise ValueError(f"(1,1)-tensor must be {d}x{d}")
        for r in rows:
            for c in r:
                if c.chart != chart:
                    raise ChartMismatchError("entries on different charts")
        self.chart = chart
        self.rows = rows

    @classmethod
    def identity(cls, chart: Chart) -> "FullTensor11":
        one, zero = ScalarField.constant(1.0, chart), _zero(chart)
        return cls([[one if a == b else zero for b in range(chart.dim)] for a in range(chart.dim)], chart)

    @classmethod
    def zero(cls, chart: Chart) -> "FullTensor11":
        return cls([[_zero(chart)] * chart.dim for _ in range(chart.dim)], chart)

    @classmethod
    def from_columns(cls, columns: Sequence[PhaseVectorField]) -> "FullTensor11":
        chart = _same_chart(*columns)
        return cls([[columns[b].components[a] for b in range(chart.dim)] for a in range(chart.dim)], chart)

    def __getitem__(self, ab):
        a, b = ab
        return self.rows[a][b]

    def column(self, b: int) -> PhaseVectorField:
        return PhaseVectorField([r[b] for r in self.rows], self.chart)

    def apply(self, X: PhaseVectorField) -> PhaseVectorField:
        _same_chart(self, X)
        d = self.chart.dim
        comps = [
            _sum([self.rows[a][b] * X.components[b] for b in range(d)
                  if not (self.rows[a][b].is_zero or X.components[b].is_zero)], self.chart)
            for a in range(d)
        ]
        return PhaseVectorField(comps, self.chart)

    def __matmul__(self, other: "FullTensor11") -> "FullTensor11":
        """Composition (self o other)."""
        _same_chart(self, other)
        return FullTensor11.from_columns([self.apply(other.column(b)) for b in range(self.chart.dim)])

    def __add__(self, other: "FullTensor11") -> "FullTensor11":
        _same_chart(self, other)
        return FullTensor11([[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)], self.chart)

    def __sub__(self, other: "FullTensor11") -> "FullTensor11":
        _same_chart(self, other)
        return FullTensor11([[a - b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)], self.chart)

    def __neg__(self):
        return FullTensor11([[-a for a in r] for r in self.rows], self.chart)

    def scale(self, f) -> "FullTensor11":
        return FullTensor11([[f * a for a in r] for r in self.rows], self.chart)

    def entries(self) -> list[ScalarField]:
        return [a for r in self.rows for a in r]

    def evaluate(self, points) -> np.ndarray:
        """Matrices at each point, shape (m, 2n, 2n)."""
        d = self.chart.dim
        vals = evaluate_fields(self.entries(), points)
        return vals.T.reshape(-1, d, d)


def lie_bracket(X: PhaseVectorField, Y: PhaseVectorField) -> PhaseVectorField:
    """[X, Y]^a = X(Y^a) - Y(X^a)."""
    chart = _same_chart(X, Y)
    return PhaseVectorField([X(Y.components[a]) - Y(X.components[a]) for a in range(chart.dim)], chart)


def lie_derivative_tensor11(X: PhaseVectorField, A: FullTensor11) -> FullTensor11:
    """(L_X A)(Y) = [X, AY] - A[X, Y], assembled column by column on the coordinate frame."""
    chart = _same_chart(X, A)
    cols = []
    for e in coordinate_frame(chart):
        cols.append(lie_bracket(X, A.apply(e)) - A.apply(lie_bracket(X, e)))
    return FullTensor11.from_columns(cols)


class VectorValued2FormEval:
    """A vector-valued 2-form known through a recipe on pairs of vector fields."""

    def __init__(self, recipe: Callable[[PhaseVectorField, PhaseVectorField], PhaseVectorField],
                 chart: Chart, tag: str):
        self._recipe = recipe
        self.chart = chart
        self.tag = tag

    def field(self, X: PhaseVectorField, Y: PhaseVectorField) -> PhaseVectorField:
        _same_chart(self, X, Y)
        return self._recipe(X, Y)

    def __call__(self, X: PhaseVectorField, Y: PhaseVectorField, points) -> np.ndarray:
        return self.field(X, Y).evaluate(points)

    def scaled(self, factor: float, tag: str | None = None) -> "VectorValued2FormEval":
        recipe = self._recipe
        return VectorValued2FormEval(lambda X, Y: recipe(X, Y).scale(factor), self.chart, tag or f"{factor}*{self.tag}")

    def __repr__(self):
        return f"VectorValued2FormEval({self.tag})"


def fn_bracket_11(A: FullTensor11, B: FullTensor11) -> VectorValued2FormEval:
    """Frolicher-Nijenhuis bracket of two (1,1)-tensors.

    [A,B](X,Y) = [AX,BY] + [BX,AY] + (AB+BA)[X,Y]
                 - A[X,BY] - B[X,AY] - A[BX,Y] - B[AX,Y]
    """
    chart = _same_chart(A, B)

    def recipe(X, Y):
        AX, AY, BX, BY = A.apply(X), A.apply(Y), B.apply(X), B.apply(Y)
        XY = lie_bracket(X, Y)
        return (lie_bracket(AX, BY) + lie_bracket(BX, AY)
                + A.apply(B.apply(XY)) + B.apply(A.apply(XY))
                - A.apply(lie_bracket(X, BY)) - B.apply(lie_bracket(X, AY))
                - A.apply(lie_bracket(BX, Y)) - B.apply(lie_bracket(AX, Y)))

    return VectorValued2FormEval(recipe, chart, "fn-bracket")


def nijenhuis(A: FullTensor11) -> VectorValued2FormEval:
    """N_A(X,Y) = [AX,AY] + A^2[X,Y] - A[X,AY] - A[AX,Y]."""

    def recipe(X, Y):
        AX, AY = A.apply(X), A.apply(Y)
        return (lie_bracket(AX, AY) + A.apply(A.apply(lie_bracket(X, Y)))
                - A.apply(lie_bracket(X, AY)) - A.apply(lie_bracket(AX, Y)))

    return VectorValued2FormEval(recipe, A.chart, "nijenhuis")
