"""Canonical objects of T*M and connection-level geometry.

Index conventions: in N_ij the first index pairs with dx^i and the second
with d/dp_j, so the adapted frame is d/dx^i + N_ij d/dp_j.  The same
reading is used for t_ij in J = t_ij dx^i (x) d/dp_j.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .expr import Chart, ChartMismatchError, ScalarField, evaluate_fields, parse_scalar_field
from .frame import (
    FullTensor11,
    OneForm,
    PhaseVectorField,
    VectorValued2FormEval,
    coordinate_frame,
    fn_bracket_11,
    lie_derivative_tensor11,
    nijenhuis,
)

REGULARITY_FLOOR = 1e-8

Matrix = list[list[ScalarField]]


class RegularityError(ValueError):
    """A matrix that must be invertible is (numerically) singular at a point."""

    def __init__(self, what: str, point: np.ndarray, det: float):
        super().__init__(f"{what} is singular at {np.round(point, 12).tolist()} (|det| = {abs(det):.3e})")
        self.point = np.asarray(point)
        self.det = det


def _zero(chart: Chart) -> ScalarField:
    return ScalarField.constant(0.0, chart)


def _sum(terms, chart: Chart) -> ScalarField:
    out = _zero(chart)
    for t in terms:
        if not t.is_zero:
            out = out + t
    return out


def _minor(m: Matrix, row: int, col: int) -> Matrix:
    return [[m[r][c] for c in range(len(m)) if c != col] for r in range(len(m)) if r != row]


def symbolic_det(m: Matrix) -> ScalarField:
    """Cofactor expansion along the first row (meant for small n)."""
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    terms = []
    for c in range(n):
        if m[0][c].is_zero:
            continue
        t = m[0][c] * symbolic_det(_minor(m, 0, c))
        terms.append(t if c % 2 == 0 else -t)
    return _sum(terms, m[0][0].chart)


def symbolic_inverse(m: Matrix) -> Matrix:
    """Inverse through the adjugate: inv_ij = cof_ji / det."""
    n = len(m)
    chart = m[0][0].chart
    if n == 1:
        return [[1.0 / m[0][0]]]
    det = symbolic_det(m)
    inv = []
    for i in range(n):
        row = []
        for j in range(n):
            cof = symbolic_det(_minor(m, j, i))
            row.append(cof / det if (i + j) % 2 == 0 else -cof / det)
        inv.append(row)
    return inv


def evaluate_matrix(m: Matrix, points) -> np.ndarray:
    n = len(m)
    vals = evaluate_fields([a for r in m for a in r], points)
    return vals.T.reshape(-1, n, n)


def parse_matrix(texts: Sequence[Sequence[str]], chart: Chart) -> Matrix:
    if len(texts) != chart.n or any(len(r) != chart.n for r in texts):
        raise ValueError(f"matrix must be {chart.n}x{chart.n}")
    return [[parse_scalar_field(s, chart) for s in r] for r in texts]


def check_regular(m: Matrix, points, what: str, floor: float = REGULARITY_FLOOR) -> None:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    dets = np.linalg.det(evaluate_matrix(m, pts))
    bad = np.flatnonzero(~(np.abs(dets) >= floor))
    if bad.size:
        raise RegularityError(what, pts[bad[0]], float(dets[bad[0]]))


# --------------------------------------------------------------------------
# Canonical objects
# --------------------------------------------------------------------------


class CanonicalObjects:
    """Liouville-Hamilton field C*, Liouville form theta, symplectic form omega.

    omega = d(theta) = dp_i ^ dx^i is stored as its constant matrix, not
    derived by exterior differentiation.
    """

    def __init__(self, chart: Chart):
        if chart.fiber != "p":
            raise ChartMismatchError("canonical objects live on a cotangent chart")
        self.chart = chart
        n = chart.n
        p = [ScalarField.coordinate(name, chart) for name in chart.fiber_names]
        zero = _zero(chart)
        self.liouville = PhaseVectorField([zero] * n + p, chart)
        self.theta = OneForm(p + [zero] * n, chart)
        w = np.zeros((2 * n, 2 * n))
        for i in range(n):
            w[n + i, i] = 1.0
            w[i, n + i] = -1.0
        self.omega_matrix = w

    def omega(self, X: PhaseVectorField, Y: PhaseVectorField, points) -> np.ndarray:
        """omega(X, Y) = X_{p_i} Y^{x^i} - X^{x^i} Y_{p_i} at each point."""
        return np.einsum("ma,ab,mb->m", X.evaluate(points), self.omega_matrix, Y.evaluate(points))


def poisson_bracket(f: ScalarField, g: ScalarField) -> ScalarField:
    """{f, g} = df/dp_i dg/dx^i - dg/dp_i df/dx^i."""
    if f.chart != g.chart:
        raise ChartMismatchError(f"{f.chart} vs {g.chart}")
    chart = f.chart
    terms = []
    for x, p in zip(chart.base_names, chart.fiber_names):
        terms.append(f.diff(p) * g.diff(x))
        terms.append(-(g.diff(p) * f.diff(x)))
    return _sum(terms, chart)


# --------------------------------------------------------------------------
# Nonlinear connections
# --------------------------------------------------------------------------


class NonlinearConnection:
    def __init__(self, coeffs: Matrix):
        coeffs = [list(r) for r in coeffs]
        chart = coeffs[0][0].chart
        if len(coeffs) != chart.n or any(len(r) != chart.n for r in coeffs):
            raise ValueError(f"connection must be {chart.n}x{chart.n}")
        if chart.fiber != "p":
            raise ChartMismatchError("nonlinear connections here live on a cotangent chart")
        self.chart = chart
        self.n = chart.n
        self.coeffs = coeffs
        self._frame = None
        self._h = None

    @classmethod
    def from_texts(cls, texts: Sequence[Sequence[str]], chart: Chart) -> "NonlinearConnection":
        return cls(parse_matrix(texts, chart))

    @classmethod
    def zero(cls, chart: Chart) -> "NonlinearConnection":
        return cls([[_zero(chart)] * chart.n for _ in range(chart.n)])

    def __getitem__(self, ij) -> ScalarField:
        i, j = ij
        return self.coeffs[i][j]

    def shifted(self, i: int, j: int, delta: float) -> "NonlinearConnection":
        coeffs = [list(r) for r in self.coeffs]
        coeffs[i][j] = coeffs[i][j] + delta
        return NonlinearConnection(coeffs)

    def delta(self, i: int) -> PhaseVectorField:
        """Adapted frame field d/dx^i + N_ij d/dp_j."""
        if self._frame is None:
            n, chart = self.n, self.chart
            one, zero = ScalarField.constant(1.0, chart), _zero(chart)
            self._frame = [
                PhaseVectorField([one if b == k else zero for b in range(n)] + list(self.coeffs[k]), chart)
                for k in range(n)
            ]
        return self._frame[i]

    def delta_of(self, f: ScalarField, i: int) -> ScalarField:
        """delta f / delta x^i = df/dx^i + N_is df/dp_s."""
        return self.delta(i)(f)

    def adapted_frame(self) -> list[PhaseVectorField]:
        """(delta/delta x^1..n, d/dp_1..n)."""
        return [self.delta(i) for i in range(self.n)] + coordinate_frame(self.chart)[self.n:]

    def coframe(self) -> list[OneForm]:
        """delta p_i = dp_i - N_ji dx^j, the basis dual to (delta/delta x^j, d/dp_j)."""
        n, chart = self.n, self.chart
        one, zero = ScalarField.constant(1.0, chart), _zero(chart)
        return [OneForm([-self.coeffs[j][i] for j in range(n)] + [one if k == i else zero for k in range(n)], chart)
                for i in range(n)]

    @property
    def h(self) -> FullTensor11:
        if self._h is None:
            n, chart = self.n, self.chart
            zero = _zero(chart)
            cols = [self.delta(i) for i in range(n)] + [PhaseVectorField([zero] * (2 * n), chart)] * n
            self._h = FullTensor11.from_columns(cols)
        return self._h

    @property
    def v(self) -> FullTensor11:
        return FullTensor11.identity(self.chart) - self.h

    @property
    def tensor(self) -> FullTensor11:
        """The almost product structure h - v."""
        return self.h - self.v

    def antisymmetric_part(self) -> Matrix:
        """tau_ij = (N_ij - N_ji) / 2."""
        return [[(self.coeffs[i][j] - self.coeffs[j][i]) * 0.5 for j in range(self.n)] for i in range(self.n)]

    def symmetry_residual(self, points) -> float:
        return float(np.max(np.abs(evaluate_matrix(self.antisymmetric_part(), points)), initial=0.0))

    def evaluate(self, points) -> np.ndarray:
        return evaluate_matrix(self.coeffs, points)


@dataclass
class AdaptedFrame:
    deltas: list[PhaseVectorField]
    coframe: list[OneForm]
    h: FullTensor11
    v: FullTensor11


def adapted_frame_and_projectors(N: NonlinearConnection) -> AdaptedFrame:
    return AdaptedFrame([N.delta(i) for i in range(N.n)], N.coframe(), N.h, N.v)


class AdaptedTangentStructure:
    """J = t_ij dx^i (x) d/dp_j together with the inverse t^ij (t_ij t^jk = delta_i^k)."""

    def __init__(self, lower: Matrix, upper: Matrix | None = None):
        self.lower = [list(r) for r in lower]
        self.chart = self.lower[0][0].chart
        self.n = self.chart.n
        if len(self.lower) != self.n or any(len(r) != self.n for r in self.lower):
            raise ValueError(f"tangent structure must be {self.n}x{self.n}")
        self.upper = [list(r) for r in upper] if upper is not None else symbolic_inverse(self.lower)
        self._tensor = None

    @classmethod
    def from_upper(cls, upper: Matrix) -> "AdaptedTangentStructure":
        return cls(symbolic_inverse(upper), upper)

    @classmethod
    def from_texts(cls, texts: Sequence[Sequence[str]], chart: Chart) -> "AdaptedTangentStructure":
        return cls(parse_matrix(texts, chart))

    @property
    def tensor(self) -> FullTensor11:
        if self._tensor is None:
            n, chart = self.n, self.chart
            zero = _zero(chart)
            rows = [[zero] * (2 * n) for _ in range(2 * n)]
            for i in range(n):
                for j in range(n):
                    rows[n + j][i] = self.lower[i][j]
            self._tensor = FullTensor11(rows, chart)
        return self._tensor

    def check_regular(self, points, floor: float = REGULARITY_FLOOR) -> None:
        check_regular(self.lower, points, "tangent structure t_ij", floor)


# --------------------------------------------------------------------------
# Curvature, tension, torsion
# --------------------------------------------------------------------------


def curvature_components(N: NonlinearConnection) -> list[list[list[ScalarField]]]:
    """R_ijk = delta N_jk / delta x^i - delta N_ik / delta x^j."""
    n = N.n
    zero = _zero(N.chart)
    R = [[[zero] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(n):
                r = N.delta_of(N[j, k], i) - N.delta_of(N[i, k], j)
                R[i][j][k] = r
                R[j][i][k] = -r
    return R


def curvature_intrinsic(N: NonlinearConnection) -> VectorValued2FormEval:
    """Omega = -1/2 [h, h] = -N_h."""
    return nijenhuis(N.h).scaled(-1.0, "curvature")


def tension(N: NonlinearConnection) -> Matrix:
    """p_k dN_ij/dp_k - N_ij."""
    chart = N.chart
    p = [ScalarField.coordinate(name, chart) for name in chart.fiber_names]
    return [[_sum([p[k] * N[i, j].diff(chart.fiber_names[k]) for k in range(N.n)], chart) - N[i, j]
             for j in range(N.n)] for i in range(N.n)]


def tension_intrinsic(N: NonlinearConnection) -> FullTensor11:
    """1/2 L_{C*} (h - v) as a full tensor."""
    C = CanonicalObjects(N.chart).liouville
    return lie_derivative_tensor11(C, N.tensor).scale(0.5)


def torsion(J: AdaptedTangentStructure, N: NonlinearConnection) -> list[list[list[ScalarField]]]:
    """T_ijk = t_is dN_jk/dp_s - t_js dN_ik/dp_s + delta t_jk/delta x^i - delta t_ik/delta x^j."""
    if J.chart != N.chart:
        raise ChartMismatchError("tangent structure and connection on different charts")
    n, chart = N.n, N.chart
    ps = chart.fiber_names
    zero = _zero(chart)
    T = [[[zero] * n for _ in range(n)] for _ in range(n)]
    t = J.lower
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(n):
                val = (_sum([t[i][s] * N[j, k].diff(ps[s]) for s in range(n)], chart)
                       - _sum([t[j][s] * N[i, k].diff(ps[s]) for s in range(n)], chart)
                       + N.delta_of(t[j][k], i) - N.delta_of(t[i][k], j))
                T[i][j][k] = val
                T[j][i][k] = -val
    return T


def torsion_intrinsic(J: AdaptedTangentStructure, N: NonlinearConnection) -> VectorValued2FormEval:
    """T = [J, h] (Frolicher-Nijenhuis)."""
    form = fn_bracket_11(J.tensor, N.h)
    form.tag = "torsion"
    return form


def strong_torsion(rho: PhaseVectorField, J: AdaptedTangentStructure, N: NonlinearConnection,
                   points=None) -> Matrix:
    """xi^i T_ijk + N_jk - p_s dN_jk/dp_s.

    When ``points`` are given the J-regularity of ``rho`` is tested there
    and a warning is issued if it fails; the formula is returned regardless.
    """
    if points is not None:
        from .dynamics import j_regularity_residual

        res = j_regularity_residual(rho, J, points).coordinate
        if res > 1e-9:
            warnings.warn(f"strong torsion of a field that is not J-regular (residual {res:.3e})", stacklevel=2)
    n, chart = N.n, N.chart
    T = torsion(J, N)
    ten = tension(N)
    xi = rho.base
    return [[_sum([xi[i] * T[i][j][k] for i in range(n)], chart) - ten[j][k] for k in range(n)] for j in range(n)]


def strong_torsion_intrinsic(rho: PhaseVectorField, J: AdaptedTangentStructure, N: NonlinearConnection,
                             points) -> np.ndarray:
    """(i_rho T - t)(d/dx^j) fiber components, shape (m, n, n) indexed [., j, k]."""
    n = N.n
    Tform = torsion_intrinsic(J, N)
    frame = coordinate_frame(N.chart)
    ten = tension_intrinsic(N).evaluate(points)
    out = np.empty((len(np.atleast_2d(points)), n, n))
    for j in range(n):
        val = Tform(rho, frame[j], points)
        out[:, j, :] = val[:, n:] - ten[:, n:, j]
    return out


# --------------------------------------------------------------------------
# Tangent-structure diagnostics
# --------------------------------------------------------------------------


@dataclass
class TangentStructureReport:
    integrability: float
    homogeneity: float
    symmetry: float
    metric: float | None = None
    notes: list[str] = field(default_factory=list)


def tangent_structure_diagnostics(J: AdaptedTangentStructure, points, g: Matrix | None = None) -> TangentStructureReport:
    """Max residuals of integrability (dt^ij/dp_k = dt^kj/dp_i), 0-homogeneity
    (p_k dt_ij/dp_k = 0), symmetry (t_ij = t_ji) and, with ``g``, t^ij = g^ij."""
    J.check_regular(points)
    n, chart = J.n, J.chart
    ps = chart.fiber_names
    p = [ScalarField.coordinate(name, chart) for name in ps]
    integ, homog, sym = [], [], []
    for i in range(n):
        for j in range(n):
            for k in range(n):
                integ.append(J.upper[i][j].diff(ps[k]) - J.upper[k][j].diff(ps[i]))
            homog.append(_sum([p[k] * J.lower[i][j].diff(ps[k]) for k in range(n)], chart))
            sym.append(J.lower[i][j] - J.lower[j][i])

    def worst(fields):
        return float(np.max(np.abs(evaluate_fields(fields, points)), initial=0.0))

    report = TangentStructureReport(worst(integ), worst(homog), worst(sym))
    if g is not None:
        report.metric = worst([J.upper[i][j] - g[i][j] for i in range(n) for j in range(n)])
    return report
