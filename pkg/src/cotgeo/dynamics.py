"""J-regular vector fields and the structures they induce.

Operators are composed intrinsically from brackets (the authoritative
route); the closed coordinate formulas are provided next to them so the
two can be compared point by point.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .expr import ChartMismatchError, ScalarField, evaluate_fields
from .frame import (
    FullTensor11,
    OneForm,
    PhaseVectorField,
    coordinate_frame,
    lie_bracket,
    lie_derivative_tensor11,
)
from .structures import (
    AdaptedTangentStructure,
    CanonicalObjects,
    Matrix,
    NonlinearConnection,
    curvature_components,
    curvature_intrinsic,
    evaluate_matrix,
)


class NotJRegularError(ValueError):
    pass


def _sum(terms, chart) -> ScalarField:
    out = ScalarField.constant(0.0, chart)
    for t in terms:
        if not t.is_zero:
            out = out + t
    return out


def _maxabs(a) -> float:
    return float(np.max(np.abs(a), initial=0.0))


def _check_charts(*objs):
    chart = objs[0].chart
    for o in objs[1:]:
        if o.chart != chart:
            raise ChartMismatchError(f"{o.chart} vs {chart}")
    return chart


def fields_residual(pairs, points) -> float:
    """Max |X - Y| over pairs of vector fields evaluated on ``points``."""
    worst = 0.0
    for X, Y in pairs:
        worst = max(worst, _maxabs((X - Y).evaluate(points)))
    return worst


def tensor_residual(A: FullTensor11, B: FullTensor11, points) -> float:
    return _maxabs((A - B).evaluate(points))


# --------------------------------------------------------------------------
# J-regularity
# --------------------------------------------------------------------------


@dataclass
class RegularityResidual:
    coordinate: float  # max |t^ij - d xi^j / d p_i|
    intrinsic: float  # max |J[rho, JX] + JX| over coordinate frame fields X


def j_regularity_residual(rho: PhaseVectorField, J: AdaptedTangentStructure, points) -> RegularityResidual:
    _check_charts(rho, J)
    J.check_regular(points)
    n, ps = J.n, J.chart.fiber_names
    diffs = [J.upper[i][j] - rho.base[j].diff(ps[i]) for i in range(n) for j in range(n)]
    coord = _maxabs(evaluate_fields(diffs, points))
    Jt = J.tensor
    pairs = []
    for X in coordinate_frame(J.chart):
        JX = Jt.apply(X)
        pairs.append((Jt.apply(lie_bracket(rho, JX)), -JX))
    return RegularityResidual(coord, fields_residual(pairs, points))


def liouville_residual(rho: PhaseVectorField, J: AdaptedTangentStructure, points) -> float:
    """max |J rho - C*|."""
    C = CanonicalObjects(J.chart).liouville
    return fields_residual([(J.tensor.apply(rho), C)], points)


@dataclass
class JRegularField:
    rho: PhaseVectorField
    J: AdaptedTangentStructure

    def __post_init__(self):
        _check_charts(self.rho, self.J)

    @property
    def chart(self):
        return self.rho.chart

    def validate(self, points, tol: float = 1e-9) -> RegularityResidual:
        res = j_regularity_residual(self.rho, self.J, points)
        if res.coordinate > tol:
            raise NotJRegularError(f"field is not J-regular: residual {res.coordinate:.3e} > {tol:g}")
        return res


# --------------------------------------------------------------------------
# Canonical connection
# --------------------------------------------------------------------------


def canonical_connection(field: JRegularField, points=None, tol: float = 1e-9) -> NonlinearConnection:
    """N_ij = 1/2 (t_ik dchi_j/dp_k - t_kj dxi^k/dx^i - rho(t_ij)).

    With ``points`` the regularity gate is enforced there first.
    """
    if points is not None:
        field.validate(points, tol)
    rho, J = field.rho, field.J
    n, chart = J.n, J.chart
    xs, ps = chart.base_names, chart.fiber_names
    t = J.lower
    coeffs = []
    for i in range(n):
        row = []
        for j in range(n):
            a = _sum([t[i][k] * rho.fiber[j].diff(ps[k]) for k in range(n)], chart)
            b = _sum([t[k][j] * rho.base[k].diff(xs[i]) for k in range(n)], chart)
            row.append((a - b - rho(t[i][j])) * 0.5)
        coeffs.append(row)
    return NonlinearConnection(coeffs)


def canonical_connection_intrinsic(field: JRegularField) -> NonlinearConnection:
    """Read N off -L_rho J = h - v, whose (dx^i, d/dp_j) entry is 2 N_ij."""
    LJ = lie_derivative_tensor11(field.rho, field.J.tensor)
    n = field.J.n
    return NonlinearConnection([[LJ[n + j, i] * -0.5 for j in range(n)] for i in range(n)])


def nabla_J_closed_form(field: JRegularField, N: NonlinearConnection) -> Matrix:
    """rho(t_ij) + t_kj dxi^k/dx^i - t_ik dchi_j/dp_k + 2 N_ij."""
    rho, J = field.rho, field.J
    n, chart = J.n, J.chart
    xs, ps = chart.base_names, chart.fiber_names
    t = J.lower
    return [[rho(t[i][j])
             + _sum([t[k][j] * rho.base[k].diff(xs[i]) for k in range(n)], chart)
             - _sum([t[i][k] * rho.fiber[j].diff(ps[k]) for k in range(n)], chart)
             + N[i, j] * 2.0
             for j in range(n)] for i in range(n)]


# --------------------------------------------------------------------------
# Dynamical covariant derivative
# --------------------------------------------------------------------------


class DynCovDerivative:
    """nabla = h o L_rho o h + v o L_rho o v, extended to scalars, 1-forms and (1,1)-tensors."""

    def __init__(self, rho: PhaseVectorField, N: NonlinearConnection):
        _check_charts(rho, N)
        self.rho = rho
        self.N = N
        self.chart = rho.chart
        self._h = N.h
        self._v = N.v
        self._frame_images = None

    def scalar(self, f: ScalarField) -> ScalarField:
        return self.rho(f)

    def vector(self, X: PhaseVectorField) -> PhaseVectorField:
        h, v = self._h, self._v
        return (h.apply(lie_bracket(self.rho, h.apply(X)))
                + v.apply(lie_bracket(self.rho, v.apply(X))))

    def _on_frame(self) -> list[PhaseVectorField]:
        if self._frame_images is None:
            self._frame_images = [self.vector(e) for e in coordinate_frame(self.chart)]
        return self._frame_images

    def one_form(self, phi: OneForm) -> OneForm:
        """(nabla phi)(X) = rho(phi(X)) - phi(nabla X)."""
        images = self._on_frame()
        return OneForm([self.rho(phi.components[b]) - phi(images[b]) for b in range(self.chart.dim)], self.chart)

    def tensor(self, T: FullTensor11) -> FullTensor11:
        """nabla T = nabla o T - T o nabla."""
        images = self._on_frame()
        cols = [self.vector(T.column(b)) - T.apply(images[b]) for b in range(self.chart.dim)]
        return FullTensor11.from_columns(cols)

    def __call__(self, target):
        if isinstance(target, ScalarField):
            return self.scalar(target)
        if isinstance(target, PhaseVectorField):
            return self.vector(target)
        if isinstance(target, OneForm):
            return self.one_form(target)
        if isinstance(target, FullTensor11):
            return self.tensor(target)
        raise TypeError(f"nabla cannot act on {type(target).__name__}")


def nabla(D: DynCovDerivative, target):
    return D(target)


# --------------------------------------------------------------------------
# Jacobi endomorphism
# --------------------------------------------------------------------------


def jacobi_closed_form(rho: PhaseVectorField, N: NonlinearConnection) -> Matrix:
    """R_jk = (delta xi^i / delta x^j) N_ik - delta chi_k / delta x^j + rho(N_jk)."""
    n, chart = N.n, N.chart
    return [[_sum([N.delta_of(rho.base[i], j) * N[i, k] for i in range(n)], chart)
             - N.delta_of(rho.fiber[k], j) + rho(N[j, k])
             for k in range(n)] for j in range(n)]


class JacobiEndomorphism:
    """Phi = v o L_rho h, with Phi = R_ij dx^i (x) d/dp_j."""

    def __init__(self, rho: PhaseVectorField, N: NonlinearConnection):
        _check_charts(rho, N)
        self.rho = rho
        self.N = N
        self.tensor = N.v @ lie_derivative_tensor11(rho, N.h)
        n = N.n
        self.components = [[self.tensor[n + j, i] for j in range(n)] for i in range(n)]
        self.closed_form = jacobi_closed_form(rho, N)

    def evaluate(self, points) -> np.ndarray:
        return evaluate_matrix(self.components, points)

    def discrepancy(self, points) -> float:
        """Max |intrinsic - closed form| over components."""
        return _maxabs(self.evaluate(points) - evaluate_matrix(self.closed_form, points))

    def verticality_residual(self, points) -> float:
        """max(|h Phi|, |Phi v|)."""
        h, v = self.N.h, self.N.v
        return max(_maxabs((h @ self.tensor).evaluate(points)), _maxabs((self.tensor @ v).evaluate(points)))


def jacobi_endomorphism(field: JRegularField | PhaseVectorField, N: NonlinearConnection) -> JacobiEndomorphism:
    rho = field.rho if isinstance(field, JRegularField) else field
    return JacobiEndomorphism(rho, N)


@dataclass
class JacobiSplitResiduals:
    as_printed: float  # |Phi(X) - Omega(rho, X) - v[v rho, hX]|
    second_slot: float  # same with Omega(X, rho)


def jacobi_split_residuals(rho: PhaseVectorField, N: NonlinearConnection, points) -> JacobiSplitResiduals:
    """Phi = i_rho Omega + v o L_{v rho} h, on the coordinate frame.

    Omega = -1/2 [h, h].  The printed proof uses Omega(rho, X) = v[h rho, hX],
    which is the opposite sign of -N_h(rho, X); both slot conventions are
    reported so the discrepancy is visible instead of silently fixed.
    """
    Phi = JacobiEndomorphism(rho, N).tensor
    Omega = curvature_intrinsic(N)
    h, v = N.h, N.v
    vrho = v.apply(rho)
    first, second = [], []
    for X in coordinate_frame(N.chart):
        extra = v.apply(lie_bracket(vrho, h.apply(X)))
        PX = Phi.apply(X)
        first.append((PX, Omega.field(rho, X) + extra))
        second.append((PX, Omega.field(X, rho) + extra))
    return JacobiSplitResiduals(fields_residual(first, points), fields_residual(second, points))


def horizontal_field(xi, N: NonlinearConnection) -> PhaseVectorField:
    """rho = xi^i delta/delta x^i, so chi_i = xi^k N_ki."""
    chart = N.chart
    n = N.n
    chi = [_sum([xi[k] * N[k, i] for k in range(n)], chart) for i in range(n)]
    return PhaseVectorField(list(xi) + chi, chart)


def horizontal_jacobi_residual(rho: PhaseVectorField, N: NonlinearConnection, points) -> float:
    """max |R_ij - R_kij xi^k| for a horizontal field (R_ij from the intrinsic Phi)."""
    n, chart = N.n, N.chart
    R = curvature_components(N)
    Phi = JacobiEndomorphism(rho, N)
    expected = [[_sum([R[k][i][j] * rho.base[k] for k in range(n)], chart) for j in range(n)] for i in range(n)]
    return _maxabs(Phi.evaluate(points) - evaluate_matrix(expected, points))


# --------------------------------------------------------------------------
# Almost complex structure and identity suites
# --------------------------------------------------------------------------


def almost_complex(field: JRegularField, N: NonlinearConnection, points=None, tol: float = 1e-9) -> FullTensor11:
    """F = h o L_rho h - J.

    With ``points``, warns when N is not the canonical connection of rho
    there (the identities of F are only claimed in that case).
    """
    rho, J = field.rho, field.J
    _check_charts(rho, N)
    if points is not None:
        res = _maxabs(evaluate_matrix(nabla_J_closed_form(field, N), points))
        if res > tol:
            warnings.warn(f"connection is not canonical for rho (|nabla J| = {res:.3e})", stacklevel=2)
    return N.h @ lie_derivative_tensor11(rho, N.h) - J.tensor


def almost_complex_local(J: AdaptedTangentStructure, N: NonlinearConnection) -> FullTensor11:
    """t^ij delta/delta x^i (x) delta p_j - t_ij d/dp_i (x) dx^j, as printed."""
    n, chart = N.n, N.chart
    coframe = N.coframe()
    deltas = [N.delta(i) for i in range(n)]
    zero = ScalarField.constant(0.0, chart)
    rows = [[zero] * (2 * n) for _ in range(2 * n)]
    for i in range(n):
        for j in range(n):
            tij = J.upper[i][j]
            for a in range(2 * n):
                for b in range(2 * n):
                    term = deltas[i].components[a] * coframe[j].components[b]
                    if not term.is_zero and not tij.is_zero:
                        rows[a][b] = rows[a][b] + tij * term
            rows[n + i][j] = rows[n + i][j] - J.lower[i][j]
    return FullTensor11(rows, chart)


def complex_structure_identities(F: FullTensor11, J: AdaptedTangentStructure, N: NonlinearConnection,
                                 rho: PhaseVectorField, points) -> dict[str, float]:
    h, v, Jt = N.h, N.v, J.tensor
    I = FullTensor11.identity(N.chart)
    Phi = JacobiEndomorphism(rho, N).tensor
    Lh = lie_derivative_tensor11(rho, h)
    checks = {
        "F^2 = -Id": (F @ F, -I),
        "F J = h": (F @ Jt, h),
        "J F = v": (Jt @ F, v),
        "v F = -J": (v @ F, -Jt),
        "F h = -J": (F @ h, -Jt),
        "h F = F + J": (h @ F, F + Jt),
        "F v = F + J": (F @ v, F + Jt),
        "N F = F + 2J": (N.tensor @ F, F + Jt + Jt),
        "Phi = L_rho h - F - J": (Phi, Lh - F - Jt),
    }
    return {name: tensor_residual(a, b, points) for name, (a, b) in checks.items()}


def lie_projector_identities(field: JRegularField, N: NonlinearConnection, points) -> dict[str, float]:
    """h o L_rho o J = -h and J o L_rho o v = -v on the coordinate frame."""
    rho, Jt = field.rho, field.J.tensor
    h, v = N.h, N.v
    first, second = [], []
    for X in coordinate_frame(N.chart):
        first.append((h.apply(lie_bracket(rho, Jt.apply(X))), -h.apply(X)))
        second.append((Jt.apply(lie_bracket(rho, v.apply(X))), -v.apply(X)))
    return {"h L_rho J = -h": fields_residual(first, points), "J L_rho v = -v": fields_residual(second, points)}


@dataclass
class DecompositionResiduals:
    decomposition: float  # nabla - (L_rho + F + J - Phi) on frame fields
    nabla_J: float
    nabla_F: float


def decomposition_check(field: JRegularField, N: NonlinearConnection, points,
                        F: FullTensor11 | None = None) -> DecompositionResiduals:
    rho, J = field.rho, field.J
    D = DynCovDerivative(rho, N)
    if F is None:
        F = almost_complex(field, N)
    Phi = JacobiEndomorphism(rho, N).tensor
    Jt = J.tensor
    pairs = []
    for X in coordinate_frame(N.chart):
        rhs = lie_bracket(rho, X) + F.apply(X) + Jt.apply(X) - Phi.apply(X)
        pairs.append((D.vector(X), rhs))
    return DecompositionResiduals(
        fields_residual(pairs, points),
        _maxabs(D.tensor(Jt).evaluate(points)),
        _maxabs(D.tensor(F).evaluate(points)),
    )


def frame_bracket_residuals(field: JRegularField, N: NonlinearConnection, points) -> dict[str, float]:
    """[rho, d/dp_j] and [rho, delta/delta x^j] against their adapted-frame expansions.

    The d/dp_j bracket uses t^ji (the index order the basis action of nabla
    on d/dp_j carries); for symmetric t this is the printed t^ij.
    """
    rho, J = field.rho, field.J
    n, chart = N.n, N.chart
    frame = coordinate_frame(chart)
    deltas = [N.delta(i) for i in range(n)]
    R = jacobi_closed_form(rho, N)
    ps = chart.fiber_names
    first, second = [], []
    for j in range(n):
        dp = frame[n + j]
        expected = PhaseVectorField.zero(chart)
        for i in range(n):
            expected = expected - deltas[i].scale(J.upper[j][i])
        for k in range(n):
            coef = _sum([J.upper[j][i] * N[i, k] for i in range(n)], chart) - rho.fiber[k].diff(ps[j])
            expected = expected + frame[n + k].scale(coef)
        first.append((lie_bracket(rho, dp), expected))

        expected = PhaseVectorField.zero(chart)
        for i in range(n):
            expected = expected - deltas[i].scale(N.delta_of(rho.base[i], j))
        for k in range(n):
            expected = expected + frame[n + k].scale(R[j][k])
        second.append((lie_bracket(rho, deltas[j]), expected))
    return {"[rho, d/dp_j]": fields_residual(first, points),
            "[rho, delta/delta x^j]": fields_residual(second, points)}


# --------------------------------------------------------------------------
# (Semi-)Hamiltonian conditions
# --------------------------------------------------------------------------


@dataclass
class HamiltonianConditions:
    a: float  # dxi^j/dp_i symmetric
    b: float  # dchi_i/dp_j = -dxi^j/dx^i
    c: float  # dchi_i/dx^j symmetric
    tol: float

    @property
    def classification(self) -> str:
        if self.a <= self.tol and self.b <= self.tol:
            return "hamiltonian" if self.c <= self.tol else "semi-hamiltonian"
        return "neither"


def hamiltonian_conditions(rho: PhaseVectorField, points, tol: float = 1e-9) -> HamiltonianConditions:
    chart = rho.chart
    n = chart.n
    xs, ps = chart.base_names, chart.fiber_names
    xi, chi = rho.base, rho.fiber
    a = [xi[j].diff(ps[i]) - xi[i].diff(ps[j]) for i in range(n) for j in range(n)]
    b = [chi[i].diff(ps[j]) + xi[j].diff(xs[i]) for i in range(n) for j in range(n)]
    c = [chi[i].diff(xs[j]) - chi[j].diff(xs[i]) for i in range(n) for j in range(n)]
    vals = evaluate_fields(a + b + c, points)
    m = n * n
    return HamiltonianConditions(_maxabs(vals[:m]), _maxabs(vals[m:2 * m]), _maxabs(vals[2 * m:]), tol)
