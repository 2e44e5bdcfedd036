"""Hamilton spaces, the Legendre diffeomorphism T*M -> TM, and the
Lagrangian semispray side of the duality.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import JRegularField, hamiltonian_conditions, j_regularity_residual
from .expr import Chart, ChartMismatchError, ScalarField, evaluate_fields, substitute
from .frame import PhaseVectorField
from .structures import (
    AdaptedTangentStructure,
    Matrix,
    NonlinearConnection,
    RegularityError,
    check_regular,
    evaluate_matrix,
    poisson_bracket,
    symbolic_inverse,
)

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50


class LegendreError(RuntimeError):
    def __init__(self, message: str, point=None, residual: float | None = None):
        super().__init__(message)
        self.point = point
        self.residual = residual


def _sum(terms, chart) -> ScalarField:
    out = ScalarField.constant(0.0, chart)
    for t in terms:
        if not t.is_zero:
            out = out + t
    return out


def _maxabs(a) -> float:
    return float(np.max(np.abs(a), initial=0.0))


def _hessian(f: ScalarField, names) -> Matrix:
    n = len(names)
    first = [f.diff(a) for a in names]
    H = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            H[i][j] = H[j][i] = first[i].diff(names[j])
    return H


# --------------------------------------------------------------------------
# Hamilton side
# --------------------------------------------------------------------------


class HamiltonModel:
    """A regular Hamiltonian with metric g^ij = d^2H/dp_i dp_j, J_H and rho_H."""

    def __init__(self, H: ScalarField):
        chart = H.chart
        if chart.fiber != "p":
            raise ChartMismatchError("a Hamiltonian lives on a cotangent chart")
        self.H = H
        self.chart = chart
        self.n = chart.n
        xs, ps = chart.base_names, chart.fiber_names
        self.xi = [H.diff(p) for p in ps]
        self.g_upper = _hessian(H, ps)
        self.g_lower = symbolic_inverse(self.g_upper)
        self.J = AdaptedTangentStructure(self.g_lower, self.g_upper)
        self.rho = PhaseVectorField(self.xi + [-H.diff(x) for x in xs], chart)

    @property
    def field(self) -> JRegularField:
        return JRegularField(self.rho, self.J)

    def check_regular(self, points) -> None:
        check_regular(self.g_upper, points, "Hessian g^ij of H")


def build_hamilton_model(H: ScalarField, points=None) -> HamiltonModel:
    m = HamiltonModel(H)
    if points is not None:
        m.check_regular(points)
    return m


def canonical_hamilton_connection(m: HamiltonModel) -> NonlinearConnection:
    """N_ij = 1/2 ({g_ij, H} - (g_ik d2H/dp_k dx^j + g_jk d2H/dp_k dx^i))."""
    n, chart = m.n, m.chart
    xs = chart.base_names
    g = m.g_lower
    mixed = [[m.xi[k].diff(xs[j]) for j in range(n)] for k in range(n)]  # d2H/dp_k dx^j
    N = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            a = _sum([g[i][k] * mixed[k][j] for k in range(n)], chart)
            b = _sum([g[j][k] * mixed[k][i] for k in range(n)], chart)
            N[i][j] = N[j][i] = (poisson_bracket(g[i][j], m.H) - (a + b)) * 0.5
    return NonlinearConnection(N)


def energy_conservation_residual(m: HamiltonModel, points) -> float:
    return _maxabs(m.rho(m.H).evaluate(points))


# --------------------------------------------------------------------------
# Legendre map
# --------------------------------------------------------------------------


@dataclass
class NewtonResult:
    points: np.ndarray  # cotangent points (x, p)
    iterations: np.ndarray
    residuals: np.ndarray


class LegendreMap:
    """Psi: (x, p) -> (x, dH/dp) and its Newton inverse."""

    def __init__(self, model: HamiltonModel, tol: float = NEWTON_TOL, max_iter: int = NEWTON_MAX_ITER):
        self.model = model
        self.tol = tol
        self.max_iter = max_iter
        self.cotangent = model.chart
        self.tangent = Chart.tangent(model.n)

    def forward(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        y = evaluate_fields(self.model.xi, pts).T
        return np.hstack([pts[:, : self.model.n], y])

    def solve(self, tangent_points) -> NewtonResult:
        """Solve dH/dp(x, p) = y for p, starting from p = y."""
        tp = np.atleast_2d(np.asarray(tangent_points, dtype=float))
        n = self.model.n
        x, y = tp[:, :n], tp[:, n:]
        p = y.copy()
        m = len(tp)
        iters = np.zeros(m, dtype=int)
        res = np.full(m, np.inf)
        active = np.ones(m, dtype=bool)
        for _ in range(self.max_iter):
            if not active.any():
                break
            idx = np.flatnonzero(active)
            cur = np.hstack([x[idx], p[idx]])
            F = evaluate_fields(self.model.xi, cur).T - y[idx]
            G = evaluate_matrix(self.model.g_upper, cur)
            dets = np.linalg.det(G)
            if np.any(np.abs(dets) < 1e-14):
                k = idx[np.flatnonzero(np.abs(dets) < 1e-14)[0]]
                raise LegendreError("singular Jacobian in Legendre inversion", tp[k], float(np.linalg.norm(F[0])))
            p[idx] -= np.linalg.solve(G, F[..., None])[..., 0]
            iters[idx] += 1
            F = evaluate_fields(self.model.xi, np.hstack([x[idx], p[idx]])).T - y[idx]
            res[idx] = np.linalg.norm(F, axis=1)
            active[idx[res[idx] <= self.tol]] = False
        if active.any():
            k = np.flatnonzero(active)[0]
            raise LegendreError(f"Newton did not converge in {self.max_iter} iterations "
                                f"(last residual {res[k]:.3e})", tp[k], float(res[k]))
        return NewtonResult(np.hstack([x, p]), iters, res)

    def inverse(self, tangent_points) -> np.ndarray:
        return self.solve(tangent_points).points


def legendre_forward(lmap: LegendreMap, pt) -> np.ndarray:
    return lmap.forward(pt)[0]


def legendre_inverse(lmap: LegendreMap, pt) -> tuple[np.ndarray, int]:
    r = lmap.solve(pt)
    return r.points[0], int(r.iterations[0])


def induced_lagrangian(lmap: LegendreMap, tangent_points) -> np.ndarray:
    """L(x, y) = zeta_i y^i - H(x, zeta) with zeta from the Newton inverse."""
    tp = np.atleast_2d(np.asarray(tangent_points, dtype=float))
    cot = lmap.inverse(tp)
    n = lmap.model.n
    return np.sum(cot[:, n:] * tp[:, n:], axis=1) - lmap.model.H.evaluate(cot)


def lagrangian_consistency(lmap: LegendreMap, L: ScalarField, tangent_points) -> float:
    """max |L_supplied - L_induced| on the given tangent points."""
    return _maxabs(L.evaluate(tangent_points) - induced_lagrangian(lmap, tangent_points))


def roundtrip_error(lmap: LegendreMap, tangent_points) -> float:
    tp = np.atleast_2d(np.asarray(tangent_points, dtype=float))
    return _maxabs(lmap.forward(lmap.inverse(tp)) - tp)


def inverse_function_residuals(lmap: LegendreMap, tangent_points, h: float = 1e-5) -> tuple[float, float]:
    """Central differences of zeta against (d zeta/dy) o Psi = g_ij and
    (d zeta/dx) o Psi = -g_ik dxi^k/dx^j.  Returns (y-residual, x-residual)."""
    tp = np.atleast_2d(np.asarray(tangent_points, dtype=float))
    m, n = lmap.model, lmap.model.n
    cot = lmap.inverse(tp)
    g = evaluate_matrix(m.g_lower, cot)
    xs = m.chart.base_names
    dxi_dx = evaluate_matrix([[m.xi[k].diff(xs[j]) for j in range(n)] for k in range(n)], cot)
    expected_x = -np.einsum("mik,mkj->mij", g, dxi_dx)
    ry = rx = 0.0
    for c in range(2 * n):
        step = np.zeros(2 * n)
        step[c] = h
        zp = lmap.inverse(tp + step)[:, n:]
        zm = lmap.inverse(tp - step)[:, n:]
        fd = (zp - zm) / (2 * h)
        if c < n:
            rx = max(rx, _maxabs(fd - expected_x[:, :, c]))
        else:
            ry = max(ry, _maxabs(fd - g[:, :, c - n]))
    return ry, rx


# --------------------------------------------------------------------------
# Lagrange side
# --------------------------------------------------------------------------


class LagrangeModel:
    """A regular Lagrangian on a tangent chart with its canonical semispray."""

    def __init__(self, L: ScalarField):
        chart = L.chart
        if chart.fiber != "y":
            raise ChartMismatchError("a Lagrangian lives on a tangent chart")
        self.L = L
        self.chart = chart
        self.n = chart.n
        xs, ys = chart.base_names, chart.fiber_names
        self.zeta = [L.diff(y) for y in ys]
        self.g_lower = _hessian(L, ys)
        self.g_upper = symbolic_inverse(self.g_lower)
        yv = [ScalarField.coordinate(y, chart) for y in ys]
        n = self.n
        force = [L.diff(xs[j]) - _sum([self.zeta[j].diff(xs[k]) * yv[k] for k in range(n)], chart)
                 for j in range(n)]
        S = [_sum([self.g_upper[i][j] * force[j] for j in range(n)], chart) for i in range(n)]
        self.spray = PhaseVectorField(yv + S, chart)
        self.connection = spray_connection(self.spray)

    def check_regular(self, tangent_points) -> None:
        check_regular(self.g_lower, tangent_points, "fiber metric d2L/dy dy")


def spray_connection(S: PhaseVectorField) -> Matrix:
    """N^i_j = -1/2 dS^i/dy^j, returned as [i][j]."""
    ys = S.chart.fiber_names
    return [[S.fiber[i].diff(ys[j]) * -0.5 for j in range(S.chart.n)] for i in range(S.chart.n)]


def semispray_and_connection(m: LagrangeModel) -> tuple[PhaseVectorField, Matrix]:
    return m.spray, m.connection


def perturb_spray(S: PhaseVectorField, i: int, term: ScalarField) -> PhaseVectorField:
    comps = list(S.components)
    comps[S.chart.n + i] = comps[S.chart.n + i] + term
    return PhaseVectorField(comps, S.chart)


def is_semispray(S: PhaseVectorField) -> bool:
    return S.chart.fiber == "y" and all(
        c.expr is ScalarField.coordinate(y, S.chart).expr for c, y in zip(S.base, S.chart.fiber_names))


def derive_lagrangian(m: HamiltonModel, points) -> ScalarField:
    """Closed-form Legendre transform of a Hamiltonian quadratic in p.

    H = 1/2 p.A(x).p + b(x).p + c(x) gives L = 1/2 (y-b).A^-1.(y-b) - c.
    Raises ValueError when third fiber derivatives do not vanish on ``points``.
    """
    chart, n = m.chart, m.n
    ps = chart.fiber_names
    third = [m.g_upper[i][j].diff(ps[k]) for i in range(n) for j in range(n) for k in range(n)]
    if _maxabs(evaluate_fields(third, points)) > 1e-10:
        raise ValueError("no closed-form Lagrangian: H is not quadratic in p; supply 'lagrangian'")
    tchart = Chart.tangent(n)
    at_zero = {p: ScalarField.constant(0.0, chart).expr for p in ps}

    def on_tangent(f: ScalarField) -> ScalarField:
        return ScalarField(substitute(f.expr, at_zero), tchart)

    Ainv = [[on_tangent(m.g_lower[i][j]) for j in range(n)] for i in range(n)]
    b = [on_tangent(xi) for xi in m.xi]
    c = on_tangent(m.H)
    w = [ScalarField.coordinate(y, tchart) - b[i] for i, y in enumerate(tchart.fiber_names)]
    quad = _sum([Ainv[i][j] * w[i] * w[j] for i in range(n) for j in range(n)], tchart)
    return quad * 0.5 - c


def pullback_semispray(m: HamiltonModel, S: PhaseVectorField) -> PhaseVectorField:
    """rho = Psi_*^{-1} S = xi^i d/dx^i + (-xi^i g_kj dxi^j/dx^i + S^i g_ik) d/dp_k,
    with S^i composed with y = xi(x, p) by symbolic substitution."""
    if not is_semispray(S):
        raise ValueError("base components of a semispray must be y^1..y^n")
    n, chart = m.n, m.chart
    if S.chart.n != n:
        raise ChartMismatchError("semispray and Hamiltonian have different dimensions")
    xs = chart.base_names
    sub_map = {y: m.xi[i].expr for i, y in enumerate(S.chart.fiber_names)}
    Sp = [ScalarField(substitute(S.fiber[i].expr, sub_map), chart) for i in range(n)]
    g = m.g_lower
    chi = []
    for k in range(n):
        a = _sum([m.xi[i] * g[k][j] * m.xi[j].diff(xs[i]) for i in range(n) for j in range(n)], chart)
        b = _sum([Sp[i] * g[i][k] for i in range(n)], chart)
        chi.append(b - a)
    return PhaseVectorField(list(m.xi) + chi, chart)


# --------------------------------------------------------------------------
# Duality report
# --------------------------------------------------------------------------


@dataclass
class DualityReport:
    regularity: float  # J_H-regularity residual of the pulled-back field
    semi_a: float
    semi_b: float
    metric: float  # S(g_ik) - N^l_k g_li - N^l_i g_lk
    symplectic: float  # N^l_i g_lk - N^l_k g_li + d2L/dx^k dy^i - d2L/dx^i dy^k
    tol: float

    @property
    def semi_hamiltonian(self) -> bool:
        return max(self.regularity, self.semi_a, self.semi_b) <= self.tol

    @property
    def canonical(self) -> bool:
        return self.metric <= self.tol and self.symplectic <= self.tol

    @property
    def equivalence_holds(self) -> bool:
        return self.semi_hamiltonian == self.canonical


def metric_condition(lag: LagrangeModel, S: PhaseVectorField) -> Matrix:
    n, chart = lag.n, lag.chart
    g, N = lag.g_lower, spray_connection(S)
    return [[S(g[i][k]) - _sum([N[l][k] * g[l][i] + N[l][i] * g[l][k] for l in range(n)], chart)
             for k in range(n)] for i in range(n)]


def symplectic_condition(lag: LagrangeModel, S: PhaseVectorField) -> Matrix:
    n, chart = lag.n, lag.chart
    xs = chart.base_names
    g, N = lag.g_lower, spray_connection(S)
    return [[_sum([N[l][i] * g[l][k] - N[l][k] * g[l][i] for l in range(n)], chart)
             + lag.zeta[i].diff(xs[k]) - lag.zeta[k].diff(xs[i])
             for k in range(n)] for i in range(n)]


def duality_report(m: HamiltonModel, lag: LagrangeModel, S: PhaseVectorField, points,
                   tol: float = 1e-10) -> DualityReport:
    """``points`` are cotangent points; the tangent-side conditions are
    evaluated at their Legendre images."""
    rho = pullback_semispray(m, S)
    reg = j_regularity_residual(rho, m.J, points).coordinate
    hc = hamiltonian_conditions(rho, points, tol)
    tp = LegendreMap(m).forward(points)
    metric = _maxabs(evaluate_matrix(metric_condition(lag, S), tp))
    sympl = _maxabs(evaluate_matrix(symplectic_condition(lag, S), tp))
    return DualityReport(reg, hc.a, hc.b, metric, sympl, tol)
