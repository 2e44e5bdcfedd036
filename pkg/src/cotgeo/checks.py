"""The ordered identity suite behind ``geocli check`` and ``geocli legendre``.

Each check yields one record.  Informational records carry diagnostics
(properties a model may or may not have, or identities claimed only for
the canonical connection when another one is in use) and never affect the
overall verdict.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import dynamics as dyn
from . import hamilton as ham
from . import structures as st
from .expr import ScalarField, evaluate_fields, fd_gradient_batch
from .frame import FullTensor11, coordinate_frame, fn_bracket_11, lie_bracket, nijenhuis
from .model import ModelFile

FD_STEP = 1e-5
FD_ABS_TOL = 1e-8  # for derivatives of magnitude below one
NEWTON_TOL = ham.NEWTON_TOL


@dataclass
class Tolerances:
    algebraic: float = 1e-12
    identity: float = 1e-10
    symbolic: float = 1e-9
    numeric: float = 1e-6


@dataclass
class CheckRecord:
    name: str
    anchor: str
    max_abs_residual: float
    tolerance: float
    points_evaluated: int
    informational: bool = False

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.max_abs_residual) and self.max_abs_residual <= self.tolerance)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "anchor": self.anchor,
            "max_abs_residual": float(self.max_abs_residual),
            "tolerance": float(self.tolerance),
            "points_evaluated": int(self.points_evaluated),
            "pass": self.passed,
            "informational": self.informational,
        }


def overall_pass(records) -> bool:
    return all(r.passed for r in records if not r.informational)


def _maxabs(a) -> float:
    return float(np.max(np.abs(a), initial=0.0))


# --------------------------------------------------------------------------
# Resolved ingredients
# --------------------------------------------------------------------------


@dataclass
class Setup:
    model: ModelFile
    points: np.ndarray
    tol: Tolerances
    hamilton: ham.HamiltonModel | None
    J: st.AdaptedTangentStructure
    rho: object
    N: st.NonlinearConnection
    N_canonical: st.NonlinearConnection
    overridden: bool
    canonical: bool = True
    homogeneous_J: bool = True
    symmetric_J: bool = True
    rho_is_hamiltonian: bool = False
    J_from_hamiltonian: bool = False
    cache: dict = field(default_factory=dict)

    @property
    def chart(self):
        return self.model.chart

    @property
    def field(self) -> dyn.JRegularField:
        return dyn.JRegularField(self.rho, self.J)

    @property
    def m(self) -> int:
        return len(self.points)

    def memo(self, key, fn):
        if key not in self.cache:
            self.cache[key] = fn()
        return self.cache[key]


def prepare(model: ModelFile, points, tol: Tolerances | None = None) -> Setup:
    """Assemble H, J, rho and N for ``model``.  Raises RegularityError if a
    required inverse is singular at a sample point."""
    tol = tol or Tolerances()
    hm = None
    if model.hamiltonian is not None:
        hm = ham.build_hamilton_model(model.hamiltonian, points)
    J = st.AdaptedTangentStructure(model.tangent_structure) if model.tangent_structure else hm.J
    J.check_regular(points)
    rho = model.vector_field if model.vector_field is not None else hm.rho
    field_ = dyn.JRegularField(rho, J)
    N_can = dyn.canonical_connection(field_)
    overridden = model.connection is not None
    N = st.NonlinearConnection(model.connection) if overridden else N_can
    s = Setup(model, np.asarray(points, dtype=float), tol, hm, J, rho, N, N_can, overridden,
              J_from_hamiltonian=model.tangent_structure is None and hm is not None,
              rho_is_hamiltonian=model.vector_field is None and hm is not None)
    if overridden:
        s.canonical = _maxabs(st.evaluate_matrix(dyn.nabla_J_closed_form(field_, N), points)) <= tol.symbolic
    diag = st.tangent_structure_diagnostics(J, points)
    s.homogeneous_J = diag.homogeneity <= tol.symbolic
    s.symmetric_J = diag.symmetry <= tol.algebraic
    s.cache["diagnostics"] = diag
    return s


# --------------------------------------------------------------------------
# Registry
# --------------------------------------------------------------------------

CheckFn = Callable[[Setup], list]
REGISTRY: list[tuple[str, CheckFn]] = []


def check(group: str):
    def deco(fn: CheckFn) -> CheckFn:
        REGISTRY.append((group, fn))
        return fn
    return deco


def _rec(s: Setup, name, anchor, residual, tol, informational=False, points=None) -> CheckRecord:
    return CheckRecord(name, anchor, float(residual), tol, s.m if points is None else points, informational)


def model_fields(s: Setup) -> list[tuple[str, ScalarField]]:
    """Every scalar field the model supplies or derives on the cotangent chart."""
    out = []
    if s.hamilton is not None:
        out.append(("H", s.hamilton.H))
    n = s.model.n
    for i in range(n):
        for j in range(n):
            out.append((f"t_{i + 1}{j + 1}", s.J.lower[i][j]))
            out.append((f"N_{i + 1}{j + 1}", s.N[i, j]))
    for i in range(n):
        out.append((f"xi^{i + 1}", s.rho.base[i]))
        out.append((f"chi_{i + 1}", s.rho.fiber[i]))
    return out


@check("derivatives")
def _derivative_checks(s: Setup):
    rel, small, mixed = 0.0, 0.0, 0.0
    coords = s.chart.coords
    for _, f in model_fields(s):
        sym, fd = fd_gradient_batch(f, s.points, FD_STEP)
        err = np.abs(sym - fd)
        big = np.abs(sym) >= 1.0
        if big.any():
            rel = max(rel, float(np.max(err[big] / np.abs(sym[big]))))
        if (~big).any():
            small = max(small, float(np.max(err[~big])))
        pairs = []
        for a in range(len(coords)):
            for b in range(a + 1, len(coords)):
                pairs.append(f.diff(coords[a]).diff(coords[b]) - f.diff(coords[b]).diff(coords[a]))
        mixed = max(mixed, _maxabs(evaluate_fields(pairs, s.points)))
    t = s.tol
    return [
        _rec(s, "derivative.fd_relative", "symbolic df/dc vs central difference, |df/dc| >= 1 (relative)", rel, t.numeric),
        _rec(s, "derivative.fd_absolute", "symbolic df/dc vs central difference, |df/dc| < 1 (absolute)", small, FD_ABS_TOL),
        _rec(s, "derivative.mixed_partials", "d_a d_b f = d_b d_a f", mixed, t.algebraic),
    ]


@check("projectors")
def _projector_checks(s: Setup):
    N, J = s.N, s.J.tensor
    h, v = N.h, N.v
    I = FullTensor11.identity(s.chart)
    R = dyn.tensor_residual
    P = s.points
    proj = max(R(h @ h, h, P), R(v @ v, v, P), _maxabs((h @ v).evaluate(P)), _maxabs((v @ h).evaluate(P)),
               R(h + v, I, P), R(h - v, N.tensor, P))
    rel = max(R(J @ h, J, P), _maxabs((h @ J).evaluate(P)), _maxabs((J @ v).evaluate(P)), R(v @ J, J, P))
    sq = _maxabs((J @ J).evaluate(P))
    t = s.tol.algebraic
    return [
        _rec(s, "projectors.algebra", "h^2 = h, v^2 = v, hv = vh = 0, h + v = Id, h - v = N", proj, t),
        _rec(s, "tangent_structure.projector_relations", "Jh = J, hJ = 0, Jv = 0, vJ = J", rel, t),
        _rec(s, "tangent_structure.square_zero", "J^2 = 0", sq, t),
    ]


@check("curvature")
def _curvature_checks(s: Setup):
    N, n, P = s.N, s.model.n, s.points
    R = st.curvature_components(N)
    Omega = st.curvature_intrinsic(N)
    deltas = [N.delta(i) for i in range(n)]
    anti, cross = 0.0, 0.0
    flat = [R[i][j][k] for i in range(n) for j in range(n) for k in range(n)]
    size = _maxabs(evaluate_fields(flat, P)) if flat else 0.0
    for i in range(n):
        for j in range(n):
            anti = max(anti, _maxabs(evaluate_fields([R[i][j][k] + R[j][i][k] for k in range(n)], P)))
            if i == j:
                continue
            val = Omega(deltas[i], deltas[j], P)
            vals = evaluate_fields([R[i][j][k] for k in range(n)], P).T
            cross = max(cross, _maxabs(val[:, :n]), _maxabs(val[:, n:] + vals))
    integr = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            integr = max(integr, _maxabs(N.v.apply(lie_bracket(deltas[i], deltas[j])).evaluate(P)))
    t = s.tol
    return [
        _rec(s, "curvature.antisymmetry", "R_ijk = -R_jik", anti, t.algebraic),
        _rec(s, "curvature.coordinate_vs_bracket",
             "R_ijk = dN_jk/dx^i - dN_ik/dx^j (adapted) vs Omega(delta_i, delta_j) = -R_ijk d/dp_k, Omega = -1/2 [h,h]",
             cross, t.symbolic),
        _rec(s, "curvature.magnitude", "max |R_ijk| (zero iff the horizontal distribution is integrable)",
             size, t.symbolic, informational=True),
        _rec(s, "curvature.horizontal_integrability", "max |v[delta_i, delta_j]|", integr, t.symbolic,
             informational=True),
    ]


@check("torsion")
def _torsion_checks(s: Setup):
    N, J, n, P = s.N, s.J, s.model.n, s.points
    T = st.torsion(J, N)
    form = st.torsion_intrinsic(J, N)
    frame = coordinate_frame(s.chart)
    cross = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            val = form(frame[i], frame[j], P)
            vals = evaluate_fields([T[i][j][k] for k in range(n)], P).T
            cross = max(cross, _maxabs(val[:, :n]), _maxabs(val[:, n:] - vals))
    strong = np.asarray(st.evaluate_matrix(st.strong_torsion(s.rho, J, N), P))
    strong_int = st.strong_torsion_intrinsic(s.rho, J, N, P)
    ten = st.evaluate_matrix(st.tension(N), P)
    ten_int = st.tension_intrinsic(N).evaluate(P)
    # the d/dp block of the intrinsic tension holds t_ij at [n + j, i]
    ten_cross = max(_maxabs(ten_int[:, n:, :n] - np.transpose(ten, (0, 2, 1))),
                    _maxabs(ten_int[:, :n, :]), _maxabs(ten_int[:, n:, n:]))
    weak = max((_maxabs(evaluate_fields([T[i][j][k] for k in range(n)], P))
                for i in range(n) for j in range(n)), default=0.0)
    t = s.tol
    return [
        _rec(s, "torsion.coordinate_vs_bracket",
             "T_ijk = t_is dN_jk/dp_s - t_js dN_ik/dp_s + dt_jk/dx^i - dt_ik/dx^j (adapted) vs [J, h](d_i, d_j)",
             cross, t.symbolic),
        _rec(s, "torsion.magnitude", "max |T_ijk| (weak torsion)", weak, t.symbolic, informational=True),
        _rec(s, "tension.coordinate_vs_lie_derivative", "p_k dN_ij/dp_k - N_ij vs 1/2 L_C*(h - v)",
             ten_cross, t.symbolic),
        _rec(s, "tension.magnitude", "max |tension| (zero iff N is 1-homogeneous in p)", _maxabs(ten),
             t.symbolic, informational=True),
        _rec(s, "strong_torsion.coordinate_vs_intrinsic",
             "xi^i T_ijk + N_jk - p_s dN_jk/dp_s vs (i_rho T - tension)(d_j)", _maxabs(strong - strong_int),
             t.symbolic),
    ]


@check("tangent_structure")
def _tangent_structure_checks(s: Setup):
    diag = s.cache["diagnostics"]
    J, n, P = s.J, s.model.n, s.points
    frame = coordinate_frame(s.chart)
    NJ = nijenhuis(J.tensor)
    FN = fn_bracket_11(J.tensor, J.tensor)
    nij, nij_vs_fn = 0.0, 0.0
    for a in range(2 * n):
        for b in range(a + 1, 2 * n):
            x = NJ(frame[a], frame[b], P)
            nij = max(nij, _maxabs(x))
            nij_vs_fn = max(nij_vs_fn, _maxabs(x - 0.5 * FN(frame[a], frame[b], P)))
    t = s.tol
    hamiltonian_J = s.J_from_hamiltonian
    out = [
        _rec(s, "tangent_structure.integrability", "dt^ij/dp_k = dt^kj/dp_i", diag.integrability, t.symbolic,
             informational=not hamiltonian_J),
        _rec(s, "tangent_structure.nijenhuis", "N_J = 0 on coordinate frame pairs", nij, t.symbolic,
             informational=not hamiltonian_J),
        _rec(s, "frame.nijenhuis_vs_fn_bracket", "N_J = 1/2 [J, J]", nij_vs_fn, t.symbolic),
        _rec(s, "tangent_structure.homogeneity", "p_k dt_ij/dp_k = 0", diag.homogeneity, t.symbolic,
             informational=True),
        _rec(s, "tangent_structure.symmetry", "t_ij = t_ji", diag.symmetry, t.algebraic, informational=True),
        _rec(s, "connection.symmetry", "N_ij = N_ji", s.N.symmetry_residual(P), t.algebraic, informational=True),
    ]
    if s.hamilton is not None and s.model.tangent_structure is not None:
        g = s.hamilton.g_upper
        metric = _maxabs(evaluate_fields([J.upper[i][j] - g[i][j] for i in range(n) for j in range(n)], P))
        out.append(_rec(s, "tangent_structure.metric", "t^ij = g^ij = d2H/dp_i dp_j", metric, t.symbolic,
                        informational=True))
    return out


@check("regularity")
def _regularity_checks(s: Setup):
    res = dyn.j_regularity_residual(s.rho, s.J, s.points)
    liou = dyn.liouville_residual(s.rho, s.J, s.points)
    t = s.tol.symbolic
    return [
        _rec(s, "j_regularity.coordinate", "t^ij = dxi^j/dp_i", res.coordinate, t),
        _rec(s, "j_regularity.intrinsic", "J[rho, JX] = -JX on coordinate frame fields", res.intrinsic, t),
        _rec(s, "j_regularity.liouville", "J rho = C* (for 0-homogeneous J)", liou, t,
             informational=not s.homogeneous_J),
    ]


@check("canonical_connection")
def _connection_checks(s: Setup):
    f, P = s.field, s.points
    N_int = dyn.canonical_connection_intrinsic(f)
    agree = _maxabs(s.N_canonical.evaluate(P) - N_int.evaluate(P))
    D = dyn.DynCovDerivative(s.rho, s.N)
    nabla_J = s.memo("nabla_J", lambda: _maxabs(D.tensor(s.J.tensor).evaluate(P)))
    closed = _maxabs(st.evaluate_matrix(dyn.nabla_J_closed_form(f, s.N), P))
    # closed form holds the (dx^i, d/dp_j) block; every other block of nabla J vanishes
    DJ = D.tensor(s.J.tensor).evaluate(P)
    n = s.model.n
    closed_vs = max(_maxabs(DJ[:, n:, :n] - np.transpose(st.evaluate_matrix(dyn.nabla_J_closed_form(f, s.N), P),
                                                         (0, 2, 1))),
                    _maxabs(DJ[:, :n, :]), _maxabs(DJ[:, n:, n:]))
    eq = dyn.lie_projector_identities(f, s.N, P)
    t = s.tol
    out = [
        _rec(s, "connection.coordinate_vs_lie_derivative",
             "N_ij = 1/2 (t_ik dchi_j/dp_k - t_kj dxi^k/dx^i - rho(t_ij)) vs N = -L_rho J", agree, t.symbolic),
        _rec(s, "nabla_J.vanishes", "nabla J = 0 iff N is the canonical connection of rho", nabla_J, t.symbolic),
        _rec(s, "nabla_J.closed_form_vs_intrinsic",
             "nabla J = (rho(t_ij) + t_kj dxi^k/dx^i - t_ik dchi_j/dp_k + 2 N_ij) dx^i (x) d/dp_j", closed_vs,
             t.symbolic),
        _rec(s, "nabla_J.closed_form_magnitude", "max |nabla J| from the closed form", closed, t.symbolic,
             informational=True),
    ]
    for name, val in eq.items():
        out.append(_rec(s, f"lie_projector.{_SLUGS[name]}", name, val, t.symbolic, informational=not s.canonical))
    return out


@check("jacobi")
def _jacobi_checks(s: Setup):
    P, N, rho = s.points, s.N, s.rho
    jac = dyn.JacobiEndomorphism(rho, N)
    split = dyn.jacobi_split_residuals(rho, N, P)
    hor = dyn.horizontal_field(rho.base, N)
    hor_res = dyn.horizontal_jacobi_residual(hor, N, P)
    D = dyn.DynCovDerivative(hor, N)
    nabla_hor = _maxabs(D.vector(hor).evaluate(P))
    t = s.tol
    return [
        _rec(s, "jacobi.coordinate_vs_intrinsic",
             "R_jk = (delta xi^i/delta x^j) N_ik - delta chi_k/delta x^j + rho(N_jk) vs Phi = v o L_rho h",
             jac.discrepancy(P), t.symbolic),
        _rec(s, "jacobi.vertical", "h Phi = 0, Phi v = 0", jac.verticality_residual(P), t.identity),
        _rec(s, "jacobi.split_first_slot",
             "Phi(X) = Omega(rho, X) + v[v rho, hX] (formula-discrepancy finding when nonzero)",
             split.as_printed, t.symbolic, informational=True),
        _rec(s, "jacobi.split_second_slot", "Phi(X) = Omega(X, rho) + v[v rho, hX]", split.second_slot,
             t.symbolic),
        _rec(s, "jacobi.horizontal_field", "rho = xi^i delta_i: R_ij = xi^k R_kij", hor_res, t.symbolic),
        _rec(s, "nabla.horizontal_field", "rho = xi^i delta_i: nabla rho = 0", nabla_hor, t.symbolic),
    ]


@check("nabla")
def _nabla_checks(s: Setup):
    P, N, rho = s.points, s.N, s.rho
    D = dyn.DynCovDerivative(rho, N)
    n = s.model.n
    hv = max(_maxabs(D.tensor(N.h).evaluate(P)), _maxabs(D.tensor(N.v).evaluate(P)))
    f = ScalarField.coordinate(s.chart.base_names[0], s.chart) * ScalarField.coordinate(s.chart.fiber_names[-1], s.chart) + 1.0
    X = N.delta(0) + coordinate_frame(s.chart)[2 * n - 1]
    leibniz = dyn.fields_residual([(D.vector(X.scale(f)), X.scale(rho(f)) + D.vector(X).scale(f))], P)
    frame = coordinate_frame(s.chart)
    deltas = [N.delta(i) for i in range(n)]
    ps = s.chart.fiber_names
    basis = []
    for j in range(n):
        exp_h = deltas[0].scale(ScalarField.constant(0.0, s.chart))
        for i in range(n):
            exp_h = exp_h - deltas[i].scale(N.delta_of(rho.base[i], j))
        basis.append((D.vector(deltas[j]), exp_h))
        exp_v = frame[n].scale(ScalarField.constant(0.0, s.chart))
        for k in range(n):
            coef = sum((s.J.upper[j][i] * N[i, k] for i in range(n)), ScalarField.constant(0.0, s.chart)) \
                - rho.fiber[k].diff(ps[j])
            exp_v = exp_v + frame[n + k].scale(coef)
        basis.append((D.vector(frame[n + j]), exp_v))
    basis_res = dyn.fields_residual(basis, P)
    energy = None
    if s.hamilton is not None:
        energy = _maxabs(D.scalar(s.hamilton.H).evaluate(P))
    t = s.tol
    out = [
        _rec(s, "nabla.projectors", "nabla h = nabla v = 0", hv, t.identity),
        _rec(s, "nabla.leibniz", "nabla(fX) = rho(f) X + f nabla X", leibniz, t.identity),
        _rec(s, "nabla.basis_action",
             "nabla delta_j = -(delta xi^i/delta x^j) delta_i, nabla d^j = (t^ji N_ik - dchi_k/dp_j) d^k",
             basis_res, t.symbolic),
    ]
    if energy is not None:
        out.append(_rec(s, "nabla.energy", "nabla H = rho(H) = 0", energy, t.algebraic,
                        informational=not s.rho_is_hamiltonian))
    return out


@check("almost_complex")
def _almost_complex_checks(s: Setup):
    P, N = s.points, s.N
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        F = dyn.almost_complex(s.field, N)
    local = dyn.almost_complex_local(s.J, N)
    t = s.tol
    info = not s.canonical
    out = [_rec(s, "almost_complex.local_vs_intrinsic",
                "F = t^ij delta_i (x) delta p_j - t_ij d^i (x) dx^j vs h o L_rho h - J",
                dyn.tensor_residual(F, local, P), t.symbolic, informational=info or not s.symmetric_J)]
    for name, val in dyn.complex_structure_identities(F, s.J, N, s.rho, P).items():
        out.append(_rec(s, f"almost_complex.{_SLUGS[name]}", name, val, t.identity, informational=info))
    dec = dyn.decomposition_check(s.field, N, P, F)
    out += [
        _rec(s, "decomposition.nabla", "nabla = L_rho + F + J - Phi on coordinate frame fields", dec.decomposition,
             t.identity, informational=info),
        _rec(s, "decomposition.nabla_J", "nabla J = 0", dec.nabla_J, t.identity, informational=info),
        _rec(s, "decomposition.nabla_F", "nabla F = 0", dec.nabla_F, t.identity, informational=info),
    ]
    return out


@check("frame_brackets")
def _bracket_checks(s: Setup):
    res = dyn.frame_bracket_residuals(s.field, s.N, s.points)
    anchors = {
        "[rho, d/dp_j]": "[rho, d^j] = -t^ji delta_i + (t^ji N_ik - dchi_k/dp_j) d^k",
        "[rho, delta/delta x^j]": "[rho, delta_j] = -(delta xi^i/delta x^j) delta_i + R_jk d^k",
    }
    return [_rec(s, f"bracket.{_SLUGS[k]}", anchors[k], v, s.tol.symbolic) for k, v in res.items()]


@check("hamilton")
def _hamilton_checks(s: Setup):
    if s.hamilton is None:
        return []
    P, hm, t = s.points, s.hamilton, s.tol
    N26 = ham.canonical_hamilton_connection(hm)
    agree = _maxabs(N26.evaluate(P) - s.N_canonical.evaluate(P))
    sym = N26.symmetry_residual(P)
    ten = _maxabs(st.evaluate_matrix(st.tension(N26), P))
    hc = dyn.hamiltonian_conditions(hm.rho, P, t.algebraic)
    energy = ham.energy_conservation_residual(hm, P)
    out = [
        _rec(s, "hamilton.connection_agreement",
             "1/2 ({g_ij, H} - g_ik d2H/dp_k dx^j - g_jk d2H/dp_k dx^i) vs canonical connection of (rho_H, J_H)",
             agree, t.symbolic, informational=not (s.J_from_hamiltonian and s.rho_is_hamiltonian)),
        _rec(s, "hamilton.connection_symmetry", "N_ij = N_ji for the Hamilton connection", sym, t.algebraic),
        _rec(s, "hamilton.connection_tension", "tension of the Hamilton connection", ten, t.identity,
             informational=True),
        _rec(s, "hamilton.energy", "rho_H(H) = 0", energy, t.algebraic),
        _rec(s, "hamilton.condition_a", "dxi^j/dp_i = dxi^i/dp_j for rho_H", hc.a, t.algebraic),
        _rec(s, "hamilton.condition_b", "dchi_i/dp_j = -dxi^j/dx^i for rho_H", hc.b, t.algebraic),
        _rec(s, "hamilton.condition_c", "dchi_i/dx^j = dchi_j/dx^i for rho_H", hc.c, t.algebraic),
    ]
    if not s.rho_is_hamiltonian:
        u = dyn.hamiltonian_conditions(s.rho, P, t.symbolic)
        out += [
            _rec(s, "vector_field.condition_a", "dxi^j/dp_i symmetric", u.a, t.symbolic, informational=True),
            _rec(s, "vector_field.condition_b", "dchi_i/dp_j = -dxi^j/dx^i", u.b, t.symbolic, informational=True),
            _rec(s, "vector_field.condition_c", "dchi_i/dx^j symmetric", u.c, t.symbolic, informational=True),
        ]
    return out


_SLUGS = {
    "h L_rho J = -h": "h_lie_J",
    "J L_rho v = -v": "J_lie_v",
    "F^2 = -Id": "square",
    "F J = h": "FJ",
    "J F = v": "JF",
    "v F = -J": "vF",
    "F h = -J": "Fh",
    "h F = F + J": "hF",
    "F v = F + J": "Fv",
    "N F = F + 2J": "NF",
    "Phi = L_rho h - F - J": "jacobi_split",
    "[rho, d/dp_j]": "vertical_frame",
    "[rho, delta/delta x^j]": "horizontal_frame",
}


def run_checks(model: ModelFile, points, tol: Tolerances | None = None) -> tuple[Setup, list[CheckRecord]]:
    s = prepare(model, points, tol)
    records: list[CheckRecord] = []
    for _, fn in REGISTRY:
        records.extend(fn(s))
    return s, records


# --------------------------------------------------------------------------
# Legendre / duality suite
# --------------------------------------------------------------------------


@dataclass
class LegendreOutcome:
    records: list[CheckRecord]
    table: list[dict]
    max_iterations: int


def resolve_lagrangian(model: ModelFile, hm: ham.HamiltonModel, points) -> tuple[ScalarField, bool]:
    """The supplied Lagrangian, or the closed-form one for fiber-quadratic H.
    Returns (L, supplied)."""
    if model.lagrangian is not None:
        return model.lagrangian, True
    return ham.derive_lagrangian(hm, points), False


def perturbation_term(lag: ham.LagrangeModel, eps: float) -> ScalarField:
    y1 = ScalarField.coordinate(lag.chart.fiber_names[0], lag.chart)
    return y1 * y1 * eps


def _perturbation_condition_b(hm: ham.HamiltonModel, points) -> float:
    """Condition-b residual per unit epsilon of the spray perturbation
    S^1 += eps (y^1)^2: its pullback adds (xi^1)^2 g_1k to chi_k."""
    n, ps = hm.n, hm.chart.fiber_names
    extra = [hm.xi[0] * hm.xi[0] * hm.g_lower[0][k] for k in range(n)]
    return _maxabs(evaluate_fields([extra[i].diff(ps[j]) for i in range(n) for j in range(n)], points))


def run_legendre(model: ModelFile, points, tol: Tolerances | None = None,
                 epsilon: float | None = None) -> LegendreOutcome:
    tol = tol or Tolerances()
    if model.hamiltonian is None:
        raise ValueError("the Legendre pipeline needs a hamiltonian")
    P = np.asarray(points, dtype=float)
    m = len(P)
    hm = ham.build_hamilton_model(model.hamiltonian, P)
    lmap = ham.LegendreMap(hm)
    tp = lmap.forward(P)
    solve = lmap.solve(tp)
    recs = []

    def rec(name, anchor, val, t, informational=False):
        recs.append(CheckRecord(name, anchor, float(val), t, m, informational))

    rec("legendre.roundtrip", "|Psi(Psi^-1(x, y)) - (x, y)|", ham.roundtrip_error(lmap, tp), tol.identity)
    rec("legendre.newton_residual", "|dH/dp(x, zeta) - y| after Newton", float(np.max(solve.residuals)), NEWTON_TOL)
    ry, rx = ham.inverse_function_residuals(lmap, tp, FD_STEP)
    rec("legendre.inverse_y", "d zeta_i/dy^j = g_ij (central differences)", ry, tol.numeric)
    rec("legendre.inverse_x", "d zeta_i/dx^j = -g_ik dxi^k/dx^j (central differences)", rx, tol.numeric)
    rec("hamilton.energy", "rho_H(H) = 0", ham.energy_conservation_residual(hm, P), tol.algebraic)

    L, supplied = resolve_lagrangian(model, hm, P)
    lag = ham.LagrangeModel(L)
    lag.check_regular(tp)
    gate = ham.lagrangian_consistency(lmap, L, tp)
    rec("lagrangian.consistency", "L(x, y) = zeta_i y^i - H(x, zeta)", gate, tol.identity,
        informational=not supplied)

    S = lag.spray
    rho = ham.pullback_semispray(hm, S)
    agree = _maxabs((rho - hm.rho).evaluate(P))
    rep = ham.duality_report(hm, lag, S, P, tol.identity)
    rec("duality.pullback_vs_rho_H", "Psi_*^-1 S = rho_H for the canonical spray", agree, tol.symbolic)
    rec("duality.j_regularity", "pullback field is J_H-regular", rep.regularity, tol.identity)
    rec("duality.condition_a", "dxi^j/dp_i symmetric for the pullback", rep.semi_a, tol.identity)
    rec("duality.condition_b", "dchi_i/dp_j = -dxi^j/dx^i for the pullback", rep.semi_b, tol.identity)
    rec("duality.metric", "S(g_ik) - N^l_k g_li - N^l_i g_lk = 0", rep.metric, tol.identity)
    rec("duality.symplectic", "N^l_i g_lk - N^l_k g_li + d2L/dx^k dy^i - d2L/dx^i dy^k = 0", rep.symplectic,
        tol.identity)
    rec("duality.equivalence", "semi-Hamiltonian pullback iff metric and symplectic conditions",
        0.0 if rep.equivalence_holds else 1.0, 0.0)

    table = []
    if epsilon is not None:
        unit_b = _perturbation_condition_b(hm, P)
        for k in range(3):
            eps = float(epsilon) / 10 ** k
            Sp = ham.perturb_spray(S, 0, perturbation_term(lag, eps))
            r = ham.duality_report(hm, lag, Sp, P, tol.identity)
            table.append({
                "epsilon": eps,
                "condition_b": r.semi_b,
                "expected_condition_b": eps * unit_b,
                "metric": r.metric,
                "symplectic": r.symplectic,
                "semi_hamiltonian": r.semi_hamiltonian,
                "canonical": r.canonical,
                "equivalence_holds": r.equivalence_holds,
            })
        rec("perturbation.equivalence", "verdict agrees on both sides for every epsilon",
            0.0 if all(row["equivalence_holds"] for row in table) else 1.0, 0.0)
        for key in ("condition_b", "metric"):
            ratios = [table[k][key] / table[k + 1][key] if table[k + 1][key] > 0 else np.inf
                      for k in range(len(table) - 1)]
            dev = max(abs(r / 10.0 - 1.0) for r in ratios)
            rec(f"perturbation.{key}_scaling", f"{key} residual ratio between successive epsilons = 10 (+-20%)",
                dev, 0.2)
        rec("perturbation.condition_b_closed_form",
            "condition b residual = max |d(eps (xi^1)^2 g_1i)/dp_j| (2 eps |p1| when g = delta)",
            max(abs(row["condition_b"] - row["expected_condition_b"]) for row in table), tol.symbolic)
    return LegendreOutcome(recs, table, int(np.max(solve.iterations)))

