import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import hamiltonian, points
from cotgeo.expr import Chart, ChartMismatchError, ScalarField, parse_scalar_field
from cotgeo.frame import (
    FullTensor11,
    PhaseVectorField,
    coordinate_frame,
    fn_bracket_11,
    lie_bracket,
    lie_derivative_tensor11,
    nijenhuis,
)
from cotgeo.structures import AdaptedTangentStructure, CanonicalObjects, NonlinearConnection, tension_intrinsic

C1, C2 = Chart.cotangent(1), Chart.cotangent(2)


def V(*texts, chart=C2):
    return PhaseVectorField([parse_scalar_field(t, chart) for t in texts], chart)


def vmax(X, pts):
    return float(np.max(np.abs(X.evaluate(pts)), initial=0.0))


def tmax(A, pts):
    return float(np.max(np.abs(A.evaluate(pts)), initial=0.0))


def constant_J(n):
    chart = Chart.cotangent(n)
    one, zero = ScalarField.constant(1.0, chart), ScalarField.constant(0.0, chart)
    return AdaptedTangentStructure([[one if i == j else zero for j in range(n)] for i in range(n)])


class TestPhaseVectorField:
    def test_component_count(self):
        with pytest.raises(ValueError):
            PhaseVectorField([parse_scalar_field("x1", C2)] * 3, C2)

    def test_mixed_charts_rejected(self):
        with pytest.raises(ChartMismatchError):
            PhaseVectorField([parse_scalar_field("x1", C1), parse_scalar_field("x1", C2)], C1)

    def test_base_and_fiber(self):
        X = V("x1", "x2", "p1", "p2")
        assert [str(c) for c in X.base] == ["x1", "x2"]
        assert [str(c) for c in X.fiber] == ["p1", "p2"]

    def test_directional_derivative(self):
        X = V("1", "0", "p1", "0")
        f = parse_scalar_field("x1*p1^2", C2)
        assert X(f)((2.0, 0, 3.0, 0)) == 9.0 + 2 * 2.0 * 3.0 * 3.0


class TestLieBracket:
    def test_fiber_directions_commute(self):
        d = coordinate_frame(C2)
        assert vmax(lie_bracket(d[2], d[3]), points(2)) == 0.0

    def test_two_term_expansion(self):
        X = V("p1", "0", chart=C1)
        Y = V("0", "x1", chart=C1)
        B = lie_bracket(X, Y)
        assert [str(c) for c in B.components] == ["-x1", "p1"]

    def test_adapted_frame_against_difference_oracle(self):
        N = NonlinearConnection.from_texts([["-x1*p1/(1+x1^2)"]], C1)
        dp = coordinate_frame(C1)[1]
        B = lie_bracket(N.delta(0), dp)
        pts = points(1, 50)
        sym = B.evaluate(pts)
        n11 = lambda z: -z[0] * z[1] / (1 + z[0] ** 2)
        delta = lambda z: np.array([1.0, n11(z)])
        fiber = lambda z: np.array([0.0, 1.0])
        fd = np.array([oracles.lie_bracket(delta, fiber, z) for z in pts])
        assert np.max(np.abs(sym - fd)) <= 1e-7
        # -(dN_11/dp_1) d/dp_1 with dN_11/dp_1 = -x1/(1+x1^2)
        expected = pts[:, 0] / (1 + pts[:, 0] ** 2)
        assert np.max(np.abs(sym[:, 1] - expected)) <= 1e-15
        assert np.all(sym[:, 0] == 0.0)

    def test_antisymmetric(self):
        X, Y = V("x1*p2", "sin(p1)", "x2", "1"), V("p1^2", "x1", "exp(x2)", "p2*x1")
        pts = points(2, 20)
        assert vmax(lie_bracket(X, Y) + lie_bracket(Y, X), pts) <= 1e-14

    def test_chart_mismatch(self):
        with pytest.raises(ChartMismatchError):
            lie_bracket(V("1", "0", chart=C1), V("1", "0", "0", "0"))


def _random_poly(rng, names):
    terms = []
    for _ in range(3):
        c = int(rng.integers(-3, 4))
        a, b = rng.choice(names, 2)
        terms.append(f"{c}*{a}*{b}")
    terms.append(str(int(rng.integers(-2, 3))))
    return " + ".join(terms)


def test_jacobi_identity_on_random_polynomial_triples():
    rng = np.random.default_rng(7)
    pts = points(2, 20)
    worst = 0.0
    for _ in range(50):
        X, Y, Z = (V(*[_random_poly(rng, C2.coords) for _ in range(4)]) for _ in range(3))
        J = (lie_bracket(X, lie_bracket(Y, Z)) + lie_bracket(Y, lie_bracket(Z, X))
             + lie_bracket(Z, lie_bracket(X, Y)))
        worst = max(worst, vmax(J, pts))
    assert worst <= 1e-9


class TestLieDerivative:
    def test_identity_is_invariant(self):
        X = V("x1*p2", "sin(p1)", "x2^2", "p1*p2")
        assert tmax(lie_derivative_tensor11(X, FullTensor11.identity(C2)), points(2, 20)) == 0.0

    def test_liouville_on_constant_tangent_structure(self):
        J = constant_J(1).tensor
        C = CanonicalObjects(C1).liouville
        L = lie_derivative_tensor11(C, J)
        pts = points(1, 20)
        assert tmax(L + J, pts) == 0.0

    def test_tension_of_linear_connection_vanishes(self):
        N = NonlinearConnection.from_texts([["-x1*p1/(1+x1^2)"]], C1)
        assert tmax(tension_intrinsic(N), points(1)) <= 1e-15

    def test_against_difference_oracle(self):
        # (L_X A)(Y) = [X, AY] - A[X, Y] for a non-frame Y
        X = V("p1", "x1*p2", "-x2", "sin(x1)")
        A = FullTensor11([[parse_scalar_field(f"x{(a + b) % 2 + 1}*p{b % 2 + 1}", C2) for b in range(4)]
                          for a in range(4)])
        Y = V("x2", "p1", "1", "x1*x2")
        sym = lie_derivative_tensor11(X, A).apply(Y).evaluate(points(2, 10))
        Xf = lambda z: X.evaluate(z[None])[0]
        Yf = lambda z: Y.evaluate(z[None])[0]
        Af = lambda z: A.evaluate(z[None])[0]
        fd = np.array([oracles.lie_bracket(Xf, lambda w: Af(w) @ Yf(w), z) - Af(z) @ oracles.lie_bracket(Xf, Yf, z)
                       for z in points(2, 10)])
        assert np.max(np.abs(sym - fd)) <= 1e-7


class TestTwoForms:
    def test_identity_fn_bracket_vanishes(self):
        I = FullTensor11.identity(C2)
        form = fn_bracket_11(I, I)
        frame = coordinate_frame(C2)
        pts = points(2, 10)
        X = V("x1*p2", "p1", "x2", "1")
        assert max(np.max(np.abs(form(a, b, pts))) for a in frame + [X] for b in frame + [X]) <= 1e-14

    def test_flat_horizontal_bracket(self):
        h = NonlinearConnection.zero(C2).h
        d = coordinate_frame(C2)
        assert np.max(np.abs(fn_bracket_11(h, h)(d[0], d[1], points(2)))) == 0.0

    def test_half_fn_bracket_gives_curvature_components(self):
        # 0.5 [h,h](delta_1, delta_2) has fiber part R_12k with R from the coordinate formula
        from cotgeo.hamilton import build_hamilton_model, canonical_hamilton_connection
        from cotgeo.structures import curvature_components

        N = canonical_hamilton_connection(build_hamilton_model(hamiltonian("warped")))
        pts = points(2, 50)
        val = 0.5 * fn_bracket_11(N.h, N.h)(N.delta(0), N.delta(1), pts)
        R = curvature_components(N)
        expected = np.array([[R[0][1][k](z) for k in range(2)] for z in pts])
        assert np.max(np.abs(expected)) > 1e-3
        assert np.max(np.abs(val[:, :2])) <= 1e-12
        # the 2-form -[h,h]/2 evaluates to -R_12k, so +[h,h]/2 gives +R_12k
        assert np.max(np.abs(val[:, 2:] - expected)) <= 1e-9

    def test_nijenhuis_identity(self):
        frame = coordinate_frame(C2)
        assert np.max(np.abs(nijenhuis(FullTensor11.identity(C2))(frame[0], frame[3], points(2)))) == 0.0

    def test_nijenhuis_constant_tangent_structure(self):
        NJ = nijenhuis(constant_J(2).tensor)
        frame = coordinate_frame(C2)
        pts = points(2, 20)
        assert max(np.max(np.abs(NJ(a, b, pts))) for a in frame for b in frame) == 0.0

    def test_nijenhuis_hamilton_tangent_structure(self):
        from cotgeo.hamilton import build_hamilton_model

        J = build_hamilton_model(hamiltonian("curved1")).J
        NJ = nijenhuis(J.tensor)
        frame = coordinate_frame(C1)
        pts = points(1, 20)
        assert max(np.max(np.abs(NJ(a, b, pts))) for a in frame for b in frame) <= 1e-9

    def test_nijenhuis_is_half_fn_bracket(self):
        A = FullTensor11([[parse_scalar_field(f"sin(x{(a * b) % 2 + 1})*p{(a + b) % 2 + 1}", C2) for b in range(4)]
                          for a in range(4)])
        NA, FN = nijenhuis(A), fn_bracket_11(A, A)
        frame = coordinate_frame(C2)
        pts = points(2, 20)
        worst = max(np.max(np.abs(NA(a, b, pts) - 0.5 * FN(a, b, pts))) for a in frame for b in frame)
        assert worst <= 1e-10

    def test_fn_bracket_symmetric_in_tensors(self):
        J = constant_J(2).tensor
        h = NonlinearConnection.from_texts([["x1*p2", "p1"], ["x2", "p1*p2"]], C2).h
        frame = coordinate_frame(C2)
        pts = points(2, 20)
        worst = max(np.max(np.abs(fn_bracket_11(J, h)(a, b, pts) - fn_bracket_11(h, J)(a, b, pts)))
                    for a in frame for b in frame)
        assert worst <= 1e-12


COEFF = st.integers(-3, 3)


@settings(max_examples=40, deadline=None)
@given(st.lists(COEFF, min_size=8, max_size=8), st.floats(-3, 3), st.floats(-3, 3))
def test_two_form_antisymmetric_and_bilinear(coeffs, a, b):
    N = NonlinearConnection.from_texts([["x1*p2", "p1^2"], ["x2*p1", "x1*x2*p2"]], C2)
    form = fn_bracket_11(constant_J(2).tensor, N.h)
    X = V(*(f"{c}*x{k % 2 + 1}" for k, c in enumerate(coeffs[:4])))
    Y = V(*(f"{c}*p{k % 2 + 1}" for k, c in enumerate(coeffs[4:])))
    Z = coordinate_frame(C2)[2]
    pts = points(2, 10)
    assert np.max(np.abs(form(X, Y, pts) + form(Y, X, pts))) <= 1e-10
    lin = form(X.scale(a) + Z.scale(b), Y, pts)
    parts = a * form(X, Y, pts) + b * form(Z, Y, pts)
    assert np.max(np.abs(lin - parts)) <= 1e-10 * max(1.0, np.max(np.abs(parts)))


def test_hamilton_tangent_structures_are_integrable(corpus_name):
    from cotgeo.hamilton import build_hamilton_model

    H = hamiltonian(corpus_name)
    NJ = nijenhuis(build_hamilton_model(H).J.tensor)
    frame = coordinate_frame(H.chart)
    pts = points(H.chart.n, 20)
    assert max(np.max(np.abs(NJ(a, b, pts))) for a in frame for b in frame) <= 1e-9
