"""Jet membership tests, chart transfer, block condition, doubling."""

import math

import numpy as np
import pytest

from riemvisc import Euclidean, FlatTorus, Hyperbolic, Point, Sphere, TangentVector
from riemvisc.errors import PreconditionError
from riemvisc.grids import GridFunction, build_grid
from riemvisc.jacobi import HessianPair, hessian_distance_sq
from riemvisc.jets import (
    Jet2,
    StarCondition,
    canonical_epsilon,
    chart_transfer_check,
    check_P_leq_LQ,
    doubling_diagnostic,
    fd_gradient,
    generate_star_candidates,
    jet_limit_check,
    chart_correction_term,
    quadratic_jet_test,
    verify_condition_star,
)


def sphere_and_point():
    m = Sphere(2, 1.0)
    return m, m.point([0.0, 0.0, 1.0])


def make_jet(m, x, zeta_comps, a_matrix, value=0.0):
    return Jet2(
        x,
        value,
        m.tangent_from_frame(x, zeta_comps),
        m.bilinear(x, a_matrix),
    )


# --------------------------------------------------------------------- #
# quadratic jet test
# --------------------------------------------------------------------- #

def test_half_distance_sq_jet_accepts_both_sides():
    m, p = sphere_and_point()

    def f(q):
        return 0.5 * m.distance(q, p) ** 2

    jet = make_jet(m, p, [0.0, 0.0], np.eye(2))
    assert quadratic_jet_test(f, m, p, jet, "sub").accepted
    assert quadratic_jet_test(f, m, p, jet, "super").accepted


def test_cone_vertex_jets():
    m, p = sphere_and_point()

    def f(q):
        return m.distance(q, p)

    # any subjet with |zeta| < 1 passes; the cone has no superjet at the vertex
    sub = quadratic_jet_test(f, m, p, make_jet(m, p, [0.0, 0.0], np.eye(2)), "sub")
    assert sub.accepted
    over = quadratic_jet_test(f, m, p, make_jet(m, p, [0.0, 0.0], 5 * np.eye(2)), "super")
    assert not over.accepted
    # |zeta| > 1 fails the subjet test, with the witness aligned to zeta
    zeta = np.array([1.5, 0.0])
    bad = quadratic_jet_test(f, m, p, make_jet(m, p, zeta, np.zeros((2, 2))), "sub")
    assert not bad.accepted
    w = m.frame_components(p, bad.witness)
    cosine = float(np.dot(w, zeta)) / (np.linalg.norm(w) * np.linalg.norm(zeta))
    assert cosine > 0.9


def test_smooth_function_with_slack_accepts():
    m = Euclidean(2)
    x = m.point([0.3, -0.2])

    def f(q):
        return math.sin(q.coords[0]) + q.coords[1] ** 2

    grad = [math.cos(x.coords[0]), 2 * x.coords[1]]
    hess = np.array([[-math.sin(x.coords[0]), 0.0], [0.0, 2.0]])
    jet = make_jet(m, x, grad, hess - 0.1 * np.eye(2))
    assert quadratic_jet_test(f, m, x, jet, "sub").accepted
    # and without the slack the exact jet passes both sides
    exact = make_jet(m, x, grad, hess)
    assert quadratic_jet_test(f, m, x, exact, "super").accepted


def test_jet_convexity_on_accepted_pairs():
    m, p = sphere_and_point()

    def f(q):
        return 0.5 * m.distance(q, p) ** 2

    j1 = make_jet(m, p, [0.0, 0.0], 0.8 * np.eye(2))
    j2 = make_jet(m, p, [0.0, 0.0], 0.4 * np.eye(2))
    mid = make_jet(m, p, [0.0, 0.0], 0.6 * np.eye(2))
    assert quadratic_jet_test(f, m, p, j1, "sub").accepted
    assert quadratic_jet_test(f, m, p, j2, "sub").accepted
    assert quadratic_jet_test(f, m, p, mid, "sub").accepted


def test_smooth_shift_rule_preserves_verdicts():
    m, p = sphere_and_point()
    rng = np.random.default_rng(3)
    x = m.exp(p, m.tangent(p, [0.4, 0.2, 0.0]))

    def f(q):
        return q.coords[2] ** 2 + 0.3 * q.coords[0]

    def psi(q):
        return 0.5 * q.coords[1] + 0.1 * q.coords[2] ** 2

    psi_grad = fd_gradient(m, psi, x)
    psi_hess = chart_transfer_check(psi, m, x, make_jet(m, x, [0, 0], np.zeros((2, 2)))).fd_hessian
    f_grad = fd_gradient(m, f, x)
    f_hess = chart_transfer_check(f, m, x, make_jet(m, x, [0, 0], np.zeros((2, 2)))).fd_hessian

    for slack, sign in [(0.05, "sub"), (-0.05, "super"), (-0.05, "sub")]:
        jet_f = Jet2(
            x, f(x), f_grad, m.bilinear(x, f_hess + slack * np.eye(2))
        )
        jet_shift = Jet2(
            x,
            f(x) - psi(x),
            m.tangent(x, f_grad.components - psi_grad.components),
            m.bilinear(x, f_hess + slack * np.eye(2) - psi_hess),
        )
        v1 = quadratic_jet_test(f, m, x, jet_f, sign, seed=9)
        v2 = quadratic_jet_test(
            lambda q: f(q) - psi(q), m, x, jet_shift, sign, seed=9
        )
        assert v1.accepted == v2.accepted


# --------------------------------------------------------------------- #
# chart transfer
# --------------------------------------------------------------------- #

def test_chart_transfer_verdicts_agree():
    m, p = sphere_and_point()

    def f(q):
        return m.distance(q, p)

    for jet, sign in [
        (make_jet(m, p, [0.0, 0.0], np.eye(2)), "sub"),
        (make_jet(m, p, [1.5, 0.0], np.zeros((2, 2))), "sub"),
        (make_jet(m, p, [0.0, 0.0], 5 * np.eye(2)), "super"),
    ]:
        report = chart_transfer_check(f, m, p, jet, sign)
        assert report.agree


def test_chart_transfer_recovers_height_hessian():
    # f = z on the unit sphere: chart Hessian at x is -z(x) I, gradient the
    # projected vertical axis
    m = Sphere(2, 1.0)
    x = m.point(np.array([0.3, -0.5, math.sqrt(1 - 0.34)]))

    def f(q):
        return q.coords[2]

    report = chart_transfer_check(f, m, x, make_jet(m, x, [0, 0], np.zeros((2, 2))))
    assert np.allclose(report.fd_hessian, -x.coords[2] * np.eye(2), atol=1e-6)
    frame = m.canonical_frame(x)
    expected_grad = np.array([f_row[2] for f_row in frame])
    assert np.allclose(report.fd_gradient, expected_grad, atol=1e-8)


def test_chart_transfer_constant_function():
    m, p = sphere_and_point()
    jet = make_jet(m, p, [0.0, 0.0], np.zeros((2, 2)))
    for sign in ("sub", "super"):
        report = chart_transfer_check(lambda q: 4.2, m, p, jet, sign)
        assert report.verdict_manifold.accepted
        assert report.agree


# --------------------------------------------------------------------- #
# chart correction term
# --------------------------------------------------------------------- #

def second_difference_o4(f, h):
    return (
        -f(2 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2 * h)
    ) / (12.0 * h * h)


def constant_pullback_field(m, x, c_comps):
    """V(p) = d(exp_x)(w_p) applied to a constant chart field, by differences."""
    frame_x = m.canonical_frame(x)
    c = np.asarray(c_comps, float) @ frame_x

    def field(p):
        w = m.log(x, p).components
        h = 1e-3
        pts = [
            m.exp(x, TangentVector(x, w + s * h * c)).coords
            for s in (-2.0, -1.0, 1.0, 2.0)
        ]
        deriv = (pts[0] - 8 * pts[1] + 8 * pts[2] - pts[3]) / (12 * h)
        return TangentVector(p, m.project_tangent(p, deriv))

    return field


def test_correction_term_vanishes_at_base_and_flat():
    for m, x in [
        (Sphere(2, 1.0), Sphere(2, 1.0).point([0, 0, 1.0])),
        (Hyperbolic(2, 1.0), Hyperbolic(2, 1.0).base_point()),
    ]:
        def phi(q):
            return q.coords[0] ** 2 + 0.5 * q.coords[1]

        field = constant_pullback_field(m, x, [0.7, 0.3])
        assert abs(chart_correction_term(m, phi, x, x, field)) <= 1e-8

    e = Euclidean(2)
    x = e.point([0.1, 0.2])
    y = e.point([0.6, -0.3])

    def phi_flat(q):
        return q.coords[0] ** 3 + q.coords[1] ** 2

    field = constant_pullback_field(e, x, [1.0, -0.5])
    assert abs(chart_correction_term(e, phi_flat, x, y, field)) <= 1e-10


def test_correction_term_matches_hessian_defect_on_sphere():
    m = Sphere(2, 1.0)
    x = m.point([0.0, 0.0, 1.0])
    y = m.exp(x, m.tangent(x, [0.5, 0.0, 0.0]))

    def phi(q):
        return q.coords[2] ** 2 + q.coords[0]

    c_comps = [0.6, 0.8]
    field = constant_pullback_field(m, x, c_comps)
    correction = chart_correction_term(m, phi, x, y, field)

    frame_x = m.canonical_frame(x)
    c = np.asarray(c_comps, float) @ frame_x
    w = m.log(x, y).components

    def chart_line(t):
        return phi(m.exp(x, TangentVector(x, w + t * c)))

    lhs = second_difference_o4(chart_line, 1e-2)
    vy = field(y)

    def geodesic_line(t):
        return phi(m.exp(y, TangentVector(y, t * vy.components)))

    rhs = second_difference_o4(geodesic_line, 1e-2)
    assert abs(correction) > 1e-3  # the defect is genuinely nonzero here
    assert lhs == pytest.approx(rhs + correction, abs=1e-5)


# --------------------------------------------------------------------- #
# block condition and transported order
# --------------------------------------------------------------------- #

def euclid_pair():
    m = Euclidean(2)
    x = m.point([0.0, 0.0])
    y = m.point([1.0, 0.0])
    return m, x, y


def test_condition_star_zero_hessian_cases():
    m, x, y = euclid_pair()
    zero = HessianPair(m, x, y, np.zeros((4, 4)))
    eps = 0.25
    p_ok = m.bilinear(x, -1.0 * np.eye(2))
    q_ok = m.bilinear(y, 1.0 * np.eye(2))
    ok, lo, hi = verify_condition_star(StarCondition(zero, eps, p_ok, q_ok))
    assert ok and lo >= 0 and hi >= 0
    p_bad = m.bilinear(x, 1.0 * np.eye(2))  # diag(P, -Q) <= 0 fails
    ok_bad, _, hi_bad = verify_condition_star(StarCondition(zero, eps, p_bad, q_ok))
    assert not ok_bad and hi_bad < 0


def test_condition_star_zero_pq_with_psd_hessian():
    m, x, y = euclid_pair()
    a = hessian_distance_sq(m, x, y)  # 2[[I,-I],[-I,I]] >= 0
    sc = StarCondition.canonical(
        a, m.bilinear(x, np.zeros((2, 2))), m.bilinear(y, np.zeros((2, 2)))
    )
    ok, _, _ = verify_condition_star(sc)
    assert ok
    assert sc.epsilon == pytest.approx(1.0 / (2.0 * (1.0 + a.operator_norm())))


def sphere_hessian_pair(alpha=1.0):
    m = Sphere(2, 1.0)
    x = m.point([0.0, 0.0, 1.0])
    y = m.point([1.0, 0.0, 0.0])
    return m, x, y, hessian_distance_sq(m, x, y).scaled(alpha / 2.0)


def test_generator_candidates_satisfy_condition():
    m, x, y, a_alpha = sphere_hessian_pair()
    eps = canonical_epsilon(a_alpha)
    pairs = generate_star_candidates(a_alpha, eps, 40, seed=5)
    assert len(pairs) > 0
    for p, q in pairs:
        ok, _, _ = verify_condition_star(StarCondition(a_alpha, eps, p, q))
        assert ok


def test_generator_zero_hessian_gives_shift_pairs():
    # with A = 0 every candidate is (P, Q) = (-s I, +s I)
    m, x, y = euclid_pair()
    zero = HessianPair(m, x, y, np.zeros((4, 4)))
    pairs = generate_star_candidates(zero, 0.25, 10, seed=4)
    assert pairs
    for p, q in pairs:
        s = -p.matrix[0, 0]
        assert s > 0
        assert np.allclose(p.matrix, -s * np.eye(2), atol=1e-12)
        assert np.allclose(q.matrix, s * np.eye(2), atol=1e-12)


def test_generator_skips_infeasible_shifts():
    # an enormous extra slack pushes the shifted blocks below the floor of
    # the two-sided inequality; those samples are dropped, not returned
    m, x, y, a_alpha = sphere_hessian_pair()
    eps = canonical_epsilon(a_alpha)
    pairs = generate_star_candidates(a_alpha, eps, 25, seed=6, slack_scale=1e6)
    assert len(pairs) < 25


def test_sign_report_serialization_keys():
    from riemvisc.jacobi import check_sign_condition

    report = check_sign_condition(Sphere(2, 1.0), 50, seed=3, ell_range=(0.1, 2.0))
    d = report.to_dict()
    assert set(d) >= {"model", "samples", "max_violation", "tolerance", "pass"}
    assert "_violation" not in d["model"]


def test_p_leq_lq_on_sphere_candidates():
    m, x, y, a_alpha = sphere_hessian_pair(alpha=2.0)
    eps = canonical_epsilon(a_alpha)
    pairs = generate_star_candidates(a_alpha, eps, 30, seed=7)
    assert pairs
    for p, q in pairs:
        ok, margin = check_P_leq_LQ(m, x, y, p, q, slack_rhs=0.0)
        assert ok, margin


def test_p_leq_lq_hyperbolic_with_slack():
    m = Hyperbolic(2, 1.0)
    o = m.base_point()
    y = m.exp(o, m.tangent(o, [0.0, 1.2, 0.0]))
    alpha = 4.0
    a_alpha = hessian_distance_sq(m, o, y).scaled(alpha / 2.0)
    eps = canonical_epsilon(a_alpha)
    d = m.distance(o, y)
    slack = 1.5 * 1.0 * alpha * d * d
    pairs = generate_star_candidates(a_alpha, eps, 30, seed=9)
    assert pairs
    for p, q in pairs:
        ok, margin = check_P_leq_LQ(m, o, y, p, q, slack_rhs=slack)
        assert ok, margin


def test_p_equal_transported_q_margin_zero():
    m = Sphere(2, 1.0)
    rng = np.random.default_rng(11)
    x = m.random_point(rng)
    y = m.exp(x, m.tangent(x, 0.7 * m.canonical_frame(x)[0]))
    raw = rng.standard_normal((2, 2))
    q = m.bilinear(y, raw + raw.T)
    p = m.parallel_transport_bilinear(y, x, q)
    ok, margin = check_P_leq_LQ(m, x, y, p, q, slack_rhs=0.0)
    assert ok
    assert abs(margin) <= 1e-9


# --------------------------------------------------------------------- #
# doubling of variables
# --------------------------------------------------------------------- #

def smooth_grid_pair(grid, seed, scale=0.1):
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal(3), rng.standard_normal(3)
    u = GridFunction(grid, scale * grid.coords @ a)
    v = GridFunction(grid, scale * grid.coords @ b)
    return u, v


def test_doubling_equal_functions():
    grid = build_grid(Sphere(2, 1.0), 3)
    u, _ = smooth_grid_pair(grid, 1)
    alphas = [float(2**k) for k in range(5, 13)]
    trace = doubling_diagnostic(grid.model, u, u, alphas)
    for rec in trace.records:
        assert rec.m_alpha >= -1e-12
    assert trace.final().m_alpha == pytest.approx(0.0, abs=1e-12)
    assert trace.final().x_idx == trace.final().y_idx


def test_doubling_constant_shift():
    grid = build_grid(Sphere(2, 1.0), 3)
    u, _ = smooth_grid_pair(grid, 2)
    c = 0.37
    v = GridFunction(grid, u.values - c)
    alphas = [float(2**k) for k in range(5, 13)]
    trace = doubling_diagnostic(grid.model, u, v, alphas)
    assert trace.final().m_alpha == pytest.approx(c, abs=1e-12)
    # with alphas clear of the grid-scale threshold the max sits on the diagonal
    assert all(r.m_alpha == pytest.approx(c, abs=1e-12) for r in trace.records)


def test_doubling_trace_properties_random_fields():
    grid = build_grid(Sphere(2, 1.0), 3)
    # strong fields so the small-alpha maximizers sit genuinely off-diagonal
    u, v = smooth_grid_pair(grid, 8, scale=1.0)
    alphas = [float(2**k) for k in range(2, 13)]
    trace = doubling_diagnostic(grid.model, u, v, alphas)
    ms = [r.m_alpha for r in trace.records]
    assert all(a >= b - 1e-12 for a, b in zip(ms, ms[1:]))  # nonincreasing
    ad2 = {r.alpha: r.alpha_d_sq for r in trace.records}
    assert ad2[2.0**4] > 0.0
    assert ad2[2.0**12] < ad2[2.0**4]
    gap = u.values - v.values
    final_gap = trace.final().m_alpha - float(np.max(gap))
    assert abs(final_gap) <= grid.modulus_at_spacing(gap, grid.h) + 1e-12


def test_doubling_rejects_bad_input():
    grid = build_grid(Sphere(2, 1.0), 2)
    u, v = smooth_grid_pair(grid, 4)
    with pytest.raises(PreconditionError):
        doubling_diagnostic(grid.model, u, v, [4.0, 2.0])


def test_doubling_csv_columns():
    grid = build_grid(Sphere(2, 1.0), 2)
    u, v = smooth_grid_pair(grid, 5)
    trace = doubling_diagnostic(grid.model, u, v, [8.0, 16.0])
    header = trace.to_csv().splitlines()[0]
    assert header == "alpha,m_alpha,d,alpha_d_sq,x_idx,y_idx"


# --------------------------------------------------------------------- #
# jet limits
# --------------------------------------------------------------------- #

def test_jet_limit_constant_sequence():
    m, p = sphere_and_point()
    jet = make_jet(m, p, [0.2, -0.1], np.array([[1.0, 0.2], [0.2, -0.5]]), value=1.0)
    assert jet_limit_check(m, [jet] * 6, jet)


def test_jet_limit_transported_sequence():
    m, p = sphere_and_point()
    limit = make_jet(m, p, [0.3, 0.4], np.array([[1.0, 0.1], [0.1, 2.0]]), value=0.5)
    jets = []
    for k in range(1, 8):
        t = 0.5**k
        xn = m.exp(p, m.tangent(p, [t, t / 2, 0.0]))
        zeta_n = m.parallel_transport(p, xn, limit.zeta)
        form_n = m.parallel_transport_bilinear(p, xn, limit.form)
        jets.append(Jet2(xn, 0.5, zeta_n, form_n))
    assert jet_limit_check(m, jets, limit)


def test_jet_limit_oscillating_rejected():
    m, p = sphere_and_point()
    limit = make_jet(m, p, [0.0, 0.0], np.eye(2), value=0.0)
    jets = []
    for k in range(1, 8):
        t = 0.5**k
        xn = m.exp(p, m.tangent(p, [t, 0.0, 0.0]))
        wobble = 1.0 + 0.5 * (-1.0) ** k
        jets.append(
            Jet2(xn, 0.0, m.tangent_from_frame(xn, [0.0, 0.0]), m.bilinear(xn, wobble * np.eye(2)))
        )
    assert not jet_limit_check(m, jets, limit)
