"""Christoffel symbols, curvature, covariant derivatives: hand-checked oracles."""

import math

import numpy as np
import pytest

from gaugeforge.connection import (
    ConnectionPoint,
    christoffel,
    covderiv,
    curvature,
    curvature_gap,
    decompose_connection,
    transform_relative,
)
from gaugeforge.jets import EvalDomainError
from gaugeforge.metric import (
    MetricField,
    flat_spherical_metric,
    lorentz_chart,
    minkowski_metric,
    spherical_chart,
)
from gaugeforge.sampling import sample_points

SPH = spherical_chart()
LOR = lorentz_chart()


def schwarzschild(m=1.0):
    return MetricField.from_upper(SPH, {
        (0, 0): "1-2*m/r",
        (1, 1): "-1/(1-2*m/r)",
        (2, 2): "-(r^2)",
        (3, 3): "-(r^2*sin(theta)^2)",
    }, constants={"m": m})


def logunov(lam):
    return MetricField.from_upper(SPH, {
        (0, 0): "(r+lambda-m)/(r+lambda+m)",
        (1, 1): "-(r+lambda+m)/(r+lambda-m)",
        (2, 2): "-((r+lambda+m)^2)",
        (3, 3): "-((r+lambda+m)^2*sin(theta)^2)",
    }, constants={"lambda": lam, "m": 1.0})


def de_sitter(H=0.1):
    return MetricField.from_upper(LOR, {
        (0, 0): "1",
        (1, 1): "-exp(2*H*t)",
        (2, 2): "-exp(2*H*t)",
        (3, 3): "-exp(2*H*t)",
    }, constants={"H": H})


# ---------------------------------------------------------------- christoffel


def test_flat_spherical_symbols():
    # gamma[r, a, b] holds the symbol with upper index r
    conn = christoffel(flat_spherical_metric(SPH), (0.0, 2.0, math.pi / 2, 0.3))
    t, r, th, ph = 0, 1, 2, 3
    assert conn.gamma[th, r, th] == pytest.approx(0.5, abs=1e-13)      # 1/r
    assert conn.gamma[r, th, th] == pytest.approx(-2.0, abs=1e-13)     # -r
    assert conn.gamma[r, ph, ph] == pytest.approx(-2.0, abs=1e-13)     # -r sin^2
    assert conn.gamma[ph, r, ph] == pytest.approx(0.5, abs=1e-13)
    assert abs(conn.gamma[th, ph, ph]) < 1e-13                         # -sin cos at pi/2
    conn2 = christoffel(flat_spherical_metric(SPH), (0.0, 2.0, 1.0, 0.3))
    assert conn2.gamma[th, ph, ph] == pytest.approx(-math.sin(1) * math.cos(1), rel=1e-12)
    assert conn2.gamma[ph, th, ph] == pytest.approx(math.cos(1) / math.sin(1), rel=1e-12)


def test_symbols_symmetric_in_lower_pair():
    rng = np.random.default_rng(3)
    g = schwarzschild()
    for pt in sample_points(SPH, 5, seed=21):
        conn = christoffel(g, pt)
        assert np.allclose(conn.gamma, conn.gamma.transpose(0, 2, 1), atol=1e-13)


def test_schwarzschild_symbols():
    conn = christoffel(schwarzschild(), (0.0, 10.0, 1.0, 1.0))
    assert conn.gamma[1, 0, 0] == pytest.approx(0.008, rel=1e-12)      # m(r-2m)/r^3
    assert conn.gamma[0, 0, 1] == pytest.approx(0.0125, rel=1e-12)     # m/(r(r-2m))
    assert conn.gamma[1, 1, 1] == pytest.approx(-0.0125, rel=1e-12)


def test_minkowski_symbols_vanish():
    conn = christoffel(minkowski_metric(LOR), (0.1, 0.2, 0.3, 0.4))
    assert np.abs(conn.gamma).max() == 0.0
    assert np.abs(conn.dgamma).max() == 0.0


def test_signature_guard():
    bad = MetricField.from_upper(LOR, {(0, 0): "1", (1, 1): "1", (2, 2): "1", (3, 3): "1"})
    with pytest.raises(EvalDomainError):
        christoffel(bad, (0.0, 0.0, 0.0, 0.0))


def test_density_and_trace():
    conn = christoffel(schwarzschild(), (0.0, 10.0, 1.0, 1.0))
    assert conn.s == pytest.approx(100.0 * math.sin(1.0), rel=1e-12)   # r^2 sin
    # d(sqrt(-g)) equals the connection trace times sqrt(-g)
    assert np.allclose(conn.ds, conn.trace_gamma * conn.s, rtol=1e-12, atol=1e-12)


# ---------------------------------------------------------------- curvature


def test_vacuum_solutions_are_ricci_flat():
    for g in [schwarzschild(), logunov(0.0), logunov(1.0), logunov(5.0)]:
        for pt in sample_points(SPH, 5, seed=31):
            cur = curvature(g, pt)
            assert np.abs(cur.ricci).max() < 1e-12
            assert abs(cur.scalar) < 1e-12


def test_flat_spherical_riemann_vanishes():
    for pt in sample_points(SPH, 5, seed=32):
        cur = curvature(flat_spherical_metric(SPH), pt)
        assert np.abs(cur.riemann).max() < 1e-11


def test_de_sitter_is_einstein():
    # ricci = 3 H^2 g, scalar = 12 H^2 under the conventions used here
    g = de_sitter(0.1)
    for pt in [(0.0, 0.1, 0.2, 0.3), (0.5, -0.2, 0.4, 0.1)]:
        cur = curvature(g, pt)
        assert cur.scalar == pytest.approx(0.12, rel=1e-10)
        assert np.allclose(cur.ricci, 0.03 * g.covariant(pt), rtol=1e-10, atol=1e-13)


def test_riemann_symmetries():
    g = schwarzschild()
    for pt in sample_points(SPH, 4, seed=33):
        R = curvature(g, pt).riemann  # R[m, r, a, b]
        # antisymmetry in the derivative pair
        assert np.allclose(R, -R.transpose(0, 1, 3, 2), atol=1e-12)
        # first cyclic identity over (m, a, b)
        cyc = R + np.einsum("arbm->mrab", R) + np.einsum("brma->mrab", R)
        assert np.abs(cyc).max() < 1e-11
        # fully covariant form antisymmetric in first pair
        g0 = g.covariant(pt)
        Rlow = np.einsum("rs,mrab->msab", g0, R)
        assert np.allclose(Rlow, -Rlow.transpose(1, 0, 2, 3), atol=1e-9)


# ---------------------------------------------------------------- covderiv


def test_metric_is_covariantly_constant():
    g = schwarzschild()
    for pt in sample_points(SPH, 4, seed=34):
        conn = christoffel(g, pt)
        assert np.abs(covderiv(conn.g, conn.dg, "dd", conn)).max() < 1e-12
        assert np.abs(covderiv(conn.ginv, conn.dginv, "uu", conn)).max() < 1e-12


def test_covderiv_vector_hand_formula():
    # constant vector V^a = delta^a_r on flat spherical: D_c V^b = Gamma^b_{c r}
    conn = christoffel(flat_spherical_metric(SPH), (0.0, 3.0, 1.1, 0.7))
    V = np.zeros(4)
    V[1] = 1.0
    dV = np.zeros((4, 4))
    out = covderiv(V, dV, "u", conn)
    assert np.allclose(out, conn.gamma[:, :, 1].T, atol=1e-14)


def test_covderiv_covector_hand_formula():
    conn = christoffel(flat_spherical_metric(SPH), (0.0, 3.0, 1.1, 0.7))
    W = np.zeros(4)
    W[2] = 1.0
    dW = np.zeros((4, 4))
    out = covderiv(W, dW, "d", conn)  # -Gamma^theta_{c b}
    assert np.allclose(out, -conn.gamma[2], atol=1e-14)


def test_covderiv_weight_one_density_vanishes():
    # sqrt(-det g) is covariantly constant as a weight-1 scalar
    conn = christoffel(schwarzschild(), (0.0, 8.0, 0.9, 2.0))
    out = covderiv(np.array(conn.s), conn.ds, "", conn, weight=1.0)
    assert np.abs(out).max() < 1e-12


def test_covderiv_rejects_bad_valence():
    conn = christoffel(minkowski_metric(LOR), (0.0, 0.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        covderiv(np.zeros(4), np.zeros((4, 4)), "x", conn)
    with pytest.raises(ValueError):
        covderiv(np.zeros(4), np.zeros((4, 4)), "uu", conn)


# ---------------------------------------------------------------- transformation


def test_transform_scaling_ratios():
    jac = 2.0 * np.eye(4)  # x' = 2x, det = 16
    v = np.ones(4)
    assert np.allclose(transform_relative(v, "u", 0.0, jac), 2.0 * v)
    assert np.allclose(transform_relative(v, "d", 0.0, jac), 0.5 * v)
    assert np.allclose(transform_relative(v, "u", 1.0, jac), 32.0 * v)
    m = np.ones((4, 4))
    assert np.allclose(transform_relative(m, "uu", 0.0, jac), 4.0 * m)
    assert np.allclose(transform_relative(m, "dd", 0.0, jac), 0.25 * m)
    assert np.allclose(transform_relative(m, "ud", 0.0, jac), m)
    s = np.array(3.0)
    assert transform_relative(s, "", 1.0, jac) == pytest.approx(48.0)


def test_transform_round_trip():
    rng = np.random.default_rng(40)
    jac = rng.normal(size=(4, 4)) + 4 * np.eye(4)
    A = rng.normal(size=(4, 4, 4))
    back = np.linalg.inv(jac)
    once = transform_relative(A, "udd", 2.0, jac)
    again = transform_relative(once, "udd", 2.0, back)
    assert np.allclose(again, A, rtol=1e-10, atol=1e-12)


# ---------------------------------------------------------------- two connections


def test_difference_tensor_oracle():
    tcp = decompose_connection(schwarzschild(), flat_spherical_metric(SPH),
                               (0.0, 10.0, 1.0, 1.0))
    assert tcp.K[1, 0, 0] == pytest.approx(0.008, rel=1e-12)
    # equal determinants: the density ratio is identically one
    assert tcp.kappa == pytest.approx(1.0, rel=1e-14)
    assert np.abs(tcp.dkappa).max() < 1e-13
    # doubled tensor bookkeeping
    assert np.allclose(tcp.S, 2.0 * tcp.K)


def test_nonmetricity_symmetric_in_last_pair():
    tcp = decompose_connection(schwarzschild(), flat_spherical_metric(SPH),
                               (0.0, 7.0, 0.8, 2.2))
    assert np.allclose(tcp.Q, tcp.Q.transpose(0, 2, 1), atol=1e-13)


def test_curvature_gap_closes():
    gap = curvature_gap(schwarzschild(), flat_spherical_metric(SPH),
                        (0.0, 9.0, 1.3, 0.5))
    assert gap.residual_gap < 1e-11
    assert gap.residual_j_forms < 1e-11
    assert gap.residual_ricci_gap < 1e-11
    assert gap.residual_ricci_forms < 1e-11


def test_mismatched_points_rejected():
    a = christoffel(schwarzschild(), (0.0, 9.0, 1.3, 0.5))
    b = christoffel(flat_spherical_metric(SPH), (0.0, 9.0, 1.3, 0.6))
    from gaugeforge.connection import TwoConnectionPoint
    with pytest.raises(ValueError):
        TwoConnectionPoint(a, b)
