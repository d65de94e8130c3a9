"""Levi-Civita connections of two metrics on one chart, and the complete
suite of exact relations between them.

Everything here works on plain numpy arrays extracted from metric jets at a
point: Christoffel symbols and their first derivatives, curvature, the
strain/contorsion difference tensor, non-metricity, determinant densities,
and the named identity residuals the CLI reports.  Derivative arrays come
from the jet engine, so identities hold to rounding, not to a step size.

Index layout conventions (fixed everywhere in this module):
  gamma[r, a, b]      = Gamma^r_{ab}            (symmetric in a, b)
  dgamma[c, r, a, b]  = d_c Gamma^r_{ab}
  riemann[m, r, a, b] = R_m^r_{ab} = d_a Gamma^r_{bm} - d_b Gamma^r_{am}
                        + Gamma^r_{as} Gamma^s_{bm} - Gamma^r_{bs} Gamma^s_{am}
  ricci[m, a]         = riemann[m, r, a, r] summed over r
  K[r, a, b]          = Gamma^r_{ab} - background Gamma^r_{ab}
  Q[a, b, s]          = -(covariant derivative along a, by the full
                         connection, of the background metric)_{bs}
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .jets import EvalDomainError
from .metric import MetricField


def _nres(lhs, rhs) -> float:
    """Max-abs difference normalized by 1 + the larger term magnitude."""
    lhs = np.asarray(lhs)
    rhs = np.asarray(rhs)
    scale = 1.0 + max(np.max(np.abs(lhs)), np.max(np.abs(rhs)))
    return float(np.max(np.abs(lhs - rhs)) / scale)


class ConnectionPoint:
    """Metric derivative data and Christoffel symbols at one point."""

    __slots__ = (
        "point", "g", "ginv", "dg", "d2g", "gamma", "dgamma",
        "dginv", "s", "ds", "trace_gamma",
    )

    def __init__(self, point, g, dg, d2g):
        self.point = tuple(point)
        self.g = g
        self.dg = dg
        self.d2g = d2g
        det = np.linalg.det(g)
        if det >= 0.0:
            raise EvalDomainError("metric determinant must be negative")
        self.ginv = np.linalg.inv(g)
        # T[a,b,s] = d_a g_bs + d_b g_as - d_s g_ab
        T = dg + np.einsum("bas->abs", dg) - np.einsum("sab->abs", dg)
        self.gamma = 0.5 * np.einsum("rs,abs->rab", self.ginv, T)
        self.dginv = -np.einsum("rm,sn,cmn->crs", self.ginv, self.ginv, dg)
        dT = d2g + np.einsum("cbas->cabs", d2g) - np.einsum("csab->cabs", d2g)
        self.dgamma = 0.5 * (
            np.einsum("crs,abs->crab", self.dginv, T)
            + np.einsum("rs,cabs->crab", self.ginv, dT)
        )
        self.s = float(np.sqrt(-det))
        # d(sqrt(-det g)) = 1/2 sqrt(-det g) g^{ab} d g_ab
        self.ds = 0.5 * self.s * np.einsum("ab,cab->c", self.ginv, dg)
        self.trace_gamma = np.einsum("rar->a", self.gamma)

    @staticmethod
    def from_metric(metric: MetricField, point) -> "ConnectionPoint":
        g, dg, d2g = metric.arrays(point, 2)
        return ConnectionPoint(point, g, dg, d2g)


def christoffel(metric: MetricField, point) -> ConnectionPoint:
    return ConnectionPoint.from_metric(metric, point)


class CurvatureData(NamedTuple):
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float


def curvature_of(conn: ConnectionPoint) -> CurvatureData:
    gg = np.einsum("ras,sbm->mrab", conn.gamma, conn.gamma)
    riemann = (
        np.einsum("arbm->mrab", conn.dgamma)
        - np.einsum("bram->mrab", conn.dgamma)
        + gg
        - gg.transpose(0, 1, 3, 2)
    )
    ricci = np.einsum("mrar->ma", riemann)
    scalar = float(np.einsum("ma,ma->", conn.ginv, ricci))
    return CurvatureData(riemann, ricci, scalar)


def curvature(metric: MetricField, point) -> CurvatureData:
    return curvature_of(christoffel(metric, point))


def covderiv(A: np.ndarray, dA: np.ndarray, valence: str, conn: ConnectionPoint,
             weight: float = 0.0) -> np.ndarray:
    """Covariant derivative of a relative tensor from its component arrays.

    A has one axis per valence letter ('u' upper, 'd' lower); dA has the
    derivative axis first.  The result likewise has the derivative axis
    first.  The weight term subtracts w * Gamma^s_{cs} * A.
    """
    if A.ndim != len(valence):
        raise ValueError("valence does not match array rank")
    out = dA.copy()
    rank = len(valence)
    for k, v in enumerate(valence):
        if v == "u":
            tmp = np.tensordot(A, conn.gamma, axes=([k], [2]))
        elif v == "d":
            tmp = np.tensordot(A, conn.gamma, axes=([k], [0]))
        else:
            raise ValueError(f"bad valence letter {v!r}")
        # tmp axes: (A minus slot k) + (r, c) for 'u', (a, b)->(c?, s) for 'd'
        if v == "u":
            tmp = np.moveaxis(tmp, -1, 0)       # derivative axis to front
            tmp = np.moveaxis(tmp, -1, 1 + k)   # new upper index back to slot k
            out = out + tmp
        else:
            tmp = np.moveaxis(tmp, -2, 0)
            tmp = np.moveaxis(tmp, -1, 1 + k)
            out = out - tmp
    if weight:
        out = out - weight * conn.trace_gamma.reshape((4,) + (1,) * rank) * A[None]
    return out


def transform_relative(A: np.ndarray, valence: str, weight: float,
                       jac: np.ndarray) -> np.ndarray:
    """Component transformation of a relative tensor under a linear chart
    change with constant Jacobian jac[i, j] = d x'_i / d x_j."""
    if A.ndim != len(valence):
        raise ValueError("valence does not match array rank")
    out = A * np.linalg.det(jac) ** weight
    inv = np.linalg.inv(jac)
    for k, v in enumerate(valence):
        mat = jac if v == "u" else inv.T
        out = np.moveaxis(np.tensordot(mat, out, axes=([1], [k])), 0, k)
    return out


class TwoConnectionPoint:
    """Difference data of two Levi-Civita connections at one point."""

    __slots__ = ("full", "back", "K", "dK", "S", "Q", "kappa", "dkappa")

    def __init__(self, full: ConnectionPoint, back: ConnectionPoint):
        if full.point != back.point:
            raise ValueError("connection points differ")
        self.full = full
        self.back = back
        self.K = full.gamma - back.gamma
        self.dK = full.dgamma - back.dgamma
        self.S = 2.0 * self.K
        # Q_{abs} = -(d_a gb_bs - Gamma^i_{ab} gb_is - Gamma^i_{as} gb_bi)
        dgb = covderiv(back.g, back.dg, "dd", full)
        self.Q = -dgb
        self.kappa = full.s / back.s
        self.dkappa = self.kappa * 0.5 * (
            np.einsum("ab,cab->c", full.ginv, full.dg)
            - np.einsum("ab,cab->c", back.ginv, back.dg)
        )


def decompose_connection(g: MetricField, gbar: MetricField, point) -> TwoConnectionPoint:
    return TwoConnectionPoint(christoffel(g, point), christoffel(gbar, point))


def _covderiv_K(K, dK, conn: ConnectionPoint):
    """(D_c K)[c, r, a, b] for the (1,2) difference tensor."""
    return covderiv(K, dK, "udd", conn)


class CurvatureGap(NamedTuple):
    J: np.ndarray
    residual_gap: float
    residual_j_forms: float
    residual_ricci_gap: float
    residual_ricci_forms: float


def curvature_gap(g: MetricField, gbar: MetricField, point) -> CurvatureGap:
    """The difference tensor J between the two curvatures, by both of its
    closed forms, plus the residuals tying it to the direct curvature gap."""
    return curvature_gap_from(decompose_connection(g, gbar, point))


def _inv_density_derivs(conn: ConnectionPoint):
    """d of sqrt(-det g) g^{rs} and helpers, all exact from jet arrays."""
    V = conn.s * conn.ginv
    dV = conn.ds[:, None, None] * conn.ginv[None] + conn.s * conn.dginv
    return V, dV


def density_identities(g: MetricField, gbar: MetricField, point) -> dict:
    """Residuals of the determinant-density and trace-divergence relations."""
    tcp = decompose_connection(g, gbar, point)
    return _density_identities(tcp)


def _density_identities(tcp: TwoConnectionPoint) -> dict:
    full, back = tcp.full, tcp.back
    K = tcp.K
    out = {}

    # the four density derivative identities: each prints as
    # "partial term +- trace term = 0"
    out["density-background-sqrt"] = _nres(back.ds, back.trace_gamma * back.s)
    out["density-background-inv-sqrt"] = _nres(
        -back.ds / back.s**2, -back.trace_gamma / back.s
    )
    out["density-full-sqrt"] = _nres(full.ds, full.trace_gamma * full.s)
    out["density-full-inv-sqrt"] = _nres(
        -full.ds / full.s**2, -full.trace_gamma / full.s
    )

    # trace of the difference tensor, four equivalent expressions;
    # D_s gb_ab is -Q_{sab}, so the first member reads +1/2 gb^{ab} Q_{sab}
    Ktr = np.einsum("rrb->b", K)
    m1 = 0.5 * np.einsum("ab,sab->s", back.ginv, tcp.Q)
    dg_cov = covderiv(full.g, full.dg, "dd", back)
    m2 = 0.5 * np.einsum("ab,sab->s", full.ginv, dg_cov)
    m3 = tcp.dkappa / tcp.kappa
    out["trace-contorsion-kappa"] = max(
        _nres(Ktr, m1), _nres(Ktr, m2), _nres(Ktr, m3)
    )

    # full-metric trace line: g^{ab} K^r_{ab} equals minus the normalized
    # background-divergence of the metric density, in both printed forms
    lhs = np.einsum("ab,rab->r", full.ginv, K)
    V, dV = _inv_density_derivs(full)
    # weight-1 divergence under the background connection
    div_w1 = np.einsum("ssr->r", covderiv(V, dV, "uu", back, weight=1.0))
    m_b = -div_w1 / full.s
    W = (tcp.kappa / full.s) * V          # kappa g^{rs}, a true tensor
    dW = (
        (tcp.dkappa / full.s - tcp.kappa * full.ds / full.s**2)[:, None, None] * V[None]
        + (tcp.kappa / full.s) * dV
    )
    div_w0 = np.einsum("ssr->r", covderiv(W, dW, "uu", back, weight=0.0))
    m_a = -div_w0 / tcp.kappa
    out["full-trace-divergence"] = max(_nres(lhs, m_a), _nres(lhs, m_b))

    # background mirror: gb^{ab} K^r_{ab} = kappa * D_s(kappa^{-1} gb^{rs})
    lhs_b = np.einsum("ab,rab->r", back.ginv, K)
    U = back.ginv / tcp.kappa
    dU = (
        -(tcp.dkappa / tcp.kappa**2)[:, None, None] * back.ginv[None]
        + back.dginv / tcp.kappa
    )
    div_b = np.einsum("ssr->r", covderiv(U, dU, "uu", full, weight=0.0))
    out["background-trace-divergence"] = _nres(lhs_b, tcp.kappa * div_b)

    # derivative-of-trace symmetry under either connection
    dKtr = np.einsum("crrb->cb", tcp.dK)
    Db = covderiv(Ktr, dKtr, "d", back)
    Df = covderiv(Ktr, dKtr, "d", full)
    out["trace-derivative-symmetry-background"] = _nres(Db, Db.T)
    out["trace-derivative-symmetry-full"] = _nres(Df, Df.T)
    return out


def identity_residuals(g: MetricField, gbar: MetricField, point) -> dict:
    """Every named two-connection identity residual at one point."""
    tcp = decompose_connection(g, gbar, point)
    full, back = tcp.full, tcp.back
    K, S, Q = tcp.K, tcp.S, tcp.Q
    out = {}

    # metric compatibility of each connection with its own metric
    out["metric-compatibility-full"] = _nres(
        covderiv(full.g, full.dg, "dd", full), np.zeros((4, 4, 4))
    )
    out["metric-compatibility-background"] = _nres(
        covderiv(back.g, back.dg, "dd", back), np.zeros((4, 4, 4))
    )

    # non-metricity from strain and back
    q_from_s = 0.5 * (
        np.einsum("ms,mab->abs", back.g, S) + np.einsum("bm,mas->abs", back.g, S)
    )
    out["nonmetricity-from-strain"] = _nres(Q, q_from_s)
    s_from_q = np.einsum(
        "rs,abs->rab",
        back.ginv,
        Q + np.einsum("bsa->abs", Q) - np.einsum("sab->abs", Q),
    )
    out["strain-from-nonmetricity"] = _nres(S, s_from_q)
    out["nonmetricity-symmetry"] = _nres(Q, Q.transpose(0, 2, 1))

    S_low = np.einsum("rs,rab->abs", back.g, S)
    cyc = lambda T: T + np.einsum("sab->abs", T) + np.einsum("bsa->abs", T)
    out["nonmetricity-cyclic"] = _nres(cyc(Q), cyc(S_low))

    # the difference tensor from either metric's covariant derivative; same
    # symmetrization pattern as the Christoffel assembly
    def christoffel_like(ginv_mat, dcov):
        sym = dcov + np.einsum("bas->abs", dcov) - np.einsum("sab->abs", dcov)
        return 0.5 * np.einsum("rs,abs->rab", ginv_mat, sym)

    dgb_cov = covderiv(back.g, back.dg, "dd", full)     # D of background metric
    out["contorsion-backward-form"] = _nres(K, -christoffel_like(back.ginv, dgb_cov))
    dg_cov = covderiv(full.g, full.dg, "dd", back)      # Db of full metric
    out["contorsion-forward-form"] = _nres(K, christoffel_like(full.ginv, dg_cov))

    gap = curvature_gap_from(tcp)
    out["curvature-gap"] = gap.residual_gap
    out["curvature-gap-j-forms"] = gap.residual_j_forms
    out["ricci-gap"] = gap.residual_ricci_gap
    out["ricci-gap-j-forms"] = gap.residual_ricci_forms

    R_full = curvature_of(full)
    out["riemann-antisymmetry"] = _nres(
        R_full.riemann, -R_full.riemann.transpose(0, 1, 3, 2)
    )

    out.update(_density_identities(tcp))
    return out


def curvature_gap_from(tcp: TwoConnectionPoint) -> CurvatureGap:
    """curvature_gap on an already-built decomposition."""
    K, dK = tcp.K, tcp.dK
    DbK = _covderiv_K(K, dK, tcp.back)
    DfK = _covderiv_K(K, dK, tcp.full)
    # J[m,r,a,b] = (Db_a K)^r_{bm} - K^r_{bs} K^s_{am}, equivalently
    #             (Df_a K)^r_{bm} - K^r_{as} K^s_{bm} + K^s_{ab} K^r_{sm}
    J_back = np.einsum("arbm->mrab", DbK) - np.einsum("rbs,sam->mrab", K, K)
    J_full = (
        np.einsum("arbm->mrab", DfK)
        - np.einsum("ras,sbm->mrab", K, K)
        + np.einsum("sab,rsm->mrab", K, K)
    )
    R_full = curvature_of(tcp.full)
    R_back = curvature_of(tcp.back)
    gap = R_full.riemann - R_back.riemann
    anti = J_back - J_back.transpose(0, 1, 3, 2)
    Ktr = np.einsum("rrb->b", K)
    dKtr = np.einsum("crrb->cb", tcp.dK)
    Db_Ktr = covderiv(Ktr, dKtr, "d", tcp.back)
    Df_Ktr = covderiv(Ktr, dKtr, "d", tcp.full)
    ricci_back_line = (
        Db_Ktr.T
        - np.einsum("rram->ma", DbK)
        + np.einsum("ras,srm->ma", K, K)
        - np.einsum("rrs,sam->ma", K, K)
    )
    ricci_full_line = (
        Df_Ktr.T
        - np.einsum("rram->ma", DfK)
        - np.einsum("rsa,srm->ma", K, K)
        + np.einsum("rrs,sam->ma", K, K)
    )
    ricci_gap = R_full.ricci - R_back.ricci
    return CurvatureGap(
        J_back,
        _nres(gap, anti),
        _nres(J_back, J_full),
        _nres(ricci_gap, ricci_back_line),
        _nres(ricci_back_line, ricci_full_line),
    )
