"""Symmetric 4x4 fields of scalar expressions and their pointwise jet data.

A MetricField owns sixteen ScalarFields (ten independent, mirrored across the
diagonal) and turns them into numpy derivative arrays or MetricExtensor
instances at a point.  The background metric of the two-connection machinery
is just another MetricField on the same chart.
"""

from __future__ import annotations

import numpy as np

from .jets import CoordinateChart, Jet, ScalarField, parse_expr
from .multiform import MetricExtensor, ring_det4

LORENTZ_NAMES = ("t", "x", "y", "z")
SPHERICAL_NAMES = ("t", "r", "theta", "phi")

ETA = np.diag([1.0, -1.0, -1.0, -1.0])


def lorentz_chart(extent: float = 1.0, margin: float = 1e-3) -> CoordinateChart:
    return CoordinateChart(
        LORENTZ_NAMES, [(-extent, extent)] * 4, margin=margin
    )


def spherical_chart(
    r_range=(4.0, 100.0), theta_pad: float = 0.2, margin: float = 1e-3
) -> CoordinateChart:
    return CoordinateChart(
        SPHERICAL_NAMES,
        [(-1.0, 1.0), r_range, (theta_pad, np.pi - theta_pad), (0.1, 2 * np.pi - 0.1)],
        margin=margin,
    )


class MetricField:
    """Symmetric matrix of scalar fields over one chart."""

    def __init__(self, chart: CoordinateChart, comps):
        self.chart = chart
        self.comps = [[None] * 4 for _ in range(4)]
        for i in range(4):
            for j in range(4):
                c = comps[i][j]
                if not isinstance(c, ScalarField):
                    raise TypeError("metric components must be ScalarFields")
                if c.chart is not chart:
                    raise ValueError("component chart mismatch")
                self.comps[i][j] = c
        for i in range(4):
            for j in range(i):
                # symmetry is structural: share the upper-triangle object
                self.comps[i][j] = self.comps[j][i]
        self._cache_key = None
        self._cache_val = None

    @staticmethod
    def from_upper(chart: CoordinateChart, entries, constants=None) -> "MetricField":
        """Build from an upper-triangle mapping {(i, j): source}.

        Values may be strings (parsed with the given constants) or
        ScalarFields.  Omitted entries are zero.
        """
        zero = ScalarField.constant(chart, 0.0)
        comps = [[zero] * 4 for _ in range(4)]
        for (i, j), src in entries.items():
            if j < i:
                i, j = j, i
            f = src if isinstance(src, ScalarField) else parse_expr(src, chart, constants)
            comps[i][j] = f
            comps[j][i] = f
        return MetricField(chart, comps)

    def component_jets(self, point, order: int = 2):
        key = (tuple(float(x) for x in point), order)
        if self._cache_key == key:
            return self._cache_val
        env = tuple(
            Jet.coordinate(i, float(point[i]), order) for i in range(4)
        )
        jets = [[None] * 4 for _ in range(4)]
        for i in range(4):
            for j in range(i, 4):
                jj = self.comps[i][j].root.ev(env)
                jets[i][j] = jj
                jets[j][i] = jj
        self._cache_key = key
        self._cache_val = jets
        return jets

    def covariant(self, point) -> np.ndarray:
        jets = self.component_jets(point, 0)
        return np.array([[jets[i][j].v for j in range(4)] for i in range(4)])

    def arrays(self, point, order: int = 2):
        """(g, dg, d2g[, d3g]) with derivative indices leading:
        dg[s, i, j] = d_s g_ij, d2g[s, t, i, j] = d_s d_t g_ij, ..."""
        jets = self.component_jets(point, order)
        g = np.empty((4, 4))
        dg = np.empty((4, 4, 4))
        for i in range(4):
            for j in range(4):
                g[i, j] = jets[i][j].v
                dg[:, i, j] = jets[i][j].g
        out = [g, dg]
        if order >= 2:
            d2g = np.empty((4, 4, 4, 4))
            for i in range(4):
                for j in range(4):
                    d2g[:, :, i, j] = jets[i][j].h
            out.append(d2g)
        if order >= 3:
            d3g = np.empty((4, 4, 4, 4, 4))
            for i in range(4):
                for j in range(4):
                    d3g[:, :, :, i, j] = jets[i][j].t
            out.append(d3g)
        return tuple(out)

    def det_jet(self, point, order: int = 2) -> Jet:
        return ring_det4(self.component_jets(point, order))

    def extensor_at(self, point, order: int = 3) -> MetricExtensor:
        """Jet-valued inverse-metric extensor (exact derivative flow)."""
        return MetricExtensor.from_jets(self.component_jets(point, order))

    def extensor_floats(self, point) -> MetricExtensor:
        return MetricExtensor.from_covariant(self.covariant(point))

    def signature_ok(self, point) -> bool:
        w = np.linalg.eigvalsh(self.covariant(point))
        return bool(np.sum(w > 0) == 1 and np.sum(w < 0) == 3)


def minkowski_metric(chart: CoordinateChart) -> MetricField:
    return MetricField.from_upper(
        chart, {(i, i): ScalarField.constant(chart, float(ETA[i, i])) for i in range(4)}
    )


def flat_spherical_metric(chart: CoordinateChart) -> MetricField:
    """diag(1, -1, -r^2, -r^2 sin^2(theta)) on a (t, r, theta, phi) chart.

    Note the parentheses in the sources: in this grammar unary minus binds
    tighter than '^', so "-r^2" would square the negated coordinate.
    """
    r, th = chart.names[1], chart.names[2]
    return MetricField.from_upper(
        chart,
        {
            (0, 0): "1",
            (1, 1): "-1",
            (2, 2): f"-({r}^2)",
            (3, 3): f"-({r}^2*sin({th})^2)",
        },
    )


def random_polynomial(chart: CoordinateChart, rng, degree: int = 2, scale: float = 0.1) -> ScalarField:
    """Random polynomial of the coordinates, coefficients uniform in [-scale, scale]."""
    xs = [ScalarField.coordinate(chart, i) for i in range(4)]
    f = ScalarField.constant(chart, float(rng.uniform(-scale, scale)))
    if degree >= 1:
        for i in range(4):
            f = f + float(rng.uniform(-scale, scale)) * xs[i]
    if degree >= 2:
        for i in range(4):
            for j in range(i, 4):
                f = f + float(rng.uniform(-scale, scale)) * (xs[i] * xs[j])
    return f


def random_perturbed_metric(
    chart: CoordinateChart, rng, eps: float = 1.0, degree: int = 2, scale: float = 0.1
) -> MetricField:
    """eta + eps * p(x) with p a symmetric matrix of small random polynomials.

    Signature is not guaranteed everywhere; sweep code rechecks per point.
    """
    entries = {}
    for i in range(4):
        for j in range(i, 4):
            p = random_polynomial(chart, rng, degree, scale)
            base = ScalarField.constant(chart, float(ETA[i, j]))
            entries[(i, j)] = base + eps * p
    return MetricField.from_upper(chart, entries)
