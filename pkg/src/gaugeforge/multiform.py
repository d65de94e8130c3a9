"""Mixed-grade differential forms on a 4-dimensional chart.

A multiform is a sum of basis blades e^{i1...ip} (wedges of the coframe
covectors e^0..e^3) with scalar coefficients.  Coefficients may be plain
floats or Jet instances; every operation here is written against the ring
interface (+ - * neg), so exact derivative information flows through the
algebra unchanged.

Metric-dependent operations (left contraction, Clifford product, Hodge star)
take a MetricExtensor carrying the inverse metric components.  Their blade
by blade expansions depend only on WHICH metric entries multiply WHICH
output blade, never on the entry values, so those expansions are computed
once symbolically and cached as plans keyed by the blade pair.
"""

from __future__ import annotations

import math

from .jets import Jet, EvalDomainError

NBLADE = 16

# canonical display/vector order: grade major, lexicographic inside a grade
BLADES = (0, 1, 2, 4, 8, 3, 5, 9, 6, 10, 12, 7, 11, 13, 14, 15)
BLADE_SLOT = {m: k for k, m in enumerate(BLADES)}

GRADE = tuple(bin(m).count("1") for m in range(NBLADE))

# reversion flips a grade-p blade by (-1)^{p(p-1)/2}
REV_SIGN = tuple(1 if GRADE[m] % 4 in (0, 1) else -1 for m in range(NBLADE))


def _indices(mask: int):
    return [i for i in range(4) if mask >> i & 1]


def blade_name(mask: int) -> str:
    if mask == 0:
        return "1"
    return "e" + "".join(str(i) for i in _indices(mask))


def _wedge_sign(ma: int, mb: int) -> int:
    if ma & mb:
        return 0
    inv = 0
    for i in _indices(ma):
        inv += GRADE[mb & ((1 << i) - 1)]
    return -1 if inv % 2 else 1


WEDGE_SIGN = tuple(tuple(_wedge_sign(a, b) for b in range(NBLADE)) for a in range(NBLADE))


def _is_zero(c) -> bool:
    return isinstance(c, float) and c == 0.0


class Multiform:
    """Sparse multiform: dict from blade mask to coefficient."""

    __slots__ = ("comps",)

    def __init__(self, comps=None):
        self.comps = {}
        if comps:
            for m, c in comps.items():
                if not _is_zero(c):
                    self.comps[m] = c

    @staticmethod
    def zero() -> "Multiform":
        return Multiform()

    @staticmethod
    def scalar(c) -> "Multiform":
        return Multiform({0: c})

    @staticmethod
    def basis(mask: int, coeff=1.0) -> "Multiform":
        return Multiform({mask: coeff})

    @staticmethod
    def from_components(vec) -> "Multiform":
        if len(vec) != NBLADE:
            raise ValueError("need one coefficient per blade")
        return Multiform({m: vec[k] for k, m in enumerate(BLADES)})

    def components(self):
        """Coefficients in canonical blade order (zeros filled in)."""
        return [self.comps.get(m, 0.0) for m in BLADES]

    def component(self, mask: int):
        return self.comps.get(mask, 0.0)

    def grade(self, p: int) -> "Multiform":
        return Multiform({m: c for m, c in self.comps.items() if GRADE[m] == p})

    def grades(self):
        return sorted({GRADE[m] for m in self.comps})

    def map_coeffs(self, fn) -> "Multiform":
        return Multiform({m: fn(c) for m, c in self.comps.items()})

    def __add__(self, other):
        out = dict(self.comps)
        for m, c in other.comps.items():
            if m in out:
                out[m] = out[m] + c
            else:
                out[m] = c
        return Multiform(out)

    def __sub__(self, other):
        out = dict(self.comps)
        for m, c in other.comps.items():
            if m in out:
                out[m] = out[m] - c
            else:
                out[m] = -c
        return Multiform(out)

    def __neg__(self):
        return Multiform({m: -c for m, c in self.comps.items()})

    def __mul__(self, scalar):
        return Multiform({m: c * scalar for m, c in self.comps.items()})

    __rmul__ = __mul__

    def __repr__(self):
        if not self.comps:
            return "Multiform(0)"
        bits = []
        for m in BLADES:
            if m in self.comps:
                c = self.comps[m]
                v = c.v if isinstance(c, Jet) else c
                bits.append(f"{v:+.6g}*{blade_name(m)}")
        return "Multiform(" + " ".join(bits) + ")"


def value_of(c) -> float:
    """The plain float behind a coefficient (jet value or the float itself)."""
    return c.v if isinstance(c, Jet) else float(c)


def max_abs_value(mf: Multiform) -> float:
    if not mf.comps:
        return 0.0
    return max(abs(value_of(c)) for c in mf.comps.values())


def scalar_part(mf: Multiform):
    return mf.comps.get(0, 0.0)


def reversion(mf: Multiform) -> Multiform:
    return Multiform(
        {m: (c if REV_SIGN[m] > 0 else -c) for m, c in mf.comps.items()}
    )


def wedge(a: Multiform, b: Multiform) -> Multiform:
    out = {}
    for ma, ca in a.comps.items():
        for mb, cb in b.comps.items():
            s = WEDGE_SIGN[ma][mb]
            if s == 0:
                continue
            term = ca * cb
            if s < 0:
                term = -term
            m = ma | mb
            if m in out:
                out[m] = out[m] + term
            else:
                out[m] = term
    return Multiform(out)


# ---------------------------------------------------------------------------
# symbolic plans
#
# A "symbolic multiform" maps blade mask -> {pairs: integer coefficient},
# where pairs is a sorted tuple of (mu, nu) naming inverse-metric factors.
# Plans for contraction and the Clifford product are built in this form once
# per blade pair and then evaluated against any metric, float or jet valued.


def _sym_single(mask: int):
    return {mask: {(): 1}}


def _sym_add(dst, src, extra_pairs=(), coef=1):
    for mask, terms in src.items():
        d = dst.setdefault(mask, {})
        for pairs, c in terms.items():
            key = tuple(sorted(pairs + extra_pairs))
            d[key] = d.get(key, 0) + coef * c


def _sym_prune(sym):
    out = {}
    for mask, terms in sym.items():
        kept = {p: c for p, c in terms.items() if c != 0}
        if kept:
            out[mask] = kept
    return out


def _gamma_contract(mu: int, sym):
    """Left contraction by the single covector e^mu, symbolically."""
    out = {}
    for mask, terms in sym.items():
        for k, ik in enumerate(_indices(mask)):
            s = -1 if k % 2 else 1
            pair = (mu, ik) if mu <= ik else (ik, mu)
            _sym_add(out, {mask & ~(1 << ik): terms}, (pair,), s)
    return _sym_prune(out)


def _contract_sym(ma: int, mb: int):
    # (A wedge B) contracted into C nests as A into (B into C), so a blade
    # contracts index by index, highest index applied first
    cur = _sym_single(mb)
    for mu in reversed(_indices(ma)):
        cur = _gamma_contract(mu, cur)
    return cur


_CONTRACT_PLANS: dict[tuple[int, int], tuple] = {}


def _contract_plan(ma: int, mb: int):
    key = (ma, mb)
    plan = _CONTRACT_PLANS.get(key)
    if plan is None:
        sym = _contract_sym(ma, mb)
        plan = tuple(
            (coef, pairs, mask)
            for mask, terms in sym.items()
            for pairs, coef in terms.items()
        )
        _CONTRACT_PLANS[key] = plan
    return plan


_CLIFFORD_SYM: dict[tuple[int, int], dict] = {}


def _clifford_sym(ma: int, mb: int):
    key = (ma, mb)
    hit = _CLIFFORD_SYM.get(key)
    if hit is not None:
        return hit
    if ma == 0:
        out = _sym_single(mb)
    elif GRADE[ma] == 1:
        mu = _indices(ma)[0]
        out = _gamma_contract(mu, _sym_single(mb))
        ws = WEDGE_SIGN[ma][mb]
        if ws:
            _sym_add(out, _sym_single(ma | mb), (), ws)
        out = _sym_prune(out)
    else:
        # A = a wedge A' with a the lowest covector: AB = a(A'B) - (a _| A')B
        i0 = _indices(ma)[0]
        rest = ma & ~(1 << i0)
        out = {}
        inner_prod = _clifford_sym(rest, mb)
        for mask, terms in inner_prod.items():
            single = _clifford_sym(1 << i0, mask)
            for pairs, c in terms.items():
                for mask2, terms2 in single.items():
                    for pairs2, c2 in terms2.items():
                        _sym_add(out, {mask2: {tuple(sorted(pairs + pairs2)): 1}}, (), c * c2)
        hook = _gamma_contract(i0, _sym_single(rest))
        for mask, terms in hook.items():
            prod = _clifford_sym(mask, mb)
            for pairs, c in terms.items():
                for mask2, terms2 in prod.items():
                    for pairs2, c2 in terms2.items():
                        _sym_add(out, {mask2: {tuple(sorted(pairs + pairs2)): 1}}, (), -c * c2)
        out = _sym_prune(out)
    _CLIFFORD_SYM[key] = out
    return out


_CLIFFORD_PLANS: dict[tuple[int, int], tuple] = {}


def _clifford_plan(ma: int, mb: int):
    key = (ma, mb)
    plan = _CLIFFORD_PLANS.get(key)
    if plan is None:
        sym = _clifford_sym(ma, mb)
        plan = tuple(
            (coef, pairs, mask)
            for mask, terms in sym.items()
            for pairs, coef in terms.items()
        )
        _CLIFFORD_PLANS[key] = plan
    return plan


def _eval_plans(a: Multiform, b: Multiform, metric: "MetricExtensor", plan_of) -> Multiform:
    G = metric.inverse
    out = {}
    for ma, ca in a.comps.items():
        for mb, cb in b.comps.items():
            for coef, pairs, mask in plan_of(ma, mb):
                term = ca * cb
                for mu, nu in pairs:
                    term = term * G[mu][nu]
                if coef != 1:
                    term = float(coef) * term
                if mask in out:
                    out[mask] = out[mask] + term
                else:
                    out[mask] = term
    return Multiform(out)


def contract_left(a: Multiform, b: Multiform, metric: "MetricExtensor") -> Multiform:
    """Metric left contraction a _| b (grade of b drops by the grade of a)."""
    return _eval_plans(a, b, metric, _contract_plan)


def clifford_product(a: Multiform, b: Multiform, metric: "MetricExtensor") -> Multiform:
    return _eval_plans(a, b, metric, _clifford_plan)


def inner(a: Multiform, b: Multiform, metric: "MetricExtensor"):
    """Scalar pairing <a, b>: the scalar part of reversion(a) contracted into b."""
    return scalar_part(contract_left(reversion(a), b, metric))


def hodge_star(a: Multiform, metric: "MetricExtensor") -> Multiform:
    """Duality map: reversion(a) contracted into the unit volume form."""
    return contract_left(reversion(a), metric.volume(), metric)


def hodge_star_inverse(a: Multiform, metric: "MetricExtensor") -> Multiform:
    # on a grade-q piece the star squares to sign(det) * (-1)^{q(4-q)}
    out = Multiform.zero()
    for q in a.grades():
        s = metric.det_sign * (1 if (q * (4 - q)) % 2 == 0 else -1)
        piece = hodge_star(a.grade(q), metric)
        out = out + (piece if s > 0 else -piece)
    return out


# ---------------------------------------------------------------------------
# extensors


class Extensor:
    """Outermorphism induced by a linear map on the coframe.

    ``matrix[a][b]`` is the e^b coefficient of the image of e^a.  The action
    extends to blades by wedging images, so determinant-like factors come out
    automatically.
    """

    __slots__ = ("matrix",)

    def __init__(self, matrix):
        self.matrix = [list(row) for row in matrix]
        if len(self.matrix) != 4 or any(len(r) != 4 for r in self.matrix):
            raise ValueError("extensor needs a 4x4 matrix")

    def apply(self, mf: Multiform) -> Multiform:
        out = Multiform.zero()
        for mask, c in mf.comps.items():
            part = Multiform.scalar(c)
            for i in _indices(mask):
                img = Multiform(
                    {1 << b: self.matrix[i][b] for b in range(4)}
                )
                part = wedge(part, img)
            out = out + part
        return out


def outermorphism(matrix, mf: Multiform) -> Multiform:
    return Extensor(matrix).apply(mf)


# ---------------------------------------------------------------------------
# ring linear algebra (works for float and Jet entries alike)


def _det3(m, rows, cols):
    (r0, r1, r2), (c0, c1, c2) = rows, cols
    return (
        m[r0][c0] * (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1])
        - m[r0][c1] * (m[r1][c0] * m[r2][c2] - m[r1][c2] * m[r2][c0])
        + m[r0][c2] * (m[r1][c0] * m[r2][c1] - m[r1][c1] * m[r2][c0])
    )


def ring_det4(m):
    rows = (1, 2, 3)
    acc = None
    for j in range(4):
        cols = tuple(c for c in range(4) if c != j)
        term = m[0][j] * _det3(m, rows, cols)
        if j % 2:
            term = -term
        acc = term if acc is None else acc + term
    return acc


def ring_inv4(m, det=None):
    """Inverse of a 4x4 ring matrix via the adjugate."""
    if det is None:
        det = ring_det4(m)
    if isinstance(det, Jet):
        inv_det = det.reciprocal()
    else:
        if det == 0.0:
            raise EvalDomainError("singular matrix")
        inv_det = 1.0 / det
    out = [[None] * 4 for _ in range(4)]
    for i in range(4):
        rows = tuple(r for r in range(4) if r != i)
        for j in range(4):
            cols = tuple(c for c in range(4) if c != j)
            cof = _det3(m, rows, cols)
            if (i + j) % 2:
                cof = -cof
            out[j][i] = cof * inv_det
    return out


# ---------------------------------------------------------------------------
# metric extensor


class MetricExtensor:
    """Inverse-metric data the algebra needs: components g^{mu nu}, the
    volume normalization sqrt(-det g), and the determinant sign."""

    __slots__ = ("inverse", "sqrt_neg_det", "det_sign")

    def __init__(self, inverse, sqrt_neg_det, det_sign: float = -1.0):
        self.inverse = [list(row) for row in inverse]
        self.sqrt_neg_det = sqrt_neg_det
        self.det_sign = det_sign

    @staticmethod
    def from_covariant(g) -> "MetricExtensor":
        """From a plain numeric covariant matrix (Lorentzian, det < 0)."""
        import numpy as np

        g = np.asarray(g, dtype=float)
        det = float(np.linalg.det(g))
        if det >= 0.0:
            raise EvalDomainError("metric determinant must be negative")
        inv = np.linalg.inv(g)
        return MetricExtensor(
            [[float(inv[i, j]) for j in range(4)] for i in range(4)],
            math.sqrt(-det),
        )

    @staticmethod
    def from_jets(gjets) -> "MetricExtensor":
        """From a 4x4 matrix of covariant component jets."""
        det = ring_det4(gjets)
        if det.v >= 0.0:
            raise EvalDomainError("metric determinant must be negative")
        inv = ring_inv4(gjets, det)
        return MetricExtensor(inv, (-det).sqrt())

    def volume(self) -> Multiform:
        return Multiform({15: self.sqrt_neg_det})

    def inverse_floats(self):
        return [[value_of(self.inverse[i][j]) for j in range(4)] for i in range(4)]


MINKOWSKI = MetricExtensor(
    [[1.0, 0.0, 0.0, 0.0], [0.0, -1.0, 0.0, 0.0], [0.0, 0.0, -1.0, 0.0], [0.0, 0.0, 0.0, -1.0]],
    1.0,
)
