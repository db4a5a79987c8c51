"""Finitely supported elements of the free space over a finite pointed
metric space.

The norm is computed twice on every call: a min-cost-flow LP on the complete
graph (primal route, also yields an optimal molecule representation) and a
max-pairing LP over the unit ball of base-vanishing Lipschitz functions
(dual route, yields a norming functional).  The two optima are required to
agree within the LP tolerance and the returned value is their average.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lp import EQ, GE, LE, LpError, LpProblem, solve
from .lipschitz import LipFunction, from_values
from .metric import PointedMetricSpace
from .tolerances import lp_tol


class FreeSpaceError(ValueError):
    pass


@dataclass(frozen=True)
class FreeElement:
    """Zero-sum mass vector; any imbalance is absorbed at the base point."""

    space: PointedMetricSpace
    masses: np.ndarray

    def __post_init__(self):
        m = np.array(self.masses, dtype=float)
        if m.shape != (self.space.n,):
            raise FreeSpaceError("mass vector size mismatch")
        m[0] -= m.sum()
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)

    def is_zero(self, tol=0.0) -> bool:
        return bool(np.abs(self.masses).max() <= tol)

    def __add__(self, other):
        _same_space(self, other)
        return FreeElement(self.space, self.masses + other.masses)

    def __rmul__(self, a: float):
        return FreeElement(self.space, a * self.masses)

    def __neg__(self):
        return FreeElement(self.space, -self.masses)

    def to_json(self) -> dict:
        return {"masses": self.masses.tolist()}


def delta(space, i: int) -> FreeElement:
    m = np.zeros(space.n)
    m[i] = 1.0
    return FreeElement(space, m)


def molecule(space, x: int, y: int) -> FreeElement:
    """(delta(x) - delta(y)) / d(x, y)."""
    if x == y:
        raise FreeSpaceError("molecule endpoints must differ")
    m = np.zeros(space.n)
    m[x] = 1.0 / space.d(x, y)
    m[y] = -1.0 / space.d(x, y)
    return FreeElement(space, m)


@dataclass(frozen=True)
class MoleculeCombination:
    """Positive combination sum_i lam_i (delta(x_i) - delta(y_i)) / d(x_i,y_i)."""

    space: PointedMetricSpace
    terms: tuple   # of (lam, x, y)

    def __post_init__(self):
        for lam, x, y in self.terms:
            if lam <= 0:
                raise FreeSpaceError("weights must be positive")
            if x == y:
                raise FreeSpaceError("molecule endpoints must differ")

    def weight_sum(self) -> float:
        return float(sum(t[0] for t in self.terms))

    def element(self) -> FreeElement:
        m = np.zeros(self.space.n)
        for lam, x, y in self.terms:
            m[x] += lam / self.space.d(x, y)
            m[y] -= lam / self.space.d(x, y)
        return FreeElement(self.space, m)

    def to_json(self) -> dict:
        return {"molecules": [[lam, x, y] for lam, x, y in self.terms]}


def element_from_json(space, obj: dict) -> FreeElement:
    if "masses" in obj:
        return FreeElement(space, np.array(obj["masses"], dtype=float))
    if "molecules" in obj:
        comb = MoleculeCombination(
            space, tuple((float(l), int(x), int(y))
                         for l, x, y in obj["molecules"]))
        return comb.element()
    raise FreeSpaceError("element JSON needs 'masses' or 'molecules'")


def _same_space(a, b):
    if a.space is not b.space and not np.array_equal(a.space.dist,
                                                     b.space.dist):
        raise FreeSpaceError("operands live on different spaces")


def pairing(f: LipFunction, mu: FreeElement) -> float:
    """sum_p masses[p] f(p); constant shifts of f do not change it."""
    _same_space(f, mu)
    return float(mu.masses @ f.values)


# ---------------------------------------------------------------------------
# LP building blocks (variables are f(p) for p = 1..n-1; f(base) = 0)
# ---------------------------------------------------------------------------

def lipschitz_ball_rows(space, scale: float = 1.0):
    """Rows A f <= b encoding |f(p) - f(q)| <= scale * d(p, q)."""
    n = space.n
    rows, rhs = [], []
    for p in range(n):
        for q in range(p + 1, n):
            r = np.zeros(n - 1)
            if p > 0:
                r[p - 1] = 1.0
            if q > 0:
                r[q - 1] = -1.0
            rows.append(r.copy())
            rhs.append(scale * space.d(p, q))
            rows.append(-r)
            rhs.append(scale * space.d(p, q))
    return np.array(rows), np.array(rhs)


def _values_from_vars(space, fv) -> LipFunction:
    return LipFunction(space, np.concatenate([[0.0], fv]))


@dataclass
class NormCertificates:
    value: float
    primal_value: float
    dual_value: float
    flow: dict            # (p, q) -> mass moved
    potential: LipFunction


def free_norm(mu: FreeElement) -> NormCertificates:
    """Free-space norm with both LP certificates."""
    space = mu.space
    n = space.n
    tol = lp_tol()
    if mu.is_zero():
        zero = _values_from_vars(space, np.zeros(n - 1))
        return NormCertificates(0.0, 0.0, 0.0, {}, zero)

    # primal: min-cost flow on the complete directed graph
    arcs = [(p, q) for p in range(n) for q in range(n) if p != q]
    A = np.zeros((n - 1, len(arcs)))
    cost = np.empty(len(arcs))
    for k, (p, q) in enumerate(arcs):
        cost[k] = space.d(p, q)
        if p > 0:
            A[p - 1, k] += 1.0
        if q > 0:
            A[q - 1, k] -= 1.0
    prim = solve(LpProblem.build(cost, A, [EQ] * (n - 1), mu.masses[1:],
                                 lb=np.zeros(len(arcs))))
    if prim.status != "optimal":
        raise FreeSpaceError(f"flow LP failed: {prim.status}")

    # dual: max pairing over the Lipschitz unit ball
    A_ub, b_ub = lipschitz_ball_rows(space)
    dual = solve(LpProblem.build(mu.masses[1:], A_ub, [LE] * len(b_ub), b_ub,
                                 maximize=True))
    if dual.status != "optimal":
        raise FreeSpaceError(f"Lipschitz LP failed: {dual.status}")

    if abs(prim.value - dual.value) > tol * (1.0 + abs(prim.value)):
        raise FreeSpaceError(
            f"duality gap {prim.value - dual.value:.3e} exceeds tolerance")
    value = 0.5 * (prim.value + dual.value)
    flow = {arcs[k]: float(w) for k, w in enumerate(prim.x) if w > tol}
    return NormCertificates(value, prim.value, dual.value, flow,
                            _values_from_vars(space, dual.x))


def norming_functional(mu: FreeElement) -> LipFunction:
    """A norm-one function attaining the norm of mu."""
    if mu.is_zero():
        raise FreeSpaceError("the zero element has no norming functional")
    return free_norm(mu).potential


def optimal_representation(mu: FreeElement) -> MoleculeCombination:
    """Molecule combination with weight sum equal to the norm, read off the
    optimal flow (lam = flow * distance per positive arc)."""
    if mu.is_zero():
        raise FreeSpaceError("the zero element has no representation")
    cert = free_norm(mu)
    terms = tuple((w * mu.space.d(p, q), p, q)
                  for (p, q), w in sorted(cert.flow.items()))
    return MoleculeCombination(mu.space, terms)


@dataclass(frozen=True)
class DualFace:
    """Norm-one functions pairing to the norm with mu: an LP-ready polytope."""

    mu: FreeElement
    norm: float

    @property
    def space(self):
        return self.mu.space

    def constraint_rows(self):
        """(A_ub, b_ub, pairing_row, pairing_rhs) over f(1..n-1)."""
        A_ub, b_ub = lipschitz_ball_rows(self.space)
        return A_ub, b_ub, self.mu.masses[1:].copy(), self.norm


def dual_face(mu: FreeElement) -> DualFace:
    if mu.is_zero():
        raise FreeSpaceError("the zero element has no dual face")
    return DualFace(mu, free_norm(mu).value)


def face_coordinate_ranges(face: DualFace) -> np.ndarray:
    """Per-point [min, max] of f(p) over the dual face (2n LP solves)."""
    space = face.space
    n = space.n
    A_ub, b_ub, prow, prhs = face.constraint_rows()
    A = np.vstack([A_ub, prow])
    b = np.concatenate([b_ub, [prhs]])
    senses = [LE] * len(b_ub) + [EQ]
    out = np.zeros((n, 2))
    for p in range(1, n):
        c = np.zeros(n - 1)
        c[p - 1] = 1.0
        lo = solve(LpProblem.build(c, A, senses, b))
        hi = solve(LpProblem.build(c, A, senses, b, maximize=True))
        if lo.status != "optimal" or hi.status != "optimal":
            raise FreeSpaceError("face range LP failed (empty face?)")
        out[p] = (lo.value, hi.value)
    return out


def is_gateaux(mu: FreeElement, tol: float = 1e-7) -> bool:
    """True iff the dual face pins every coordinate (unique norming f)."""
    if mu.is_zero():
        raise FreeSpaceError("zero element")
    ranges = face_coordinate_ranges(dual_face(mu))
    widths = ranges[:, 1] - ranges[:, 0]
    return bool(widths.max() <= tol)
