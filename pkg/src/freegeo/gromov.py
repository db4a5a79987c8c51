"""Gromov-product analytics for pairs of points.

For a pair (x, y) the report carries the uniform product gap eta, the
rotundity ratio (products measured against the distance to the nearer
endpoint), and the concavity profile (running product minimum over points
at least eps away from both endpoints).  On a finite space the three
positivity notions collapse to eta > 0; the profile tables are where the
distinctions of the sequential counterexample families become visible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .metric import MetricFamily, PointedMetricSpace
from .tolerances import TAU_METRIC


class PairError(ValueError):
    pass


def gromov_product(space: PointedMetricSpace, z: int, x: int, y: int) -> float:
    """d(x,z) + d(z,y) - d(x,y); nonnegative by the triangle inequality."""
    if x == y:
        raise PairError("x and y must differ")
    d = space.dist
    return float(d[x, z] + d[z, y] - d[x, y])


@dataclass(frozen=True)
class PairGeometryReport:
    x: int
    y: int
    eta: float                    # min Gromov product over z outside {x, y}
    delta_rotund: float           # min of product / min(d(x,z), d(y,z))
    concavity_profile: tuple      # (eps, min product over z with r_z >= eps)
    has_gromov_gap: bool
    is_rotund: bool
    is_concave: bool
    extreme_molecule: bool

    def to_json(self) -> dict:
        return {"pair": [self.x, self.y], "eta": self.eta,
                "delta_rotund": self.delta_rotund,
                "concavity_profile": [list(t) for t in self.concavity_profile],
                "has_gromov_gap": self.has_gromov_gap,
                "is_rotund": self.is_rotund, "is_concave": self.is_concave,
                "extreme_molecule": self.extreme_molecule}


def analyze_pair(space: PointedMetricSpace, x: int, y: int
                 ) -> PairGeometryReport:
    """Enumerate every witness point and classify the pair."""
    if x == y:
        raise PairError("x and y must differ")
    others = [z for z in space.points() if z not in (x, y)]
    if not others:
        return PairGeometryReport(x, y, np.inf, np.inf, (), True, True, True,
                                  True)
    d = space.dist
    prods = np.array([gromov_product(space, z, x, y) for z in others])
    near = np.array([min(d[x, z], d[y, z]) for z in others])
    eta = float(prods.min())
    delta_rotund = float((prods / near).min())
    order = np.argsort(near, kind="stable")
    profile = []
    # running min of products over { z : r_z >= eps } at each breakpoint
    suffix_min = np.minimum.accumulate(prods[order][::-1])[::-1]
    seen = set()
    for rank, idx in enumerate(order):
        eps = float(near[idx])
        if eps in seen:
            continue
        seen.add(eps)
        profile.append((eps, float(suffix_min[rank])))
    has_gap = eta > TAU_METRIC
    extreme = float(prods.min()) > TAU_METRIC
    is_rotund = delta_rotund > TAU_METRIC
    is_concave = all(v > TAU_METRIC for _, v in profile)
    # the three notions coincide on finite spaces
    assert has_gap == is_rotund == is_concave
    return PairGeometryReport(x, y, eta, delta_rotund, tuple(profile),
                              has_gap, is_rotund, is_concave, extreme)


def classify_space(space: PointedMetricSpace) -> dict:
    """Uniform non-alignment across all pairs, with the witness pair."""
    if space.n < 2:
        raise PairError("need at least two points")
    best = None
    for x, y in combinations(space.points(), 2):
        rep = analyze_pair(space, x, y)
        if best is None or rep.eta < best.eta:
            best = rep
    return {"luna": bool(best.eta > TAU_METRIC),
            "min_eta": best.eta,
            "witness_pair": [best.x, best.y]}


def family_trend(family: MetricFamily, indices) -> list:
    """Per-index (index, eta, delta_rotund) for the distinguished pair."""
    rows = []
    for idx in indices:
        space, (x, y) = family.generate(idx)
        rep = analyze_pair(space, x, y)
        rows.append({"index": int(idx), "eta": rep.eta,
                     "delta_rotund": rep.delta_rotund})
    return rows
