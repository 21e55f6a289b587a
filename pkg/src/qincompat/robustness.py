"""Convex robustness measures over membership oracles.

A membership oracle is any callable mapping a point of a convex ambient
space to :class:`Membership`.  Points may be numpy arrays or device pairs;
non-array points need a `mix` callback forming convex combinations.

``relative_robustness`` computes w(x|y) = sup { t : t x + (1-t) y inside },
the largest weight of x in a mixture with y that stays in the useless set.
The inside set on the segment is an interval (convexity of the useless
set), located by a coarse grid scan and refined by bisecting its upper
boundary.  UNDECIDED oracle answers count as outside, so every reported
value is a certified lower bracket.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .devices import mix as device_mix
from .errors import DegeneratePolygonError

GRID_POINTS = 33


class Membership(enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    UNDECIDED = "undecided"


MembershipOracle = Callable[[object], Membership]


@dataclass(frozen=True)
class RobustnessEstimate:
    value: float
    bracket: tuple[float, float]
    witness_y: object = None
    mode: str = "relative"


def _default_mix(x, y, t):
    if isinstance(x, np.ndarray) or isinstance(y, np.ndarray):
        return t * np.asarray(x, dtype=float) + (1 - t) * np.asarray(y, dtype=float)
    if isinstance(x, (int, float)) and isinstance(y, (int, float)):
        return t * x + (1 - t) * y
    return device_mix(x, y, t)


def relative_robustness(
    x,
    y,
    oracle: MembershipOracle,
    bisect_tol: float = 1e-3,
    mix: Callable | None = None,
) -> RobustnessEstimate:
    """w(x|y): bisect the upper boundary of the inside interval on [y, x]."""
    mix = mix or _default_mix
    inside = [False] * GRID_POINTS
    for i in range(GRID_POINTS):
        t = i / (GRID_POINTS - 1)
        inside[i] = oracle(mix(x, y, t)) == Membership.INSIDE
    if not any(inside):
        return RobustnessEstimate(0.0, (0.0, 0.0), witness_y=y)
    top = max(i for i in range(GRID_POINTS) if inside[i])
    lo = top / (GRID_POINTS - 1)
    if top == GRID_POINTS - 1:
        return RobustnessEstimate(1.0, (1.0, 1.0), witness_y=y)
    hi = (top + 1) / (GRID_POINTS - 1)
    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        if oracle(mix(x, y, mid)) == Membership.INSIDE:
            lo = mid
        else:
            hi = mid
    return RobustnessEstimate(lo, (lo, hi), witness_y=y)


def k_robustness_sampled(
    x,
    candidates: Sequence,
    oracle: MembershipOracle,
    bisect_tol: float = 1e-3,
    mix: Callable | None = None,
) -> RobustnessEstimate:
    """Lower bound on W(x) = sup_y w(x|y), sampling y over `candidates`."""
    if not candidates:
        raise ValueError("candidate noise list is empty")
    best: RobustnessEstimate | None = None
    for y in candidates:
        est = relative_robustness(x, y, oracle, bisect_tol=bisect_tol, mix=mix)
        if best is None or est.value > best.value:
            best = est
    return RobustnessEstimate(best.value, best.bracket, best.witness_y, "K_absolute_sampled")


def to_R(w: float) -> float:
    """Convert the weight measure to R = 1/w - 1."""
    if w < 0 or w > 1:
        raise ValueError(f"w = {w} outside [0, 1]")
    if w == 0:
        return math.inf
    return 1.0 / w - 1.0


def global_lower_bound() -> float:
    """Mixing with a trivial pair at weight 1/2 is always compatible."""
    return 0.5


def heinosaari_lower_bound(d: int) -> float:
    """Dimension-dependent floor (2+d)/(2(1+d)) for d-dimensional devices."""
    if d < 2:
        raise ValueError("dimensional bound needs d >= 2")
    return (2.0 + d) / (2.0 * (1.0 + d))


# ---------------------------------------------------------------------------
# polygon fixture oracle


def _convex_hull(points: np.ndarray) -> np.ndarray:
    """Andrew's monotone chain; returns hull vertices in CCW order."""
    pts = sorted(map(tuple, points))
    if len(pts) < 3:
        raise DegeneratePolygonError("need at least 3 vertices")

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegeneratePolygonError("vertices are collinear")
    return np.asarray(hull, dtype=float)


def polygon_oracle(vertices, slack: float = 1e-12) -> MembershipOracle:
    """Closed-membership oracle for the convex hull of 2-D `vertices`."""
    hull = _convex_hull(np.asarray(vertices, dtype=float))
    nv = len(hull)
    edges = []
    for i in range(nv):
        a, b = hull[i], hull[(i + 1) % nv]
        normal = np.array([-(b[1] - a[1]), b[0] - a[0]])  # inward for CCW hull
        scale = max(1.0, float(np.linalg.norm(normal)))
        edges.append((normal, float(normal @ a), scale))

    def classify(point) -> Membership:
        p = np.asarray(point, dtype=float)
        for normal, offset, scale in edges:
            if normal @ p - offset < -slack * scale:
                return Membership.OUTSIDE
        return Membership.INSIDE

    return classify
