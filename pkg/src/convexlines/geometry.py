"""Polygonal-line geometry: the lattice data type, scaling, the limit parabola,
and the tangential / Hausdorff metrics.

A convex lattice polygonal line is stored as (direction, multiplicity) pairs
with strictly increasing slopes.  Scaled by S_n(x) = (x1/n1, x2/n2) the line
lives in the unit square, where the limit curve is the arc
sqrt(1 - x1) + sqrt(x2) = 1 with tangential parameterization
g*(t) = ((t^2+2t)/(1+t)^2, t^2/(1+t)^2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cmp_to_key

import numpy as np

from .errors import (
    DuplicateDirectionError,
    GeometryDomainError,
    InvalidArgumentError,
)
from .lattice import Direction, slope_compare


@dataclass(frozen=True)
class PolygonalLine:
    """Ordered (Direction, multiplicity) pairs, slopes strictly increasing.

    The empty tuple is the trivial line with endpoint (0,0).  The endpoint is
    sum(direction * multiplicity); lattice_point_count is sum(multiplicity),
    the number of lattice points on the line excluding the origin.
    """

    edges: tuple[tuple[Direction, int], ...]

    def __post_init__(self) -> None:
        for d, k in self.edges:
            if not isinstance(k, int) or k < 1:
                raise InvalidArgumentError(f"multiplicity must be a positive integer, got {k!r}")
        for (a, _), (b, _) in zip(self.edges, self.edges[1:]):
            if slope_compare(a, b) >= 0:
                raise GeometryDomainError("edge slopes must strictly increase")

    @property
    def endpoint(self) -> tuple[int, int]:
        return (
            sum(d.x1 * k for d, k in self.edges),
            sum(d.x2 * k for d, k in self.edges),
        )

    @property
    def lattice_point_count(self) -> int:
        return sum(k for _, k in self.edges)

    def vertices(self) -> list[tuple[int, int]]:
        """Integer vertices from the origin, one per edge endpoint."""
        out = [(0, 0)]
        a = b = 0
        for d, k in self.edges:
            a += d.x1 * k
            b += d.x2 * k
            out.append((a, b))
        return out

    def to_planar(self, n: tuple[int, int]) -> "PlanarPolyline":
        """The S_n-scaled copy in the unit square (when the endpoint is n)."""
        return PlanarPolyline(tuple((a / n[0], b / n[1]) for a, b in self.vertices()))


def from_multiplicities(pairs) -> PolygonalLine:
    """Canonical PolygonalLine from (direction, multiplicity) pairs.

    Directions may come in any order and as raw (x1, x2) tuples; duplicates
    and non-coprime inputs are rejected.
    """
    canon: list[tuple[Direction, int]] = []
    for d, k in pairs:
        if not isinstance(d, Direction):
            d = Direction(int(d[0]), int(d[1]))
        canon.append((d, int(k)))
    seen = set()
    for d, _ in canon:
        if (d.x1, d.x2) in seen:
            raise DuplicateDirectionError(f"direction {(d.x1, d.x2)} listed twice")
        seen.add((d.x1, d.x2))
    canon.sort(key=cmp_to_key(lambda p, q: slope_compare(p[0], q[0])))
    return PolygonalLine(tuple(canon))


def lattice_point_count(line: PolygonalLine) -> int:
    """Number of lattice points on the line excluding the origin."""
    return line.lattice_point_count


# ---------------------------------------------------------------------------
# limit curve


def limit_shape(t) -> np.ndarray:
    """g*(t) = ((t^2+2t)/(1+t)^2, t^2/(1+t)^2); g*(inf) = (1,1).

    Lies on sqrt(1-x1) + sqrt(x2) = 1, with tangent slope t at g*(t).
    """
    if t == math.inf:
        return np.array([1.0, 1.0])
    if t < 0:
        raise InvalidArgumentError("tangential parameter must be >= 0")
    return np.array([(t * t + 2 * t) / (1 + t) ** 2, t * t / (1 + t) ** 2])


def _limit_shape_u(u: np.ndarray) -> np.ndarray:
    # substituting t = u/(1-u) gives g* = (1-(1-u)^2, u^2); |dg*/du| <= 2 sqrt 2
    return np.stack([1.0 - (1.0 - u) ** 2, u**2], axis=-1)


# ---------------------------------------------------------------------------
# scaled profiles and distance to the limit


def scaled_profile(line: PolygonalLine, n: tuple[int, int], t) -> np.ndarray:
    """S_n(xi(t)): the scaled partial endpoint over edges with slope <= t*n2/n1.

    Piecewise constant and right-continuous in t; t = inf gives the scaled
    endpoint.  Integral/Fraction t uses the exact integer cross-product test.
    """
    n1, n2 = n
    a = b = 0
    for d, k in line.edges:
        if _slope_leq(d, t, n1, n2):
            a += d.x1 * k
            b += d.x2 * k
    return np.array([a / n1, b / n2])


def _slope_leq(d: Direction, t, n1: int, n2: int) -> bool:
    # is x2/x1 <= t * n2/n1, i.e. scaled slope <= t?
    if t == math.inf:
        return True
    num = getattr(t, "numerator", None)
    den = getattr(t, "denominator", None)
    if isinstance(num, int) and isinstance(den, int) and den > 0:
        return d.x2 * n1 * den <= num * d.x1 * n2
    return d.x2 * n1 <= float(t) * d.x1 * n2


def tangential_distance_to_limit(line: PolygonalLine, n: tuple[int, int], h: float = 1e-5) -> float:
    """sup_t |scaled profile - g*(t)|, via breakpoints plus a u-grid of step h.

    Between profile jumps the distance to the moving point g*(t) can peak in
    the interior, so endpoint evaluation alone is not sound; the uniform grid
    in u = t/(1+t) bounds that error by 2*sqrt(2)*h (the Lipschitz constant of
    g* in u), for a total error at most 3h.
    """
    if h <= 0:
        raise InvalidArgumentError("grid step must be positive")
    n1, n2 = n
    # scaled breakpoint slopes and prefix vertices
    slopes = np.array([math.inf if d.x1 == 0 else (d.x2 * n1) / (d.x1 * n2) for d, _ in line.edges])
    verts = np.array(line.vertices(), dtype=float) / np.array([n1, n2], dtype=float)

    best = 0.0
    # uniform grid in u, endpoints included (u=1 is t=inf)
    u = np.linspace(0.0, 1.0, int(round(1.0 / h)) + 1)
    with np.errstate(divide="ignore"):
        t = u / (1.0 - u)
    t[-1] = math.inf
    idx = np.searchsorted(slopes, t, side="right")
    gap = verts[idx] - _limit_shape_u(u)
    best = float(np.sqrt((gap * gap).sum(axis=1)).max())

    # exact evaluation at the breakpoints, both one-sided limits
    if len(slopes):
        finite = np.isfinite(slopes)
        tb = slopes
        with np.errstate(invalid="ignore"):
            ub = np.where(finite, tb / (1.0 + tb), 1.0)
        ref = _limit_shape_u(ub)
        for side in ("left", "right"):
            idx = np.searchsorted(slopes, tb, side=side)
            gap = verts[idx] - ref
            best = max(best, float(np.sqrt((gap * gap).sum(axis=1)).max()))
    return best


# ---------------------------------------------------------------------------
# planar polylines and the two metrics


@dataclass(frozen=True)
class PlanarPolyline:
    """A convex path from (0,0) with non-decreasing, non-negative edge slopes."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if not self.vertices:
            raise GeometryDomainError("polyline needs at least the origin vertex")
        if self.vertices[0][0] != 0.0 or self.vertices[0][1] != 0.0:
            raise GeometryDomainError("polyline must start at the origin")
        edges = self._edges()
        scale = max((abs(x) + abs(y) for x, y in self.vertices), default=1.0) or 1.0
        tol = 1e-9 * scale
        for dx, dy in edges:
            if dx < -tol or dy < -tol:
                raise GeometryDomainError("edges must point into the first quadrant")
        for (ax, ay), (bx, by) in zip(edges, edges[1:]):
            if ax * by - ay * bx < -1e-9 * (math.hypot(ax, ay) * math.hypot(bx, by)):
                raise GeometryDomainError("edge slopes must be non-decreasing (convexity)")

    def _edges(self) -> list[tuple[float, float]]:
        out = []
        for (ax, ay), (bx, by) in zip(self.vertices, self.vertices[1:]):
            dx, dy = bx - ax, by - ay
            if dx != 0.0 or dy != 0.0:
                out.append((dx, dy))
        return out

    def slopes_and_steps(self) -> tuple[np.ndarray, np.ndarray]:
        """(edge slopes, vertex prefix array), zero-length edges dropped."""
        pts = [np.array([0.0, 0.0])]
        slopes = []
        for (ax, ay), (bx, by) in zip(self.vertices, self.vertices[1:]):
            dx, dy = bx - ax, by - ay
            if dx == 0.0 and dy == 0.0:
                continue
            slopes.append(math.inf if dx == 0.0 else dy / dx)
            pts.append(pts[-1] + np.array([dx, dy]))
        return np.array(slopes), np.vstack(pts)


def tangential_distance(p: PlanarPolyline, q: PlanarPolyline) -> float:
    """sup_t |g_p(t) - g_q(t)| for the tangential step functions, exact.

    Both parameterizations are right-continuous step functions jumping only at
    edge slopes, so the sup is attained among evaluations at the merged
    breakpoints (including one-sided limits); no grid is involved.
    """
    sp, vp = p.slopes_and_steps()
    sq, vq = q.slopes_and_steps()
    cand = np.unique(np.concatenate([[0.0], sp, sq, [math.inf]]))
    best = 0.0
    for side in ("left", "right"):
        gp = vp[np.searchsorted(sp, cand, side=side)]
        gq = vq[np.searchsorted(sq, cand, side=side)]
        gap = gp - gq
        best = max(best, float(np.sqrt((gap * gap).sum(axis=1)).max()))
    return best


def hausdorff_distance(p: PlanarPolyline, q: PlanarPolyline) -> float:
    """max of the two directed vertex-to-segment distances.

    For convex polylines the directed sup is attained at a vertex of one line
    or at a closest-point projection, so evaluating all vertices of each
    against all segments of the other (both directions) is exact.
    """
    vp = np.array(p.vertices, dtype=float)
    vq = np.array(q.vertices, dtype=float)
    if len(vp) == 0 or len(vq) == 0:
        raise GeometryDomainError("hausdorff_distance needs non-empty polylines")
    return max(_directed_hausdorff(vp, vq), _directed_hausdorff(vq, vp))


def _directed_hausdorff(pts: np.ndarray, poly: np.ndarray) -> float:
    """max over pts of min distance to the polyline with vertex array poly."""
    if len(poly) == 1:
        d = pts - poly[0]
        return float(np.sqrt((d * d).sum(axis=1)).max())
    s = poly[:-1]  # (m, 2) segment starts
    e = poly[1:]
    d = e - s
    ll = (d * d).sum(axis=1)
    ll[ll == 0.0] = 1.0
    # projection parameter of every point onto every segment, clipped
    w = pts[:, None, :] - s[None, :, :]
    t = np.clip((w * d[None, :, :]).sum(axis=2) / ll[None, :], 0.0, 1.0)
    proj = s[None, :, :] + t[:, :, None] * d[None, :, :]
    gap = pts[:, None, :] - proj
    dist = np.sqrt((gap * gap).sum(axis=2))
    return float(dist.min(axis=1).max())
