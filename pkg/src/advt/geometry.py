"""Bounded metric-space primitives for implicit action-space cells.

The action space is an axis-aligned box with the Euclidean metric.  Cells
(e.g. the implicit Voronoi cells of the action tree) are only known through
a membership predicate, so boundary probing, diameter estimation and
interior sampling all work through that predicate:

* boundary points are found by bisecting between a point inside the cell
  and one outside,
* the cell diameter is the diameter of the smallest ball enclosing a set of
  probed boundary points,
* approximately-uniform interior samples come from a Hit & Run random walk
  that repeatedly steps a random fraction of the way toward a boundary point.

Membership oracles may expose ``kernel_args()`` returning the flat-array
cell description consumed by :mod:`advt._kernels`; anything else falls back
to generic code paths that only call ``contains``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from advt import _kernels


@runtime_checkable
class CellMembershipOracle(Protocol):
    """Deterministic membership predicate for an implicit cell."""

    def contains(self, point: np.ndarray) -> bool: ...


@dataclass(frozen=True)
class BoundedMetricSpace:
    """Axis-aligned box in R^D under the Euclidean metric."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=np.float64).reshape(-1)
        hi = np.asarray(self.upper, dtype=np.float64).reshape(-1)
        if lo.shape != hi.shape or lo.size == 0:
            raise ValueError("lower and upper must be non-empty and congruent")
        if not np.all(lo < hi):
            raise ValueError("every dimension must have lower < upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dimension(self) -> int:
        return self.lower.size

    def outer_diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def contains(self, point: np.ndarray) -> bool:
        x = np.asarray(point, dtype=np.float64)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


def default_boundary_count(dimension: int) -> int:
    """Boundary samples used for diameter estimation: max(32, 8*D)."""
    return max(32, 8 * dimension)


def default_epsilon(space: BoundedMetricSpace) -> float:
    """Bisection tolerance, relative to the space size."""
    return 1e-3 * space.outer_diameter()


DEFAULT_WALK_STEPS = 10


def distance(x, y) -> float:
    """Euclidean distance between two points of equal dimension."""
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def sample_uniform_box(space: BoundedMetricSpace, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(space.lower, space.upper)


def sample_sphere_point(center, diameter: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform point on the sphere of given diameter around ``center``."""
    if diameter <= 0:
        raise ValueError("diameter must be positive")
    c = np.asarray(center, dtype=np.float64)
    direction = _unit_directions(1, c.size, rng)[0]
    return c + 0.5 * diameter * direction


def _unit_directions(count: int, dimension: int, rng: np.random.Generator) -> np.ndarray:
    d = rng.standard_normal((count, dimension))
    norms = np.linalg.norm(d, axis=1)
    bad = norms < 1e-12
    if np.any(bad):
        d[bad, 0] = 1.0
        norms[bad] = 1.0
    return d / norms[:, None]


def _cell_args(cell):
    getter = getattr(cell, "kernel_args", None)
    return getter() if callable(getter) else None


def bisect_boundary_point(inside, outside, cell: CellMembershipOracle, eps: float) -> np.ndarray:
    """Point of the cell within ``eps`` of its boundary, between the endpoints.

    ``inside`` must be a member of the cell and ``outside`` a non-member;
    bisection halves the segment until the endpoints are closer than ``eps``
    and returns the member endpoint.
    """
    a = np.asarray(inside, dtype=np.float64).copy()
    b = np.asarray(outside, dtype=np.float64).copy()
    if not cell.contains(a):
        raise ValueError("inside point is not a member of the cell")
    if cell.contains(b):
        raise ValueError("outside point is a member of the cell")
    args = _cell_args(cell)
    if args is not None:
        return _kernels.bisect(a, b, *args, eps)
    while float(np.linalg.norm(a - b)) > eps:
        mid = 0.5 * (a + b)
        if cell.contains(mid):
            a = mid
        else:
            b = mid
    return a


def _boundary_point_generic(start, cell, space, eps, direction) -> np.ndarray:
    alpha = start + 0.5 * space.outer_diameter() * direction
    if not cell.contains(alpha):
        return bisect_boundary_point(start, alpha, cell, eps)
    # sphere sample landed inside the cell: extend the ray to the box face
    step = alpha - start
    t = np.inf
    for i in range(start.size):
        if step[i] > 1e-300:
            t = min(t, (space.upper[i] - start[i]) / step[i])
        elif step[i] < -1e-300:
            t = min(t, (space.lower[i] - start[i]) / step[i])
    face = np.clip(start + t * step, space.lower, space.upper)
    if cell.contains(face):
        return face
    return bisect_boundary_point(alpha, face, cell, eps)


def sample_boundary_set(
    anchor,
    cell: CellMembershipOracle,
    space: BoundedMetricSpace,
    k: int,
    eps: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """``k`` approximate boundary points of the cell, one per row.

    Each point comes from a uniform sphere sample of diameter
    ``space.outer_diameter()`` around the anchor, bisected against the
    membership oracle.  Sphere samples that land inside the cell are pushed
    outward along their ray, capped at the box face.
    """
    a = np.asarray(anchor, dtype=np.float64)
    if not cell.contains(a):
        raise ValueError("anchor is not a member of the cell")
    if k == 0:
        return np.empty((0, a.size))
    dirs = _unit_directions(k, a.size, rng)
    radius = 0.5 * space.outer_diameter()
    args = _cell_args(cell)
    if args is not None:
        out = np.empty((k, a.size))
        _kernels.boundary_points(a, *args, eps, dirs, radius, out)
        return out
    return np.stack([_boundary_point_generic(a, cell, space, eps, d) for d in dirs])


_BALL_SHUFFLE_SEED = 0x5EED
_EXACT_BALL_LIMIT = 10_000


def _min_ball(points: np.ndarray) -> tuple[np.ndarray, float]:
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("need a non-empty (n, D) point set")
    if pts.shape[0] > _EXACT_BALL_LIMIT:
        return _approx_ball(pts)
    order = np.random.default_rng(_BALL_SHUFFLE_SEED).permutation(pts.shape[0])
    center, radius = _kernels.min_ball(pts[order])
    return center, float(radius)


def _approx_ball(pts: np.ndarray) -> tuple[np.ndarray, float]:
    # farthest-point seed, then grow the ball over violating points
    p = pts[np.argmax(np.linalg.norm(pts - pts[0], axis=1))]
    q = pts[np.argmax(np.linalg.norm(pts - p, axis=1))]
    center = 0.5 * (p + q)
    radius = 0.5 * float(np.linalg.norm(p - q))
    for _ in range(2):
        dists = np.linalg.norm(pts - center, axis=1)
        worst = float(dists.max())
        if worst <= radius:
            break
        far = pts[int(np.argmax(dists))]
        shift = 0.5 * (worst - radius)
        center = center + shift * (far - center) / worst
        radius += shift
    dists = np.linalg.norm(pts - center, axis=1)
    return center, float(dists.max())


def min_enclosing_ball_diameter(points) -> float:
    """Diameter of the smallest ball enclosing the points.

    Exact (Welzl move-to-front) up to 10^4 points, then a farthest-point
    approximation takes over.
    """
    _, radius = _min_ball(np.atleast_2d(np.asarray(points, dtype=np.float64)))
    return 2.0 * radius


def estimate_cell_diameter(
    anchor,
    cell: CellMembershipOracle,
    space: BoundedMetricSpace,
    k: int,
    eps: float,
    rng: np.random.Generator,
) -> float:
    """Cell diameter estimate: enclosing ball of probed boundary points plus anchor."""
    a = np.asarray(anchor, dtype=np.float64)
    boundary = sample_boundary_set(a, cell, space, k, eps, rng)
    pts = np.vstack([boundary, a[None, :]])
    return min_enclosing_ball_diameter(pts)


def hit_and_run_sample(
    anchor,
    cell: CellMembershipOracle,
    space: BoundedMetricSpace,
    m: int,
    eps: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Approximately uniform point of the cell via an m-step Hit & Run walk.

    Each step probes a boundary point of the cell from the current point and
    moves a uniform-random fraction of the way toward it.
    """
    a = np.asarray(anchor, dtype=np.float64)
    if m < 1:
        raise ValueError("need at least one walk step")
    if not cell.contains(a):
        raise ValueError("anchor is not a member of the cell")
    dirs = _unit_directions(m, a.size, rng)
    fracs = rng.random(m)
    radius = 0.5 * space.outer_diameter()
    args = _cell_args(cell)
    if args is not None:
        return _kernels.hit_and_run(a, *args, eps, dirs, fracs, radius)
    current = a.copy()
    for j in range(m):
        bp = _boundary_point_generic(current, cell, space, eps, dirs[j])
        current = current + fracs[j] * (bp - current)
    return current
