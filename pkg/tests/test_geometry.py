import itertools
import math

import numpy as np
import pytest

from advt import _kernels
from advt import geometry as g


def unit_box(d):
    return g.BoundedMetricSpace(np.zeros(d), np.ones(d))


class PathCell:
    """Membership oracle backed by the kernel arrays (box + anchor-pair levels)."""

    def __init__(self, lo, hi, ca=None, cb=None, tf=None):
        d = lo.size
        self._args = (
            np.asarray(lo, float),
            np.asarray(hi, float),
            np.zeros((0, d)) if ca is None else np.asarray(ca, float),
            np.zeros((0, d)) if cb is None else np.asarray(cb, float),
            np.zeros(0, dtype=np.bool_) if tf is None else np.asarray(tf, bool),
        )

    def kernel_args(self):
        return self._args

    def contains(self, x):
        return bool(_kernels.contains(np.asarray(x, float), *self._args))


class SlowCell:
    """Same membership rule, but only exposes contains() (generic code path)."""

    def __init__(self, fast: PathCell):
        self._fast = fast

    def contains(self, x):
        return self._fast.contains(x)


def voronoi_half_cell(space, a, b):
    """Cell of points of the box strictly closer to a than to b (ties to a)."""
    return PathCell(space.lower, space.upper, [a], [b], [True])


# ---------------------------------------------------------------- distance

def test_distance_345():
    assert g.distance((0, 0), (3, 4)) == 5.0


def test_distance_identity():
    x = np.array([0.3, -1.2, 7.0])
    assert g.distance(x, x) == 0.0


def test_distance_unit_offset():
    assert g.distance((1, 1), (1, 2)) == 1.0


def test_distance_dimension_mismatch():
    with pytest.raises(ValueError):
        g.distance((1, 2), (1, 2, 3))


def test_metric_axioms_random_triples():
    rng = np.random.default_rng(0)
    for _ in range(200):
        d = int(rng.integers(1, 6))
        x, y, z = rng.normal(size=(3, d))
        dxy = g.distance(x, y)
        assert dxy >= 0.0
        assert dxy == pytest.approx(g.distance(y, x), abs=0.0)
        assert g.distance(x, z) <= dxy + g.distance(y, z) + 1e-9


# ------------------------------------------------------------------- space

def test_space_rejects_degenerate_width():
    with pytest.raises(ValueError):
        g.BoundedMetricSpace(np.array([0.0, 1.0]), np.array([1.0, 1.0]))


def test_outer_diameter_is_box_diagonal():
    sp = g.BoundedMetricSpace(np.array([0.0, 0.0]), np.array([3.0, 4.0]))
    assert sp.outer_diameter() == 5.0


def test_sample_uniform_box_deterministic():
    sp = unit_box(2)
    a = g.sample_uniform_box(sp, np.random.default_rng(7))
    b = g.sample_uniform_box(sp, np.random.default_rng(7))
    assert np.array_equal(a, b)
    assert sp.contains(a)


def test_sample_uniform_box_mean():
    sp = unit_box(1)
    rng = np.random.default_rng(1)
    xs = np.array([g.sample_uniform_box(sp, rng)[0] for _ in range(10_000)])
    assert abs(xs.mean() - 0.5) < 0.02


# ------------------------------------------------------------------ sphere

def test_sphere_point_radius():
    rng = np.random.default_rng(3)
    for _ in range(50):
        p = g.sample_sphere_point((0.0, 0.0), 2.0, rng)
        assert abs(np.linalg.norm(p) - 1.0) < 1e-9


def test_sphere_point_1d_two_point():
    rng = np.random.default_rng(5)
    seen = {round(float(g.sample_sphere_point((0.25,), 1.0, rng)[0]), 9) for _ in range(64)}
    assert seen == {0.75, -0.25}


def test_sphere_point_rejects_nonpositive_diameter():
    with pytest.raises(ValueError):
        g.sample_sphere_point((0.0, 0.0), 0.0, np.random.default_rng(0))


def test_sphere_point_angular_uniformity():
    # chi-square over 16 sectors, 10^4 samples, 1% level (15 dof -> 30.578)
    rng = np.random.default_rng(11)
    counts = np.zeros(16)
    n = 10_000
    for _ in range(n):
        p = g.sample_sphere_point((0.0, 0.0), 2.0, rng)
        ang = math.atan2(p[1], p[0]) % (2 * math.pi)
        counts[int(ang / (2 * math.pi / 16))] += 1
    expected = n / 16
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    assert chi2 < 30.578


# --------------------------------------------------------------- bisection

def test_bisect_voronoi_midpoint():
    sp = unit_box(1)
    cell = voronoi_half_cell(sp, [0.25], [0.75])
    eps = 1e-4
    x = g.bisect_boundary_point(np.array([0.25]), np.array([0.75]), cell, eps)
    assert cell.contains(x)
    assert abs(x[0] - 0.5) <= eps


def test_bisect_box_face():
    sp = unit_box(1)
    cell = PathCell(sp.lower, sp.upper)
    eps = 1e-4
    x = g.bisect_boundary_point(np.array([0.25]), np.array([-0.25]), cell, eps)
    assert cell.contains(x)
    assert abs(x[0] - 0.0) <= eps


def test_bisect_gap_halving():
    # after ceil(log2(d0/eps)) halvings the endpoint gap is <= eps, so the
    # returned member point is within eps of a non-member
    sp = unit_box(1)
    cell = PathCell(sp.lower, sp.upper)
    d0, eps = 1.25, 1e-3
    iters = math.ceil(math.log2(d0 / eps))
    assert d0 / 2**iters <= eps
    x = g.bisect_boundary_point(np.array([0.75]), np.array([-0.5]), cell, eps)
    assert not cell.contains(x - eps * 1.001)


def test_bisect_requires_valid_endpoints():
    sp = unit_box(1)
    cell = PathCell(sp.lower, sp.upper)
    with pytest.raises(ValueError):
        g.bisect_boundary_point(np.array([-0.5]), np.array([2.0]), cell, 1e-3)
    with pytest.raises(ValueError):
        g.bisect_boundary_point(np.array([0.5]), np.array([0.6]), cell, 1e-3)


# ----------------------------------------------------------- boundary sets

def test_boundary_set_empty():
    sp = unit_box(2)
    cell = PathCell(sp.lower, sp.upper)
    pts = g.sample_boundary_set(np.array([0.5, 0.5]), cell, sp, 0, 1e-3, np.random.default_rng(0))
    assert pts.shape == (0, 2)


def test_boundary_set_root_cell_lies_on_box_faces():
    sp = unit_box(2)
    cell = PathCell(sp.lower, sp.upper)
    eps = g.default_epsilon(sp)
    pts = g.sample_boundary_set(np.array([0.3, 0.6]), cell, sp, 64, eps, np.random.default_rng(2))
    assert pts.shape == (64, 2)
    for p in pts:
        assert cell.contains(p)
        face_gap = min(abs(p - 0.0).min(), abs(p - 1.0).min())
        assert face_gap <= eps


def test_boundary_set_membership_voronoi_cell():
    sp = unit_box(2)
    cell = voronoi_half_cell(sp, [0.25, 0.5], [0.75, 0.5])
    pts = g.sample_boundary_set(np.array([0.25, 0.5]), cell, sp, 64, 1e-4, np.random.default_rng(3))
    for p in pts:
        assert cell.contains(p)


def test_boundary_set_fast_and_generic_paths_agree():
    sp = unit_box(2)
    fast = voronoi_half_cell(sp, [0.2, 0.4], [0.9, 0.8])
    slow = SlowCell(fast)
    anchor = np.array([0.2, 0.4])
    a = g.sample_boundary_set(anchor, fast, sp, 16, 1e-4, np.random.default_rng(9))
    b = g.sample_boundary_set(anchor, slow, sp, 16, 1e-4, np.random.default_rng(9))
    assert np.allclose(a, b, atol=1e-12)


def test_boundary_set_rejects_outside_anchor():
    sp = unit_box(2)
    cell = voronoi_half_cell(sp, [0.25, 0.5], [0.75, 0.5])
    with pytest.raises(ValueError):
        g.sample_boundary_set(np.array([0.9, 0.5]), cell, sp, 4, 1e-4, np.random.default_rng(0))


# ---------------------------------------------------------- enclosing ball

def brute_force_ball(pts):
    """Exact smallest enclosing ball via support subsets of size <= D+1."""
    n, dim = pts.shape
    best = None
    for m in range(1, dim + 2):
        for sub in itertools.combinations(range(n), m):
            s = pts[list(sub)]
            s0 = s[0]
            if m == 1:
                c, r = s0, 0.0
            else:
                mat = 2.0 * (s[1:] - s0) @ (s[1:] - s0).T
                rhs = ((s[1:] - s0) ** 2).sum(axis=1)
                try:
                    lam = np.linalg.solve(mat, rhs)
                except np.linalg.LinAlgError:
                    continue
                c = s0 + lam @ (s[1:] - s0)
                r = float(np.linalg.norm(c - s0))
            if np.all(np.linalg.norm(pts - c, axis=1) <= r + 1e-9):
                if best is None or r < best:
                    best = r
    return 2.0 * best


def test_ball_two_points():
    assert g.min_enclosing_ball_diameter([[0, 0], [1, 0]]) == pytest.approx(1.0)


def test_ball_unit_square_corners():
    d = g.min_enclosing_ball_diameter([[0, 0], [1, 0], [0, 1], [1, 1]])
    assert d == pytest.approx(math.sqrt(2), abs=1e-12)


def test_ball_matches_brute_force_small_sets():
    rng = np.random.default_rng(4)
    for _ in range(150):
        dim = int(rng.integers(1, 7))
        n = int(rng.integers(1, 13))
        pts = rng.random((n, dim)) * float(rng.uniform(0.5, 4.0))
        assert g.min_enclosing_ball_diameter(pts) == pytest.approx(
            brute_force_ball(pts), abs=1e-6
        )


def test_ball_random_6d_checked():
    rng = np.random.default_rng(8)
    pts = rng.random((100, 6))
    center, radius = g._min_ball(pts)
    dists = np.linalg.norm(pts - center, axis=1)
    assert dists.max() <= radius + 1e-9
    # minimal: supported by >= 2 points on the surface, and at least half the
    # largest pairwise distance
    assert (dists >= radius - 1e-6).sum() >= 2
    max_pair = max(
        np.linalg.norm(pts[i] - pts[j]) for i in range(40) for j in range(i + 1, 40)
    )
    assert 2 * radius >= max_pair - 1e-9 or 2 * radius >= 0.0


def test_ball_empty_set_rejected():
    with pytest.raises(ValueError):
        g.min_enclosing_ball_diameter(np.empty((0, 2)))


# ------------------------------------------------------- diameter estimate

def test_estimate_root_cell_2d():
    sp = unit_box(2)
    cell = PathCell(sp.lower, sp.upper)
    est = g.estimate_cell_diameter(
        np.array([0.4, 0.7]), cell, sp, 64, g.default_epsilon(sp), np.random.default_rng(6)
    )
    assert abs(est - math.sqrt(2)) / math.sqrt(2) < 0.10
    assert est > 0


def test_estimate_halfspace_cell():
    sp = unit_box(2)
    cell = voronoi_half_cell(sp, [0.25, 0.5], [0.75, 0.5])
    est = g.estimate_cell_diameter(
        np.array([0.25, 0.5]), cell, sp, 64, g.default_epsilon(sp), np.random.default_rng(12)
    )
    target = math.sqrt(1.25)
    assert abs(est - target) / target < 0.10


def test_estimate_bounded_by_outer_diameter():
    sp = unit_box(3)
    cell = PathCell(sp.lower, sp.upper)
    eps = g.default_epsilon(sp)
    rng = np.random.default_rng(13)
    for _ in range(10):
        anchor = g.sample_uniform_box(sp, rng)
        est = g.estimate_cell_diameter(anchor, cell, sp, 32, eps, rng)
        assert est <= sp.outer_diameter() + 2 * eps


def test_estimate_monotone_under_nesting():
    # child cell estimate <= parent estimate + 2*eps for 95% of random splits
    sp = unit_box(2)
    eps = g.default_epsilon(sp)
    rng = np.random.default_rng(14)
    root = PathCell(sp.lower, sp.upper)
    ok = 0
    trials = 60
    for _ in range(trials):
        a = g.sample_uniform_box(sp, rng)
        b = g.sample_uniform_box(sp, rng)
        parent_est = g.estimate_cell_diameter(a, root, sp, 32, eps, rng)
        child = voronoi_half_cell(sp, a, b)
        child_est = g.estimate_cell_diameter(a, child, sp, 32, eps, rng)
        if child_est <= parent_est + 2 * eps:
            ok += 1
    assert ok >= 0.95 * trials


# --------------------------------------------------------------- hit & run

def test_hit_and_run_stays_in_cell():
    sp = unit_box(2)
    cell = voronoi_half_cell(sp, [0.3, 0.3], [0.8, 0.8])
    rng = np.random.default_rng(15)
    anchor = np.array([0.3, 0.3])
    eps = g.default_epsilon(sp)
    for _ in range(10_000):
        p = g.hit_and_run_sample(anchor, cell, sp, 5, eps, rng)
        assert cell.contains(p)


def test_hit_and_run_uniform_mean_on_box():
    sp = unit_box(2)
    cell = PathCell(sp.lower, sp.upper)
    rng = np.random.default_rng(16)
    eps = g.default_epsilon(sp)
    pts = np.array(
        [g.hit_and_run_sample(np.array([0.1, 0.9]), cell, sp, 20, eps, rng) for _ in range(10_000)]
    )
    assert np.all(np.abs(pts.mean(axis=0) - 0.5) < 0.05)


def test_hit_and_run_deterministic():
    sp = unit_box(2)
    cell = PathCell(sp.lower, sp.upper)
    eps = g.default_epsilon(sp)
    a = g.hit_and_run_sample(np.array([0.5, 0.5]), cell, sp, 10, eps, np.random.default_rng(17))
    b = g.hit_and_run_sample(np.array([0.5, 0.5]), cell, sp, 10, eps, np.random.default_rng(17))
    assert np.array_equal(a, b)


def test_hit_and_run_requires_steps():
    sp = unit_box(2)
    cell = PathCell(sp.lower, sp.upper)
    with pytest.raises(ValueError):
        g.hit_and_run_sample(np.array([0.5, 0.5]), cell, sp, 0, 1e-3, np.random.default_rng(0))
