"""Per-belief hierarchical partitions of the action space.

A :class:`VoronoiTree` is a binary space partition whose internal splits are
two-anchor Voronoi diagrams: splitting a cell samples a second anchor inside
it and divides the cell into the points nearer the old anchor (first child,
ties included) and the rest (second child).  Cells are never materialized;
membership is decided by replaying the anchor comparisons along the path
from the root.  A rectangular mode (midpoint cut of the longest side) and a
flat fixed-grid variant back the ablation/baseline solvers.

Per-candidate statistics (visit count, value estimate, cell diameter) live
in flat arrays indexed by leaf slot so that action selection can scan them
vectorized; splitting hands the parent's slot to the first child, which is
how the first child inherits the parent's statistics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from advt import _kernels, geometry
from advt.geometry import BoundedMetricSpace


@dataclass(frozen=True)
class DiameterParams:
    """Geometry knobs for splitting: boundary probes, bisection tolerance, walk steps."""

    k: int
    eps: float
    m: int

    @classmethod
    def for_space(cls, space: BoundedMetricSpace) -> "DiameterParams":
        return cls(
            k=geometry.default_boundary_count(space.dimension),
            eps=geometry.default_epsilon(space),
            m=geometry.DEFAULT_WALK_STEPS,
        )


class VoronoiCell:
    """Implicit cell membership oracle: box bounds plus the root path's
    (first anchor, second anchor, branch taken) constraints."""

    __slots__ = ("_args",)

    def __init__(self, lo, hi, ca, cb, tf):
        self._args = (lo, hi, ca, cb, tf)

    def kernel_args(self):
        return self._args

    def contains(self, point) -> bool:
        return bool(_kernels.contains(np.asarray(point, dtype=np.float64), *self._args))


class VoronoiNode:
    """Tree node: an anchor action plus its implicit cell.

    Candidate statistics are proxied through the owning tree's slot arrays;
    internal nodes gave their slot to their first child and report the
    statistics frozen at split time.
    """

    __slots__ = ("tree", "anchor", "anchor_key", "parent", "children", "slot",
                 "rect_lower", "rect_upper", "_cell", "_frozen")

    def __init__(self, tree, anchor, parent):
        self.tree = tree
        self.anchor = np.asarray(anchor, dtype=np.float64)
        self.anchor_key = tuple(map(float, self.anchor))
        self.parent = parent
        self.children = None
        self.slot = -1
        self.rect_lower = None
        self.rect_upper = None
        self._cell = None
        self._frozen = None

    @property
    def is_leaf(self) -> bool:
        return self.children is None

    @property
    def visit_count(self) -> int:
        if self._frozen is not None:
            return int(self._frozen[0])
        return int(self.tree._n[self.slot])

    @visit_count.setter
    def visit_count(self, value):
        self.tree._n[self.slot] = value

    @property
    def q_estimate(self) -> float:
        if self._frozen is not None:
            return self._frozen[1]
        return float(self.tree._q[self.slot])

    @q_estimate.setter
    def q_estimate(self, value):
        self.tree._q[self.slot] = value

    @property
    def diameter(self) -> float:
        if self._frozen is not None:
            return self._frozen[2]
        return float(self.tree._diam[self.slot])

    @diameter.setter
    def diameter(self, value):
        self.tree._diam[self.slot] = value

    def cell(self) -> VoronoiCell:
        """Membership oracle for this node's cell (cached; the path above a
        node never changes)."""
        if self._cell is None:
            tree = self.tree
            if tree.mode == "rectangular":
                d = self.anchor.size
                self._cell = VoronoiCell(
                    self.rect_lower, self.rect_upper,
                    np.zeros((0, d)), np.zeros((0, d)), np.zeros(0, dtype=np.bool_),
                )
            else:
                ca, cb, tf = [], [], []
                node = self
                while node.parent is not None:
                    first, second = node.parent.children
                    ca.append(first.anchor)
                    cb.append(second.anchor)
                    tf.append(node is first)
                    node = node.parent
                ca.reverse()
                cb.reverse()
                tf.reverse()
                d = self.anchor.size
                self._cell = VoronoiCell(
                    tree.space.lower, tree.space.upper,
                    np.array(ca, dtype=np.float64).reshape(len(ca), d),
                    np.array(cb, dtype=np.float64).reshape(len(cb), d),
                    np.array(tf, dtype=np.bool_),
                )
        return self._cell


class ActionTreeBase:
    """Shared candidate bookkeeping: slot arrays and the leaf list."""

    def __init__(self, space: BoundedMetricSpace):
        self.space = space
        self._cap = 8
        self._n = np.zeros(self._cap)
        self._q = np.zeros(self._cap)
        self._diam = np.zeros(self._cap)
        self.leaves: list[VoronoiNode] = []

    def _new_slot(self) -> int:
        if len(self.leaves) == self._cap:
            self._cap *= 2
            for name in ("_n", "_q", "_diam"):
                grown = np.zeros(self._cap)
                grown[: len(self.leaves)] = getattr(self, name)[: len(self.leaves)]
                setattr(self, name, grown)
        return len(self.leaves)

    @property
    def n_candidates(self) -> int:
        return len(self.leaves)

    def stat_views(self):
        n = len(self.leaves)
        return self._n[:n], self._q[:n], self._diam[:n]


class VoronoiTree(ActionTreeBase):
    """Adaptive binary partition of the action space for one belief."""

    can_refine = True

    def __init__(self, space, root_anchor, mode="voronoi"):
        if mode not in ("voronoi", "rectangular"):
            raise ValueError(f"unknown partition mode: {mode}")
        super().__init__(space)
        self.mode = mode
        root = VoronoiNode(self, root_anchor, parent=None)
        root.slot = self._new_slot()
        self.leaves.append(root)
        if mode == "rectangular":
            root.rect_lower = space.lower.copy()
            root.rect_upper = space.upper.copy()
        self.root = root
        root.diameter = space.outer_diameter()


class FixedActionGrid(ActionTreeBase):
    """Flat, never-refined candidate set on a uniform grid (UCB1 baseline).

    Anchors sit at the centers of a per-dimension uniform binning; diameters
    are zero so the diameter-aware terms vanish.
    """

    can_refine = False
    mode = "fixed"

    def __init__(self, space: BoundedMetricSpace, per_dim: int):
        if per_dim < 1:
            raise ValueError("need at least one grid point per dimension")
        super().__init__(space)
        d = space.dimension
        axes = [
            space.lower[i] + (np.arange(per_dim) + 0.5) * (space.upper[i] - space.lower[i]) / per_dim
            for i in range(d)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        anchors = np.stack([m.ravel() for m in mesh], axis=1)
        self.root = None
        for a in anchors:
            node = VoronoiNode(self, a, parent=None)
            node.slot = self._new_slot()
            self.leaves.append(node)


def init_tree(space: BoundedMetricSpace, rng: np.random.Generator, mode: str = "voronoi") -> VoronoiTree:
    """Fresh single-leaf tree: a uniform anchor representing all of the space."""
    anchor = geometry.sample_uniform_box(space, rng)
    return VoronoiTree(space, anchor, mode=mode)


def candidate_actions(tree) -> list[tuple[np.ndarray, VoronoiNode]]:
    """All leaf anchors with their nodes, in candidate insertion order."""
    return [(leaf.anchor, leaf) for leaf in tree.leaves]


def locate_leaf(tree: VoronoiTree, point) -> VoronoiNode:
    """Leaf whose cell contains the point (ties on a bisector go first)."""
    x = np.asarray(point, dtype=np.float64)
    if not tree.space.contains(x):
        raise ValueError("point lies outside the action space")
    node = tree.root
    if tree.mode == "rectangular":
        while not node.is_leaf:
            first, second = node.children
            if bool(np.all(x >= first.rect_lower) and np.all(x <= first.rect_upper)):
                node = first
            else:
                node = second
        return node
    while not node.is_leaf:
        first, second = node.children
        d1 = x - first.anchor
        d2 = x - second.anchor
        node = first if float(d1 @ d1) <= float(d2 @ d2) else second
    return node


def cell_oracle(tree: VoronoiTree, node: VoronoiNode) -> VoronoiCell:
    """Membership oracle of the node's (possibly internal) cell."""
    if node.tree is not tree:
        raise ValueError("node does not belong to this tree")
    return node.cell()


def should_refine(node: VoronoiNode, c_r: float) -> bool:
    """Refinement gate: the anchor was played often enough for the cell size."""
    diam = node.tree._diam[node.slot]
    if diam <= 0.0:
        return False
    return c_r * node.tree._n[node.slot] >= 1.0 / (diam * diam)


def split_leaf(
    tree: VoronoiTree,
    node: VoronoiNode,
    rng: np.random.Generator,
    diameter_params: DiameterParams,
    a_prime=None,
) -> tuple[VoronoiNode, VoronoiNode] | None:
    """Split a leaf in two: the old anchor keeps its nearby region (and its
    statistics, via slot inheritance); a fresh anchor sampled from the cell
    takes the rest.  Returns (first child, second child), or None when the
    cell is too degenerate to yield a distinct second anchor."""
    if not node.is_leaf:
        raise ValueError("can only split a leaf")
    space = tree.space
    if tree.mode == "rectangular":
        sides = node.rect_upper - node.rect_lower
        axis = int(np.argmax(sides))
        mid = 0.5 * (node.rect_lower[axis] + node.rect_upper[axis])
        lower_lo, lower_hi = node.rect_lower.copy(), node.rect_upper.copy()
        lower_hi[axis] = mid
        upper_lo, upper_hi = node.rect_lower.copy(), node.rect_upper.copy()
        upper_lo[axis] = mid
        anchor_in_lower = node.anchor[axis] <= mid
        first_rect = (lower_lo, lower_hi) if anchor_in_lower else (upper_lo, upper_hi)
        second_rect = (upper_lo, upper_hi) if anchor_in_lower else (lower_lo, lower_hi)
        if a_prime is None:
            a_prime = rng.uniform(second_rect[0], second_rect[1])
        first = VoronoiNode(tree, node.anchor, parent=node)
        second = VoronoiNode(tree, a_prime, parent=node)
        first.rect_lower, first.rect_upper = first_rect
        second.rect_lower, second.rect_upper = second_rect
        _attach(tree, node, first, second)
        first.diameter = float(np.linalg.norm(first.rect_upper - first.rect_lower))
        second.diameter = float(np.linalg.norm(second.rect_upper - second.rect_lower))
        return first, second

    if a_prime is None:
        # sliver cells thinner than the bisection tolerance can collapse the
        # walk onto the anchor itself; retry, then give up on the split
        for _ in range(3):
            a_prime = geometry.hit_and_run_sample(
                node.anchor, node.cell(), space, diameter_params.m, diameter_params.eps, rng
            )
            if not np.array_equal(a_prime, node.anchor):
                break
        else:
            return None
    elif np.array_equal(np.asarray(a_prime, dtype=np.float64), node.anchor):
        raise ValueError("second anchor coincides with the cell anchor")
    first = VoronoiNode(tree, node.anchor, parent=node)
    second = VoronoiNode(tree, a_prime, parent=node)
    _attach(tree, node, first, second)
    first.diameter = geometry.estimate_cell_diameter(
        first.anchor, first.cell(), space, diameter_params.k, diameter_params.eps, rng
    )
    second.diameter = geometry.estimate_cell_diameter(
        second.anchor, second.cell(), space, diameter_params.k, diameter_params.eps, rng
    )
    return first, second


def _attach(tree, parent, first, second):
    # first child takes over the parent's candidate slot (stats inherited);
    # the new anchor starts a fresh slot
    parent.children = (first, second)
    slot = parent.slot
    parent._frozen = (
        float(tree._n[slot]),
        float(tree._q[slot]),
        float(tree._diam[slot]),
    )
    first.slot = slot
    tree.leaves[slot] = first
    second.slot = tree._new_slot()
    tree.leaves.append(second)
    tree._n[second.slot] = 0.0
    tree._q[second.slot] = 0.0
    parent.slot = -1
