"""Anytime belief-tree planner over continuous actions.

One planning iteration samples an episode down the belief tree: at each
belief the candidate anchors of its action partition compete through a
diameter-aware upper-confidence rule, the generative model plays the chosen
anchor, and the episode descends the (action, observation) edge, expanding
the tree by exactly one belief node (valued by a rollout) unless it ends at
a terminal state or the depth cap first.  The episode is then backed up in
reverse with an incremental Bellman update (or running-mean returns in the
Monte Carlo ablation), refining the partition of each visited belief where
the played cell has earned enough visits for its size.

Executing an action advances the root to the matching child, re-filtering
particles for the perceived observation; the subtree and its statistics are
reused across planning steps.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from advt import geometry
from advt.pomdp import (
    ParticleDepletion,
    ParticleSet,
    PomdpModel,
    fallback_particles,
    filter_particles,
    match_observation_edge,
)
from advt.voronoi import (
    DiameterParams,
    FixedActionGrid,
    VoronoiTree,
    init_tree,
    should_refine,
    split_leaf,
)


@dataclass(frozen=True)
class SolverConfig:
    """Planner knobs.  ``exploration``, ``lipschitz`` and ``refinement`` are
    the confidence-bound, diameter-bonus and cell-split constants; geometry
    fields default per action space (boundary probes max(32, 8D), bisection
    tolerance 1e-3 of the space diameter)."""

    exploration: float = 1.0
    lipschitz: float = 0.0
    refinement: float = 1.0
    discount: Optional[float] = None          # None: the model's
    eps: Optional[float] = None
    boundary_samples: Optional[int] = None
    walk_steps: int = geometry.DEFAULT_WALK_STEPS
    max_depth: int = 50
    iterations: Optional[int] = None
    time_budget_ms: Optional[float] = None
    backup_mode: str = "bellman"              # or "monte_carlo"
    partition_mode: str = "voronoi"           # or "rectangular"
    grid_per_dim: Optional[int] = None        # fixed-grid UCB1 baseline
    rollout_depth: int = 10
    particle_capacity: int = 2000
    best_action_rule: str = "max_q"           # or "max_n"

    def __post_init__(self):
        if self.exploration < 0 or self.lipschitz < 0:
            raise ValueError("exploration and lipschitz constants must be >= 0")
        if self.refinement <= 0:
            raise ValueError("refinement constant must be > 0")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.backup_mode not in ("bellman", "monte_carlo"):
            raise ValueError(f"unknown backup mode: {self.backup_mode}")
        if self.best_action_rule not in ("max_q", "max_n"):
            raise ValueError(f"unknown best-action rule: {self.best_action_rule}")

    def diameter_params(self, space) -> DiameterParams:
        return DiameterParams(
            k=self.boundary_samples or geometry.default_boundary_count(space.dimension),
            eps=self.eps or geometry.default_epsilon(space),
            m=self.walk_steps,
        )


class BeliefNode:
    """Belief-tree node: particles, visit/value statistics, its action
    partition, and children keyed by (action anchor, observation key)."""

    __slots__ = ("tree", "particles", "visit_count", "v_estimate", "children", "cont_edges")

    def __init__(self, tree, particles: ParticleSet):
        self.tree = tree
        self.particles = particles
        self.visit_count = 0
        self.v_estimate = 0.0
        self.children: dict = {}
        self.cont_edges: list = []

    def child(self, anchor_key, obs_key):
        return self.children.get((anchor_key, obs_key))


@dataclass
class Episode:
    """One root-to-frontier simulation.

    ``entries`` holds (state, action, observation key, reward) records with
    a final (state, None, None, 0) row; ``steps`` pairs each decision with
    its (belief, chosen leaf, reward) for the backup pass."""

    entries: list
    steps: list
    final_belief: BeliefNode


def _new_action_tree(model: PomdpModel, config: SolverConfig, rng: np.random.Generator):
    if config.grid_per_dim is not None:
        return FixedActionGrid(model.action_space, config.grid_per_dim)
    return init_tree(model.action_space, rng, mode=config.partition_mode)


def make_root_belief(model: PomdpModel, config: SolverConfig, rng: np.random.Generator) -> BeliefNode:
    """Root belief with ``particle_capacity`` initial-state samples."""
    states = [model.sample_initial_state(rng) for _ in range(config.particle_capacity)]
    return BeliefNode(_new_action_tree(model, config, rng), ParticleSet(states, config.particle_capacity))


def ucb_value(n_belief, n_action, q_estimate, exploration, lipschitz, diameter) -> float:
    """Optimistic bound for all actions of a cell: UCB1 plus a Lipschitz
    diameter bonus; infinity while the anchor is unvisited."""
    if n_action == 0:
        return math.inf
    return (
        q_estimate
        + exploration * math.sqrt(math.log(n_belief) / n_action)
        + lipschitz * diameter
    )


def select_action(belief: BeliefNode, config: SolverConfig):
    """Candidate anchor maximizing the confidence bound (ties: first inserted)."""
    tree = belief.tree
    leaves = tree.leaves
    count = len(leaves)
    n = tree._n
    q = tree._q
    diam = tree._diam
    c = config.exploration
    lip = config.lipschitz
    if count <= 24:
        log_nb = math.log(belief.visit_count) if belief.visit_count > 0 else 0.0
        best = None
        best_u = -math.inf
        for i in range(count):
            n_i = n[i]
            if n_i == 0.0:
                best = leaves[i]
                break
            u = q[i] + c * math.sqrt(log_nb / n_i) + lip * diam[i]
            if u > best_u:
                best_u = u
                best = leaves[i]
        leaf = best
    else:
        n_view = n[:count]
        zero = np.nonzero(n_view == 0.0)[0]
        if zero.size:
            leaf = leaves[int(zero[0])]
        else:
            log_nb = math.log(belief.visit_count)
            u = q[:count] + c * np.sqrt(log_nb / n_view) + lip * diam[:count]
            leaf = leaves[int(np.argmax(u))]
    return leaf.anchor, leaf


def default_rollout_heuristic(state, model: PomdpModel, rollout_depth: int,
                              rng: np.random.Generator, discount: Optional[float] = None) -> float:
    """Discounted return of one uniformly-random-action trajectory."""
    gamma = model.discount if discount is None else discount
    space = model.action_space
    total = 0.0
    scale = 1.0
    s = state
    for _ in range(rollout_depth):
        if model.is_terminal(s):
            break
        a = rng.uniform(space.lower, space.upper)
        s, _, r = model.step(s, a, rng)
        total += scale * r
        scale *= gamma
    return total


def sample_episode(root: BeliefNode, model: PomdpModel, config: SolverConfig,
                   rng: np.random.Generator) -> tuple[Episode, BeliefNode]:
    """Descend from the root selecting actions and stepping the model until a
    new belief is created, a terminal state is reached, or the depth cap.

    Visit counters are incremented during the descent, so the backup divisor
    is the post-increment count.  New beliefs get their value initialized
    from the rollout heuristic."""
    if not root.particles.states:
        raise ValueError("root belief has no particles")
    gamma = config.discount if config.discount is not None else model.discount
    delta = model.observation_delta
    entries = []
    steps = []
    belief = root
    state = root.particles.sample(rng)
    new_belief = False
    depth = 0
    is_terminal = model.is_terminal
    step = model.step
    while not new_belief and not is_terminal(state) and depth < config.max_depth:
        anchor, leaf = select_action(belief, config)
        state2, obs, reward = step(state, anchor, rng)
        anchor_key = leaf.anchor_key
        if delta is None:
            token = obs
        else:
            token = match_observation_edge(belief.cont_edges, anchor_key, obs, delta)
            if token is None:
                token = tuple(map(float, obs))
        entries.append((state, anchor, token, reward))
        tree = belief.tree
        tree._n[leaf.slot] += 1.0
        belief.visit_count += 1
        steps.append((belief, leaf, reward))
        state = state2
        child = belief.children.get((anchor_key, token))
        if child is None:
            child = BeliefNode(
                _new_action_tree(model, config, rng),
                ParticleSet([state], config.particle_capacity),
            )
            belief.children[(anchor_key, token)] = child
            if delta is not None:
                belief.cont_edges.append((anchor_key, token))
            if model.rollout_heuristic is not None:
                child.v_estimate = model.rollout_heuristic(state, rng)
            else:
                child.v_estimate = default_rollout_heuristic(
                    state, model, config.rollout_depth, rng, gamma
                )
            new_belief = True
        else:
            child.particles.add(state)
        belief = child
        depth += 1
    entries.append((state, None, None, 0.0))
    episode = Episode(entries, steps, belief)
    return episode, belief


def _update_value(belief: BeliefNode):
    # value is the best candidate estimate, unvisited candidates included
    tree = belief.tree
    count = len(tree.leaves)
    q = tree._q
    if count <= 24:
        best = q[0]
        for i in range(1, count):
            if q[i] > best:
                best = q[i]
        belief.v_estimate = float(best)
    else:
        belief.v_estimate = float(np.max(q[:count]))


def _bellman_step(belief, leaf, reward, child_value, gamma):
    tree = belief.tree
    slot = leaf.slot
    q = tree._q[slot]
    tree._q[slot] = q + (reward + gamma * child_value - q) / tree._n[slot]
    _update_value(belief)


def _mc_step(belief, leaf, tail):
    tree = belief.tree
    slot = leaf.slot
    q = tree._q[slot]
    tree._q[slot] = q + (tail - q) / tree._n[slot]
    _update_value(belief)


def _mc_bootstrap(episode: Episode, model: PomdpModel) -> float:
    # the tail beyond the frontier: zero after a terminal state, otherwise
    # the frontier belief's value (its rollout estimate when just created)
    if model.is_terminal(episode.entries[-1][0]):
        return 0.0
    return episode.final_belief.v_estimate


def backup(episode: Episode, config: SolverConfig, model: PomdpModel) -> None:
    """Reverse-sweep value update over one episode.

    Bellman mode moves each Q toward reward + discounted child value; Monte
    Carlo mode averages the episode's discounted tail returns instead.  Uses
    the visit counts already incremented during the episode descent."""
    gamma = config.discount if config.discount is not None else model.discount
    if config.backup_mode == "bellman":
        child = episode.final_belief
        for belief, leaf, reward in reversed(episode.steps):
            _bellman_step(belief, leaf, reward, child.v_estimate, gamma)
            child = belief
    else:
        tail = _mc_bootstrap(episode, model)
        for belief, leaf, reward in reversed(episode.steps):
            tail = reward + gamma * tail
            _mc_step(belief, leaf, tail)


def refine_after_backup(belief: BeliefNode, leaf, config: SolverConfig,
                        rng: np.random.Generator, diameter_params: Optional[DiameterParams] = None) -> None:
    """Split the played leaf when its visit count justifies the cell size.

    Cells smaller than twice the bisection tolerance are at the geometry's
    resolution floor and are left alone."""
    tree = belief.tree
    if not tree.can_refine or not leaf.is_leaf:
        return
    if should_refine(leaf, config.refinement):
        if diameter_params is None:
            diameter_params = config.diameter_params(tree.space)
        floor = 2.0 * diameter_params.eps
        if tree._diam[leaf.slot] <= floor:
            return
        if split_leaf(tree, leaf, rng, diameter_params) is None:
            # cell is effectively at the resolution floor; stop gating on it
            tree._diam[leaf.slot] = floor


def _run_iteration(root, model, config, rng, diameter_params):
    # one episode plus its interleaved backup-then-refine reverse sweep
    episode, final = sample_episode(root, model, config, rng)
    gamma = config.discount if config.discount is not None else model.discount
    if config.backup_mode == "bellman":
        child = final
        for belief, leaf, reward in reversed(episode.steps):
            _bellman_step(belief, leaf, reward, child.v_estimate, gamma)
            refine_after_backup(belief, leaf, config, rng, diameter_params)
            child = belief
    else:
        tail = _mc_bootstrap(episode, model)
        for belief, leaf, reward in reversed(episode.steps):
            tail = reward + gamma * tail
            _mc_step(belief, leaf, tail)
            refine_after_backup(belief, leaf, config, rng, diameter_params)


def plan(root: BeliefNode, model: PomdpModel, config: SolverConfig,
         rng: np.random.Generator) -> np.ndarray:
    """Run planning iterations from the root and return the best root action
    (highest value estimate among played anchors)."""
    if not root.particles.states:
        raise ValueError("root belief has no particles")
    diameter_params = config.diameter_params(model.action_space)
    ran = 0
    if config.iterations is not None:
        if config.iterations <= 0:
            raise ValueError("iteration budget must be positive")
        for _ in range(config.iterations):
            _run_iteration(root, model, config, rng, diameter_params)
            ran += 1
    elif config.time_budget_ms is not None:
        deadline = time.perf_counter() + config.time_budget_ms / 1000.0
        while time.perf_counter() < deadline:
            _run_iteration(root, model, config, rng, diameter_params)
            ran += 1
    else:
        raise ValueError("config needs an iteration or time budget")
    if ran == 0:
        raise ValueError("planning budget allowed no iterations")
    return best_root_action(root, config)


def best_root_action(root: BeliefNode, config: SolverConfig) -> np.ndarray:
    """Best root anchor among visited candidates (max-Q, or max-N variant)."""
    tree = root.tree
    count = len(tree.leaves)
    n = tree._n[:count]
    played = np.nonzero(n > 0)[0]
    if played.size == 0:
        raise ValueError("no root action has been played")
    if config.best_action_rule == "max_n":
        best = played[int(np.argmax(n[played]))]
    else:
        best = played[int(np.argmax(tree._q[:count][played]))]
    return tree.leaves[int(best)].anchor.copy()


def advance_root(root: BeliefNode, executed_action, observation, model: PomdpModel,
                 config: SolverConfig, rng: np.random.Generator) -> tuple[BeliefNode, bool]:
    """Advance the root along the executed (action, observation) edge.

    An existing child keeps its subtree and statistics and is topped up with
    filtered particles; otherwise a fresh root is built from the rejection
    filter, falling back to an observation-blind one-step push (flagged) on
    particle depletion.  Returns (new root, depletion flag)."""
    anchor_key = tuple(map(float, np.asarray(executed_action, dtype=np.float64)))
    delta = model.observation_delta
    if delta is None:
        token = observation
    else:
        token = match_observation_edge(root.cont_edges, anchor_key, observation, delta)
    child = root.children.get((anchor_key, token)) if token is not None else None
    depleted = False
    capacity = config.particle_capacity
    if child is not None:
        missing = capacity - len(child.particles)
        if missing > 0:
            try:
                pool = ParticleSet(root.particles.states, missing)
                extra = filter_particles(pool, executed_action, token, model, rng)
                child.particles = ParticleSet(
                    child.particles.states + extra.states, capacity
                )
            except ParticleDepletion:
                pass  # deposited particles are enough to continue
        return child, depleted
    o_key = token if token is not None else (
        tuple(map(float, observation)) if delta is not None else observation
    )
    try:
        particles = filter_particles(
            ParticleSet(root.particles.states, capacity), executed_action, o_key, model, rng
        )
    except ParticleDepletion:
        particles = fallback_particles(root.particles, executed_action, model, rng)
        depleted = True
    fresh = BeliefNode(_new_action_tree(model, config, rng), particles)
    return fresh, depleted
