"""POMDP model interface, observation keying and particle beliefs.

Models are generative: ``step(state, action, rng)`` plays one transition and
returns the next state, an observation and the immediate reward.  Discrete
observations key belief-tree edges by exact equality; continuous
observations (``observation_delta`` set) are clustered onto the first stored
edge whose representative vector lies within the threshold distance.

Beliefs are unweighted particle sets.  The execution-time update is a
rejection filter: replay the executed action from sampled particles and keep
successors whose observation matches the perceived one.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import Hashable, Optional

import numpy as np

from advt.geometry import BoundedMetricSpace

ObservationKey = Hashable


class ParticleDepletion(RuntimeError):
    """No particle survived the rejection filter within the attempt budget."""


class PomdpModel(ABC):
    """Generative POMDP with a box-bounded continuous action space.

    ``observation_delta`` is ``None`` for discrete observation models;
    otherwise observations are real vectors and two observations within that
    Euclidean distance share a belief-tree edge.
    """

    action_space: BoundedMetricSpace
    discount: float
    observation_delta: Optional[float] = None
    #: optional domain heuristic ``f(state, rng) -> value``; None selects the
    #: solver's default random rollout
    rollout_heuristic = None

    @abstractmethod
    def sample_initial_state(self, rng: np.random.Generator): ...

    @abstractmethod
    def step(self, state, action, rng: np.random.Generator): ...

    @abstractmethod
    def is_terminal(self, state) -> bool: ...

    def is_success(self, state) -> bool:
        """Whether the state completes the task (for run statistics)."""
        return False


def match_observation_edge(existing_edges, action_key, observation, delta: float):
    """First stored observation key under ``action_key`` within ``delta`` of
    the new observation (strict inequality), or None.

    ``existing_edges`` is an ordered iterable of (action key, stored key)
    pairs, where stored keys of continuous models are representative vectors.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    o = np.asarray(observation, dtype=np.float64)
    for a_k, key in existing_edges:
        if a_k != action_key:
            continue
        rep = np.asarray(key, dtype=np.float64)
        if float(np.linalg.norm(rep - o)) < delta:
            return key
    return None


class ParticleSet:
    """Unweighted multiset of states with a capacity cap."""

    __slots__ = ("states", "capacity")

    def __init__(self, states, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.states = list(states)
        self.capacity = capacity

    def __len__(self) -> int:
        return len(self.states)

    def sample(self, rng: np.random.Generator):
        return self.states[int(rng.integers(len(self.states)))]

    def add(self, state) -> None:
        if len(self.states) < self.capacity:
            self.states.append(state)


def observation_matches(model: PomdpModel, observation, key) -> bool:
    """Does a raw observation fall on the edge keyed by ``key``?"""
    if model.observation_delta is None:
        return observation == key
    diff = np.asarray(observation, dtype=np.float64) - np.asarray(key, dtype=np.float64)
    return float(np.linalg.norm(diff)) < model.observation_delta


def filter_particles(
    particles: ParticleSet,
    action,
    o_key,
    model: PomdpModel,
    rng: np.random.Generator,
    max_attempts: Optional[int] = None,
) -> ParticleSet:
    """Rejection-filter posterior for (action, observation key).

    Samples particles, replays the action, keeps successors whose
    observation matches the key, until capacity or the attempt budget runs
    out.  Raises :class:`ParticleDepletion` when nothing is accepted.
    """
    if not particles.states:
        raise ValueError("cannot filter an empty particle set")
    capacity = particles.capacity
    if max_attempts is None:
        max_attempts = 100 * capacity
    states = particles.states
    n = len(states)
    accepted = []
    for _ in range(max_attempts):
        s = states[int(rng.integers(n))]
        if model.is_terminal(s):
            continue
        s2, obs, _ = model.step(s, action, rng)
        if observation_matches(model, obs, o_key):
            accepted.append(s2)
            if len(accepted) >= capacity:
                break
    if not accepted:
        raise ParticleDepletion(
            f"no particle of {n} matched the observation within {max_attempts} attempts"
        )
    return ParticleSet(accepted, capacity)


def fallback_particles(
    particles: ParticleSet, action, model: PomdpModel, rng: np.random.Generator
) -> ParticleSet:
    """Depletion fallback: push the previous belief through the executed
    action, ignoring the observation."""
    states = [s for s in particles.states if not model.is_terminal(s)]
    if not states:
        states = list(particles.states)
    out = []
    n = len(states)
    for _ in range(particles.capacity):
        s = states[int(rng.integers(n))]
        if model.is_terminal(s):
            out.append(s)
        else:
            out.append(model.step(s, action, rng)[0])
    return ParticleSet(out, particles.capacity)
