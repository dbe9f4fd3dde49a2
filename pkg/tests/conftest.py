"""Shared toy models for solver and acceptance tests."""

import numpy as np

from advt.geometry import BoundedMetricSpace
from advt.pomdp import PomdpModel


class LineBandit(PomdpModel):
    """One-shot bandit on [0,1]: reward 1 - |a - peak|, then terminal."""

    def __init__(self, peak=0.7):
        self.action_space = BoundedMetricSpace(np.zeros(1), np.ones(1))
        self.discount = 0.95
        self.peak = peak

    def sample_initial_state(self, rng):
        return 0

    def step(self, state, action, rng):
        return 1, 0, 1.0 - abs(float(action[0]) - self.peak)

    def is_terminal(self, state):
        return state == 1


class TwoStepChain(PomdpModel):
    """Deterministic 2-step chain: reward 1 at the first step, 2 at the
    second, action-independent; single constant observation."""

    def __init__(self):
        self.action_space = BoundedMetricSpace(np.zeros(1), np.ones(1))
        self.discount = 0.5

    def sample_initial_state(self, rng):
        return 0

    def step(self, state, action, rng):
        return state + 1, 0, float(state + 1)

    def is_terminal(self, state):
        return state >= 2


class FuzzPomdp(PomdpModel):
    """Small stochastic POMDP for invariant fuzzing: 2D actions, three
    observations, random rewards, 15% chance of termination per step."""

    def __init__(self):
        self.action_space = BoundedMetricSpace(-np.ones(2), np.ones(2))
        self.discount = 0.9

    def sample_initial_state(self, rng):
        return (0, 0)

    def step(self, state, action, rng):
        depth, _ = state
        nxt = (depth + 1, int(rng.integers(0, 3)))
        obs = int(rng.integers(0, 3))
        reward = float(rng.normal(scale=1.0)) + float(action[0])
        if rng.random() < 0.15:
            nxt = (-1, 0)
        return nxt, obs, reward

    def is_terminal(self, state):
        return state[0] == -1
