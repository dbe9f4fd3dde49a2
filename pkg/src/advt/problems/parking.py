"""Parking: drive a vehicle with bicycle dynamics to a goal slot behind a
narrow passage.

The vehicle starts near one of three strips (equal probability, lateral
jitter) and must infer which one from noisy terrain observations (correct
with fixed probability) before committing to the passage.  Dynamics are
deterministic; all uncertainty is in the initial position and the sensor.

State: (x, y, heading, speed[, z]) plus a status flag.
"""

import math

import numpy as np

from advt.geometry import BoundedMetricSpace
from advt.pomdp import PomdpModel


def _segment_hits_box(p0, p1, lo, hi):
    # 2D slab test for the segment p0 -> p1 against an axis-aligned box
    t_enter, t_exit = 0.0, 1.0
    for i in range(2):
        d = p1[i] - p0[i]
        if abs(d) < 1e-12:
            if p0[i] < lo[i] or p0[i] > hi[i]:
                return False
            continue
        t0 = (lo[i] - p0[i]) / d
        t1 = (hi[i] - p0[i]) / d
        if t0 > t1:
            t0, t1 = t1, t0
        t_enter = max(t_enter, t0)
        t_exit = min(t_exit, t1)
        if t_enter > t_exit:
            return False
    return True


class Parking(PomdpModel):
    def __init__(self, cfg):
        self.three_d = bool(cfg.get("elevation", False))
        steer = float(cfg["steer_bound"])
        accel = float(cfg["accel_bound"])
        if self.three_d:
            climb = float(cfg["climb_bound"])
            lo = np.array([-steer, -accel, -climb])
            hi = np.array([steer, accel, climb])
        else:
            lo = np.array([-steer, -accel])
            hi = np.array([steer, accel])
        self.action_space = BoundedMetricSpace(lo, hi)
        self.discount = float(cfg["discount"])
        self.wheelbase = float(cfg["wheelbase"])
        self.v_max = float(cfg["v_max"])
        self.world_low = [float(x) for x in cfg["world_low"]]
        self.world_high = [float(x) for x in cfg["world_high"]]
        self.obstacles = [
            ([float(x) for x in lo_], [float(x) for x in hi_])
            for lo_, hi_ in cfg["obstacles"]
        ]
        self.terrain_edges = [float(x) for x in cfg["terrain_edges"]]  # y cuts
        self.obs_accuracy = float(cfg["obs_accuracy"])
        self.starts = [[float(x) for x in s] for s in cfg["starts"]]
        self.start_jitter = float(cfg["start_jitter"])
        self.goal_center = [float(x) for x in cfg["goal_center"]]
        self.goal_radius = float(cfg["goal_radius"])
        self.goal_reward = float(cfg["goal_reward"])
        self.collision_penalty = float(cfg["collision_penalty"])
        self.z_bound = float(cfg.get("z_bound", 0.0))

    def sample_initial_state(self, rng):
        start = self.starts[int(rng.integers(len(self.starts)))]
        y = start[1] + float(rng.uniform(-self.start_jitter, self.start_jitter))
        if self.three_d:
            return (start[0], y, 0.0, 0.0, 0.0, 0)
        return (start[0], y, 0.0, 0.0, 0)

    def is_terminal(self, state):
        return state[-1] != 0

    def is_success(self, state):
        return state[-1] == 1

    def step(self, state, action, rng):
        x, y, theta, v = state[0], state[1], state[2], state[3]
        z = state[4] if self.three_d else 0.0
        steer = float(action[0])
        accel = float(action[1])
        nx = x + v * math.cos(theta)
        ny = y + v * math.sin(theta)
        ntheta = theta + (v / self.wheelbase) * math.tan(steer)
        nv = max(-self.v_max, min(self.v_max, v + accel))
        nz = z
        if self.three_d:
            nz = z + float(action[2])

        collided = self._collides((x, y), (nx, ny)) or (
            self.three_d and abs(nz) > self.z_bound
        )
        goal_gap2 = (nx - self.goal_center[0]) ** 2 + (ny - self.goal_center[1]) ** 2
        if self.three_d:
            goal_gap2 += (nz - self.goal_center[2]) ** 2
        if not collided and goal_gap2 < self.goal_radius**2:
            status, reward = 1, self.goal_reward
        elif collided:
            status, reward = 2, self.collision_penalty
        else:
            status, reward = 0, 0.0

        obs = self._observe_terrain((nx, ny), rng)
        if self.three_d:
            return (nx, ny, ntheta, nv, nz, status), obs, reward
        return (nx, ny, ntheta, nv, status), obs, reward

    def _collides(self, p0, p1):
        if (
            p1[0] < self.world_low[0]
            or p1[0] > self.world_high[0]
            or p1[1] < self.world_low[1]
            or p1[1] > self.world_high[1]
        ):
            return True
        for lo, hi in self.obstacles:
            if _segment_hits_box(p0, p1, lo, hi):
                return True
        return False

    def terrain_label(self, pos):
        y = pos[1]
        label = 0
        for edge in self.terrain_edges:
            if y < edge:
                label += 1
        return label

    def _observe_terrain(self, pos, rng):
        true = self.terrain_label(pos)
        n_labels = len(self.terrain_edges) + 1
        if rng.random() < self.obs_accuracy:
            return true
        other = int(rng.integers(n_labels - 1))
        return other if other < true else other + 1
