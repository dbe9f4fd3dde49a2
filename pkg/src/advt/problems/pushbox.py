"""Pushbox: push a disk-shaped puck into a goal region by bumping into it.

The robot picks displacement vectors; motion is noisy, and contact pushes
the puck along the robot-puck center line with speed proportional to the
displacement magnitude (multiplicative noise).  The puck's position is
sensed through a coarse noisy bearing (sector index) plus a contact bit.
Reaching the goal with the puck earns the terminal bonus; either disk
touching the arena boundary ends the run with the collision penalty.

States are flat tuples (robot, puck, status) with status 0 running,
1 success, 2 collision.
"""

import math

import numpy as np

from advt.geometry import BoundedMetricSpace
from advt.pomdp import PomdpModel


class Pushbox(PomdpModel):
    def __init__(self, cfg):
        d = int(cfg["dimensions"])
        if d not in (2, 3):
            raise ValueError("pushbox supports 2 or 3 dimensions")
        self.dim = d
        bound = float(cfg["action_bound"])
        self.action_space = BoundedMetricSpace(-bound * np.ones(d), bound * np.ones(d))
        self.discount = float(cfg["discount"])
        self.arena_low = [float(x) for x in cfg["arena_low"]]
        self.arena_high = [float(x) for x in cfg["arena_high"]]
        self.robot_start = tuple(float(x) for x in cfg["robot_start"])
        self.puck_center = [float(x) for x in cfg["puck_start_center"]]
        self.puck_halfwidth = float(cfg["puck_start_halfwidth"])
        self.robot_radius = float(cfg["robot_radius"])
        self.puck_radius = float(cfg["puck_radius"])
        self.goal_center = [float(x) for x in cfg["goal_center"]]
        self.goal_radius = float(cfg["goal_radius"])
        self.move_noise = float(cfg["move_noise"])
        self.push_gain = float(cfg["push_gain"])
        self.push_noise = float(cfg["push_noise"])
        self.bearing_sectors = int(cfg["bearing_sectors"])
        self.polar_bands = int(cfg.get("polar_bands", 3))
        self.bearing_noise = float(cfg["bearing_noise"])
        self.goal_reward = float(cfg["goal_reward"])
        self.collision_penalty = float(cfg["collision_penalty"])

    def sample_initial_state(self, rng):
        puck = tuple(
            c + float(rng.uniform(-self.puck_halfwidth, self.puck_halfwidth))
            for c in self.puck_center
        )
        return self.robot_start + puck + (0,)

    def is_terminal(self, state):
        return state[-1] != 0

    def is_success(self, state):
        return state[-1] == 1

    def _in_boundary_band(self, pos, radius):
        for i in range(self.dim):
            if pos[i] < self.arena_low[i] + radius or pos[i] > self.arena_high[i] - radius:
                return True
        return False

    def step(self, state, action, rng):
        d = self.dim
        robot = state[:d]
        puck = state[d : 2 * d]
        noise = rng.normal(0.0, self.move_noise, d)
        new_robot = tuple(robot[i] + float(action[i]) + noise[i] for i in range(d))
        gap = [puck[i] - new_robot[i] for i in range(d)]
        dist_rp = math.sqrt(sum(g * g for g in gap))
        contact = 0
        new_puck = puck
        if dist_rp < self.robot_radius + self.puck_radius:
            contact = 1
            if dist_rp < 1e-12:
                direction = [1.0] + [0.0] * (d - 1)
            else:
                direction = [g / dist_rp for g in gap]
            speed = math.sqrt(sum(float(a) ** 2 for a in action))
            push = self.push_gain * speed * (1.0 + self.push_noise * float(rng.normal()))
            new_puck = tuple(puck[i] + push * direction[i] for i in range(d))

        goal_gap = math.sqrt(
            sum((new_puck[i] - self.goal_center[i]) ** 2 for i in range(d))
        )
        if goal_gap < self.goal_radius:
            status, reward = 1, self.goal_reward
        elif self._in_boundary_band(new_robot, self.robot_radius) or self._in_boundary_band(
            new_puck, self.puck_radius
        ):
            status, reward = 2, self.collision_penalty
        else:
            status, reward = 0, 0.0

        obs = self._observe(new_robot, new_puck, contact, rng)
        return new_robot + new_puck + (status,), obs, reward

    def _observe(self, robot, puck, contact, rng):
        dx = puck[0] - robot[0]
        dy = puck[1] - robot[1]
        bearing = math.atan2(dy, dx) + self.bearing_noise * float(rng.normal())
        sector = int((bearing % (2.0 * math.pi)) / (2.0 * math.pi) * self.bearing_sectors)
        sector = min(sector, self.bearing_sectors - 1)
        if self.dim == 2:
            return sector * 2 + contact
        # 3D: add a coarse elevation band
        dz = puck[2] - robot[2]
        horiz = math.hypot(dx, dy)
        polar = math.atan2(dz, horiz) + self.bearing_noise * float(rng.normal())
        band = min(int((polar + math.pi / 2) / math.pi * self.polar_bands), self.polar_bands - 1)
        return (sector * self.polar_bands + band) * 2 + contact
