"""Tag a drifting target whose motion follows the Van der Pol field.

The agent moves one unit per step along a chosen heading (blocked by four
obstacle squares and the arena walls) and may pay for an accurate range
sensor.  Observations are eight beam readings: the distance to the target
when it sits in a beam's sector within range, zero otherwise, under
additive noise that is small with the sensor active and large without.
Observation vectors are continuous; belief-tree edges cluster them by
Euclidean distance (``observation_delta``).

Action encoding: [heading in [0, 2*pi], sensor in [0, 1]] with the sensor
active above 0.5.  State: (agent, target, status).
"""

import math

import numpy as np

from advt.geometry import BoundedMetricSpace
from advt.pomdp import PomdpModel


class VdpTag(PomdpModel):
    def __init__(self, cfg):
        self.action_space = BoundedMetricSpace(
            np.array([0.0, 0.0]), np.array([2.0 * math.pi, 1.0])
        )
        self.discount = float(cfg["discount"])
        self.observation_delta = float(cfg["observation_delta"])
        self.mu = float(cfg["mu"])
        self.dt = float(cfg["dt"])
        self.target_noise = float(cfg["target_noise"])
        self.arena_low = [float(x) for x in cfg["arena_low"]]
        self.arena_high = [float(x) for x in cfg["arena_high"]]
        self.obstacles = [
            ([float(x) for x in lo], [float(x) for x in hi])
            for lo, hi in cfg["obstacles"]
        ]
        self.agent_speed = float(cfg["agent_speed"])
        self.tag_radius = float(cfg["tag_radius"])
        self.beam_count = int(cfg["beam_count"])
        self.beam_range = float(cfg["beam_range"])
        self.noise_active = float(cfg["noise_active"])
        self.noise_passive = float(cfg["noise_passive"])
        self.tag_reward = float(cfg["tag_reward"])
        self.sensor_cost = float(cfg["sensor_cost"])

    def sample_initial_state(self, rng):
        tx = float(rng.uniform(self.arena_low[0], self.arena_high[0]))
        ty = float(rng.uniform(self.arena_low[1], self.arena_high[1]))
        return (0.0, 0.0, tx, ty, 0)

    def is_terminal(self, state):
        return state[-1] != 0

    def is_success(self, state):
        return state[-1] == 1

    def vdp_field(self, x, y):
        return self.mu * (x - x**3 / 3.0 - y), x / self.mu

    def integrate_target(self, x, y):
        """One RK4 step of the noiseless Van der Pol field."""
        h = self.dt
        k1x, k1y = self.vdp_field(x, y)
        k2x, k2y = self.vdp_field(x + 0.5 * h * k1x, y + 0.5 * h * k1y)
        k3x, k3y = self.vdp_field(x + 0.5 * h * k2x, y + 0.5 * h * k2y)
        k4x, k4y = self.vdp_field(x + h * k3x, y + h * k3y)
        return (
            x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x),
            y + h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y),
        )

    def _move_agent(self, ax, ay, heading):
        ex = ax + self.agent_speed * math.cos(heading)
        ey = ay + self.agent_speed * math.sin(heading)
        t_best = 1.0
        # arena walls
        for i, (p, e) in enumerate(((ax, ex), (ay, ey))):
            d = e - p
            if d > 1e-12:
                t = (self.arena_high[i] - p) / d
            elif d < -1e-12:
                t = (self.arena_low[i] - p) / d
            else:
                continue
            if 0.0 <= t < t_best:
                t_best = t
        # obstacle boxes: earliest entry along the segment
        dx, dy = ex - ax, ey - ay
        for lo, hi in self.obstacles:
            t_enter, t_exit = 0.0, t_best
            inside = True
            for p, d, l, h in ((ax, dx, lo[0], hi[0]), (ay, dy, lo[1], hi[1])):
                if abs(d) < 1e-12:
                    if p < l or p > h:
                        inside = False
                        break
                    continue
                t0 = (l - p) / d
                t1 = (h - p) / d
                if t0 > t1:
                    t0, t1 = t1, t0
                t_enter = max(t_enter, t0)
                t_exit = min(t_exit, t1)
                if t_enter > t_exit:
                    inside = False
                    break
            if inside and t_enter < t_best:
                t_best = max(0.0, t_enter - 1e-9)
        return ax + t_best * dx, ay + t_best * dy

    def step(self, state, action, rng):
        ax, ay, tx, ty = state[0], state[1], state[2], state[3]
        heading = float(action[0])
        active = float(action[1]) > 0.5
        nax, nay = self._move_agent(ax, ay, heading)
        ntx, nty = self.integrate_target(tx, ty)
        ntx += self.target_noise * float(rng.normal())
        nty += self.target_noise * float(rng.normal())

        tagged = math.hypot(nax - ntx, nay - nty) <= self.tag_radius
        reward = (self.tag_reward if tagged else 0.0) - (self.sensor_cost if active else 0.0)
        status = 1 if tagged else 0
        obs = self._observe((nax, nay), (ntx, nty), active, rng)
        return (nax, nay, ntx, nty, status), obs, reward

    def _observe(self, agent, target, active, rng):
        dx = target[0] - agent[0]
        dy = target[1] - agent[1]
        dist = math.hypot(dx, dy)
        bearing = math.atan2(dy, dx) % (2.0 * math.pi)
        beam = min(int(bearing / (2.0 * math.pi) * self.beam_count), self.beam_count - 1)
        sigma = self.noise_active if active else self.noise_passive
        readings = sigma * rng.standard_normal(self.beam_count)
        if dist <= self.beam_range:
            readings[beam] += dist
        return readings
