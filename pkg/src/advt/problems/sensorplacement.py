"""SensorPlacement: a D-joint manipulator mounts a sensor at a goal sphere
framed by four walls, under joint-angle uncertainty.

The chain has D equal links (total length 2) with alternating local z/y
revolute axes.  Actions are joint-velocity vectors with small Gaussian
control noise.  The end-effector is allowed to touch walls (the touch
reports the wall id, noise-free); any other link touching a wall ends the
run with the collision penalty.  Placing the end-effector inside the goal
sphere earns the terminal bonus.

State: D joint angles plus a status flag.  The step (forward kinematics,
collision tests, goal/touch checks) is jitted.
"""

import math

import numpy as np
from numba import njit

from advt.geometry import BoundedMetricSpace
from advt.pomdp import PomdpModel


@njit(cache=True)
def _chain_points(theta, link_len, out):
    # alternating z/y revolute axes, translate along local x
    r00 = 1.0; r01 = 0.0; r02 = 0.0
    r10 = 0.0; r11 = 1.0; r12 = 0.0
    r20 = 0.0; r21 = 0.0; r22 = 1.0
    px = 0.0; py = 0.0; pz = 0.0
    out[0, 0] = 0.0; out[0, 1] = 0.0; out[0, 2] = 0.0
    for i in range(theta.shape[0]):
        c = math.cos(theta[i])
        s = math.sin(theta[i])
        if i % 2 == 0:
            # local z rotation: columns 0 and 1 mix
            a00 = r00 * c + r01 * s; a01 = -r00 * s + r01 * c
            a10 = r10 * c + r11 * s; a11 = -r10 * s + r11 * c
            a20 = r20 * c + r21 * s; a21 = -r20 * s + r21 * c
            r00 = a00; r01 = a01
            r10 = a10; r11 = a11
            r20 = a20; r21 = a21
        else:
            # local y rotation: columns 0 and 2 mix
            a00 = r00 * c - r02 * s; a02 = r00 * s + r02 * c
            a10 = r10 * c - r12 * s; a12 = r10 * s + r12 * c
            a20 = r20 * c - r22 * s; a22 = r20 * s + r22 * c
            r00 = a00; r02 = a02
            r10 = a10; r12 = a12
            r20 = a20; r22 = a22
        px += r00 * link_len
        py += r10 * link_len
        pz += r20 * link_len
        out[i + 1, 0] = px
        out[i + 1, 1] = py
        out[i + 1, 2] = pz


@njit(cache=True)
def _point_box_dist2(x, y, z, box):
    dx = max(box[0] - x, 0.0, x - box[3])
    dy = max(box[1] - y, 0.0, y - box[4])
    dz = max(box[2] - z, 0.0, z - box[5])
    return dx * dx + dy * dy + dz * dz


@njit(cache=True)
def _sensor_step(theta, move, limit, link_len, walls, goal, touch_eps,
                 link_radius, samples, out_theta):
    d = theta.shape[0]
    for i in range(d):
        t = theta[i] + move[i]
        if t < -limit:
            t = -limit
        elif t > limit:
            t = limit
        out_theta[i] = t
    pts = np.empty((d + 1, 3))
    _chain_points(out_theta, link_len, pts)

    # collision: all links except the last, sampled along their length
    collided = False
    r2 = link_radius * link_radius
    for li in range(d - 1):
        x0 = pts[li, 0]; y0 = pts[li, 1]; z0 = pts[li, 2]
        x1 = pts[li + 1, 0]; y1 = pts[li + 1, 1]; z1 = pts[li + 1, 2]
        for si in range(samples + 1):
            f = si / samples
            x = x0 + f * (x1 - x0)
            y = y0 + f * (y1 - y0)
            z = z0 + f * (z1 - z0)
            for w in range(walls.shape[0]):
                if _point_box_dist2(x, y, z, walls[w]) <= r2:
                    collided = True
                    break
            if collided:
                break
        if collided:
            break

    ex = pts[d, 0]; ey = pts[d, 1]; ez = pts[d, 2]
    gx = ex - goal[0]; gy = ey - goal[1]; gz = ez - goal[2]
    in_goal = gx * gx + gy * gy + gz * gz <= goal[3] * goal[3]

    touch = 0
    te2 = touch_eps * touch_eps
    for w in range(walls.shape[0]):
        if _point_box_dist2(ex, ey, ez, walls[w]) <= te2:
            touch = w + 1
            break
    return collided, in_goal, touch


class SensorPlacement(PomdpModel):
    def __init__(self, cfg):
        d = int(cfg["dimensions"])
        self.dim = d
        v = float(cfg["velocity_bound"])
        self.action_space = BoundedMetricSpace(-v * np.ones(d), v * np.ones(d))
        self.discount = float(cfg["discount"])
        self.link_len = 2.0 / d
        self.joint_limit = float(cfg["joint_limit"])
        self.control_noise = float(cfg["control_noise"])
        theta0 = np.zeros(d)
        theta0[1] = float(cfg["theta0_joint2"])
        theta0[2] = float(cfg["theta0_joint3"])
        self.theta0 = theta0
        self.init_halfwidth = float(cfg["init_halfwidth"])
        self.walls = np.array(cfg["walls"], dtype=np.float64)  # rows: lo3 + hi3
        self.goal = np.array(
            [*cfg["goal_center"], cfg["goal_radius"]], dtype=np.float64
        )
        self.touch_eps = float(cfg["touch_eps"])
        self.link_radius = float(cfg["link_radius"])
        self.collision_samples = int(cfg["collision_samples"])
        self.goal_reward = float(cfg["goal_reward"])
        self.collision_penalty = float(cfg["collision_penalty"])
        self._scratch = np.empty(d)

    def sample_initial_state(self, rng):
        theta = self.theta0 + rng.uniform(
            -self.init_halfwidth, self.init_halfwidth, self.dim
        )
        return tuple(theta.tolist()) + (0,)

    def is_terminal(self, state):
        return state[-1] != 0

    def is_success(self, state):
        return state[-1] == 1

    def chain_points(self, theta):
        """Joint positions (base included) for a joint-angle vector."""
        pts = np.empty((self.dim + 1, 3))
        _chain_points(np.asarray(theta, dtype=np.float64), self.link_len, pts)
        return pts

    def end_effector(self, theta):
        return self.chain_points(theta)[-1]

    def step(self, state, action, rng):
        theta = np.array(state[:-1], dtype=np.float64)
        move = np.asarray(action, dtype=np.float64) + self.control_noise * rng.standard_normal(self.dim)
        out = np.empty(self.dim)
        collided, in_goal, touch = _sensor_step(
            theta, move, self.joint_limit, self.link_len, self.walls, self.goal,
            self.touch_eps, self.link_radius, self.collision_samples, out,
        )
        if in_goal:
            status, reward = 1, self.goal_reward
        elif collided:
            status, reward = 2, self.collision_penalty
        else:
            status, reward = 0, 0.0
        return tuple(out.tolist()) + (status,), int(touch), reward
