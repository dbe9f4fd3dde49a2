"""Numba kernels for the implicit-cell geometry hot paths.

Cells are described by flat arrays (see ``advt.voronoi.VoronoiCell.kernel_args``):
box bounds plus, per level of the tree path, the two child anchors and which
child the path takes.  Membership: point is inside the (closed) box and every
level's nearest-anchor choice (ties to the first child) matches the path.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def contains(x, lo, hi, ca, cb, tf):
    dim = x.shape[0]
    for i in range(dim):
        if x[i] < lo[i] or x[i] > hi[i]:
            return False
    for j in range(ca.shape[0]):
        d1 = 0.0
        d2 = 0.0
        for i in range(dim):
            t = x[i] - ca[j, i]
            d1 += t * t
            t = x[i] - cb[j, i]
            d2 += t * t
        if (d1 <= d2) != tf[j]:
            return False
    return True


@njit(cache=True)
def bisect(inside, outside, lo, hi, ca, cb, tf, eps):
    a = inside.copy()
    b = outside.copy()
    dim = a.shape[0]
    mid = np.empty(dim)
    eps2 = eps * eps
    while True:
        gap2 = 0.0
        for i in range(dim):
            t = a[i] - b[i]
            gap2 += t * t
        if gap2 <= eps2:
            return a
        for i in range(dim):
            mid[i] = 0.5 * (a[i] + b[i])
        if contains(mid, lo, hi, ca, cb, tf):
            for i in range(dim):
                a[i] = mid[i]
        else:
            for i in range(dim):
                b[i] = mid[i]


@njit(cache=True)
def _ray_box_exit(origin, direc, lo, hi):
    # largest t >= 0 with origin + t*direc still inside the box
    t = np.inf
    for i in range(origin.shape[0]):
        d = direc[i]
        if d > 1e-300:
            c = (hi[i] - origin[i]) / d
            if c < t:
                t = c
        elif d < -1e-300:
            c = (lo[i] - origin[i]) / d
            if c < t:
                t = c
    return t


@njit(cache=True)
def boundary_point(start, lo, hi, ca, cb, tf, eps, direction, radius):
    dim = start.shape[0]
    alpha = np.empty(dim)
    for i in range(dim):
        alpha[i] = start[i] + radius * direction[i]
    if not contains(alpha, lo, hi, ca, cb, tf):
        return bisect(start, alpha, lo, hi, ca, cb, tf, eps)
    # sphere sample landed inside the cell: extend the ray to the box face
    step = np.empty(dim)
    for i in range(dim):
        step[i] = alpha[i] - start[i]
    t = _ray_box_exit(start, step, lo, hi)
    face = np.empty(dim)
    for i in range(dim):
        face[i] = start[i] + t * step[i]
        if face[i] > hi[i]:
            face[i] = hi[i]
        elif face[i] < lo[i]:
            face[i] = lo[i]
    if contains(face, lo, hi, ca, cb, tf):
        return face
    return bisect(alpha, face, lo, hi, ca, cb, tf, eps)


@njit(cache=True)
def boundary_points(anchor, lo, hi, ca, cb, tf, eps, directions, radius, out):
    for k in range(directions.shape[0]):
        p = boundary_point(anchor, lo, hi, ca, cb, tf, eps, directions[k], radius)
        for i in range(anchor.shape[0]):
            out[k, i] = p[i]


@njit(cache=True)
def hit_and_run(anchor, lo, hi, ca, cb, tf, eps, directions, fractions, radius):
    current = anchor.copy()
    for j in range(directions.shape[0]):
        bp = boundary_point(current, lo, hi, ca, cb, tf, eps, directions[j], radius)
        f = fractions[j]
        for i in range(current.shape[0]):
            current[i] += f * (bp[i] - current[i])
    return current


@njit(cache=True)
def _solve_gauss(A, rhs):
    # partial-pivot elimination; (ok, x).  A and rhs are scratch copies.
    n = A.shape[0]
    x = rhs.copy()
    M = A.copy()
    for col in range(n):
        piv = col
        best = abs(M[col, col])
        for r in range(col + 1, n):
            v = abs(M[r, col])
            if v > best:
                best = v
                piv = r
        if best < 1e-12:
            return False, x
        if piv != col:
            for c in range(col, n):
                t = M[col, c]
                M[col, c] = M[piv, c]
                M[piv, c] = t
            t = x[col]
            x[col] = x[piv]
            x[piv] = t
        for r in range(col + 1, n):
            f = M[r, col] / M[col, col]
            for c in range(col, n):
                M[r, c] -= f * M[col, c]
            x[r] -= f * x[col]
    for r in range(n - 1, -1, -1):
        s = x[r]
        for c in range(r + 1, n):
            s -= M[r, c] * x[c]
        x[r] = s / M[r, r]
    return True, x


@njit(cache=True)
def _circumball(bnd, nb, dim):
    # smallest ball with bnd[:nb] on its surface; radius -1 marks "none"
    center = np.zeros(dim)
    if nb == 0:
        return center, -1.0
    for i in range(dim):
        center[i] = bnd[0, i]
    if nb == 1:
        return center, 0.0
    m = nb - 1
    A = np.empty((m, m))
    rhs = np.empty(m)
    for i in range(m):
        di2 = 0.0
        for k in range(dim):
            d = bnd[i + 1, k] - bnd[0, k]
            di2 += d * d
        rhs[i] = di2
        for j in range(i, m):
            s = 0.0
            for k in range(dim):
                s += (bnd[i + 1, k] - bnd[0, k]) * (bnd[j + 1, k] - bnd[0, k])
            A[i, j] = 2.0 * s
            A[j, i] = 2.0 * s
    ok, lam = _solve_gauss(A, rhs)
    if not ok:
        return center, -1.0
    for k in range(dim):
        c = bnd[0, k]
        for i in range(m):
            c += lam[i] * (bnd[i + 1, k] - bnd[0, k])
        center[k] = c
    r2 = 0.0
    for k in range(dim):
        d = center[k] - bnd[0, k]
        r2 += d * d
    return center, np.sqrt(r2)


@njit(cache=True)
def min_ball(pts):
    # Welzl move-to-front with an explicit stack (depth = number of pinned
    # boundary points, at most dim+1).  Mutates pts by front rotations.
    n, dim = pts.shape
    bnd = np.empty((dim + 2, dim))
    lim_stack = np.empty(dim + 3, np.int64)
    idx_stack = np.empty(dim + 3, np.int64)
    depth = 0
    lim_stack[0] = n
    idx_stack[0] = 0
    center, radius = _circumball(bnd, 0, dim)
    while True:
        descended = False
        for i in range(idx_stack[depth], lim_stack[depth]):
            d2 = 0.0
            for k in range(dim):
                d = pts[i, k] - center[k]
                d2 += d * d
            if radius < 0.0 or d2 > radius * radius * (1.0 + 1e-12) + 1e-30:
                # pin the violator and solve the prefix with it on the surface
                for k in range(dim):
                    bnd[depth, k] = pts[i, k]
                idx_stack[depth] = i
                depth += 1
                lim_stack[depth] = 0 if depth == dim + 1 else i
                idx_stack[depth] = 0
                center, radius = _circumball(bnd, depth, dim)
                descended = True
                break
        if descended:
            continue
        if depth == 0:
            return center, radius
        depth -= 1
        i = idx_stack[depth]
        for r in range(i, 0, -1):
            for k in range(dim):
                pts[r, k] = pts[r - 1, k]
        for k in range(dim):
            pts[0, k] = bnd[depth, k]
        idx_stack[depth] = i + 1
