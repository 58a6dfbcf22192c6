"""Arm events on the triangular lattice.

One-arm events are open connections across an annulus (Euclidean radii in the
axial embedding).  The alternating four-arm event at a site is implemented as
flip-pivotality of the left-right open crossing of the site's box: x is
counted iff the box minus x has no left-right open crossing and x's open
neighbors bridge a cluster touching the left side to one touching the right.
That criterion is exactly "flipping x changes the crossing indicator", which
is the oracle the small-lattice acceptance test enumerates.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..params import ParameterRangeError
from ..rng import rng_for
from .lattice import AnnulusSpec, LatticeConfig

__all__ = ["center_pivotal", "four_arm_sites", "arm_probability", "crossing_probability",
           "one_arm_event", "site_pivotal_for_box", "ArmEstimate"]

# neighbor offsets in (di, dj) = (dy, dx) index terms
_DI = np.array([0, 0, 1, -1, -1, 1], dtype=np.int64)
_DJ = np.array([1, -1, 0, 0, 1, -1], dtype=np.int64)
# cyclic order of the 6 neighbors around a site (for the alternation count):
# (1,0), (0,1), (-1,1), (-1,0), (0,-1), (1,-1) in (dx, dy)
_CYC_DI = np.array([0, 1, 1, 0, -1, -1], dtype=np.int64)
_CYC_DJ = np.array([1, 0, -1, -1, 0, 1], dtype=np.int64)


@njit(cache=True)
def _bfs_lr(colors, mask, y0, y1, x0, x1, cx, cy, label, marks, stack):
    """Label open cells (excluding (cy,cx)) reachable from the left (label=1)
    or right (label=2) edge of the box.  Returns 1 if the two labels meet
    (crossing without the center), else 0."""
    top = 0
    col = x0 if label == 1 else x1
    for y in range(y0, y1 + 1):
        if (y != cy or col != cx) and mask[y, col] and colors[y, col] == 1:
            m = marks[y, col]
            if m == label:
                continue
            if m != 0:
                return 1  # this edge cell already belongs to the other side
            marks[y, col] = label
            stack[top, 0] = y
            stack[top, 1] = col
            top += 1
    while top > 0:
        top -= 1
        y = stack[top, 0]
        x = stack[top, 1]
        for k in range(6):
            ny = y + _DI[k]
            nx = x + _DJ[k]
            if ny < y0 or ny > y1 or nx < x0 or nx > x1:
                continue
            if ny == cy and nx == cx:
                continue
            if not mask[ny, nx] or colors[ny, nx] != 1:
                continue
            m = marks[ny, nx]
            if m == label:
                continue
            if m != 0:
                return 1  # touched the other side's cluster
            marks[ny, nx] = label
            stack[top, 0] = ny
            stack[top, 1] = nx
            top += 1
    return 0


@njit(cache=True)
def _pivotal_in_box(colors, mask, cy, cx, y0, y1, x0, x1, marks, stack):
    for y in range(y0, y1 + 1):
        for x in range(x0, x1 + 1):
            marks[y, x] = 0
    if _bfs_lr(colors, mask, y0, y1, x0, x1, cx, cy, 1, marks, stack):
        return False
    if _bfs_lr(colors, mask, y0, y1, x0, x1, cx, cy, 2, marks, stack):
        return False
    # the site must bridge a left-touching cluster to a right-touching one;
    # a site on the box edge is itself a crossing endpoint for that side
    has_l = cx == x0
    has_r = cx == x1
    for k in range(6):
        ny = cy + _DI[k]
        nx = cx + _DJ[k]
        if ny < y0 or ny > y1 or nx < x0 or nx > x1:
            continue
        m = marks[ny, nx]
        if m == 1:
            has_l = True
        elif m == 2:
            has_r = True
    return has_l and has_r


@njit(cache=True)
def _center_pivotal_kernel(colors, mask, cy, cx, rad, marks, stack):
    return _pivotal_in_box(colors, mask, cy, cx, cy - rad, cy + rad, cx - rad, cx + rad,
                           marks, stack)


@njit(cache=True)
def _ring_alternations(colors, cy, cx):
    changes = 0
    prev = colors[cy + _CYC_DI[5], cx + _CYC_DJ[5]]
    for k in range(6):
        cur = colors[cy + _CYC_DI[k], cx + _CYC_DJ[k]]
        if cur != prev:
            changes += 1
        prev = cur
    return changes


@njit(cache=True)
def _annulus_two_plus_two(colors, cy, cx, r_out, labels, stack):
    """Necessary condition for 4 alternating arms past radius r_out: the
    local annulus A(x; 2, r_out) has >= 2 disjoint open and >= 2 disjoint
    closed clusters spanning from the inner ring to radius >= r_out - 1.5.

    Any site pivotal for a larger concentric box has 4 disjoint arms whose
    annulus portions cannot merge (a merge would cross the opposite-color
    arm line), so failing this test rules the site out.
    """
    side = colors.shape[0]
    half = labels.shape[0] // 2
    rmax2 = r_out * r_out
    rtarget2 = (r_out - 1.5) * (r_out - 1.5)
    labels[:] = 0
    for want in range(2):
        spanning = 0
        for sy in range(-3, 4):
            for sx in range(-3, 4):
                d2 = (sx + 0.5 * sy) ** 2 + 0.75 * sy * sy
                if d2 < 4.0 or d2 > 12.25:
                    continue
                yy = cy + sy
                xx = cx + sx
                if yy < 0 or yy >= side or xx < 0 or xx >= side:
                    continue
                if colors[yy, xx] != want or labels[sy + half, sx + half] != 0:
                    continue
                # BFS one annulus cluster from this seed
                top = 0
                stack[top, 0] = sy
                stack[top, 1] = sx
                labels[sy + half, sx + half] = 1
                top += 1
                reached_outer = False
                while top > 0:
                    top -= 1
                    y = stack[top, 0]
                    x = stack[top, 1]
                    d2 = (x + 0.5 * y) ** 2 + 0.75 * y * y
                    if d2 >= rtarget2:
                        reached_outer = True
                    for k in range(6):
                        ny = y + _DI[k]
                        nx = x + _DJ[k]
                        if ny < -half or ny > half or nx < -half or nx > half:
                            continue
                        nd2 = (nx + 0.5 * ny) ** 2 + 0.75 * ny * ny
                        if nd2 < 4.0 or nd2 > rmax2:
                            continue
                        gy = cy + ny
                        gx = cx + nx
                        if gy < 0 or gy >= side or gx < 0 or gx >= side:
                            continue
                        if colors[gy, gx] != want or labels[ny + half, nx + half] != 0:
                            continue
                        labels[ny + half, nx + half] = 1
                        stack[top, 0] = ny
                        stack[top, 1] = nx
                        top += 1
                if reached_outer:
                    spanning += 1
                    if spanning >= 2:
                        break
            if spanning >= 2:
                break
        if spanning < 2:
            return False
        labels[:] = 0
    return True


@njit(cache=True)
def _four_arm_scan(colors, mask, rad, out):
    side = colors.shape[0]
    marks = np.zeros((side, side), dtype=np.uint8)
    stack = np.empty(((2 * rad + 1) * (2 * rad + 1) + 8, 2), dtype=np.int64)
    use_annulus_filter = rad >= 12
    deep_filter = rad >= 28
    # windows cover axial offsets up to ceil(1.1548 * r_out) + 1
    ann_labels = np.zeros((21, 21), dtype=np.int32)
    ann_stack = np.empty((21 * 21 + 8, 2), dtype=np.int64)
    deep_labels = np.zeros((55, 55), dtype=np.int32)
    deep_stack = np.empty((55 * 55 + 8, 2), dtype=np.int64)
    count = 0
    for cy in range(rad, side - rad):
        for cx in range(rad, side - rad):
            if not mask[cy, cx]:
                continue
            ok = True
            for k in range(6):
                if not mask[cy + _DI[k], cx + _DJ[k]]:
                    ok = False
                    break
            if not ok:
                continue
            if _ring_alternations(colors, cy, cx) < 4:
                continue
            if use_annulus_filter and not _annulus_two_plus_two(colors, cy, cx, 8.0,
                                                                ann_labels, ann_stack):
                continue
            if deep_filter and not _annulus_two_plus_two(colors, cy, cx, 22.0,
                                                         deep_labels, deep_stack):
                continue
            if _center_pivotal_kernel(colors, mask, cy, cx, rad, marks, stack):
                out[count, 0] = cy
                out[count, 1] = cx
                count += 1
    return count


def four_arm_sites(config: LatticeConfig, eps_radius: int) -> np.ndarray:
    """Axial coordinates (k, 2) of all sites with alternating four arms to
    their eps-box (= flip-pivotal sites for the box crossing).

    Only sites whose box lies fully inside the lattice are scanned.  (Box
    pivotality does not nest across box sizes -- the no-crossing-without-x
    part is box-dependent -- so every radius gets its own direct scan.)
    """
    if eps_radius < 2:
        raise ParameterRangeError("eps_radius must be >= 2 lattice units")
    side = config.colors.shape[0]
    out = np.empty((side * side, 2), dtype=np.int64)
    count = _four_arm_scan(config.colors, config.mask, int(eps_radius), out)
    sites = out[:count]
    o = config.origin
    return np.column_stack((sites[:, 1] - o, sites[:, 0] - o))  # (x, y)


def center_pivotal(config: LatticeConfig, site_xy: tuple[int, int], eps_radius: int) -> bool:
    """Is the site pivotal for the left-right open crossing of its eps-box?"""
    o = config.origin
    cx, cy = site_xy[0] + o, site_xy[1] + o
    side = config.colors.shape[0]
    rad = int(eps_radius)
    if not (rad <= cx < side - rad and rad <= cy < side - rad):
        raise ParameterRangeError("eps-box exceeds the lattice")
    marks = np.zeros((side, side), dtype=np.uint8)
    stack = np.empty(((2 * rad + 1) ** 2 + 8, 2), dtype=np.int64)
    return bool(_center_pivotal_kernel(config.colors, config.mask, cy, cx, rad, marks, stack))


@njit(cache=True)
def _one_arm_kernel(colors, r2, r_in, r_out, want, marks, stack):
    """Open (want=1) or closed (want=0) connection from the disk of radius
    r_in to radius >= r_out - 1.5, inside the annulus r <= r_out.

    r_in < 1 seeds from the origin alone (the site itself must carry the arm
    color), matching the single-site convention of the measure atoms."""
    side = colors.shape[0]
    marks[:] = 0
    top = 0
    rin2 = r_in * r_in
    rtarget = (r_out - 1.5) * (r_out - 1.5)
    rmax2 = r_out * r_out
    for y in range(side):
        for x in range(side):
            if r2[y, x] <= rin2 and colors[y, x] == want:
                marks[y, x] = 1
                stack[top, 0] = y
                stack[top, 1] = x
                top += 1
    while top > 0:
        top -= 1
        y = stack[top, 0]
        x = stack[top, 1]
        if r2[y, x] >= rtarget:
            return True
        for k in range(6):
            ny = y + _DI[k]
            nx = x + _DJ[k]
            if ny < 0 or ny >= side or nx < 0 or nx >= side:
                continue
            if marks[ny, nx] or colors[ny, nx] != want or r2[ny, nx] > rmax2:
                continue
            marks[ny, nx] = 1
            stack[top, 0] = ny
            stack[top, 1] = nx
            top += 1
    return False


def _radius_grid(side: int) -> np.ndarray:
    o = side // 2
    iy, ix = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    x = (ix - o).astype(np.float64)
    y = (iy - o).astype(np.float64)
    return (x + 0.5 * y) ** 2 + 0.75 * y * y


def one_arm_event(colors: np.ndarray, r_in: float, r_out: float, want: int = 1) -> bool:
    """One-arm event on a centered square array of colors."""
    side = colors.shape[0]
    r2 = _radius_grid(side)
    marks = np.zeros((side, side), dtype=np.uint8)
    stack = np.empty((side * side, 2), dtype=np.int64)
    return bool(_one_arm_kernel(colors, r2, float(r_in), float(r_out), want, marks, stack))


class ArmEstimate:
    """Monte-Carlo estimate of an arm-event probability."""

    def __init__(self, p_hat: float, stderr: float, trials: int, spec: AnnulusSpec):
        self.p_hat = p_hat
        self.stderr = stderr
        self.trials = trials
        self.spec = spec

    def __repr__(self):
        return f"ArmEstimate(p={self.p_hat:.5g} +- {self.stderr:.2g}, trials={self.trials})"


def arm_probability(spec: AnnulusSpec, trials: int, seed: int = 0,
                    want: int = 1) -> ArmEstimate:
    """MC frequency of the arm event over independent critical configurations.

    Pattern length 1: open (want=1) or closed (want=0) crossing of the
    annulus.  Pattern length 4: the alternating event = pivotality of the
    center site for its r_outer-box crossing.
    """
    r_out = int(math.ceil(spec.r_outer))
    rng = rng_for(seed, 19)
    hits = 0
    if len(spec.pattern) == 1:
        want = 1 if spec.pattern[0] == "open" else 0
        # axial coordinates of the Euclidean r_out-disk extend to 2 r/sqrt(3)
        side = 2 * (int(math.ceil(1.1548 * spec.r_outer)) + 2) + 1
        r2 = _radius_grid(side)
        marks = np.zeros((side, side), dtype=np.uint8)
        stack = np.empty((side * side, 2), dtype=np.int64)
        for _ in range(trials):
            colors = rng.integers(0, 2, size=(side, side), dtype=np.uint8)
            if _one_arm_kernel(colors, r2, float(spec.r_inner), float(spec.r_outer),
                               want, marks, stack):
                hits += 1
    else:
        rad = r_out
        side = 2 * rad + 3
        mask = np.ones((side, side), dtype=np.uint8)
        marks = np.zeros((side, side), dtype=np.uint8)
        stack = np.empty((side * side + 8, 2), dtype=np.int64)
        c = side // 2
        for _ in range(trials):
            colors = rng.integers(0, 2, size=(side, side), dtype=np.uint8)
            if _center_pivotal_kernel(colors, mask, c, c, rad, marks, stack):
                hits += 1
    p = hits / trials
    se = math.sqrt(max(p * (1.0 - p), 1e-12) / trials)
    return ArmEstimate(p, se, trials, spec)


@njit(cache=True)
def _crossing_lr(colors, marks, stack):
    """Left-right open crossing of a full rectangular array."""
    h, w = colors.shape
    marks[:] = 0
    top = 0
    for y in range(h):
        if colors[y, 0] == 1:
            marks[y, 0] = 1
            stack[top, 0] = y
            stack[top, 1] = 0
            top += 1
    while top > 0:
        top -= 1
        y = stack[top, 0]
        x = stack[top, 1]
        if x == w - 1:
            return True
        for k in range(6):
            ny = y + _DI[k]
            nx = x + _DJ[k]
            if ny < 0 or ny >= h or nx < 0 or nx >= w:
                continue
            if marks[ny, nx] or colors[ny, nx] != 1:
                continue
            marks[ny, nx] = 1
            stack[top, 0] = ny
            stack[top, 1] = nx
            top += 1
    return False


def crossing_probability(colors: np.ndarray) -> bool:
    """Left-right open-crossing indicator of a color array (exact, used by
    the exhaustive flip oracle)."""
    marks = np.zeros_like(colors, dtype=np.uint8)
    stack = np.empty((colors.size, 2), dtype=np.int64)
    return bool(_crossing_lr(colors, marks, stack))


def site_pivotal_for_box(colors: np.ndarray, site_yx: tuple[int, int],
                         bounds: tuple[int, int, int, int]) -> bool:
    """Pivotality of one site for the left-right open crossing of an explicit
    box (y0, y1, x0, x1), via the same single-labeling criterion used by
    four_arm_sites."""
    y0, y1, x0, x1 = bounds
    mask = np.ones_like(colors, dtype=np.uint8)
    marks = np.zeros_like(colors, dtype=np.uint8)
    stack = np.empty((colors.size + 8, 2), dtype=np.int64)
    return bool(_pivotal_in_box(colors, mask, site_yx[0], site_yx[1],
                                y0, y1, x0, x1, marks, stack))
