"""Discrete radial exploration: pseudo-interface, pockets, and the boundary
touch set P0.

The exploration runs in chordal stages.  Stage j walks the percolation
interface of the current domain D_j from an anchor a_j under Dobrushin
conditions (sites outside D_j are virtually open on the counterclockwise arc
from a_j, closed on the clockwise arc).  The walker state is an (open site,
closed site) adjacent pair plus the previous triangle's third vertex; the two
triangles over an edge have third vertices summing to the edge's endpoints, so
the step is s_next = o + c - s_prev.  Crossed lattice edges are blocked; the
next domain is the origin's component of D_j minus the blocked edges, and the
next anchor is the walk's last contact with it.  Touches of the examined site
with the outside define pockets and the P0 points (recorded as the in-domain
pair member).  Configurations where a stage makes no progress (e.g. all-open,
where the walk hugs the boundary arc) terminate with the degenerate one-stage
output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..params import ParameterRangeError
from .lattice import LatticeConfig, radius_sq

__all__ = ["ExplorationStuckError", "StageRecord", "PseudoInterface", "pseudo_interface"]

_DI6 = np.array([0, 1, 1, 0, -1, -1], dtype=np.int64)  # cyclic (dy)
_DJ6 = np.array([1, 0, -1, -1, 0, 1], dtype=np.int64)  # cyclic (dx)


class ExplorationStuckError(RuntimeError):
    """The interface walker exceeded its step budget inside one stage."""


@njit(cache=True)
def _virtual_open(y, x, origin, theta_a):
    ex = (x - origin) + 0.5 * (y - origin)
    ey = 0.8660254037844386 * (y - origin)
    rel = (math.atan2(ey, ex) - theta_a) % (2.0 * math.pi)
    return 0.0 < rel < math.pi


@njit(cache=True)
def _site_open(colors, domain, y, x, origin, theta_a):
    if domain[y, x]:
        return colors[y, x] == 1
    return _virtual_open(y, x, origin, theta_a)


@njit(cache=True)
def _stage_walk(colors, domain, collar, origin, theta_a, oy, ox, cy, cx, spy, spx,
                path, touch, blocked, max_steps):
    """Run one chordal stage.  Returns (steps, n_touch, stuck_flag).

    path[k] = (oy, ox, cy, cx) of the k-th state; touch[i] = (step, y, x) of
    the i-th boundary contact (in-domain member); blocked marks crossed
    lattice edges as blocked[y, x, k] for both directions.  The walk may pass
    through the one-site virtual collar around the domain (gates clustered at
    the angular split) and terminates when it leaves the collar, which
    happens along the far split ray.
    """
    side = colors.shape[0]
    visited = np.zeros((side, side, 6), dtype=np.uint8)
    steps = 0
    n_touch = 0
    while steps < max_steps:
        path[steps, 0] = oy
        path[steps, 1] = ox
        path[steps, 2] = cy
        path[steps, 3] = cx
        # block the crossed edge o -> c (only edges with an in-domain endpoint
        # matter for the disconnection); a revisited directed edge means the
        # walk picked up an interface loop: end the stage there
        for k in range(6):
            if oy + _DI6[k] == cy and ox + _DJ6[k] == cx:
                if visited[oy, ox, k]:
                    return steps, n_touch, 0
                visited[oy, ox, k] = 1
                blocked[oy, ox, k] = 1
                blocked[cy, cx, (k + 3) % 6] = 1
                break
        steps += 1
        sy = oy + cy - spy
        sx = ox + cx - spx
        if sy < 0 or sy >= side or sx < 0 or sx >= side:
            return steps, n_touch, 0  # left the array through the collar edge
        if not domain[sy, sx]:
            # boundary contact; record the in-domain member of the next pair
            if n_touch < touch.shape[0]:
                if _virtual_open(sy, sx, origin, theta_a):
                    ty, tx = cy, cx
                else:
                    ty, tx = oy, ox
                if domain[ty, tx]:
                    touch[n_touch, 0] = steps - 1
                    touch[n_touch, 1] = ty
                    touch[n_touch, 2] = tx
                    n_touch += 1
        if _site_open(colors, domain, sy, sx, origin, theta_a):
            spy, spx = oy, ox
            oy, ox = sy, sx
        else:
            spy, spx = cy, cx
            cy, cx = sy, sx
        if not collar[oy, ox] and not collar[cy, cx]:
            return steps, n_touch, 0  # beyond the collar: far split reached
    return steps, n_touch, 1


@njit(cache=True)
def _component_minus_blocked(domain, blocked, y0, x0, marks, stack):
    marks[:] = 0
    if not domain[y0, x0]:
        return
    top = 0
    marks[y0, x0] = 1
    stack[top, 0] = y0
    stack[top, 1] = x0
    top += 1
    side = domain.shape[0]
    while top > 0:
        top -= 1
        y = stack[top, 0]
        x = stack[top, 1]
        for k in range(6):
            if blocked[y, x, k]:
                continue
            ny = y + _DI6[k]
            nx = x + _DJ6[k]
            if ny < 0 or ny >= side or nx < 0 or nx >= side:
                continue
            if marks[ny, nx] or not domain[ny, nx]:
                continue
            marks[ny, nx] = 1
            stack[top, 0] = ny
            stack[top, 1] = nx
            top += 1


@dataclass
class StageRecord:
    anchor: tuple[int, int]          # axial (x, y)
    pairs: np.ndarray                # (m, 4): oy, ox, cy, cx (array indices)
    touch_steps: np.ndarray          # (k,) step indices of boundary contacts
    touch_sites: np.ndarray          # (k, 2) axial (x, y)
    pockets: list                    # (start_step, end_step) between contacts


@dataclass
class PseudoInterface:
    config: LatticeConfig
    stages: list
    p0: np.ndarray                   # (K, 2) axial (x, y)
    degenerate: bool

    def p0_in_annulus(self, r: float, big_r: float) -> np.ndarray:
        if self.p0.size == 0:
            return self.p0
        rsq = radius_sq(self.p0[:, 0].astype(float), self.p0[:, 1].astype(float))
        keep = (rsq >= r * r) & (rsq <= big_r * big_r)
        return self.p0[keep]

    def path_sites(self) -> set:
        """All axial sites visited as a pair member (the traced exploration)."""
        out = set()
        o = self.config.origin
        for st in self.stages:
            for oy, ox, cy, cx in st.pairs:
                out.add((ox - o, oy - o))
                out.add((cx - o, cy - o))
        return out


def _boundary_ring(domain):
    """Outside sites adjacent to the domain (array-index pairs)."""
    side = domain.shape[0]
    ring = set()
    ys, xs = np.nonzero(domain)
    for y, x in zip(ys, xs):
        for k in range(6):
            ny, nx = y + _DI6[k], x + _DJ6[k]
            if 0 <= ny < side and 0 <= nx < side and not domain[ny, nx]:
                ring.add((int(ny), int(nx)))
    return ring


def _find_start(colors, domain, origin, theta_a, ay, ax):
    """Initial (o, c, s_prev) at a boundary gate: an adjacent pair of outside
    sites with opposite virtual colors, nearest in angle to the anchor.

    The angular split guarantees two color transitions along the outside
    ring, but lattice corners can separate a transition's sites; deterministic
    angle nudges recover a gate in that case.
    """
    side = domain.shape[0]
    ring = _boundary_ring(domain)
    for nudge in (0.0, 0.1, -0.1, 0.25, -0.25, 0.5, -0.5, 1.0, -1.0):
        theta = theta_a + nudge
        best = None
        best_score = None
        for (y1, x1) in ring:
            o1 = _virtual_open(y1, x1, origin, theta)
            for k in range(6):
                y2, x2 = y1 + _DI6[k], x1 + _DJ6[k]
                if (y2, x2) not in ring:
                    continue
                o2 = _virtual_open(y2, x2, origin, theta)
                if o1 == o2:
                    continue
                # gate found; score by distance to the anchor
                score = (y1 - ay) ** 2 + (x1 - ax) ** 2 + (y2 - ay) ** 2 + (x2 - ax) ** 2
                if best_score is None or score < best_score:
                    best_score = score
                    best = ((y1, x1), (y2, x2)) if o1 else ((y2, x2), (y1, x1))
        if best is None:
            continue
        (oy, ox), (cy, cx) = best
        # previous triangle vertex: prefer the common neighbor outside D so
        # the first examined site lies inside
        s1 = (oy + cy, ox + cx)
        commons = []
        for k in range(6):
            wy, wx = oy + _DI6[k], ox + _DJ6[k]
            for k2 in range(6):
                if cy + _DI6[k2] == wy and cx + _DJ6[k2] == wx:
                    commons.append((wy, wx))
        sp = None
        for wy, wx in commons:
            if not (0 <= wy < side and 0 <= wx < side) or not domain[wy, wx]:
                sp = (wy, wx)
                break
        if sp is None and commons:
            sp = commons[0]
        if sp is None:
            continue
        return (oy, ox), (cy, cx), sp, theta
    return None


def pseudo_interface(config: LatticeConfig, max_stages: int = 64,
                     min_sites: int = 8) -> PseudoInterface:
    """Radial exploration of a disk configuration toward the origin."""
    if config.shape != "disk":
        raise ParameterRangeError("pseudo_interface needs a disk-shaped lattice")
    side = config.colors.shape[0]
    origin = config.origin
    domain = config.mask.astype(np.uint8).copy()
    marks = np.zeros((side, side), dtype=np.uint8)
    stack = np.empty((side * side, 2), dtype=np.int64)
    max_steps = 24 * side * side
    path_buf = np.empty((max_steps, 4), dtype=np.int64)
    touch_buf = np.empty((max_steps, 3), dtype=np.int64)

    # initial anchor: easternmost domain site on the horizontal axis
    ax = side - 1
    while ax >= 0 and not domain[origin, ax]:
        ax -= 1
    ay = origin

    stages: list[StageRecord] = []
    p0_list = []
    degenerate = False
    for _ in range(max_stages):
        theta_a = math.atan2(0.8660254037844386 * (ay - origin),
                             (ax - origin) + 0.5 * (ay - origin))
        start = _find_start(config.colors, domain, origin, theta_a, ay, ax)
        if start is None:
            degenerate = True
            break
        (oy, ox), (cy, cx), (spy, spx), theta_a = start
        collar = domain.copy()
        ys, xs = np.nonzero(domain)
        for k in range(6):
            ny = np.clip(ys + _DI6[k], 0, side - 1)
            nx = np.clip(xs + _DJ6[k], 0, side - 1)
            collar[ny, nx] = 1
        blocked = np.zeros((side, side, 6), dtype=np.uint8)
        steps, n_touch, stuck = _stage_walk(
            config.colors, domain, collar, origin, theta_a, oy, ox, cy, cx, spy, spx,
            path_buf, touch_buf, blocked, max_steps)
        if stuck:
            raise ExplorationStuckError(f"stage walker exceeded {max_steps} steps")
        pairs = path_buf[:steps].copy()
        touches = touch_buf[:n_touch].copy()
        o = origin
        touch_sites = np.column_stack((touches[:, 2] - o, touches[:, 1] - o)) \
            if n_touch else np.empty((0, 2), dtype=np.int64)
        pockets = [(int(touches[i, 0]), int(touches[i + 1, 0]))
                   for i in range(n_touch - 1)]
        stages.append(StageRecord((ax - o, ay - o), pairs, touches[:, 0].copy(),
                                  touch_sites, pockets))
        p0_list.append(touch_sites)

        _component_minus_blocked(domain, blocked, origin, origin, marks, stack)
        new_size = int(marks.sum())
        old_size = int(domain.sum())
        if new_size == 0 or new_size >= old_size or new_size < min_sites:
            if new_size >= old_size:
                degenerate = True
            break
        new_domain = (marks == 1).astype(np.uint8)
        # next anchor: the walk's last contact with the surviving domain
        a_next = None
        for k in range(steps - 1, -1, -1):
            for (yy, xx) in ((pairs[k, 0], pairs[k, 1]), (pairs[k, 2], pairs[k, 3])):
                if 0 <= yy < side and 0 <= xx < side and new_domain[yy, xx]:
                    a_next = (yy, xx)
                    break
            if a_next is not None:
                break
        if a_next is None:
            break
        domain = new_domain
        ay, ax = a_next

    p0 = np.vstack([p for p in p0_list if p.size]) if any(p.size for p in p0_list) \
        else np.empty((0, 2), dtype=np.int64)
    return PseudoInterface(config, stages, p0, degenerate)
