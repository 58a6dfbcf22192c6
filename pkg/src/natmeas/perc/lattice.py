"""Triangular-lattice site configurations in axial coordinates.

A site (x, y) embeds at (x + y/2, y*sqrt(3)/2); its six neighbors are at
offsets (+-1,0), (0,+-1), (1,-1), (-1,1).  Arrays are indexed [iy, ix] with
axial coordinates x = ix - origin, y = iy - origin.  Colors are uint8 with
1 = open; every site is open with probability exactly 1/2 (critical).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..params import ParameterRangeError
from ..rng import rng_for

__all__ = ["N6", "TRI_STRUCTURE", "LatticeConfig", "AnnulusSpec", "sample_config",
           "embed", "radius_sq"]

# axial neighbor offsets (dx, dy)
N6 = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1))

# the same adjacency as an ndimage structuring element in (di=dy, dj=dx)
TRI_STRUCTURE = np.array([[0, 1, 1], [1, 1, 1], [1, 1, 0]], dtype=np.uint8)


def embed(x, y):
    """Euclidean embedding of axial coordinates."""
    return x + 0.5 * y, (np.sqrt(3.0) / 2.0) * y


def radius_sq(x, y):
    ex, ey = embed(x, y)
    return ex * ex + ey * ey


@dataclass
class LatticeConfig:
    """Bernoulli(1/2) coloring of the sites of delta*T inside a box or disk.

    n is the linear size (mesh delta = 1/n).  For shape="box" the array holds
    axial coordinates x, y in [0, n]; for shape="disk" it holds x, y in
    [-n, n] with the mask keeping sites of Euclidean radius <= n.
    """

    n: int
    shape: str
    colors: np.ndarray
    mask: np.ndarray
    seed: int

    @property
    def delta(self) -> float:
        return 1.0 / self.n

    @property
    def origin(self) -> int:
        return 0 if self.shape == "box" else self.colors.shape[0] // 2

    @property
    def site_count(self) -> int:
        return int(self.mask.sum())

    def axial_grids(self):
        """(x, y) coordinate arrays matching the colors array ([iy, ix])."""
        o = self.origin
        side = self.colors.shape[0]
        iy, ix = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
        return ix - o, iy - o

    def swapped(self) -> "LatticeConfig":
        """The color-swapped configuration (open <-> closed)."""
        return LatticeConfig(self.n, self.shape, (1 - self.colors).astype(np.uint8),
                             self.mask, self.seed)


@dataclass(frozen=True)
class AnnulusSpec:
    """Annulus A(r_inner, r_outer) in lattice units around the origin with an
    arm color pattern of length 1 (one arm) or 4 (alternating)."""

    r_inner: float
    r_outer: float
    pattern: tuple[str, ...] = ("open",)

    def __post_init__(self):
        if not self.r_inner < self.r_outer:
            raise ParameterRangeError("need r_inner < r_outer")
        if len(self.pattern) not in (1, 4):
            raise ParameterRangeError("pattern length must be 1 or 4")
        if any(c not in ("open", "closed") for c in self.pattern):
            raise ParameterRangeError("pattern entries are 'open'/'closed'")
        if len(self.pattern) == 4 and self.r_inner > 1.5:
            raise ParameterRangeError("alternating 4-arm events are anchored at a site "
                                      "(r_inner = 1)")


def sample_config(n: int, shape: str = "box", seed: int = 0) -> LatticeConfig:
    """Sample a critical configuration; deterministic per seed."""
    if n < 8:
        raise ParameterRangeError(f"lattice size n={n} too small (need >= 8)")
    if shape not in ("box", "disk"):
        raise ParameterRangeError(f"shape must be 'box' or 'disk', got {shape!r}")
    if shape == "box":
        side = n + 1
        colors = rng_for(seed, 17).integers(0, 2, size=(side, side), dtype=np.uint8)
        mask = np.ones((side, side), dtype=np.uint8)
        return LatticeConfig(n, shape, colors, mask, seed)
    # axial coordinates of the Euclidean n-disk extend to 2n/sqrt(3)
    half = int(np.ceil(1.1548 * n)) + 1
    side = 2 * half + 1
    colors = rng_for(seed, 17).integers(0, 2, size=(side, side), dtype=np.uint8)
    iy, ix = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    mask = (radius_sq(ix - half, iy - half) <= n * n).astype(np.uint8)
    return LatticeConfig(n, shape, colors, mask, seed)
