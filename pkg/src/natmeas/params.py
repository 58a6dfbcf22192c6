"""Closed-form exponents and identities: fractal dimensions, quantum scaling
exponents and their KPZ residuals, stable-subordinator indices, wedge weights.

All formulas are low-degree rationals in gamma evaluated in float64; identity
checks elsewhere use the 1e-12 tolerance.  Out-of-range parameters raise
ParameterRangeError, never clamp.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "ParameterRangeError",
    "SleParams",
    "FractalKind",
    "BOUNDARY_TOUCHING",
    "CUT_POINTS",
    "PIVOTAL",
    "CARPET",
    "GASKET",
    "KIND_TAGS",
    "dimension",
    "quantum_exponent",
    "kpz_residual",
    "subordinator_index",
    "SUBORDINATOR_CONSTRUCTIONS",
    "wedge_weight",
    "bessel_dimension_for_weight",
]


class ParameterRangeError(ValueError):
    """A parameter fell outside the interval a formula is valid on."""


def _require(cond: bool, what: str, value: float, interval: str) -> None:
    if not cond:
        raise ParameterRangeError(f"{what}={value!r} outside required interval {interval}")


class SleParams:
    """The (kappa, kappa', gamma, Q) bundle every formula consumes.

    Derived from a single user-supplied kappa in (0, 8):
      kappa_prime = 16/kappa
      gamma       = sqrt(min(kappa, kappa_prime))   (so gamma in (0, 2])
      q_coeff     = gamma/2 + 2/gamma               (Q >= 2, = 2 iff gamma = 2)
    """

    __slots__ = ("kappa", "kappa_prime", "gamma", "q_coeff")

    def __init__(self, kappa: float):
        kappa = float(kappa)
        _require(0.0 < kappa < 8.0, "kappa", kappa, "(0, 8)")
        self.kappa = kappa
        self.kappa_prime = 16.0 / kappa
        self.gamma = math.sqrt(min(kappa, self.kappa_prime))
        self.q_coeff = self.gamma / 2.0 + 2.0 / self.gamma

    @property
    def kappa_simple(self) -> float:
        """The member of {kappa, 16/kappa} in (0, 4]."""
        return min(self.kappa, self.kappa_prime)

    @property
    def kappa_nonsimple(self) -> float:
        """The member of {kappa, 16/kappa} in [4, oo)."""
        return max(self.kappa, self.kappa_prime)

    def __repr__(self) -> str:
        return (f"SleParams(kappa={self.kappa:.6g}, kappa_prime={self.kappa_prime:.6g}, "
                f"gamma={self.gamma:.6g}, Q={self.q_coeff:.6g})")


KIND_TAGS = ("boundary_touching", "cut_points", "pivotal", "carpet", "gasket")


@dataclass(frozen=True)
class FractalKind:
    """Which special point set a formula refers to.

    boundary_touching carries the force-point weight rho; validity of (tag, p)
    pairs is checked by the operations (boundary touching needs kappa in (0,4)
    and rho in (-2, kappa/2-2); cut points / pivotal / gasket need kappa' in
    (4,8); carpet needs kappa in (8/3, 4)).
    """

    tag: str
    rho: float | None = None

    def __post_init__(self):
        if self.tag not in KIND_TAGS:
            raise ParameterRangeError(f"unknown fractal kind {self.tag!r}")
        if self.tag == "boundary_touching" and self.rho is None:
            raise ParameterRangeError("boundary_touching requires a rho weight")


def BOUNDARY_TOUCHING(rho: float) -> FractalKind:
    return FractalKind("boundary_touching", float(rho))


CUT_POINTS = FractalKind("cut_points")
PIVOTAL = FractalKind("pivotal")
CARPET = FractalKind("carpet")
GASKET = FractalKind("gasket")


def _simple_kappa(p: SleParams, lo: float = 0.0) -> float:
    k = p.kappa_simple
    _require(lo < k < 4.0, "kappa", k, f"({lo:.6g}, 4)")
    return k


def _nonsimple_kappa(p: SleParams) -> float:
    k = p.kappa_nonsimple
    _require(4.0 < k < 8.0, "kappa'", k, "(4, 8)")
    return k


def _boundary_rho(kind: FractalKind, p: SleParams) -> tuple[float, float]:
    k = _simple_kappa(p)
    rho = float(kind.rho)
    _require(-2.0 < rho < k / 2.0 - 2.0, "rho", rho, f"(-2, {k / 2.0 - 2.0:.6g})")
    return k, rho


def dimension(kind: FractalKind, p: SleParams) -> float:
    """Hausdorff dimension of the given fractal under parameters p."""
    if kind.tag == "boundary_touching":
        k, rho = _boundary_rho(kind, p)
        # kappa - 4 - 2 rho written as kappa - 2(rho+2): same value, no
        # catastrophic cancellation against 4 when rho is near -2
        return (rho + 4.0) * (k - 2.0 * (rho + 2.0)) / (2.0 * k)
    if kind.tag == "cut_points":
        kp = _nonsimple_kappa(p)
        return 3.0 - 3.0 * kp / 8.0
    if kind.tag == "pivotal":
        kp = _nonsimple_kappa(p)
        return 2.0 - (12.0 - kp) * (4.0 + kp) / (8.0 * kp)
    if kind.tag == "carpet":
        k = _simple_kappa(p, lo=8.0 / 3.0)
        return 2.0 - (3.0 * k - 8.0) * (8.0 - k) / (32.0 * k)
    # gasket
    kp = _nonsimple_kappa(p)
    return 2.0 - (3.0 * kp - 8.0) * (8.0 - kp) / (32.0 * kp)


def _tilt_over_gamma(kind: FractalKind, p: SleParams) -> float:
    """m = a/gamma for the per-kind LQG tilt exponent a.

    Kept rational in kappa (gamma^2 = kappa_simple exactly) so the KPZ
    residual can be evaluated without the 1/gamma conditioning loss at small
    kappa.
    """
    if kind.tag == "boundary_touching":
        k, rho = _boundary_rho(kind, p)
        return 0.5 * (1.0 - 2.0 * (rho + 2.0) / k)
    if kind.tag == "cut_points":
        kp = _nonsimple_kappa(p)
        return 1.0 - kp / 8.0  # = 1 - 2/gamma^2
    if kind.tag == "pivotal":
        kp = _nonsimple_kappa(p)
        return 0.5 * (kp / 4.0 - 1.0)
    if kind.tag == "carpet":
        k = _simple_kappa(p, lo=8.0 / 3.0)
        return 2.0 / k + 0.25
    # gasket: mass tilt pinned by the beta'^{-1}-stable mass process in
    # quantum natural time (which scales as exp((2/gamma)C)):
    # a = (2/gamma) * (4/kappa' + 1/2) = gamma/2 + 1/gamma.
    kp = _nonsimple_kappa(p)
    return 0.5 + kp / 16.0  # = 1/2 + 1/gamma^2


def quantum_exponent(kind: FractalKind, p: SleParams) -> float:
    """The LQG tilt exponent `a` paired with each fractal's dimension.

    This is the coefficient of the Green-kernel shift in the dequantization of
    the natural measure; it is the quantity the per-kind KPZ identity is
    evaluated with.
    """
    return _tilt_over_gamma(kind, p) * p.gamma


def kpz_residual(kind: FractalKind, p: SleParams) -> float:
    """Left-hand side of the per-kind KPZ identity; contract |residual|<1e-12.

    Boundary-touching uses the boundary variant a^2 - aQ + d; the bulk kinds
    use a^2/2 - aQ + d (equivalently Q(a, d) = Q(gamma, 2)).  Evaluated with
    a = m*gamma and gamma^2 = kappa_simple so every term stays O(1) even for
    kappa near 0.
    """
    d = dimension(kind, p)
    m = _tilt_over_gamma(kind, p)
    g2 = p.kappa_simple  # gamma^2, exact rational in kappa
    aq = m * (0.5 * g2 + 2.0)  # a*Q = m*(gamma^2/2 + 2)
    if kind.tag == "boundary_touching":
        return m * m * g2 - aq + d
    return 0.5 * m * m * g2 - aq + d


SUBORDINATOR_CONSTRUCTIONS = (
    "boundary_touching", "cut_points", "pivotal", "carpet_cpi_mass", "gasket_mass",
)


def subordinator_index(construction: str, p: SleParams, rho: float | None = None) -> float:
    """Stable index of the exploration subordinator for each construction.

    boundary_touching: 1 - 2(rho+2)/kappa      (occupation of boundary hits)
    cut_points:        2 - kappa'/4
    pivotal:           kappa'/4 - 1
    carpet_cpi_mass:   (1 + alpha/2)^(-1) = kappa/(kappa+2), alpha = 4/kappa
    gasket_mass:       1/beta', beta' = 4/kappa' + 1/2
    """
    if construction not in SUBORDINATOR_CONSTRUCTIONS:
        raise ParameterRangeError(f"unknown construction {construction!r}")
    if construction == "boundary_touching":
        if rho is None:
            raise ParameterRangeError("boundary_touching requires rho")
        k, rho = _boundary_rho(FractalKind("boundary_touching", float(rho)), p)
        return 1.0 - 2.0 * (rho + 2.0) / k
    if construction == "cut_points":
        return 2.0 - _nonsimple_kappa(p) / 4.0
    if construction == "pivotal":
        return _nonsimple_kappa(p) / 4.0 - 1.0
    if construction == "carpet_cpi_mass":
        k = _simple_kappa(p, lo=8.0 / 3.0)
        return k / (k + 2.0)
    # gasket_mass
    kp = _nonsimple_kappa(p)
    return 1.0 / (4.0 / kp + 0.5)


def wedge_weight(alpha: float, p: SleParams) -> float:
    """Weight W = gamma*(gamma/2 + Q - alpha) of an alpha-quantum-wedge.

    W = 2 is the half-plane case (alpha = gamma); alpha = Q sits on the
    thick/thin threshold W = gamma^2/2.
    """
    g = p.gamma
    _require(0.0 < g < 2.0, "gamma", g, "(0, 2)")
    return g * (g / 2.0 + p.q_coeff - float(alpha))


def bessel_dimension_for_weight(weight: float, p: SleParams) -> tuple[float, float]:
    """(Bessel dimension 4W/gamma^2, companion stable index 1 - 2W/gamma^2).

    The zero set of the dimension-4W/gamma^2 Bessel process is the range of a
    (1 - 2W/gamma^2)-stable subordinator; the index is only a valid stable
    index when positive (W < gamma^2/2).
    """
    w = float(weight)
    if w <= 0.0:
        raise ParameterRangeError(f"weight={w!r} must be positive")
    g2 = p.gamma * p.gamma
    return 4.0 * w / g2, 1.0 - 2.0 * w / g2
