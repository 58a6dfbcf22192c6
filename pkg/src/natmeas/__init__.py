"""natmeas: desk-scale simulation and verification of natural fractal measures.

Subpackages/modules:
  params   closed-form exponents, KPZ identities, subordinator indices
  loewner  SLE(kappa, rho) driving, zipper curve tracing, boundary hits
  levy     stable subordinators, occupation measures, Bessel zero sets
  gmc      discrete GFF, circle averages, bulk/boundary GMC, wedge profiles
  perc     critical site percolation: arms, pivotal/area measures, exploration
  cli      seeded parallel experiment harness and regression suite
"""

from .params import (  # noqa: F401
    SleParams,
    FractalKind,
    BOUNDARY_TOUCHING,
    CUT_POINTS,
    PIVOTAL,
    CARPET,
    GASKET,
    ParameterRangeError,
    dimension,
    kpz_residual,
    quantum_exponent,
    subordinator_index,
    wedge_weight,
    bessel_dimension_for_weight,
)

__version__ = "0.1.0"
