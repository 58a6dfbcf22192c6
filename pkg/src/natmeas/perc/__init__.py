"""Critical site percolation on the triangular lattice: arm events, pivotal
and area measures, quasi-multiplicativity, energies, radial exploration."""

from .lattice import LatticeConfig, AnnulusSpec, sample_config, embed, radius_sq  # noqa: F401
from .arms import (  # noqa: F401
    arm_probability,
    four_arm_sites,
    center_pivotal,
    crossing_probability,
    site_pivotal_for_box,
)
from .measures import (  # noqa: F401
    SiteMeasure,
    pivotal_measure,
    area_measure,
    ball_mass_scaling,
    energy_estimate,
    energy_estimate_direct,
    quasi_mult_check,
)
from .explore import PseudoInterface, pseudo_interface, ExplorationStuckError  # noqa: F401
