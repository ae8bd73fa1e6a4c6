"""Coverage of UAV access points hovering above user hotspots in a city.

Two engines share one parameter model:

* :mod:`hotspot_uav.analytic` -- stochastic-geometry coverage probability
  and spectral efficiency for hotspot-centred and uniformly placed UAVs;
* :mod:`hotspot_uav.montecarlo` -- a Monte-Carlo simulator that also covers
  grid and K-means placements.

:mod:`hotspot_uav.sweep` and :mod:`hotspot_uav.cli` drive parameter sweeps
from INI-style configuration files.
"""

from .analytic import (
    ServingClass,
    class_masses,
    coverage_curve,
    coverage_probability,
    spectral_efficiency,
)
from .errors import ConfigParseError, NumericFailure, ValidationError
from .montecarlo import SimulationOptions, estimate
from .quadrature import QuadratureSpec
from .urban import (
    RADIO_DEFAULT,
    URBAN_DEFAULT,
    ChannelType,
    Deployment,
    RadioConfig,
    Strategy,
    UrbanEnvironment,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelType",
    "ConfigParseError",
    "Deployment",
    "NumericFailure",
    "QuadratureSpec",
    "RADIO_DEFAULT",
    "RadioConfig",
    "ServingClass",
    "SimulationOptions",
    "Strategy",
    "URBAN_DEFAULT",
    "UrbanEnvironment",
    "ValidationError",
    "class_masses",
    "coverage_curve",
    "coverage_probability",
    "estimate",
    "spectral_efficiency",
]
