"""Urban propagation primitives: building-grid LOS model, pathloss, antenna cone.

All lengths are metres, densities per square metre and angles radians.
Conversion from the km^2 / degree / dB units used in configuration files
happens once, in :mod:`hotspot_uav.config`.
"""

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ValidationError


class ChannelType(enum.Enum):
    LOS = "los"
    NLOS = "nlos"

    @property
    def other(self):
        return ChannelType.NLOS if self is ChannelType.LOS else ChannelType.LOS


class Strategy(enum.Enum):
    HOTSPOT = "hotspot"
    PPP = "ppp"
    GRID = "grid"
    KMEANS = "kmeans"


@dataclass(frozen=True)
class UrbanEnvironment:
    """Square building grid: ``beta`` buildings per m^2, built-up fraction
    ``delta`` and Rayleigh height scale ``kappa`` (m)."""

    beta: float
    delta: float
    kappa: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValidationError("beta must be positive")
        if not 0 < self.delta < 1:
            raise ValidationError("delta must lie in (0,1)")
        if not self.kappa > 0:
            raise ValidationError("kappa must be positive")

    @property
    def grid_rate(self):
        """Buildings crossed per metre of horizontal distance, sqrt(beta*delta)."""
        return math.sqrt(self.beta * self.delta)


@dataclass(frozen=True)
class RadioConfig:
    alpha_los: float
    alpha_nlos: float
    m_los: int
    m_nlos: int
    tx_power_w: float
    noise_w: float
    beamwidth_rad: float
    threshold_linear: float

    def __post_init__(self):
        if not 2 < self.alpha_los <= self.alpha_nlos:
            raise ValidationError("pathloss exponents must satisfy 2 < alpha_los <= alpha_nlos")
        for name in ("m_los", "m_nlos"):
            m = getattr(self, name)
            if isinstance(m, bool) or int(m) != m or m < 1:
                raise ValidationError(f"{name} must be a positive integer")
        if self.m_los < self.m_nlos:
            raise ValidationError("fading shapes must satisfy m_los >= m_nlos")
        object.__setattr__(self, "m_los", int(self.m_los))
        object.__setattr__(self, "m_nlos", int(self.m_nlos))
        if not 0 < self.beamwidth_rad < math.pi:
            raise ValidationError("beamwidth must lie in (0, pi) radians")
        if not self.tx_power_w > 0:
            raise ValidationError("tx_power_w must be positive")
        if not self.noise_w >= 0:
            raise ValidationError("noise_w must be non-negative")
        if not self.threshold_linear > 0:
            raise ValidationError("threshold must be positive")

    def alpha(self, ct):
        return self.alpha_los if ct is ChannelType.LOS else self.alpha_nlos

    def m(self, ct):
        return self.m_los if ct is ChannelType.LOS else self.m_nlos

    @property
    def main_lobe_gain(self):
        """Transmit power times cone gain, ``mu * 16 pi / omega^2``."""
        return self.tx_power_w * 16.0 * math.pi / self.beamwidth_rad**2


@dataclass(frozen=True)
class Deployment:
    height_m: float
    density_per_m2: float
    hotspot_radius_m: float
    strategy: Strategy = Strategy.HOTSPOT

    def __post_init__(self):
        if not self.height_m > 0:
            raise ValidationError("height_m must be positive")
        if not self.density_per_m2 > 0:
            raise ValidationError("density must be positive")
        if not self.hotspot_radius_m > 0:
            raise ValidationError("hotspot_radius_m must be positive")
        if not isinstance(self.strategy, Strategy):
            object.__setattr__(self, "strategy", Strategy(self.strategy))


# Reference urban/radio parameter set used throughout the numerical study.
URBAN_DEFAULT = UrbanEnvironment(beta=300e-6, delta=0.5, kappa=20.0)
RADIO_DEFAULT = RadioConfig(
    alpha_los=2.1,
    alpha_nlos=4.0,
    m_los=3,
    m_nlos=1,
    tx_power_w=0.1,
    noise_w=1e-9,
    beamwidth_rad=math.radians(150.0),
    threshold_linear=1.0,
)


def cone_radius(cfg, dep):
    """Ground radius illuminated by the downward cone, ``tan(omega/2) * gamma``."""
    return math.tan(cfg.beamwidth_rad / 2.0) * dep.height_m


def antenna_gain(r, cfg, dep):
    """Effective transmit gain towards a user at horizontal distance ``r``.

    ``mu * 16 pi / omega^2`` inside the cone (boundary included), else 0.
    """
    r = np.asarray(r, dtype=float)
    out = np.where(r <= cone_radius(cfg, dep), cfg.main_lobe_gain, 0.0)
    return out if out.ndim else float(out)


def pathloss(r, gamma, alpha):
    r = np.asarray(r, dtype=float)
    out = (r * r + gamma * gamma) ** (-alpha / 2.0)
    return out if out.ndim else float(out)


@lru_cache(maxsize=256)
def _plateau_table(env, gamma, q_max):
    out = np.ones(q_max + 1)
    two_k2 = 2.0 * env.kappa**2
    for d in range(1, q_max + 1):
        n = np.arange(d)
        h = gamma - (n + 0.5) * gamma / d
        out[d] = np.prod(1.0 - np.exp(-(h * h) / two_k2))
    out.setflags(write=False)
    return out


def plateau_los_probs(env, gamma, q_max):
    """LOS probability on plateaus ``q = 0 .. q_max``.

    Plateau ``q`` covers ``[q, q+1) / sqrt(beta*delta)``; plateau 0 has no
    building in the way and is LOS with probability 1.
    """
    # round the cache key so tiny float noise in q_max does not thrash it
    return _plateau_table(env, float(gamma), int(q_max))


def plateau_index(r, env):
    r = np.asarray(r, dtype=float)
    return np.floor(r * env.grid_rate).astype(np.int64)


def los_probability(r, env, gamma):
    """Probability that a UAV at horizontal distance ``r`` has LOS to the user.

    Piecewise constant in ``r``; ``d = floor(r sqrt(beta delta))`` buildings
    lie on the path, and ``d = 0`` is LOS with certainty.
    """
    d = plateau_index(r, env)
    table = plateau_los_probs(env, gamma, int(d.max()) if d.size else 0)
    out = table[d]
    return out if out.ndim else float(out)


def channel_probability(r, ct, env, gamma):
    p = los_probability(r, env, gamma)
    return p if ct is ChannelType.LOS else 1.0 - p


def los_breakpoints(env, r_upper):
    """Radii in ``(0, r_upper]`` where the LOS step function jumps."""
    if r_upper <= 0:
        return []
    q_hi = int(math.floor(r_upper * env.grid_rate))
    return [q / env.grid_rate for q in range(1, q_hi + 1)]
