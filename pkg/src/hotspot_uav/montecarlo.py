"""Monte-Carlo simulator for the typical user of a hotspot-served UAV network.

Each trial samples the hotspot centres around a user at the origin, places
UAVs according to the chosen strategy, draws static LOS/NLOS states and
Nakagami-m power fading, and records the SINR of the strongest-on-average
UAV. Trials draw from independent counter-based Philox streams keyed by the
master seed, so results do not depend on how trials are split across
workers.
"""

import math
import threading
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .analytic import ServingClass
from .errors import ValidationError
from .urban import (
    ChannelType,
    Strategy,
    antenna_gain,
    cone_radius,
    los_probability,
    pathloss,
)

Z95 = 1.96
# integer codes for ServingClass in result arrays
CLASS_CODES = (
    ServingClass.HOTSPOT_LOS,
    ServingClass.HOTSPOT_NLOS,
    ServingClass.NEAREST_LOS,
    ServingClass.NEAREST_NLOS,
    ServingClass.NONE,
)
_CODE = {c: i for i, c in enumerate(CLASS_CODES)}


# K-means on a disk only about one cell wide leaves no centroid near the
# middle; twice the radius removes that edge bias (window sufficiency test)
KMEANS_WINDOW_SCALE = 2.0


@dataclass(frozen=True)
class SimulationOptions:
    """Knobs the analytic model leaves open.

    ``window_scale`` multiplies the simulation disk radius ``u + r_max``;
    ``None`` picks 1 for hotspot, PPP and grid placement (UAVs beyond the
    cone radius have no gain, so truncation is exact) and
    ``KMEANS_WINDOW_SCALE`` for K-means. ``users_per_hotspot`` is the user
    sample per hotspot fed to K-means.
    """

    window_scale: float = None
    users_per_hotspot: int = 10

    def __post_init__(self):
        if self.window_scale is not None and not self.window_scale >= 1.0:
            raise ValidationError("window_scale must be >= 1")
        if self.users_per_hotspot < 1:
            raise ValidationError("users_per_hotspot must be >= 1")

    def scale_for(self, strategy):
        if self.window_scale is not None:
            return self.window_scale
        return KMEANS_WINDOW_SCALE if Strategy(strategy) is Strategy.KMEANS else 1.0


@dataclass
class Scenario:
    hotspot_centers: np.ndarray
    uav_positions: np.ndarray
    los: np.ndarray
    users: np.ndarray = field(default_factory=lambda: np.zeros((1, 2)))
    # index of the UAV above the reference hotspot, -1 when there is none
    hotspot_uav: int = -1
    reference_user: tuple = (0.0, 0.0)


@dataclass(frozen=True)
class Estimate:
    mean: float
    half_width_95: float
    n_trials: int

    @classmethod
    def from_samples(cls, x):
        x = np.asarray(x, dtype=float)
        n = x.size
        mean = math.fsum(x) / n
        sd = math.sqrt(math.fsum((x - mean) ** 2) / (n - 1)) if n > 1 else 0.0
        return cls(mean, Z95 * sd / math.sqrt(n), n)


@dataclass
class EstimateResult:
    coverage: Estimate
    se: Estimate
    class_freq: dict
    sinr: np.ndarray
    serving: np.ndarray

    def coverage_at(self, theta):
        return Estimate.from_samples(self.sinr > theta)


@lru_cache(maxsize=64)
def _master_key(master_seed):
    key = np.random.SeedSequence(master_seed).generate_state(2, np.uint64)
    key.setflags(write=False)
    return key


def trial_rng(master_seed, trial_index):
    """Independent generator for one trial (Philox, counter offset by index)."""
    if master_seed < 0 or trial_index < 0:
        raise ValidationError("seeds and trial indices must be non-negative")
    key = _master_key(master_seed)
    counter = np.array([0, 0, 0, trial_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


# PPP points are drawn in fixed-size blocks so that the points inside a disk
# never depend on how large the sampling window is
_RADIAL_BLOCK = 64
_N_STREAMS = 5
_POOL = threading.local()


def _substreams(rng, n=_N_STREAMS):
    """``n`` independent generators keyed from ``rng``.

    Consumes a fixed number of words from ``rng``. The generator objects
    are per-thread and re-keyed on every call, so they must not be kept.
    """
    keys = rng.bit_generator.random_raw(2 * n).reshape(n, 2)
    pool = getattr(_POOL, "gens", None)
    if pool is None or len(pool) < n:
        pool = [np.random.Generator(np.random.Philox(key=k)) for k in keys]
        _POOL.gens = pool
        return pool[:n]
    for g, k in zip(pool, keys):
        st = g.bit_generator.state
        st["state"]["key"] = k
        st["state"]["counter"] = np.zeros(4, dtype=np.uint64)
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        g.bit_generator.state = st
    return pool[:n]


def _uniform_disk(rng, n, radius, center=(0.0, 0.0)):
    r = radius * np.sqrt(rng.random(n))
    phi = 2.0 * math.pi * rng.random(n)
    return np.column_stack([center[0] + r * np.cos(phi), center[1] + r * np.sin(phi)])


def _ppp_disk(rng, density, radius):
    """Homogeneous PPP on a disk, ordered by distance from the centre.

    Successive points enclose exponential area increments, so the points
    within any smaller radius are the same whatever ``radius`` is.
    """
    target = density * math.pi * radius**2
    areas, phis = [], []
    last = 0.0
    while last <= target:
        block = last + np.cumsum(rng.standard_exponential(_RADIAL_BLOCK))
        areas.append(block)
        phis.append(rng.random(_RADIAL_BLOCK))
        last = block[-1]
    areas = np.concatenate(areas)
    n = int(np.searchsorted(areas, target, side="right"))
    r = np.sqrt(areas[:n] / (density * math.pi))
    phi = 2.0 * math.pi * np.concatenate(phis)[:n]
    return np.column_stack([r * np.cos(phi), r * np.sin(phi)])


def _grid(rng, density, radius):
    """Square lattice with random phase inside a disk, ordered by distance."""
    a = 1.0 / math.sqrt(density)
    off = rng.random(2) * a
    n = int(math.ceil(radius / a)) + 1
    idx = np.arange(-n, n + 1)
    gx, gy = np.meshgrid(idx * a + off[0], idx * a + off[1], indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    d = np.hypot(pts[:, 0], pts[:, 1])
    order = np.argsort(d, kind="stable")
    return pts[order[d[order] <= radius]]


def window_radius(cfg, dep, sim=SimulationOptions(), strategy=None):
    scale = sim.scale_for(strategy or dep.strategy)
    return scale * (cone_radius(cfg, dep) + dep.hotspot_radius_m)


def sample_typical_scenario(strategy, env, cfg, dep, rng, sim=SimulationOptions()):
    """Sample one configuration seen from a user at the origin.

    Each random ingredient (own hotspot, other hotspots, UAVs, users,
    blockage, K-means seeding) has its own sub-stream, and point patterns
    are generated outward from the origin, so enlarging the window only
    appends far-away points.
    """
    strategy = Strategy(strategy)
    r_max = dep.hotspot_radius_m
    lam = dep.density_per_m2
    radius = window_radius(cfg, dep, sim, strategy)
    # own hotspot centre: user uniform in its disk <=> centre at r_max*sqrt(U)
    y0 = _uniform_disk(rng, 1, r_max)
    s_hot, s_uav, s_users, s_chan, s_km = _substreams(rng)
    centers = np.vstack([y0, _ppp_disk(s_hot, lam, radius)])
    users = np.zeros((1, 2))
    hotspot_uav = -1

    if strategy is Strategy.HOTSPOT:
        uavs = centers
        hotspot_uav = 0
    elif strategy is Strategy.PPP:
        uavs = _ppp_disk(s_uav, lam, radius)
    elif strategy is Strategy.GRID:
        uavs = _grid(s_uav, lam, radius)
    else:
        n_u = sim.users_per_hotspot
        u = s_users.random((len(centers), 2, n_u))
        rr = r_max * np.sqrt(u[:, 0, :])
        phi = 2.0 * math.pi * u[:, 1, :]
        pts = np.stack([centers[:, 0, None] + rr * np.cos(phi),
                        centers[:, 1, None] + rr * np.sin(phi)], axis=-1)
        # the reference user at the origin is one of its hotspot's users
        pts[0, 0] = 0.0
        users = pts.reshape(-1, 2)
        k = max(1, int(round(lam * math.pi * radius**2)))
        uavs = kmeans_centroids(users, min(k, len(users)), s_km)

    r = np.hypot(uavs[:, 0], uavs[:, 1])
    los = s_chan.random(len(uavs)) < los_probability(r, env, dep.height_m)
    return Scenario(hotspot_centers=centers, uav_positions=uavs, los=np.atleast_1d(los),
                    users=users, hotspot_uav=hotspot_uav)


def kmeans_centroids(points, k, rng, max_iter=100):
    """Lloyd's algorithm from k-means++ seeding.

    Empty clusters are re-seeded at the point farthest from its centroid.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    if k < 1 or n == 0:
        raise ValidationError("kmeans needs k >= 1 and a non-empty point set")
    if k > n:
        raise ValidationError(f"cannot form {k} clusters from {n} points")

    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        tot = d2.sum()
        if tot > 0:
            pick = rng.choice(n, p=d2 / tot)
        else:
            pick = rng.integers(n)
        centers[i] = points[pick]
        d2 = np.minimum(d2, ((points - centers[i]) ** 2).sum(axis=1))

    labels = None
    for _ in range(max_iter):
        dist = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new = dist.argmin(axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, points)
        filled = counts > 0
        centers[filled] = sums[filled] / counts[filled, None]
        for c in np.nonzero(~filled)[0]:
            own = ((points - centers[labels]) ** 2).sum(axis=1)
            far = int(own.argmax())
            centers[c] = points[far]
            labels[far] = c
    return centers


def run_trial(sc, env, cfg, dep, rng):
    """SINR, serving class and ``log2(1 + SINR)`` for one scenario."""
    pos = sc.uav_positions
    r = np.hypot(pos[:, 0], pos[:, 1])
    gain = np.atleast_1d(antenna_gain(r, cfg, dep))
    lit = np.nonzero(gain > 0)[0]
    if lit.size == 0:
        return 0.0, ServingClass.NONE, 0.0
    los = sc.los[lit]
    alpha = np.where(los, cfg.alpha_los, cfg.alpha_nlos)
    m = np.where(los, cfg.m_los, cfg.m_nlos)
    mean_power = gain[lit] * pathloss(r[lit], dep.height_m, alpha)
    best = int(np.argmax(mean_power))
    fading = rng.gamma(m, 1.0 / m)
    power = mean_power * fading
    interference = power.sum() - power[best]
    sinr = power[best] / (interference + cfg.noise_w)
    serving = ServingClass.of(lit[best] == sc.hotspot_uav, ChannelType.LOS if los[best] else ChannelType.NLOS)
    return float(sinr), serving, math.log2(1.0 + sinr)


def _run_block(args):
    strategy, env, cfg, dep, sim, seed, start, stop = args
    sinr = np.empty(stop - start)
    codes = np.empty(stop - start, dtype=np.int8)
    for i, t in enumerate(range(start, stop)):
        rng = trial_rng(seed, t)
        sc = sample_typical_scenario(strategy, env, cfg, dep, rng, sim)
        val, cls, _ = run_trial(sc, env, cfg, dep, rng)
        sinr[i] = val
        codes[i] = _CODE[cls]
    return sinr, codes


def simulate(strategy, env, cfg, dep, n_trials, master_seed, workers=1,
             sim=SimulationOptions(), block=500):
    """Raw per-trial SINR and serving-class codes, in trial order."""
    blocks = [(strategy, env, cfg, dep, sim, master_seed, a, min(a + block, n_trials))
              for a in range(0, n_trials, block)]
    if workers and workers > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, blocks))
    else:
        parts = [_run_block(b) for b in blocks]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def estimate(strategy, env, cfg, dep, n_trials, master_seed, workers=1,
             sim=SimulationOptions()):
    """Coverage, spectral efficiency and serving-class frequencies.

    Bit-identical for a given ``(master_seed, parameters, n_trials)``
    whatever the number of ``workers``.
    """
    if n_trials < 100:
        raise ValidationError("n_trials must be at least 100")
    strategy = Strategy(strategy)
    dep = replace(dep, strategy=strategy)
    sinr, codes = simulate(strategy, env, cfg, dep, n_trials, master_seed, workers, sim)
    covered = sinr > cfg.threshold_linear
    freq = {c: Estimate.from_samples(codes == i) for i, c in enumerate(CLASS_CODES)}
    return EstimateResult(
        coverage=Estimate.from_samples(covered),
        se=Estimate.from_samples(np.log2(1.0 + sinr)),
        class_freq=freq,
        sinr=sinr,
        serving=np.array(CLASS_CODES, dtype=object)[codes],
    )
