import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from hotspot_uav import analytic as an
from hotspot_uav.analytic import InterferenceBounds, ServingClass
from hotspot_uav.errors import ValidationError
from hotspot_uav.montecarlo import (
    KMEANS_WINDOW_SCALE,
    Estimate,
    Scenario,
    SimulationOptions,
    estimate,
    kmeans_centroids,
    run_trial,
    sample_typical_scenario,
    simulate,
    trial_rng,
    window_radius,
)
from hotspot_uav.urban import RADIO_DEFAULT, URBAN_DEFAULT, ChannelType, Deployment, Strategy, cone_radius

from oracles import gain, mc_interval, mean_power

ENV, CFG = URBAN_DEFAULT, RADIO_DEFAULT
DEP = Deployment(100.0, 5e-6, 100.0)
LOS, NLOS = ChannelType.LOS, ChannelType.NLOS


def scenarios(strategy, dep, n, seed=0, sim=SimulationOptions()):
    for t in range(n):
        yield sample_typical_scenario(strategy, ENV, CFG, dep, trial_rng(seed, t), sim)


# -- scenario sampling ---------------------------------------------------------

def test_tiny_density_leaves_only_the_own_hotspot_uav():
    dep = replace(DEP, density_per_m2=1e-14)
    for sc in scenarios("hotspot", dep, 200):
        assert len(sc.uav_positions) == 1 and sc.hotspot_uav == 0


def test_hotspot_count_is_poisson_with_window_mean():
    counts = np.array([len(sc.hotspot_centers) - 1 for sc in scenarios("ppp", DEP, 10_000)])
    mean = DEP.density_per_m2 * math.pi * window_radius(CFG, DEP) ** 2
    m, se = mc_interval(counts)
    assert abs(m - mean) <= 3 * se
    assert counts.var(ddof=1) == pytest.approx(mean, rel=0.1)


def test_own_hotspot_distance_follows_disk_law():
    r0 = np.array([np.hypot(*sc.hotspot_centers[0]) for sc in scenarios("hotspot", DEP, 100_000)])
    assert r0.max() <= DEP.hotspot_radius_m
    edges = np.linspace(0.0, DEP.hotspot_radius_m, 21)
    observed = np.histogram(r0, edges)[0]
    expected = r0.size * np.diff(edges**2) / DEP.hotspot_radius_m**2
    assert stats.chisquare(observed, expected).pvalue > 0.01


def test_scenario_invariants():
    for sc in scenarios("hotspot", DEP, 50):
        np.testing.assert_array_equal(sc.uav_positions, sc.hotspot_centers)
        assert sc.los.shape == (len(sc.uav_positions),)
    dep = replace(DEP, density_per_m2=25e-6)
    sim = SimulationOptions(users_per_hotspot=4)
    for sc in scenarios("kmeans", dep, 20, sim=sim):
        users = sc.users.reshape(len(sc.hotspot_centers), 4, 2)
        dist = np.hypot(*(users - sc.hotspot_centers[:, None, :]).transpose(2, 0, 1))
        assert np.all(dist <= dep.hotspot_radius_m * (1 + 1e-12))
        np.testing.assert_array_equal(sc.users[0], [0.0, 0.0])
        k = round(dep.density_per_m2 * math.pi * window_radius(CFG, dep, sim, "kmeans") ** 2)
        assert len(sc.uav_positions) == k


def test_grid_is_a_shifted_square_lattice():
    dep = replace(DEP, density_per_m2=25e-6)
    a = 200.0
    for sc in scenarios("grid", dep, 20):
        pts = sc.uav_positions
        frac = np.mod(pts - pts[0], a)
        assert np.allclose(np.minimum(frac, a - frac), 0.0, atol=1e-9)
        assert np.all(np.hypot(pts[:, 0], pts[:, 1]) <= window_radius(CFG, dep))


def test_los_fraction_matches_probability():
    los, pl = [], []
    from hotspot_uav.urban import los_probability
    for sc in scenarios("ppp", DEP, 3000):
        r = np.hypot(*sc.uav_positions.T)
        los.append(sc.los)
        pl.append(los_probability(r, ENV, DEP.height_m))
    los, pl = np.concatenate(los), np.concatenate(pl)
    assert abs(los.mean() - pl.mean()) <= 3 * math.sqrt((pl * (1 - pl)).sum()) / los.size


def test_simulation_options_validation():
    with pytest.raises(ValidationError):
        SimulationOptions(window_scale=0.5)
    with pytest.raises(ValidationError):
        SimulationOptions(users_per_hotspot=0)
    assert SimulationOptions().scale_for("kmeans") == KMEANS_WINDOW_SCALE
    assert SimulationOptions().scale_for("grid") == 1.0
    assert SimulationOptions(window_scale=3.0).scale_for("kmeans") == 3.0


def test_trial_rng_rejects_negative_seed():
    with pytest.raises(ValidationError):
        trial_rng(-1, 0)


# -- k-means -------------------------------------------------------------------

def test_kmeans_single_cluster_is_mean():
    pts = np.random.default_rng(0).normal(size=(50, 2))
    c = kmeans_centroids(pts, 1, np.random.default_rng(1))
    np.testing.assert_allclose(c[0], pts.mean(axis=0), rtol=1e-12)


def test_kmeans_one_cluster_per_point():
    pts = np.random.default_rng(0).normal(size=(12, 2))
    c = kmeans_centroids(pts, 12, np.random.default_rng(1))
    assert sorted(map(tuple, c)) == sorted(map(tuple, pts))


def test_kmeans_separated_blobs():
    rng = np.random.default_rng(4)
    n, sigma = 500, 1.0
    a = rng.normal([0.0, 0.0], sigma, (n, 2))
    b = rng.normal([50.0, 0.0], sigma, (n, 2))
    c = kmeans_centroids(np.vstack([a, b]), 2, np.random.default_rng(5))
    c = c[np.argsort(c[:, 0])]
    tol = 3 * sigma / math.sqrt(n)
    assert np.all(np.abs(c[0] - a.mean(axis=0)) <= tol)
    assert np.all(np.abs(c[1] - b.mean(axis=0)) <= tol)
    assert np.all(np.abs(c[0] - [0, 0]) <= 2 * tol) and np.all(np.abs(c[1] - [50, 0]) <= 2 * tol)


def test_kmeans_argument_errors():
    pts = np.zeros((3, 2))
    with pytest.raises(ValidationError):
        kmeans_centroids(pts, 4, np.random.default_rng(0))
    with pytest.raises(ValidationError):
        kmeans_centroids(pts, 0, np.random.default_rng(0))
    with pytest.raises(ValidationError):
        kmeans_centroids(np.zeros((0, 2)), 1, np.random.default_rng(0))


def test_kmeans_duplicate_points_do_not_fail():
    pts = np.vstack([np.zeros((5, 2)), np.ones((5, 2))])
    c = kmeans_centroids(pts, 3, np.random.default_rng(0))
    assert c.shape == (3, 2) and np.all(np.isfinite(c))


# -- single trial ------------------------------------------------------------------

def single(pos, los, hotspot_uav=-1):
    pos = np.atleast_2d(np.asarray(pos, dtype=float))
    return Scenario(hotspot_centers=pos, uav_positions=pos, los=np.asarray(los), hotspot_uav=hotspot_uav)


def test_overhead_rayleigh_link_is_exponential():
    cfg = replace(CFG, m_los=1)
    sc = single([[0.0, 0.0]], [True])
    rng = np.random.default_rng(8)
    sinr = np.array([run_trial(sc, ENV, cfg, DEP, rng)[0] for _ in range(20_000)])
    snr_mean = float(gain(0.0, cfg, 100.0)) * 100.0 ** (-cfg.alpha_los) / cfg.noise_w
    for theta in (0.5 * snr_mean, snr_mean, 2 * snr_mean):
        p, se = mc_interval(sinr > theta)
        assert abs(p - math.exp(-theta / snr_mean)) <= 3 * se


def test_interferers_outside_cone_are_silent():
    u = cone_radius(CFG, DEP)
    sc = single([[30.0, 0.0], [u + 5.0, 0.0], [0.0, -u - 1.0]], [True, True, False])
    rng = np.random.default_rng(2)
    sinr, cls, se = run_trial(sc, ENV, CFG, DEP, rng)
    h = np.random.default_rng(2).gamma(CFG.m_los, 1.0 / CFG.m_los)
    assert sinr == pytest.approx(float(mean_power(30.0, True, CFG, 100.0)) * h / CFG.noise_w, rel=1e-12)
    assert cls is ServingClass.NEAREST_LOS
    assert se == pytest.approx(math.log2(1 + sinr))


def test_ties_go_to_lowest_index():
    pos = [[40.0, 0.0], [-40.0, 0.0]]
    rng = np.random.default_rng(0)
    assert run_trial(single(pos, [True, True], 0), ENV, CFG, DEP, rng)[1] is ServingClass.HOTSPOT_LOS
    assert run_trial(single(pos, [True, True], 1), ENV, CFG, DEP, rng)[1] is ServingClass.NEAREST_LOS


def test_association_ignores_fading():
    # LOS UAV farther away but stronger on average wins however the fading falls
    pos = [[90.0, 0.0], [0.0, 0.0]]
    rng = np.random.default_rng(3)
    for _ in range(50):
        assert run_trial(single(pos, [True, False], 0), ENV, CFG, DEP, rng)[1] is ServingClass.HOTSPOT_LOS


def test_no_uav_in_cone():
    sc = single([[1000.0, 0.0]], [True])
    assert run_trial(sc, ENV, CFG, DEP, np.random.default_rng(0)) == (0.0, ServingClass.NONE, 0.0)


# -- estimators -------------------------------------------------------------------

def test_estimate_half_width_formula():
    x = np.array([0, 1, 1, 0, 1, 1, 1, 0], dtype=float)
    e = Estimate.from_samples(x)
    assert e.mean == pytest.approx(x.mean())
    assert e.half_width_95 == pytest.approx(1.96 * x.std(ddof=1) / math.sqrt(x.size))
    assert e.n_trials == 8


def test_tiny_threshold_always_covered():
    cfg = replace(CFG, threshold_linear=1e-9)
    assert estimate("hotspot", ENV, cfg, DEP, 2000, 1).coverage.mean >= 0.999


def test_estimate_requires_enough_trials():
    with pytest.raises(ValidationError):
        estimate("hotspot", ENV, CFG, DEP, 99, 1)


def test_half_width_scales_with_root_n():
    sinr, _ = simulate(Strategy.PPP, ENV, CFG, replace(DEP, strategy=Strategy.PPP), 16_000, 3)
    covered = sinr > CFG.threshold_linear
    hw = {n: Estimate.from_samples(covered[:n]).half_width_95 for n in (4000, 8000, 16_000)}
    assert hw[4000] / hw[16_000] == pytest.approx(2.0, rel=0.2)
    assert hw[4000] / hw[8000] == pytest.approx(math.sqrt(2.0), rel=0.2)


@pytest.mark.parametrize("strategy", ["hotspot", "ppp", "grid", "kmeans"])
def test_estimate_independent_of_worker_count(strategy):
    dep = replace(DEP, density_per_m2=25e-6)
    a = estimate(strategy, ENV, CFG, dep, 1200, 42, workers=1)
    b = estimate(strategy, ENV, CFG, dep, 1200, 42, workers=2)
    np.testing.assert_array_equal(a.sinr, b.sinr)
    assert a.coverage == b.coverage and a.se == b.se


def test_estimate_depends_on_seed():
    a = estimate("ppp", ENV, CFG, DEP, 500, 1)
    b = estimate("ppp", ENV, CFG, DEP, 500, 2)
    assert not np.array_equal(a.sinr, b.sinr)


@pytest.mark.parametrize("strategy", [Strategy.HOTSPOT, Strategy.PPP])
def test_class_frequencies_match_masses(strategy):
    dep = replace(DEP, strategy=strategy)
    res = estimate(strategy, ENV, CFG, dep, 20_000, 11)
    masses = an.class_masses(ENV, CFG, dep)
    masses[ServingClass.NONE] = an.void_probability(ENV, CFG, dep)
    for cls, freq in res.class_freq.items():
        se = freq.half_width_95 / 1.96
        assert abs(freq.mean - masses.get(cls, 0.0)) <= 3 * max(se, 1 / freq.n_trials)


def test_ppp_empirical_laplace_functional():
    # the sampled UAV field, with fading, against the analytic transform
    dep = replace(DEP, strategy=Strategy.PPP)
    rng = np.random.default_rng(17)
    loads = {LOS: [], NLOS: []}
    for sc in scenarios("ppp", dep, 20_000, seed=5):
        r = np.hypot(*sc.uav_positions.T)
        for j, mask in ((LOS, sc.los), (NLOS, ~sc.los)):
            m = CFG.m(j)
            p = mean_power(r[mask], j is LOS, CFG, dep.height_m) * rng.gamma(m, 1.0 / m, mask.sum())
            loads[j].append(p.sum())
    total = np.add(loads[LOS], loads[NLOS])
    zero = InterferenceBounds(0.0, 0.0)
    for s in (1e3, 1e4, 1e5, 1e6, 1e7):
        est, se = mc_interval(np.exp(-s * total))
        ref = (an.laplace_ppp(s, LOS, zero, ENV, CFG, dep) * an.laplace_ppp(s, NLOS, zero, ENV, CFG, dep))
        assert abs(est - ref) <= 3 * se


# -- window sufficiency ----------------------------------------------------------

@pytest.mark.parametrize("strategy", ["hotspot", "ppp", "grid"])
def test_larger_window_leaves_sinr_unchanged(strategy):
    dep = replace(DEP, density_per_m2=25e-6)
    a = estimate(strategy, ENV, CFG, dep, 500, 9, sim=SimulationOptions(window_scale=1.0))
    b = estimate(strategy, ENV, CFG, dep, 500, 9, sim=SimulationOptions(window_scale=2.0))
    np.testing.assert_array_equal(a.sinr, b.sinr)


@pytest.mark.parametrize("density, height, n_trials, seed",
                         [(5e-6, 100.0, 3000, 4), (25e-6, 40.0, 12_000, 101)])
def test_kmeans_default_window_is_sufficient(density, height, n_trials, seed):
    # 3000 trials cannot resolve a one-SE change at the dense point
    dep = Deployment(height, density, 100.0)
    a = estimate("kmeans", ENV, CFG, dep, n_trials, seed)
    b = estimate("kmeans", ENV, CFG, dep, n_trials, seed,
                 sim=SimulationOptions(window_scale=2 * KMEANS_WINDOW_SCALE))
    se = math.hypot(a.coverage.half_width_95, b.coverage.half_width_95) / 1.96
    assert abs(a.coverage.mean - b.coverage.mean) < se


def test_kmeans_tight_window_is_biased():
    # documents why K-means gets a wider window than the other placements
    dep = Deployment(100.0, 5e-6, 100.0)
    tight = estimate("kmeans", ENV, CFG, dep, 3000, 4, sim=SimulationOptions(window_scale=1.0))
    wide = estimate("kmeans", ENV, CFG, dep, 3000, 4)
    assert wide.coverage.mean - tight.coverage.mean > 2 * wide.coverage.half_width_95 / 1.96
