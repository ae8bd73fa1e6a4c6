"""Fast internal cross-checks between independent evaluation routes.

Each check compares two computations that share no code path beyond the
parameter records: closed forms against adaptive quadrature, analytic
derivatives against finite differences, and the analytic engine against a
short Monte-Carlo run.
"""

import math
import time

import numpy as np

from . import analytic as an
from .montecarlo import estimate
from .quadrature import QuadratureSpec, adaptive_quad
from .specfun import gauss_2f1
from .urban import RADIO_DEFAULT, URBAN_DEFAULT, ChannelType, Deployment, los_breakpoints

LOS, NLOS = ChannelType.LOS, ChannelType.NLOS
_DEP = Deployment(100.0, 5e-6, 100.0)
_TIGHT = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-12, max_subdivisions=2000)


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def euler_2f1(a, b, c, z):
    """``2F1`` from its Euler integral, for ``c = b + 1`` and ``0 < b``.

    With ``t = w**(1/b)`` the weight ``t**(b-1)`` disappears and the
    integral reads ``(c-1)/b * int_0^1 (1 - z w**(1/b))**(-a) dw``.
    """
    if abs(c - b - 1.0) > 1e-15:
        raise ValueError("euler_2f1 handles c = b + 1 only")
    edges = np.concatenate([[0.0], np.logspace(-16, 0, 33)])
    f = lambda w: (1.0 - z * w ** (1.0 / b)) ** (-a)
    return (c - 1.0) / b * adaptive_quad(f, edges, _TIGHT)


def _check_2f1():
    worst = _rel(gauss_2f1(1, 1, 2, -1.0), math.log(2.0))
    b = 2.0 / RADIO_DEFAULT.alpha_los
    for z in (-0.3, -1.5, -100.0, -1e6):
        for a in (1, 2, 3):
            worst = max(worst, _rel(gauss_2f1(a, b, 1 + b, z), euler_2f1(a, b, 1 + b, z)))
    return worst < 1e-8, f"max rel err {worst:.2e}"


def _check_ppp():
    bounds = an.interference_bounds(LOS, 50.0, RADIO_DEFAULT, _DEP)
    worst = 0.0
    for s in (1e3, 1e5, 1e7):
        for j in (LOS, NLOS):
            for n in range(3):
                a = an.laplace_ppp_deriv(n, s, j, bounds, URBAN_DEFAULT, RADIO_DEFAULT, _DEP)
                q = an.laplace_ppp_deriv(n, s, j, bounds, URBAN_DEFAULT, RADIO_DEFAULT, _DEP,
                                         method="quadrature", quad=_TIGHT)
                worst = max(worst, _rel(a, q))
    return worst < 1e-6, f"max rel err {worst:.2e}"


def hotspot_transform_quad(s, t_star, r_star, env, cfg, dep, quad=_TIGHT):
    """Hotspot-interference transform by direct quadrature of its integral."""
    b0 = an.prob_b0(t_star, r_star, env, cfg, dep)
    c = an.interference_bounds(t_star, r_star, cfg, dep)
    r_max = dep.hotspot_radius_m
    total = 0.0
    for j in (LOS, NLOS):
        lo = c.of(j)
        if lo >= r_max:
            continue
        edges = [lo, r_max] + [e for e in los_breakpoints(env, r_max) if e > lo]
        total += adaptive_quad(
            lambda r: an.g_kernel(r, s, j, cfg, dep) * an.pdf_hotspot_joint(r, j, env, dep),
            edges, quad)
    return total / b0


def _check_hotspot():
    worst = 0.0
    for s, t, r in ((1e2, LOS, 60.0), (1e4, LOS, 60.0), (1e4, NLOS, 80.0), (1e6, LOS, 95.0)):
        a = an.laplace_i0(s, t, r, URBAN_DEFAULT, RADIO_DEFAULT, _DEP)
        q = hotspot_transform_quad(s, t, r, URBAN_DEFAULT, RADIO_DEFAULT, _DEP)
        worst = max(worst, _rel(a, q))
    return worst < 1e-6, f"max rel err {worst:.2e}"


def _check_derivatives():
    worst = 0.0
    for s, t, r in ((1e4, LOS, 60.0), (1e6, LOS, 95.0)):
        h = 1e-3 * s
        for k in (1, 2):
            f = lambda x: an.laplace_i0_deriv(k - 1, x, t, r, URBAN_DEFAULT, RADIO_DEFAULT, _DEP)
            fd = (f(s + h) - f(s - h)) / (2 * h)
            exact = an.laplace_i0_deriv(k, s, t, r, URBAN_DEFAULT, RADIO_DEFAULT, _DEP)
            worst = max(worst, _rel(exact, fd))
    return worst < 1e-4, f"max rel err {worst:.2e}"


def _check_closure():
    masses = an.class_masses(URBAN_DEFAULT, RADIO_DEFAULT, _DEP)
    total = sum(masses.values()) + an.void_probability(URBAN_DEFAULT, RADIO_DEFAULT, _DEP)
    return abs(total - 1.0) < 1e-6, f"sum = {total:.9f}"


def _check_mc(n_trials=4000):
    pc = an.coverage_probability(URBAN_DEFAULT, RADIO_DEFAULT, _DEP)
    est = estimate("hotspot", URBAN_DEFAULT, RADIO_DEFAULT, _DEP, n_trials, master_seed=7)
    diff = abs(pc - est.coverage.mean)
    return diff <= max(0.02, 1.5 * est.coverage.half_width_95), \
        f"analytic {pc:.4f} vs MC {est.coverage.mean:.4f} +/- {est.coverage.half_width_95:.4f}"


CHECKS = (
    ("2F1 series vs Euler integral", _check_2f1),
    ("PPP transform closed form vs quadrature", _check_ppp),
    ("hotspot transform closed form vs quadrature", _check_hotspot),
    ("hotspot transform derivatives vs finite differences", _check_derivatives),
    ("serving-class masses + void = 1", _check_closure),
    ("analytic coverage vs Monte Carlo", _check_mc),
)


def run_selftest(out=print):
    """Run every check, report one line each, return True if all pass."""
    ok_all = True
    for name, check in CHECKS:
        t0 = time.perf_counter()
        ok, detail = check()
        ok_all &= bool(ok)
        out(f"{'PASS' if ok else 'FAIL'}  {name}: {detail} ({time.perf_counter() - t0:.1f}s)")
    return ok_all
