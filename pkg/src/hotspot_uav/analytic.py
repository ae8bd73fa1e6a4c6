"""Analytic coverage probability and spectral efficiency.

The typical user sits at the origin. Under hotspot placement one UAV hovers
above the user's own hotspot centre (distance ``R0``, density ``2r/r_max^2``)
and the remaining UAVs form a PPP of intensity ``lambda``, independently
thinned into LOS and NLOS sub-processes by the building-grid LOS model.
The serving UAV is the strongest on average; coverage follows from the
Nakagami-m conditional success probability expressed through derivatives
of the Laplace transform of interference plus noise.

Radial integrals are evaluated plateau by plateau (the LOS probability is
a step function of distance). Integrals of polynomial-times-constant terms
are exact; the fading kernel is integrated through its hypergeometric
closed form.
"""

import enum
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ValidationError
from .quadrature import QuadratureSpec, adaptive_quad
from .specfun import binomial, gauss_2f1, pochhammer
from .urban import (
    RADIO_DEFAULT,
    ChannelType,
    Strategy,
    antenna_gain,
    channel_probability,
    cone_radius,
    los_breakpoints,
    pathloss,
    plateau_los_probs,
)

LOS, NLOS = ChannelType.LOS, ChannelType.NLOS
B0_FLOOR = 1e-12
SE_CUTOFF = 1e-4
SE_MAX_LOG10_THETA = 15.0


class ServingClass(enum.Enum):
    HOTSPOT_LOS = "0l"
    HOTSPOT_NLOS = "0n"
    NEAREST_LOS = "l"
    NEAREST_NLOS = "n"
    NONE = "none"

    @property
    def channel(self):
        if self in (ServingClass.HOTSPOT_LOS, ServingClass.NEAREST_LOS):
            return LOS
        if self in (ServingClass.HOTSPOT_NLOS, ServingClass.NEAREST_NLOS):
            return NLOS
        return None

    @property
    def is_hotspot(self):
        return self in (ServingClass.HOTSPOT_LOS, ServingClass.HOTSPOT_NLOS)

    @classmethod
    def of(cls, hotspot, channel):
        if channel is LOS:
            return cls.HOTSPOT_LOS if hotspot else cls.NEAREST_LOS
        return cls.HOTSPOT_NLOS if hotspot else cls.NEAREST_NLOS


HOTSPOT_CLASSES = (ServingClass.HOTSPOT_LOS, ServingClass.HOTSPOT_NLOS)
NEAREST_CLASSES = (ServingClass.NEAREST_LOS, ServingClass.NEAREST_NLOS)


@dataclass(frozen=True)
class InterferenceBounds:
    """Closest admissible LOS / NLOS interferer distances given the server."""

    c_los: object
    c_nlos: object

    def of(self, ct):
        return self.c_los if ct is LOS else self.c_nlos


# ---------------------------------------------------------------------------
# combinatorial helpers


@lru_cache(maxsize=None)
def _dzpow_coef(i, q):
    """Coefficient ``C`` in ``d^i z^q / ds^i = C z^q s^-i`` for ``z = -A/s``.

    Evaluated with the double-sum form of the n-th derivative of a power
    of ``-A/s``; the ``A`` and ``s`` factors collapse to ``z^q s^-i``.
    """
    total = 0.0
    for e in range(i + 1):
        for n in range(e + 1):
            total += ((-1) ** n * pochhammer(1 + q - e, e) * pochhammer(1 + n - i - e, i)
                      / (math.factorial(n) * math.factorial(e - n)))
    return total


@lru_cache(maxsize=None)
def _compositions(k, parts):
    """All tuples of ``parts`` non-negative integers summing to ``k``."""
    return tuple(c for c in itertools.product(range(k + 1), repeat=parts) if sum(c) == k)


def _multinomial(idx):
    out = math.factorial(sum(idx))
    for i in idx:
        out //= math.factorial(i)
    return out


def exp_derivatives(f_derivs):
    """Derivatives of ``exp(F)`` from those of ``F`` (last axis = order)."""
    f_derivs = np.asarray(f_derivs, dtype=float)
    n = f_derivs.shape[-1] - 1
    out = np.empty_like(f_derivs)
    out[..., 0] = np.exp(f_derivs[..., 0])
    for order in range(1, n + 1):
        acc = np.zeros_like(out[..., 0])
        for k in range(order):
            acc = acc + binomial(order - 1, k) * f_derivs[..., order - k] * out[..., k]
        out[..., order] = acc
    return out


# ---------------------------------------------------------------------------
# radial machinery


class _Radial:
    """Per-(environment, radio, deployment) precomputation."""

    def __init__(self, env, cfg, dep):
        self.env, self.cfg, self.dep = env, cfg, dep
        self.gamma = dep.height_m
        self.lam = dep.density_per_m2
        self.r_max = dep.hotspot_radius_m
        self.u = cone_radius(cfg, dep)
        self.eta = cfg.main_lobe_gain
        self.rate = env.grid_rate
        self._build(int(math.floor(max(self.u, self.r_max) * self.rate)) + 2)

    def _build(self, q_hi):
        p_los = np.asarray(plateau_los_probs(self.env, self.gamma, q_hi))
        p = {LOS: p_los, NLOS: 1.0 - p_los}
        edges = np.arange(q_hi + 2) / self.rate
        seg = 0.5 * (edges[1:] ** 2 - edges[:-1] ** 2)
        cum = {j: np.concatenate([[0.0], np.cumsum(p[j] * seg)]) for j in p}
        # single assignment: concurrent readers see either the old or the new table
        self._table = (q_hi, p, edges, cum)

    def _q(self, r):
        q = np.floor(np.asarray(r, dtype=float) * self.rate).astype(np.int64)
        top = int(q.max()) if q.size else 0
        if top > self._table[0]:
            self._build(top + 2)
        return q

    @property
    def p(self):
        return self._table[1]

    @property
    def edges(self):
        return self._table[2]

    def p_at(self, r, j):
        q = self._q(r)
        return self._table[1][j][q]

    def mass(self, c, j):
        """``int_0^c P_j(r) r dr``."""
        c = np.asarray(c, dtype=float)
        q = self._q(c)
        _, p, edges, cum = self._table
        return cum[j][q] + p[j][q] * 0.5 * (c * c - edges[q] ** 2)

    def void_exponent(self, c, j):
        return 2.0 * math.pi * self.lam * self.mass(c, j)

    def bounds(self, t, r):
        r = np.asarray(r, dtype=float)
        g2 = self.gamma**2
        a_l, a_n = self.cfg.alpha_los, self.cfg.alpha_nlos
        if t is LOS:
            c_n = np.sqrt(np.maximum(0.0, (r * r + g2) ** (a_l / a_n) - g2))
            return r, c_n
        c_l = np.minimum(self.u, np.sqrt(np.maximum(0.0, (r * r + g2) ** (a_n / a_l) - g2)))
        return c_l, r

    def inverse_bound(self, t, x):
        """Serving distances at which the cross-type bound equals ``x``."""
        g2 = self.gamma**2
        a_l, a_n = self.cfg.alpha_los, self.cfg.alpha_nlos
        ratio = a_n / a_l if t is LOS else a_l / a_n
        inner = (np.asarray(x, dtype=float) ** 2 + g2) ** ratio - g2
        return np.sqrt(inner[inner >= 0.0])

    def b0(self, c_l, c_n):
        """Probability the hotspot UAV is weaker than the server."""
        k = 2.0 / self.r_max**2
        inside = (k * self.mass(np.minimum(c_l, self.r_max), LOS)
                  + k * self.mass(np.minimum(c_n, self.r_max), NLOS))
        return np.clip(1.0 - inside, 0.0, 1.0)

    # -- fading-kernel integrals -------------------------------------------

    def kernel_moments(self, j, c, upper, s, order):
        """Plateau sums of the fading-kernel integral and its s-derivatives.

        Returns ``(area, series)`` such that for each derivative order ``i``

            sum_q P_j(q) int_{l_q}^{u_q} d^i g/ds^i * 2 r dr
                = [i == 0] * area + series[..., i]

        with ``l_q = max(c, edge_q)`` and ``u_q = min(upper, edge_{q+1})``.
        ``c`` and ``s`` broadcast together; ``upper`` is a scalar.
        """
        c, s = np.broadcast_arrays(np.asarray(c, dtype=float), np.asarray(s, dtype=float))
        shape = c.shape
        c, s = c.ravel(), s.ravel()
        area = np.zeros(c.size)
        series = np.zeros((c.size, order + 1))
        if upper <= 0:
            return area.reshape(shape), series.reshape(shape + (order + 1,))
        q_top = int(self._q(upper))
        _, p, edges, _ = self._table
        qs = np.arange(q_top + 1)
        lo = np.maximum(c[:, None], edges[qs][None, :])
        hi = np.minimum(upper, edges[qs + 1])[None, :]
        valid = hi > lo
        rows, cols = np.nonzero(valid)
        if rows.size:
            w = p[j][qs[cols]]
            hi_v = np.broadcast_to(hi, valid.shape)[rows, cols]
            lo_v = lo[rows, cols]
            np.add.at(area, rows, w * (hi_v**2 - lo_v**2))
            sv = s[rows]
            g2 = self.gamma**2
            m = self.cfg.m(j)
            acc = np.zeros((rows.size, order + 1))
            for k in range(1, m + 1):
                coef = binomial(m, k) * (-1) ** k
                acc += coef * (self._f_derivs(j, k, hi_v**2 + g2, sv, order)
                               - self._f_derivs(j, k, lo_v**2 + g2, sv, order))
            np.add.at(series, rows, w[:, None] * acc)
        return area.reshape(shape), series.reshape(shape + (order + 1,))

    def _f_derivs(self, j, k, b, s, order):
        """``d^i/ds^i [ b 2F1(k, 2/a; 1+2/a; z(b, s)) ]`` for i = 0..order."""
        alpha = self.cfg.alpha(j)
        m = self.cfg.m(j)
        beta = 2.0 / alpha
        out = np.zeros((b.size, order + 1))
        pos = s > 0
        # s == 0: z -> -inf and b*2F1 -> 0; derivatives are not needed there
        out[~pos, 1:] = np.nan
        if not pos.any():
            return out
        b, s = b[pos], s[pos]
        z = -m * b ** (alpha / 2.0) / (self.eta * s)
        res = np.empty((b.size, order + 1))
        res[:, 0] = b * gauss_2f1(k, beta, 1.0 + beta, z)
        dz = []  # d^p/dz^p 2F1
        for p in range(1, order + 1):
            pref = pochhammer(k, p) * pochhammer(beta, p) / pochhammer(1.0 + beta, p)
            dz.append(pref * gauss_2f1(k + p, beta + p, 1.0 + beta + p, z))
        for i in range(1, order + 1):
            acc = np.zeros_like(z)
            for p in range(1, i + 1):
                u_p = np.zeros_like(z)
                for a in range(p):
                    d_i = _dzpow_coef(i, p - a) * z ** (p - a) * s ** (-i)
                    u_p += (-1) ** a * binomial(p, a) * z**a * d_i
                acc += u_p / math.factorial(p) * dz[p - 1]
            res[:, i] = b * acc
        out[pos] = res
        return out

    def hotspot_terms(self, c_l, c_n, s, order):
        """``B0 * d^i L_I0 / ds^i`` for i = 0..order (unnormalised transform)."""
        top = min(self.r_max, self.u)
        total = 0.0
        for j, c in ((LOS, c_l), (NLOS, c_n)):
            area, series = self.kernel_moments(j, c, top, s, order)
            c_arr = np.broadcast_to(np.asarray(c, dtype=float), area.shape)
            lo = np.maximum(c_arr, self.u)
            tail = np.where(self.r_max > lo,
                            2.0 * (self.mass(self.r_max, j) - self.mass(np.minimum(lo, self.r_max), j)),
                            0.0)
            part = series.copy()
            part[..., 0] += area + tail
            total = total + part
        return total / self.r_max**2

    def ppp_log_derivs(self, j, c, s, order):
        """Derivatives of the log Laplace transform of PPP interference."""
        _, series = self.kernel_moments(j, c, self.u, s, order)
        return math.pi * self.lam * series

    # -- coverage integrand ------------------------------------------------

    def class_integrand(self, v, r, thetas, with_transform=True):
        """Integrand over the serving distance for class ``v``.

        Shape ``(len(r), len(thetas))``. With ``with_transform=False`` the
        Laplace factor is dropped, giving the class density ``A_v f_v``.
        """
        t = v.channel
        cfg = self.cfg
        m_t = cfg.m(t)
        r = np.asarray(r, dtype=float)
        c_l, c_n = self.bounds(t, r)
        excl = np.exp(-self.void_exponent(c_l, LOS) - self.void_exponent(c_n, NLOS))
        p_t = self.p_at(r, t)
        if v.is_hotspot:
            weight = excl * p_t * 2.0 * r / self.r_max**2 * (r <= self.r_max)
        else:
            weight = excl * 2.0 * math.pi * self.lam * p_t * r
        hotspot_interf = (not v.is_hotspot) and self.dep.strategy is Strategy.HOTSPOT
        if not with_transform:
            if hotspot_interf:
                weight = weight * self.b0(c_l, c_n)
            return np.repeat(weight[:, None], len(thetas), axis=1)

        thetas = np.asarray(thetas, dtype=float)
        K = m_t - 1
        s = m_t * thetas[None, :] / (self.eta * pathloss(r, self.gamma, cfg.alpha(t)))[:, None]
        cl = np.broadcast_to(c_l[:, None], s.shape)
        cn = np.broadcast_to(c_n[:, None], s.shape)
        parts = [
            exp_derivatives(self.ppp_log_derivs(LOS, cl, s, K)),
            exp_derivatives(self.ppp_log_derivs(NLOS, cn, s, K)),
            noise_derivatives(s, cfg.noise_w, K),
        ]
        if hotspot_interf:
            parts.append(self.hotspot_terms(cl, cn, s, K))
        total = np.zeros(s.shape)
        for k in range(K + 1):
            total += (-s) ** k / math.factorial(k) * leibniz(parts, k)
        return weight[:, None] * total

    def class_edges(self, v):
        """Split points for the serving-distance integral of class ``v``."""
        top = self.u if not v.is_hotspot else min(self.u, self.r_max)
        pts = [0.0, top] + los_breakpoints(self.env, top)
        if self.r_max < top:
            pts.append(self.r_max)
        marks = np.array([0.0, self.u, self.r_max] + los_breakpoints(self.env, self.u))
        pts.extend(self.inverse_bound(v.channel, marks).tolist())
        pts = np.unique(np.clip(pts, 0.0, top))
        return pts


def noise_derivatives(s, noise, order):
    s = np.asarray(s, dtype=float)
    base = np.exp(-s * noise)
    return np.stack([(-noise) ** i * base for i in range(order + 1)], axis=-1)


def leibniz(parts, k):
    """k-th derivative of a product from each factor's derivatives."""
    total = 0.0
    for idx in _compositions(k, len(parts)):
        term = float(_multinomial(idx))
        for part, i in zip(parts, idx):
            term = term * part[..., i]
        total = total + term
    return total


@lru_cache(maxsize=64)
def _radial(env, cfg, dep):
    return _Radial(env, cfg, dep)


def _scalar(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


# ---------------------------------------------------------------------------
# public API: distances and association


def interference_bounds(t_star, r_star, cfg, dep):
    """Exclusion radii for LOS and NLOS interferers given the serving link."""
    if np.any(np.asarray(r_star) > cone_radius(cfg, dep) * (1 + 1e-12)):
        raise ValidationError("serving distance lies outside the antenna cone")
    gamma = dep.height_m
    g2 = gamma**2
    r = np.asarray(r_star, dtype=float)
    if t_star is LOS:
        c_n = np.sqrt(np.maximum(0.0, (r * r + g2) ** (cfg.alpha_los / cfg.alpha_nlos) - g2))
        return InterferenceBounds(_scalar(r), _scalar(c_n))
    c_l = np.minimum(cone_radius(cfg, dep),
                     np.sqrt(np.maximum(0.0, (r * r + g2) ** (cfg.alpha_nlos / cfg.alpha_los) - g2)))
    return InterferenceBounds(_scalar(c_l), _scalar(r))


def pdf_hotspot_distance(r, r_max):
    r = np.asarray(r, dtype=float)
    return _scalar(np.where((r >= 0) & (r <= r_max), 2.0 * r / r_max**2, 0.0))


def pdf_hotspot_joint(r, j, env, dep):
    """Joint density of the hotspot-UAV distance and its channel type ``j``."""
    return _scalar(channel_probability(r, j, env, dep.height_m)
                   * pdf_hotspot_distance(r, dep.hotspot_radius_m))


def pdf_nearest(r, j, env, dep):
    """Density of the distance to the nearest type-``j`` UAV of the PPP."""
    rad = _radial(env, RADIO_DEFAULT, dep)
    r = np.asarray(r, dtype=float)
    lam_j = rad.lam * rad.p_at(r, j)
    return _scalar(2.0 * math.pi * lam_j * r * np.exp(-rad.void_exponent(r, j)))


def nearest_void_mass(j, env, dep, r_upper=np.inf):
    """``1 - exp(-2 pi int_0^r_upper lambda_j(r) r dr)``: the total mass of
    :func:`pdf_nearest` on ``[0, r_upper]``."""
    rad = _radial(env, RADIO_DEFAULT, dep)
    if np.isinf(r_upper):
        if j is NLOS:
            return 1.0
        # LOS thinning decays super-exponentially; extend until negligible
        r_upper = 1.0 / env.grid_rate
        while rad.p_at(r_upper, LOS) > 1e-300 and r_upper < 1e6:
            r_upper *= 2.0
    return float(1.0 - np.exp(-rad.void_exponent(r_upper, j)))


def assoc_prob_hotspot(t_star, r_star, env, cfg, dep):
    """Probability that no PPP UAV beats a hotspot server at ``r_star``."""
    rad = _radial(env, cfg, dep)
    c = interference_bounds(t_star, r_star, cfg, dep)
    return _scalar(np.exp(-rad.void_exponent(c.c_los, LOS) - rad.void_exponent(c.c_nlos, NLOS)))


def prob_b0(t_star, r_star, env, cfg, dep):
    rad = _radial(env, cfg, dep)
    c = interference_bounds(t_star, r_star, cfg, dep)
    return _scalar(rad.b0(c.c_los, c.c_nlos))


def assoc_prob_nearest(j, r_star, env, cfg, dep):
    """Probability that the nearest type-``j`` UAV at ``r_star`` serves the user."""
    rad = _radial(env, cfg, dep)
    c = interference_bounds(j, r_star, cfg, dep)
    out = np.exp(-rad.void_exponent(c.of(j.other), j.other))
    if dep.strategy is Strategy.HOTSPOT:
        out = out * rad.b0(c.c_los, c.c_nlos)
    return _scalar(out)


# ---------------------------------------------------------------------------
# public API: Laplace transforms


def g_kernel(r0, s, j, cfg, dep):
    """Gamma-fading Laplace kernel ``E[exp(-s H eta l(r0))]``."""
    return g_kernel_deriv(0, r0, s, j, cfg, dep)


def g_kernel_deriv(p, r0, s, j, cfg, dep):
    """p-th s-derivative of :func:`g_kernel`."""
    m = cfg.m(j)
    c = antenna_gain(r0, cfg, dep) * pathloss(r0, dep.height_m, cfg.alpha(j)) / m
    c = np.asarray(c, dtype=float)
    s = np.asarray(s, dtype=float)
    out = (-c) ** p * pochhammer(m, p) * (1.0 + c * s) ** (-m - p)
    return _scalar(out)


def laplace_i0(s, t_star, r_star, env, cfg, dep):
    return laplace_i0_deriv(0, s, t_star, r_star, env, cfg, dep)


def laplace_i0_deriv(i, s, t_star, r_star, env, cfg, dep):
    """i-th derivative of the Laplace transform of hotspot-UAV interference.

    Conditioned on the hotspot UAV being weaker than a ``t_star`` server at
    ``r_star``. Returns 1 (or 0 for ``i >= 1``) when that event has
    probability below ``1e-12``.
    """
    rad = _radial(env, cfg, dep)
    c = interference_bounds(t_star, r_star, cfg, dep)
    b0 = float(rad.b0(c.c_los, c.c_nlos))
    if b0 < B0_FLOOR:
        return 1.0 if i == 0 else 0.0
    if i > 0 and s <= 0:
        raise ValueError("derivatives of the hotspot transform need s > 0")
    terms = rad.hotspot_terms(np.asarray(c.c_los, dtype=float), np.asarray(c.c_nlos, dtype=float),
                              np.asarray(s, dtype=float), i)
    return float(terms[..., i]) / b0


def hotspot_kernel_integral(s, j, c, env, cfg, dep):
    """``int_c^{min(r_max, u)} g(r, s, j) P_j(r) 2 r dr`` via the 2F1 closed form.

    The part of the hotspot-interference integral that depends on ``s``;
    zero when ``c`` is beyond the cone or the hotspot.
    """
    rad = _radial(env, cfg, dep)
    top = min(rad.r_max, rad.u)
    if c >= top:
        return 0.0
    area, series = rad.kernel_moments(j, np.array(float(c)), top, np.array(float(s)), 0)
    return float(area + series[..., 0])


def laplace_ppp(s, j, bounds, env, cfg, dep, method="closed", quad=None):
    return laplace_ppp_deriv(0, s, j, bounds, env, cfg, dep, method=method, quad=quad)


def laplace_ppp_deriv(n, s, j, bounds, env, cfg, dep, method="closed", quad=None):
    """n-th derivative of the Laplace transform of type-``j`` PPP interference.

    ``method="closed"`` integrates the fading kernel through its
    hypergeometric closed form plateau by plateau; ``method="quadrature"``
    integrates it numerically with adaptive Gauss-Kronrod on each plateau.
    """
    rad = _radial(env, cfg, dep)
    c = float(bounds.of(j))
    if c >= rad.u:
        return 1.0 if n == 0 else 0.0
    if method == "quadrature" or (s <= 0 and n > 0):
        f = np.array([_ppp_log_deriv_quad(rad, j, c, s, p, quad or QuadratureSpec())
                      for p in range(n + 1)])
    elif method == "closed":
        f = rad.ppp_log_derivs(j, np.array(c), np.array(float(s)), n)
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(exp_derivatives(f)[..., n])


def _ppp_log_deriv_quad(rad, j, c, s, p, quad):
    cfg, dep = rad.cfg, rad.dep
    lam = rad.lam

    def integrand(r):
        pj = rad.p_at(r, j)
        if p == 0:
            return -2.0 * math.pi * lam * pj * (1.0 - g_kernel(r, s, j, cfg, dep)) * r
        return 2.0 * math.pi * lam * pj * g_kernel_deriv(p, r, s, j, cfg, dep) * r

    edges = [c, rad.u] + [e for e in los_breakpoints(rad.env, rad.u) if e > c]
    return adaptive_quad(integrand, edges, quad)


def laplace_total_deriv(k, s, serving, r_star, env, cfg, dep):
    """k-th s-derivative of the Laplace transform of interference plus noise."""
    t = serving.channel
    bounds = interference_bounds(t, r_star, cfg, dep)
    parts = []
    for j in (LOS, NLOS):
        parts.append(np.array([laplace_ppp_deriv(i, s, j, bounds, env, cfg, dep) for i in range(k + 1)]))
    parts.append(noise_derivatives(s, cfg.noise_w, k))
    if dep.strategy is Strategy.HOTSPOT and not serving.is_hotspot:
        parts.append(np.array([laplace_i0_deriv(i, s, t, r_star, env, cfg, dep) for i in range(k + 1)]))
    return float(leibniz(parts, k))


# ---------------------------------------------------------------------------
# public API: coverage and spectral efficiency


def _classes(dep):
    if dep.strategy is Strategy.HOTSPOT:
        return HOTSPOT_CLASSES + NEAREST_CLASSES
    if dep.strategy is Strategy.PPP:
        return NEAREST_CLASSES
    raise ValidationError(f"no analytic model for strategy {dep.strategy.value!r}")


def coverage_curve(env, cfg, dep, thetas, quad=QuadratureSpec(), by_class=False):
    """Coverage probability at each linear SINR threshold in ``thetas``."""
    rad = _radial(env, cfg, dep)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    if np.any(thetas <= 0):
        raise ValidationError("SINR thresholds must be positive")
    out = {}
    for v in _classes(dep):
        out[v] = np.atleast_1d(adaptive_quad(lambda r: rad.class_integrand(v, r, thetas),
                                             rad.class_edges(v), quad))
    if by_class:
        return out
    return np.clip(sum(out.values()), 0.0, 1.0)


def coverage_probability(env, cfg, dep, quad=QuadratureSpec()):
    """Probability that the typical user's SINR exceeds ``cfg.threshold_linear``."""
    return float(coverage_curve(env, cfg, dep, [cfg.threshold_linear], quad)[0])


def class_masses(env, cfg, dep, quad=QuadratureSpec()):
    """Probability of each serving class, ``int A_v f_v dr``."""
    rad = _radial(env, cfg, dep)
    out = {}
    for v in _classes(dep):
        out[v] = float(adaptive_quad(lambda r: rad.class_integrand(v, r, [1.0], False)[:, 0],
                                     rad.class_edges(v), quad))
    return out


def void_probability(env, cfg, dep):
    """Probability that no UAV illuminates the typical user."""
    rad = _radial(env, cfg, dep)
    p = math.exp(-math.pi * rad.lam * rad.u**2)
    if dep.strategy is Strategy.HOTSPOT:
        p *= max(0.0, 1.0 - (rad.u / rad.r_max) ** 2)
    return p


def spectral_efficiency(env, cfg, dep, quad=QuadratureSpec(), n_grid=64, tol=0.01,
                        theta_range=(1e-3, 1e6), max_grid=1024):
    """Mean ``log2(1 + SINR)`` from the coverage curve.

    Trapezoid rule in ``t = log2(1 + theta)`` over a log-spaced threshold
    grid (plus ``t = 0`` where coverage equals the probability that a
    server exists), doubled until the estimate moves by less than ``tol``.
    The grid ends where coverage drops below ``SE_CUTOFF``; if it is still
    above that at ``theta_range[1]`` the range is widened by two decades at
    a time.
    """
    p0 = sum(class_masses(env, cfg, dep, quad).values())
    lo, hi = math.log10(theta_range[0]), math.log10(theta_range[1])
    # widen the grid while the tail above it still carries coverage
    while hi < SE_MAX_LOG10_THETA and coverage_curve(env, cfg, dep, [10.0**hi], quad)[0] >= SE_CUTOFF:
        hi += 2.0
    n = int(math.ceil(n_grid * (hi - lo) / (math.log10(theta_range[1]) - lo)))
    prev = None
    while True:
        thetas = np.logspace(lo, hi, n)
        pc = coverage_curve(env, cfg, dep, thetas, quad)
        t = np.concatenate([[0.0], np.log2(1.0 + thetas)])
        p = np.concatenate([[p0], pc])
        below = np.nonzero(p < SE_CUTOFF)[0]
        if below.size:
            t, p = t[: below[0] + 1], p[: below[0] + 1]
        se = float(np.trapezoid(p, t))
        if prev is not None and abs(se - prev) < tol:
            return se
        if 2 * n > max_grid * max(1.0, (hi - lo) / 9.0):
            return se
        prev, n = se, 2 * n
