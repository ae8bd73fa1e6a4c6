"""Special functions used by the analytic model.

Only the real, non-positive argument branch of the Gauss hypergeometric
function is needed (every call site has the form
``2F1(k, 2/alpha; 1 + 2/alpha; -x)`` with ``x >= 0``), so this module does
not attempt general analytic continuation.
"""

import math
from typing import NamedTuple

import numpy as np

from .errors import NumericFailure

SERIES_RTOL = 1e-16
SERIES_MAX_TERMS = 10_000

# z in [-_DIRECT_LIMIT, 0]            : defining power series
# z in [-_PFAFF_LIMIT, -_DIRECT_LIMIT) : Pfaff, series argument z/(z-1) <= 2/3
# z < -_PFAFF_LIMIT                    : 1/z connection, series argument >= -1/2
# (integer b - a in the last region goes through a symmetric limit)
_DIRECT_LIMIT = 0.5
_PFAFF_LIMIT = 2.0
_DEGENERATE_EPS = 1e-4


class Hyp2F1Args(NamedTuple):
    a: float
    b: float
    c: float
    z: float


def pochhammer(x, n):
    """Rising factorial ``x (x+1) ... (x+n-1)``; 1 for ``n == 0``."""
    if n < 0:
        raise ValueError("pochhammer order must be non-negative")
    out = 1.0
    for i in range(n):
        out *= x + i
    return out


def binomial(n, k):
    return math.comb(n, k)


def _rgamma(x):
    """1/Gamma(x), zero at the poles."""
    if x <= 0 and x == math.floor(x):
        return 0.0
    return 1.0 / math.gamma(x)


def upper_gamma_ratio(m, x):
    """Regularised upper incomplete gamma ``Gamma(m, x) / Gamma(m)`` for integer m.

    Uses the finite sum ``exp(-x) * sum_{k<m} x**k / k!``. Accepts scalar or
    array ``x``.
    """
    if int(m) != m or m < 1:
        raise ValueError(f"upper_gamma_ratio needs a positive integer order, got {m}")
    x = np.asarray(x, dtype=float)
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, int(m)):
        term = term * x / k
        total = total + term
    # the rounded sum can exceed exp(x) by an ulp near x = 0
    out = np.minimum(np.exp(-x) * total, 1.0)
    return out if out.ndim else float(out)


def _series(a, b, c, z, args):
    """Defining power series, vectorised over ``z``. Requires |z| < 1."""
    out = np.ones_like(z)
    idx = np.arange(z.size)
    zz = z.ravel().copy()
    total = np.ones_like(zz)
    term = np.ones_like(zz)
    for n in range(SERIES_MAX_TERMS):
        term *= ((a + n) * (b + n) / ((c + n) * (n + 1.0))) * zz
        total += term
        done = np.abs(term) <= SERIES_RTOL * np.abs(total)
        if done.all():
            out.flat[idx] = total
            return out
        if n % 8 == 7 and done.any():
            out.flat[idx[done]] = total[done]
            keep = ~done
            idx, zz, total, term = idx[keep], zz[keep], total[keep], term[keep]
    raise NumericFailure(
        f"2F1 series did not converge in {SERIES_MAX_TERMS} terms", context=args
    )


def _check_c(c):
    if c <= 0 and c == math.floor(c):
        raise ValueError(f"2F1 undefined for c = {c} (non-positive integer)")


def gauss_2f1(a, b, c, z):
    """Gauss hypergeometric function ``2F1(a, b; c; z)`` for real ``z < 1/2``.

    Scalar or array ``z``; arrays are evaluated element-wise with a shared
    parameter triple. Large negative arguments go through the Pfaff
    transformation or, beyond ``z = -2``, the ``1/z`` connection formula so
    that every power series is evaluated at ``|argument| <= 2/3``.

    Raises
    ------
    NumericFailure
        If a series fails to reach relative precision ``1e-16`` within
        10 000 terms. The exception carries the argument tuple.
    """
    _check_c(c)
    zarr = np.asarray(z, dtype=float)
    scalar = zarr.ndim == 0
    zarr = np.atleast_1d(zarr)
    if np.any(zarr >= _DIRECT_LIMIT) or np.any(np.isnan(zarr)):
        raise ValueError("gauss_2f1 only supports real z < 1/2")
    out = np.empty_like(zarr)

    direct = zarr >= -_DIRECT_LIMIT
    if np.any(direct):
        zd = zarr[direct]
        out[direct] = _series(a, b, c, zd, Hyp2F1Args(a, b, c, _first(zd)))

    pfaff = ~direct & (zarr >= -_PFAFF_LIMIT)
    if np.any(pfaff):
        zp = zarr[pfaff]
        w = zp / (zp - 1.0)
        out[pfaff] = (1.0 - zp) ** (-a) * _series(
            a, c - b, c, w, Hyp2F1Args(a, b, c, _first(zp))
        )

    recip = ~direct & ~pfaff
    if np.any(recip):
        zr = zarr[recip]
        if float(b - a).is_integer():
            out[recip] = _reciprocal_degenerate(a, b, c, zr)
        else:
            out[recip] = _reciprocal(a, b, c, zr)

    return float(out[0]) if scalar else out


def _first(x):
    return float(x.flat[0]) if x.size else float("nan")


def _reciprocal(a, b, c, z):
    """``1/z`` connection formula for z < -1, b - a not an integer."""
    args = Hyp2F1Args(a, b, c, _first(z))
    x = 1.0 / z
    gc = math.gamma(c)
    k1 = gc * math.gamma(b - a) * _rgamma(b) * _rgamma(c - a)
    k2 = gc * math.gamma(a - b) * _rgamma(a) * _rgamma(c - b)
    out = np.zeros_like(z)
    if k1 != 0.0:
        out += k1 * (-z) ** (-a) * _series(a, a - c + 1.0, a - b + 1.0, x, args)
    if k2 != 0.0:
        out += k2 * (-z) ** (-b) * _series(b, b - c + 1.0, b - a + 1.0, x, args)
    return out


def _reciprocal_degenerate(a, b, c, z):
    """``1/z`` formula when ``b - a`` is an integer.

    The two connection terms have poles that cancel; evaluate at
    ``b +- eps`` and ``b +- 2 eps`` and Richardson-extrapolate the symmetric
    means, which removes the ``eps**2`` error term.
    """
    eps = _DEGENERATE_EPS
    f1 = 0.5 * (_reciprocal(a, b + eps, c, z) + _reciprocal(a, b - eps, c, z))
    f2 = 0.5 * (_reciprocal(a, b + 2 * eps, c, z) + _reciprocal(a, b - 2 * eps, c, z))
    return (4.0 * f1 - f2) / 3.0


def gauss_2f1_param_deriv(a, b, c, z, p):
    """p-th derivative in ``z`` of ``2F1(a, b; c; z)``.

    Closed form ``(a)_p (b)_p / (c)_p * 2F1(a+p, b+p; c+p; z)``.
    """
    if p < 0:
        raise ValueError("derivative order must be non-negative")
    if p == 0:
        return gauss_2f1(a, b, c, z)
    pref = pochhammer(a, p) * pochhammer(b, p) / pochhammer(c, p)
    return pref * gauss_2f1(a + p, b + p, c + p, z)
