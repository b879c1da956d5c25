"""The entropy density ``F(x) = x ln x`` and its difference-quotient family.

For a fixed anchor ``a > 0``::

    G1_a(x) = (F(x) - F(a)) / (x - a)
    G0_a(x) = integral of G1_a from a to x
    G2_a(x) = d/dx G1_a(x)

Writing ``r = (x - a) / a`` the quotient splits exactly as
``G1_a(x) = ln x + log1p(r) / r``.  Since ``G1`` is symmetric in its two
arguments it is evaluated with the roles chosen so that ``r >= 0``; then the
``log1p`` term is free of cancellation and the naive ``0/0`` near ``x = a``
only matters inside a narrow band ``|r| <= delta_rel`` where a Taylor series
is used.
All functions broadcast over numpy arrays.
"""

from __future__ import annotations

import numpy as np
from scipy import integrate, special

DELTA_REL = 1e-7
_G2_SERIES_BAND = 1e-2


def _positive(*arrays):
    out = [np.asarray(v, dtype=float) for v in arrays]
    for v in out:
        if np.any(~(v > 0)):
            raise ValueError("log potentials are defined for strictly positive arguments only")
    return out


def F(x):
    (x,) = _positive(x)
    return x * np.log(x)


def _log1p_ratio(r):
    """``log1p(r) / r`` with the removable singularity at ``r = 0`` filled by 1."""
    r = np.asarray(r, dtype=float)
    safe = np.where(r == 0.0, 1.0, r)
    return np.where(r == 0.0, 1.0, np.log1p(safe) / safe)


def G1(a, x, delta_rel: float = DELTA_REL):
    """Difference quotient ``(x ln x - a ln a) / (x - a)``; equals ``ln a + 1`` at ``x = a``."""
    a, x = _positive(a, x)
    r = (x - a) / a
    # G1 is symmetric in (a, x); anchoring at the larger argument keeps the
    # log1p argument nonnegative and avoids cancellation when x << a
    lo, hi = np.minimum(a, x), np.maximum(a, x)
    quotient = np.log(hi) + _log1p_ratio((hi - lo) / lo)
    series = np.log(a) + 1.0 + r / 2.0 - r * r / 6.0
    out = np.where(np.abs(r) <= delta_rel, series, quotient)
    return out[()] if out.ndim == 0 else out


def G2(a, x):
    """Derivative of :func:`G1` in ``x``; nonnegative for every positive pair."""
    a, x = _positive(a, x)
    r = (x - a) / a
    small = np.abs(r) < _G2_SERIES_BAND
    rs = np.where(small, r, 0.0)
    # (r - log1p(r)) / r^2 = sum_k (-1)^k r^k / (k + 2)
    series = sum((-rs) ** k / (k + 2) for k in range(9))
    rb = np.where(small, 1.0, r)
    closed = (rb - np.log1p(rb)) / (rb * rb)
    out = np.where(small, series, closed) / a
    return out[()] if out.ndim == 0 else out


def G0(a, x):
    """Antiderivative of ``G1_a`` vanishing at ``a``, in closed form.

    ``int_a^x ln t dt`` plus ``a * int_0^r log1p(u)/u du = -a Li2(-r)``, and
    ``Li2(z) = spence(1 - z)`` in scipy's convention.
    """
    a, x = _positive(a, x)
    r = (x - a) / a
    out = (F(x) - x) - (F(a) - a) - a * special.spence(1.0 + r)
    return out[()] if out.ndim == 0 else out


def G0_quad(a: float, x: float, tol: float = 1e-12) -> float:
    """``G0`` by adaptive quadrature of ``G1``; scalar only, slow, used as a check."""
    a, x = float(a), float(x)
    _positive(a, x)
    if x == a:
        return 0.0
    lo, hi = min(a, x), max(a, x)
    val, _ = integrate.quad(lambda t: float(G1(a, t)), lo, hi, epsabs=tol, epsrel=1e-13, limit=200)
    return val if x > a else -val


def G1_split(a, x, delta_rel: float = DELTA_REL):
    """Split ``G1_a(x)`` into ``(ln x, a (ln x - ln a) / (x - a))``.

    Inside ``|x - a| <= delta_rel * a`` the quotient is replaced by
    ``2a / (x + a)``, which avoids the singular division in iterative solvers.
    """
    a, x = _positive(a, x)
    lead = np.log(x)
    r = (x - a) / a
    quotient = np.where(np.abs(x - a) <= delta_rel * a, 2.0 * a / (x + a), _log1p_ratio(r))
    if lead.ndim == 0:
        return lead[()], quotient[()]
    return lead, quotient
