"""Cylinder functions (Bessel J, Y and outgoing Hankel H1) for the solver.

The band-structure assembly needs whole sequences J_0..J_N, Y_0..Y_N at a
common argument, their derivatives, and evaluation slightly off the real
axis for complex root refinement.  Everything here is built from the three
classical schemes that are stable in the directions we use them:

* ``J_n``   -- Miller's downward recurrence with trailing normalisation
               (sum rule ``J_0 + 2*sum J_2m = 1``), stable for all n >= 0.
* ``Y_0/Y_1`` -- ascending series for small argument, Hankel asymptotic
               expansion for large argument; higher orders by the upward
               three-term recurrence, which is stable because Y grows with
               the order.
* complex argument -- ascending power series for J and for Y_0/Y_1 plus the
               same upward recurrence.  Cancellation in the alternating series
               grows like exp(|z|), so the domain is capped at |z| <= 12
               (absolute accuracy ~1e-11 at the cap, machine precision for
               the |z| of order one that root refinement actually uses) and
               |Im z| <= 1.

Derivatives use ``C_n' = (C_{n-1} - C_{n+1}) / 2`` and ``C_0' = -C_1``.
"""

from __future__ import annotations

import numpy as np

EULER_GAMMA: float = 0.5772156649015329

# Ascending series for Y0/Y1 below this argument, asymptotic expansion above.
# At the crossover both branches are good to ~1e-11 absolute: the series loses
# ~5 digits to alternating-term cancellation, the optimally truncated
# asymptotic tail is O(exp(-2x)).
_Y_SERIES_CUTOFF: float = 13.5

# Magnitude guard for the unnormalised downward recurrence.
_RESCALE_LIMIT: float = 1e250

__all__ = [
    "bessel_j_seq",
    "bessel_y_seq",
    "hankel1",
    "hankel1_seq",
    "cyl_derivative",
    "bessel_j_seq_complex",
    "bessel_y_seq_complex",
    "hankel1_seq_complex",
]


# ---------------------------------------------------------------------------
# real argument: J by downward recurrence
# ---------------------------------------------------------------------------

def bessel_j_seq(order_max: int, x):
    """Sequence ``J_0(x) .. J_order_max(x)`` by Miller's downward recurrence.

    Parameters
    ----------
    order_max : int
        Highest order to return (>= 0).
    x : float or ndarray
        Argument(s), real and >= 0.  ``x = 0`` yields the exact limit
        ``J_n(0) = delta_{n0}``.

    Returns
    -------
    ndarray
        Shape ``(order_max + 1,)`` for scalar ``x``, else
        ``(order_max + 1, len(x))``.
    """
    if order_max < 0:
        raise ValueError("order_max must be >= 0")
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    if x_arr.ndim != 1:
        raise ValueError("x must be a scalar or 1-d array")
    if np.any(x_arr < 0.0) or not np.all(np.isfinite(x_arr)):
        raise ValueError("arguments must be finite and >= 0")

    out = np.zeros((order_max + 1, x_arr.size))
    # Below ~1e-30 the exact J_n differ from the x = 0 limit delta_{n0} by
    # less than 1e-30 absolute; short-circuiting also keeps 1/x finite.
    zero = x_arr <= 1e-30
    out[0, zero] = 1.0
    live = ~zero
    if np.any(live):
        out[:, live] = _miller_block(order_max, x_arr[live])
    if np.isscalar(x) or np.asarray(x).ndim == 0:
        return out[:, 0]
    return out


def _miller_block(order_max: int, x: np.ndarray) -> np.ndarray:
    """Downward recurrence for strictly positive arguments (batch)."""
    xmax = float(np.max(x))
    # Start far enough above both the order and the turning point n ~ x that
    # the neglected J_start is below double precision after normalisation.
    start = int(max(order_max, np.ceil(xmax)) + 16 + 12.0 * max(1.0, xmax) ** (1.0 / 3.0))
    start += start % 2  # even start keeps the normalisation bookkeeping tidy

    inv_x = 1.0 / x
    jp = np.zeros_like(x)          # J_{m+1} (unnormalised)
    jc = np.full_like(x, 1e-30)    # J_m     (unnormalised)
    norm = np.zeros_like(x)        # J_0 + 2*sum_{m even > 0} J_m
    out = np.zeros((order_max + 1, x.size))

    for m in range(start, -1, -1):
        if m <= order_max:
            out[m] = jc
        if m % 2 == 0:
            norm += jc if m == 0 else 2.0 * jc
        if m > 0:
            jm = (2.0 * m) * inv_x * jc - jp
            jp, jc = jc, jm
            big = np.abs(jc) > _RESCALE_LIMIT
            if np.any(big):
                scale = np.where(big, 1e-250, 1.0)
                jc *= scale
                jp *= scale
                norm *= scale
                out[:, big] *= 1e-250
    return out / norm


# ---------------------------------------------------------------------------
# real argument: Y from series / asymptotics plus upward recurrence
# ---------------------------------------------------------------------------

def _y01_series(x):
    """Ascending series for (Y_0, Y_1); accurate for 0 < x <= ~14."""
    q = (x / 2.0) ** 2
    lg = np.log(x / 2.0) + EULER_GAMMA

    # J_0, J_1 to full precision alongside the harmonic-number sums.
    j0 = np.ones_like(x)
    j1 = np.ones_like(x)
    s0 = np.zeros_like(x)   # sum_{m>=1} (-1)^{m+1} H_m q^m / (m!)^2
    s1 = np.ones_like(x)    # sum_{m>=0} (-1)^m (H_m + H_{m+1}) q^m / (m!(m+1)!)
    t0 = np.ones_like(x)    # (-q)^m / (m!)^2
    t1 = np.ones_like(x)    # (-q)^m / (m!(m+1)!)
    h = 0.0
    for m in range(1, 80):
        h += 1.0 / m
        t0 = t0 * (-q) / (m * m)
        t1 = t1 * (-q) / (m * (m + 1))
        j0 = j0 + t0
        j1 = j1 + t1
        s0 = s0 - t0 * h
        s1 = s1 + t1 * (h + h + 1.0 / (m + 1))
        if np.all(np.abs(t0) * (h + 1.0) < 1e-18):
            break
    j1 = (x / 2.0) * j1
    y0 = (2.0 / np.pi) * (lg * j0 + s0)
    y1 = (2.0 / np.pi) * (lg * j1 - 1.0 / x - (x / 4.0) * s1)
    return y0, y1


def _y01_asymptotic(x):
    """Hankel asymptotic expansion for (Y_0, Y_1); accurate for x >= ~13.

    ``Y_nu = sqrt(2/(pi x)) * (P sin(chi) + Q cos(chi))`` with the standard
    modulus/phase series ``P = sum (-1)^j t_{2j}``, ``Q = sum (-1)^j t_{2j+1}``
    where ``t_m = prod_{i<=m}(mu - (2i-1)^2) / (m! (8x)^m)``, ``mu = 4 nu^2``.
    Terms are added until the smallest one (superasymptotic truncation).
    """
    y = np.empty((2, x.size))
    for i, nu in enumerate((0, 1)):
        mu = 4.0 * nu * nu
        p = np.ones_like(x)
        q = np.zeros_like(x)
        term = np.ones_like(x)
        min_mag = np.full_like(x, np.inf)
        for m in range(1, 60):
            term = term * (mu - (2 * m - 1) ** 2) / (m * 8.0 * x)
            mag = np.abs(term)
            # Term magnitudes are unimodal in m; once a column passes its
            # smallest term, freeze it (superasymptotic truncation).
            shrinking = mag < min_mag
            if not np.any(shrinking):
                break
            min_mag = np.minimum(min_mag, mag)
            signed = np.where(shrinking, term, 0.0)
            sgn = 1.0 if m % 4 in (0, 1) else -1.0
            if m % 2 == 1:
                q = q + sgn * signed
            else:
                p = p + sgn * signed
            if np.all(mag < 1e-18):
                break
        chi = x - (0.5 * nu + 0.25) * np.pi
        y[i] = np.sqrt(2.0 / (np.pi * x)) * (p * np.sin(chi) + q * np.cos(chi))
    return y[0], y[1]


def bessel_y_seq(order_max: int, x):
    """Sequence ``Y_0(x) .. Y_order_max(x)``.

    ``Y_0``/``Y_1`` come from the ascending series (x <= 11) or the Hankel
    asymptotic expansion (x > 11); higher orders use the upward recurrence.
    Near the origin high orders overflow to ``-inf`` -- that is reported
    as-is rather than silently clipped.

    Parameters
    ----------
    order_max : int
        Highest order to return (>= 0).
    x : float or ndarray
        Argument(s), real and > 0.

    Returns
    -------
    ndarray
        Shape ``(order_max + 1,)`` or ``(order_max + 1, len(x))``.
    """
    if order_max < 0:
        raise ValueError("order_max must be >= 0")
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x_arr <= 0.0) or not np.all(np.isfinite(x_arr)):
        raise ValueError("Y_n requires x > 0")

    y0 = np.empty_like(x_arr)
    y1 = np.empty_like(x_arr)
    small = x_arr <= _Y_SERIES_CUTOFF
    if np.any(small):
        y0[small], y1[small] = _y01_series(x_arr[small])
    if np.any(~small):
        y0[~small], y1[~small] = _y01_asymptotic(x_arr[~small])

    out = np.empty((order_max + 1, x_arr.size))
    out[0] = y0
    if order_max >= 1:
        out[1] = y1
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, order_max):
            nxt = (2.0 * n / x_arr) * out[n] - out[n - 1]
            # once a column has overflowed, carry the infinity down unchanged
            nxt = np.where(np.isfinite(out[n]), nxt, out[n])
            out[n + 1] = nxt
    if np.isscalar(x) or np.asarray(x).ndim == 0:
        return out[:, 0]
    return out


# ---------------------------------------------------------------------------
# Hankel functions and derivatives
# ---------------------------------------------------------------------------

def hankel1_seq(order_max: int, x):
    """Sequence ``H1_0(x) .. H1_order_max(x)`` with ``H1_n = J_n + i Y_n``."""
    return bessel_j_seq(order_max, x) + 1j * bessel_y_seq(order_max, x)


def hankel1(n: int, x: float) -> complex:
    """Outgoing Hankel function ``H^(1)_n(x)`` for a single real order/argument."""
    if n < 0:
        sign = -1.0 if n % 2 else 1.0
        return sign * hankel1(-n, x)
    return complex(hankel1_seq(n, float(x))[n])


def cyl_derivative(kind: str, n: int, x: float):
    """Derivative ``C_n'(x)`` for ``C = J`` or ``C = H1``.

    Uses ``C_n' = (C_{n-1} - C_{n+1}) / 2`` (and ``C_0' = -C_1``), the same
    three-term structure as the recurrences, so residual checks close exactly.
    Returns ``float`` for ``kind="J"`` and ``complex`` for ``kind="H1"``.
    """
    if n < 0:
        raise ValueError("order must be >= 0")
    if kind == "J":
        seq = bessel_j_seq(n + 1, float(x))
    elif kind == "H1":
        seq = hankel1_seq(n + 1, float(x))
    else:
        raise ValueError("kind must be 'J' or 'H1'")
    if n == 0:
        return -seq[1]
    return 0.5 * (seq[n - 1] - seq[n + 1])


# ---------------------------------------------------------------------------
# complex argument (ascending series; for root refinement near the real axis)
# ---------------------------------------------------------------------------

def _check_complex_domain(z: complex) -> complex:
    z = complex(z)
    if abs(z.imag) > 1.0 + 1e-12 or abs(z) > 12.0:
        raise ValueError(
            "complex cylinder-function evaluation is supported for |Im z| <= 1 and |z| <= 12"
        )
    if z == 0:
        raise ValueError("complex evaluation requires z != 0")
    return z


def bessel_j_seq_complex(order_max: int, z: complex) -> np.ndarray:
    """``J_0(z) .. J_order_max(z)`` by the ascending power series."""
    z = _check_complex_domain(z)
    q = 0.25 * z * z
    out = np.empty(order_max + 1, dtype=complex)
    prefac = 1.0 + 0.0j
    for n in range(order_max + 1):
        term = prefac
        total = term
        for m in range(1, 80):
            term = term * (-q) / (m * (n + m))
            total += term
            if abs(term) < 1e-18 * max(1.0, abs(total)):
                break
        out[n] = total
        prefac = prefac * (0.5 * z) / (n + 1)
    return out


def bessel_y_seq_complex(order_max: int, z: complex) -> np.ndarray:
    """``Y_0(z) .. Y_order_max(z)`` via complex series for Y0/Y1 + upward recurrence."""
    z = _check_complex_domain(z)
    q = 0.25 * z * z
    lg = np.log(0.5 * z) + EULER_GAMMA

    j = bessel_j_seq_complex(max(1, order_max), z)
    s0 = 0.0 + 0.0j
    s1 = 1.0 + 0.0j
    term0 = 1.0 + 0.0j
    term1 = 1.0 + 0.0j
    h = 0.0
    for m in range(1, 80):
        h += 1.0 / m
        term0 = term0 * (-q) / (m * m)
        s0 -= term0 * h
        term1 = term1 * (-q) / (m * (m + 1))
        s1 += term1 * (h + h + 1.0 / (m + 1))
        if abs(term0) * (h + 1.0) < 1e-18:
            break
    y0 = (2.0 / np.pi) * (lg * j[0] + s0)
    y1 = (2.0 / np.pi) * (lg * j[1] - 1.0 / z - (z / 4.0) * s1)

    out = np.empty(order_max + 1, dtype=complex)
    out[0] = y0
    if order_max >= 1:
        out[1] = y1
    for n in range(1, order_max):
        out[n + 1] = (2.0 * n / z) * out[n] - out[n - 1]
    return out


def hankel1_seq_complex(order_max: int, z: complex) -> np.ndarray:
    """``H1_0(z) .. H1_order_max(z)`` for complex argument."""
    return bessel_j_seq_complex(order_max, z) + 1j * bessel_y_seq_complex(order_max, z)
