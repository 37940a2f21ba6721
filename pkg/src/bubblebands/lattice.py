"""Quasi-periodic lattice sums of Hankel functions over the square lattice.

Computes, for Bloch vector ``alpha`` and wavenumber ``k``,

    Q_n(k, alpha) = sum over m in Z^2, m != 0 of
                    H_n^(1)(k |m|) e^{i n arg(m)} e^{i m . alpha},

the quantity coupling a scatterer to its periodic images in the
cylindrical-harmonic basis.  The defining series converges only
conditionally; production evaluation uses an Ewald split with splitting
parameter ``eta``:

* a reciprocal (spectral) part over ``p = 2 pi nu + alpha`` with Gaussian
  factors ``exp((k^2 - |p|^2)/(4 eta^2)) / (k^2 - |p|^2)`` -- this carries
  the poles at the empty-lattice resonances ``k = |p|``;
* a direct (spatial) part over nearby lattice points, with radial functions
  built from upper incomplete gamma functions ``Gamma(s - j, eta^2 r^2)``;
* a central correction for ``n = 0`` from the regularised origin term.

Both parts decay super-exponentially, so small fixed windows (|.|_inf <= 5)
deliver ~1e-12 absolute accuracy for the wavenumbers used here; the windows
are widened once automatically if the internal error estimate misses the
requested tolerance.  Evaluation is organised around per-``alpha`` engines
that precompute every k-independent quantity, making a full table of
Q_{-order_max}..Q_{order_max} an O(10^5)-flop operation -- cheap enough to
sit inside frequency scans.  Valid also slightly off the real k axis
(Re k > 0), which the complex root refinement relies on.

All conventions (phases, prefactors, the n < 0 continuation) are pinned by
the test suite against an independent brute-force summation and against
exact identities (Re Q_0 = -1, parity in alpha, odd orders vanishing at the
corner points).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.special as sp

logger = logging.getLogger(__name__)

EULER_GAMMA = 0.5772156649015329

#: High-symmetry Bloch vectors of the square-lattice Brillouin zone.
GAMMA_POINT = np.zeros(2)
X_POINT = np.array([np.pi, 0.0])
M_POINT = np.array([np.pi, np.pi])

#: Default Ewald splitting parameter; balances the Gaussian decay of the
#: spectral part (exp(-pi nu^2)) and the spatial part (exp(-pi r^2)).
DEFAULT_ETA = math.sqrt(math.pi)

_SPATIAL_RANGE = 5     # direct-lattice window |m|_inf <= range, m != 0
_SPECTRAL_RANGE = 5    # reciprocal window |nu|_inf <= range
_J_CAP = 40            # series depth of the spatial radial functions
_RANGE_BUMP = 3        # widening applied when the error estimate misses tol


class NonConvergenceError(RuntimeError):
    """Lattice-sum error estimate exceeded the requested tolerance."""


class NearEmptyResonanceError(RuntimeError):
    """Wavenumber within the guard margin of an empty-lattice resonance."""


def as_bloch(alpha) -> np.ndarray:
    """Validate and return a Bloch vector as a float array of shape (2,).

    Components must lie in [-pi, pi]; the corner points themselves (e.g.
    (pi, pi)) are admissible, so the interval is closed.
    """
    arr = np.asarray(alpha, dtype=float).reshape(-1)
    if arr.shape != (2,):
        raise ValueError("Bloch vector must have exactly two components")
    if not np.all(np.isfinite(arr)) or np.any(np.abs(arr) > np.pi + 1e-12):
        raise ValueError("Bloch vector components must be finite and in [-pi, pi]")
    return arr.copy()


def empty_lattice_margin(k: float, alpha) -> float:
    """Distance from ``k`` to the nearest empty-lattice resonance ``|q|``.

    Scans reciprocal points ``q = 2 pi nu + alpha`` with ``|q| <= k + 2 pi``
    and returns ``min |k - |q||``; if no reciprocal point lies that close,
    returns ``k + 2 pi`` as a floor.
    """
    alpha = as_bloch(alpha)
    k = float(k)
    reach = int(np.ceil((k + 2.0 * np.pi + np.pi * np.sqrt(2.0)) / (2.0 * np.pi))) + 1
    ii = 2.0 * np.pi * np.arange(-reach, reach + 1)
    qx = ii + alpha[0]
    qy = ii + alpha[1]
    qn = np.sqrt(qx[:, None] ** 2 + qy[None, :] ** 2).ravel()
    qn = qn[qn <= k + 2.0 * np.pi]
    if qn.size == 0:
        return k + 2.0 * np.pi
    return float(np.min(np.abs(k - qn)))


# ---------------------------------------------------------------------------
# table value object
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LatticeSumTable:
    """Lattice sums Q_n for all |n| <= order_max at one (k, alpha).

    Attributes
    ----------
    k : complex
        Wavenumber (real on the physical axis; complex during refinement).
    alpha : ndarray
        Bloch vector, shape (2,).
    order_max : int
        Largest stored order.
    values : ndarray
        ``Q_{-order_max} .. Q_{order_max}``, length ``2 * order_max + 1``.
    est_error : float
        Internal absolute error estimate (max over orders): window-tail
        bound plus a roundoff floor proportional to the gross magnitude of
        the summed terms.  May exceed the requested tolerance when the
        high-order sums are intrinsically large (small-k tables); those
        orders are converged relative to their own size instead.
    """

    k: complex
    alpha: np.ndarray = field(repr=False)
    order_max: int
    values: np.ndarray = field(repr=False)
    est_error: float

    def value(self, n: int) -> complex:
        if abs(n) > self.order_max:
            raise IndexError(f"order {n} outside table (order_max={self.order_max})")
        return complex(self.values[n + self.order_max])


# ---------------------------------------------------------------------------
# k-independent geometry caches
# ---------------------------------------------------------------------------

def _upper_gamma_block(t_max: int, t_min: int, x: np.ndarray) -> np.ndarray:
    """Upper incomplete gamma Gamma(t, x) for t = t_min..t_max (rows), x > 0.

    Built from Gamma(1, x) = e^{-x} upward (stable: all terms positive) and
    from Gamma(0, x) = E_1(x), Gamma(-u, x) = x^{-u} E_{u+1}(x) downward.
    """
    rows = t_max - t_min + 1
    out = np.empty((rows, x.size))

    def put(t: int, vals: np.ndarray) -> None:
        out[t - t_min] = vals

    if t_max >= 1:
        g = np.exp(-x)
        if 1 >= t_min:
            put(1, g)
        xt = np.ones_like(x)
        for t in range(1, t_max):
            xt = xt * x
            g = t * g + xt * np.exp(-x)
            if t + 1 >= t_min:
                put(t + 1, g)
    if t_min <= 0 <= t_max:
        put(0, sp.exp1(x))
    if t_min < 0:
        u = np.arange(1, -t_min + 1)
        block = sp.expn(u[:, None] + 1, x[None, :]) * x[None, :] ** (-u[:, None])
        for i, uu in enumerate(u):
            put(-int(uu), block[i])
    return out


_coeff_cache: dict = {}


def _spatial_coefficients(order_max: int, spatial_range: int, eta: float):
    """k-independent spatial data: lattice points and the coefficient tensor.

    Returns ``(mx, my, r, unit_pow, coeff)`` where ``coeff[s, j, pt]`` equals
    ``r^{2j-s} Gamma(s - j, eta^2 r^2) / j!`` so that the radial function is
    ``radial_s(pt; k) = sum_j (k/2)^{2j-s} coeff[s, j, pt]``, and
    ``unit_pow[s, pt] = e^{i s phi_pt}``.
    """
    key = (order_max, spatial_range, round(eta, 12))
    hit = _coeff_cache.get(key)
    if hit is not None:
        return hit

    rng = np.arange(-spatial_range, spatial_range + 1)
    mx, my = np.meshgrid(rng, rng, indexing="ij")
    mx = mx.ravel().astype(float)
    my = my.ravel().astype(float)
    keep = (mx != 0.0) | (my != 0.0)
    mx, my = mx[keep], my[keep]
    r = np.hypot(mx, my)

    gam = _upper_gamma_block(order_max, -_J_CAP, eta * eta * r * r)

    j_fact = np.cumprod(np.concatenate([[1.0], np.arange(1.0, _J_CAP + 1)]))
    log_r = np.log(r)
    coeff = np.empty((order_max + 1, _J_CAP + 1, r.size))
    for s in range(order_max + 1):
        for j in range(_J_CAP + 1):
            coeff[s, j] = (
                np.exp((2 * j - s) * log_r) * gam[(s - j) + _J_CAP] / j_fact[j]
            )

    unit = (mx + 1j * my) / r
    unit_pow = np.empty((order_max + 1, r.size), dtype=complex)
    unit_pow[0] = 1.0
    for s in range(1, order_max + 1):
        unit_pow[s] = unit_pow[s - 1] * unit

    data = (mx, my, r, unit_pow, coeff)
    _coeff_cache[key] = data
    return data


# ---------------------------------------------------------------------------
# per-alpha engine
# ---------------------------------------------------------------------------

class LatticeSumEngine:
    """Precomputed geometry for lattice-sum tables at a fixed Bloch vector.

    One engine caches everything that does not depend on ``k``: reciprocal
    points and their complex powers, direct-lattice phases, and the (shared,
    module-level) incomplete-gamma coefficient tensor.  ``table`` then costs
    only a few matrix-vector products per wavenumber.  Engines are plain
    per-process objects; sweeps parallelised over processes each build their
    own.
    """

    def __init__(
        self,
        alpha,
        order_max: int,
        *,
        eta: float = DEFAULT_ETA,
        spatial_range: int = _SPATIAL_RANGE,
        spectral_range: int = _SPECTRAL_RANGE,
    ):
        if order_max < 0 or order_max > 30:
            raise ValueError("order_max must be in 0..30")
        self.alpha = as_bloch(alpha)
        self.order_max = order_max
        self.eta = float(eta)

        # reciprocal points p = 2 pi nu + alpha over |nu|_inf <= range
        rng = np.arange(-spectral_range, spectral_range + 1)
        nx, ny = np.meshgrid(rng, rng, indexing="ij")
        self._spec_ring = (
            (np.abs(nx) == spectral_range) | (np.abs(ny) == spectral_range)
        ).ravel()
        px = (2.0 * np.pi * nx + self.alpha[0]).ravel()
        py = (2.0 * np.pi * ny + self.alpha[1]).ravel()
        self._p_norm2 = px * px + py * py
        self._p_norm = np.sqrt(self._p_norm2)
        pc = px + 1j * py
        self._p_pow = np.empty((order_max + 1, pc.size), dtype=complex)
        self._p_pow[0] = 1.0
        for s in range(1, order_max + 1):
            self._p_pow[s] = self._p_pow[s - 1] * pc
        self._p_pow_abs = np.abs(self._p_pow)

        # direct-lattice data (shared cache) plus alpha phases
        mx, my, r, unit_pow, coeff = _spatial_coefficients(
            order_max, spatial_range, self.eta
        )
        self._spat_ring = (
            np.maximum(np.abs(mx), np.abs(my)) == spatial_range
        )
        self._r = r
        self._unit_pow = unit_pow
        self._coeff = coeff
        self._spat_phase = np.exp(-1j * (mx * self.alpha[0] + my * self.alpha[1]))

        order = order_max
        self._pref_pos = np.array(
            [4.0 * 1j ** (s + 1) for s in range(order + 1)]
        )

    # -- helpers ------------------------------------------------------------

    def margin(self, k: float) -> float:
        """Distance of (the real part of) k to the nearest |p| in the grid."""
        return float(np.min(np.abs(float(np.real(k)) - self._p_norm)))

    # -- main entry ---------------------------------------------------------

    def table(self, k, tol: float = 1e-8, guard: float = 0.05) -> LatticeSumTable:
        """All Q_n for |n| <= order_max at wavenumber ``k``.

        Raises
        ------
        NearEmptyResonanceError
            If Re k is within ``guard`` of an empty-lattice resonance.
        NonConvergenceError
            If any order's error estimate exceeds ``tol`` -- measured
            absolutely for sums of magnitude <= 1 and relative to the sum's
            own size for larger ones (after the caller has had a chance to
            widen the windows; see ``lattice_sum_table``).
        """
        kc = complex(k)
        if kc.real <= 0.0:
            raise ValueError("Re k must be positive")
        if abs(kc.imag) > 1.0:
            raise ValueError("lattice sums support |Im k| <= 1")
        if self.margin(kc.real) <= guard:
            raise NearEmptyResonanceError(
                f"k={kc.real:.6g} is within {guard:.3g} of an empty-lattice "
                f"resonance at alpha={tuple(self.alpha)}"
            )
        is_real = kc.imag == 0.0
        S = self.order_max

        # ---- spectral part ------------------------------------------------
        k2 = kc * kc
        w = np.exp((k2 - self._p_norm2) / (4.0 * self.eta * self.eta)) / (
            k2 - self._p_norm2
        )
        t_pos = self._p_pow @ w                 # sum_p (px + i py)^s W_p
        t_neg = np.conj(self._p_pow) @ w
        k_pow = kc ** (-np.arange(S + 1.0))
        spec_pos = self._pref_pos * k_pow * t_pos
        spec_neg = (
            self._pref_pos
            * ((-1.0) ** np.arange(S + 1))
            * k_pow
            * t_neg
        )

        # ---- spatial part -------------------------------------------------
        half_k = 0.5 * kc
        log_half_k = np.log(half_k)
        jj = np.arange(_J_CAP + 1)
        # povs[s, j] = (k/2)^(2j - s)
        expo = 2.0 * jj[None, :] - np.arange(S + 1.0)[:, None]
        povs = np.exp(expo * log_half_k)
        radial = np.einsum("sj,sjp->sp", povs, self._coeff)

        spat_pos = np.empty(S + 1, dtype=complex)
        spat_neg = np.empty(S + 1, dtype=complex)
        base = -1j / np.pi
        for s in range(S + 1):
            ws = self._spat_phase * radial[s]
            spat_pos[s] = base * ((-1.0) ** s) * np.sum(ws * self._unit_pow[s])
            spat_neg[s] = base * np.sum(ws * np.conj(self._unit_pow[s]))

        # ---- central correction (order 0) ---------------------------------
        # series sum_{j>=1} zc^j / (j * j!) with zc = (k / (2 eta))^2
        zc = (half_k / self.eta) ** 2
        term = zc
        acc = term
        fact = 1.0
        for j in range(2, 60):
            fact *= j
            term = term * zc
            inc = term / (j * fact)
            acc = acc + inc
            if abs(inc) < 1e-18 * max(1.0, abs(acc)):
                break
        central = -1.0 - (1j / np.pi) * (
            2.0 * np.log(half_k / self.eta) + EULER_GAMMA + acc
        )

        # ---- assembly and error estimate ----------------------------------
        values = np.empty(2 * S + 1, dtype=complex)
        for s in range(S + 1):
            values[S + s] = spec_pos[s] + spat_pos[s]
            values[S - s] = spec_neg[s] + spat_neg[s]
        values[S] = spec_pos[0] + spat_pos[0] + central

        ring_w = np.abs(w[self._spec_ring])
        ring_p = np.abs(self._p_pow[:, self._spec_ring])
        spec_tail = 4.0 * np.abs(k_pow) * (ring_p @ ring_w)
        ring_r = np.abs(radial[:, self._spat_ring])
        spat_tail = np.sum(ring_r, axis=1) / np.pi
        j_tail = (
            np.abs(povs[:, _J_CAP])
            * np.sum(np.abs(self._coeff[:, _J_CAP, :]), axis=1)
            / np.pi
        )
        # Roundoff floor: the windows truncate far below machine precision,
        # so the estimate must also cover cancellation noise, proportional to
        # the gross (unsigned) magnitude of the summed terms.  Without it,
        # exact zeros (odd orders at the corner Bloch vectors) would sit above
        # a pure tail estimate.
        gross_spec = 4.0 * np.abs(k_pow) * (self._p_pow_abs @ np.abs(w))
        gross_spat = np.sum(np.abs(radial), axis=1) / np.pi
        floors = 32.0 * np.finfo(float).eps * (gross_spec + gross_spat + 2.0)
        tails = spec_tail + spat_tail + 2.0 * j_tail
        # Convergence is judged per order on the truncation tails alone:
        # absolute against ``tol`` for sums of magnitude <= 1, relative for
        # larger ones.  High orders at small k are intrinsically enormous
        # (the dominant near shell grows like (2/k)^s (s-1)!), so an absolute
        # criterion there is meaningless -- and harmless to relax, because
        # every downstream use multiplies the sum by J-factors that shrink
        # faster than it grows.  The roundoff floor is excluded from the
        # decision: widening windows cannot reduce cancellation noise (odd
        # orders at corner Bloch vectors are exact zeros formed from huge
        # terms), so it is only *reported*, through ``est_error``.
        scales = np.maximum(
            1.0, np.maximum(np.abs(values[S:]), np.abs(values[S::-1]))
        )
        if np.any(tails > tol * scales):
            worst = float(np.max(tails / scales))
            raise NonConvergenceError(
                f"lattice-sum truncation tail {worst:.3e} (worst order, "
                f"relative to the sum's own size) exceeds tol={tol:.3e} "
                f"at k={kc:.6g}"
            )
        est = float(np.max(tails + floors))
        return LatticeSumTable(
            k=kc if not is_real else complex(kc.real),
            alpha=self.alpha,
            order_max=S,
            values=values,
            est_error=est,
        )


# ---------------------------------------------------------------------------
# module-level convenience API with engine caching
# ---------------------------------------------------------------------------

_engine_cache: dict = {}


def _engine_for(alpha: np.ndarray, order_max: int, widen: int = 0) -> LatticeSumEngine:
    key = (alpha.tobytes(), order_max, widen)
    eng = _engine_cache.get(key)
    if eng is None:
        eng = LatticeSumEngine(
            alpha,
            order_max,
            spatial_range=_SPATIAL_RANGE + widen,
            spectral_range=_SPECTRAL_RANGE + widen,
        )
        _engine_cache[key] = eng
    return eng


def lattice_sum_table(
    order_max: int, k, alpha, tol: float = 1e-8, guard: float = 0.05
) -> LatticeSumTable:
    """Table of Q_n, |n| <= order_max, with automatic window widening.

    If the default Ewald windows miss ``tol`` the computation is retried once
    with windows widened by 3 before giving up with ``NonConvergenceError``.
    """
    alpha = as_bloch(alpha)
    try:
        return _engine_for(alpha, order_max).table(k, tol=tol, guard=guard)
    except NonConvergenceError:
        logger.info(
            "widening Ewald windows at k=%s, alpha=%s", k, tuple(alpha)
        )
        return _engine_for(alpha, order_max, widen=_RANGE_BUMP).table(
            k, tol=tol, guard=guard
        )


def lattice_sum(n: int, k, alpha, tol: float = 1e-8, guard: float = 0.05) -> complex:
    """Single lattice sum Q_n(k, alpha); see ``lattice_sum_table``."""
    return lattice_sum_table(abs(n), k, alpha, tol=tol, guard=guard).value(n)
