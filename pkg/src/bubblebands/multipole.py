"""Multipole matrices of the bubble-lattice transmission problem.

A single circular bubble of radius ``R`` sits in each cell of the unit
square lattice.  Acoustic fields inside and outside the bubble are
represented by single-layer potentials over the bubble boundary, with
densities expanded in the angular harmonics ``e^{i n theta}``.  In that
basis the free-space single layer at wavenumber ``k`` is diagonal,

    value      c J_n(kR) H_n^(1)(kR),          c = -i pi R / 2,
    interior'  c k J_n'(kR) H_n^(1)(kR),
    exterior'  c k J_n(kR) H_n^(1)'(kR),

(the one-sided normal derivatives differ by exactly 1, the single-layer
jump), while the quasi-periodic layer adds a dense coupling through the
lattice sums ``Q``:

    S[m, n]  = value_n delta_{mn} + c J_n(kR) (-1)^(n-m) Q_{n-m} J_m(kR),
    dS[m, n] = exterior'_n delta_{mn}
               + c J_n(kR) (-1)^(n-m) Q_{n-m} k J_m'(kR).

Matching pressure and normal flux across the bubble boundary gives the
block characteristic matrix

    [  inner layer (k_b)        -S(alpha, k)      ]
    [  inner interior' (k_b)    -delta dS(alpha, k) ],

whose characteristic values omega (through k = omega / v and
k_b = omega / v_b) are the band frequencies; ``delta`` is the
bubble-to-host density ratio.  A separate quasi-static matrix gives the
zero-wavenumber limit of the quasi-periodic layer through its absolutely
convergent reciprocal-space form; it feeds the quasi-periodic capacity.

Derivative diagonals come from differentiating the one-sided interior /
exterior expansions directly, which reproduces the unit jump to machine
precision; sign and phase conventions are pinned by the test suite against
Nystrom quadrature and spectral-sum references.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bessel
from .lattice import LatticeSumTable, as_bloch, lattice_sum_table

__all__ = [
    "MaterialParams",
    "DiskCrystal",
    "CharacteristicMatrix",
    "MissingLatticeOrderError",
    "ZeroAlphaError",
    "inner_block_diag",
    "outer_block_entries",
    "assemble_characteristic_matrix",
    "quasistatic_matrix",
]

#: Chunk size (reciprocal-lattice points per batch) for the quasi-static sum.
_Q_CHUNK = 1 << 16


class MissingLatticeOrderError(LookupError):
    """Requested coupling order exceeds the supplied lattice-sum table."""


class ZeroAlphaError(ValueError):
    """Operation requires a nonzero Bloch vector."""


# ---------------------------------------------------------------------------
# parameter value objects
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MaterialParams:
    """Densities and bulk moduli of the host fluid and the bubble fluid.

    Derived quantities are exposed as properties so they can never drift
    out of sync with the stored fields: sound speeds ``v = sqrt(kappa/rho)``
    (host) and ``v_b`` (bubble), density contrast ``delta = rho_b / rho``
    and speed contrast ``tau = v / v_b``.
    """

    rho: float
    kappa: float
    rho_b: float
    kappa_b: float

    def __post_init__(self) -> None:
        for name in ("rho", "kappa", "rho_b", "kappa_b"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be finite and positive")

    @property
    def delta(self) -> float:
        return self.rho_b / self.rho

    @property
    def v(self) -> float:
        return math.sqrt(self.kappa / self.rho)

    @property
    def v_b(self) -> float:
        return math.sqrt(self.kappa_b / self.rho_b)

    @property
    def tau(self) -> float:
        return self.v / self.v_b


@dataclass(frozen=True)
class DiskCrystal:
    """Geometry: one disk of radius ``radius`` per unit-square cell.

    The cell is ``[-1/2, 1/2]^2``; the disk must sit strictly inside it.
    """

    radius: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.radius) and 0.0 < self.radius < 0.5):
            raise ValueError("radius must lie strictly between 0 and 1/2")

    @property
    def cell_halfwidth(self) -> float:
        return 0.5

    @property
    def area(self) -> float:
        """Area of the disk (the bubble volume per cell in 2D)."""
        return math.pi * self.radius**2


@dataclass(frozen=True)
class CharacteristicMatrix:
    """Assembled transmission matrix at one (omega, alpha, truncation).

    ``entries`` is the dense ``2(2N+1) x 2(2N+1)`` complex block matrix
    with ``N = truncation``; row blocks are [pressure continuity; flux
    continuity], column blocks are [inner density coefficients; outer
    density coefficients], each ordered ``n = -N .. N``.
    """

    omega: complex
    alpha: np.ndarray = field(repr=False)
    truncation: int
    entries: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        size = 2 * (2 * self.truncation + 1)
        if self.entries.shape != (size, size):
            raise ValueError(
                f"entries must be {size} x {size} for truncation {self.truncation}"
            )

    @property
    def size(self) -> int:
        return 2 * (2 * self.truncation + 1)


# ---------------------------------------------------------------------------
# cylinder-function tables over signed orders
# ---------------------------------------------------------------------------

def _cyl_tables(order_hi: int, z):
    """``J, J', H1, H1'`` for orders 0..order_hi at real or complex ``z``.

    Real arguments take the fast real-recurrence path; arguments with a
    nonzero imaginary part (root refinement off the real frequency axis)
    take the complex-series path, valid for ``|Im z| <= 1`` and
    ``|z| <= 12`` -- ample for the ``k R < 2`` products that occur here.
    """
    zc = complex(z)
    if zc.imag == 0.0:
        x = zc.real
        if x <= 0.0:
            raise ValueError("argument must have positive real part")
        j = bessel.bessel_j_seq(order_hi + 1, x).astype(complex)
        h = bessel.hankel1_seq(order_hi + 1, x)
    else:
        j = bessel.bessel_j_seq_complex(order_hi + 1, zc)
        h = bessel.hankel1_seq_complex(order_hi + 1, zc)
    jp = np.empty(order_hi + 1, dtype=complex)
    hp = np.empty(order_hi + 1, dtype=complex)
    jp[0] = -j[1]
    hp[0] = -h[1]
    if order_hi >= 1:
        jp[1:] = 0.5 * (j[:order_hi] - j[2:])
        hp[1:] = 0.5 * (h[:order_hi] - h[2:])
    return j[: order_hi + 1], jp, h[: order_hi + 1], hp


def _parity_signs(orders: np.ndarray) -> np.ndarray:
    """``(-1)^n`` reflection factors for the negative entries of ``orders``."""
    return np.where((orders < 0) & (orders % 2 != 0), -1.0, 1.0)


# ---------------------------------------------------------------------------
# free-space (single bubble) blocks
# ---------------------------------------------------------------------------

def inner_block_diag(n: int, wavenumber, radius: float):
    """Diagonal single-layer pair ``(value, interior derivative)`` at order n.

    ``value = c J_n(z) H_n^(1)(z)`` and
    ``d_value = c k J_n'(z) H_n^(1)(z)`` with ``z = wavenumber * radius``
    and ``c = -i pi radius / 2``; the derivative is the interior one-sided
    normal derivative.  Orders enter through ``|n|`` only
    (``J_{-n} H_{-n} = J_n H_n``).
    """
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    order = abs(int(n))
    z = wavenumber * radius
    j, jp, h, _ = _cyl_tables(order, z)
    c = -0.5j * math.pi * radius
    return c * j[order] * h[order], c * wavenumber * jp[order] * h[order]


# ---------------------------------------------------------------------------
# quasi-periodic blocks
# ---------------------------------------------------------------------------

def outer_block_entries(
    m: int, n: int, k, alpha, radius: float, table: LatticeSumTable
):
    """Entry ``(value, exterior derivative)`` of the quasi-periodic layer.

    Row order ``m`` (projection), column order ``n`` (density); ``table``
    must hold the lattice sum of order ``n - m`` and must have been built
    at the same ``(k, alpha)``.
    """
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    alpha = as_bloch(alpha)
    if abs(complex(k) - complex(table.k)) > 1e-12 * max(1.0, abs(complex(k))):
        raise ValueError("table was built at a different wavenumber")
    if not np.allclose(alpha, table.alpha, atol=1e-12):
        raise ValueError("table was built at a different Bloch vector")
    if abs(n - m) > table.order_max:
        raise MissingLatticeOrderError(
            f"coupling order {n - m} exceeds table order_max={table.order_max}"
        )

    order_hi = max(abs(m), abs(n))
    z = k * radius
    j, jp, h, hp = _cyl_tables(order_hi, z)
    sg_m = 1.0 if m >= 0 or m % 2 == 0 else -1.0
    sg_n = 1.0 if n >= 0 or n % 2 == 0 else -1.0
    j_m, jp_m = sg_m * j[abs(m)], sg_m * jp[abs(m)]
    j_n, h_n, hp_n = sg_n * j[abs(n)], sg_n * h[abs(n)], sg_n * hp[abs(n)]

    c = -0.5j * math.pi * radius
    coupling = c * j_n * (-1.0) ** (n - m) * table.value(n - m)
    s = coupling * j_m
    ds = coupling * k * jp_m
    if m == n:
        s += c * j_n * h_n
        ds += c * k * j_n * hp_n
    return s, ds


def _outer_block_matrices(k, radius: float, table: LatticeSumTable, order_max: int):
    """Dense ``(S, dS)`` blocks for all row/column orders ``-order_max..order_max``."""
    if table.order_max < 2 * order_max:
        raise MissingLatticeOrderError(
            f"blocks of order {order_max} need lattice sums up to "
            f"{2 * order_max}; table holds {table.order_max}"
        )
    orders = np.arange(-order_max, order_max + 1)
    signs = _parity_signs(orders)
    j, jp, h, hp = _cyl_tables(order_max, k * radius)
    idx = np.abs(orders)
    j_s = signs * j[idx]
    jp_s = signs * jp[idx]

    diff = orders[None, :] - orders[:, None]          # n - m
    q_vals = np.asarray(table.values)[diff + table.order_max]
    coupling = (-1.0) ** diff * q_vals * j_s[None, :]  # row m, column n

    c = -0.5j * math.pi * radius
    s_mat = c * (coupling * j_s[:, None])
    ds_mat = c * k * (coupling * jp_s[:, None])
    # Parity signs cancel pairwise on the diagonal: J_n H_n = J_|n| H_|n|.
    diag = np.arange(orders.size)
    s_mat[diag, diag] += c * j[idx] * h[idx]
    ds_mat[diag, diag] += c * k * j[idx] * hp[idx]
    return s_mat, ds_mat


def assemble_characteristic_matrix(
    omega,
    material: MaterialParams,
    alpha,
    crystal: DiskCrystal,
    truncation: int,
    *,
    lattice_tol: float = 1e-8,
    guard: float = 0.05,
) -> CharacteristicMatrix:
    """Full transmission matrix at frequency ``omega`` and Bloch vector ``alpha``.

    ``truncation`` is the largest retained harmonic order N; the result is
    the ``2(2N+1)``-square block matrix whose singular frequencies are the
    band frequencies.  ``omega`` may sit slightly off the real axis (the
    complex root refinement needs this); its real part must be positive.
    The lattice-sum table of order 2N is built internally at
    ``k = omega / v``, with ``guard`` the minimum admissible distance to
    the empty-lattice resonances.
    """
    omega_c = complex(omega)
    if omega_c.real <= 0.0:
        raise ValueError("omega must have positive real part")
    if truncation < 0:
        raise ValueError("truncation must be >= 0")
    alpha = as_bloch(alpha)
    if omega_c.imag == 0.0:
        omega_c = omega_c.real

    k = omega_c / material.v
    k_b = omega_c / material.v_b
    table = lattice_sum_table(
        max(2 * truncation, 1), k, alpha, tol=lattice_tol, guard=guard
    )
    s_outer, ds_outer = _outer_block_matrices(
        k, crystal.radius, table, truncation
    )

    orders = np.arange(-truncation, truncation + 1)
    idx = np.abs(orders)
    j_b, jp_b, h_b, _ = _cyl_tables(truncation, k_b * crystal.radius)
    c = -0.5j * math.pi * crystal.radius
    inner_value = c * j_b[idx] * h_b[idx]
    inner_deriv = c * k_b * jp_b[idx] * h_b[idx]

    width = orders.size
    entries = np.zeros((2 * width, 2 * width), dtype=complex)
    entries[:width, :width] = np.diag(inner_value)
    entries[:width, width:] = -s_outer
    entries[width:, :width] = np.diag(inner_deriv)
    entries[width:, width:] = -material.delta * ds_outer
    return CharacteristicMatrix(omega_c, alpha, truncation, entries)


# ---------------------------------------------------------------------------
# quasi-static (zero-wavenumber) limit
# ---------------------------------------------------------------------------

def quasistatic_matrix(
    alpha, radius: float, order_max: int, cutoff: int
) -> np.ndarray:
    """Zero-wavenumber quasi-periodic single-layer matrix, harmonic basis.

    Entry ``(m, n)``, orders ``-order_max..order_max``, is

        -2 pi R sum_q i^m (-i)^n J_m(|q|R) J_n(|q|R) e^{i(n-m) arg q} / |q|^2

    over reciprocal points ``q = 2 pi nu + alpha`` with
    ``|q|_inf <= 2 pi cutoff``.  The summand is a negative-weighted Gram
    term ``B B^H``, so the matrix is Hermitian negative definite by
    construction.  Convergence is absolute (``|q|^{-3}`` after angular
    averaging); no zero-wavenumber log divergence appears because
    ``alpha != 0`` keeps every denominator away from zero.
    """
    alpha = as_bloch(alpha)
    if float(np.hypot(alpha[0], alpha[1])) == 0.0:
        raise ZeroAlphaError("quasi-static matrix requires alpha != 0")
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    if order_max < 0:
        raise ValueError("order_max must be >= 0")
    if cutoff < 20:
        raise ValueError("cutoff must be >= 20")

    reach = cutoff + 1
    nu = np.arange(-reach, reach + 1)
    qx = (2.0 * math.pi * nu + alpha[0])[:, None]
    qy = (2.0 * math.pi * nu + alpha[1])[None, :]
    keep = np.maximum(np.abs(qx), np.abs(qy)) <= 2.0 * math.pi * cutoff
    qx, qy = np.broadcast_arrays(qx, qy)
    qx, qy = qx[keep], qy[keep]
    qnorm = np.hypot(qx, qy)
    qarg = np.arctan2(qy, qx)

    orders = np.arange(-order_max, order_max + 1)
    signs = _parity_signs(orders)
    idx = np.abs(orders)
    i_pow = np.array([1.0, 1.0j, -1.0, -1.0j])[orders % 4]

    width = orders.size
    result = np.zeros((width, width), dtype=complex)
    for start in range(0, qnorm.size, _Q_CHUNK):
        sl = slice(start, start + _Q_CHUNK)
        j_tab = bessel.bessel_j_seq(order_max, qnorm[sl] * radius)
        basis = (
            (signs * i_pow)[:, None]
            * j_tab[idx, :]
            * np.exp(-1j * orders[:, None] * qarg[None, sl])
        )
        result += (basis / qnorm[None, sl] ** 2) @ basis.conj().T
    return -2.0 * math.pi * radius * result
