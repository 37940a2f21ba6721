"""Band frequencies of the bubble crystal along the square-lattice path.

A frequency ``omega`` belongs to the band structure at Bloch vector ``alpha``
when the characteristic matrix assembled there becomes singular.  Singularity
is detected in two stages: a scan of the smallest singular value of the
row-equilibrated matrix over a frequency grid brackets candidate roots at its
local minima, then Muller's method polishes each bracket on the equilibrated
determinant, evaluated through a pivoted triangular factorization in
log-magnitude form so that neither overflow nor underflow can occur.  A
refined root is accepted only if it stays inside its bracket, returns to the
real axis, and drives the indicator below tolerance.

Frequencies where the host wavenumber hits an empty-lattice resonance
``k = |2 pi m + alpha|`` are poles of the quasi-periodic kernel, not crystal
bands.  The scan subdivides and flags such guard zones instead of silently
skipping them, and evaluates inside them with a tighter guard so that a band
squeezed against a resonance is still found.

The path sweep walks the closed polyline through the zone corners
(0,0) -> (pi,0) -> (pi,pi) -> (0,0), collects the lowest bands at each
sample, and reports the maximum of the first band, where it is attained, and
the gap between the first and second bands when one opens.
"""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .lattice import (
    GAMMA_POINT,
    M_POINT,
    X_POINT,
    NearEmptyResonanceError,
    NonConvergenceError,
    as_bloch,
    empty_lattice_margin,
)
from .multipole import (
    CharacteristicMatrix,
    DiskCrystal,
    MaterialParams,
    assemble_characteristic_matrix,
)

__all__ = [
    "BandNotFoundError",
    "BandPoint",
    "BandStructure",
    "MullerResult",
    "RejectedRootError",
    "RootDiagnostics",
    "RootNotConvergedError",
    "ScanResult",
    "ScanSettings",
    "band_structure",
    "extract_gap_and_star",
    "first_two_bands",
    "muller_refine",
    "resonance_near",
    "retruncated_root",
    "scan_and_bracket",
    "singular_value_indicator",
]


class BandNotFoundError(RuntimeError):
    """Fewer bands than requested were found below the frequency ceiling."""


class RootNotConvergedError(RuntimeError):
    """Muller iteration ran out of budget; carries the best iterate seen."""

    def __init__(self, message: str, best: complex, iterations: int) -> None:
        super().__init__(message)
        self.best = best
        self.iterations = iterations


class RejectedRootError(RuntimeError):
    """A converged iterate failed the acceptance checks (not a band root)."""

    def __init__(self, message: str, root: complex) -> None:
        super().__init__(message)
        self.root = root


@dataclass(frozen=True)
class ScanSettings:
    """Grid and refinement parameters for the root search.

    The frequency grid steps by ``step_low`` below ``split`` and
    ``step_high`` above it.  ``guard`` is the empty-lattice margin below
    which a grid point counts as lying in a flagged resonance zone; inside
    such zones the grid is subdivided (half step) and matrices are still
    assembled, down to the tighter ``refine_guard``.  A refined root is
    accepted when the equilibrated smallest singular value is below
    ``indicator_tol`` times the largest one and the iterate's imaginary
    part is below ``imag_tol``.  ``lattice_tol`` is passed through to the
    quasi-periodic lattice-sum engine.
    """

    step_low: float = 2e-3
    step_high: float = 1e-2
    split: float = 0.5
    guard: float = 0.05
    refine_guard: float = 0.01
    indicator_tol: float = 1e-6
    imag_tol: float = 1e-8
    muller_tol: float = 1e-10
    muller_max_iter: int = 50
    lattice_tol: float = 1e-8

    def __post_init__(self) -> None:
        positive = (
            "step_low",
            "step_high",
            "split",
            "guard",
            "refine_guard",
            "indicator_tol",
            "imag_tol",
            "muller_tol",
            "lattice_tol",
        )
        for name in positive:
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if self.refine_guard >= self.guard:
            raise ValueError("refine_guard must be tighter than guard")
        if self.muller_max_iter < 1:
            raise ValueError("muller_max_iter must be at least 1")


# ---------------------------------------------------------------------------
# singularity indicator and determinant
# ---------------------------------------------------------------------------

def _equilibrate(entries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scale each row to unit max-norm; zero rows keep scale one."""
    scale = np.max(np.abs(entries), axis=1)
    scale = np.where(scale == 0.0, 1.0, scale)
    return entries / scale[:, None], scale


def singular_value_indicator(matrix) -> float:
    """Smallest singular value of the row-equilibrated matrix.

    Row equilibration removes the wild row-scale disparities of the
    high-order blocks (Bessel factors spanning hundreds of decades), so a
    value near zero is a genuine rank deficiency rather than a scaling
    artifact.  Accepts an assembled characteristic matrix or a bare array.
    """
    entries = np.asarray(getattr(matrix, "entries", matrix), dtype=complex)
    if not np.all(np.isfinite(entries)):
        raise ValueError("matrix entries must be finite")
    scaled, _ = _equilibrate(entries)
    return float(np.linalg.svd(scaled, compute_uv=False)[-1])


def _scaled_log_determinant(entries: np.ndarray, row_scale: np.ndarray) -> complex:
    """``log det`` of ``entries / row_scale`` as ``log|det| + i arg det``."""
    lu, piv = scipy.linalg.lu_factor(
        entries / row_scale[:, None], check_finite=False
    )
    diag = np.diagonal(lu)
    swaps = int(np.count_nonzero(piv != np.arange(piv.size)))
    with np.errstate(divide="ignore"):
        log_mag = float(np.sum(np.log(np.abs(diag))))
    phase = float(np.sum(np.angle(diag))) + math.pi * (swaps % 2)
    return complex(log_mag, phase)


# ---------------------------------------------------------------------------
# Muller's method
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MullerResult:
    """Converged Muller iterate with its iteration count and final step."""

    root: complex
    iterations: int
    last_step: float


def muller_refine(
    f: Callable[[complex], complex],
    x0: complex,
    x1: complex,
    x2: complex,
    tol: float = 1e-10,
    max_iter: int = 50,
    accept: Callable[[complex], bool] | None = None,
) -> MullerResult:
    """Find a root of ``f`` by quadratic (Muller) iteration.

    Fits a parabola through the last three iterates and steps to its nearer
    root; stops when the step shrinks below ``tol * (1 + |x|)``.  The
    iteration runs in complex arithmetic even from real starts, so it can
    pass through real-axis extrema.  If ``accept`` is given, a converged
    iterate it vetoes raises :class:`RejectedRootError`; running out of
    iterations raises :class:`RootNotConvergedError` carrying the best
    iterate.
    """
    xs = [complex(x0), complex(x1), complex(x2)]
    if len({*xs}) != 3:
        raise ValueError("Muller starts must be three distinct points")
    f0, f1, f2 = (complex(f(x)) for x in xs)
    x0c, x1c, x2c = xs
    iterations = 0
    step = math.inf
    while iterations < max_iter:
        iterations += 1
        if f2 == 0.0:
            step = 0.0
            break
        h1 = x1c - x0c
        h2 = x2c - x1c
        d1 = (f1 - f0) / h1
        d2 = (f2 - f1) / h2
        a = (d2 - d1) / (h2 + h1)
        b = a * h2 + d2
        disc = cmath.sqrt(b * b - 4.0 * a * f2)
        den = b + disc if abs(b + disc) >= abs(b - disc) else b - disc
        if den == 0.0:
            if d2 == 0.0:
                raise RootNotConvergedError(
                    "Muller iteration degenerated (flat function)",
                    best=x2c,
                    iterations=iterations,
                )
            delta = -f2 / d2  # linear fallback when the parabola is flat
        else:
            delta = -2.0 * f2 / den
        x3 = x2c + delta
        step = abs(delta)
        x0c, x1c, x2c = x1c, x2c, x3
        f0, f1, f2 = f1, f2, complex(f(x3))
        if step < tol * (1.0 + abs(x3)):
            break
    else:
        best = x2c if abs(f2) <= abs(f1) else x1c
        raise RootNotConvergedError(
            f"no convergence in {max_iter} Muller iterations",
            best=best,
            iterations=iterations,
        )
    if accept is not None and not accept(x2c):
        raise RejectedRootError(f"iterate {x2c} failed acceptance", root=x2c)
    return MullerResult(root=x2c, iterations=iterations, last_step=step)


# ---------------------------------------------------------------------------
# indicator scan and bracketing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScanResult:
    """Brackets at indicator minima, plus flagged resonance subintervals.

    Iterating the result yields the brackets, each a frequency triple
    ``(lo, mid, hi)`` of consecutive grid points with a local indicator
    minimum at ``mid``.  ``flagged`` lists the ``(lo, hi)`` frequency
    subintervals whose empty-lattice margin fell below the guard; the grid
    is subdivided there, never silently thinned.
    """

    brackets: tuple[tuple[float, float, float], ...]
    flagged: tuple[tuple[float, float], ...]

    def __iter__(self):
        return iter(self.brackets)

    def __len__(self) -> int:
        return len(self.brackets)


def _indicator_profile(
    alpha: np.ndarray,
    material: MaterialParams,
    crystal: DiskCrystal,
    truncation: int,
    omega_range: tuple[float, float],
    step: float | None,
    settings: ScanSettings,
) -> tuple[np.ndarray, np.ndarray, tuple[tuple[float, float], ...]]:
    """Indicator values on the (guard-aware) frequency grid."""
    lo, hi = (float(omega_range[0]), float(omega_range[1]))
    omegas: list[float] = []
    values: list[float] = []
    flagged: list[tuple[float, float]] = []
    flag_start: float | None = None
    w = max(lo, 0.0)
    in_zone = empty_lattice_margin(w / material.v, alpha) <= settings.guard
    while w < hi - 1e-15:
        base = step if step is not None else (
            settings.step_low if w < settings.split else settings.step_high
        )
        # half-step through flagged zones so a band squeezed against an
        # empty-lattice resonance still produces a bracketable minimum
        w = min(w + (0.5 * base if in_zone else base), hi)
        in_zone = empty_lattice_margin(w / material.v, alpha) <= settings.guard
        if in_zone and flag_start is None:
            flag_start = w
        elif not in_zone and flag_start is not None:
            flagged.append((flag_start, omegas[-1] if omegas else flag_start))
            flag_start = None
        try:
            cm = assemble_characteristic_matrix(
                w, material, alpha, crystal, truncation,
                guard=settings.refine_guard,
                lattice_tol=settings.lattice_tol,
            )
            values.append(singular_value_indicator(cm))
        except (NearEmptyResonanceError, NonConvergenceError, ValueError):
            values.append(math.inf)
        omegas.append(w)
    if flag_start is not None:
        flagged.append((flag_start, hi))
    return np.asarray(omegas), np.asarray(values), tuple(flagged)


def scan_and_bracket(
    alpha,
    material: MaterialParams,
    crystal: DiskCrystal,
    truncation: int,
    omega_range: tuple[float, float],
    step: float | None = None,
    *,
    settings: ScanSettings = ScanSettings(),
) -> ScanResult:
    """Bracket indicator minima over a frequency range at one Bloch vector.

    Walks the grid (uniform at ``step`` if given, otherwise the split
    default from ``settings``), evaluates the singularity indicator, and
    returns each interior local minimum with its two neighbours as a
    bracket, ordered by frequency.
    """
    if step is not None and not step > 0.0:
        raise ValueError("step must be positive")
    alpha = as_bloch(alpha)
    omegas, values, flagged = _indicator_profile(
        alpha, material, crystal, truncation, omega_range, step, settings
    )
    brackets: list[tuple[float, float, float]] = []
    for i in range(1, len(omegas) - 1):
        window = values[i - 1 : i + 2]
        if not np.all(np.isfinite(window)):
            continue
        if values[i] <= values[i - 1] and values[i] <= values[i + 1] and (
            values[i] < values[i - 1] or values[i] < values[i + 1]
        ):
            brackets.append((omegas[i - 1], omegas[i], omegas[i + 1]))
    return ScanResult(brackets=tuple(brackets), flagged=flagged)


# ---------------------------------------------------------------------------
# root refinement against the characteristic matrix
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RootDiagnostics:
    """Acceptance record of one refined root."""

    indicator: float
    iterations: int


def _refine_bracket(
    bracket: tuple[float, float, float],
    alpha: np.ndarray,
    material: MaterialParams,
    crystal: DiskCrystal,
    truncation: int,
    settings: ScanSettings,
) -> tuple[float, RootDiagnostics]:
    """Polish one bracket to an accepted band root.

    The Muller target is the determinant of the characteristic matrix with
    row scales frozen at the first evaluation, so the function stays smooth
    while the iterates move.  Acceptance requires the iterate to come back
    to the real axis, stay inside its bracket, and push the (freshly
    equilibrated) indicator below tolerance.
    """
    lo, mid, hi = bracket
    row_scale: np.ndarray | None = None
    ref_mag: float | None = None
    last: dict[str, float] = {}

    def determinant(omega: complex) -> complex:
        nonlocal row_scale, ref_mag
        om = complex(omega)
        if om.real <= 0.0 or abs(om.imag) > 0.5:
            raise RootNotConvergedError(
                "iterate left the admissible frequency region",
                best=om,
                iterations=0,
            )
        cm = assemble_characteristic_matrix(
            om, material, alpha, crystal, truncation,
            guard=settings.refine_guard,
            lattice_tol=settings.lattice_tol,
        )
        if row_scale is None:
            _, row_scale = _equilibrate(cm.entries)
        log_det = _scaled_log_determinant(cm.entries, row_scale)
        if ref_mag is None:
            ref_mag = log_det.real
        return cmath.exp(complex(log_det.real - ref_mag, log_det.imag))

    def accept(root: complex) -> bool:
        if abs(root.imag) > settings.imag_tol:
            return False
        w = float(root.real)
        if not lo <= w <= hi:
            return False
        try:
            cm = assemble_characteristic_matrix(
                w, material, alpha, crystal, truncation,
                guard=settings.refine_guard,
                lattice_tol=settings.lattice_tol,
            )
        except (NearEmptyResonanceError, NonConvergenceError, ValueError):
            return False
        scaled, _ = _equilibrate(cm.entries)
        spectrum = np.linalg.svd(scaled, compute_uv=False)
        last["indicator"] = float(spectrum[-1])
        return spectrum[-1] <= settings.indicator_tol * spectrum[0]

    result = muller_refine(
        determinant,
        complex(lo),
        complex(hi),
        complex(mid),
        tol=settings.muller_tol,
        max_iter=settings.muller_max_iter,
        accept=accept,
    )
    return float(result.root.real), RootDiagnostics(
        indicator=last["indicator"], iterations=result.iterations
    )


def _accepted_roots(
    alpha: np.ndarray,
    material: MaterialParams,
    crystal: DiskCrystal,
    truncation: int,
    omega_max: float,
    count: int,
    settings: ScanSettings,
) -> list[tuple[float, RootDiagnostics]]:
    """Lowest accepted roots in ``(0, omega_max]``, at most ``count``."""
    scan = scan_and_bracket(
        alpha, material, crystal, truncation, (0.0, omega_max),
        settings=settings,
    )
    roots: list[tuple[float, RootDiagnostics]] = []
    for bracket in scan.brackets:
        if len(roots) == count:
            break
        try:
            omega, diag = _refine_bracket(
                bracket, alpha, material, crystal, truncation, settings
            )
        except (RootNotConvergedError, RejectedRootError):
            continue
        if roots and abs(omega - roots[-1][0]) < 1e-7 * (1.0 + omega):
            continue
        roots.append((omega, diag))
    return roots


def first_two_bands(
    alpha,
    material: MaterialParams,
    crystal: DiskCrystal,
    truncation: int,
    omega_max: float,
    *,
    settings: ScanSettings = ScanSettings(),
) -> tuple[float, float]:
    """Two lowest band frequencies at one Bloch vector.

    At the zone centre the first band passes through zero frequency
    analytically (uniform translation mode), so only the second band is
    searched for; elsewhere both come from the scan-and-refine pipeline.
    """
    alpha = as_bloch(alpha)
    at_centre = float(np.hypot(alpha[0], alpha[1])) == 0.0
    needed = 1 if at_centre else 2
    roots = _accepted_roots(
        alpha, material, crystal, truncation, omega_max, needed, settings
    )
    if len(roots) < needed:
        raise BandNotFoundError(
            f"found {len(roots)} of {needed} bands below omega={omega_max} "
            f"at alpha={tuple(alpha)}"
        )
    if at_centre:
        return 0.0, roots[0][0]
    return roots[0][0], roots[1][0]


def resonance_near(
    omega_guess: float,
    alpha,
    material: MaterialParams,
    crystal: DiskCrystal,
    truncation: int,
    *,
    window: float = 0.4,
    settings: ScanSettings = ScanSettings(),
) -> float:
    """Accepted characteristic frequency closest to an analytic prediction.

    Scans the window ``[(1-window), (1+window)] * omega_guess``, refines
    every bracket, and returns the accepted root nearest the guess.  This
    identifies the resonance branch even when other bands cross the
    window; raises :class:`BandNotFoundError` when no root is accepted.
    """
    if not omega_guess > 0.0:
        raise ValueError("omega_guess must be positive")
    if not 0.0 < window < 1.0:
        raise ValueError("window must lie in (0, 1)")
    alpha = as_bloch(alpha)
    scan = scan_and_bracket(
        alpha, material, crystal, truncation,
        ((1.0 - window) * omega_guess, (1.0 + window) * omega_guess),
        settings=settings,
    )
    roots: list[float] = []
    for bracket in scan.brackets:
        try:
            omega, _ = _refine_bracket(
                bracket, alpha, material, crystal, truncation, settings
            )
        except (RootNotConvergedError, RejectedRootError):
            continue
        roots.append(omega)
    if not roots:
        raise BandNotFoundError(
            f"no accepted characteristic frequency within {window:.0%} of "
            f"omega={omega_guess}"
        )
    return min(roots, key=lambda w: abs(w - omega_guess))


def retruncated_root(
    omega: float,
    alpha,
    material: MaterialParams,
    crystal: DiskCrystal,
    truncation: int,
    *,
    increment: int = 2,
    settings: ScanSettings = ScanSettings(),
) -> float:
    """Re-refine an accepted root with the harmonic truncation increased.

    Seeds Muller at the known root and polishes against the larger matrix;
    used to verify that reported band frequencies are stable under
    truncation growth.
    """
    alpha = as_bloch(alpha)
    spread = 1e-5 * (1.0 + abs(omega))
    bracket = (omega - spread, float(omega), omega + spread)
    root, _ = _refine_bracket(
        bracket, alpha, material, crystal, truncation + increment, settings
    )
    return root


# ---------------------------------------------------------------------------
# path sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BandPoint:
    """Band frequencies at one sample of the zone-boundary path."""

    s: float
    alpha: np.ndarray = field(repr=False)
    omegas: tuple[float, ...]
    diagnostics: tuple[RootDiagnostics, ...] = field(repr=False)

    def __post_init__(self) -> None:
        if any(
            not second > first
            for first, second in zip(self.omegas, self.omegas[1:])
        ):
            raise ValueError("band frequencies must be strictly ascending")


@dataclass(frozen=True)
class BandStructure:
    """Bands over the closed corner path, with gap and first-band maximum.

    ``gap`` is ``(lo, hi)`` with ``lo`` the maximum of the first band and
    ``hi`` the minimum of the second, present only when ``hi > lo``;
    ``omega_star`` equals that maximum and ``argmax_alpha`` records where
    it is attained.  Samples whose root search failed are collected in
    ``failures`` as ``(s, alpha, reason)`` instead of aborting the sweep.
    """

    points: tuple[BandPoint, ...]
    omega_star: float
    argmax_alpha: np.ndarray = field(repr=False)
    gap: tuple[float, float] | None
    failures: tuple[tuple[float, tuple[float, float], str], ...] = ()


def _path_samples(
    resolution: int, reverse: bool
) -> list[tuple[float, np.ndarray]]:
    corners = [GAMMA_POINT, X_POINT, M_POINT, GAMMA_POINT]
    if reverse:
        corners = corners[::-1]
    samples: list[tuple[float, np.ndarray]] = []
    for edge in range(3):
        start, end = corners[edge], corners[edge + 1]
        for j in range(resolution):
            t = j / resolution
            samples.append(((edge + t) / 3.0, start + t * (end - start)))
    samples.append((1.0, corners[3].copy()))
    return samples


def band_structure(
    material: MaterialParams,
    crystal: DiskCrystal,
    truncation: int,
    resolution: int = 30,
    band_count: int = 2,
    omega_max: float = 0.5,
    *,
    settings: ScanSettings = ScanSettings(),
    threads: int = 1,
    reverse: bool = False,
) -> BandStructure:
    """Sweep the closed zone-boundary path and assemble the band structure.

    ``resolution`` samples per edge (three edges plus the repeated closing
    corner).  Samples are independent; with ``threads > 1`` they are
    computed concurrently and merged back in deterministic path order.
    Failed samples are recorded, not fatal.
    """
    if resolution < 3:
        raise ValueError("resolution must be at least 3 points per edge")
    if band_count < 1:
        raise ValueError("band_count must be at least 1")
    samples = _path_samples(resolution, reverse)

    def solve(sample: tuple[float, np.ndarray]):
        s, alpha = sample
        at_centre = float(np.hypot(alpha[0], alpha[1])) == 0.0
        needed = band_count - 1 if at_centre else band_count
        roots = _accepted_roots(
            alpha, material, crystal, truncation, omega_max, needed, settings
        )
        if len(roots) < needed:
            raise BandNotFoundError(
                f"found {len(roots)} of {needed} bands below omega={omega_max}"
            )
        if at_centre:
            roots = [(0.0, RootDiagnostics(0.0, 0))] + roots
        return BandPoint(
            s=s,
            alpha=alpha,
            omegas=tuple(r[0] for r in roots),
            diagnostics=tuple(r[1] for r in roots),
        )

    outcomes: list[BandPoint | Exception]
    if threads > 1:
        def guarded(sample):
            try:
                return solve(sample)
            except (BandNotFoundError, NonConvergenceError) as exc:
                return exc

        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(guarded, samples))
    else:
        outcomes = []
        for sample in samples:
            try:
                outcomes.append(solve(sample))
            except (BandNotFoundError, NonConvergenceError) as exc:
                outcomes.append(exc)

    points: list[BandPoint] = []
    failures: list[tuple[float, tuple[float, float], str]] = []
    for (s, alpha), outcome in zip(samples, outcomes):
        if isinstance(outcome, BandPoint):
            points.append(outcome)
        else:
            failures.append((s, (float(alpha[0]), float(alpha[1])), str(outcome)))
    if not points:
        s, alpha_pair, reason = failures[0]
        raise BandNotFoundError(
            f"band search failed at every path point; first: s={s:.6f}, "
            f"alpha=({alpha_pair[0]:.6f}, {alpha_pair[1]:.6f}): {reason}"
        )

    first_band = np.array([p.omegas[0] for p in points])
    star_index = int(np.argmax(first_band))
    omega_star = float(first_band[star_index])
    gap: tuple[float, float] | None = None
    if band_count >= 2:
        second_min = min(p.omegas[1] for p in points)
        if second_min > omega_star:
            gap = (omega_star, second_min)
    return BandStructure(
        points=tuple(points),
        omega_star=omega_star,
        argmax_alpha=points[star_index].alpha.copy(),
        gap=gap,
        failures=tuple(failures),
    )


def extract_gap_and_star(
    structure: BandStructure,
) -> tuple[float, tuple[float, float] | None]:
    """Recompute the first-band maximum and the gap from stored points."""
    if any(len(p.omegas) < 2 for p in structure.points):
        raise ValueError("gap extraction needs at least two bands per point")
    lo = max(p.omegas[0] for p in structure.points)
    hi = min(p.omegas[1] for p in structure.points)
    return lo, (lo, hi) if hi > lo else None
