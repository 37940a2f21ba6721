"""Tests for the single-layer multipole blocks and the characteristic matrix."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bubblebands import multipole as mp
from bubblebands import reference
from bubblebands.lattice import M_POINT, LatticeSumTable, lattice_sum_table


def zero_sum_table(k: float, alpha, order_max: int) -> LatticeSumTable:
    """Table of identically zero lattice sums: the single-bubble limit."""
    return LatticeSumTable(
        k=complex(k),
        alpha=np.asarray(alpha, dtype=float),
        order_max=order_max,
        values=np.zeros(2 * order_max + 1, dtype=complex),
        est_error=0.0,
    )


# ---------------------------------------------------------------------------
# parameter value objects
# ---------------------------------------------------------------------------

def test_material_params_derived_quantities():
    mat = mp.MaterialParams(rho=2.0, kappa=8.0, rho_b=0.5, kappa_b=2.0)
    assert mat.delta == pytest.approx(0.25, rel=1e-15)
    assert mat.v == pytest.approx(2.0, rel=1e-15)
    assert mat.v_b == pytest.approx(2.0, rel=1e-15)
    assert mat.tau == pytest.approx(1.0, rel=1e-15)


def test_material_params_rejects_nonpositive():
    good = dict(rho=1.0, kappa=1.0, rho_b=1.0, kappa_b=1.0)
    for name in good:
        for bad in (0.0, -1.0, float("nan")):
            with pytest.raises(ValueError):
                mp.MaterialParams(**{**good, name: bad})


def test_disk_crystal_geometry():
    crystal = mp.DiskCrystal(radius=0.25)
    assert crystal.area == pytest.approx(np.pi * 0.0625, rel=1e-15)
    assert crystal.cell_halfwidth == 0.5
    for bad in (0.0, 0.5, 0.6, -0.1):
        with pytest.raises(ValueError):
            mp.DiskCrystal(radius=bad)


def test_characteristic_matrix_shape_validation():
    with pytest.raises(ValueError):
        mp.CharacteristicMatrix(
            omega=1.0,
            alpha=np.array([0.3, 0.3]),
            truncation=2,
            entries=np.zeros((9, 9), dtype=complex),
        )
    ok = mp.CharacteristicMatrix(
        omega=1.0,
        alpha=np.array([0.3, 0.3]),
        truncation=2,
        entries=np.zeros((10, 10), dtype=complex),
    )
    assert ok.size == 10


# ---------------------------------------------------------------------------
# free-space diagonal blocks
# ---------------------------------------------------------------------------

def test_inner_diagonal_frozen_value():
    s, _ = mp.inner_block_diag(0, 1.0, 1.0)
    assert s == pytest.approx(0.106082198153078 - 0.919744445473464j, abs=1e-12)


def test_inner_diagonal_matches_boundary_quadrature():
    rule = reference.QuadratureRule.with_node_count(256)
    for n, k, radius in [(0, 1.0, 1.0), (2, 1.3, 0.3), (5, 0.7, 0.25)]:
        s, _ = mp.inner_block_diag(n, k, radius)
        assert abs(reference.nystrom_free_space(n, k, radius, rule) - s) < 1e-6


def test_inner_diagonal_order_reflection():
    for n, k, radius in [(3, 1.1, 0.3), (4, 0.6, 0.45), (1, 2.5, 0.1)]:
        assert mp.inner_block_diag(n, k, radius) == mp.inner_block_diag(-n, k, radius)


def test_inner_diagonal_rejects_bad_arguments():
    with pytest.raises(ValueError):
        mp.inner_block_diag(0, 1.0, 0.0)
    with pytest.raises(ValueError):
        mp.inner_block_diag(0, 0.0, 0.3)
    with pytest.raises(ValueError):
        mp.inner_block_diag(0, -2.0, 0.3)


@settings(max_examples=80, deadline=None)
@given(
    n=st.integers(min_value=0, max_value=10),
    k=st.floats(min_value=0.1, max_value=20.0),
    radius=st.floats(min_value=0.02, max_value=0.49),
)
def test_normal_derivative_jump_is_one(n, k, radius):
    # Exterior minus interior one-sided derivative of the single layer is
    # exactly the density: the defining jump relation.
    alpha = (0.4, 0.7)
    table = zero_sum_table(k, alpha, 0)
    _, ds_out = mp.outer_block_entries(n, n, k, alpha, radius, table)
    _, ds_in = mp.inner_block_diag(n, k, radius)
    assert abs((ds_out - ds_in) - 1.0) < 1e-10


def test_jump_identity_tight_at_moderate_arguments():
    for n in range(9):
        table = zero_sum_table(1.0, (0.4, 0.7), 0)
        _, ds_out = mp.outer_block_entries(n, n, 1.0, (0.4, 0.7), 0.3, table)
        _, ds_in = mp.inner_block_diag(n, 1.0, 0.3)
        assert abs((ds_out - ds_in) - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# quasi-periodic blocks
# ---------------------------------------------------------------------------

def test_free_space_reduction_with_zero_lattice_sums():
    table = zero_sum_table(1.3, (0.4, 0.7), 8)
    for n in range(-4, 5):
        s, _ = mp.outer_block_entries(n, n, 1.3, (0.4, 0.7), 0.3, table)
        inner_s, _ = mp.inner_block_diag(n, 1.3, 0.3)
        assert s == inner_s
    for m, n in [(0, 1), (2, -2), (-3, 4)]:
        s, ds = mp.outer_block_entries(m, n, 1.3, (0.4, 0.7), 0.3, table)
        assert s == 0.0 and ds == 0.0


def test_odd_transfer_couplings_vanish_at_corner_point():
    # At alpha = (pi, pi) the odd-order lattice sums vanish, so every
    # off-diagonal entry with odd n - m loses its lattice contribution.
    table = lattice_sum_table(6, 0.9, M_POINT)
    for m, n in [(0, 1), (1, 2), (-2, 1), (3, 0), (-1, 2)]:
        s, ds = mp.outer_block_entries(m, n, 0.9, M_POINT, 0.25, table)
        assert abs(s) < 1e-8
        assert abs(ds) < 1e-8


def test_lattice_order_and_table_mismatch_errors():
    table = lattice_sum_table(2, 1.0, (0.5, 0.5))
    with pytest.raises(mp.MissingLatticeOrderError):
        mp.outer_block_entries(-2, 1, 1.0, (0.5, 0.5), 0.1, table)
    with pytest.raises(ValueError):
        mp.outer_block_entries(0, 1, 1.1, (0.5, 0.5), 0.1, table)
    with pytest.raises(ValueError):
        mp.outer_block_entries(0, 1, 1.0, (0.5, 0.6), 0.1, table)


# ---------------------------------------------------------------------------
# assembled characteristic matrix
# ---------------------------------------------------------------------------

GENERIC_MAT = mp.MaterialParams(rho=3.0, kappa=2.0, rho_b=0.6, kappa_b=1.1)


def test_assembled_matrix_shape_and_metadata():
    crystal = mp.DiskCrystal(radius=0.3)
    cm = mp.assemble_characteristic_matrix(
        1.1, GENERIC_MAT, (0.9, -0.4), crystal, 3
    )
    assert cm.entries.shape == (14, 14)
    assert cm.size == 14
    assert cm.omega == 1.1
    assert cm.truncation == 3


def test_assembly_matches_entrywise_construction():
    omega, alpha, radius, trunc = 1.1, (0.9, -0.4), 0.3, 2
    crystal = mp.DiskCrystal(radius=radius)
    cm = mp.assemble_characteristic_matrix(omega, GENERIC_MAT, alpha, crystal, trunc)
    k = omega / GENERIC_MAT.v
    k_b = omega / GENERIC_MAT.v_b
    table = lattice_sum_table(2 * trunc, k, alpha)
    width = 2 * trunc + 1
    orders = range(-trunc, trunc + 1)
    for i, m in enumerate(orders):
        for j, n in enumerate(orders):
            s_in, ds_in = mp.inner_block_diag(n, k_b, radius)
            s_out, ds_out = mp.outer_block_entries(m, n, k, alpha, radius, table)
            expect_tl = s_in if m == n else 0.0
            expect_bl = ds_in if m == n else 0.0
            assert cm.entries[i, j] == pytest.approx(expect_tl, abs=1e-14)
            assert cm.entries[i, width + j] == pytest.approx(-s_out, rel=1e-12, abs=1e-14)
            assert cm.entries[width + i, j] == pytest.approx(expect_bl, abs=1e-14)
            assert cm.entries[width + i, width + j] == pytest.approx(
                -GENERIC_MAT.delta * ds_out, rel=1e-12, abs=1e-14
            )


def test_density_contrast_scales_flux_lattice_block_only():
    # Doubling both bubble density and bubble stiffness keeps the interior
    # sound speed (hence the wavenumbers) fixed and doubles the density
    # contrast, so exactly the flux-side quasi-periodic block doubles.
    mat1 = mp.MaterialParams(rho=3.0, kappa=2.0, rho_b=0.6, kappa_b=1.1)
    mat2 = mp.MaterialParams(rho=3.0, kappa=2.0, rho_b=1.2, kappa_b=2.2)
    crystal = mp.DiskCrystal(radius=0.3)
    cm1 = mp.assemble_characteristic_matrix(1.1, mat1, (0.9, -0.4), crystal, 2)
    cm2 = mp.assemble_characteristic_matrix(1.1, mat2, (0.9, -0.4), crystal, 2)
    w = 5
    np.testing.assert_allclose(cm2.entries[:w, :], cm1.entries[:w, :], rtol=1e-14)
    np.testing.assert_allclose(
        cm2.entries[w:, :w], cm1.entries[w:, :w], rtol=1e-14
    )
    np.testing.assert_allclose(
        cm2.entries[w:, w:], 2.0 * cm1.entries[w:, w:], rtol=1e-14
    )


def test_high_contrast_regression_smallest_singular_value():
    # High-contrast bubble crystal at a subwavelength frequency: the matrix
    # is near-singular but not singular; value pinned as a regression.
    mat = mp.MaterialParams(rho=5000.0, kappa=5000.0, rho_b=1.0, kappa_b=1.0)
    cm = mp.assemble_characteristic_matrix(
        0.2, mat, (np.pi, np.pi), mp.DiskCrystal(radius=0.05), 7
    )
    smallest = np.linalg.svd(cm.entries, compute_uv=False)[-1]
    assert np.isfinite(smallest) and smallest > 0.0
    assert smallest == pytest.approx(7.303292999938e-05, rel=1e-6)


def test_momentum_reversal_leaves_singular_spectrum_invariant():
    crystal = mp.DiskCrystal(radius=0.3)
    sv_pos = np.linalg.svd(
        mp.assemble_characteristic_matrix(
            1.1, GENERIC_MAT, (0.9, -0.4), crystal, 3
        ).entries,
        compute_uv=False,
    )
    sv_neg = np.linalg.svd(
        mp.assemble_characteristic_matrix(
            1.1, GENERIC_MAT, (-0.9, 0.4), crystal, 3
        ).entries,
        compute_uv=False,
    )
    assert np.max(np.abs(sv_pos - sv_neg)) < 1e-8 * sv_pos[0]


def test_assembly_continuous_into_complex_frequency():
    crystal = mp.DiskCrystal(radius=0.3)
    base = mp.assemble_characteristic_matrix(1.1, GENERIC_MAT, (0.9, -0.4), crystal, 2)
    shifted = mp.assemble_characteristic_matrix(
        1.1 + 1e-8j, GENERIC_MAT, (0.9, -0.4), crystal, 2
    )
    assert np.max(np.abs(shifted.entries - base.entries)) < 1e-6
    assert np.any(shifted.entries.imag != base.entries.imag)


def test_assemble_rejects_bad_frequency_and_truncation():
    crystal = mp.DiskCrystal(radius=0.3)
    for bad_omega in (0.0, -1.0, -0.5 + 0.1j):
        with pytest.raises(ValueError):
            mp.assemble_characteristic_matrix(
                bad_omega, GENERIC_MAT, (0.9, -0.4), crystal, 2
            )
    with pytest.raises(ValueError):
        mp.assemble_characteristic_matrix(1.1, GENERIC_MAT, (0.9, -0.4), crystal, -1)


# ---------------------------------------------------------------------------
# quasi-static matrix
# ---------------------------------------------------------------------------

def test_quasistatic_matrix_hermitian_negative_definite():
    m = mp.quasistatic_matrix(np.array([0.9, -2.0]), 0.05, 3, 40)
    assert np.max(np.abs(m - m.conj().T)) < 1e-10
    eigenvalues = np.linalg.eigvalsh(m)
    assert np.all(eigenvalues < 0.0)


def test_quasistatic_entry_truncation_decays_like_inverse_cutoff():
    # Raw entries carry a 1/cutoff truncation tail; successive doubling
    # differences shrink by a factor ~2, and the two-point extrapolants of
    # adjacent ladder rungs agree far beyond the raw values.
    vals = {
        c: mp.quasistatic_matrix(np.array([np.pi, np.pi]), 0.05, 0, c)[0, 0]
        for c in (60, 120, 240)
    }
    d1 = abs(vals[60] - vals[120])
    d2 = abs(vals[120] - vals[240])
    assert 1.9 < d1 / d2 < 2.15
    drift = abs((2 * vals[120] - vals[60]) - (2 * vals[240] - vals[120]))
    assert drift < 1e-5
    assert drift < 0.05 * d2


def test_quasistatic_matrix_validation():
    with pytest.raises(mp.ZeroAlphaError):
        mp.quasistatic_matrix(np.array([0.0, 0.0]), 0.05, 2, 40)
    with pytest.raises(ValueError):
        mp.quasistatic_matrix(np.array([0.5, 0.5]), 0.05, 2, 19)
    with pytest.raises(ValueError):
        mp.quasistatic_matrix(np.array([0.5, 0.5]), 0.05, -1, 40)
    with pytest.raises(ValueError):
        mp.quasistatic_matrix(np.array([0.5, 0.5]), -0.05, 2, 40)
