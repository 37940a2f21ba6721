"""Ewald-accelerated lattice sums: exact identities, oracle agreement, guards."""

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from bubblebands import lattice as lat
from bubblebands.reference import brute_lattice_sum


# ---------------------------------------------------------------------------
# Bloch-vector plumbing and resonance margins
# ---------------------------------------------------------------------------

def test_bloch_vector_validation():
    np.testing.assert_allclose(lat.as_bloch((0.1, -0.2)), [0.1, -0.2])
    np.testing.assert_allclose(lat.as_bloch(lat.M_POINT), [np.pi, np.pi])
    with pytest.raises(ValueError):
        lat.as_bloch((0.1, 0.2, 0.3))
    with pytest.raises(ValueError):
        lat.as_bloch((4.0, 0.0))
    with pytest.raises(ValueError):
        lat.as_bloch((np.nan, 0.0))


def test_margin_arithmetic_examples():
    # resonance sitting exactly on k
    assert lat.empty_lattice_margin(np.pi, lat.X_POINT) == pytest.approx(0.0, abs=1e-12)
    # nearest reciprocal point at the corner Bloch vector is |(pi, pi)|
    assert lat.empty_lattice_margin(0.1, lat.M_POINT) == pytest.approx(
        np.pi * np.sqrt(2.0) - 0.1, abs=1e-12
    )


def test_margin_picks_global_minimum_over_reciprocal_points():
    # several |q| candidates cluster near k = 6.3 for alpha = (0.01, 0);
    # the winner is |q| = 2 pi + 0.01, giving 6.3 - 6.2931853... = 0.0068147
    assert lat.empty_lattice_margin(6.3, (0.01, 0.0)) == pytest.approx(
        6.3 - (2.0 * np.pi + 0.01), abs=1e-10
    )


# ---------------------------------------------------------------------------
# exact identities of the sums themselves
# ---------------------------------------------------------------------------

def test_static_real_part_identity():
    # Re Q_0 = -1 for every admissible (k, alpha): the real parts of the
    # outgoing cylinder waves interlock with the incident one via the
    # lattice-average of J_0, which vanishes off resonance.
    for k, al in ((1.9, (0.4, -1.1)), (0.6, (2.0, -0.5)), (2.8, (np.pi, 0.3))):
        table = lat.lattice_sum_table(2, k, al)
        assert table.value(0).real == pytest.approx(-1.0, abs=1e-10)


def test_odd_orders_vanish_at_corner_bloch_vectors():
    for alpha in (lat.X_POINT, np.array([0.0, np.pi]), lat.M_POINT):
        table = lat.lattice_sum_table(6, 1.3, alpha)
        for n in (-5, -3, -1, 1, 3, 5):
            assert abs(table.value(n)) <= table.est_error


def test_odd_orders_within_default_tolerance_at_corner():
    table = lat.lattice_sum_table(6, 0.9, lat.M_POINT, tol=1e-8)
    assert max(abs(table.value(n)) for n in (-5, -3, -1, 1, 3, 5)) <= 1e-8


def test_alpha_reflection_parity():
    alpha = np.array([0.7, -1.9])
    plus = lat.lattice_sum_table(4, 1.45, alpha)
    minus = lat.lattice_sum_table(4, 1.45, -alpha)
    for n in range(-4, 5):
        assert plus.value(n) * (-1.0) ** n == pytest.approx(
            minus.value(n), abs=2e-8
        )


@settings(max_examples=60, deadline=None)
@given(
    ax=st.floats(-np.pi, np.pi),
    ay=st.floats(-np.pi, np.pi),
    k=st.floats(0.25, 3.0),
)
def test_parity_and_static_identity_property(ax, ay, k):
    alpha = np.array([ax, ay])
    assume(lat.empty_lattice_margin(k, alpha) > 0.2)
    plus = lat.lattice_sum_table(3, k, alpha)
    minus = lat.lattice_sum_table(3, k, -alpha)
    assert plus.value(0).real == pytest.approx(-1.0, abs=1e-9)
    for n in range(-3, 4):
        assert plus.value(n) * (-1.0) ** n == pytest.approx(
            minus.value(n), abs=2e-8
        )


# ---------------------------------------------------------------------------
# agreement with the brute-force oracle
# ---------------------------------------------------------------------------

def test_matches_brute_oracle_at_reference_point():
    value = lat.lattice_sum(0, 1.0, (np.pi, 0.0))
    brute = brute_lattice_sum(0, 1.0, (np.pi, 0.0), shell_count=400)
    assert abs(value - brute.value) < 1e-6


def test_table_matches_brute_oracle_entrywise():
    alpha = (np.pi / 2, np.pi / 3)
    table = lat.lattice_sum_table(4, 1.0, alpha)
    for n in range(-4, 5):
        brute = brute_lattice_sum(n, 1.0, alpha)
        err = abs(table.value(n) - brute.value)
        assert err < 1e-6
        assert err <= brute.dispersion + table.est_error


# ---------------------------------------------------------------------------
# table consistency and caching
# ---------------------------------------------------------------------------

def test_table_matches_elementwise_calls():
    table = lat.lattice_sum_table(4, 1.7, (0.3, 2.1))
    for n in range(-4, 5):
        assert abs(table.value(n) - lat.lattice_sum(n, 1.7, (0.3, 2.1))) <= 1e-12


def test_table_order_bounds_and_repeatability():
    table = lat.lattice_sum_table(3, 2.2, (1.0, 0.5))
    with pytest.raises(IndexError):
        table.value(4)
    again = lat.lattice_sum_table(3, 2.2, (1.0, 0.5))
    np.testing.assert_array_equal(table.values, again.values)


def test_default_tolerance_has_wide_headroom():
    table = lat.lattice_sum_table(4, 2.7, (0.9, -2.0))
    assert table.est_error <= 1e-10


# ---------------------------------------------------------------------------
# guards and failure modes
# ---------------------------------------------------------------------------

def test_near_resonance_guard_raises():
    with pytest.raises(lat.NearEmptyResonanceError):
        lat.lattice_sum_table(2, np.pi - 0.01, lat.X_POINT)
    # wider guard catches points the default would accept
    with pytest.raises(lat.NearEmptyResonanceError):
        lat.lattice_sum_table(2, np.pi - 0.2, lat.X_POINT, guard=0.5)
    # same wavenumber passes at the default guard
    lat.lattice_sum_table(2, np.pi - 0.2, lat.X_POINT)


def test_unreachable_tolerance_raises_after_widening():
    # Gaussian window damping reaches ~1e-85 truncation tails after the
    # automatic widening retry; below that the request cannot be met.
    with pytest.raises(lat.NonConvergenceError):
        lat.lattice_sum_table(2, 1.1, (0.6, 0.6), tol=1e-90)


def test_wavenumber_domain_checks():
    with pytest.raises(ValueError):
        lat.lattice_sum_table(2, -1.0, (0.5, 0.5))
    with pytest.raises(ValueError):
        lat.lattice_sum_table(2, 1.0 + 2.0j, (0.5, 0.5))


def test_slightly_complex_wavenumber_is_continuous():
    base = lat.lattice_sum_table(2, 1.3, (0.8, -0.4))
    shifted = lat.lattice_sum_table(2, 1.3 + 1e-7j, (0.8, -0.4))
    for n in range(-2, 3):
        assert abs(base.value(n) - shifted.value(n)) < 1e-4
    assert shifted.values[2].imag != 0.0  # genuinely complex evaluation
