"""Cylinder functions against scipy.special and classical identities."""

import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from bubblebands import bessel as bs

# Reference values, Abramowitz & Stegun style, frozen to 10 decimals.
FROZEN = [
    ("J", 0, 1.0, 0.7651976866),
    ("J", 3, 2.0, 0.1289432495),
    ("Y", 0, 1.0, 0.0882569642),
    ("Y", 1, 2.0, -0.1070324315),
]


@pytest.mark.parametrize("kind, n, x, value", FROZEN)
def test_frozen_reference_values(kind, n, x, value):
    seq = bs.bessel_j_seq(n, x) if kind == "J" else bs.bessel_y_seq(n, x)
    assert seq[n] == pytest.approx(value, abs=1e-9)


def test_frozen_hankel_value():
    assert bs.hankel1(1, 2.0) == pytest.approx(0.5767248078 - 0.1070324315j, abs=1e-9)


def test_j_matches_scipy_dense_grid():
    rng = np.random.default_rng(7)
    xs = np.concatenate([[0.05, 13.5, 300.0], rng.uniform(0.05, 300.0, 400)])
    J = bs.bessel_j_seq(18, xs)
    ref = sp.jv(np.arange(19)[:, None], xs[None, :])
    np.testing.assert_allclose(J, ref, rtol=0.0, atol=1e-12)


def test_y_matches_scipy_dense_grid():
    rng = np.random.default_rng(8)
    # include the series/asymptotic crossover region explicitly
    xs = np.concatenate([[0.05, 12.9, 13.5, 14.1, 300.0],
                         rng.uniform(0.05, 300.0, 300),
                         rng.uniform(10.0, 17.0, 200)])
    Y = bs.bessel_y_seq(18, xs)
    ref = sp.yv(np.arange(19)[:, None], xs[None, :])
    # mixed tolerance: absolute for |Y| <= 1, relative beyond
    err = np.abs(Y - ref) / np.maximum(1.0, np.abs(ref))
    assert err.max() < 1e-10


def test_wronskian_constant_across_orders():
    # J_{n+1} Y_n - J_n Y_{n+1} = 2 / (pi x) for every order
    xs = np.array([0.05, 0.7, 5.0, 13.2, 13.8, 80.0, 300.0])
    J = bs.bessel_j_seq(16, xs)
    Y = bs.bessel_y_seq(16, xs)
    W = J[1:] * Y[:-1] - J[:-1] * Y[1:]
    np.testing.assert_allclose(W, np.broadcast_to(2.0 / (np.pi * xs), W.shape),
                               rtol=0.0, atol=1e-10)


def test_zero_argument_j_limit():
    np.testing.assert_array_equal(bs.bessel_j_seq(5, 0.0),
                                  [1.0, 0.0, 0.0, 0.0, 0.0, 0.0])


def test_invalid_arguments_raise():
    with pytest.raises(ValueError):
        bs.bessel_j_seq(3, -1.0)
    with pytest.raises(ValueError):
        bs.bessel_y_seq(3, 0.0)
    with pytest.raises(ValueError):
        bs.bessel_y_seq(3, -2.0)
    with pytest.raises(ValueError):
        bs.bessel_j_seq(-1, 1.0)
    with pytest.raises(ValueError):
        bs.cyl_derivative("K", 1, 1.0)


def test_high_order_y_overflow_is_loud():
    # Y_n(x) ~ -((n-1)!/pi) (2/x)^n blows past float range for tiny x;
    # the overflowed tail must be -inf, never a silently wrong finite number.
    y = bs.bessel_y_seq(60, 1e-4)
    assert np.isneginf(y[-1])
    assert not np.any(np.isnan(y))
    ref = sp.yv(np.arange(41), 1e-4)
    np.testing.assert_allclose(y[:41], ref, rtol=1e-9)


def test_negative_order_hankel_reflection():
    for n in (1, 2, 5):
        want = (-1.0) ** n * bs.hankel1(n, 1.3)
        assert bs.hankel1(-n, 1.3) == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("kind, n, x", [
    ("J", 0, 2.0), ("J", 5, 3.0), ("J", 1, 0.3),
    ("H1", 0, 1.1), ("H1", 3, 1.5), ("H1", 7, 4.2),
])
def test_derivatives_match_scipy(kind, n, x):
    got = bs.cyl_derivative(kind, n, x)
    if kind == "J":
        assert got == pytest.approx(sp.jvp(n, x), abs=1e-12)
    else:
        ref = sp.jvp(n, x) + 1j * sp.yvp(n, x)
        assert got == pytest.approx(ref, abs=1e-12)


@given(st.floats(min_value=0.1, max_value=50.0),
       st.integers(min_value=2, max_value=30))
@settings(max_examples=60, deadline=None)
def test_three_term_recurrence_residual(x, nmax):
    J = bs.bessel_j_seq(nmax, x)
    for n in range(1, nmax):
        res = J[n - 1] + J[n + 1] - (2.0 * n / x) * J[n]
        assert abs(res) <= 1e-10 * max(1.0, abs(J[n]))


@given(st.floats(min_value=0.0, max_value=300.0),
       st.integers(min_value=0, max_value=25))
@settings(max_examples=60, deadline=None)
def test_j_bounded_by_one(x, n):
    assert abs(bs.bessel_j_seq(n, x)[n]) <= 1.0 + 1e-12


@given(st.floats(min_value=0.1, max_value=11.5),
       st.floats(min_value=-0.9, max_value=0.9))
@settings(max_examples=40, deadline=None)
def test_complex_branch_agrees_with_scipy(re, im):
    z = complex(re, im)
    H = bs.hankel1_seq_complex(8, z)
    for n in range(9):
        ref = sp.hankel1(n, z)
        assert abs(H[n] - ref) <= 1e-10 * max(1.0, abs(ref))


def test_complex_branch_reduces_to_real_axis():
    for x in (0.4, 2.7, 9.8):
        dJ = np.abs(bs.bessel_j_seq_complex(10, x + 0j) - bs.bessel_j_seq(10, x)).max()
        dY = np.abs(bs.bessel_y_seq_complex(10, x + 0j) - bs.bessel_y_seq(10, x)).max()
        assert dJ < 1e-12
        assert dY < 1e-11


def test_complex_domain_guard():
    for bad in (13.0 + 0j, 3.0 + 1.5j, 0j):
        with pytest.raises(ValueError):
            bs.bessel_j_seq_complex(3, bad)
