import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize

from sextic.errors import DomainError
from sextic.potential import (
    DOUBLE_WELL_EDGE,
    TRIPLE_WELL_EDGE,
    Regime,
    classify_potential,
    evaluate_potential,
    exact_ground_state_second_derivative,
    exact_ground_state_value,
    ground_state_cutoff,
    ground_state_moment,
    ground_state_norm_sq,
    potential_derivative,
    potential_second_derivative,
    stationary_points,
)

finite = st.floats(-1e2, 1e2, allow_nan=False)
triple = st.floats(-0.0277, -1e-4)


def test_origin_and_harmonic_limit():
    assert evaluate_potential(-0.3, 0.0) == 0.0
    assert evaluate_potential(0.0, 1.0) == 1.0


@given(lam=st.floats(-1, 1), x=finite)
def test_parity(lam, x):
    assert evaluate_potential(lam, x) == evaluate_potential(lam, -x)


@pytest.mark.parametrize(
    "lam, regime",
    [
        (-1 / 72, Regime.TRIPLE_WELL),
        (0.2, Regime.DOUBLE_WELL),
        (-0.05, Regime.SINGLE_WELL_BELOW),
        (0.05, Regime.SINGLE_WELL),
    ],
)
def test_regimes(lam, regime):
    assert classify_potential(lam).regime is regime


@pytest.mark.parametrize("lam", [TRIPLE_WELL_EDGE, 0.0, DOUBLE_WELL_EDGE])
def test_boundaries_are_flagged(lam):
    assert classify_potential(lam).regime is Regime.DEGENERATE_BOUNDARY


def test_stationary_points_by_root_finding():
    sp = stationary_points(-0.01)
    # independent oracle: roots of V' on a bracket, refined by brentq
    f = lambda x: potential_derivative(-0.01, x)
    xM = optimize.brentq(f, 1.0, 4.0)
    xm = optimize.brentq(f, 4.0, 6.0)
    assert sp.x_M_sq == pytest.approx(xM * xM, rel=1e-12)
    assert sp.x_m_sq == pytest.approx(xm * xm, rel=1e-12)
    assert sp.x_m_sq == pytest.approx(70 / 3, rel=1e-12)
    assert sp.x_M_sq == pytest.approx(10.0, rel=1e-12)


def test_side_minimum_value_matches_grid_minimisation():
    lam = -0.01
    x = np.linspace(3.5, 6.0, 20001)
    v = evaluate_potential(lam, x)
    x0 = x[np.argmin(v)]
    for _ in range(5):
        x0 -= potential_derivative(lam, x0) / potential_second_derivative(lam, x0)
    sp = stationary_points(lam)
    assert evaluate_potential(lam, math.sqrt(sp.x_m_sq)) == pytest.approx(evaluate_potential(lam, x0), rel=1e-12)
    assert sp.V_xm == pytest.approx(evaluate_potential(lam, x0), rel=1e-12)


def test_small_coupling_expansions():
    lam = -0.001
    sp = stationary_points(lam)
    assert abs(sp.x_m_sq / (-1 / (4 * lam) - 1.5 + 13.5 * lam) - 1) < 1e-3
    lam = -1e-6
    sp = stationary_points(lam)
    assert sp.V_xm == pytest.approx(3.0, abs=1e-4)
    assert sp.curvature_xm == pytest.approx(8.0, abs=1e-3)
    assert sp.curvature_xM == pytest.approx(-8 / 3, abs=1e-3)
    assert sp.curvature_origin == pytest.approx(2.0, abs=1e-4)


@given(lam=triple)
@settings(max_examples=50)
def test_triple_well_ordering(lam):
    sp = stationary_points(lam)
    assert 0 < sp.x_M_sq < sp.x_m_sq
    assert sp.V_xM >= sp.V_xm
    assert sp.curvature_xM < 0 < sp.curvature_xm
    scale = abs(sp.curvature_xm) * math.sqrt(sp.x_m_sq)
    assert abs(potential_derivative(lam, math.sqrt(sp.x_m_sq))) < 1e-10 * scale
    assert abs(potential_derivative(lam, math.sqrt(sp.x_M_sq))) < 1e-10 * scale


@given(lam=triple)
@settings(max_examples=30)
def test_five_stationary_points(lam):
    sp = stationary_points(lam)
    # even point count keeps x = 0 off the grid
    x = np.linspace(-1.5, 1.5, 200000) * math.sqrt(sp.x_m_sq)
    d = potential_derivative(lam, x)
    assert np.count_nonzero(np.diff(np.sign(d)) != 0) == 5


@pytest.mark.parametrize("lam", [-0.05, 0.01, 0.2])
def test_stationary_points_domain(lam):
    with pytest.raises(DomainError):
        stationary_points(lam)


@given(lam=st.floats(0, 2), x=st.floats(-3, 3))
def test_hamiltonian_identity(lam, x):
    phi = exact_ground_state_value(lam, x)
    local = (-exact_ground_state_second_derivative(lam, x) + evaluate_potential(lam, x) * phi) / phi
    assert local == pytest.approx(1.0, abs=1e-9)


def test_ground_state_values():
    assert exact_ground_state_value(0.5, 0.0) == 1.0
    assert ground_state_norm_sq(0.0) == pytest.approx(math.sqrt(math.pi), rel=1e-13)
    with pytest.raises(DomainError):
        exact_ground_state_value(-0.1, 0.0)
    with pytest.raises(DomainError):
        ground_state_norm_sq(-0.1)


def test_norm_two_rules_agree():
    xc = ground_state_cutoff(0.1)
    assert xc * xc / 2 + 0.1 * xc**4 == pytest.approx(40.0)
    f = lambda x: exact_ground_state_value(0.1, x) ** 2
    x, w = np.polynomial.legendre.leggauss(400)
    gl = xc * np.sum(w * f(xc * x))
    romb = integrate.romb(f(np.linspace(-xc, xc, 2**14 + 1)), dx=2 * xc / 2**14)
    assert abs(gl - romb) < 1e-10
    assert ground_state_norm_sq(0.1) == pytest.approx(gl, abs=1e-10)


def test_moment_zero_coupling():
    assert ground_state_moment(0.0, 1) == pytest.approx(0.5, rel=1e-12)
    assert ground_state_moment(0.0, 3) == pytest.approx(15 / 8, rel=1e-12)
