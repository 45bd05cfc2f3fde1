import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp

from wavemap_lab import harmonic_maps as hm
from wavemap_lab.errors import SearchFailure

Q1_SLOPE = 3.7862993062885835
Q1_TAIL_C = 4.847839854575364


def oracle_slope(n=1, s_max=np.log(1e4), iters=45):
    """Bisection in s = log r, where Q_ss + Q_s = sin 2Q, with LSODA."""

    def overshoots(k):
        def up(s, v):
            return v[0] - n * np.pi

        def turn(s, v):
            return v[1]

        up.terminal = turn.terminal = True
        turn.direction = -1
        sol = solve_ivp(lambda s, v: [v[1], -v[1] + np.sin(2 * v[0])], (0, s_max), [0.0, k],
                        method="LSODA", rtol=1e-12, atol=1e-14, events=[up, turn])
        if len(sol.t_events[0]):
            return True
        if len(sol.t_events[1]):
            return sol.y[0, -1] >= n * np.pi
        return sol.y[0, -1] > n * np.pi

    lo, hi = 0.5, 10.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if overshoots(mid) else (mid, hi)
    return 0.5 * (lo + hi)


def test_slope_against_independent_shooting(Q1):
    assert Q1.slope == pytest.approx(oracle_slope(), abs=1e-7)


def test_frozen_values(Q1):
    assert Q1.slope == pytest.approx(Q1_SLOPE, abs=1e-9)
    assert Q1.tail_c == pytest.approx(Q1_TAIL_C, rel=1e-6)
    assert Q1.bracket[0] <= Q1.slope <= Q1.bracket[1]


def test_profile_properties(Q1):
    r = np.geomspace(1, 1e3, 500)
    q = Q1(r)
    assert q[0] == pytest.approx(0.0, abs=1e-14)
    assert np.all(np.diff(q) > 0)
    assert np.all(q < np.pi)
    assert abs(Q1(np.array([Q1.r_max]))[0] - np.pi) < 1e-6


def test_tail_is_inverse_square(Q1):
    fit = hm.tail_fit(Q1)
    assert fit["residual"] < 1e-2
    far = np.array([2e4, 1e5])
    assert np.allclose(np.pi - Q1(far), Q1_TAIL_C / far ** 2)


def test_ode_residual(Q1):
    assert hm.ode_residual(Q1) < 1e-8


def test_potential(Q1):
    pot = hm.potential(Q1)
    assert np.all(pot.V <= 0)
    # V = -4 sin^2 Q / r^2 ~ -4 c^2 / r^6 at infinity
    assert pot.r6V_max == pytest.approx(4 * Q1_TAIL_C ** 2, rel=0.01)


def test_linearized_gauge(Q1):
    g = hm.linearized_gauge(Q1)
    assert g["residual"] < 1e-6
    assert g["psi_min"] > 0
    assert g["psi1"] == pytest.approx(Q1.slope, rel=1e-12)


def test_energy_by_quadrature(Q1):
    # E(Q) = int (Q'^2 r^2 / 2 + sin^2 Q) dr, compared with the tail estimate on [1e3, inf)
    dens = lambda r: 0.5 * Q1.derivative(np.array([r]))[0] ** 2 * r ** 2 + np.sin(Q1(np.array([r]))[0]) ** 2
    inner = quad(dens, 1, 1e3, limit=400, epsabs=1e-12, epsrel=1e-12)[0]
    tail = quad(dens, 1e3, 1e4, limit=200)[0]
    assert tail < 3 * Q1_TAIL_C ** 2 / 1e3 ** 3
    e = inner + tail
    assert 0 < e < np.inf
    probe = hm.energy_minimality_probe(Q1, n_trials=10)
    assert probe["all_positive"]


def test_degree_two():
    Q2 = hm.find_harmonic(2)
    assert Q2.slope == pytest.approx(6.9832633067230745, abs=1e-8)
    assert Q2.slope == pytest.approx(oracle_slope(2), abs=1e-6)
    assert abs(Q2(np.array([Q2.r_max]))[0] - 2 * np.pi) < 1e-6


def test_zero_map_and_errors():
    z = hm.zero_map()
    assert np.all(z(np.linspace(1, 10, 5)) == 0)
    with pytest.raises(ValueError):
        hm.find_harmonic(0)
    with pytest.raises(SearchFailure):
        hm.find_harmonic(1, s_max=1.0)
    with pytest.raises(ValueError):
        hm.shoot(-1.0)


def test_shoot_classification():
    assert hm.shoot(Q1_SLOPE * 0.9).classification == "undershoot"
    over = hm.shoot(Q1_SLOPE * 1.1)
    assert over.level >= 1
