import mpmath as mp
import numpy as np
import pytest
from scipy.integrate import solve_ivp

from wavemap_lab import spectral as sp
from wavemap_lab.errors import PoleError, RangeError

MP_OPS = (mp.sin, mp.cos, mp.exp)


def mp_residual(kind, r, z):
    """|-f'' + 2 f / r^2 - z^2 f| for the printed closed form, at 40 digits."""
    with mp.workdps(40):
        fn = lambda s: sp._raw(kind, s, z, MP_OPS)
        f = fn(r)
        d2 = mp.diff(fn, r, 2)
        res = -d2 + 2 * f / r ** 2 - z ** 2 * f
        return abs(res) / ((1 + abs(z) ** 2) * max(1, abs(f)))


def test_free_forms_solve_ode():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(1000):
        kind = ("phi0", "theta0", "psi0")[rng.integers(3)]
        r = mp.mpf(float(rng.uniform(1, 30)))
        z = mp.mpc(float(rng.uniform(0.01, 10)), float(rng.uniform(0, 2)))
        worst = max(worst, float(mp_residual(kind, r, z)))
    assert worst < 1e-10


def test_stable_evaluators_match_printed_forms():
    rng = np.random.default_rng(2)
    for _ in range(200):
        r = float(rng.uniform(1, 50))
        lam = float(10 ** rng.uniform(-2, 2))
        with mp.workdps(50):
            z, rr = mp.mpf(lam), mp.mpf(r)
            ref_phi = float(sp._raw("phi0", rr, z, MP_OPS))
            ref_theta = float(sp._raw("theta0", rr, z, MP_OPS))
        scale = max(1.0, abs(ref_phi), abs(ref_theta))
        assert abs(sp.phi0(r, lam) - ref_phi) < 1e-12 * scale * (1 + lam ** -3)
        assert abs(sp.theta0(r, lam) - ref_theta) < 1e-12 * scale * (1 + lam ** -3)


def test_boundary_values_and_wronskian():
    lam = np.geomspace(1e-3, 1e3, 61)
    assert np.allclose(sp.phi0(1.0, lam), 0, atol=1e-14)
    assert np.allclose(sp.phi0_prime(1.0, lam), 1, atol=1e-12)
    assert np.allclose(sp.theta0(1.0, lam), 1, atol=1e-12)
    assert np.allclose(sp.theta0_prime(1.0, lam), 0, atol=1e-9)
    r = np.geomspace(1, 100, 10)
    for L in np.geomspace(1e-2, 1e2, 25):
        W = sp.theta0(r, L) * sp.phi0_prime(r, L) - sp.theta0_prime(r, L) * sp.phi0(r, L)
        assert np.max(np.abs(W - 1)) < 1e-8


def test_psi0_and_m0():
    assert sp.m0(1.0) == pytest.approx(-0.5 + 0.5j, abs=1e-15)
    for z in (0.3, 2.0, 1 + 0.5j):
        assert sp.psi0(1.0, z) == pytest.approx(1.0)
        assert sp.psi0_prime(1.0, z) == pytest.approx(sp.m0(z), rel=1e-14)
    assert sp.omega0(2.0) == pytest.approx(2 * 2.0 * sp.m0(2.0).imag)


def test_free_eval_errors():
    with pytest.raises(PoleError):
        sp.free_eval("m0", -1j)
    with pytest.raises(PoleError):
        sp.free_eval("psi0", 2.0, -1j + 1e-10)
    with pytest.raises(RangeError):
        sp.free_eval("phi0", 0.5, 1.0)
    with pytest.raises(ValueError):
        sp.free_eval("nope", 2.0, 1.0)
    assert sp.free_eval("phi0", 2.0, 1.0) == pytest.approx(sp.phi0(2.0, 1.0))
    assert sp.free_eval("phi0", 2.0, 1 + 1j) == pytest.approx(
        complex(sp._raw("phi0", mp.mpf(2), mp.mpc(1, 1), MP_OPS)), rel=1e-13)


def test_green_function():
    r, rp = 3.0, 5.5
    for lam in (0.5, 2.0, 10.0):
        assert sp.G0(r, rp, lam) == pytest.approx(sp.G0_closed(r, rp, lam), rel=1e-10)
        assert sp.G0(r, r, lam) == 0.0
        Y, Yp, J, Jp = sp.free_pair(r, lam)
        # d/dr G0(r, r') at r' = r is -W(Y, J) = -1
        assert Yp * J - Jp * Y == pytest.approx(-1.0, abs=1e-12)


def test_phi0_bound_scan():
    rep = sp.phi0_bound_scan()
    assert rep["sup"] == pytest.approx(1.0600, abs=5e-4)
    assert rep["psi0_sup"] <= 1 + 1e-12


def test_plancherel():
    f = sp.gaussian_bump()
    rep = sp.plancherel_roundtrip(f)
    assert rep["l2_error"] < 1e-6
    assert rep["parseval_defect"] < 1e-6
    coarse = sp.plancherel_roundtrip(f, lam_max=50.0, n_nodes=2500)
    assert coarse["l2_error"] > 10 * rep["l2_error"]
    with pytest.raises(RangeError):
        sp.plancherel_roundtrip(f, lam_max=20.0, n_nodes=1000, tol=1e-10)


def test_plancherel_zero_profile():
    rep = sp.plancherel_roundtrip(lambda r: np.zeros_like(r), n_nodes=512)
    assert rep["l2_error"] == 0.0


@pytest.mark.slow
def test_local_energy_ratio_stable(V1):
    f = lambda r: np.exp(-0.5 * ((np.asarray(r) - 4.0) / 0.25) ** 2)
    W = lambda r: np.sqrt(np.abs(V1(r)))
    a = sp.local_energy_sanity(f, W, T=100.0, lam_max=20.0)["ratio"]
    b = sp.local_energy_sanity(f, W, T=200.0, lam_max=40.0)["ratio"]
    assert a == pytest.approx(1.44085026256, rel=1e-6)
    assert b == pytest.approx(a, rel=1e-3)


def test_zero_potential_reduction():
    for lam in (0.05, 1.0, 7.0):
        pb = sp.perturbed_basis(None, lam)
        assert abs(pb.m - sp.m0(lam)) < 1e-10
        assert np.max(np.abs(pb.phi - sp.phi0(pb.r, lam))) < 1e-10 * (1 + lam ** -3)


@pytest.mark.parametrize("lam", [0.1, 1.0, 5.0])
def test_psi_tilde_against_ode_solver(V1, lam):
    pb = sp.volterra_solve(V1, lam)
    R = sp.R_MAX

    def rhs(r, y):
        return [y[1], (2 / r ** 2 + V1(np.array([r]))[0] - lam ** 2) * y[0]]

    y0 = [complex(sp.psi0(R, lam)), complex(sp.psi0_prime(R, lam))]
    sol = solve_ivp(rhs, (R, 1.0), y0, method="DOP853", rtol=1e-12, atol=1e-14)
    assert abs(sol.y[0, -1] - pb.psi_t1) < 1e-8 * abs(pb.psi_t1)
    assert abs(sol.y[1, -1] - pb.dpsi_t1) < 1e-8 * abs(pb.dpsi_t1)


def test_weyl_wronskian_and_residual(V1):
    for lam in np.geomspace(1e-2, 1e2, 9):
        pb = sp.perturbed_basis(V1, lam)
        assert pb.wronskian_error() < 1e-8
        assert sp.ode_residual(pb) < 1e-6
        assert pb.m.imag > 0


def test_im_m_bracket(V1):
    br = sp.im_m_bracket(V1, np.geomspace(1e-2, 1e-1, 6))
    assert br["ratio"][0] == pytest.approx(6.5598, abs=1e-3)
    assert 6.5 < br["lower"] <= br["upper"] < 6.8


def test_spectral_weight(V1):
    lams = np.geomspace(1.0, 100.0, 7)
    free = sp.spectral_weight_check(None, lams)
    # free weight: lam^-2 drho/dlam = 2 lam^2 / (1 + lam^2) in [1, 2)
    assert free["ratio_min"] == pytest.approx(1.0) and free["ratio_max"] < 2.0
    rep = sp.spectral_weight_check(V1, lams)
    assert 1.0 <= rep["ratio_min"] and rep["ratio_max"] < 4.0
    assert rep["omega"][-1] / lams[-1] ** 2 == pytest.approx(2.0, abs=1e-3)
    low = sp.spectral_weight_check(V1, np.geomspace(1e-2, 5e-2, 4))
    assert low["small_lam_slope"] == pytest.approx(4.0, abs=0.05)


def test_slow_potential_rejected():
    with pytest.raises(RangeError):
        sp.volterra_solve(lambda r: 1 / np.asarray(r) ** 3, 1.0)
    with pytest.raises(RangeError):
        sp.perturbed_basis(None, 0.0)


def test_zero_energy_free():
    zp = sp.zero_energy(None)
    assert np.max(np.abs(zp.u0 - 1 / zp.r)) < 1e-12
    assert np.max(np.abs(zp.u1 - (zp.r ** 3 - 1) / (3 * zp.r))) < 1e-10 * zp.r.max() ** 2


def test_zero_energy_matches_scaling_mode(Q1, V1):
    zp = sp.zero_energy(V1)
    r = zp.r[zp.r < 500]
    ref = r ** 2 * Q1.derivative(r) / (2 * Q1.tail_c)
    assert np.max(np.abs(zp.u0[: r.size] - ref)) < 1e-6
    assert zp.wronskian_error() < 1e-12
    assert zp.u0_1 == pytest.approx(0.3905139071840782, rel=1e-8)
    assert abs(zp.du0_1) < 1e-10
    assert zp.boundary_functional == pytest.approx(0.781027814, rel=1e-8)
    assert zp.tail_fit()["u0_slope"] == pytest.approx(-4.0, abs=0.01)


def test_point_spectrum(V1):
    a = sp.point_spectrum_probe(V1, n=4000)
    b = sp.point_spectrum_probe(V1, n=8000)
    free = sp.point_spectrum_probe(None, n=4000)
    assert a["lowest"] >= -1e-6 and b["lowest"] >= -1e-6
    assert a["lowest"] == pytest.approx(b["lowest"], rel=1e-3)
    # the potential is attractive, so it pulls the bottom down but not below 0
    assert 0 < a["lowest"] <= free["lowest"]


def test_low_energy_basis(V1):
    lb = sp.low_energy_basis(V1, 1e-3)
    assert lb.W_spread < 1e-12
    assert lb.wronskian == pytest.approx(1.0, abs=1e-12)
    assert lb.contraction < 1
    assert 1e-3 ** 3 * abs(lb.a) == pytest.approx(0.19525, rel=2e-3)
    with pytest.raises(RangeError):
        sp.low_energy_basis(V1, 5e-2)


def test_low_energy_free_reduction():
    lam = 2e-3
    lb = sp.low_energy_basis(None, lam, r0=1.0)
    assert np.max(np.abs(lb.u1 - sp.phi0(lb.r, lam))) < 1e-12 * np.max(np.abs(lb.u1))


def test_phi_bound(V1):
    rep = sp.phi_bound_scan(V1, np.geomspace(1e-3, 1e-1, 7))
    assert rep["max"] < 1.0
    assert rep["max"] == pytest.approx(0.41513, abs=1e-3)


def test_weyl_table_columns(V1):
    rows = sp.weyl_table(V1, [0.5, 2.0])
    for row in rows:
        assert row["omega"] == pytest.approx(2 * row["lam"] * row["im_m"])
        assert set(row) >= {"lam", "re_m", "im_m", "omega", "abs_c", "wronskian_error"}
