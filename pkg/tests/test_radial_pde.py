import numpy as np
import pytest
from scipy.integrate import quad

from wavemap_lab import radial_pde as rp
from wavemap_lab.errors import ConfigurationError, InvalidStateError, RangeError


def bump_state(A=0.3, c=7.0, w=3.0, h=0.02, t_final=50.0):
    grid = rp.RadialGrid.with_spacing(rp.required_r_max(t_final, c + 4 * w), h)
    return rp.WaveState.from_functions(grid, lambda r: rp.bump(r, A, c, w))


def test_grid_and_state_validation():
    with pytest.raises(ConfigurationError):
        rp.RadialGrid(0.5, 10)
    with pytest.raises(ConfigurationError):
        rp.RadialGrid(10.0, 10, r_min=0.0)
    g = rp.RadialGrid.with_spacing(11.0, 0.1)
    assert g.h == pytest.approx(0.1) and g.r[0] == 1.0
    with pytest.raises(InvalidStateError):
        rp.WaveState(g, np.ones(g.n), np.zeros(g.n))
    with pytest.raises(InvalidStateError):
        rp.WaveState(g, np.zeros(g.n - 1), np.zeros(g.n))


def test_derivative4_order():
    errs = []
    for h in (0.02, 0.01):
        r = np.arange(1.0, 3.0 + h / 2, h)
        errs.append(np.max(np.abs(rp.derivative4(np.sin(r), h) - np.cos(r))))
    assert errs[0] / errs[1] > 12


def test_energy_against_quad():
    A, c, w = 1.0, 5.0, 1.5
    st = bump_state(A, c, w, h=0.005)
    E = rp.energy(st)
    psi = lambda r: rp.bump(np.array([r]), A, c, w)[0]
    dpsi = lambda r, e=1e-5: (psi(r + e) - psi(r - e)) / (2 * e)
    ref_grad = quad(lambda r: 0.5 * dpsi(r) ** 2 * r ** 2, 1, st.grid.r_max, limit=400)[0]
    ref_pot = quad(lambda r: np.sin(psi(r)) ** 2, 1, st.grid.r_max, limit=400)[0]
    assert E.gradient == pytest.approx(ref_grad, rel=1e-7)
    assert E.sine_potential == pytest.approx(ref_pot, rel=1e-7)
    assert E.kinetic == 0.0


def test_local_and_difference_energy():
    st = bump_state(1.0, 5.0, 1.5)
    assert rp.local_energy(st, 10.0) <= rp.energy(st).total
    assert rp.difference_energy(st, st.psi) == 0.0
    with pytest.raises(RangeError):
        rp.energy(st, R=1e6)


def test_hardy_and_strauss():
    st = bump_state(1.0, 5.0, 1.5)
    rep = rp.hardy_strauss_check(st)
    assert 0 < rep["hardy_ratio"] <= 1
    assert 0 < rep["strauss_sup"] <= 1


def test_five_dim_roundtrip():
    st = bump_state()
    back = rp.from_five_dim(rp.to_five_dim(st))
    assert np.allclose(back.psi, st.psi, rtol=0, atol=1e-15)
    assert rp.lp6_norm_u(st) > 0


def test_cfl_violation():
    st = bump_state()
    with pytest.raises(ConfigurationError):
        rp.evolve(st, dt=2 * st.grid.h, t_final=1.0)


def test_zero_data_stays_zero():
    g = rp.RadialGrid.with_spacing(20.0, 0.05)
    tr = rp.evolve(rp.WaveState(g, np.zeros(g.n), np.zeros(g.n)), t_final=2.0)
    assert np.all(tr.states[-1].psi == 0)


def test_drift_second_order():
    drifts = []
    for h in (0.04, 0.02):
        tr = rp.evolve(bump_state(1.0, 5.0, 1.5, h=h, t_final=10.0), t_final=10.0, keep_states=False)
        drifts.append(tr.diagnostics["max_rel_drift"])
    order = np.log2(drifts[0] / drifts[1])
    assert 1.8 < order < 2.2


def test_linear_matches_nonlinear_for_small_data():
    st = bump_state(1e-4, 5.0, 1.5, t_final=5.0)
    a = rp.evolve(st, t_final=5.0, record_dt=5.0).states[-1].psi
    b = rp.evolve_linear(st, t_final=5.0, record_dt=5.0).states[-1].psi
    assert np.max(np.abs(a - b)) < 1e-11


def test_bump_decay_and_resolution():
    factors = []
    for h in (0.02, 0.01):
        st = bump_state(1.0, 5.0, 1.5, h=h)
        tr = rp.evolve(st, t_final=50.0, record_dt=0.25)
        d = rp.scattering_diagnostics(tr, 10.0)
        factors.append(rp.decay_factor(d["times"], d["local_energy_series"], 50.0))
    assert factors[0] >= 100
    assert abs(factors[1] / factors[0] - 1) < 0.1


def test_perturbed_state_energy(Q1):
    g = rp.RadialGrid.with_spacing(60.0, 0.02)
    st, q = rp.perturbed_state(Q1, g, 1e-4)
    assert rp.difference_energy(st, q) == pytest.approx(1e-4, rel=1e-12)


def test_scattering_diagnostics_errors():
    st = bump_state(t_final=2.0)
    tr = rp.evolve(st, t_final=2.0)
    with pytest.raises(RangeError):
        rp.scattering_diagnostics(tr, R=1e4)
    with pytest.raises(RangeError):
        rp.scattering_diagnostics(tr, window=(0.0, 5.0))
    assert len(rp.unit_window_s_norms(tr)) == 2
