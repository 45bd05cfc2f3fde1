import mpmath as mp
import numpy as np
import pytest

from wavemap_lab import phase_plane as pp
from wavemap_lab.errors import DegenerateEquilibriumError, RangeError


def f_mp(x):
    return mp.sin(2 * x) / 4 + mp.mpf(29) / 18 * x * mp.cos(2 * x)


def fd6(fun, x, h):
    c = (-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0)
    return sum(ck * fun(x + (k - 3) * h) for k, ck in enumerate(c)) / (60.0 * h)


def test_zeros_against_mpmath():
    # independent oracle: mpmath root finding on the closed form of f
    for j, guess in enumerate((0.87, 2.39, 3.95, 5.51), start=1):
        with mp.workdps(30):
            ref = float(mp.findroot(f_mp, guess))
        assert abs(pp.zero(j) - ref) < 1e-12


def test_zeros_published_digits():
    for j, v in enumerate((0.8733, 2.3886, 3.9466, 5.51186), start=1):
        assert abs(pp.zero(j) - v) < 5e-4


def test_zeros_odd_symmetry():
    for j in range(1, 5):
        assert pp.zero(-j) == -pp.zero(j)
    assert pp.zero(0) == 0.0


def test_zero_outside_box():
    with pytest.raises(RangeError):
        pp.zero(40)


def test_F_phase_is_primitive():
    x = np.linspace(-6, 6, 101)
    fd = fd6(pp.F_phase, x, 1e-3)
    assert np.max(np.abs(fd - pp.f(x))) < 1e-8


def test_budgets_by_quadrature():
    b = pp.budgets()
    x2, x4 = pp.zero(2), pp.zero(4)
    with mp.workdps(30):
        ref1 = mp.quad(f_mp, [0, x2])
        ref2 = -mp.quad(f_mp, [x2, x4])
    assert abs(b["F(x2)-F(0)"] - float(ref1)) < 1e-12
    assert abs(b["F(x2)-F(x4)"] - float(ref2)) < 1e-12
    assert abs(b["F(x2)-F(0)"] + 2.1799) < 1e-3
    assert abs(b["F(x2)-F(x4)"] - 2.52841) < 1e-3
    assert b["F(0)-F(x-2)"] == pytest.approx(-b["F(x2)-F(0)"])


def test_equilibrium_types():
    kinds = {j: pp.equilibrium(j).kind for j in range(-3, 5)}
    for j, k in kinds.items():
        if j % 2 == 0:
            assert k == "saddle"
        else:
            assert k.endswith("sink")
    lp, lm = pp.equilibrium(2).eigenvalues
    assert lp.real > 0 > lm.real


def test_classify_degenerate():
    with pytest.raises(DegenerateEquilibriumError):
        pp.classify(0.5, scale=0.0)


def test_conservation_identity():
    traj, _ = pp.integrate(0.3, 0.4, 30.0)
    assert pp.conservation_residual(traj) < 1e-9
    assert pp.conservation_residual(traj, 5.0, 20.0) < 1e-9


def test_reflect_is_solution():
    traj, _ = pp.integrate(0.3, 0.4, 10.0)
    m = pp.reflect(traj)
    other, _ = pp.integrate(-0.3, -0.4, 10.0)
    k = len(other.t) // 2
    assert np.interp(other.t[k], m.t, m.x) == pytest.approx(other.x[k], abs=1e-8)


def test_manifold_crossings():
    x1, x2, x3 = pp.zero(1), pp.zero(2), pp.zero(3)
    w0 = pp.unstable_manifold(0, "+")
    w4 = pp.unstable_manifold(4, "-")
    assert x1 < w0.crossing < x2
    assert x2 < w4.crossing < x3
    assert w0.residual < 1e-8
    # seed offset delta -> delta / 10
    for rep, j, b in ((w0, 0, "+"), (w4, 4, "-")):
        finer = pp.unstable_manifold(j, b, delta=rep.delta / 10)
        assert abs(finer.crossing - rep.crossing) < 1e-5


def test_manifold_capture_and_negative_control():
    w = pp.unstable_manifold(-2, "+", follow="limit", target_x=0.0)
    assert w.outcome == "captured" and w.sink == -1
    neg = pp.unstable_manifold(-2, "+", scale=1.5, follow="limit", target_x=0.0)
    assert neg.outcome == "reached-target"


def test_unstable_manifold_needs_saddle():
    with pytest.raises(DegenerateEquilibriumError):
        pp.unstable_manifold(1)
