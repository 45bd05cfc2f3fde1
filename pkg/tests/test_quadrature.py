import numpy as np
import pytest

from wavemap_lab import quadrature as qd


def test_panel_integrals():
    g = qd.PanelGrid(qd.graded_breaks(1.0, 20.0, 0.1, 1.2, 2.0), 16)
    r = g.flat
    f = np.exp(-r) * np.cos(r)
    F = lambda x: np.exp(-x) * (np.sin(x) - np.cos(x)) / 2
    assert g.integral(f) == pytest.approx(F(20.0) - F(1.0), abs=1e-14)
    head = g.head_integral(f).ravel()
    tail = g.tail_integral(f).ravel()
    assert np.max(np.abs(head - (F(r) - F(1.0)))) < 1e-13
    assert np.max(np.abs(tail - (F(20.0) - F(r)))) < 1e-13


def test_spectral_derivative():
    g = qd.PanelGrid(np.linspace(0, 3, 7), 16)
    d = g.derivative(np.sin(g.flat)).ravel()
    assert np.max(np.abs(d - np.cos(g.flat))) < 1e-11


def test_gauss_rule_exactness():
    x, w, tail = qd.gauss_panel_rule(8)
    for k in range(16):
        assert np.sum(w * x ** k) == pytest.approx((1 - (-1) ** (k + 1)) / (k + 1), abs=1e-13)
    # tail matrix integrates degree-7 polynomials exactly from each node to 1
    assert np.allclose(tail @ x ** 7, (1 - x ** 8) / 8, atol=1e-14)


def test_graded_breaks():
    b = qd.graded_breaks(1.0, 100.0, 0.05, 1.15, 5.0)
    assert b[0] == 1.0 and b[-1] == 100.0
    assert np.all(np.diff(b) > 0) and np.max(np.diff(b)) <= 5.0 + 1e-12


def test_simpson_and_trapezoid():
    x = np.linspace(0, np.pi, 201)
    assert qd.simpson_uniform(np.sin(x), x[1] - x[0]) == pytest.approx(2.0, abs=1e-8)
    assert qd.trapezoid(np.sin(x), x) == pytest.approx(2.0, abs=1e-4)
