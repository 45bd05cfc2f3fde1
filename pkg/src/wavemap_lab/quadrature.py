"""Small quadrature helpers used across modules.

Everything here works on sampled data or on Gauss-Legendre panels. The
panel machinery provides spectrally accurate *cumulative* integrals, which
the Volterra solvers in :mod:`wavemap_lab.spectral` need.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre


def trapezoid(y, x=None, dx=1.0, axis=-1):
    """Composite trapezoid rule (thin wrapper kept for a single import site)."""
    return np.trapezoid(y, x=x, dx=dx, axis=axis)


def simpson_uniform(y, h, axis=-1):
    """Composite Simpson rule on a uniform grid.

    Falls back to Simpson + one trapezoid panel when the number of intervals
    is odd; the extra panel is O(h^3) so the rule stays effectively 2nd order
    in the worst case and 4th order otherwise.
    """
    y = np.moveaxis(np.asarray(y), axis, -1)
    n = y.shape[-1]
    if n < 3:
        return np.trapezoid(y, dx=h, axis=-1)
    m = n if (n - 1) % 2 == 0 else n - 1
    s = y[..., 0:m - 2:2] + 4.0 * y[..., 1:m - 1:2] + y[..., 2:m:2]
    total = h / 3.0 * np.sum(s, axis=-1)
    if m != n:
        total = total + 0.5 * h * (y[..., -2] + y[..., -1])
    return total


@lru_cache(maxsize=16)
def gauss_panel_rule(order: int):
    """Legendre nodes/weights on [-1, 1] plus the right-tail integration matrix.

    ``tail @ f`` returns int_{x_k}^{1} p(s) ds at every node x_k, where p is
    the interpolating polynomial of ``f`` at the nodes.
    """
    nodes, weights = legendre.leggauss(order)
    vander = legendre.legvander(nodes, order - 1)
    to_coef = np.linalg.inv(vander)
    # antiderivative of each Legendre basis function, normalised to vanish at +1
    tail = np.empty((order, order))
    for k in range(order):
        c = np.zeros(order)
        c[k] = 1.0
        anti = legendre.legint(c)
        at_one = legendre.legval(1.0, anti)
        tail[:, k] = at_one - legendre.legval(nodes, anti)
    tail = tail @ to_coef
    nodes.setflags(write=False)
    weights.setflags(write=False)
    tail.setflags(write=False)
    return nodes, weights, tail


@lru_cache(maxsize=16)
def gauss_diff_matrix(order: int):
    """``D @ f`` differentiates the interpolant of ``f`` at the Legendre nodes."""
    nodes, _, _ = gauss_panel_rule(order)
    vander = legendre.legvander(nodes, order - 1)
    dvander = np.empty_like(vander)
    for k in range(order):
        c = np.zeros(order)
        c[k] = 1.0
        dvander[:, k] = legendre.legval(nodes, legendre.legder(c))
    D = dvander @ np.linalg.inv(vander)
    D.setflags(write=False)
    return D


class PanelGrid:
    """Composite Gauss-Legendre grid on [a, b] given panel break points.

    Attributes
    ----------
    r : (n_panels, order) array of nodes
    w : matching quadrature weights
    """

    def __init__(self, breaks, order: int = 16):
        breaks = np.asarray(breaks, dtype=float)
        if breaks.ndim != 1 or breaks.size < 2 or np.any(np.diff(breaks) <= 0):
            raise ValueError("panel breaks must be strictly increasing")
        self.breaks = breaks
        self.order = order
        x, w, tail = gauss_panel_rule(order)
        half = 0.5 * np.diff(breaks)[:, None]
        mid = 0.5 * (breaks[:-1] + breaks[1:])[:, None]
        self.r = mid + half * x[None, :]
        self.w = half * w[None, :]
        self._half = half
        self._tail = tail

    @property
    def flat(self):
        return self.r.ravel()

    def integral(self, f):
        return np.sum(np.asarray(f).reshape(self.r.shape) * self.w)

    def tail_integral(self, f):
        """int_{r}^{b} f at every node (f sampled on the nodes)."""
        f = np.asarray(f).reshape(self.r.shape)
        within = (f @ self._tail.T) * self._half
        totals = np.sum(f * self.w, axis=1)
        beyond = np.concatenate([np.cumsum(totals[::-1])[::-1][1:], [0.0]])
        return within + beyond[:, None]

    def derivative(self, f):
        """Panelwise spectral derivative of nodal samples."""
        f = np.asarray(f).reshape(self.r.shape)
        return (f @ gauss_diff_matrix(self.order).T) / self._half

    def head_integral(self, f):
        """int_{a}^{r} f at every node."""
        f = np.asarray(f).reshape(self.r.shape)
        totals = np.sum(f * self.w, axis=1)
        within = totals[:, None] - (f @ self._tail.T) * self._half
        before = np.concatenate([[0.0], np.cumsum(totals)[:-1]])
        return within + before[:, None]


def graded_breaks(a, b, h_min, growth=1.08, h_max=None):
    """Panel breaks starting at spacing ``h_min`` and growing geometrically."""
    h_max = h_max or (b - a)
    pts = [a]
    h = h_min
    while pts[-1] < b:
        pts.append(min(pts[-1] + h, b))
        h = min(h * growth, h_max)
    if b - pts[-2] < 0.25 * h_min and len(pts) > 2:
        pts.pop(-2)
    return np.array(pts)
