"""Exact-rational Lyapunov regions and their boundary certificates.

Polynomials are stored in a shifted monomial basis with ``Fraction``
coefficients, so areas come out as exact rationals. Positivity of the
boundary expressions nu . N is certified by interval subdivision with a
Lipschitz lower bound on every cell.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction as Fr
from typing import Callable

import numpy as np

from . import phase_plane as pp
from .errors import UnsupportedRegionError


def _fr(v):
    return v if isinstance(v, Fr) else Fr(v)


@dataclass(frozen=True)
class RationalPoly:
    """sum_k c_k (t - shift)^k with exact rational c_k."""

    coeffs: tuple
    shift: Fr = Fr(0)
    var: str = "x"

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(_fr(c) for c in self.coeffs))
        object.__setattr__(self, "shift", _fr(self.shift))

    @property
    def degree(self):
        d = len(self.coeffs) - 1
        while d > 0 and self.coeffs[d] == 0:
            d -= 1
        return d

    def exact(self, t):
        u = _fr(t) - self.shift
        acc = Fr(0)
        for c in reversed(self.coeffs):
            acc = acc * u + c
        return acc

    def __call__(self, t):
        u = np.asarray(t, dtype=float) - float(self.shift)
        acc = np.zeros_like(u)
        for c in reversed(self.coeffs):
            acc = acc * u + float(c)
        return acc

    def deriv(self):
        cs = [k * c for k, c in enumerate(self.coeffs)][1:] or [Fr(0)]
        return RationalPoly(cs, self.shift, self.var)

    def antideriv(self):
        return RationalPoly([Fr(0)] + [c / (k + 1) for k, c in enumerate(self.coeffs)], self.shift, self.var)

    def integrate(self, lo, hi):
        a = self.antideriv()
        return a.exact(hi) - a.exact(lo)

    def __add__(self, other):
        if not isinstance(other, RationalPoly):
            cs = list(self.coeffs)
            cs[0] += _fr(other)
            return RationalPoly(cs, self.shift, self.var)
        if other.shift != self.shift:
            other = other.reshift(self.shift)
        n = max(len(self.coeffs), len(other.coeffs))
        a = list(self.coeffs) + [Fr(0)] * (n - len(self.coeffs))
        b = list(other.coeffs) + [Fr(0)] * (n - len(other.coeffs))
        return RationalPoly([x + y for x, y in zip(a, b)], self.shift, self.var)

    def __neg__(self):
        return RationalPoly([-c for c in self.coeffs], self.shift, self.var)

    def __sub__(self, other):
        return self + (-other if isinstance(other, RationalPoly) else -_fr(other))

    def reshift(self, new_shift):
        """Same polynomial expanded around ``new_shift`` (exact Taylor shift)."""
        new_shift = _fr(new_shift)
        d = new_shift - self.shift
        cs = list(self.coeffs)
        n = len(cs)
        # repeated synthetic division
        for i in range(n):
            for k in range(n - 2, i - 1, -1):
                cs[k] += d * cs[k + 1]
        return RationalPoly(cs, new_shift, self.var)

    def sup_abs_bound(self, lo, hi):
        """Upper bound for |p| on [lo, hi] from the triangle inequality."""
        r = max(abs(float(lo) - float(self.shift)), abs(float(hi) - float(self.shift)))
        return sum(abs(float(c)) * r ** k for k, c in enumerate(self.coeffs))

    def to_json(self):
        return {"var": self.var, "shift": str(self.shift), "coeffs": [str(c) for c in self.coeffs]}

    @classmethod
    def from_json(cls, d):
        return cls([Fr(c) for c in d["coeffs"]], Fr(d["shift"]), d["var"])


def from_affine_plus_shifted(c0, c1, higher, shift, var):
    """c0 + c1 t + sum_{k>=2} higher[k-2] (t - shift)^k, re-expressed around shift."""
    c0, c1, shift = _fr(c0), _fr(c1), _fr(shift)
    return RationalPoly([c0 + c1 * shift, c1] + [_fr(h) for h in higher], shift, var)


# -- built-in polynomials -----------------------------------------------------

P1 = RationalPoly(
    [Fr(-3, 1000), Fr(110, 47), Fr(-89, 222), Fr(-23, 42), Fr(7, 85), Fr(8, 303),
     Fr(-1, 446), Fr(-1, 760), Fr(1, 4035), Fr(-1, 13999)],
    Fr(-43, 18), "x")

P2 = from_affine_plus_shifted(
    Fr(-6627, 638000), Fr(-17913, 29000),
    [Fr(-19, 75), Fr(-17, 80), Fr(-29, 106), Fr(-36, 115), Fr(-9, 20), Fr(-19, 31),
     Fr(-32, 35), Fr(-42, 31)],
    Fr(21, 22), "y")

P3 = from_affine_plus_shifted(
    Fr(-104159, 877500), Fr(-9383, 19500),
    [Fr(-18, 113), Fr(2, 365), Fr(-38, 291), Fr(3, 50), Fr(-21, 158), Fr(6, 71),
     Fr(-2, 15), Fr(7, 82), Fr(-31, 278), Fr(6, 121)],
    Fr(3, 5), "y")

P_OMEGA2 = RationalPoly([Fr(3, 100), Fr(15, 4), Fr(18, 89), Fr(-136, 181)], Fr(11, 2), "x")


# -- regions ------------------------------------------------------------------


@dataclass(frozen=True)
class Slab:
    """{var in (lo, hi), lower(var) < other < upper(var)}; bounds are polys or rationals."""

    var: str
    lo: Fr
    hi: Fr
    lower: object
    upper: object

    def area(self):
        up = self.upper if isinstance(self.upper, RationalPoly) else RationalPoly([_fr(self.upper)], var=self.var)
        low = self.lower if isinstance(self.lower, RationalPoly) else RationalPoly([_fr(self.lower)], var=self.var)
        return (up - low).integrate(self.lo, self.hi)


@dataclass(frozen=True)
class BoundaryPiece:
    """A boundary component with its nu . N expression.

    ``expr(t)`` is vectorised; ``lipschitz(lo, hi)`` bounds |expr'| on [lo, hi].
    """

    name: str
    param: str
    lo: Fr
    hi: Fr
    expr: Callable
    lipschitz: Callable | None = None
    exact_positive: bool = False  # e.g. nu . N = y on a segment with y > 0


@dataclass
class Region:
    name: str
    slabs: list
    pieces: list
    corners: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_json(self):
        def enc(b):
            return b.to_json() if isinstance(b, RationalPoly) else str(b)

        return {
            "name": self.name,
            "slabs": [{"var": s.var, "lo": str(s.lo), "hi": str(s.hi),
                       "lower": enc(s.lower), "upper": enc(s.upper)} for s in self.slabs],
            "pieces": [{"name": p.name, "param": p.param, "lo": str(p.lo), "hi": str(p.hi)}
                       for p in self.pieces],
            "corners": {k: [str(c) for c in v] for k, v in self.corners.items()},
            "notes": self.notes,
        }

    def dumps(self):
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def exact_area(region: Region):
    total = Fr(0)
    parts = []
    for s in region.slabs:
        for b in (s.lower, s.upper):
            if not isinstance(b, (RationalPoly, Fr, int)):
                raise UnsupportedRegionError(f"{region.name}: non-polynomial boundary")
        a = s.area()
        parts.append(a)
        total += a
    return {"exact": total, "decimal": float(total), "parts": parts}


# Lipschitz helpers for f on an interval
def _f_sup(lo, hi):
    m = max(abs(lo), abs(hi))
    return 0.25 + (29.0 / 18.0) * m


def _fp_sup(lo, hi):
    m = max(abs(lo), abs(hi))
    return 0.5 + 29.0 / 18.0 + (29.0 / 9.0) * m


def _graph_x_piece(name, p, lo, hi):
    """nu . N = f(x) - p(x)(1 + p'(x)) for the upper graph y = p(x)."""
    d1, d2 = p.deriv(), p.deriv().deriv()

    def expr(x):
        return pp.f(x) - p(x) * (1.0 + d1(x))

    def lip(a, b):
        P, D1, D2 = p.sup_abs_bound(a, b), d1.sup_abs_bound(a, b), d2.sup_abs_bound(a, b)
        return _fp_sup(a, b) + D1 * (1 + D1) + P * D2

    return BoundaryPiece(name, "x", lo, hi, expr, lip)


def _graph_y_piece(name, p, lo, hi):
    """nu . N = y + p'(y)(y - f(p(y))) for the right graph x = p(y)."""
    d1, d2 = p.deriv(), p.deriv().deriv()

    def expr(y):
        return y + d1(y) * (y - pp.f(p(y)))

    def lip(a, b):
        P, D1, D2 = p.sup_abs_bound(a, b), d1.sup_abs_bound(a, b), d2.sup_abs_bound(a, b)
        ymax = max(abs(float(a)), abs(float(b)))
        return 1 + D2 * (ymax + _f_sup(-P, P)) + D1 * (1 + _fp_sup(-P, P) * D1)

    return BoundaryPiece(name, "y", lo, hi, expr, lip)


def omega_minus1_region():
    a = Fr(-43, 18) + Fr(3, 1000)
    x_c = Fr(-3, 5)
    y_mid, y_top = Fr(3, 5), Fr(21, 22)
    slabs = [
        Slab("x", a, x_c, Fr(0), P1),
        Slab("y", y_mid, y_top, x_c, P2),
        Slab("y", Fr(0), y_mid, x_c, P3),
    ]

    def nu5(x):
        return 0.6 - pp.f(x)

    pieces = [
        _graph_x_piece("nu1", P1, Fr(-43, 18), x_c),
        _graph_y_piece("nu2", P2, y_mid, y_top),
        _graph_y_piece("nu3", P3, Fr(0), y_mid),
        BoundaryPiece("nu4", "y", y_mid, y_top, lambda y: np.asarray(y, dtype=float),
                      lambda a_, b_: 1.0, exact_positive=True),
        BoundaryPiece("nu5", "x", P3.exact(y_mid), P2.exact(y_mid), nu5,
                      lambda a_, b_: _fp_sup(float(a_), float(b_))),
    ]
    corners = {
        "p2(21/22)": (P2.exact(y_top),),
        "p1(-3/5)": (P1.exact(x_c),),
        "p2(3/5)": (P2.exact(y_mid),),
        "p3(3/5)": (P3.exact(y_mid),),
        "p3(0)": (P3.exact(0),),
    }
    notes = ["Sigma_1 read with upper boundary y < p1(x)",
             "nu3 uses the derivative p3'(y)"]
    return Region("omega_-1", slabs, pieces, corners, notes)


def omega2_region():
    lo, hi = Fr(18, 5), Fr(11, 2)
    p = P_OMEGA2
    d1, d2 = p.deriv(), p.deriv().deriv()

    def expr(x):
        return p(x) * (1.0 + d1(x)) - pp.f(x)

    def lip(a, b):
        P, D1, D2 = p.sup_abs_bound(a, b), d1.sup_abs_bound(a, b), d2.sup_abs_bound(a, b)
        return D1 * (1 + D1) + P * D2 + _fp_sup(a, b)

    pieces = [BoundaryPiece("nu", "x", lo, hi, expr, lip)]
    notes = ["p(11/2) = 3/100 > 0: the signed integral -int p is a lower bound for the area"]
    return Region("omega_2", [Slab("x", lo, hi, p, Fr(0))], pieces,
                  {"p(18/5)": (p.exact(lo),), "p(11/2)": (p.exact(hi),)}, notes)


BUILTIN = {"omega1": omega_minus1_region, "omega_-1": omega_minus1_region, "omega2": omega2_region}


# -- verification -------------------------------------------------------------


def certify_positive(piece: BoundaryPiece, max_cells=2_000_000, initial=256):
    """Subdivide until every cell has value(mid) - L * width / 2 > 0."""
    lo, hi = float(piece.lo), float(piece.hi)
    if piece.exact_positive:
        return {"certified": lo > 0, "lower_bound": lo, "cells": 1}
    edges = np.linspace(lo, hi, initial + 1)
    a, b = edges[:-1], edges[1:]
    cells = 0
    worst = np.inf
    while len(a):
        mid = 0.5 * (a + b)
        val = piece.expr(mid)
        if np.any(val <= 0):
            k = int(np.argmin(val))
            return {"certified": False, "lower_bound": float(val[k]), "at": float(mid[k]), "cells": cells}
        L = np.array([piece.lipschitz(x0, x1) for x0, x1 in zip(a, b)])
        low = val - L * 0.5 * (b - a)
        ok = low > 0
        cells += int(ok.sum())
        if ok.any():
            worst = min(worst, float(low[ok].min()))
        a, b = a[~ok], b[~ok]
        if cells + 2 * len(a) > max_cells:
            return {"certified": False, "lower_bound": None, "cells": cells, "reason": "cell budget"}
        mid = 0.5 * (a + b)
        a, b = np.concatenate([a, mid]), np.concatenate([mid, b])
    return {"certified": True, "lower_bound": worst, "cells": cells}


def lyapunov_boundary_check(region: Region, mode="sampled", samples=10_000):
    out = {}
    for piece in region.pieces:
        t = np.linspace(float(piece.lo), float(piece.hi), samples)
        v = np.asarray(piece.expr(t), dtype=float)
        k = int(np.argmin(v))
        rep = {"min": float(v[k]), "argmin": float(t[k]), "positive": bool(v[k] > 0)}
        if mode == "refined":
            rep["certificate"] = certify_positive(piece)
            rep["positive"] = rep["positive"] and rep["certificate"]["certified"]
        out[piece.name] = rep
    out["all_positive"] = all(r["positive"] for r in out.values() if isinstance(r, dict))
    return out


def area_vs_integral_check(rep: pp.ManifoldReport, region: Region, budget: float):
    """Compare int y^2 along an orbit with the exact area and the energy budget."""
    area = exact_area(region)
    traj = rep.trajectory
    return {
        "integral_y2": float(traj.ysq[-1]),
        "area": area["decimal"],
        "area_exact": str(area["exact"]),
        "budget": budget,
        "area_exceeds_budget": area["decimal"] > budget,
        "outcome": rep.outcome,
        "sink": rep.sink,
    }
