"""Renormalised damped pendulum for the far strips.

Shifting by z_j = (2j-1) pi / 4 and rescaling time by
eps = sqrt(72 / (29 pi (2j-1))) turns the phase-plane system into

    zeta' = eta,    eta' = sin 2 zeta - eps eta - eps^2 g(zeta).
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath as mp
import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from . import phase_plane as pp
from .errors import ConfigurationError, IntegrationFailure

ALPHA = 6.0 / 5.0
BETA = 5.0 / 4.0
EPS_MAX = 7.0 / 20.0


def eps_for(j: int) -> float:
    if j % 2 or j < 4:
        raise ConfigurationError("j must be an even integer >= 4")
    eps = np.sqrt(72.0 / (29.0 * np.pi * (2 * j - 1)))
    assert 0 < eps < EPS_MAX
    return float(eps)


def z_shift(j: int) -> float:
    return (2 * j - 1) * np.pi / 4


@dataclass(frozen=True)
class RenormParams:
    j: int
    z: float
    eps: float

    @classmethod
    def for_j(cls, j):
        return cls(j, z_shift(j), eps_for(j))


def g(z):
    z = np.asarray(z, dtype=float)
    return 0.25 * np.cos(2 * z) - (29.0 / 18.0) * z * np.sin(2 * z)


def G(x):
    x = np.asarray(x, dtype=float)
    return (29.0 / 36.0) * x * np.cos(2 * x) - (5.0 / 18.0) * np.sin(2 * x)


def h(z, eps):
    return np.sin(2 * np.asarray(z, dtype=float)) - eps ** 2 * g(z)


def f_decomposition(j, z):
    """(-1)^j (29/18) z_j sin 2z + (-1)^{j+1} g(z), which should equal f(z_j + z)."""
    s = (-1) ** j
    return s * (29.0 / 18.0) * z_shift(j) * np.sin(2 * np.asarray(z)) - s * g(z)


def cross_identity_residual(js, zetas, dps=40):
    """max |f(z_j + z) - decomposition| with both sides at ``dps`` digits.

    In double precision the two sides differ by rounding of order
    |x| * |f'| * 1e-16 (about 1e-12 once z_j ~ 30), which says nothing about
    the identity, so the comparison runs in extended precision. The double
    residual is returned alongside for reference.
    """
    worst = mp.mpf(0)
    worst_double = 0.0
    zetas = np.asarray(zetas, dtype=float)
    with mp.workdps(dps):
        for j in js:
            zj = (2 * j - 1) * mp.pi / 4
            sgn = (-1) ** j
            for z in zetas:
                zz = mp.mpf(float(z))
                x = zj + zz
                lhs = mp.sin(2 * x) / 4 + mp.mpf(29) / 18 * x * mp.cos(2 * x)
                gz = mp.cos(2 * zz) / 4 - mp.mpf(29) / 18 * zz * mp.sin(2 * zz)
                rhs = sgn * mp.mpf(29) / 18 * zj * mp.sin(2 * zz) - sgn * gz
                worst = max(worst, abs(lhs - rhs))
            worst_double = max(worst_double, float(np.max(np.abs(
                pp.f(z_shift(j) + zetas) - f_decomposition(j, zetas)))))
    return {"extended": float(worst), "double": worst_double}


# -- zeros of h --------------------------------------------------------------


def zeta_zeros(eps):
    """(zeta0, zeta1, zeta2): zeros of h near 0, pi/2 and pi, given as offsets."""
    if not 0 < eps <= EPS_MAX + 1e-15:
        raise ConfigurationError("eps must lie in (0, 7/20]")
    with mp.workdps(40):
        e = mp.mpf(float(eps))
        z0 = mp.findroot(lambda s: _h_mp(s, e, False), e ** 2 / 8)
        z2 = mp.findroot(lambda s: _h_mp(s, e, True), e ** 2 / 8)
    fn = lambda s: float(h(s, eps))
    z1 = brentq(fn, np.pi / 2 - 0.5, np.pi / 2 + 0.5, xtol=1e-15, rtol=4 * np.finfo(float).eps) - np.pi / 2
    return float(z0), float(z1), float(z2)


def zero_enclosures(eps, dps=60):
    """zeta0, zeta2 against the enclosures of the zero lemma.

    The enclosure widths are O(eps^6) relative, far below double precision
    for small eps, so the zeros are located and compared at ``dps`` digits.
    """
    with mp.workdps(dps):
        e = mp.mpf(float(eps))
        z0 = mp.findroot(lambda s: _h_mp(s, e, False), e ** 2 / 8)
        z2 = mp.findroot(lambda s: _h_mp(s, e, True), e ** 2 / 8)
        base = e ** 2 / 8
        lead = 1 - mp.mpf(29) / 18 * mp.pi * e ** 2
        e0 = (base * (1 - e ** 4 / 3), base * (1 - e ** 4 / 9))
        e2 = (base * (lead + 10 * e ** 4), base * (lead + 40 * e ** 4))
        ok0 = bool(e0[0] <= z0 <= e0[1])
        ok2 = bool(e2[0] <= z2 <= e2[1])
        # position inside the enclosure, 0 at the left end and 1 at the right
        pos0 = float((z0 - e0[0]) / (e0[1] - e0[0]))
        pos2 = float((z2 - e2[0]) / (e2[1] - e2[0]))
    return {"zeta0": float(z0), "zeta2": float(z2), "enc0": tuple(map(float, e0)),
            "enc2": tuple(map(float, e2)), "pos0": pos0, "pos2": pos2, "ok0": ok0, "ok2": ok2}


def _h_mp(zeta_offset, eps, near_pi):
    """h at (pi if near_pi) + zeta_offset, evaluated stably at >= 60 digits."""
    with mp.workdps(max(60, mp.mp.dps)):
        e = mp.mpf(eps)
        s = mp.mpf(zeta_offset)
        x = mp.pi + s if near_pi else s
        gx = mp.cos(2 * x) / 4 - mp.mpf(29) / 18 * x * mp.sin(2 * s)
        return mp.sin(2 * s) - e ** 2 * gx


def lemma_zeros_signcheck(eps_grid=None):
    """Sign of h at the four trial expansions of the zeros."""
    if eps_grid is None:
        eps_grid = default_eps_grid()
    rows = []
    ok = True
    for e in eps_grid:
        with mp.workdps(60):
            E = mp.mpf(float(e))
            z0 = lambda a: E ** 2 / 8 * (1 + a * E ** 4)
            z2 = lambda c: E ** 2 / 8 * (1 - mp.mpf(29) / 18 * mp.pi * E ** 2 + c * E ** 4)
            va = _h_mp(z0(mp.mpf(-1) / 3), E, False)
            vb = _h_mp(z0(mp.mpf(-1) / 9), E, False)
            vc = _h_mp(z2(10), E, True)
            vd = _h_mp(z2(40), E, True)
        signs = (va <= 0, vb >= 0, vc <= 0, vd >= 0)
        ok &= all(signs)
        rows.append((float(e), float(va), float(vb), float(vc), float(vd), all(signs)))
    return {"all_hold": bool(ok), "rows": rows}


def default_eps_grid(n=512):
    return np.geomspace(1e-3, EPS_MAX, n)


# -- F1 / F2 ------------------------------------------------------------------


def F1(x, eps):
    x = np.asarray(x, dtype=float)
    return 2 * g(x) * eps ** 2 - 2 * BETA * np.sin(x) * eps + (BETA ** 2 - 2) * np.sin(2 * x)


def F2(x, eps):
    x = np.asarray(x, dtype=float)
    root = np.sqrt(np.maximum(ALPHA ** 2 - (x - 2) ** 2, 0.0))
    return (g(x) * eps ** 2 - eps * BETA * np.sin(2) / ALPHA * root
            - (BETA ** 2 * np.sin(2) ** 2 * (x - 2) + ALPHA * np.sin(2 * x)) / ALPHA ** 2)


def _quad_coeffs(which, x):
    x = np.asarray(x, dtype=float)
    if which == "F1":
        return 2 * g(x), -2 * BETA * np.sin(x), (BETA ** 2 - 2) * np.sin(2 * x)
    root = np.sqrt(np.maximum(ALPHA ** 2 - (x - 2) ** 2, 0.0))
    return (g(x), -BETA * np.sin(2) / ALPHA * root,
            -(BETA ** 2 * np.sin(2) ** 2 * (x - 2) + ALPHA * np.sin(2 * x)) / ALPHA ** 2)


def discriminant(which, x):
    a, b, c = _quad_coeffs(which, x)
    return b * b - 4 * a * c


def discriminant_scan(which, n=10_000, include_pi=False):
    """Discriminant of F(x, .) on an n-point grid of the lemma's x-range.

    For F1 the discriminant vanishes exactly at x = pi (both sin x and sin 2x
    vanish), so the strict check runs on [2, pi) and the endpoint is handled
    separately: there F1 = 2 g(pi) eps^2 >= 0 directly.
    """
    if which == "F1":
        xs = np.linspace(2.0, np.pi, n + 1)[:-1] if not include_pi else np.linspace(2.0, np.pi, n)
    else:
        xs = np.linspace(7.0 / 4.0, 2.0, n)
    d = discriminant(which, xs)
    a = _quad_coeffs(which, xs)[0]
    k = int(np.argmax(d))
    rep = {"which": which, "n": len(xs), "max_disc": float(d[k]), "argmax": float(xs[k]),
           "all_negative": bool(np.all(d < 0)), "min_leading": float(a.min())}
    if which == "F1":
        rep["endpoint_pi"] = {"F1": float(2 * g(np.pi)), "coefficient": "2 g(pi) eps^2", "nonneg": bool(g(np.pi) >= 0)}
    return rep


def f1f2_eval(x, eps):
    return {"F1": float(F1(x, eps)), "F2": float(F2(x, eps))}


def f1f2_point_values():
    return {"F1(5/2,1/4)": float(F1(2.5, 0.25)), "F2(15/8,1/4)": float(F2(15 / 8, 0.25))}


# -- region and manifolds ------------------------------------------------------


def y1(z):
    return -BETA * np.sin(np.asarray(z, dtype=float))


def y2(z):
    z = np.asarray(z, dtype=float)
    return -BETA * np.sin(2) * np.sqrt(np.maximum(1 - (25.0 / 36.0) * (z - 2) ** 2, 0.0))


def renorm_region_check(eps):
    if not 0 < eps <= EPS_MAX + 1e-15:
        raise ConfigurationError("eps must lie in (0, 7/20]")
    a1 = 1.25 * (1 + np.cos(2.0))
    a2 = -quad(lambda z: float(y2(z)), 7 / 4, 2, epsabs=1e-13, epsrel=1e-13)[0]
    # boundary reductions nu_k . N = -(y_k / beta^2) F_k with y_k <= 0
    xs1 = np.linspace(2, np.pi, 2001)
    xs2 = np.linspace(7 / 4, 2, 2001)
    n1 = -(y1(xs1) / BETA ** 2) * F1(xs1, eps)
    n2 = -(y2(xs2) / (BETA ** 2 * np.sin(2) ** 2)) * F2(xs2, eps)
    area = a1 + a2
    bound = 29 * np.pi / 36 * eps
    return {
        "eps": eps,
        "area_sigma1": a1,
        "area_sigma2": a2,
        "area": area,
        "area_gt_1": area > 1,
        "min_nu1N": float(n1.min()),
        "min_nu2N": float(n2.min()),
        "repulsive": bool(n1.min() >= -1e-15 and n2.min() >= -1e-15),
        "budget_over_eps": bound,
        # eps * Area > eps > (29 pi / 36) eps^2 >= budget: the assumed orbit cannot exist
        "contradiction": bool(area > 1 and bound < 1),
    }


def renorm_budget(eps, dps=60):
    """Right side of the energy balance between the two renormalised saddles.

    B = (1/2)(cos 2 zeta2 - cos 2 zeta0) + eps^2 (G(pi + zeta2) - G(zeta0)).
    Sign chosen from the conservation identity integrated from zeta0 to pi + zeta2.
    """
    with mp.workdps(dps):
        e = mp.mpf(eps)

        def hh(x):
            return mp.sin(2 * x) - e ** 2 * (mp.cos(2 * x) / 4 - mp.mpf(29) / 18 * x * mp.sin(2 * x))

        def GG(x):
            return mp.mpf(29) / 36 * x * mp.cos(2 * x) - mp.mpf(5) / 18 * mp.sin(2 * x)

        z0 = mp.findroot(hh, e ** 2 / 8)
        z2 = mp.findroot(lambda s: hh(mp.pi + s), e ** 2 / 8)
        B = (mp.cos(2 * z2) - mp.cos(2 * z0)) / 2 + e ** 2 * (GG(mp.pi + z2) - GG(z0))
        return B


def budget_expansion_check(eps_list=(0.02, 0.04, 0.08)):
    """(B - (29 pi/36) eps^2) / eps^6 should tend to -29 pi / 1152."""
    out = []
    for e in eps_list:
        B = renorm_budget(e)
        lead = mp.mpf(29) * mp.pi / 36 * mp.mpf(e) ** 2
        out.append((e, float((B - lead) / mp.mpf(e) ** 6)))
    # Richardson in eps^2 on the last two points
    (e1, r1), (e2, r2) = out[0], out[1]
    extrap = (r1 * e2 ** 2 - r2 * e1 ** 2) / (e2 ** 2 - e1 ** 2)
    return {"ratios": out, "extrapolated": extrap, "target": -29 * np.pi / 1152}


@dataclass
class RenormTrajectory:
    t: np.ndarray
    zeta: np.ndarray
    eta: np.ndarray
    eta_sq: np.ndarray
    eps: float


def _re_rhs(eps):
    def rhs(t, v):
        z, e, _ = v
        return [e, np.sin(2 * z) - eps * e - eps ** 2 * float(g(z)), e * e]

    return rhs


def renorm_conservation_residual(traj: RenormTrajectory, i0=0, i1=-1):
    e = traj.eps
    z0, z1 = traj.zeta[i0], traj.zeta[i1]
    lhs = 0.5 * (traj.eta[i1] ** 2 - traj.eta[i0] ** 2) + e * (traj.eta_sq[i1] - traj.eta_sq[i0])
    rhs = 0.5 * (np.cos(2 * z0) - np.cos(2 * z1)) - e ** 2 * (G(z1) - G(z0))
    return float(abs(lhs - rhs))


def renorm_manifold(eps, start="zeta0", delta=1e-8, t_max=400.0):
    """Unstable branch leaving (zeta0, 0) upward or (pi + zeta2, 0) downward."""
    z0, z1, z2 = zeta_zeros(eps)
    if start == "zeta0":
        x_eq, sgn = z0, 1.0
    else:
        x_eq, sgn = np.pi + z2, -1.0
    hp = 2 * np.cos(2 * x_eq) - eps ** 2 * (-0.5 * np.sin(2 * x_eq) - (29 / 18) * (np.sin(2 * x_eq) + 2 * x_eq * np.cos(2 * x_eq)))
    lam = 0.5 * (-eps + np.sqrt(eps ** 2 + 4 * hp))
    xi = np.array([1.0, lam]) / np.hypot(1.0, lam)
    v0 = [x_eq + sgn * delta * xi[0], sgn * delta * xi[1], 0.0]

    def cross(t, v):
        return v[1]

    cross.terminal = True
    cross.direction = -sgn

    def strip(t, v):
        return (v[0] - (z0 - 1e-3)) * ((np.pi + z2 + 1e-3) - v[0])

    strip.terminal = True
    sol = solve_ivp(_re_rhs(eps), (0, t_max), v0, method="DOP853", rtol=1e-11, atol=1e-13, events=[cross, strip])
    if sol.status == -1:
        raise IntegrationFailure(sol.message, last=(sol.t[-1], sol.y[:, -1]))
    traj = RenormTrajectory(sol.t, sol.y[0], sol.y[1], sol.y[2], eps)
    p = float(sol.y_events[0][0][0]) if len(sol.t_events[0]) else None
    if start == "zeta0":
        window = (np.pi / 2 + z1, np.pi)
    else:
        window = (z0, np.pi / 2 + z1)
    return {"eps": eps, "start": start, "crossing": p, "window": window,
            "in_window": p is not None and window[0] < p < window[1],
            "escaped": len(sol.t_events[1]) > 0, "lambda_plus": float(lam),
            "residual": renorm_conservation_residual(traj), "trajectory": traj}


def renorm_manifold_check(j, branch="+", delta=1e-8):
    eps = eps_for(j)
    return renorm_manifold(eps, "zeta0" if branch == "+" else "zeta2", delta)


def pullback_consistency(j, t_window=20.0, n=200):
    """Integrate both systems from matching data; compare after undoing the scaling."""
    P = RenormParams.for_j(j)
    z0 = 0.3
    eta0 = 0.1
    x0, y0 = P.z + z0, eta0 / P.eps
    ts = np.linspace(0, t_window, n)
    a = solve_ivp(lambda t, v: [v[1], -v[1] + float(pp.f(v[0]))], (0, t_window), [x0, y0],
                  method="DOP853", rtol=1e-12, atol=1e-12, t_eval=ts)
    s = ts / P.eps
    b = solve_ivp(lambda t, v: [v[1], -P.eps * v[1] + P.eps ** 2 * float(pp.f(P.z + v[0]))], (0, s[-1]), [z0, eta0],
                  method="DOP853", rtol=1e-12, atol=1e-12, t_eval=s)
    dx = np.max(np.abs(a.y[0] - (P.z + b.y[0])))
    dy = np.max(np.abs(a.y[1] - b.y[1] / P.eps))
    c = solve_ivp(lambda t, v: [v[1], np.sin(2 * v[0]) - P.eps * v[1] - P.eps ** 2 * float(g(v[0]))], (0, s[-1]),
                  [z0, eta0], method="DOP853", rtol=1e-12, atol=1e-12, t_eval=s)
    dz = np.max(np.abs(c.y[0] - b.y[0]))
    return {"sup_dx": float(dx), "sup_dy": float(dy), "sup_renorm_vs_shifted": float(dz)}
