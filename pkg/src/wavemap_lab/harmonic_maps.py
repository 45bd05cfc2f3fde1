"""Harmonic maps Q_n: stationary solutions with Q(1) = 0, Q(inf) = n pi.

    Q'' + (2/r) Q' - sin(2Q) / r^2 = 0

In s = log r this is the damped pendulum Q_ss + Q_s = sin 2Q. Multiples of
pi are saddles (rates 1 and -2), odd multiples of pi/2 are sinks, so the
connecting orbit is found by bisection on the slope Q'(1).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import IntegrationFailure, ResolutionError, SearchFailure

S_MAX = 10.0
R_MAX = 1.0e4
RTOL = 1e-12
ATOL = 1e-14


def _rhs(r, v):
    q, p = v
    return [p, -2.0 * p / r + np.sin(2.0 * q) / (r * r)]


@dataclass
class ShootingResult:
    slope: float
    classification: str  # "undershoot" | "overshoot" | "converged"
    level: int  # multiples of pi crossed upward
    r_exit: float
    unstable_coord: float
    samples: tuple
    sol: object = field(repr=False, default=None)

    @property
    def n(self):
        return self.level if self.classification == "converged" else None


def shoot(slope: float, r_max: float = R_MAX, rtol=RTOL, atol=ATOL, dense=False) -> ShootingResult:
    """Integrate from (Q, Q')(1) = (0, slope) and classify the orbit.

    Exit rule: Q' = 0 before r_max is an undershoot of the next multiple of
    pi. Reaching r_max inside the band |Q - n pi| < 0.1 is converged(n);
    the sign of the unstable coordinate there still says on which side of
    the connecting orbit the slope lies.
    """
    if slope < 0:
        raise ValueError("slope must be >= 0")
    if slope == 0.0:
        r = np.array([1.0, r_max])
        return ShootingResult(0.0, "converged", 0, r_max, 0.0, (r, np.zeros(2), np.zeros(2)))

    def turn(r, v):
        return v[1]

    turn.terminal = True
    turn.direction = -1

    def runaway(r, v):
        return 40.0 - v[0]

    runaway.terminal = True
    sol = solve_ivp(_rhs, (1.0, r_max), [0.0, slope], method="DOP853", rtol=rtol, atol=atol,
                    events=[turn, runaway], dense_output=dense)
    if sol.status == -1:
        raise IntegrationFailure(sol.message, last=(sol.t[-1], sol.y[:, -1]))
    r_end = sol.t[-1]
    q_end, p_end = sol.y[:, -1]
    level = int(np.floor(q_end / np.pi + 1e-15))
    if len(sol.t_events[0]):
        cls = "undershoot"
        ucoord = -1.0
    else:
        n = int(np.rint(q_end / np.pi))
        qd = q_end - n * np.pi
        # unstable coordinate at the saddle n pi in (q, r q') coordinates
        ucoord = (2 * qd + r_end * p_end) / 3.0
        if abs(qd) < 0.1:
            cls = "converged"
            level = n
        else:
            cls = "overshoot" if ucoord > 0 else "undershoot"
    return ShootingResult(float(slope), cls, level, float(r_end), float(ucoord), (sol.t, sol.y[0], sol.y[1]),
                          sol.sol if dense else None)


def _side(res: ShootingResult, n: int) -> int:
    """+1 if the orbit passes n pi (overshoot for degree n), -1 otherwise."""
    if res.classification == "undershoot":
        return 1 if res.level >= n else -1
    if res.level > n:
        return 1
    if res.level < n:
        return -1
    return 1 if res.unstable_coord > 0 else -1


@dataclass
class HarmonicMap:
    n: int
    slope: float
    r_max: float
    tail_c: float
    sol: object = field(repr=False)
    samples: tuple = field(repr=False, default=())
    bracket: tuple = ()

    def __call__(self, r):
        """Q(r); beyond r_max the asymptotic tail n pi - c / r^2 is used."""
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        inside = r <= self.r_max
        out[inside] = self.sol(r[inside])[0] if np.any(inside) else out[inside]
        out[~inside] = self.n * np.pi - self.tail_c / r[~inside] ** 2
        if self.n == 0:
            out[:] = 0.0
        return out

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        inside = r <= self.r_max
        out[inside] = self.sol(r[inside])[1] if np.any(inside) else out[inside]
        out[~inside] = 2 * self.tail_c / r[~inside] ** 3
        if self.n == 0:
            out[:] = 0.0
        return out


def zero_map(r_max=R_MAX):
    sol = lambda r: np.zeros((2, np.size(r)))
    r = np.geomspace(1, r_max, 64)
    return HarmonicMap(0, 0.0, r_max, 0.0, sol, (r, np.zeros_like(r), np.zeros_like(r)))


def find_harmonic(n: int, r_max: float = R_MAX, s_max: float = S_MAX, tol: float = 1e-12) -> HarmonicMap:
    if n < 1:
        raise ValueError("n must be >= 1")
    # bracket: scan slopes for the first sign change of the side function
    grid = np.linspace(0.0, s_max, 41)[1:]
    lo = hi = None
    prev = 0.0
    for s in grid:
        if _side(shoot(s, r_max), n) > 0:
            lo, hi = prev, s
            break
        prev = s
    if hi is None:
        raise SearchFailure(f"no overshoot of {n} pi for slopes up to {s_max}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _side(shoot(mid, r_max), n) > 0:
            hi = mid
        else:
            lo = mid
    slope = 0.5 * (lo + hi)
    res = shoot(slope, r_max, dense=True)
    if res.classification != "converged" or res.level != n:
        raise SearchFailure(f"bisection limit does not converge to {n} pi ({res.classification})")
    r, q, p = res.samples
    if not np.all(p[1:] > 0):
        raise ResolutionError("Q not strictly increasing on samples")
    if abs(q[-1] - n * np.pi) >= 1e-6:
        raise ResolutionError(f"|Q(r_max) - n pi| = {abs(q[-1] - n * np.pi):.3g}")
    hm = HarmonicMap(n, slope, r_max, 0.0, res.sol, res.samples, (lo, hi))
    hm.tail_c = tail_fit(hm, (100.0, 1000.0))["tail_c"]
    return hm


def tail_fit(Q: HarmonicMap, fit_range=(100.0, 1000.0), n_pts=200, tol=0.01):
    R1, R2 = fit_range
    if Q.n == 0:
        return {"tail_c": 0.0, "residual": 0.0, "range": fit_range}
    if R2 > Q.r_max:
        raise ValueError("fit range beyond r_max")
    r = np.geomspace(R1, R2, n_pts)
    y = r ** 2 * (Q.n * np.pi - Q.sol(r)[0])
    c = float(np.mean(y))
    resid = float(np.max(np.abs(y - c)) / abs(c))
    if resid > tol:
        warnings.warn(f"tail asymptotics not reached on {fit_range}: spread {resid:.3g}")
    return {"tail_c": c, "residual": resid, "range": fit_range}


def _fd_derivative(fun, r, h):
    """Sixth-order central difference of a smooth callable."""
    c = (-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0)
    return sum(ck * fun(r + (k - 3) * h) for k, ck in enumerate(c)) / (60.0 * h)


def ode_residual(Q: HarmonicMap, r=None, h=2.5e-3):
    """Q'' + (2/r) Q' - sin 2Q / r^2 with Q'' from differencing the sampled Q'."""
    if r is None:
        r = np.geomspace(1.0 + 3 * h, min(Q.r_max, 1000.0) - 3 * h, 2000)
    qpp = _fd_derivative(lambda s: Q.sol(s)[1], r, h)
    q, qp = Q.sol(r)
    res = qpp + 2 * qp / r - np.sin(2 * q) / r ** 2
    return float(np.max(np.abs(res)))


@dataclass
class LinearizedPotential:
    r: np.ndarray
    V: np.ndarray
    r6V_max: float

    def __call__(self, r):
        return np.interp(r, self.r, self.V)


def potential_fn(Q: HarmonicMap):
    def V(r):
        r = np.asarray(r, dtype=float)
        return (2.0 / r ** 2) * (np.cos(2 * Q(r)) - 1.0)

    return V


def potential(Q: HarmonicMap, r=None) -> LinearizedPotential:
    if r is None:
        r = np.concatenate([np.linspace(1, 10, 2000), np.geomspace(10, 1000, 2000)[1:]])
    V = potential_fn(Q)(r)
    if np.any(V > 0):
        raise ResolutionError("V must be non-positive")
    sel = (r >= 10) & (r <= 1000)
    r6 = float(np.max(r[sel] ** 6 * np.abs(V[sel]))) if np.any(sel) else 0.0
    return LinearizedPotential(r, V, r6)


def linearized_gauge(Q: HarmonicMap, r=None, h=2.5e-3, tol=1e-6):
    """psi = r Q' (scaling generator) and phi = Q'; residuals and boundary functional."""
    if r is None:
        r = np.geomspace(1.0, min(Q.r_max / 2, 1000.0), 3000)
    q, qp = Q.sol(r)
    psi = r * qp
    phi = qp
    if Q.n == 0:
        return {"r": r, "psi": psi, "phi": phi, "residual": 0.0, "boundary": 0.0, "psi1": 0.0}

    def psi_p(s):
        a, b = Q.sol(s)
        qpp = -2 * b / s + np.sin(2 * a) / s ** 2
        return b + s * qpp

    inner = r[(r > 1 + 3 * h)]
    inner = inner[inner < r[-1] - 3 * h]
    a, b = Q.sol(inner)
    ps = inner * b
    res = -_fd_derivative(psi_p, inner, h) - 2 * psi_p(inner) / inner + 2 * np.cos(2 * a) * ps / inner ** 2
    # one-sided sixth-order derivative of phi = Q' at r = 1
    hh = 1e-3
    w = np.array([-49 / 20, 6, -15 / 2, 20 / 3, -15 / 4, 6 / 5, -1 / 6])
    dphi1 = float(w @ Q.sol(1 + hh * np.arange(7))[1] / hh)
    boundary = dphi1 + 2 * phi[0]
    resid = float(np.max(np.abs(res)))
    if resid > tol:
        raise ResolutionError(f"linearized residual {resid:.3g}")
    return {"r": r, "psi": psi, "phi": phi, "residual": resid, "boundary": float(boundary),
            "psi1": float(psi[0]), "psi_min": float(psi.min())}


def energy_minimality_probe(Q: HarmonicMap, n_trials=100, eps=1e-2, seed=0, r_max=60.0, h=0.01):
    """E(Q + eps eta) - E(Q) for random compact eta on a common grid."""
    from . import radial_pde as rp

    rng = np.random.default_rng(seed)
    grid = rp.RadialGrid.with_spacing(r_max, h)
    r = grid.r
    q = Q(r)
    q[0] = 0.0
    base = rp.energy(rp.WaveState(grid, q, np.zeros_like(q))).total
    diffs = []
    for _ in range(n_trials):
        a, w = rng.uniform(1.5, 20.0), rng.uniform(0.5, 5.0)
        k = rng.integers(1, 5)
        coef = rng.normal(size=k)
        eta = rp.compact_bump(r, 1.0, max(1.0, a - w), a + w) * sum(
            c * np.sin((i + 1) * np.pi * (r - a) / (2 * w)) + c for i, c in enumerate(coef))
        eta[0] = 0.0
        e = rp.energy(rp.WaveState(grid, q + eps * eta, np.zeros_like(q))).total
        diffs.append(e - base)
    diffs = np.asarray(diffs)
    return {"min_increase": float(diffs.min()), "all_positive": bool(np.all(diffs > 0)), "base": base}
