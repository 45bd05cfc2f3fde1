"""Phase plane of the autonomous Euler-Lagrange system

    x' = y,    y' = -y + f(x),    f(x) = (1/4) sin 2x + (29/18) x cos 2x.

Equilibria sit at the zeros x_j of f (x_0 = 0, x_{-j} = -x_j). Even j are
saddles, odd j are spiral sinks. The unstable manifolds of the saddles and
the energy balance

    (1/2)(y(t1)^2 - y(t0)^2) + int_{t0}^{t1} y^2 ds = F(x(t1)) - F(x(t0))

with F' = f are the raw material for the Lyapunov-region arguments in
:mod:`wavemap_lab.regions`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import DegenerateEquilibriumError, IntegrationFailure, RangeError

BOX = 30.0
RTOL = 1e-11
ATOL = 1e-13


def f(x, scale=1.0):
    x = np.asarray(x, dtype=float)
    return scale * (0.25 * np.sin(2 * x) + (29.0 / 18.0) * x * np.cos(2 * x))


def fprime(x, scale=1.0):
    x = np.asarray(x, dtype=float)
    return scale * ((0.5 + 29.0 / 18.0) * np.cos(2 * x) - (29.0 / 9.0) * x * np.sin(2 * x))


def F_phase(x, scale=1.0):
    """Primitive of f normalised as in the energy balance (F(0) = 5/18)."""
    x = np.asarray(x, dtype=float)
    return scale * ((5.0 / 18.0) * np.cos(2 * x) + (29.0 / 36.0) * x * np.sin(2 * x))


def field_eval(x):
    return {"f": float(f(x)), "f_prime": float(fprime(x)), "F_phase": float(F_phase(x))}


def zeros_of_f(lo, hi, scale=1.0, xtol=1e-12, samples_per_unit=200):
    """All zeros of f in [lo, hi], with the sign of f' at each."""
    if max(abs(lo), abs(hi)) > BOX:
        raise RangeError(f"interval must lie in |x| <= {BOX}")
    n = max(int((hi - lo) * samples_per_unit), 16)
    grid = np.linspace(lo, hi, n + 1)
    vals = f(grid, scale)
    out = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            out.append(a)
        elif fa * fb < 0:
            out.append(brentq(lambda s: float(f(s, scale)), a, b, xtol=xtol, rtol=4 * np.finfo(float).eps))
    if vals[-1] == 0.0:
        out.append(hi)
    zs = np.unique(np.round(np.array(out), 14))
    return [(float(z), int(np.sign(fprime(z, scale)))) for z in zs]


def zero(j, scale=1.0):
    """x_j, the j-th zero of f counted from x_0 = 0 (negative j by oddness)."""
    if j == 0:
        return 0.0
    pos = [z for z, _ in zeros_of_f(1e-3, min(BOX, 1.6 * abs(j) + 2.0), scale)]
    if abs(j) > len(pos):
        raise RangeError(f"x_{j} lies outside the working box")
    return float(np.sign(j)) * pos[abs(j) - 1]


@dataclass(frozen=True)
class Equilibrium:
    j: int
    x: float
    kind: str
    eigenvalues: tuple
    unstable_dir: tuple | None


def classify(x_j, j=None, scale=1.0):
    fp = float(fprime(x_j, scale))
    if abs(fp) <= 1e-8:
        raise DegenerateEquilibriumError(f"f'({x_j}) = {fp}")
    disc = complex(1.0 + 4.0 * fp)
    root = np.sqrt(disc)
    lam_p, lam_m = -0.5 + 0.5 * root, -0.5 - 0.5 * root
    if fp > 0:
        kind = "saddle"
        xi = (1.0, lam_p.real)
    elif fp < -0.25:
        kind = "spiral-sink"
        xi = None
    else:
        kind = "node-sink"
        xi = None
    return Equilibrium(j if j is not None else 0, float(x_j), kind, (lam_p, lam_m), xi)


def equilibrium(j, scale=1.0):
    return classify(zero(j, scale), j, scale)


# -- trajectories -------------------------------------------------------------


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    ysq: np.ndarray  # running int_{t[0]}^t y^2 ds
    scale: float = 1.0
    stats: dict = field(default_factory=dict)

    def index(self, t):
        if t < self.t[0] - 1e-12 or t > self.t[-1] + 1e-12:
            raise RangeError(f"t={t} outside [{self.t[0]}, {self.t[-1]}]")
        return int(np.argmin(np.abs(self.t - t)))


def _rhs(scale):
    def rhs(t, v):
        x, y, _ = v
        return [y, -y + float(f(x, scale)), y * y]

    return rhs


def integrate(x0, y0, t_max, scale=1.0, events=(), rtol=RTOL, atol=ATOL, max_step=np.inf):
    """Integrate the system, carrying int y^2 as a third component."""

    def escape(t, v):
        return BOX - abs(v[0])

    escape.terminal = True
    sol = solve_ivp(_rhs(scale), (0.0, t_max), [x0, y0, 0.0], method="DOP853",
                    rtol=rtol, atol=atol, events=[escape, *events], dense_output=True,
                    max_step=max_step)
    if sol.status == -1:
        raise IntegrationFailure(sol.message, last=(sol.t[-1], sol.y[:, -1]))
    traj = Trajectory(sol.t, sol.y[0], sol.y[1], sol.y[2], scale,
                      {"nfev": sol.nfev, "rtol": rtol, "atol": atol, "escaped": len(sol.t_events[0]) > 0})
    return traj, sol


def conservation_residual(traj: Trajectory, t0=None, t1=None):
    i0 = 0 if t0 is None else traj.index(t0)
    i1 = len(traj.t) - 1 if t1 is None else traj.index(t1)
    lhs = 0.5 * (traj.y[i1] ** 2 - traj.y[i0] ** 2) + (traj.ysq[i1] - traj.ysq[i0])
    rhs = F_phase(traj.x[i1], traj.scale) - F_phase(traj.x[i0], traj.scale)
    return float(abs(lhs - rhs))


@dataclass
class ManifoldReport:
    j: int
    branch: str
    delta: float
    seed: tuple
    trajectory: Trajectory
    crossing: float | None
    crossing_time: float | None
    outcome: str  # "crossed", "captured", "reached-target", "escaped", "timeout"
    sink: int | None = None
    target_hit: tuple | None = None
    residual: float = float("nan")


def default_delta(x_j):
    return 1e-8 * (1.0 + abs(x_j))


def _sink_captured(sol, t_enter, x_sink, eq, radius):
    """Distance to the sink shrinks period over period for three spiral periods."""
    omega = abs(eq.eigenvalues[0].imag) or 1.0
    period = 2 * np.pi / omega
    peaks = []
    for k in range(4):
        ts = np.linspace(t_enter + k * period, t_enter + (k + 1) * period, 64)
        v = sol.sol(ts)
        peaks.append(np.max(np.hypot(v[0] - x_sink, v[1])))
    return peaks[0] < radius and all(b < a for a, b in zip(peaks, peaks[1:]))


def unstable_manifold(j, branch="+", delta=None, scale=1.0, t_max=200.0,
                      follow="crossing", target_x=None, capture_radius=1e-3):
    """Follow one branch of W^u of the saddle at x_j.

    ``follow='crossing'`` stops at the first y = 0 crossing. ``follow='limit'``
    keeps integrating to decide the fate of the orbit (sink capture, reaching
    the vertical line x = target_x, or escape).
    """
    eq = equilibrium(j, scale)
    if eq.kind != "saddle":
        raise DegenerateEquilibriumError(f"x_{j} is not a saddle")
    delta = default_delta(eq.x) if delta is None else delta
    xi = np.array(eq.unstable_dir)
    xi /= np.linalg.norm(xi)
    sgn = 1.0 if branch == "+" else -1.0
    x0, y0 = eq.x + sgn * delta * xi[0], sgn * delta * xi[1]

    def cross(t, v):
        return v[1]

    cross.direction = -sgn
    cross.terminal = follow == "crossing"
    events = [cross]
    if target_x is not None:
        def hit(t, v):
            return v[0] - target_x

        hit.terminal = True
        events.append(hit)
    traj, sol = integrate(x0, y0, t_max, scale, events=events)
    crossings = sol.t_events[1]
    crossing = crossing_time = None
    if len(crossings):
        crossing_time = float(crossings[0])
        crossing = float(sol.y_events[1][0][0])
    outcome = "timeout"
    hit_pt = sink = None
    if traj.stats["escaped"]:
        outcome = "escaped"
    elif target_x is not None and len(sol.t_events[2]):
        outcome = "reached-target"
        hit_pt = (float(sol.t_events[2][0]), float(sol.y_events[2][0][1]))
    elif follow == "crossing" and crossing is not None:
        outcome = "crossed"
    elif follow == "limit":
        # nearest odd zero to the final point decides the sink
        xe = traj.x[-1]
        for k in range(-20, 21):
            if k % 2 == 0:
                continue
            try:
                xk = zero(k, scale)
            except RangeError:
                continue
            d = np.hypot(traj.x - xk, traj.y)
            inside = np.nonzero(d < capture_radius)[0]
            if len(inside) and abs(xe - xk) < 1.0:
                t_enter = float(traj.t[inside[0]])
                eqk = classify(xk, k, scale)
                if t_enter + 4 * 2 * np.pi / max(abs(eqk.eigenvalues[0].imag), 1e-3) <= traj.t[-1] \
                        and _sink_captured(sol, t_enter, xk, eqk, capture_radius):
                    outcome, sink = "captured", k
                break
    rep = ManifoldReport(j, branch, delta, (x0, y0), traj, crossing, crossing_time, outcome, sink, hit_pt)
    rep.residual = conservation_residual(traj)
    return rep


def reflect(traj: Trajectory):
    """Image of an orbit under v -> -v (the system is odd)."""
    return Trajectory(traj.t, -traj.x, -traj.y, traj.ysq, traj.scale, dict(traj.stats))


def budgets():
    x2, x4 = zero(2), zero(4)
    return {
        "F(x2)-F(0)": float(F_phase(x2) - F_phase(0.0)),
        "F(x2)-F(x4)": float(F_phase(x2) - F_phase(x4)),
        "F(0)-F(x-2)": float(F_phase(0.0) - F_phase(-x2)),
    }
