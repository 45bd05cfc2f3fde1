"""Exterior equivariant wave maps on r >= 1.

    psi_tt - psi_rr - (2/r) psi_r + sin(2 psi) / r^2 = 0,   psi(1, t) = 0.

Space: flux-form second-order differences, i.e. the gradient of the discrete
energy

    E_h = h sum_i [ (1/2) r_i^2 v_i^2 + sin^2 psi_i ]
          + (1/2) h sum_i r_{i+1/2}^2 ((psi_{i+1} - psi_i) / h)^2 .

Time: Stormer-Verlet, which is symplectic for E_h, so the discrete energy
error stays O(dt^2) with no secular drift. The value at r_max is frozen; the
domain is chosen large enough that nothing reflects back in time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .errors import ConfigurationError, DivergenceError, InvalidStateError, RangeError

SPHERE4_AREA = 8.0 * np.pi ** 2 / 3.0  # |S^4|, used in the L^6 norm of the 5-d picture
CFL = 0.9


@dataclass(frozen=True)
class RadialGrid:
    r_max: float
    n: int
    r_min: float = 1.0

    def __post_init__(self):
        if self.r_min != 1.0:
            raise ConfigurationError("the exterior domain starts at r = 1")
        if not self.r_max > self.r_min or self.n < 3:
            raise ConfigurationError("need r_max > 1 and at least three points")

    @classmethod
    def with_spacing(cls, r_max, h):
        n = int(round((r_max - 1.0) / h)) + 1
        return cls(1.0 + (n - 1) * h, n)

    @property
    def h(self):
        return (self.r_max - self.r_min) / (self.n - 1)

    @property
    def r(self):
        return np.linspace(self.r_min, self.r_max, self.n)


@dataclass
class WaveState:
    grid: RadialGrid
    psi: np.ndarray
    psi_dot: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=float)
        self.psi_dot = np.asarray(self.psi_dot, dtype=float)
        if self.psi.shape != (self.grid.n,) or self.psi_dot.shape != (self.grid.n,):
            raise InvalidStateError("field length must match the grid")
        if not (np.all(np.isfinite(self.psi)) and np.all(np.isfinite(self.psi_dot))):
            raise InvalidStateError("non-finite field values")
        if self.psi[0] != 0.0:
            raise InvalidStateError("Dirichlet condition psi(1) = 0 violated")

    @classmethod
    def from_functions(cls, grid, psi, psi_dot=None, t=0.0):
        r = grid.r
        p = np.asarray(psi(r), dtype=float)
        p[0] = 0.0
        v = np.zeros_like(r) if psi_dot is None else np.asarray(psi_dot(r), dtype=float)
        v = v.copy()
        v[0] = 0.0
        return cls(grid, p, v, t)

    def copy(self):
        return WaveState(self.grid, self.psi.copy(), self.psi_dot.copy(), self.t)


@dataclass(frozen=True)
class EnergyReport:
    total: float
    kinetic: float
    gradient: float
    sine_potential: float
    exterior_tail: float | None = None
    R: float | None = None


def derivative4(y, h):
    """Fourth-order finite-difference derivative on a uniform grid."""
    y = np.asarray(y, dtype=float)
    d = np.empty_like(y)
    d[2:-2] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * h)
    d[0] = (-25 * y[0] + 48 * y[1] - 36 * y[2] + 16 * y[3] - 3 * y[4]) / (12 * h)
    d[1] = (-3 * y[0] - 10 * y[1] + 18 * y[2] - 6 * y[3] + y[4]) / (12 * h)
    d[-2] = (3 * y[-1] + 10 * y[-2] - 18 * y[-3] + 6 * y[-4] - y[-5]) / (12 * h)
    d[-1] = (25 * y[-1] - 48 * y[-2] + 36 * y[-3] - 16 * y[-4] + 3 * y[-5]) / (12 * h)
    return d


def _segment(r, lo, hi):
    i0 = int(np.searchsorted(r, lo - 1e-12))
    i1 = int(np.searchsorted(r, hi + 1e-12))
    return slice(i0, i1)


def _integrate(y, r, lo=None, hi=None):
    sl = _segment(r, r[0] if lo is None else lo, r[-1] if hi is None else hi)
    if sl.stop - sl.start < 2:
        return 0.0
    return float(simpson(y[sl], x=r[sl]))


def energy_density(state: WaveState):
    r = state.grid.r
    pr = derivative4(state.psi, state.grid.h)
    kin = 0.5 * state.psi_dot ** 2 * r ** 2
    grad = 0.5 * pr ** 2 * r ** 2
    pot = np.sin(state.psi) ** 2
    return kin, grad, pot


def energy(state: WaveState, R: float | None = None, r_range=None) -> EnergyReport:
    """(1/2) int (psi_dot^2 + psi_r^2 + 2 sin^2 psi / r^2) r^2 dr by Simpson.

    ``r_range=(a, b)`` restricts every part to [a, b] (snapped to the grid).
    """
    r = state.grid.r
    kin, grad, pot = energy_density(state)
    lo, hi = r_range if r_range is not None else (None, None)
    K, Gr, P = (_integrate(x, r, lo, hi) for x in (kin, grad, pot))
    tail = None
    if R is not None:
        if not r[0] <= R <= r[-1]:
            raise RangeError("R outside grid")
        tail = _integrate(kin + grad + pot, r, R, None)
    return EnergyReport(K + Gr + P, K, Gr, P, tail, R)


def local_energy(state: WaveState, R):
    return energy(state, r_range=(1.0, R)).total


def difference_energy(state: WaveState, ref_psi, R=None):
    """(1/2) int (d_dot^2 + d_r^2 + 2 d^2 / r^2) r^2 over [1, R] for d = psi - ref."""
    r = state.grid.r
    d = state.psi - ref_psi
    dr = derivative4(d, state.grid.h)
    dens = 0.5 * (state.psi_dot ** 2 + dr ** 2) * r ** 2 + d ** 2
    return _integrate(dens, r, 1.0, R)


def discrete_energy(grid: RadialGrid, psi, v, linear=False):
    r, h = grid.r, grid.h
    rh2 = (0.5 * (r[1:] + r[:-1])) ** 2
    grad = 0.5 * h * np.sum(rh2 * (np.diff(psi) / h) ** 2)
    inner = slice(1, -1)
    pot_field = psi[inner] ** 2 if linear else np.sin(psi[inner]) ** 2
    return float(h * np.sum(0.5 * r[inner] ** 2 * v[inner] ** 2 + pot_field) + grad)


def hardy_strauss_check(state: WaveState):
    r, h = state.grid.r, state.grid.h
    if state.psi[0] != 0.0:
        raise InvalidStateError("psi(1) must vanish")
    pr = derivative4(state.psi, h)
    hdot = _integrate(pr ** 2 * r ** 2, r)
    if hdot == 0.0 or not np.any(state.psi):
        return {"hardy_ratio": 0.0, "strauss_sup": 0.0}
    hardy = _integrate(state.psi ** 2, r) / (4 * hdot)
    strauss = float(np.max(np.abs(state.psi) * np.sqrt(r)) / (2 * np.sqrt(hdot)))
    return {"hardy_ratio": float(hardy), "strauss_sup": strauss}


def to_five_dim(state: WaveState) -> WaveState:
    r = state.grid.r
    return WaveState(state.grid, state.psi / r, state.psi_dot / r, state.t)


def from_five_dim(state: WaveState) -> WaveState:
    r = state.grid.r
    return WaveState(state.grid, state.psi * r, state.psi_dot * r, state.t)


def lp6_norm_u(state: WaveState):
    """||u||_{L^6(R^5 minus B)} of the 5-d field u = psi / r."""
    r = state.grid.r
    u = state.psi / r
    return float((SPHERE4_AREA * _integrate(np.abs(u) ** 6 * r ** 4, r)) ** (1 / 6))


# -- time stepping ------------------------------------------------------------


@dataclass
class Trajectory:
    grid: RadialGrid
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    energy_h: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    linear: bool = False

    @property
    def drift(self):
        e = np.asarray(self.energy_h)
        if e.size == 0 or e[0] == 0:
            return np.zeros_like(e)
        return np.abs(e - e[0]) / abs(e[0])


def _acceleration(psi, r, rh2_plus, rh2_minus, inv_h2r2, inv_r2, linear):
    a = np.zeros_like(psi)
    p = psi
    lap = (rh2_plus * (p[2:] - p[1:-1]) - rh2_minus * (p[1:-1] - p[:-2])) * inv_h2r2
    react = 2 * p[1:-1] if linear else np.sin(2 * p[1:-1])
    a[1:-1] = lap - react * inv_r2
    return a


def evolve(state: WaveState, dt: float | None = None, t_final: float = 50.0, record_every: int | None = None,
           linear: bool = False, keep_states: bool = True, record_dt: float | None = 0.5,
           on_record=None) -> Trajectory:
    """Stormer-Verlet evolution; returns snapshots and discrete energy per record."""
    grid = state.grid
    h = grid.h
    dt = CFL * h if dt is None else dt
    if dt > h * (1 + 1e-12) or dt <= 0:
        raise ConfigurationError(f"dt={dt} violates dt <= h={h}")
    n_steps = int(round(t_final / dt))
    if abs(n_steps * dt - t_final) > 1e-9 * max(1.0, t_final):
        n_steps = int(np.ceil(t_final / dt))
        dt = t_final / n_steps
    if record_every is None:
        record_every = max(1, int(round((record_dt or t_final) / dt)))
    r = grid.r
    rh = 0.5 * (r[1:] + r[:-1])
    rh2_plus, rh2_minus = rh[1:] ** 2, rh[:-1] ** 2
    inv_h2r2 = 1.0 / (h * h * r[1:-1] ** 2)
    inv_r2 = 1.0 / r[1:-1] ** 2
    psi = state.psi.copy()
    v = state.psi_dot.copy()
    v[0] = 0.0
    v[-1] = 0.0  # frozen outer value
    t0 = state.t
    traj = Trajectory(grid, linear=linear)

    def record(k):
        tk = t0 + k * dt
        traj.times.append(tk)
        traj.energy_h.append(discrete_energy(grid, psi, v, linear))
        if keep_states or on_record is not None:
            snap = WaveState(grid, psi.copy(), v.copy(), tk)
            if keep_states:
                traj.states.append(snap)
            if on_record is not None:
                on_record(snap)

    acc = _acceleration(psi, r, rh2_plus, rh2_minus, inv_h2r2, inv_r2, linear)
    record(0)
    for k in range(1, n_steps + 1):
        v += 0.5 * dt * acc
        psi += dt * v
        acc = _acceleration(psi, r, rh2_plus, rh2_minus, inv_h2r2, inv_r2, linear)
        v += 0.5 * dt * acc
        if k % record_every == 0 or k == n_steps:
            if not (np.all(np.isfinite(psi)) and np.max(np.abs(psi)) < 1e6):
                last = traj.states[-1] if traj.states else state
                raise DivergenceError(f"blow-up before t={t0 + k * dt}", last_state=last)
            record(k)
    traj.diagnostics = {"dt": dt, "h": h, "n_steps": n_steps, "record_every": record_every,
                        "max_rel_drift": float(np.max(traj.drift))}
    return traj


def evolve_linear(state: WaveState, dt=None, t_final=50.0, **kw) -> Trajectory:
    return evolve(state, dt, t_final, linear=True, **kw)


def required_r_max(t_final, support, margin=5.0):
    """Outer radius beyond the domain of dependence of [1, support] up to t_final."""
    return support + t_final + margin


def scattering_diagnostics(traj: Trajectory, R: float = 10.0, window=None, ref_psi=None):
    if not traj.states:
        raise RangeError("trajectory holds no states")
    times = np.asarray(traj.times)
    if R > traj.grid.r_max / 2:
        raise RangeError("R must not exceed r_max / 2")
    if window is None:
        window = (times[0], times[-1])
    t0, t1 = window
    if t0 < times[0] - 1e-9 or t1 > times[-1] + 1e-9 or t1 < t0:
        raise RangeError(f"window {window} outside [{times[0]}, {times[-1]}]")
    if ref_psi is None:
        local = np.array([local_energy(s, R) for s in traj.states])
    else:
        local = np.array([difference_energy(s, ref_psi, R) for s in traj.states])
    sel = (times >= t0 - 1e-9) & (times <= t1 + 1e-9)
    l6 = np.array([lp6_norm_u(s) for s, m in zip(traj.states, sel) if m])
    ts = times[sel]
    s_norm = float(np.trapezoid(l6 ** 3, ts) ** (1 / 3)) if len(ts) > 1 else 0.0
    return {"times": times, "local_energy_series": local, "s_norm_window": s_norm}


def decay_factor(times, series, t_end=50.0):
    """peak / value at t_end of a local-energy series."""
    times = np.asarray(times)
    series = np.asarray(series)
    peak = float(series.max())
    k = int(np.argmin(np.abs(times - t_end)))
    end = float(series[k])
    return peak / end if end > 0 else np.inf


def unit_window_s_norms(traj: Trajectory, width=1.0):
    times = np.asarray(traj.times)
    out = []
    t = times[0]
    while t + width <= times[-1] + 1e-9:
        out.append(scattering_diagnostics(traj, min(10.0, traj.grid.r_max / 2), (t, t + width))["s_norm_window"])
        t += width
    return np.asarray(out)


# -- standard data ----------------------------------------------------------------


def bump(r, amplitude=0.3, center=7.0, width=2.0):
    """Smooth degree-0 profile with psi(1) = psi'(1) = 0."""
    r = np.asarray(r, dtype=float)
    s = (r - 1.0) ** 2
    return amplitude * np.exp(-((r - center) / width) ** 2) * s / (4.0 + s)


def compact_bump(r, amplitude=1.0, a=2.0, b=3.0):
    """C^infinity bump supported in [a, b]."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    m = (r > a) & (r < b)
    x = (2 * r[m] - a - b) / (b - a)
    out[m] = amplitude * np.exp(1.0 - 1.0 / (1.0 - x * x))
    return out


# (amplitude, center, width) of the degree-0 bump data used for scattering runs
STANDARD_BUMPS = [(0.3, 7.0, 3.0), (1.0, 5.0, 1.5), (2.0, 6.0, 2.0), (3.0, 4.0, 1.0), (0.8, 8.0, 2.5), (5.0, 5.0, 1.0)]


def perturbed_state(Q, grid: RadialGrid, pert_energy=1e-4, center=5.0, width=1.5):
    """(Q, 0) plus a bump scaled so that the perturbation has energy ``pert_energy``."""
    r = grid.r
    q = np.asarray(Q(r), dtype=float)
    q[0] = 0.0
    eta = bump(r, 1.0, center, width)
    e = difference_energy(WaveState(grid, eta, np.zeros_like(r)), np.zeros_like(r))
    psi = q + np.sqrt(pert_energy / e) * eta
    return WaveState(grid, psi, np.zeros_like(r)), q
