"""Virial functionals and the global coercivity check.

    Lambda(psi) = -(9/10) int psi_r^2 r^2 dr + int F(psi) dr
    L(psi, psi_dot) = -int ((1/20) psi_dot^2 + (19/20) psi_r^2) r^2 dr + int F(psi) dr
    F(x) = sin^2 x - (29/20) x sin 2x

The sampler below is a falsification harness: it draws many admissible
profiles and reports the largest Lambda and L + E/180 it finds.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from . import radial_pde as rp
from .errors import InvalidStateError, RangeError

TOL = 1e-10


def F(x, scale=1.0):
    x = np.asarray(x, dtype=float)
    return scale * (np.sin(x) ** 2 - 1.45 * x * np.sin(2 * x))


def F_prime(x, scale=1.0):
    x = np.asarray(x, dtype=float)
    return scale * (np.sin(2 * x) - 1.45 * np.sin(2 * x) - 2.9 * x * np.cos(2 * x))


def f(x):
    """-(5/9) F'(x) = (1/4) sin 2x + (29/18) x cos 2x."""
    x = np.asarray(x, dtype=float)
    return 0.25 * np.sin(2 * x) + (29.0 / 18.0) * x * np.cos(2 * x)


def chi(r):
    """Even C^2 cutoff: 1 on |r| <= 1, 0 on |r| >= 2, quintic smoothstep between."""
    s = np.clip(np.abs(np.asarray(r, dtype=float)) - 1.0, 0.0, 1.0)
    return 1.0 - s ** 3 * (10 - 15 * s + 6 * s * s)


def chi_prime(r):
    r = np.asarray(r, dtype=float)
    s = np.clip(np.abs(r) - 1.0, 0.0, 1.0)
    return -np.sign(r) * 30 * s * s * (1 - s) ** 2


def chi_R(r, R):
    return chi(np.asarray(r) / R)


# -- functionals on sampled profiles ------------------------------------------


def _profile(psi, r=None):
    if isinstance(psi, rp.WaveState):
        return psi.grid.r, psi.psi, psi.psi_dot
    r = np.asarray(r, dtype=float)
    return r, np.asarray(psi, dtype=float), None


def _check(r, psi):
    if not (np.all(np.isfinite(psi)) and np.all(np.isfinite(r))):
        raise InvalidStateError("non-finite profile")
    if psi[..., 0].any() if psi.ndim > 1 else psi[0] != 0:
        raise InvalidStateError("psi(1) must vanish")


def _parts(r, psi, psi_dot=None):
    h = r[1] - r[0]
    pr = rp.derivative4(psi, h) if psi.ndim == 1 else _deriv4_rows(psi, h)
    grad = simpson(pr ** 2 * r ** 2, x=r, axis=-1)
    kin = 0.0 if psi_dot is None else simpson(psi_dot ** 2 * r ** 2, x=r, axis=-1)
    return grad, kin


def _deriv4_rows(y, h):
    return np.apply_along_axis(rp.derivative4, -1, y, h) if np.ndim(h) == 0 else \
        np.stack([rp.derivative4(row, hh) for row, hh in zip(y, h)])


def lambda_functional(psi, r=None, scale=1.0):
    r, p, _ = _profile(psi, r)
    _check(r, p)
    grad, _ = _parts(r, p)
    return float(-0.9 * grad + simpson(F(p, scale), x=r))


def ell_functional(state: rp.WaveState):
    r, p, v = _profile(state)
    _check(r, p)
    grad, kin = _parts(r, p, v)
    N = simpson(F(p), x=r)
    L = -(kin / 20 + 19 * grad / 20) + N
    E = rp.energy(state).total
    b1 = -(kin + grad) / 20
    b2 = -E / 180
    return {"L": float(L), "bound_grad": float(b1), "bound_energy": float(b2),
            "holds_grad": bool(L <= b1 + TOL), "holds_energy": bool(L <= b2 + TOL), "energy": float(E)}


def consistency_gap(psi, r):
    """L((psi, 0)) - (-(1/20) int psi_r^2 r^2 + Lambda(psi)); zero up to rounding."""
    grid = rp.RadialGrid(float(r[-1]), len(r))
    st = rp.WaveState(grid, psi, np.zeros_like(psi))
    grad, _ = _parts(r, psi)
    return ell_functional(st)["L"] - (-grad / 20 + lambda_functional(psi, r))


# -- random profiles ----------------------------------------------------------


@dataclass(frozen=True)
class GeneratorSpec:
    max_amplitude: float = 20.0
    max_support: float = 200.0
    n_points: int = 2049
    max_modes: int = 8
    plateau_fraction: float = 0.2
    with_velocity: bool = True


# zeros of f (x_1..x_4) and odd multiples of pi/2
PLATEAU_LEVELS = np.array([0.8733209946, 2.388630375, 3.946639499, 5.511859657,
                           np.pi / 2, 3 * np.pi / 2, 5 * np.pi / 2, 3 * np.pi / 4])


def _smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s ** 3 * (10 - 15 * s + 6 * s * s)


def _window(r, R, ramp):
    return _smoothstep((r - 1.0) / ramp) * _smoothstep((R - r) / ramp)


def random_profiles(n, spec: GeneratorSpec = GeneratorSpec(), seed=0):
    """Yield (r, psi, psi_dot, kind) with psi(1) = 0 and support in [1, R]."""
    rng = np.random.default_rng(seed)
    m = spec.n_points
    for _ in range(n):
        R = float(np.exp(rng.uniform(np.log(2.0), np.log(spec.max_support))))
        r = np.linspace(1.0, R, m)
        if rng.uniform() < spec.plateau_fraction:
            # plateau in log r at a level near a zero of f or an odd multiple of pi/2
            A = rng.choice(PLATEAU_LEVELS) * rng.uniform(0.9, 1.1)
            A = min(A, spec.max_amplitude)
            S = np.log(R)
            s = np.log(r)
            a, b = rng.uniform(0.05, 0.4) * S, rng.uniform(0.05, 0.4) * S
            psi = A * _smoothstep(s / a) * _smoothstep((S - s) / b)
            kind = "plateau"
        else:
            K = rng.integers(1, spec.max_modes + 1)
            c = rng.normal(size=K) / np.arange(1, K + 1)
            x = (r - 1.0) / (R - 1.0)
            s = sum(ck * np.sin((j + 1) * np.pi * x) for j, ck in enumerate(c))
            s *= _window(r, R, 0.1 * (R - 1.0))
            amp = spec.max_amplitude * rng.uniform() ** 2
            psi = amp * s / max(np.max(np.abs(s)), 1e-300)
            kind = "fourier"
        psi[0] = 0.0
        if spec.with_velocity:
            v = rng.normal(size=3)
            vel = sum(vk * np.sin((j + 1) * np.pi * (r - 1.0) / (R - 1.0)) for j, vk in enumerate(v))
            vel *= rng.uniform(0, 5)
            vel[0] = 0.0
        else:
            vel = np.zeros_like(psi)
        yield r, psi, vel, kind


def plateau_profile(A, R=200.0, a=0.2, b=0.2, n=8193):
    """Adversarial shape: plateau at level A in the variable log r."""
    r = np.linspace(1.0, R, n)
    S, s = np.log(R), np.log(r)
    psi = A * _smoothstep(s / (a * S)) * _smoothstep((S - s) / (b * S))
    psi[0] = 0.0
    return r, psi


def _hash(arr):
    return hashlib.sha256(np.ascontiguousarray(arr).tobytes()).hexdigest()[:16]


def adversarial_profiles(n, seed=0, scales=(1.25, 1.5, 2.0), supports=(30.0, 100.0, 200.0), m=2049):
    """Perturbations of the maximisers of Lambda with F inflated by ``scales``.

    With F scaled up these maximisers are plateaus near the zero x_2 of f
    with Lambda > 0; evaluated with the true F they probe the lemma where it
    is tightest.
    """
    rng = np.random.default_rng(seed + 7919)
    seeds = []
    for c in scales:
        for R in supports:
            opt = maximize_lambda(R, c, n=400, starts=3, seed=seed)
            seeds.append((R, opt["s"], opt["phi"]))
    for k in range(n):
        R, s_opt, phi = seeds[k % len(seeds)]
        r = np.linspace(1.0, R, m)
        x = np.log(r) / np.log(R)
        base = np.interp(np.log(r), s_opt, phi)
        warp = x ** rng.uniform(0.8, 1.25)
        base = np.interp(warp * np.log(R), s_opt, phi)
        noise = sum(rng.normal() * 0.05 / (j + 1) * np.sin((j + 1) * np.pi * x) for j in range(4))
        psi = base * rng.uniform(0.9, 1.1) + noise * np.max(np.abs(base))
        psi[0] = 0.0
        psi[-1] = 0.0
        yield r, psi, np.zeros_like(psi), "adversarial"


def coercivity_sample(n_samples=10_000, spec: GeneratorSpec = GeneratorSpec(), seed=0, scale=1.0,
                      n_adversarial=1000):
    """Max of Lambda and of L + E/180 over seeded random profiles.

    ``n_adversarial`` of the ``n_samples`` profiles come from
    :func:`adversarial_profiles`; the rest from :func:`random_profiles`.
    """
    best_lam = -np.inf
    best_L = -np.inf
    arg = None
    worst_n_ratio = -np.inf
    counter = []
    kinds = {"fourier": 0, "plateau": 0, "adversarial": 0}
    n_adv = min(n_adversarial, n_samples)
    streams = (random_profiles(n_samples - n_adv, spec, seed), adversarial_profiles(n_adv, seed))
    for stream in streams:
        for r, psi, vel, kind in stream:
            kinds[kind] += 1
            h = r[1] - r[0]
            pr = rp.derivative4(psi, h)
            grad = simpson(pr ** 2 * r ** 2, x=r)
            kin = simpson(vel ** 2 * r ** 2, x=r)
            N1 = simpson(F(psi), x=r)
            lam = -0.9 * grad + scale * N1
            L = -(kin / 20 + 19 * grad / 20) + N1
            E = 0.5 * kin + 0.5 * grad + simpson(np.sin(psi) ** 2, x=r)
            Lplus = L + E / 180
            # N(psi) <= 2 int |psi| <= 8 R sqrt(E(psi)) with E(psi) = (1/2) int psi_r^2 r^2
            if grad > 0:
                worst_n_ratio = max(worst_n_ratio, N1 / (8 * r[-1] * np.sqrt(0.5 * grad)))
            if lam > best_lam:
                best_lam, arg = lam, (kind, _hash(psi))
            best_L = max(best_L, Lplus)
            if lam > TOL and len(counter) < 5:
                counter.append({"kind": kind, "lambda": float(lam), "R": float(r[-1]),
                                "psi": psi[:: max(1, len(psi) // 256)].tolist()})
    return {
        "n_samples": n_samples,
        "seed": seed,
        "scale": scale,
        "max_lambda": float(best_lam),
        "argmax": {"kind": arg[0], "hash": arg[1]} if arg else None,
        "max_L_plus_E180": float(best_L),
        "max_N_over_8R_sqrtE": float(worst_n_ratio),
        "kinds": kinds,
        "holds": bool(best_lam <= TOL and best_L <= TOL),
        "n_positive_found": len(counter),
        "counterexamples": counter,
    }


def maximize_lambda(R=200.0, scale=1.0, n=800, starts=12, seed=0):
    """Local maximisation of Lambda on profiles supported in [1, R].

    Works in s = log r, where Lambda = int_0^{log R} e^s (-(9/10) phi_s^2 + F(phi)) ds,
    with piecewise-linear phi and L-BFGS from random sine-power starts.
    """
    from scipy.optimize import minimize

    S = np.log(R)
    s = np.linspace(0.0, S, n + 1)
    h = s[1] - s[0]
    mid = np.exp(0.5 * (s[1:] + s[:-1]))
    w = np.exp(s) * h
    w[0] *= 0.5
    w[-1] *= 0.5

    def neg(u):
        phi = np.concatenate([[0.0], u, [0.0]])
        d = np.diff(phi) / h
        val = -0.9 * np.sum(mid * d * d * h) + np.sum(w * F(phi, scale))
        g = np.zeros_like(phi)
        em = 1.8 * mid * d
        g[:-1] += em
        g[1:] -= em
        g += w * F_prime(phi, scale)
        return -val, -g[1:-1]

    rng = np.random.default_rng(seed)
    best = (-np.inf, None)
    for _ in range(starts):
        A = rng.uniform(0.5, 8.0)
        u0 = A * np.sin(np.pi * s[1:-1] / S) ** rng.uniform(0.1, 1.0)
        res = minimize(neg, u0, jac=True, method="L-BFGS-B", options={"maxiter": 5000})
        if -res.fun > best[0]:
            best = (-res.fun, np.concatenate([[0.0], res.x, [0.0]]))
    return {"R": R, "scale": scale, "max_lambda": float(best[0]), "s": s, "phi": best[1]}


def negative_control_search(scale=1.5, R=200.0, n_check=16385):
    """Look for Lambda > 0 once F is replaced by scale * F (i.e. f by scale * f).

    The optimiser's witness is re-evaluated with the standard r-grid
    quadrature so the sign does not rest on the optimiser's discretisation.
    """
    opt = maximize_lambda(R, scale)
    r = np.linspace(1.0, R, n_check)
    psi = np.interp(np.log(r), opt["s"], opt["phi"])
    # smooth the kinks of the piecewise-linear witness slightly
    lam = lambda_functional(psi, r, scale)
    lam_orig = lambda_functional(psi, r, 1.0)
    return {"scale": scale, "R": R, "lambda_optimizer": opt["max_lambda"], "lambda_witness": float(lam),
            "lambda_witness_unscaled": float(lam_orig), "plateau_level": float(np.max(np.abs(psi))),
            "found_positive": bool(lam > 0), "witness_hash": _hash(psi)}


def small_amplitude_limit(eta, r, amps=(1e-1, 3e-2, 1e-2, 3e-3)):
    """Lambda(a eta)/a^2 against -(9/10) int eta_r^2 r^2 - (19/10) int eta^2."""
    h = r[1] - r[0]
    er = rp.derivative4(eta, h)
    target = -0.9 * simpson(er ** 2 * r ** 2, x=r) - 1.9 * simpson(eta ** 2, x=r)
    vals = [lambda_functional(a * eta, r) / a ** 2 for a in amps]
    errs = np.abs(np.asarray(vals) - target)
    slope = float(np.polyfit(np.log(amps), np.log(errs), 1)[0])
    return {"target": float(target), "values": vals, "error_slope": slope}


# -- virial trace along a PDE trajectory --------------------------------------


def virial_P(state: rp.WaveState, R):
    r = state.grid.r
    pr = rp.derivative4(state.psi, state.grid.h)
    integrand = chi_R(r, R) * state.psi_dot * (r * pr + 1.45 * state.psi) * r ** 2
    return float(simpson(integrand, x=r))


def error_bucket(state: rp.WaveState, R):
    r = state.grid.r
    if R >= r[-1]:
        return 0.0
    tail = rp.energy(state, R=R).exterior_tail
    return float(tail + rp._integrate(state.psi ** 2, r, R, None))


def virial_trace(traj: rp.Trajectory, R: float, C: float = 10.0, rtol: float = 1e-4):
    """P(T) - P(0) <= int_0^T (main + C error) dt at every recorded T.

    With the solution inside r < R the two sides agree exactly, so the
    comparison carries the discretisation error of P and of the trapezoid
    rule in t; ``rtol`` (relative to int |main|) absorbs it.
    """
    if not traj.states:
        raise RangeError("trajectory holds no states")
    if not 1.0 < R <= traj.grid.r_max:
        raise RangeError("R outside the grid")
    t = np.asarray(traj.times)
    P = np.array([virial_P(s, R) for s in traj.states])
    main = np.array([ell_functional(s)["L"] for s in traj.states])
    err = np.array([error_bucket(s, R) for s in traj.states])
    dt = np.diff(t)
    cum_main = np.concatenate([[0.0], np.cumsum(0.5 * dt * (main[1:] + main[:-1]))])
    cum_err = np.concatenate([[0.0], np.cumsum(0.5 * dt * (err[1:] + err[:-1]))])
    lhs = P - P[0]
    slack = cum_main + C * cum_err - lhs
    # smallest C making the inequality hold at every recorded T
    need = np.where(cum_err > 0, (lhs - cum_main) / np.where(cum_err > 0, cum_err, 1.0), -np.inf)
    tol = rtol * (1 + np.concatenate([[0.0], np.cumsum(0.5 * dt * np.abs(main[1:] + main[:-1]))]))
    bad_no_err = np.any((cum_err == 0) & (lhs - cum_main > tol))
    return {
        "times": t, "P": P, "main": main, "error": err,
        "C": C, "min_slack": float(slack.min()),
        "holds": bool(np.all(slack >= -tol)),
        "empirical_C": float(max(0.0, np.max(need))) if np.any(cum_err > 0) else 0.0,
        "error_free_holds": not bool(bad_no_err),
    }


def report_json(rep):
    return json.dumps({k: v for k, v in rep.items() if k != "counterexamples"}, sort_keys=True)
