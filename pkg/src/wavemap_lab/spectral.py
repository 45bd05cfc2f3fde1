"""Distorted Fourier data for L0 = -d^2/dr^2 + 2/r^2 and L = L0 + V on (1, inf).

Dirichlet condition at r = 1. The free objects are explicit; for the
perturbed operator the Weyl-Titchmarsh solution is obtained from a Volterra
equation posed inward from ``r_max``, with V cut off beyond that radius.

Numerically all Volterra kernels are written in the real fundamental system

    Y(r) = cos(lam r)/r + lam sin(lam r)  ~ 1/r,      J(r) = r j1(lam r)/lam  ~ r^2/3,

normalised by W(Y, J) = 1. Both stay O(1) uniformly as lam -> 0, so the free
Green function G0(r, r') = Y(r) J(r') - J(r) Y(r') does not suffer the
lam^-3 cancellation of its textbook form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import spherical_jn

from .errors import ContractionError, NormalizationError, PoleError, RangeError
from .quadrature import PanelGrid, graded_breaks

R_MAX = 1.0e3
EPS_TILDE = 0.1
POLE_TOL = 1e-8


# ---------------------------------------------------------------- free basis

def _k1(x):
    """j1(x)/x, finite at 0."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-3
    xs = x[small] ** 2
    out[small] = 1 / 3 - xs / 30 + xs ** 2 / 840
    out[~small] = spherical_jn(1, x[~small]) / x[~small]
    return out


def free_pair(r, lam):
    """(Y, Y', J, J') at real lam >= 0; see the module docstring."""
    r = np.asarray(r, dtype=float)
    lam = np.asarray(lam, dtype=float)
    x = lam * r
    c, s = np.cos(x), np.sin(x)
    k = _k1(x)
    Y = c / r + lam * s
    Yp = -c / r ** 2 - lam * s / r + lam ** 2 * c
    J = r ** 2 * k
    Jp = r * (spherical_jn(0, x) - k)
    return Y, Yp, J, Jp


def _check_pole(z):
    if abs(z + 1j) < POLE_TOL:
        raise PoleError(f"z = {z} is at the pole z = -i")


def _raw(kind, r, z, ops):
    """Closed forms as printed (generic in z; ``ops`` supplies sin/cos/exp)."""
    sin, cos, exp = ops
    d = r - 1
    if kind == "phi0":
        return ((1 + z ** 2 * r) * sin(z * d) - z * d * cos(z * d)) / (z ** 3 * r)
    if kind == "theta0":
        return ((1 + z ** 2 * d) * sin(z * d) + (z ** 3 * r - z * d) * cos(z * d)) / (z ** 3 * r)
    if kind == "psi0":
        return (z + 1j / r) / (z + 1j) * exp(1j * z * d)
    raise ValueError(kind)


def phi0(r, lam):
    """phi0(r; lam) for real lam >= 0 (broadcasts), stable as lam (r - 1) -> 0."""
    Y, _, J, _ = free_pair(r, lam)
    Y1, _, J1, _ = free_pair(1.0, lam)
    return Y1 * J - J1 * Y


def phi0_prime(r, lam):
    Y, Yp, J, Jp = free_pair(r, lam)
    Y1, _, J1, _ = free_pair(1.0, lam)
    return Y1 * Jp - J1 * Yp


def theta0(r, lam):
    Y, _, J, _ = free_pair(r, lam)
    _, Yp1, _, Jp1 = free_pair(1.0, lam)
    return Jp1 * Y - Yp1 * J


def theta0_prime(r, lam):
    Y, Yp, J, Jp = free_pair(r, lam)
    _, Yp1, _, Jp1 = free_pair(1.0, lam)
    return Jp1 * Yp - Yp1 * Jp


def psi0(r, z):
    _check_pole(z)
    r = np.asarray(r, dtype=float)
    return (z + 1j / r) / (z + 1j) * np.exp(1j * z * (r - 1))


def psi0_prime(r, z):
    _check_pole(z)
    r = np.asarray(r, dtype=float)
    return (-1j / r ** 2 + 1j * z * (z + 1j / r)) / (z + 1j) * np.exp(1j * z * (r - 1))


def m0(z):
    _check_pole(z)
    return (1j * (z * z - 1) - z) / (z + 1j)


def omega0(lam):
    lam = np.asarray(lam, dtype=float)
    return 2 * lam ** 4 / (1 + lam ** 2)


def rho0_density(lam):
    """Density of the free spectral measure, omega0 / pi.

    With phi0'(1) = 1 the Weyl-Titchmarsh measure is (1/pi) Im m0 d(lam^2);
    the 1/pi is what makes the Plancherel identity hold.
    """
    return omega0(lam) / np.pi


def G0(r, rp, lam):
    """Free Green function of the Volterra equation for psi~ (real lam)."""
    Y, _, J, _ = free_pair(r, lam)
    Yq, _, Jq, _ = free_pair(rp, lam)
    return Y * Jq - J * Yq


def G0_closed(r, rp, lam):
    """The same kernel in its trigonometric form (loses digits for small lam)."""
    if lam == 0:
        raise ValueError("lam must be nonzero")
    return ((1 / rp - 1 / r) * np.cos(lam * (r - rp)) / lam ** 2
            + (lam ** 2 + 1 / (r * rp)) / lam ** 2 * np.sin(lam * (rp - r)) / lam)


def free_eval(kind, *args):
    """Evaluate a free closed form by name.

    kinds: phi0(r, z), theta0(r, z), psi0(r, z), m0(z), omega0(lam), G0(r, r', lam).
    Complex z in phi0/theta0 uses the printed formula directly.
    """
    if kind == "m0":
        return m0(args[0])
    if kind == "omega0":
        return omega0(args[0])
    if kind == "G0":
        r, rp, lam = args
        if lam == 0:
            raise ValueError("G0 needs lam != 0")
        return G0(r, rp, lam)
    r, z = args
    if np.any(np.asarray(r) < 1):
        raise RangeError("r must be >= 1")
    if kind == "psi0":
        return psi0(r, z)
    if kind in ("phi0", "theta0"):
        if np.isreal(z) and float(np.real(z)) >= 0:
            lam = float(np.real(z))
            return phi0(r, lam) if kind == "phi0" else theta0(r, lam)
        return _raw(kind, np.asarray(r, dtype=float), complex(z), (np.sin, np.cos, np.exp))
    raise ValueError(f"unknown kind {kind!r}")


def phi0_bound_scan(r_grid=None, lam_grid=None):
    """sup |phi0| lam^2 / ((1 + lam) min(1, lam (r - 1))) and sup |psi0| over a grid."""
    if r_grid is None:
        r_grid = 1 + np.geomspace(1e-6, 1e3 - 1, 600)
    if lam_grid is None:
        lam_grid = np.geomspace(1e-3, 1e3, 300)
    best = 0.0
    arg = None
    psi_sup = 0.0
    for lam in lam_grid:
        ph = phi0(r_grid, lam)
        ratio = np.abs(ph) * lam ** 2 / ((1 + lam) * np.minimum(1.0, lam * (r_grid - 1)))
        i = int(np.argmax(ratio))
        if ratio[i] > best:
            best, arg = float(ratio[i]), (float(r_grid[i]), float(lam))
        psi_sup = max(psi_sup, float(np.max(np.abs(psi0(r_grid, lam)))))
    return {"sup": best, "argmax": arg, "psi0_sup": psi_sup,
            "n_r": len(r_grid), "n_lam": len(lam_grid)}


# ---------------------------------------------------------------- Plancherel

def lambda_panels(lam_max, n_nodes, order=16, lam_min=1e-3):
    """Composite Gauss on log-spaced panels over (0, lam_max]."""
    n_pan = max(1, n_nodes // order)
    breaks = np.concatenate([[0.0], np.geomspace(lam_min, lam_max, n_pan)])
    return PanelGrid(breaks, order)


def gaussian_bump(center=2.5, sigma=0.06):
    """Smooth profile, below 1e-15 outside [center - 0.5, center + 0.5]."""
    return lambda r: np.exp(-0.5 * ((np.asarray(r) - center) / sigma) ** 2)


def plancherel_roundtrip(f, support=(2.0, 3.0), lam_max=200.0, n_nodes=10_000, r_eval=None, tol=None):
    """Forward/inverse free distorted Fourier transform of a compact profile.

    Returns the L^2 round-trip error on ``r_eval`` and the Parseval defect.
    With ``tol`` given, raises RangeError if the transform at lam_max is
    still too large for the truncated lam-integral to meet it.
    """
    a, b = support
    rg = PanelGrid(np.linspace(a, b, 33), 16)
    rn = rg.flat
    fr = f(rn)
    lg = lambda_panels(lam_max, n_nodes)
    lam = lg.flat
    w = lg.w.ravel() * rho0_density(lam)
    # fhat(lam) = int phi0(r; lam) f(r) dr
    fhat = (fr * rg.w.ravel()) @ phi0(rn[:, None], lam[None, :])
    norm2 = float(rg.integral(fr ** 2))
    if norm2 == 0.0:
        return {"l2_error": 0.0, "parseval_defect": 0.0, "norm2": 0.0, "tail": 0.0}
    tail = float(abs(fhat[-1]) ** 2 * rho0_density(lam_max) * lam_max)
    if tol is not None and tail > tol:
        raise RangeError(f"lam_max = {lam_max} too small: tail estimate {tail:.2g} > {tol:g}; increase lam_max")
    parseval = abs(norm2 - float(np.sum(fhat ** 2 * w)))
    if r_eval is None:
        r_eval = PanelGrid(np.linspace(1.0, 6.0, 81), 16)
    recon = phi0(r_eval.flat[:, None], lam[None, :]) @ (fhat * w)
    err = np.sqrt(r_eval.integral((recon - f(r_eval.flat)) ** 2) / norm2)
    return {"l2_error": float(err), "parseval_defect": float(parseval / norm2), "norm2": norm2,
            "tail": tail, "lam_max": lam_max, "n_nodes": lg.flat.size}


def local_energy_sanity(f, V1, support=(2.0, 6.0), T=100.0, lam_max=20.0, r_max=10.0):
    """int_0^T int |V1 e^{-itA} f|^2 dr dt / ||f||^2 via the free transform.

    The lam panels have width 16/T so that e^{-i lam t} stays resolved up to
    t = T; time is integrated with unit Gauss panels.
    """
    a, b = support
    rg = PanelGrid(np.linspace(a, b, 33), 16)
    fr = f(rg.flat)
    lg = PanelGrid(np.linspace(0.0, lam_max, max(2, int(np.ceil(lam_max * T / 16)) + 1)), 16)
    lam = lg.flat
    w = lg.w.ravel() * rho0_density(lam)
    fhat = (fr * rg.w.ravel()) @ phi0(rg.flat[:, None], lam[None, :])
    xg = PanelGrid(np.linspace(1.0, r_max, 10), 8)
    x = xg.flat
    basis = phi0(x[:, None], lam[None, :]) * (fhat * w)
    tg = PanelGrid(np.linspace(0.0, T, int(np.ceil(T)) + 1), 16)
    u = basis @ np.exp(-1j * np.outer(lam, tg.flat))
    dens = np.sum(np.abs(u) ** 2 * (V1(x) ** 2 * xg.w.ravel())[:, None], axis=0)
    val = float(np.sum(dens * tg.w.ravel()))
    return {"ratio": val / float(rg.integral(fr ** 2)), "T": T, "lam_max": lam_max}


# ---------------------------------------------------------------- perturbed

def _potential(V):
    if V is None:
        return lambda r: np.zeros_like(np.asarray(r, dtype=float))
    return V


def _check_decay(V, r_max):
    r = np.geomspace(r_max / 4, r_max, 9)
    v = np.abs(V(r))
    if not np.all(np.isfinite(v)):
        raise RangeError("V is not finite")
    if np.all(v == 0):
        return
    if np.any(v == 0):
        return
    slope = np.polyfit(np.log(r), np.log(v), 1)[0]
    if slope > -4.5:
        raise RangeError(f"V decays like r^{slope:.2f}; int s^3 |V| must be finite")


def volterra_grid(lam, r_max=R_MAX, order=16):
    h_max = 50.0 if lam == 0 else min(50.0, 4.0 / lam)
    return PanelGrid(graded_breaks(1.0, r_max, min(0.05, h_max), 1.15, h_max), order)


@dataclass
class PerturbedBasis:
    lam: float
    r: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)
    psi_t: np.ndarray = field(repr=False)  # psi~ at the nodes
    dpsi_t: np.ndarray = field(repr=False)
    psi_t1: complex = 0j  # psi~(1)
    dpsi_t1: complex = 0j
    iterations: int = 0
    contraction: float = 0.0
    c: complex = 0j
    m: complex = 0j
    phi: np.ndarray = field(repr=False, default=None)
    grid: PanelGrid = field(repr=False, default=None)

    def wronskian(self):
        """W(psi~, conj psi~) at r = 1 and its spread over the nodes."""
        w1 = self.psi_t1 * np.conj(self.dpsi_t1) - self.dpsi_t1 * np.conj(self.psi_t1)
        wr = self.psi_t * np.conj(self.dpsi_t) - self.dpsi_t * np.conj(self.psi_t)
        return complex(w1), wr

    def wronskian_error(self, radii=10):
        target = -2j * self.lam ** 3 / (1 + self.lam ** 2)
        w1, wr = self.wronskian()
        idx = np.unique(np.geomspace(1, len(wr), radii).astype(int) - 1)
        return float(max(abs(w1 - target), np.max(np.abs(wr[idx] - target))))


def volterra_solve(V, lam, r_max=R_MAX, tol=1e-12, max_iter=500, order=16, grid=None) -> PerturbedBasis:
    """psi~ = psi0 + int_r^rmax G0(r, r') V psi~ dr' by Picard iteration."""
    if lam < 0:
        raise RangeError("lam must be >= 0")
    V = _potential(V)
    _check_decay(V, r_max)
    grid = grid or volterra_grid(lam, r_max, order)
    r = grid.flat
    v = V(r)
    Y, Yp, J, Jp = free_pair(r, lam)
    p0 = psi0(r, lam)
    psi = p0.copy()
    prev = None
    ratio = 0.0
    it = 0
    for it in range(1, max_iter + 1):
        a = grid.tail_integral(J * v * psi).ravel()
        b = grid.tail_integral(Y * v * psi).ravel()
        new = p0 + Y * a - J * b
        upd = float(np.max(np.abs(new - psi)) / max(np.max(np.abs(new)), 1e-300))
        psi = new
        if prev is not None and prev > 0:
            ratio = max(ratio, upd / prev) if upd > 1e-14 else ratio
        prev = upd
        if upd < tol:
            break
    else:
        raise ContractionError(f"Volterra iteration did not converge in {max_iter} steps")
    a = grid.tail_integral(J * v * psi).ravel()
    b = grid.tail_integral(Y * v * psi).ravel()
    dpsi = psi0_prime(r, lam) + Yp * a - Jp * b
    A1 = grid.integral(J * v * psi)
    B1 = grid.integral(Y * v * psi)
    Y1, Yp1, J1, Jp1 = free_pair(1.0, lam)
    psi1 = complex(psi0(1.0, lam) + Y1 * A1 - J1 * B1)
    dpsi1 = complex(psi0_prime(1.0, lam) + Yp1 * A1 - Jp1 * B1)
    return PerturbedBasis(lam, r, v, psi, dpsi, psi1, dpsi1, it, ratio, grid=grid)


def perturbed_basis(V, lam, r_max=R_MAX, grid=None) -> PerturbedBasis:
    """Normalised Weyl solution, m(lam) and phi = Im psi / Im m."""
    if lam <= 0:
        raise RangeError("lam must be > 0")
    pb = volterra_solve(V, lam, r_max, grid=grid)
    if abs(pb.psi_t1) < 1e-12:
        raise NormalizationError(f"psi~(1; {lam}) = {pb.psi_t1:.3g}")
    c = 1 / pb.psi_t1
    # W(conj psi, psi) = 2i Im m with psi = c psi~
    w1, _ = pb.wronskian()
    im_m = float(np.real(-abs(c) ** 2 * w1 / 2j))
    re_m = float(np.real(c * pb.dpsi_t1))
    pb.c = c
    pb.m = complex(re_m, im_m)
    pb.phi = np.imag(c * pb.psi_t) / im_m
    return pb


def ode_residual(pb: PerturbedBasis):
    """max |-(psi~)'' + (2/r^2 + V - lam^2) psi~| / ((1 + lam^2) max |psi~|), (psi~)'' spectral."""
    d2 = pb.grid.derivative(pb.dpsi_t).ravel()
    res = -d2 + (2 / pb.r ** 2 + pb.V - pb.lam ** 2) * pb.psi_t
    return float(np.max(np.abs(res)) / ((1 + pb.lam ** 2) * np.max(np.abs(pb.psi_t))))


def weyl_table(V, lams, r_max=R_MAX):
    """Rows (lam, Re m, Im m, omega = 2 lam Im m, c, Wronskian error)."""
    rows = []
    for lam in lams:
        pb = perturbed_basis(V, float(lam), r_max)
        rows.append({"lam": float(lam), "re_m": pb.m.real, "im_m": pb.m.imag,
                     "omega": 2 * lam * pb.m.imag, "abs_c": abs(pb.c),
                     "wronskian_error": pb.wronskian_error(), "iterations": pb.iterations})
    return rows


def spectral_weight_check(V, lams, power=2):
    """Bracket of lam^-power drho/dlam, drho/dlam = 2 lam Im m(lam).

    With power 2 the ratio tends to 2 as lam -> inf and to 0 like lam^2 at
    0; the small-lam slope of drho/dlam is fitted on the lam < 0.1 part.
    """
    lams = np.asarray(lams, dtype=float)
    if np.any(lams <= 0):
        raise RangeError("lam must be > 0")
    rows = weyl_table(V, lams)
    w = np.array([row["omega"] for row in rows])
    ratio = w / lams ** power
    small = lams < 0.1
    slope = float(np.polyfit(np.log(lams[small]), np.log(w[small]), 1)[0]) if small.sum() >= 2 else None
    return {"lam": lams.tolist(), "omega": w.tolist(), "power": power, "ratio_min": float(ratio.min()),
            "ratio_max": float(ratio.max()), "small_lam_slope": slope}


def im_m_bracket(V, lams):
    lams = np.asarray(lams, dtype=float)
    q = np.array([perturbed_basis(V, float(lam)).m.imag for lam in lams]) / lams ** 3
    return {"lam": lams.tolist(), "ratio": q.tolist(), "lower": float(q.min()), "upper": float(q.max())}


# ---------------------------------------------------------------- zero energy

@dataclass
class ZeroEnergyPair:
    r: np.ndarray = field(repr=False)
    u0: np.ndarray = field(repr=False)
    du0: np.ndarray = field(repr=False)
    u1: np.ndarray = field(repr=False)
    du1: np.ndarray = field(repr=False)
    r0: float = 1.0
    u0_1: float = 0.0
    du0_1: float = 0.0
    iterations: int = 0
    grid: PanelGrid = field(repr=False, default=None)
    u1_1: float = 0.0
    du1_1: float = 0.0

    @property
    def boundary_functional(self):
        """u0'(1) + 2 u0(1)."""
        return self.du0_1 + 2 * self.u0_1

    def wronskian_error(self):
        sel = slice(None)
        w = self.u0[sel] * self.du1[sel] - self.du0[sel] * self.u1[sel]
        return float(np.max(np.abs(w - 1)))

    def tail_fit(self, lo=10.0, hi=100.0):
        """Slopes of log|r u0 - 1| and log|3 u1 / r^2 - 1 + c/r^3| against log r."""
        sel = (self.r >= lo) & (self.r <= hi)
        r = self.r[sel]
        d0 = np.abs(r * self.u0[sel] - 1)
        s0 = float(np.polyfit(np.log(r), np.log(d0), 1)[0]) if np.all(d0 > 0) else -np.inf
        return {"u0_slope": s0, "ru0_at_hi": float(r[-1] * self.u0[sel][-1]),
                "u1_over_r2_at_hi": float(self.u1[sel][-1] / r[-1] ** 2)}


def zero_energy(V, r0=1.0, r_max=R_MAX, tol=1e-14, max_iter=500, grid=None) -> ZeroEnergyPair:
    """u0 = 1/r - int_r^rmax (r^3 - s^3)/(3 s r) V u0 ds and u1 = u0 int_r0^r u0^-2."""
    V = _potential(V)
    _check_decay(V, r_max)
    if grid is None:
        grid = PanelGrid(np.union1d(volterra_grid(0.0, r_max).breaks, [r0]), 16)
    k0 = int(np.searchsorted(grid.breaks, r0))
    if not np.isclose(grid.breaks[min(k0, len(grid.breaks) - 1)], r0, rtol=0, atol=1e-12):
        raise ValueError("r0 must be a panel break of the grid")
    r = grid.flat
    v = V(r)
    u = 1 / r
    for it in range(1, max_iter + 1):
        a = grid.tail_integral(v * u / r).ravel()
        b = grid.tail_integral(r ** 2 * v * u).ravel()
        new = 1 / r - r ** 2 / 3 * a + b / (3 * r)
        upd = float(np.max(np.abs(new - u)))
        u = new
        if upd < tol:
            break
    else:
        raise ContractionError("zero-energy Volterra iteration did not converge")
    a = grid.tail_integral(v * u / r).ravel()
    b = grid.tail_integral(r ** 2 * v * u).ravel()
    du = -1 / r ** 2 - 2 * r / 3 * a - b / (3 * r ** 2)
    A1, B1 = grid.integral(v * u / r), grid.integral(r ** 2 * v * u)
    u0_1 = float(1 - A1 / 3 + B1 / 3)
    du0_1 = float(-1 - 2 * A1 / 3 - B1 / 3)
    if np.any(u[r > r0] <= 0):
        raise RangeError(f"u0 changes sign beyond r0 = {r0}; choose a larger r0")
    # u1 = u0 int_r0^r u0^-2; r0 is a panel break so the shift is a sum of panel totals
    inv2 = 1 / u ** 2
    I0 = float(np.sum((inv2.reshape(grid.r.shape) * grid.w)[:k0]))
    head = grid.head_integral(inv2).ravel() - I0
    u1 = u * head
    du1 = du * head + 1 / u
    zp = ZeroEnergyPair(r, u, du, u1, du1, r0, u0_1, du0_1, it, grid)
    zp.u1_1 = -u0_1 * I0
    zp.du1_1 = -du0_1 * I0 + 1 / u0_1
    return zp


def point_spectrum_probe(V, n=4000, L=200.0, zero_pair=None):
    """Lowest Dirichlet eigenvalue of L on [1, L] and u0'(1) + 2 u0(1)."""
    V = _potential(V)
    h = (L - 1) / (n + 1)
    r = 1 + h * np.arange(1, n + 1)
    d = 2 / h ** 2 + 2 / r ** 2 + V(r)
    e = -np.ones(n - 1) / h ** 2
    ev = eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(0, 0))
    zp = zero_pair if zero_pair is not None else zero_energy(V)
    return {"lowest": float(ev[0]), "n": n, "L": L, "h": h, "u0_1": zp.u0_1, "du0_1": zp.du0_1,
            "boundary_functional": zp.boundary_functional}


# ---------------------------------------------------------------- low energy

@dataclass
class LowEnergyBasis:
    lam: float
    r: np.ndarray = field(repr=False)
    u0: np.ndarray = field(repr=False)
    du0: np.ndarray = field(repr=False)
    u1: np.ndarray = field(repr=False)
    du1: np.ndarray = field(repr=False)
    u0_1: float = 0.0
    du0_1: float = 0.0
    u1_1: float = 0.0
    du1_1: float = 1.0
    wronskian: float = 1.0
    contraction: float = 0.0
    phi: np.ndarray = field(repr=False, default=None)
    a: complex = 0j


def low_energy_basis(V, lam, eps=EPS_TILDE, r0=10.0, tol=1e-14, max_iter=200) -> LowEnergyBasis:
    """u1(.; lam), u0(.; lam) on [1, eps/lam], phi and the connection coefficient a(lam).

    The u1 equation is used with kernel u0(r) u1(r') - u1(r) u0(r'), the
    sign for which L u1(.; lam) = lam^2 u1(.; lam) with W(u0, u1) = 1.
    """
    if lam <= 0:
        raise RangeError("lam must be > 0")
    R = eps / lam
    r_conn = lam ** -0.5
    if R < r_conn * (1 - 1e-12) or R <= 1.5:
        raise RangeError(f"window [1, {R:.3g}] does not reach r = lam^-1/2 = {r_conn:.3g}")
    V = _potential(V)
    breaks = np.union1d(graded_breaks(1.0, R, 0.05, 1.15, 2.0), [min(r0, R), r_conn])
    full = PanelGrid(np.concatenate([breaks, graded_breaks(R, R_MAX, 2.0, 1.15, 50.0)[1:]]), 16)
    if r0 > R:
        full = PanelGrid(np.union1d(full.breaks, [r0]), 16)
    zp = zero_energy(V, r0=r0, grid=full)
    grid = PanelGrid(breaks, 16)
    r = grid.flat
    m = r.size
    u0, du0, u1, du1 = zp.u0[:m], zp.du0[:m], zp.u1[:m], zp.du1[:m]
    l2 = lam * lam

    # u1(r; lam) = u1(r) - lam^2 int_1^r [u1(r) u0(s) - u0(r) u1(s)] u1(s; lam) ds
    w = u1.copy()
    for _ in range(max_iter):
        p = grid.head_integral(u0 * w).ravel()
        q = grid.head_integral(u1 * w).ravel()
        new = u1 - l2 * (u1 * p - u0 * q)
        upd = np.max(np.abs(new - w)) / np.max(np.abs(new))
        w = new
        if upd < tol:
            break
    else:
        raise ContractionError("u1(.; lam) iteration did not converge")
    p = grid.head_integral(u0 * w).ravel()
    q = grid.head_integral(u1 * w).ravel()
    u1l, du1l = w, du1 - l2 * (du1 * p - du0 * q)

    # u0(r; lam) = u0(r) + lam^2 (u0(r) int_1^r u1 x + u1(r) int_r^R u0 x)
    x = u0.copy()
    prev = None
    ratio = 0.0
    for _ in range(max_iter):
        p = grid.head_integral(u1 * x).ravel()
        q = grid.tail_integral(u0 * x).ravel()
        new = u0 + l2 * (u0 * p + u1 * q)
        upd = float(np.max(np.abs(new - x)) / np.max(np.abs(new)))
        x = new
        if prev:
            ratio = max(ratio, upd / prev) if upd > 1e-13 else ratio
        prev = upd
        if ratio >= 1:
            raise ContractionError(f"eps = {eps} too large: contraction factor {ratio:.3g}")
        if upd < tol:
            break
    else:
        raise ContractionError("u0(.; lam) iteration did not converge")
    p = grid.head_integral(u1 * x).ravel()
    q = grid.tail_integral(u0 * x).ravel()
    u0l, du0l = x, du0 + l2 * (du0 * p + du1 * q)
    Q1 = grid.integral(u0 * x)
    u1_1, du1_1 = zp.u1_1, zp.du1_1
    u0l_1 = float(zp.u0_1 + l2 * u1_1 * Q1)
    du0l_1 = float(zp.du0_1 + l2 * du1_1 * Q1)
    W = u0l * du1l - du0l * u1l
    Wm = float(np.median(W))

    # phi = c (u1(.; lam) - u0(.; lam) u1(1) / u0(1; lam)), c = u0(1; lam) / W
    cphi = u0l_1 / Wm
    phi = cphi * (u1l - u0l * u1_1 / u0l_1)
    dphi = cphi * (du1l - du0l * u1_1 / u0l_1)
    # a(lam) = W(phi, conj psi~) / W(psi~, conj psi~) at r = lam^-1/2 (a panel break)
    pb = volterra_solve(V, lam, grid=full)
    k = int(np.argmin(np.abs(r - r_conn)))
    ps, dps = pb.psi_t[k], pb.dpsi_t[k]
    num = phi[k] * np.conj(dps) - dphi[k] * np.conj(ps)
    den = -2j * lam ** 3 / (1 + lam ** 2)
    out = LowEnergyBasis(lam, r, u0l, du0l, u1l, du1l, u0l_1, du0l_1, u1_1, du1_1, Wm, ratio, phi, num / den)
    out.W_spread = float(np.max(np.abs(W - Wm)))
    out.full_grid = full
    return out


def phi_bound_scan(V, lams, r_max=R_MAX):
    """sup_r lam^2 |phi(r; lam)| / min(1, lam (r - 1)) from the Weyl solution."""
    out = []
    for lam in lams:
        pb = perturbed_basis(V, float(lam), r_max)
        ratio = lam ** 2 * np.abs(pb.phi) / np.minimum(1.0, lam * (pb.r - 1))
        out.append(float(np.max(ratio)))
    return {"lam": [float(x) for x in lams], "sup": out, "max": float(max(out))}


@lru_cache(maxsize=2)
def harmonic_potential(n=1):
    """V = 2 (cos 2Q_n - 1) / r^2 as a callable."""
    from .harmonic_maps import find_harmonic, potential_fn

    return potential_fn(find_harmonic(n))
