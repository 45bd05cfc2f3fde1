"""Command line entry point: one subcommand per experiment kind.

    wavemap-lab phase --region omega2
    wavemap-lab run --config experiment.json
    wavemap-lab full-verify --out results/

Exit status: 0 when every declared check passes, 1 when one fails, 2 for
usage or configuration errors. Reports go to ``--out``, else to
``$WAVEMAP_LAB_OUT/<kind>``, else to ``./wavemap-out/<kind>``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import figures, io
from .errors import WaveMapLabError

OUT_ENV = "WAVEMAP_LAB_OUT"

# name -> (type, default, help, extra schema)
PARAMS = {
    "evolve": {
        "degree": (int, 0, "0: bump data, 1: Q_1 plus a small perturbation", {"enum": [0, 1]}),
        "amplitude": (float, 1.0, "bump amplitude (degree 0)", {}),
        "center": (float, 5.0, "bump center", {"minimum": 1.0}),
        "width": (float, 1.5, "bump width", {"exclusiveMinimum": 0}),
        "h": (float, 0.02, "grid spacing", {"exclusiveMinimum": 0, "maximum": 0.1}),
        "t_final": (float, 50.0, "final time", {"exclusiveMinimum": 0}),
        "R": (float, 10.0, "local energy radius", {"exclusiveMinimum": 1}),
        "pert_energy": (float, 1e-4, "perturbation energy (degree 1)", {"exclusiveMinimum": 0}),
    },
    "harmonic": {
        "n": (int, 1, "degree of the harmonic map", {"minimum": 1, "maximum": 3}),
        "r_max": (float, 1e4, "shooting radius", {"minimum": 1e3}),
    },
    "coercivity": {
        "n_samples": (int, 2000, "number of profiles", {"minimum": 1}),
        "n_adversarial": (int, 200, "of which adversarial", {"minimum": 0}),
        "scale": (float, 1.0, "factor on the density F (1.5 is the negative control)", {"exclusiveMinimum": 0}),
    },
    "phase": {
        "region": (str, "omega_-1", "Lyapunov region", {"enum": ["omega1", "omega_-1", "omega2"]}),
        "scale": (float, 1.0, "factor on f for the manifolds", {"exclusiveMinimum": 0}),
    },
    "renorm": {
        "j": (int, 4, "strip index (even, >= 4)", {"minimum": 4}),
        "n_eps": (int, 512, "grid size for the zero lemma", {"minimum": 2}),
    },
    "spectral": {
        "potential": (str, "q1", "zero or q1", {"enum": ["zero", "q1"]}),
        "lam_min": (float, 1e-2, "smallest frequency", {"exclusiveMinimum": 0}),
        "lam_max": (float, 100.0, "largest frequency", {"exclusiveMinimum": 0}),
        "n_lam": (int, 21, "number of frequencies", {"minimum": 2}),
    },
    "full-verify": {
        "thorough": (bool, False, "run every check at its acceptance size", {}),
    },
}

_JSON_TYPES = {int: "integer", float: "number", str: "string", bool: "boolean"}


def config_schema():
    one_of = []
    for kind, spec in PARAMS.items():
        props = {name: {"type": _JSON_TYPES[t], **extra} for name, (t, _, _, extra) in spec.items()}
        one_of.append({
            "properties": {"kind": {"const": kind},
                           "params": {"type": "object", "properties": props, "additionalProperties": False}},
        })
    return {
        "type": "object",
        "required": ["kind"],
        "properties": {
            "kind": {"enum": list(PARAMS)},
            "seed": {"type": "integer", "minimum": 0},
            "output": {"type": "string"},
            "figures": {"type": "boolean"},
            "params": {"type": "object"},
        },
        "additionalProperties": False,
        "oneOf": one_of,
    }


class UsageError(Exception):
    pass


def validate(config):
    try:
        jsonschema.validate(config, config_schema())
    except jsonschema.ValidationError as exc:
        raise UsageError(f"invalid config: {exc.message}") from None
    params = {name: d for name, (_, d, _, _) in PARAMS[config["kind"]].items()}
    params.update(config.get("params", {}))
    if config["kind"] == "spectral" and params["lam_max"] <= params["lam_min"]:
        raise UsageError("lam_max must exceed lam_min")
    if config["kind"] == "coercivity" and params["n_adversarial"] > params["n_samples"]:
        raise UsageError("n_adversarial must not exceed n_samples")
    if config["kind"] == "renorm" and params["j"] % 2:
        raise UsageError("j must be even (odd strips follow by reflection)")
    return params


@dataclass
class Outcome:
    report: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    figures: dict = field(default_factory=dict)

    def check(self, name, passed, value=None, **detail):
        self.checks.append({"name": name, "passed": bool(passed), "value": value, **detail})
        return bool(passed)

    def merge(self, other, prefix):
        self.report[prefix] = other.report
        for c in other.checks:
            self.checks.append({**c, "name": f"{prefix}.{c['name']}"})
        for k, v in other.tables.items():
            self.tables[f"{prefix}_{k}"] = v
        for k, v in other.figures.items():
            if k in self.figures and "series" in v:
                self.figures[k]["series"] = self.figures[k]["series"] + v["series"]
            else:
                self.figures[k] = v


# ---------------------------------------------------------------- experiments

def exp_evolve(p, seed):
    from . import harmonic_maps as hm
    from . import radial_pde as rp

    out = Outcome()
    t_final = p["t_final"]
    grid = rp.RadialGrid.with_spacing(rp.required_r_max(t_final, p["center"] + 4 * p["width"]), p["h"])
    if p["degree"] == 0:
        state = rp.WaveState.from_functions(grid, lambda r: rp.bump(r, p["amplitude"], p["center"], p["width"]))
        ref = None
    else:
        state, ref = rp.perturbed_state(hm.find_harmonic(1), grid, p["pert_energy"], p["center"], p["width"])
    traj = rp.evolve(state, t_final=t_final, record_dt=0.25)
    diag = rp.scattering_diagnostics(traj, p["R"], ref_psi=ref)
    series = diag["local_energy_series"]
    factor = rp.decay_factor(diag["times"], series, t_final)
    drift = float(traj.diagnostics["max_rel_drift"])
    out.report = {"grid": {"r_max": grid.r_max, "h": grid.h, "n": grid.n}, "dt": traj.diagnostics["dt"],
                  "energy": rp.energy(state).total, "max_rel_drift": drift, "decay_factor": factor,
                  "peak": float(series.max()), "final": float(series[-1])}
    out.check("energy_drift", drift < 1e-4, drift, bound=1e-4)
    need = 100.0 if p["degree"] == 0 else 10.0
    out.check("local_energy_decay", factor >= need, factor, bound=need)
    out.tables["local_energy"] = io.columns_to_rows(t=diag["times"], local_energy=series,
                                                    drift=traj.drift)
    out.figures["evolve"] = {"series": [{"x": diag["times"], "y": np.maximum(series, 1e-300),
                                         "label": f"degree {p['degree']}"}]}
    return out


def exp_harmonic(p, seed):
    from . import harmonic_maps as hm

    out = Outcome()
    Q = hm.find_harmonic(p["n"], p["r_max"])
    fit = hm.tail_fit(Q)
    res = hm.ode_residual(Q)
    pot = hm.potential(Q)
    gauge = hm.linearized_gauge(Q)
    out.report = {"n": Q.n, "slope": Q.slope, "bracket": list(Q.bracket), "tail_c": Q.tail_c,
                  "tail_spread": fit["residual"], "ode_residual": res, "r6V_max": pot.r6V_max,
                  "gauge_residual": gauge["residual"], "gauge_boundary": gauge["boundary"]}
    out.check("ode_residual", res < 1e-8, res, bound=1e-8)
    out.check("tail_fit", fit["residual"] < 1e-2, fit["residual"])
    out.check("potential_nonpositive", bool(np.all(pot.V <= 0)), float(pot.V.max()))
    out.check("gauge_residual", gauge["residual"] < 1e-6, gauge["residual"])
    r = np.geomspace(1, 1e3, 400)
    out.tables["profile"] = io.columns_to_rows(r=r, Q=Q(r), dQ=Q.derivative(r))
    out.figures["harmonic"] = {"series": [{"x": r, "y": Q(r), "label": f"Q_{Q.n}"}],
                               "levels": [k * np.pi for k in range(1, Q.n + 1)]}
    return out


def exp_coercivity(p, seed):
    from . import virial

    out = Outcome()
    rep = virial.coercivity_sample(p["n_samples"], seed=seed, scale=p["scale"], n_adversarial=p["n_adversarial"])
    out.report = {k: v for k, v in rep.items() if k != "counterexamples"}
    out.report["counterexamples"] = [{k: v for k, v in c.items() if k != "psi"} for c in rep["counterexamples"]]
    if p["scale"] == 1.0:
        out.check("lambda_nonpositive", rep["max_lambda"] <= virial.TOL, rep["max_lambda"], bound=virial.TOL)
        out.check("L_plus_E_over_180", rep["max_L_plus_E180"] <= virial.TOL, rep["max_L_plus_E180"])
    else:
        # with the density inflated the sampler is expected to find violations
        out.check("negative_control_positive", rep["n_positive_found"] > 0, rep["max_lambda"])
    if rep["counterexamples"]:
        c = rep["counterexamples"][0]
        s = np.linspace(0, 1, len(c["psi"]))
        out.figures["coercivity"] = {"series": [{"x": s, "y": c["psi"], "label": f"Lambda = {c['lambda']:.3g}"}]}
    return out


def _region_polygons(region):
    return {"name": region.name, "polygons": [figures.slab_polygon(s) for s in region.slabs]}


def exp_phase(p, seed):
    from . import phase_plane as pp
    from . import regions as rg

    out = Outcome()
    region = rg.BUILTIN[p["region"]]()
    area = rg.exact_area(region)
    bnd = rg.lyapunov_boundary_check(region, mode="refined")
    b = pp.budgets()
    zeros = [pp.zero(k) for k in range(1, 5)]
    out.report = {"zeros": zeros, "budgets": b, "area_exact": str(area["exact"]), "area": area["decimal"],
                  "area_parts": [str(a) for a in area["parts"]], "boundary": bnd, "notes": region.notes}
    if region.name == "omega_2":
        out.check("area_exceeds_19/5", area["exact"] > rg.Fr(19, 5), area["decimal"], bound=3.8)
    else:
        out.check("area_exceeds_221/100", area["exact"] > rg.Fr(221, 100), area["decimal"], bound=2.21)
    out.check("boundary_repulsive", bnd["all_positive"], min(v["min"] for v in bnd.values() if isinstance(v, dict)))
    manifolds = []
    specs = [(0, "+", "crossing"), (4, "-", "crossing"), (-2, "+", "limit")]
    for j, br, follow in specs:
        m = pp.unstable_manifold(j, br, scale=p["scale"], follow=follow, target_x=0.0 if j == -2 else None)
        manifolds.append({"label": f"W{j}{br}", "x": m.trajectory.x, "y": m.trajectory.y})
        out.report[f"W{j}{br}"] = {"outcome": m.outcome, "crossing": m.crossing, "sink": m.sink,
                                   "target_hit": m.target_hit, "residual": m.residual}
        if p["scale"] == 1.0:
            if j == 0:
                out.check("W0+_crossing_in_(x1,x2)", m.crossing is not None and zeros[0] < m.crossing < zeros[1],
                          m.crossing)
            elif j == 4:
                out.check("W4-_crossing_in_(x2,x3)", m.crossing is not None and zeros[1] < m.crossing < zeros[2],
                          m.crossing)
            else:
                out.check("W-2+_captured_at_x-1", m.outcome == "captured" and m.sink == -1, m.outcome)
        elif j == -2:
            out.check("W-2+_reaches_y_axis", m.outcome == "reached-target", m.outcome)
    out.tables["zeros"] = [{"j": k + 1, "x": z} for k, z in enumerate(zeros)]
    eqs = [{"x": pp.zero(k), "kind": "saddle" if k % 2 == 0 else "sink"} for k in range(-3, 5)]
    out.figures["phase"] = {"manifolds": manifolds, "equilibria": eqs + [{"x": 0.0, "kind": "saddle"}],
                            "regions": [_region_polygons(region)], "xlim": (-3.5, 6.0), "ylim": (-2.5, 2.5)}
    return out


def exp_renorm(p, seed):
    from . import renorm

    out = Outcome()
    eps = renorm.eps_for(p["j"])
    zl = renorm.lemma_zeros_signcheck(renorm.default_eps_grid(p["n_eps"]))
    bad_enc = [e for e in renorm.default_eps_grid(p["n_eps"])
               if not all(renorm.zero_enclosures(e)[k] for k in ("ok0", "ok2"))]
    d1 = renorm.discriminant_scan("F1")
    d2 = renorm.discriminant_scan("F2")
    pts = renorm.f1f2_point_values()
    reg = renorm.renorm_region_check(eps)
    m_up = renorm.renorm_manifold_check(p["j"], "+")
    m_dn = renorm.renorm_manifold_check(p["j"], "-")
    out.report = {"eps": eps, "discriminant_F1": d1, "discriminant_F2": d2, "points": pts, "region": reg,
                  "manifold_up": {k: v for k, v in m_up.items() if k != "trajectory"},
                  "manifold_down": {k: v for k, v in m_dn.items() if k != "trajectory"},
                  "enclosure_failures": len(bad_enc)}
    out.check("zero_lemma_signs", zl["all_hold"], sum(1 for row in zl["rows"] if not row[-1]))
    out.check("zero_enclosures", not bad_enc, len(bad_enc))
    out.check("F1_discriminant_negative", d1["all_negative"] and d1["endpoint_pi"]["nonneg"], d1["max_disc"])
    out.check("F2_discriminant_negative", d2["all_negative"], d2["max_disc"])
    out.check("F1(5/2,1/4)", abs(pts["F1(5/2,1/4)"] - 0.54) <= 0.01, pts["F1(5/2,1/4)"])
    out.check("F2(15/8,1/4)", abs(pts["F2(15/8,1/4)"] - 0.41) <= 0.01, pts["F2(15/8,1/4)"])
    out.check("region_contradiction", reg["contradiction"] and reg["repulsive"], reg["area"])
    out.check("manifold_up_in_window", m_up["in_window"], m_up["crossing"])
    out.check("manifold_down_in_window", m_dn["in_window"], m_dn["crossing"])
    out.tables["zero_lemma"] = [dict(zip(("eps", "h_a-1/3", "h_a-1/9", "h_c10", "h_c40", "holds"), row))
                                for row in zl["rows"]]
    z1 = np.linspace(2, np.pi, 200)
    z2 = np.linspace(7 / 4, 2, 100)
    tu, td = m_up["trajectory"], m_dn["trajectory"]
    sigma = [(np.concatenate([z1, z1[::-1]]), np.concatenate([renorm.y1(z1), np.zeros_like(z1)])),
             (np.concatenate([z2, z2[::-1]]), np.concatenate([renorm.y2(z2), np.zeros_like(z2)]))]
    out.figures["renorm"] = {
        "manifolds": [{"label": "W+ from zeta0", "x": tu.zeta, "y": tu.eta},
                      {"label": "W- from pi + zeta2", "x": td.zeta, "y": td.eta}],
        "regions": [{"name": "Sigma", "polygons": sigma}],
        "equilibria": [{"x": 0.0, "kind": "saddle"}, {"x": np.pi, "kind": "saddle"},
                       {"x": np.pi / 2, "kind": "sink"}],
        "xlim": (-0.2, 3.4),
    }
    return out


def exp_spectral(p, seed):
    from . import spectral as sp

    out = Outcome()
    V = sp.harmonic_potential(1) if p["potential"] == "q1" else None
    lams = np.geomspace(p["lam_min"], p["lam_max"], p["n_lam"])
    rows = sp.weyl_table(V, lams)
    werr = max(r["wronskian_error"] for r in rows)
    lams_f = np.geomspace(p["lam_min"], p["lam_max"], 50)
    r = np.geomspace(1.0, 100.0, 50)
    wf = max(float(np.max(np.abs(sp.theta0(r, L) * sp.phi0_prime(r, L) - sp.theta0_prime(r, L) * sp.phi0(r, L) - 1)))
             for L in lams_f)
    pl = sp.plancherel_roundtrip(sp.gaussian_bump())
    probe = sp.point_spectrum_probe(V)
    out.report = {"potential": p["potential"], "wronskian_free_max": wf, "wronskian_perturbed_max": werr,
                  "plancherel": pl, "point_spectrum": probe}
    out.check("W(theta0,phi0)=1", wf < 1e-8, wf)
    out.check("W(psi~,conj psi~)", werr < 1e-8, werr)
    out.check("plancherel_roundtrip", pl["l2_error"] < 1e-6, pl["l2_error"])
    out.check("no_negative_eigenvalue", probe["lowest"] >= -1e-6, probe["lowest"])
    small = lams[lams <= 0.1]
    if len(small):
        br = sp.im_m_bracket(V, small)
        out.report["im_m_bracket"] = br
        out.check("Im_m_over_lam3_bracket", 0 < br["lower"] <= br["upper"] < np.inf, [br["lower"], br["upper"]])
    out.tables["weyl"] = rows
    out.figures["spectral"] = {"series": [{"x": lams, "y": [r_["im_m"] / r_["lam"] ** 3 for r_ in rows],
                                           "label": "Im m / lambda^3", "marker": "o"}]}
    return out


def exp_full_verify(p, seed):
    """Compose the module checks; ``thorough`` uses acceptance sizes throughout."""
    from . import phase_plane as pp
    from . import regions as rg
    from . import renorm, virial

    out = Outcome()
    out.merge(exp_phase({"region": "omega_-1", "scale": 1.0}, seed), "phase_omega_-1")
    o2 = Outcome()
    region = rg.omega2_region()
    area = rg.exact_area(region)
    o2.check("area_exceeds_19/5", area["exact"] > rg.Fr(19, 5), area["decimal"])
    bnd = rg.lyapunov_boundary_check(region, mode="refined")
    o2.check("boundary_repulsive", bnd["all_positive"], bnd["nu"]["min"])
    out.merge(o2, "phase_omega2")
    neg = Outcome()
    m = pp.unstable_manifold(-2, "+", scale=1.5, follow="limit", target_x=0.0)
    neg.check("W-2+_reaches_y_axis_at_scale_3/2", m.outcome == "reached-target", m.outcome)
    out.merge(neg, "phase_negative_control")
    out.merge(exp_renorm({"j": 4, "n_eps": 512 if p["thorough"] else 64}, seed), "renorm")
    ci = Outcome()
    res = renorm.cross_identity_residual(range(2, 41), np.linspace(-1, 4, 101))
    ci.check("f_decomposition", res["extended"] < 1e-12, res["extended"])
    out.merge(ci, "cross_identity")
    n = 10_000 if p["thorough"] else 1000
    out.merge(exp_coercivity({"n_samples": n, "n_adversarial": n // 10, "scale": 1.0}, seed), "coercivity")
    out.merge(exp_harmonic({"n": 1, "r_max": 1e4}, seed), "harmonic")
    out.merge(exp_spectral({"potential": "q1", "lam_min": 1e-2, "lam_max": 100.0,
                            "n_lam": 21 if p["thorough"] else 9}, seed), "spectral")
    ev = {"degree": 0, "amplitude": 1.0, "center": 5.0, "width": 1.5, "h": 0.02, "t_final": 50.0,
          "R": 10.0, "pert_energy": 1e-4}
    out.merge(exp_evolve(ev, seed), "evolve_degree0")
    out.merge(exp_evolve({**ev, "degree": 1}, seed), "evolve_degree1")
    out.report["virial_tolerance"] = virial.TOL
    return out


EXPERIMENTS = {
    "evolve": exp_evolve,
    "harmonic": exp_harmonic,
    "coercivity": exp_coercivity,
    "phase": exp_phase,
    "renorm": exp_renorm,
    "spectral": exp_spectral,
    "full-verify": exp_full_verify,
}


# ---------------------------------------------------------------- driver

def output_dir(config):
    if config.get("output"):
        return Path(config["output"])
    root = os.environ.get(OUT_ENV)
    return Path(root or "wavemap-out") / config["kind"]


def run(config, stream=None):
    """Validate, execute and serialise one experiment; returns the exit status."""
    stream = stream or sys.stdout
    try:
        params = validate(config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    kind = config["kind"]
    seed = config.get("seed", 0)
    outdir = output_dir(config)
    t0 = time.perf_counter()
    try:
        outcome = EXPERIMENTS[kind](params, seed)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, WaveMapLabError):
            print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
            return 2
        raise
    except WaveMapLabError as exc:
        outcome = Outcome()
        outcome.check("completed", False, f"{type(exc).__name__}: {exc}")
    elapsed = time.perf_counter() - t0
    failures = [c["name"] for c in outcome.checks if not c["passed"]]
    summary = {"kind": kind, "seed": seed, "params": params, "report": outcome.report,
               "checks": outcome.checks, "failures": failures, "passed": not failures}
    io.write_json(outdir / "summary.json", summary)
    for name, rows in outcome.tables.items():
        if rows:
            io.write_csv(outdir / f"{name}.csv", rows)
    written = figures.emit_figures(outcome.figures, outdir) if config.get("figures", True) else []
    for c in outcome.checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}  {_fmt(c['value'])}", file=stream)
    print(f"{kind}: {len(outcome.checks) - len(failures)}/{len(outcome.checks)} checks passed "
          f"in {elapsed:.1f} s -> {outdir}" + (f" ({len(written)} figures)" if written else ""), file=stream)
    return 1 if failures else 0


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return "" if v is None else str(v)


def build_parser():
    parser = argparse.ArgumentParser(prog="wavemap-lab", description="Equivariant wave map laboratory.")
    sub = parser.add_subparsers(dest="command")
    runp = sub.add_parser("run", help="run an experiment described by a JSON config")
    runp.add_argument("--config", required=True, help="path to a JSON config")
    _common(runp)
    for kind, spec in PARAMS.items():
        sp = sub.add_parser(kind, help=f"{kind} experiment")
        sp.add_argument("--config", help="JSON config; flags override its fields")
        _common(sp)
        for name, (typ, default, help_, extra) in spec.items():
            flag = "--" + name.replace("_", "-")
            if typ is bool:
                sp.add_argument(flag, dest=name, action="store_true", default=None, help=help_)
            else:
                sp.add_argument(flag, dest=name, type=typ, default=None, choices=extra.get("enum"),
                                help=f"{help_} (default {default})")
    return parser


def _common(p):
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV}/<kind>)")
    p.add_argument("--no-figures", action="store_true")


def config_from_args(args):
    config = {}
    if getattr(args, "config", None):
        try:
            config = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        if not isinstance(config, dict):
            raise UsageError("config must be a JSON object")
    if args.command != "run":
        if config.get("kind", args.command) != args.command:
            raise UsageError(f"config kind {config['kind']!r} does not match subcommand {args.command!r}")
        config["kind"] = args.command
        params = dict(config.get("params", {}))
        for name in PARAMS[args.command]:
            v = getattr(args, name, None)
            if v is not None:
                params[name] = v
        if params:
            config["params"] = params
    if args.seed is not None:
        config["seed"] = args.seed
    if args.out is not None:
        config["output"] = args.out
    if args.no_figures:
        config["figures"] = False
    return config


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        config = config_from_args(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
