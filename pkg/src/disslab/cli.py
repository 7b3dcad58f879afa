"""Command line front end: simulate, dissipation-time, mixing-rate, bounds,
cts, verify, sweep.

Conventions shared by all subcommands:

* matrices are row-major integer lists (``--matrix 2,1,1,1``),
* nu grids are log spaced ``lo:hi:points``,
* every float is printed with 17 significant digits and CSV headers carry a
  format version, so identical configurations produce byte-identical files,
* ``--config run.json`` may supply any long option; explicit flags win,
* exit codes: 0 success, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence

import numpy as np

from .bounds import BoundProfile, check_bound, eval_H, h1_power_closed_form, lattice_count, weyl_constant
from .dissipation import (
    DissipationReport,
    TruncationLeakError,
    check_lower_bound_chain,
    dissipation_sweep,
    fit_energy_decay,
    operator_norm_energies,
    tau_d_exact,
    tau_d_operator_catmap,
)
from .fields import ModeOverflowError, SpectralConvention, SpectralField, random_sparse_field
from .mixing import RateFunction, fit_rate, strong_envelope, weak_cesaro, weak_rate_envelope
from .pulsed import PulsedSystem, evolve, inviscid_gap
from .shear import CtsState, ShearFlow, energy_identity_defects, tau_d_cts, transport_gap_cts
from .toral import KroneckerViolation, ToralAutomorphism, kronecker_classify, verify_norm_form

CSV_VERSION = "disslab-csv v1"


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def _write_csv(path: str, columns: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w") as fh:
        fh.write(f"# {CSV_VERSION}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _parse_matrix(text: str) -> ToralAutomorphism:
    vals = [int(v) for v in text.split(",")]
    d = math.isqrt(len(vals))
    if d * d != len(vals) or d < 2:
        raise ValueError(f"matrix needs d*d integers, got {len(vals)}")
    rows = tuple(tuple(vals[i * d : (i + 1) * d]) for i in range(d))
    return ToralAutomorphism(rows)


def _parse_nu_grid(text: str) -> np.ndarray:
    lo, hi, pts = text.split(":")
    lo, hi, pts = float(lo), float(hi), int(pts)
    if lo <= 0 or hi <= 0 or pts < 1:
        raise ValueError(f"bad nu grid {text!r}")
    if pts == 1:
        return np.array([lo])
    return np.exp(np.linspace(math.log(lo), math.log(hi), pts))


def _parse_initial(text: str, convention: SpectralConvention) -> SpectralField:
    if text.startswith("mode:"):
        mode = tuple(int(v) for v in text[len("mode:") :].split(","))
        return SpectralField(convention, {mode: 1.0 + 0j})
    with open(text) as fh:
        return SpectralField.from_json(fh.read())


def _parse_rate(text: str, alpha: float, beta: float) -> RateFunction:
    if text.startswith("power:"):
        c, p = (float(v) for v in text[len("power:") :].split(","))
        return RateFunction.power(c, p, alpha, beta)
    if text.startswith("exp:"):
        c1, c2 = (float(v) for v in text[len("exp:") :].split(","))
        return RateFunction.exponential(c1, c2, alpha, beta)
    if text.startswith("file:"):
        with open(text[len("file:") :]) as fh:
            payload = json.load(fh)
        return RateFunction.tabulated(payload["t"], payload["h"], alpha, beta)
    raise ValueError(f"unknown rate spec {text!r} (power:c,p | exp:c1,c2 | file:path)")


def _parse_shear(text: str) -> ShearFlow:
    if text == "sin":
        return ShearFlow.sinusoidal()
    if text.startswith("coeffs:"):
        # alternating cos/sin coefficients per harmonic: a1,b1,a2,b2,...
        vals = [float(v) for v in text[len("coeffs:") :].split(",")]
        cos = tuple(vals[0::2])
        sin = tuple(vals[1::2])
        return ShearFlow(cos_coeffs=cos, sin_coeffs=sin, nondegenerate_critical_points=False)
    raise ValueError(f"unknown shear spec {text!r}")


def _convention(args) -> SpectralConvention:
    return SpectralConvention(getattr(args, "dim", 2) or 2, args.convention)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    conv = _convention(args)
    auto = _parse_matrix(args.matrix)
    theta0 = _parse_initial(args.initial, conv)
    system = PulsedSystem(auto, args.nu, conv)
    traj = evolve(theta0, system, args.steps)
    rows = []
    for n in range(traj.n_steps + 1):
        enu = traj.enu_values[n] if n < traj.n_steps else float("nan")
        rows.append((n, traj.energies[n], traj.h1_norms_sq[n], enu))
    _write_csv(args.out, ["n", "energy", "h1", "e_nu"], rows)
    print(f"wrote {args.out} ({traj.n_steps} steps)")
    return 0


def _sweep_cell(payload: dict) -> dict:
    auto = ToralAutomorphism(tuple(tuple(r) for r in payload["matrix"]))
    conv = SpectralConvention(payload["dim"], payload["convention"])
    rng = np.random.default_rng(payload["seed"])
    if payload["method"] == "exact":
        tau = tau_d_exact(auto, payload["nu"], conv)
    else:
        tau = tau_d_operator_catmap(auto, payload["nu"], conv, rng=rng)
    return {"nu": payload["nu"], "tau_d": tau, "method": payload["method"]}


def _run_tau_sweep(args, jobs: int) -> DissipationReport:
    auto = _parse_matrix(args.matrix)
    conv = _convention(args)
    nus = _parse_nu_grid(args.nu_grid)
    payloads = [
        {
            "matrix": [list(r) for r in auto.matrix],
            "dim": conv.dimension,
            "convention": conv.scaling,
            "nu": float(nu),
            "method": args.method,
            "seed": args.seed + i,  # one stream per cell, fixed by the config
        }
        for i, nu in enumerate(nus)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_cell, payloads))
    else:
        results = [_sweep_cell(p) for p in payloads]
    report = DissipationReport()
    report.entries = results  # merged in grid order by construction
    if len(results) >= 2:
        from .fitting import line_fit

        report.fit = line_fit(np.abs(np.log(report.nus)), report.taus.astype(float))
    return report


def _cmd_dissipation_time(args, jobs: int = 1) -> int:
    report = _run_tau_sweep(args, jobs)
    out = args.out
    with open(out, "w") as fh:
        json.dump(report.to_json_dict(), fh, indent=1, default=float)
    csv_path = out.rsplit(".", 1)[0] + ".csv"
    rows = [(e["nu"], e["tau_d"], abs(math.log(e["nu"]))) for e in report.entries]
    _write_csv(csv_path, ["nu", "tau_d", "ln_inv_nu"], rows)
    if report.fit:
        print(f"slope vs |ln nu|: {_fmt(report.fit.slope)} (r^2 = {_fmt(report.fit.r_squared)})")
    print(f"wrote {out} and {csv_path}")
    return 0


def _cmd_mixing_rate(args) -> int:
    auto = _parse_matrix(args.matrix)
    if args.mode == "strong":
        env = strong_envelope(auto, args.alpha, args.beta, args.n_max)
        rows = list(zip(env.n_values, env.values, env.tail_certificate))
    else:
        if args.alpha != 0:
            conv = _convention(args)
            mode = tuple([1] + [0] * (conv.dimension - 1))
            f = SpectralField(conv, {mode: 1.0})
            series = weak_cesaro(auto, f, f, args.n_max)
            rows = [(n + 1, series[n], 0.0) for n in range(args.n_max)]
        else:
            ns = np.unique(np.round(np.logspace(0, math.log10(args.n_max), 40)).astype(int))
            vals = weak_rate_envelope(auto.dimension, args.beta, ns)
            rows = [(int(n), v, 0.0) for n, v in zip(ns, vals)]
    _write_csv(args.out, ["n", "value", "tail_cert"], rows)
    print(f"wrote {args.out}")
    return 0


def _cmd_bounds(args) -> int:
    rate = _parse_rate(args.rate, args.alpha, args.beta)
    conv = _convention(args)
    kwargs = dict(dimension=conv.dimension, lambda_1=conv.lambda_1)
    if args.which in ("H2", "H4"):
        kwargs["weyl_c"] = weyl_constant(conv.dimension, args.vol, args.eps, conv.scaling)
    if args.which in ("H3", "H4"):
        kwargs["grad_u_norm"] = args.grad_u
    profile = BoundProfile(args.which, rate, **kwargs)
    nus = _parse_nu_grid(args.nu_grid)
    evaluated = profile.evaluate_grid(nus)
    rows = [(e["nu"], e["H"], e["bound"]) for e in evaluated]
    _write_csv(args.out, ["nu", "H", "bound"], rows)
    print(f"wrote {args.out}")
    return 0


def _cmd_cts(args) -> int:
    flow = _parse_shear(args.shear)
    conv = SpectralConvention(2, args.convention if args.convention else "geometric")
    nus = _parse_nu_grid(args.nu_grid)
    rng = np.random.default_rng(args.seed)
    rows = []
    hint = None
    for nu in sorted(nus, reverse=True):  # large nu first: cheap, seeds the hint
        tau = tau_d_cts(
            flow, float(nu), conv, k1_max=args.k1max, grid_size=args.ygrid,
            rng=rng, dt_target=args.dt, t_hint=hint,
        )
        hint = tau * 2.0
        rows.append((float(nu), tau))
    rows.sort(key=lambda r: r[0])
    _write_csv(args.out, ["nu", "tau_d"], rows)
    print(f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# verify suites
# ---------------------------------------------------------------------------

def _verify_identities(rng) -> List[tuple]:
    conv = SpectralConvention(2, "lattice")
    cat = ToralAutomorphism(((2, 1), (1, 1)))
    rows = []
    worst_energy, worst_sandwich, gap_ok = 0.0, 0.0, True
    for nu in (1e-1, 1e-3, 1e-6):
        for _ in range(10):
            theta0 = random_sparse_field(conv, rng, n_modes=6, kmax=6)
            system = PulsedSystem(cat, nu, conv)
            traj = evolve(theta0, system, 12)
            worst_energy = max(worst_energy, float(np.max(traj.energy_identity_residuals())))
            lo, hi = traj.sandwich_residuals()
            worst_sandwich = max(worst_sandwich, float(-min(np.min(lo), np.min(hi))))
            res = inviscid_gap(theta0, system, 8)
            gap_ok &= res["gap"] <= res["bound"] * (1 + 1e-12)
    rows.append(("one-step energy equality", worst_energy < 1e-12, f"max residual {worst_energy:.2e}"))
    rows.append(("H1 sandwich of E_nu", worst_sandwich <= 1e-12, f"worst margin {-worst_sandwich:.2e}"))
    rows.append(("inviscid gap bound", gap_ok, ""))
    return rows


def _verify_lemmas(rng) -> List[tuple]:
    rows = []
    bad = []
    for a in range(-3, 4):
        for b in range(-3, 4):
            for c in range(-3, 4):
                for d in range(-3, 4):
                    if a * d - b * c != 1:
                        continue
                    poly = (1, -(a + d), 1)
                    roots = np.roots([1, -(a + d), 1])
                    try:
                        res = kronecker_classify(poly)
                    except KroneckerViolation:
                        bad.append((a, b, c, d))
                        continue
                    if np.max(np.abs(roots)) <= 1 + 1e-9 and res.kind != "all_roots_of_unity":
                        bad.append((a, b, c, d))
    rows.append(("Kronecker scan of SL2 box [-3,3]", not bad, f"{len(bad)} violations"))
    cat = ToralAutomorphism(((2, 1), (1, 1)))
    nf = verify_norm_form(cat, 200)
    rows.append(
        (
            "nonvanishing integer norm form (r <= 200)",
            nf["integer_form_ok"] and abs(nf["min_product"] - 0.2) < 1e-9,
            f"min product {nf['min_product']:.6f}",
        )
    )
    return rows


def _verify_bounds(rng, report_path: Optional[str] = None) -> List[tuple]:
    rows = []
    # closed form vs bisection for the power law
    nus = np.exp(np.linspace(math.log(1e-8), math.log(1e-2), 20))
    rate = RateFunction.power(1.0, 1.0, 1.0, 1.0)
    profile = BoundProfile("H1", rate)
    worst = 0.0
    for nu in nus:
        h_bis, _ = eval_H(profile, float(nu))
        h_cf = h1_power_closed_form(1.0, 1.0, 1.0, 1.0, float(nu))
        worst = max(worst, abs(h_bis - h_cf) / h_cf)
    rows.append(("H1 power law: closed form vs bisection", worst < 1e-6, f"max rel diff {worst:.2e}"))
    count = lattice_count(2, 1e4)
    weyl = weyl_constant(2, scaling="lattice") * 1e4
    rows.append(
        ("Weyl constant vs direct lattice count", abs(count - weyl) / weyl < 0.01, f"count {count}, asym {weyl:.1f}")
    )
    cat = ToralAutomorphism(((2, 1), (1, 1)))
    if report_path:
        with open(report_path) as fh:
            payload = json.load(fh)
        report = DissipationReport()
        report.entries = payload["entries"]
    else:
        report = dissipation_sweep(cat, np.exp(np.linspace(math.log(1e-4), math.log(1e-2), 5)), "exact")
    env = strong_envelope(cat, 1.0, 1.0, 10)
    fitted = fit_rate(env.n_values[1:], env.values[1:])
    profile = BoundProfile("H1", fitted)
    verdicts = check_bound(report, profile)
    ok = all(v["satisfied"] for v in verdicts)
    rows.append(("discrete strong bound tau_d <= 34/(nu H1)", ok, f"{len(verdicts)} points"))
    return rows


def _verify_decay(rng) -> List[tuple]:
    rows = []
    cat = ToralAutomorphism(((2, 1), (1, 1)))
    conv = SpectralConvention(2, "lattice")
    lam_plus = (3 + math.sqrt(5)) / 2
    energies = operator_norm_energies(cat, 1e-6, 14)
    fit_op = fit_energy_decay(energies, window=(4, 14))
    ok1 = abs(fit_op.gamma_hat - lam_plus) / lam_plus < 0.05
    rows.append(("worst-case decay gamma = lambda_+", ok1, f"gamma_hat {fit_op.gamma_hat:.4f}"))
    theta0 = SpectralField(conv, {(1, 0): 1.0})
    traj = evolve(theta0, PulsedSystem(cat, 1e-6, conv), 14)
    fit_single = fit_energy_decay(traj, window=(4, 14))
    ok2 = abs(fit_single.gamma_hat - lam_plus**2) / lam_plus**2 < 0.05
    rows.append(("single-mode decay gamma = lambda_+^2", ok2, f"gamma_hat {fit_single.gamma_hat:.4f}"))
    chain_ok = True
    for _ in range(10):
        theta0 = random_sparse_field(conv, rng, n_modes=5, kmax=5)
        traj = evolve(theta0, PulsedSystem(cat, 1e-4, conv), 15)
        chain_ok &= check_lower_bound_chain(traj, cat, 1e-4)["ok"]
    rows.append(("double-exponential lower-bound chain", chain_ok, ""))
    return rows


def _verify_cts(rng) -> List[tuple]:
    rows = []
    flow = ShearFlow.sinusoidal()
    conv = SpectralConvention(2, "geometric")
    state = CtsState.from_modes({(1, 0): 1.0, (2, 1): 0.5}, k1_max=8, grid_size=64, nu=1e-2, convention=conv)
    d1 = float(np.sum(energy_identity_defects(state, flow, 1.0, 0.02)))
    d2 = float(np.sum(energy_identity_defects(state, flow, 1.0, 0.01)))
    rows.append(("energy identity defect is O(dt^2)", d1 / max(d2, 1e-300) > 2.5, f"ratio {d1 / d2:.2f}"))
    gap = transport_gap_cts(state, flow, 1e-3, 2.0)
    rows.append(("transport gap bound", gap["gap_sq"] <= gap["bound"], f"{gap['gap_sq']:.3e} <= {gap['bound']:.3e}"))
    return rows


def _cmd_verify(args) -> int:
    rng = np.random.default_rng(args.seed)
    suites = {
        "identities": _verify_identities,
        "lemmas": _verify_lemmas,
        "bounds": lambda r: _verify_bounds(r, args.report),
        "decay": _verify_decay,
        "cts": _verify_cts,
    }
    if args.suite not in suites:
        raise ValueError(f"unknown suite {args.suite!r} (choose from {sorted(suites)})")
    rows = suites[args.suite](rng)
    width = max(len(r[0]) for r in rows) + 2
    failed = 0
    for name, ok, detail in rows:
        status = "pass" if ok else "FAIL"
        failed += 0 if ok else 1
        print(f"{name:<{width}} {status}   {detail}")
    return 0 if failed == 0 else 1


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def _add_common(sub, matrix=True):
    if matrix:
        sub.add_argument("--matrix", required=True, help="row-major integers, e.g. 2,1,1,1")
    sub.add_argument("--convention", default="lattice", choices=["lattice", "geometric"])
    sub.add_argument("--dim", type=int, default=2)
    sub.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="disslab", description=__doc__)
    config_parent = argparse.ArgumentParser(add_help=False)
    config_parent.add_argument("--config", help="JSON file of long options; explicit flags win")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=argparse.ArgumentParser)

    def add_parser(name, **kw):
        return sub.add_parser(name, parents=[config_parent], **kw)

    p = add_parser("simulate", help="pulsed diffusion trajectory")
    _add_common(p)
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--initial", required=True, help="field JSON path or mode:k1,k2")
    p.add_argument("--out", default="trajectory.csv")

    p = add_parser("dissipation-time", help="tau_d over a nu grid")
    _add_common(p)
    p.add_argument("--nu-grid", required=True, help="lo:hi:points (log spaced)")
    p.add_argument("--method", default="exact", choices=["exact", "operator"])
    p.add_argument("--out", default="report.json")

    p = add_parser("mixing-rate", help="strong envelope or weak Cesaro series")
    _add_common(p)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--n-max", type=int, default=12)
    p.add_argument("--mode", default="strong", choices=["strong", "weak"])
    p.add_argument("--out", default="envelope.csv")

    p = add_parser("bounds", help="evaluate H1..H4 and the tau_d bound")
    _add_common(p, matrix=False)
    p.add_argument("--which", required=True, choices=["H1", "H2", "H3", "H4"])
    p.add_argument("--rate", required=True, help="power:c,p | exp:c1,c2 | file:path")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--grad-u", type=float, default=1.0)
    p.add_argument("--vol", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--nu-grid", required=True)
    p.add_argument("--out", default="bounds.csv")

    p = add_parser("cts", help="continuous shear dissipation times")
    p.add_argument("--shear", default="sin", help="sin | coeffs:a1,b1,a2,b2,...")
    p.add_argument("--convention", default="geometric", choices=["lattice", "geometric"])
    p.add_argument("--nu-grid", required=True)
    p.add_argument("--k1max", type=int, default=16)
    p.add_argument("--ygrid", type=int, default=64)
    p.add_argument("--dt", type=float, default=0.02)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="cts.csv")

    p = add_parser("verify", help="run an invariant battery")
    p.add_argument("suite", choices=["identities", "lemmas", "bounds", "decay", "cts"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="check an existing dissipation report (bounds suite)")

    p = add_parser("sweep", help="dissipation-time over a worker pool")
    _add_common(p)
    p.add_argument("--nu-grid", required=True)
    p.add_argument("--method", default="exact", choices=["exact", "operator"])
    p.add_argument("--jobs", type=int, default=None, help="defaults to DISSLAB_JOBS or 1")
    p.add_argument("--out", default="report.json")

    return parser


def _apply_config(args: argparse.Namespace, parser: argparse.ArgumentParser, argv: List[str]):
    if not args.config:
        return args
    with open(args.config) as fh:
        payload = json.load(fh)
    explicit = {a.lstrip("-").split("=")[0].replace("-", "_") for a in argv if a.startswith("--")}
    for key, value in payload.items():
        attr = key.replace("-", "_")
        if attr in explicit or not hasattr(args, attr):
            continue
        setattr(args, attr, value)
    return args


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args = _apply_config(args, parser, argv)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "dissipation-time":
            return _cmd_dissipation_time(args)
        if args.command == "mixing-rate":
            return _cmd_mixing_rate(args)
        if args.command == "bounds":
            return _cmd_bounds(args)
        if args.command == "cts":
            return _cmd_cts(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "sweep":
            jobs = args.jobs or int(os.environ.get("DISSLAB_JOBS", "1"))
            return _cmd_dissipation_time(args, jobs=jobs)
        raise ValueError(f"unknown command {args.command!r}")
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ModeOverflowError, TruncationLeakError, OverflowError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
