"""Command-line front end.

Every command validates its whole configuration first, computes all outputs in
memory and only then writes files, so a failed run leaves nothing behind.
Exit status: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import collisional as co
from . import fock as fk
from . import gaussian as gs
from . import otto as ot
from . import thermo as th
from .config import COMMANDS, ConfigError, load_config, to_dict
from .output import json_text, table_text, write_text
from .params import ConsistencyError, DomainError, SqueezeParams

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
NUMERICAL_ERRORS = (
    fk.TruncationError,
    gs.UnphysicalStateError,
    ConsistencyError,
    co.RegimeError,
    FloatingPointError,
    np.linalg.LinAlgError,
)

log = logging.getLogger("sqthermo")


def _ext(cfg) -> str:
    return cfg.format


# ---------------------------------------------------------------- relax


def _fock_initial(cfg, res, dim: int) -> fk.FockDensityMatrix:
    kind = cfg.initial.kind
    if kind == "fock":
        return fk.basis_state(dim, cfg.initial.n)
    if kind == "illustrative":
        return fk.diagonal_part(fk.steady_state_fock(dim, res))
    return fk.gaussian_to_fock(cfg.initial.gaussian(), dim)


def _relax_dim(cfg, res) -> int:
    if cfg.dim is not None:
        return cfg.dim
    dim = fk.default_dim(res.N, abs(res.M))
    init = cfg.initial.gaussian()
    if init is not None:
        dim = max(dim, fk.minimal_dim(init))
    if cfg.initial.kind == "fock":
        dim = max(dim, cfg.initial.n + fk.default_dim(res.N, abs(res.M)))
    if cfg.initial.kind == "illustrative":
        dim = max(dim, fk.steady_state_dim(res))
    return dim


def cmd_relax(cfg) -> dict:
    res = cfg.reservoir.spec()
    times = th.time_grid(cfg.t_final / res.gamma, cfg.n_samples)
    dim = _relax_dim(cfg, res)
    rho0 = _fock_initial(cfg, res, dim)
    run = th.fock_ledger(rho0, res, times, dt_max=cfg.dt_max or math.inf)
    fock_ledger = run.ledger
    files = {
        f"ledger_fock.{_ext(cfg)}": table_text(th.LEDGER_HEADER, fock_ledger.rows(), cfg.format),
        f"trajectory_fock.{_ext(cfg)}": table_text(fk.TRAJECTORY_HEADER, run.trajectory.rows(res), cfg.format),
    }
    summary = {
        "dim": dim,
        "fock": fock_ledger.summary(),
        "fock_checks": fock_ledger.check(),
        "max_trace_drift": run.trajectory.max_trace_drift,
        "max_herm_drift": run.trajectory.max_herm_drift,
        "Phi_minus_beta_Q": float(np.max(np.abs(fock_ledger.Phi - res.beta * fock_ledger.Q))),
        "D_nonincreasing": bool(np.all(np.diff(fock_ledger.D) <= 1e-10)),
    }
    f = summary["fock"]
    summary["flags"] = {
        "Delta_Phi_negative": f["Delta_Phi"] < 0,
        "Delta_S_negative": f["Delta_S"] < 0,
        "Sigma_positive": f["Sigma"] > 0,
    }
    init = cfg.initial.gaussian()
    if init is not None:
        g = th.gaussian_ledger(init, res, times)
        files[f"ledger_gaussian.{_ext(cfg)}"] = table_text(th.LEDGER_HEADER, g.rows(), cfg.format)
        moment_dev = 0.0
        for t, (rho,) in zip(times, run.trajectory.states):
            ref = gs.ladder_moments(gs.relax_moments_analytic(init, res, float(t)))
            moment_dev = max(moment_dev, max(abs(a - b) for a, b in zip(fk.ladder_moments(rho), ref)))
        summary["gaussian"] = g.summary()
        summary["cross_backend"] = {
            "max_moment_deviation": moment_dev,
            **{f"max_{k}_deviation": float(np.max(np.abs(getattr(g, k) - getattr(fock_ledger, k))))
               for k in ("S", "Q", "A", "Phi", "Sigma")},
        }
    else:
        summary["gaussian"] = None
    files["summary.json"] = json_text(summary)
    return files


# ---------------------------------------------------------------- cycle


def cmd_cycle(cfg) -> dict:
    p = cfg.params()
    report = ot.analyze_cycle(p)
    numeric = ot.verify_cycle_numeric(p)
    out = {
        "report": report.to_dict(),
        "numeric_deviation": ot.report_deviation(report, numeric),
        "free_energy": ot.free_energy_decomposition(p).to_dict(),
        "max_power_frequency_ht": ot.max_power_frequency_ht(p),
    }
    if cfg.fock_dim is not None:
        out["fock_stroke_deviation"] = ot.fock_stroke_check(p, cfg.fock_dim)
    return {"cycle.json": json_text(out)}


def _phase_table(beta1, beta2, omega1, w2, r, fmt_name):
    pd = ot.phase_diagram(beta1, beta2, w2, r, omega1)
    return table_text(ot.PhaseDiagram.HEADER, pd.rows(), fmt_name)


def cmd_phase_diagram(cfg) -> dict:
    w2 = np.linspace(cfg.omega2_min, cfg.omega2_max, cfg.n_omega2)
    r = np.linspace(cfg.r_min, cfg.r_max, cfg.n_r)
    return {f"phase_diagram.{_ext(cfg)}": _phase_table(cfg.beta1, cfg.beta2, cfg.omega1, w2, r, cfg.format)}


def cmd_figures(cfg) -> dict:
    w2 = np.linspace(cfg.omega1, cfg.fig2_omega2_max, cfg.fig2_points)
    h2, rows2 = ot.fig2_rows(cfg.beta1, cfg.beta2, cfg.omega1, w2)
    grid_w = np.linspace(cfg.omega1, 8.0 * cfg.omega1, cfg.fig3_points)
    grid_r = np.linspace(0.0, 1.5, cfg.fig3_points)
    h4, rows4 = ot.fig4_rows(cfg.beta1, cfg.beta2, cfg.omega1, cfg.fig4_omega2, np.linspace(0, 1.2, cfg.fig4_points))
    return {
        f"fig2.{_ext(cfg)}": table_text(h2, rows2, cfg.format),
        f"fig3.{_ext(cfg)}": _phase_table(cfg.beta1, cfg.beta2, cfg.omega1, grid_w, grid_r, cfg.format),
        f"fig4.{_ext(cfg)}": table_text(h4, rows4, cfg.format),
    }


# ---------------------------------------------------------------- collisions


def cmd_collide(cfg) -> dict:
    ccfg = cfg.collision_config()
    init = cfg.initial.gaussian()
    trace = co.run_collisions(init, ccfg)
    ens = co.run_ensemble(init, ccfg, cfg.n_traj, cfg.gamma_t_final / ccfg.gamma_eff, cfg.n_samples, cfg.threads)
    dev = ens.mean("RdR").real - ccfg.ancilla.n_th
    try:
        fitted, r2 = co.fit_decay(ens.times, dev)
    except co.RegimeError:
        fitted, r2 = None, None
    summary = co.ensemble_summary(ens, fitted)
    summary["fit_r2"] = r2
    summary["single_trace_balance"] = co.reservoir_entropy_balance(trace)
    if cfg.limit_check:
        summary["limit_check"] = co.lindblad_limit_check(
            ccfg, init, tuple(cfg.angles), cfg.n_traj, cfg.gamma_t_final, cfg.n_samples, threads=cfg.threads
        ).as_dict()
    return {f"trace.{_ext(cfg)}": table_text(co.TRACE_HEADER, trace.rows(), cfg.format), "summary.json": json_text(summary)}


# ---------------------------------------------------------------- single reservoir


def cmd_single_reservoir(cfg) -> dict:
    res = cfg.reservoir.spec()
    u = cfg.unitary
    if u.unsqueeze:
        unitary = th.GaussianUnitary(res.sq.inverse())
    else:
        unitary = th.GaussianUnitary(SqueezeParams(u.r, u.theta), u.phase, complex(u.alpha_re, u.alpha_im))
    result = th.two_stroke_protocol(res, unitary)
    best = th.max_extractable_work(res)
    start = unitary.apply(gs.steady_state(res))
    ledger = th.gaussian_ledger(start, res, th.time_grid(cfg.t_final / res.gamma, cfg.n_samples))
    summary = {
        **result.as_dict(),
        "W_max": best.W_max,
        "Sigma_max": best.Sigma,
        "unitary": unitary.to_dict(),
        "relaxation": ledger.summary(),
    }
    return {f"relaxation_ledger.{_ext(cfg)}": table_text(th.LEDGER_HEADER, ledger.rows(), cfg.format),
            "summary.json": json_text(summary)}


HANDLERS = {
    "relax": cmd_relax,
    "cycle": cmd_cycle,
    "phase-diagram": cmd_phase_diagram,
    "figures": cmd_figures,
    "collide": cmd_collide,
    "single-reservoir": cmd_single_reservoir,
}


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sqthermo", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--threads", type=int)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    overrides = {"out": args.out, "seed": args.seed, "format": args.format, "threads": args.threads}
    try:
        cfg = load_config(args.command, args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        files = HANDLERS[args.command](cfg)
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    files["config.json"] = json_text(to_dict(cfg))
    out = Path(cfg.out)
    for name, text in sorted(files.items()):
        write_text(out / name, text)
    print(f"wrote {len(files)} file(s) to {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
