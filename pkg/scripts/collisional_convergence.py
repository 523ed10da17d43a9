"""Fitted relaxation rate of the collisional model against the Lindblad rate
for shrinking collision angles at fixed gamma_eff.

    python3 scripts/collisional_convergence.py --n-traj 65536 --threads 4
"""

import argparse
import time

from sqthermo import collisional as co
from sqthermo import gaussian as gs
from sqthermo.params import ReservoirSpec, SqueezeParams


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--r", type=float, default=0.5)
    ap.add_argument("--beta", type=float, default=1.0)
    ap.add_argument("--angles", type=float, nargs="+", default=[0.1, 0.05, 0.025])
    ap.add_argument("--n-traj", type=int, default=4096)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()

    ancilla = ReservoirSpec(args.beta, 1.0, SqueezeParams(args.r))
    cfg = co.CollisionConfig(1.0, 0.1, 1.0, 0, args.seed, ancilla)
    t0 = time.perf_counter()
    rep = co.lindblad_limit_check(cfg, gs.vacuum(), tuple(args.angles), n_traj=args.n_traj, threads=args.threads)
    print(f"gamma_eff = {cfg.gamma_eff:g}, {args.n_traj} trajectories, {time.perf_counter() - t0:.1f} s")
    print(f"{'angle':>8} {'rel_error':>11} {'predicted':>11} {'stat':>9} {'R^2':>8} {'balance':>11} {'bound':>9}")
    for p in rep.points:
        b = p.balance
        bound = co.balance_bound(p.angle, b["minus_Phi"], b["sigma_mc"])
        print(
            f"{p.angle:8.4f} {p.rel_error:+11.3e} {p.predicted_rel_error:+11.3e} {p.stat_error:9.1e} "
            f"{p.r2:8.5f} {b['discrepancy']:+11.3e} {bound:9.1e}"
        )
    print(f"monotone: {rep.monotone}, all checks ok: {rep.ok}")


if __name__ == "__main__":
    main()
