"""Compare the Fock and Gaussian ledgers for random squeezed thermal states.

States that need more Fock levels than --dim-cap are reported and skipped.

    python3 scripts/backend_comparison.py --n-states 10 --dim-cap 80
"""

import argparse
import math
import time

import numpy as np

from sqthermo import fock as fk
from sqthermo import gaussian as gs
from sqthermo import thermo as th
from sqthermo.params import ReservoirSpec, SqueezeParams


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-states", type=int, default=10)
    ap.add_argument("--r-max", type=float, default=1.0)
    ap.add_argument("--n-max", type=float, default=2.0)
    ap.add_argument("--dim-cap", type=int, default=80)
    ap.add_argument("--gamma-t", type=float, default=5.0)
    ap.add_argument("--seed", type=int, default=6)
    args = ap.parse_args()

    res = ReservoirSpec(1.0, 1.0, SqueezeParams(0.5, 0.7), 1.0)
    rng = np.random.default_rng(args.seed)
    pi_dim = fk.minimal_dim(gs.steady_state(res))
    times = th.time_grid(args.gamma_t / res.gamma, 26)
    print(f"{'n_th':>6} {'r':>6} {'dim':>5} {'max dS':>9} {'max dSigma':>11} {'max dD':>9} {'sec':>6}")
    for _ in range(args.n_states):
        n, r = rng.uniform(0, args.n_max), rng.uniform(0, args.r_max)
        s = gs.apply_squeeze(gs.thermal_from_occupation(n), SqueezeParams(r, rng.uniform(0, 2 * math.pi)))
        try:
            dim = max(pi_dim, fk.minimal_dim(s, cap=args.dim_cap))
        except fk.TruncationError as exc:
            print(f"{n:6.3f} {r:6.3f} needs dim {exc.required_dim} > {args.dim_cap}, skipped")
            continue
        t0 = time.perf_counter()
        g = th.gaussian_ledger(s, res, times)
        f = th.fock_ledger(fk.gaussian_to_fock(s, dim), res, times).ledger
        dS = np.max(np.abs(g.S - f.S))
        dSigma = np.max(np.abs(g.Sigma - f.Sigma))
        dD = np.max(np.abs(f.Sigma - (f.D[0] - f.D)))
        print(f"{n:6.3f} {r:6.3f} {dim:5d} {dS:9.1e} {dSigma:11.1e} {dD:9.1e} {time.perf_counter() - t0:6.1f}")


if __name__ == "__main__":
    main()
