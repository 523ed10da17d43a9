"""End-to-end acceptance checks at their stated tolerances.

Each check records a one-line PASS/FAIL verdict that is printed in the
terminal summary (see conftest.py), then asserts it.
"""

import math
import os
import time

import numpy as np
import pytest

from sqthermo import collisional as co
from sqthermo import fock as fk
from sqthermo import gaussian as gs
from sqthermo import otto as ot
from sqthermo import thermo as th
from sqthermo.params import ReservoirSpec, SqueezeParams

from conftest import record_verdict

BETA1, BETA2 = 1.0, 0.2
GRID_W2 = np.linspace(1.0, 8.0, 200)
GRID_R = np.linspace(0.0, 1.5, 200)


def verdict(n, title, ok, detail):
    record_verdict(n, title, bool(ok), detail)
    assert ok, f"[{n}] {title}: {detail}"


@pytest.fixture(scope="module")
def grid():
    t0 = time.perf_counter()
    pd = ot.phase_diagram(BETA1, BETA2, GRID_W2, GRID_R)
    return pd, time.perf_counter() - t0


def test_first_law_on_grid(grid):
    pd, elapsed = grid
    f = pd.fields
    resid = float(np.max(np.abs(f["W_out"] - f["Q_BC"] - f["Q_DA"])))
    verdict(1, "first law on 200x200 grid", resid <= 1e-12 and elapsed < 5,
            f"max residual {resid:.2e}, {elapsed:.2f} s")


def test_second_law_on_grid(grid):
    pd, elapsed = grid
    sigma = pd.fields["Sigma_cyc"]
    lo = float(np.min(sigma))
    i5 = np.searchsorted(GRID_W2, 5.0)
    cell = {(i, 0) for i in (i5 - 1, i5)}
    small = {tuple(ix) for ix in np.argwhere(sigma < 1e-6)}
    exact = float(ot.analyze_cycle(ot.CycleParams(BETA1, BETA2, 1.0, 5.0)).Sigma_cyc)
    ok = lo >= -1e-12 and small <= cell and abs(exact) <= 1e-12 and elapsed < 5
    verdict(2, "second law on grid", ok,
            f"min Sigma {lo:.2e}, {len(small)} grid points below 1e-6 (allowed only next to omega2=5, r=0), "
            f"Sigma(5, 0) = {exact:.1e}")


def test_carnot_values():
    eta_c = ot.CycleParams(BETA1, BETA2, 1.0, 3.0).eta_c
    worst = 0.0
    for w2 in np.linspace(1.0, 5.0, 22)[1:-1]:
        b = ot.region_boundaries(BETA1, BETA2, 1.0, float(w2))
        rep = ot.analyze_cycle(ot.CycleParams(BETA1, BETA2, 1.0, float(w2), SqueezeParams(b.r_c)))
        worst = max(worst, abs(rep.eta - rep.eta_c))
    ok = abs(eta_c - 0.8) <= 1e-15 and worst <= 1e-10
    verdict(3, "Carnot values", ok, f"eta_c = {eta_c!r}, max |eta(r_c) - eta_c| = {worst:.2e} over 20 omega2")


def test_unit_efficiency_and_carnot_beating_regimes(grid):
    pd, _ = grid
    band = (pd.omega2 > 5.0) & (pd.omega2 < 8.0)
    codes = pd.codes[band]
    n3, n4 = int(np.sum(codes == 3)), int(np.sum(codes == 4))
    eta4 = pd.eta[pd.codes == 4]
    ok = n3 > 0 and n4 > 0 and np.all(eta4 == 1.0)
    verdict(4, "regions III and IV present", ok, f"{n3} region-III cells, {n4} region-IV cells, eta = 1 throughout IV")


def test_numeric_cycle_matches_closed_form():
    rng = np.random.default_rng(5)
    pts = []
    for _ in range(50):
        b1 = rng.uniform(0.2, 5.0)
        b2 = b1 * rng.uniform(0.05, 1.0)
        w1 = rng.uniform(0.5, 2.0)
        pts.append(ot.CycleParams(b1, b2, w1, w1 * rng.uniform(1.0, 10.0),
                                  SqueezeParams(rng.uniform(0, 1.5), rng.uniform(0, 2 * math.pi))))
    t0 = time.perf_counter()
    worst = max(ot.report_deviation(ot.verify_cycle_numeric(p), ot.analyze_cycle(p)) for p in pts)
    elapsed = time.perf_counter() - t0
    verdict(5, "numeric cycle vs closed form", worst <= 1e-10 and elapsed < 1,
            f"max field deviation {worst:.2e} over 50 points, {elapsed:.2f} s")


def test_backend_equivalence():
    res = ReservoirSpec(1.0, 1.0, SqueezeParams(0.5, 0.7), 1.0)
    rng = np.random.default_rng(6)
    states = [
        gs.apply_squeeze(gs.thermal_from_occupation(rng.uniform(0, 2)),
                         SqueezeParams(rng.uniform(0, 1), rng.uniform(0, 2 * math.pi)))
        for _ in range(20)
    ]
    t0 = time.perf_counter()
    pi_dim = fk.minimal_dim(gs.steady_state(res))
    need = []
    for s in states:
        try:
            need.append(max(pi_dim, fk.minimal_dim(s, cap=80)))
        except fk.TruncationError as exc:
            need.append(exc.required_dim)
    fits = [i for i, d in enumerate(need) if d <= 80]
    dim = max(need[i] for i in fits)
    times = [0.0, 0.1, 0.5, 1.0, 2.0, 5.0]
    traj = fk.propagate_many([fk.gaussian_to_fock(states[i], dim) for i in fits],
                             fk.build_generator(dim, res), times)
    worst, monotone = 0.0, True
    for j, i in enumerate(fits):
        for t, sample in zip(times[1:], traj.states[1:]):
            ref = gs.ladder_moments(gs.relax_moments_analytic(states[i], res, t))
            worst = max(worst, max(abs(a - b) for a, b in zip(fk.ladder_moments(sample[j]), ref)))
        D = [fk.relative_entropy_to_steady(sample[j], res) for sample in traj.states]
        monotone &= bool(np.all(np.diff(D) <= 0))
    elapsed = time.perf_counter() - t0
    missing = len(states) - len(fits)
    ok = missing == 0 and worst <= 1e-6 and monotone and elapsed < 60
    verdict(6, "Fock vs Gaussian moments", ok,
            f"{len(fits)}/20 states representable at dim <= 80 (others need dim up to {max(need)}), "
            f"max moment deviation {worst:.2e}, D non-increasing: {monotone}, {elapsed:.1f} s")


def test_illustrative_relaxation():
    res = ReservoirSpec(1.0, 1.0, SqueezeParams(0.5, 0.0), 1.0)
    t0 = time.perf_counter()
    dim = fk.minimal_dim(gs.steady_state(res))
    rho0 = fk.diagonal_part(fk.steady_state_fock(dim, res))
    s = th.fock_ledger(rho0, res, th.time_grid(5.0, 51)).ledger.summary()
    elapsed = time.perf_counter() - t0
    sigma = s["Delta_S"] - s["Delta_Phi"]
    ok = abs(s["Q"]) <= 1e-8 and s["Delta_Phi"] < 0 and s["Delta_S"] < 0 and sigma > 0 and elapsed < 10
    verdict(7, "illustrative relaxation signs", ok,
            f"Q = {s['Q']:.1e}, Delta_Phi = {s['Delta_Phi']:.4f}, Delta_S = {s['Delta_S']:.4f}, "
            f"Sigma = {sigma:.4f}, {elapsed:.1f} s")


def test_single_reservoir_work():
    t0 = time.perf_counter()
    res = ReservoirSpec(1.0, 1.0, SqueezeParams(0.5, 0.3))
    wmax = th.max_extractable_work(res).W_max
    proto = th.two_stroke_protocol(res, res.sq.inverse()).W_out
    zero = th.max_extractable_work(ReservoirSpec(1.0, 1.0, SqueezeParams(0.0))).W_max
    rng = np.random.default_rng(8)
    slack = math.inf
    for _ in range(200):
        r = ReservoirSpec(rng.uniform(0.2, 5), rng.uniform(0.5, 2), SqueezeParams(rng.uniform(0, 1.2), rng.uniform(0, 6.3)))
        out = th.two_stroke_protocol(r, th.random_gaussian_unitary(rng))
        slack = min(slack, out.bound - out.W_out)
    elapsed = time.perf_counter() - t0
    ok = abs(wmax - proto) <= 1e-12 and zero == 0.0 and slack >= -th.BOUND_TOL and elapsed < 2
    verdict(8, "single-reservoir work", ok,
            f"|W_max - protocol| = {abs(wmax - proto):.1e}, W_max(r=0) = {zero}, "
            f"min bound slack {slack:.2e} over 200 unitaries")


def test_fig2_structure():
    w2 = np.linspace(1.0, 8.0, 351)
    header, rows = ot.fig2_rows(BETA1, BETA2, 1.0, w2)
    W = np.array([row[1:] for row in rows])
    increasing = bool(np.all(np.diff(W, axis=1) > 0))
    zero_start = W[0, 0] == 0.0
    negative_beyond = bool(np.all(W[w2 > 5.0 + 1e-12, 0] < 0))
    hb1, hb2 = 0.02, 0.004
    errs = []
    for r in ot.FIG2_R:
        p = ot.CycleParams(hb1, hb2, 1.0, 1.0, SqueezeParams(r))
        errs.append(ot.numeric_max_power_frequency(p) / ot.max_power_frequency_ht(p) - 1)
    argmax_ok = all(abs(e) <= 0.02 for e in errs)
    ok = increasing and zero_start and negative_beyond and argmax_ok
    verdict(9, "work curves structure", ok,
            f"ordered in r: {increasing}, zero at omega1: {zero_start}, negative past 5: {negative_beyond}, "
            "high-T argmax relative errors "
            + ", ".join(f"r={r:g}: {e:+.3f}" for r, e in zip(ot.FIG2_R, errs)))


def test_fig4_reproduction():
    header, rows = ot.fig4_rows(BETA1, BETA2, 1.0, 3.0, np.linspace(0, 1.2, 241))
    bounded = all(eta <= emax + 1e-12 for _, eta, emax, _, _ in rows)
    beats_ht = any(eta > eht for _, eta, _, _, eht in rows)
    rep = ot.analyze_cycle(ot.CycleParams(BETA1, BETA2, 1.0, 3.0, SqueezeParams(1e-6)))
    gap = abs(rep.eta_max - rep.eta_c)
    ok = bounded and beats_ht and gap <= 1e-9
    verdict(10, "efficiency versus squeezing", ok,
            f"eta <= eta_max: {bounded}, some eta > eta_ht: {beats_ht}, |eta_max(1e-6) - eta_c| = {gap:.1e}")


def test_collisional_limit():
    threads = min(8, os.cpu_count() or 1)
    ancilla = ReservoirSpec(1.0, 1.0, SqueezeParams(0.5, 0.0))
    cfg = co.CollisionConfig(1.0, 0.1, 1.0, 0, 2024, ancilla)
    t0 = time.perf_counter()
    rep = co.lindblad_limit_check(cfg, gs.vacuum(), (0.1, 0.05, 0.025), n_traj=65536, threads=threads)
    elapsed = time.perf_counter() - t0
    parts = [
        f"x={p.angle:g}: rel {p.rel_error:+.2e} (allowed {3 * p.angle**2 + 3 * p.stat_error:.1e}), "
        f"balance {p.balance['discrepancy']:+.1e}"
        for p in rep.points
    ]
    ok = abs(cfg.gamma_eff - 0.01) < 1e-15 and rep.ok and elapsed < 120
    verdict(11, "collisional Lindblad limit", ok,
            f"monotone: {rep.monotone}; " + "; ".join(parts) + f"; {elapsed:.0f} s")


def test_free_energy_bound(grid):
    pd, _ = grid
    gaps = np.empty_like(pd.fields["W_out"])
    for i, w in enumerate(GRID_W2):
        for j, r in enumerate(GRID_R):
            gaps[i, j] = ot.free_energy_decomposition(ot.CycleParams(BETA1, BETA2, 1.0, float(w), SqueezeParams(float(r)))).gap
    lo = float(np.min(gaps))
    i5 = np.searchsorted(GRID_W2, 5.0)
    cell = {(i, 0) for i in (i5 - 1, i5)}
    tight = {tuple(ix) for ix in np.argwhere(gaps < 1e-10)}
    exact = ot.free_energy_decomposition(ot.CycleParams(BETA1, BETA2, 1.0, 5.0)).gap
    ok = lo >= -1e-12 and tight <= cell and abs(exact) <= 1e-12
    verdict(12, "free-energy bound", ok,
            f"min gap {lo:.2e}, {len(tight)} grid points tight, gap at (5, 0) = {exact:.1e}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
