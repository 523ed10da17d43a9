"""Repeated-interaction model of the squeezed reservoir.

The mode meets fresh ancilla modes, each prepared in the squeezed thermal
state of the reservoir, at Poisson-distributed times.  Each collision is an
exact beam splitter of angle g tau, after which the ancilla is discarded.
Collisions are treated as instantaneous: tau only enters through the angle,
and the condition rate * tau << 1 is enforced instead of modelled.

Because every ancilla is identical, the system state after k collisions does
not depend on when they happened.  Ensembles therefore compute the chain of
post-collision states once and draw only the collision times per trajectory.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import gaussian as gs
from .output import csv_text
from .params import DomainError, ReservoirSpec

log = logging.getLogger(__name__)

MAX_ANGLE = 0.1
MAX_RATE_TAU = 0.1
R2_MIN = 0.99
TRACE_HEADER = ("collision_index", "t", "n_sys", "var_sq", "var_anti", "dS_ancilla")


class RegimeError(RuntimeError):
    """Ensemble data are not in the weak-coupling, exponential-decay regime."""


@dataclass(frozen=True)
class CollisionConfig:
    g: float
    tau: float
    rate: float
    n_collisions: int
    seed: int
    ancilla: ReservoirSpec

    def __post_init__(self):
        for name in ("g", "tau", "rate"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise DomainError(f"{name} must be positive and finite, got {v}")
        if self.g * self.tau > MAX_ANGLE * (1 + 1e-12):
            raise DomainError(f"g*tau = {self.g * self.tau} exceeds {MAX_ANGLE}")
        if self.rate * self.tau > MAX_RATE_TAU * (1 + 1e-12):
            raise DomainError(f"rate*tau = {self.rate * self.tau} exceeds {MAX_RATE_TAU}")
        if int(self.n_collisions) != self.n_collisions or self.n_collisions < 0:
            raise DomainError(f"n_collisions must be a non-negative integer, got {self.n_collisions}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise DomainError(f"seed must be a non-negative integer, got {self.seed}")

    @property
    def angle(self) -> float:
        return self.g * self.tau

    @property
    def gamma_eff(self) -> float:
        return self.rate * self.angle**2

    @property
    def ensemble_rate(self) -> float:
        """Exact ensemble decay rate rate * sin^2(g tau) of the beam-splitter model."""
        return self.rate * math.sin(self.angle) ** 2

    def with_angle(self, angle: float) -> "CollisionConfig":
        """Same gamma_eff and rate*tau, different collision angle."""
        rate = self.gamma_eff / angle**2
        tau = self.rate * self.tau / rate
        return CollisionConfig(angle / tau, tau, rate, self.n_collisions, self.seed, self.ancilla)


def ancilla_state(cfg: CollisionConfig) -> gs.GaussianState:
    return gs.steady_state(cfg.ancilla)


def collide(system: gs.GaussianState, ancilla: gs.GaussianState, angle: float) -> tuple[gs.GaussianState, gs.GaussianState]:
    """One exact collision; returns the (system, ancilla) marginals afterwards."""
    joint = gs.apply_beam_splitter(gs.tensor(system, ancilla), angle)
    return gs.marginal(joint, 0), gs.marginal(joint, 1)


def _phi_increment(res: ReservoirSpec, before: gs.GaussianState, after: gs.GaussianState) -> float:
    mode = res.mode()
    dE = gs.mean_energy(after, mode) - gs.mean_energy(before, mode)
    dA = gs.asymmetry(after, mode, res.theta) - gs.asymmetry(before, mode, res.theta)
    return res.beta * (math.cosh(2 * res.r) * dE - math.sinh(2 * res.r) * dA)


def _quadrature_variances(state: gs.GaussianState, theta: float) -> tuple[float, float]:
    rot = gs.rotation_matrix(theta / 2)
    c = rot @ state.cov @ rot.T
    return float(c[0, 0]), float(c[1, 1])


@dataclass(frozen=True)
class CollisionRecord:
    index: int
    t: float
    before: gs.GaussianState
    after: gs.GaussianState
    ancilla_before: gs.GaussianState
    ancilla_after: gs.GaussianState
    S_ancilla_before: float
    S_ancilla_after: float
    dPhi: float

    @property
    def dS_ancilla(self) -> float:
        return self.S_ancilla_after - self.S_ancilla_before


@dataclass
class CollisionTrace:
    initial: gs.GaussianState
    cfg: CollisionConfig
    records: list = field(default_factory=list)

    @property
    def final(self) -> gs.GaussianState:
        return self.records[-1].after if self.records else self.initial

    @property
    def sum_dS_R(self) -> float:
        return math.fsum(r.dS_ancilla for r in self.records)

    @property
    def Phi(self) -> float:
        return math.fsum(r.dPhi for r in self.records)

    def rows(self) -> list[tuple]:
        out = []
        theta = self.cfg.ancilla.theta
        for rec in self.records:
            v_sq, v_anti = _quadrature_variances(rec.after, theta)
            out.append((rec.index, rec.t, gs.photon_number(rec.after), v_sq, v_anti, rec.dS_ancilla))
        return out

    def to_csv(self) -> str:
        return csv_text(TRACE_HEADER, self.rows())


def _generator(seed_seq: np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_seq))


def run_collisions(initial: gs.GaussianState, cfg: CollisionConfig) -> CollisionTrace:
    """A single trajectory of ``cfg.n_collisions`` collisions at Poisson times."""
    if initial.n_modes != 1:
        raise ValueError("the system is a single mode")
    rng = _generator(np.random.SeedSequence(cfg.seed))
    times = np.cumsum(rng.exponential(1.0 / cfg.rate, cfg.n_collisions))
    anc = ancilla_state(cfg)
    s_anc = gs.entropy_gaussian(anc)
    trace = CollisionTrace(initial, cfg)
    state = initial
    for k, t in enumerate(times):
        after, anc_after = collide(state, anc, cfg.angle)
        trace.records.append(
            CollisionRecord(
                k, float(t), state, after, anc, anc_after, s_anc, gs.entropy_gaussian(anc_after),
                _phi_increment(cfg.ancilla, state, after),
            )
        )
        state = after
    return trace


@dataclass
class Chain:
    """Observables after k = 0..K collisions, independent of timing."""

    n: np.ndarray
    a2: np.ndarray
    a1: np.ndarray
    RdR: np.ndarray
    energy: np.ndarray
    asymmetry: np.ndarray
    entropy: np.ndarray
    var_sq: np.ndarray
    var_anti: np.ndarray
    dS_ancilla: np.ndarray  # length K, change caused by collision k
    cum_dS_R: np.ndarray  # length K + 1
    Phi: np.ndarray  # length K + 1, exact entropy-flow integral from k = 0
    states: list

    @property
    def length(self) -> int:
        return len(self.n) - 1


def collision_chain(initial: gs.GaussianState, cfg: CollisionConfig, k_max: int) -> Chain:
    anc = ancilla_state(cfg)
    res = cfg.ancilla
    mode = res.mode()
    s_anc = gs.entropy_gaussian(anc)
    states = [initial]
    dS = []
    state = initial
    for _ in range(k_max):
        state, anc_after = collide(state, anc, cfg.angle)
        states.append(state)
        dS.append(gs.entropy_gaussian(anc_after) - s_anc)
    mom = [gs.ladder_moments(s) for s in states]
    R = [gs.jump_operator_moments(s, res.sq) for s in states]
    E = np.array([gs.mean_energy(s, mode) for s in states])
    A = np.array([gs.asymmetry(s, mode, res.theta) for s in states])
    var = np.array([_quadrature_variances(s, res.theta) for s in states]).reshape(-1, 2)
    dS = np.array(dS)
    # running compensated sums so long chains keep full precision
    cum = np.zeros(k_max + 1)
    acc, comp = 0.0, 0.0
    for k, x in enumerate(dS, start=1):
        y = x - comp
        t = acc + y
        comp = (t - acc) - y
        acc = t
        cum[k] = acc
    Phi = res.beta * (math.cosh(2 * res.r) * (E - E[0]) - math.sinh(2 * res.r) * (A - A[0]))
    return Chain(
        n=np.array([m[2] for m in mom]),
        a2=np.array([m[1] for m in mom]),
        a1=np.array([m[0] for m in mom]),
        RdR=np.array([x[2] for x in R]),
        energy=E,
        asymmetry=A,
        entropy=np.array([gs.entropy_gaussian(s) for s in states]),
        var_sq=var[:, 0],
        var_anti=var[:, 1],
        dS_ancilla=dS,
        cum_dS_R=cum,
        Phi=Phi,
        states=states,
    )


def _collision_counts(seed_seq, rate: float, sample_times: np.ndarray) -> np.ndarray:
    """Number of collisions up to each sample time for one trajectory."""
    rng = _generator(seed_seq)
    t_end = float(sample_times[-1])
    mu = rate * t_end
    chunk = int(mu + 10 * math.sqrt(mu) + 16)
    waits = rng.exponential(1.0 / rate, chunk)
    times = np.cumsum(waits)
    while times[-1] <= t_end:
        more = np.cumsum(rng.exponential(1.0 / rate, chunk)) + times[-1]
        times = np.concatenate([times, more])
    return np.searchsorted(times, sample_times, side="right")


@dataclass
class Ensemble:
    cfg: CollisionConfig
    times: np.ndarray
    counts: np.ndarray  # (n_traj, n_samples)
    chain: Chain

    @property
    def n_traj(self) -> int:
        return self.counts.shape[0]

    def per_trajectory(self, name: str) -> np.ndarray:
        return getattr(self.chain, name)[self.counts]

    def mean(self, name: str) -> np.ndarray:
        """Ensemble average at each sample time, with compensated summation."""
        vals = self.per_trajectory(name)

        def col_mean(v):
            return np.array([math.fsum(c) for c in v.T]) / v.shape[0]

        if np.iscomplexobj(vals):
            return col_mean(vals.real) + 1j * col_mean(vals.imag)
        return col_mean(vals)

    def stderr(self, name: str) -> np.ndarray:
        vals = self.per_trajectory(name).real
        return vals.std(axis=0, ddof=1) / math.sqrt(self.n_traj)


def run_ensemble(
    initial: gs.GaussianState,
    cfg: CollisionConfig,
    n_traj: int,
    t_final: float,
    n_samples: int = 51,
    threads: int = 1,
) -> Ensemble:
    """Trajectory ensemble; stream i of the seed sequence drives trajectory i,
    so results do not depend on the thread count."""
    if n_traj < 2:
        raise DomainError("need at least two trajectories")
    if not t_final > 0:
        raise DomainError(f"t_final must be positive, got {t_final}")
    times = np.linspace(0.0, t_final, n_samples)
    seeds = np.random.SeedSequence(cfg.seed).spawn(n_traj)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(lambda s: _collision_counts(s, cfg.rate, times), seeds))
    else:
        rows = [_collision_counts(s, cfg.rate, times) for s in seeds]
    counts = np.array(rows)
    chain = collision_chain(initial, cfg, int(counts.max()))
    return Ensemble(cfg, times, counts, chain)


# ---------------------------------------------------------------- analysis


def fit_decay(times: np.ndarray, deviation: np.ndarray) -> tuple[float, float]:
    """Exponential fit deviation ~ d0 exp(-k t) by least squares on the log;
    returns (k, R^2)."""
    y = deviation / deviation[0]
    if np.any(y <= 0):
        raise RegimeError("deviation changes sign; cannot fit an exponential decay")
    ly = np.log(y)
    slope, icpt = np.polyfit(times, ly, 1)
    resid = ly - (slope * times + icpt)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return float(-slope), float(r2)


def reservoir_entropy_balance(trace) -> dict:
    """Accumulated ancilla entropy change against minus the entropy flow.

    Accepts a single :class:`CollisionTrace` or an :class:`Ensemble` (taken at
    its final sample, with a Monte Carlo standard error).
    """
    if isinstance(trace, CollisionTrace):
        s, mp = trace.sum_dS_R, -trace.Phi
        return {"sum_dSR": s, "minus_Phi": mp, "discrepancy": s - mp, "sigma_mc": 0.0}
    ens: Ensemble = trace
    k = ens.counts[:, -1]
    s_i = ens.chain.cum_dS_R[k]
    mp_i = -ens.chain.Phi[k]
    d_i = s_i - mp_i
    n = len(k)
    return {
        "sum_dSR": math.fsum(s_i) / n,
        "minus_Phi": math.fsum(mp_i) / n,
        "discrepancy": math.fsum(d_i) / n,
        "sigma_mc": float(np.std(d_i, ddof=1) / math.sqrt(n)),
    }


def balance_bound(angle: float, minus_phi: float, sigma_mc: float) -> float:
    return 5 * angle**2 * abs(minus_phi) + 3 * sigma_mc


@dataclass
class LimitPoint:
    angle: float
    rate: float
    gamma: float
    fitted_rate: float
    rel_error: float
    stat_error: float
    r2: float
    predicted_rel_error: float
    balance: dict
    ensemble: Ensemble = field(repr=False)

    @property
    def rate_ok(self) -> bool:
        return abs(self.rel_error) <= 3 * self.angle**2 + 3 * self.stat_error

    @property
    def balance_ok(self) -> bool:
        b = self.balance
        return abs(b["discrepancy"]) <= balance_bound(self.angle, b["minus_Phi"], b["sigma_mc"])

    def as_dict(self) -> dict:
        return {
            "angle": self.angle,
            "rate": self.rate,
            "gamma_eff": self.gamma,
            "fitted_rate": self.fitted_rate,
            "rel_error": self.rel_error,
            "stat_error": self.stat_error,
            "r2": self.r2,
            "predicted_rel_error": self.predicted_rel_error,
            "rate_ok": self.rate_ok,
            "balance_ok": self.balance_ok,
            **self.balance,
        }


@dataclass
class LimitReport:
    points: list

    @property
    def monotone(self) -> bool:
        errs = [abs(p.rel_error) for p in sorted(self.points, key=lambda p: -p.angle)]
        return all(a > b for a, b in zip(errs, errs[1:]))

    @property
    def ok(self) -> bool:
        return self.monotone and all(p.rate_ok and p.balance_ok and p.r2 >= R2_MIN for p in self.points)

    def as_dict(self) -> dict:
        return {"monotone": self.monotone, "ok": self.ok, "points": [p.as_dict() for p in self.points]}


def lindblad_limit_check(
    cfg: CollisionConfig,
    initial: gs.GaussianState,
    angles=(0.1, 0.05, 0.025),
    n_traj: int = 256,
    gamma_t_final: float = 5.0,
    n_samples: int = 51,
    n_batches: int = 16,
    threads: int = 1,
) -> LimitReport:
    """Fit the ensemble decay of <R^dag R> - n_th at fixed gamma_eff for a
    sequence of shrinking collision angles."""
    gamma = cfg.gamma_eff
    n_th = cfg.ancilla.n_th
    points = []
    for angle in angles:
        c = cfg.with_angle(angle)
        ens = run_ensemble(initial, c, n_traj, gamma_t_final / gamma, n_samples, threads)
        dev = ens.per_trajectory("RdR").real - n_th
        k, r2 = fit_decay(ens.times, dev.mean(axis=0))
        if r2 < R2_MIN:
            log.warning("angle %.3g: exponential fit R^2 = %.4f below %.2f", angle, r2, R2_MIN)
        batch_rates = [fit_decay(ens.times, b.mean(axis=0))[0] for b in np.array_split(dev, n_batches)]
        stat = float(np.std(batch_rates, ddof=1) / math.sqrt(n_batches)) / gamma
        points.append(
            LimitPoint(
                angle, c.rate, gamma, k, k / gamma - 1, stat, r2,
                math.sin(angle) ** 2 / angle**2 - 1, reservoir_entropy_balance(ens), ens,
            )
        )
    return LimitReport(points)


def ensemble_summary(ens: Ensemble, fitted_rate: float | None = None) -> dict:
    b = reservoir_entropy_balance(ens)
    return {
        "gamma_eff": ens.cfg.gamma_eff,
        "fitted_rate": fitted_rate,
        "sum_dSR": b["sum_dSR"],
        "minus_Phi": b["minus_Phi"],
        "discrepancy": b["discrepancy"],
        "sigma_mc": b["sigma_mc"],
        "n_traj": ens.n_traj,
        "seed": ens.cfg.seed,
    }
