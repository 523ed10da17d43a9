"""Heat, asymmetry flux, entropy flow and entropy production.

The entropy flow rate from a squeezed reservoir is
Phi' = beta (cosh 2r Q' - sinh 2r A'), and the entropy production rate is
Sigma' = S' - Phi' = -dD(rho || pi_S)/dt >= 0.  The house-keeping part of the
entropy production vanishes for this reservoir, so only the excess part is
tracked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_simpson

from . import fock as fk
from . import gaussian as gs
from .output import csv_text
from .params import ConsistencyError, DomainError, ReservoirSpec, SqueezeParams

# tolerance on the work bound and on the second law along sampled trajectories
BOUND_TOL = 1e-9
SECOND_LAW_TOL = 1e-9
LEDGER_HEADER = ("t", "S", "Q", "A", "Phi", "Sigma")


@dataclass(frozen=True)
class Rates:
    Sdot: float
    Qdot: float
    Adot: float
    Phidot: float
    Sigmadot: float

    def __post_init__(self):
        for k in self.__dataclass_fields__:
            object.__setattr__(self, k, float(getattr(self, k)))

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("Sdot", "Qdot", "Adot", "Phidot", "Sigmadot")}


def entropy_flow_rate(res: ReservoirSpec, Qdot: float, Adot: float) -> float:
    r2 = 2 * res.r
    return res.beta * (math.cosh(r2) * Qdot - math.sinh(r2) * Adot)


def _moment_observables(m2: np.ndarray, omega: float, theta: float) -> tuple[float, float]:
    """(energy, asymmetry) as linear functionals of the second-moment matrix."""
    rot = gs.rotation_matrix(theta / 2)
    q = rot @ m2 @ rot.T
    return omega * 0.5 * np.trace(m2), 0.5 * omega * (q[1, 1] - q[0, 0])


def gaussian_rates(state: gs.GaussianState, res: ReservoirSpec) -> Rates:
    """Instantaneous rates for a single-mode Gaussian state, all in closed form."""
    dmean, dcov = gs.covariance_rate(state, res)
    dm2 = dcov + np.outer(dmean, state.mean) + np.outer(state.mean, dmean)
    Qdot, Adot = _moment_observables(dm2, res.omega, res.theta)
    nu = gs.symplectic_eigenvalues(state)[0]
    dnu = 0.5 * nu * float(np.trace(np.linalg.solve(state.cov, dcov)))
    if abs(dnu) < 1e-300:
        Sdot = 0.0
    else:
        Sdot = gs.entropy_derivative(nu) * dnu
    Phidot = entropy_flow_rate(res, Qdot, Adot)
    return Rates(Sdot, Qdot, Adot, Phidot, Sdot - Phidot)


def _entropy_after(gen: fk.LindbladGenerator, rho: np.ndarray, h: float) -> float:
    return fk.von_neumann_entropy(fk.rk4_step(gen, rho, h))


def fock_entropy_rate(gen: fk.LindbladGenerator, rho: np.ndarray, h: float, one_sided: bool = False) -> float:
    """Entropy derivative by second-order finite differences of RK4 substeps."""
    s0 = fk.von_neumann_entropy(rho)
    if one_sided:
        s1 = _entropy_after(gen, rho, h)
        s2 = _entropy_after(gen, fk.rk4_step(gen, rho, h), h)
        return (-3 * s0 + 4 * s1 - s2) / (2 * h)
    return (_entropy_after(gen, rho, h) - _entropy_after(gen, rho, -h)) / (2 * h)


def default_fd_step(gen: fk.LindbladGenerator) -> float:
    return min(gen.max_step(), 1e-3 / gen.res.gamma)


def fock_rates(rho, gen: fk.LindbladGenerator, h: float | None = None, one_sided: bool = False) -> Rates:
    data = rho.data if isinstance(rho, fk.FockDensityMatrix) else rho
    res = gen.res
    drho = gen(data)
    _, a2dot, ndot = fk.ladder_moments(drho)
    Qdot = res.omega * ndot
    Adot = -res.omega * (complex(math.cos(res.theta), -math.sin(res.theta)) * a2dot).real
    Sdot = fock_entropy_rate(gen, data, h or default_fd_step(gen), one_sided)
    Phidot = entropy_flow_rate(res, Qdot, Adot)
    return Rates(Sdot, Qdot, Adot, Phidot, Sdot - Phidot)


def rates(rho_or_state, res: ReservoirSpec, gen: fk.LindbladGenerator | None = None, h: float | None = None) -> Rates:
    """Rates for either backend; Fock states use ``gen`` (built on demand)."""
    if isinstance(rho_or_state, gs.GaussianState):
        return gaussian_rates(rho_or_state, res)
    data = rho_or_state.data if isinstance(rho_or_state, fk.FockDensityMatrix) else np.asarray(rho_or_state)
    if gen is None:
        gen = fk.build_generator(data.shape[0], res)
    elif gen.res != res:
        raise ValueError("generator was built for a different reservoir")
    return fock_rates(data, gen, h)


def _energy_asymmetry(rho_or_state, res: ReservoirSpec) -> tuple[float, float]:
    mode = res.mode()
    if isinstance(rho_or_state, gs.GaussianState):
        return gs.mean_energy(rho_or_state, mode), gs.asymmetry(rho_or_state, mode, res.theta)
    return fk.energy(rho_or_state, mode), fk.asymmetry(rho_or_state, mode, res.theta)


def closed_form_fluxes(rho_or_state, res: ReservoirSpec) -> dict:
    """Heat and asymmetry fluxes from exponential relaxation towards pi_S."""
    U, A = _energy_asymmetry(rho_or_state, res)
    return {
        "Qdot": -res.gamma * (U - res.omega * res.N),
        "Adot": -res.gamma * (A - res.omega * abs(res.M)),
    }


# ---------------------------------------------------------------- ledgers


def time_grid(t_final: float, n_samples: int = 201) -> np.ndarray:
    if not t_final >= 0:
        raise DomainError(f"t_final must be >= 0, got {t_final}")
    if n_samples < 2:
        raise DomainError("need at least two samples")
    return np.linspace(0.0, t_final, n_samples)


def integrate(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Cumulative Simpson integral starting from zero."""
    return cumulative_simpson(np.asarray(values, float), x=np.asarray(times, float), initial=0.0)


@dataclass
class ThermoLedger:
    """Thermodynamic time series of one relaxation.

    Q, Phi and Sigma are cumulative from the first sample.  Because no work is
    done while the mode relaxes, Q is the energy change and Phi, Sigma follow
    exactly from state functions; the rate arrays let callers cross-check
    these against quadrature.
    """

    times: np.ndarray
    S: np.ndarray
    Q: np.ndarray
    A: np.ndarray
    Phi: np.ndarray
    Sigma: np.ndarray
    rates: dict = field(default_factory=dict)
    D: np.ndarray | None = None
    backend: str = ""

    def rows(self) -> list[tuple]:
        return list(zip(self.times, self.S, self.Q, self.A, self.Phi, self.Sigma))

    def to_csv(self) -> str:
        return csv_text(LEDGER_HEADER, self.rows())

    def quadrature(self, name: str) -> np.ndarray:
        return integrate(self.times, self.rates[name])

    def sigma_from_rates(self) -> np.ndarray:
        return self.quadrature("Sigmadot")

    def check(self, tol: float = SECOND_LAW_TOL) -> dict:
        """Largest violations of the ledger invariants."""
        out = {
            "sigma_decrease": float(max(0.0, -np.min(np.diff(self.Sigma)))) if len(self.Sigma) > 1 else 0.0,
            "balance": float(np.max(np.abs(self.Sigma - (self.S - self.S[0]) + self.Phi))),
        }
        if "Sigmadot" in self.rates:
            out["min_sigmadot"] = float(np.min(self.rates["Sigmadot"]))
        out["ok"] = out["sigma_decrease"] <= tol and out["balance"] <= tol and out.get("min_sigmadot", 0.0) >= -tol
        return out

    def summary(self) -> dict:
        return {
            "backend": self.backend,
            "t_final": float(self.times[-1]),
            "Delta_S": float(self.S[-1] - self.S[0]),
            "Q": float(self.Q[-1]),
            "Delta_A": float(self.A[-1] - self.A[0]),
            "Delta_Phi": float(self.Phi[-1]),
            "Sigma": float(self.Sigma[-1]),
        }


def _assemble(times, S, U, A, res: ReservoirSpec, rate_list: Sequence[Rates], backend: str, D=None) -> ThermoLedger:
    S, U, A = (np.asarray(v, float) for v in (S, U, A))
    Q = U - U[0]
    Phi = res.beta * (math.cosh(2 * res.r) * Q - math.sinh(2 * res.r) * (A - A[0]))
    Sigma = (S - S[0]) - Phi
    rate_arrays = {k: np.array([getattr(r, k) for r in rate_list]) for k in Rates.__dataclass_fields__}
    return ThermoLedger(np.asarray(times, float), S, Q, A, Phi, Sigma, rate_arrays, D, backend)


def gaussian_ledger(initial: gs.GaussianState, res: ReservoirSpec, times: Sequence[float]) -> ThermoLedger:
    mode = res.mode()
    states = [gs.relax_moments_analytic(initial, res, float(t)) for t in times]
    return _assemble(
        times,
        [gs.entropy_gaussian(s) for s in states],
        [gs.mean_energy(s, mode) for s in states],
        [gs.asymmetry(s, mode, res.theta) for s in states],
        res,
        [gaussian_rates(s, res) for s in states],
        "gaussian",
    )


@dataclass
class FockRun:
    ledger: ThermoLedger
    trajectory: fk.FockTrajectory


def fock_ledger(
    rho0: fk.FockDensityMatrix,
    res: ReservoirSpec,
    times: Sequence[float],
    dt_max: float = math.inf,
    fd_step: float | None = None,
) -> FockRun:
    """Fock-backend ledger; entropy rates by finite differences of size ``fd_step``."""
    gen = fk.build_generator(rho0.dim, res)
    traj = fk.propagate_many([rho0], gen, times, dt_max)
    h = fd_step or default_fd_step(gen)
    mode = res.mode()
    S, U, A, D, rate_list = [], [], [], [], []
    for t, (rho,) in zip(traj.times, traj.states):
        S.append(fk.von_neumann_entropy(rho))
        U.append(fk.energy(rho, mode))
        A.append(fk.asymmetry(rho, mode, res.theta))
        D.append(fk.relative_entropy_to_steady(rho, res))
        rate_list.append(fock_rates(rho, gen, h, one_sided=t < h))
    ledger = _assemble(traj.times, S, U, A, res, rate_list, "fock", np.array(D))
    return FockRun(ledger, traj)


# ---------------------------------------------------------------- single-reservoir work


def single_reservoir_work_bound(res: ReservoirSpec, deltaA: float) -> float:
    """Upper bound tanh(2r) Delta A on work extracted before relaxing to pi_S."""
    return math.tanh(2 * res.r) * deltaA


@dataclass(frozen=True)
class MaxWork:
    W_max: float
    Sigma: float


def max_extractable_work(res: ReservoirSpec) -> MaxWork:
    """Work from unsqueezing pi_S to the Gibbs state, and the entropy produced
    when the Gibbs state relaxes back."""
    w = res.omega * (2 * res.n_th + 1) * math.sinh(res.r) ** 2
    return MaxWork(w, res.beta * w)


class UnsupportedUnitaryError(TypeError):
    pass


@dataclass(frozen=True)
class GaussianUnitary:
    """D(alpha) R(phase) S(sq): squeeze, then rotate phase space by ``phase``,
    then displace."""

    sq: SqueezeParams = field(default_factory=SqueezeParams)
    phase: float = 0.0
    alpha: complex = 0j

    def apply(self, state: gs.GaussianState) -> gs.GaussianState:
        out = gs.apply_squeeze(state, self.sq)
        if self.phase:
            out = gs.apply_symplectic(out, gs.rotation_matrix(self.phase))
        if self.alpha:
            out = gs.displace(out, self.alpha)
        return out

    def to_dict(self) -> dict:
        a = complex(self.alpha)
        return {"r": self.sq.r, "theta": self.sq.theta, "phase": self.phase, "alpha_re": a.real, "alpha_im": a.imag}


def random_gaussian_unitary(rng: np.random.Generator, r_max: float = 1.5, alpha_max: float = 1.0) -> GaussianUnitary:
    alpha = alpha_max * math.sqrt(rng.uniform()) * complex(np.exp(2j * math.pi * rng.uniform()))
    return GaussianUnitary(
        SqueezeParams(rng.uniform(0, r_max), rng.uniform(0, 2 * math.pi)),
        rng.uniform(0, 2 * math.pi),
        alpha,
    )


def _as_unitary(unitary) -> GaussianUnitary:
    if unitary is None:
        return GaussianUnitary()
    if isinstance(unitary, SqueezeParams):
        return GaussianUnitary(unitary)
    if isinstance(unitary, GaussianUnitary):
        return unitary
    raise UnsupportedUnitaryError(f"only Gaussian unitaries are supported, got {type(unitary).__name__}")


@dataclass(frozen=True)
class ProtocolResult:
    W_out: float
    Q: float
    Sigma: float
    bound: float
    deltaA: float

    def as_dict(self) -> dict:
        return {"W_out": self.W_out, "Q": self.Q, "Sigma": self.Sigma, "bound": self.bound, "Delta_A": self.deltaA}


def two_stroke_protocol(res: ReservoirSpec, unitary=None) -> ProtocolResult:
    """Apply a Gaussian unitary to pi_S, extract the energy released, then let
    the mode relax back to pi_S.

    Over the relaxation the entropy change vanishes, so Sigma = -Phi with
    Phi the exact integral of the entropy flow rate.
    """
    u = _as_unitary(unitary)
    mode = res.mode()
    pi = gs.steady_state(res)
    rho1 = u.apply(pi)
    W_out = gs.mean_energy(pi, mode) - gs.mean_energy(rho1, mode)
    Q = W_out
    deltaA = gs.asymmetry(pi, mode, res.theta) - gs.asymmetry(rho1, mode, res.theta)
    Phi = res.beta * (math.cosh(2 * res.r) * Q - math.sinh(2 * res.r) * deltaA)
    bound = single_reservoir_work_bound(res, deltaA)
    if W_out > bound + BOUND_TOL:
        raise ConsistencyError(f"work {W_out!r} exceeds bound {bound!r}")
    return ProtocolResult(W_out, Q, -Phi, bound, deltaA)
