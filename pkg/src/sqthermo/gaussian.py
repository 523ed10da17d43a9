"""Exact Gaussian-state algebra for one or two bosonic modes.

Quadratures are x = (a + a^dag)/sqrt(2), p = (a - a^dag)/(i sqrt(2)), ordered
(x1, p1, x2, p2).  The vacuum covariance is diag(1/2, 1/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import DomainError, ModeSpec, ReservoirSpec, SqueezeParams, thermal_occupation

SYM_TOL = 1e-12
PHYS_TOL = 1e-9
# symplectic eigenvalues closer than this to 1/2 contribute zero entropy
NU_CUTOFF = 1e-12


class UnphysicalStateError(ValueError):
    """Covariance violates the uncertainty relation."""


def symplectic_form(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GaussianState:
    """First moments and covariance matrix of a 1- or 2-mode Gaussian state."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = _frozen(self.mean).reshape(-1)
        cov = _frozen(self.cov)
        if mean.size not in (2, 4) or cov.shape != (mean.size, mean.size):
            raise ValueError(f"bad shapes: mean {mean.shape}, cov {cov.shape}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("non-finite moments")
        if np.max(np.abs(cov - cov.T)) > SYM_TOL * max(1.0, np.max(np.abs(cov))):
            raise ValueError("covariance matrix is not symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return self.mean.size // 2

    def allclose(self, other: "GaussianState", atol: float = 1e-12) -> bool:
        return (
            self.n_modes == other.n_modes
            and np.allclose(self.mean, other.mean, rtol=0, atol=atol)
            and np.allclose(self.cov, other.cov, rtol=0, atol=atol)
        )

    def to_dict(self) -> dict:
        return {"n_modes": self.n_modes, "mean": self.mean.tolist(), "cov": self.cov.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianState":
        state = cls(np.asarray(d["mean"], float), np.asarray(d["cov"], float))
        if state.n_modes != d.get("n_modes", state.n_modes):
            raise ValueError("n_modes does not match moment shapes")
        return state


# ---------------------------------------------------------------- constructors


def vacuum(n_modes: int = 1) -> GaussianState:
    return GaussianState(np.zeros(2 * n_modes), 0.5 * np.eye(2 * n_modes))


def thermal_from_occupation(n: float) -> GaussianState:
    if n < 0:
        raise DomainError(f"occupation must be >= 0, got {n}")
    return GaussianState(np.zeros(2), (n + 0.5) * np.eye(2))


def thermal(beta: float, mode: ModeSpec) -> GaussianState:
    return thermal_from_occupation(thermal_occupation(beta, mode.omega))


def coherent(alpha: complex) -> GaussianState:
    return GaussianState(math.sqrt(2) * np.array([alpha.real, alpha.imag]), 0.5 * np.eye(2))


def rotation_matrix(phi: float) -> np.ndarray:
    """Maps (x, p) onto (x_phi, p_phi) with x_phi = x cos(phi) + p sin(phi)."""
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, s], [-s, c]])


def squeeze_symplectic(sq: SqueezeParams) -> np.ndarray:
    """Heisenberg action of S(r, theta) on (x, p).

    Squeezes x_{theta/2} by exp(-r) and stretches p_{theta/2} by exp(r).
    """
    rot = rotation_matrix(sq.theta / 2)
    return rot.T @ np.diag([math.exp(-sq.r), math.exp(sq.r)]) @ rot


def make_squeezed_thermal(beta: float, mode: ModeSpec, sq: SqueezeParams) -> GaussianState:
    """The state S exp(-beta H) S^dag / Z."""
    return apply_squeeze(thermal(beta, mode), sq)


def steady_state(res: ReservoirSpec) -> GaussianState:
    return make_squeezed_thermal(res.beta, res.mode(), res.sq)


# ---------------------------------------------------------------- unitaries


def apply_symplectic(state: GaussianState, S: np.ndarray, d=None) -> GaussianState:
    mean = S @ state.mean
    if d is not None:
        mean = mean + np.asarray(d, float)
    cov = S @ state.cov @ S.T
    return GaussianState(mean, 0.5 * (cov + cov.T))


def apply_squeeze(state: GaussianState, sq: SqueezeParams) -> GaussianState:
    if state.n_modes != 1:
        raise ValueError("apply_squeeze acts on a single mode")
    if sq.r == 0:
        return state
    return apply_symplectic(state, squeeze_symplectic(sq))


def displace(state: GaussianState, alpha: complex) -> GaussianState:
    """D(alpha) rho D(alpha)^dag for a single mode."""
    if state.n_modes != 1:
        raise ValueError("displace acts on a single mode")
    alpha = complex(alpha)
    return GaussianState(state.mean + math.sqrt(2) * np.array([alpha.real, alpha.imag]), state.cov)


def beam_splitter_symplectic(angle: float) -> np.ndarray:
    """Heisenberg action of exp(angle (a b^dag - a^dag b)):
    a -> a cos - b sin,  b -> b cos + a sin."""
    c, s = math.cos(angle), math.sin(angle)
    eye = np.eye(2)
    return np.block([[c * eye, -s * eye], [s * eye, c * eye]])


def apply_beam_splitter(state2: GaussianState, angle: float) -> GaussianState:
    if state2.n_modes != 2:
        raise ValueError(f"beam splitter needs a two-mode state, got {state2.n_modes} mode(s)")
    return apply_symplectic(state2, beam_splitter_symplectic(angle))


def tensor(a: GaussianState, b: GaussianState) -> GaussianState:
    if a.n_modes != 1 or b.n_modes != 1:
        raise ValueError("tensor of two single-mode states only")
    cov = np.zeros((4, 4))
    cov[:2, :2] = a.cov
    cov[2:, 2:] = b.cov
    return GaussianState(np.concatenate([a.mean, b.mean]), cov)


def marginal(state2: GaussianState, k: int) -> GaussianState:
    sl = slice(2 * k, 2 * k + 2)
    return GaussianState(state2.mean[sl], state2.cov[sl, sl])


# ---------------------------------------------------------------- observables


def ladder_moments(state: GaussianState) -> tuple[complex, complex, float]:
    """(<a>, <a^2>, <a^dag a>) of a single-mode state."""
    mx, mp = state.mean
    cxx, cxp, cpp = state.cov[0, 0], state.cov[0, 1], state.cov[1, 1]
    a1 = complex(mx, mp) / math.sqrt(2)
    x2, p2, xp = cxx + mx * mx, cpp + mp * mp, cxp + mx * mp
    a2 = complex(x2 - p2, 2 * xp) / 2
    n = (x2 + p2 - 1) / 2
    return a1, a2, n


def from_ladder_moments(a1: complex, a2: complex, n: float) -> GaussianState:
    """Inverse of :func:`ladder_moments`."""
    mx, mp = math.sqrt(2) * a1.real, math.sqrt(2) * a1.imag
    x2 = n + 0.5 + a2.real
    p2 = n + 0.5 - a2.real
    xp = a2.imag
    cov = np.array([[x2 - mx * mx, xp - mx * mp], [xp - mx * mp, p2 - mp * mp]])
    return GaussianState(np.array([mx, mp]), cov)


def photon_number(state: GaussianState) -> float:
    return float(ladder_moments(state)[2])


def mean_energy(state: GaussianState, mode: ModeSpec) -> float:
    if state.n_modes != 1:
        raise ValueError("mean_energy acts on a single mode")
    return mode.omega * photon_number(state)


def quadrature_second_moments(state: GaussianState, phi: float) -> tuple[float, float]:
    """Non-central <x_phi^2>, <p_phi^2>."""
    rot = rotation_matrix(phi)
    second = state.cov + np.outer(state.mean, state.mean)
    m = rot @ second @ rot.T
    return float(m[0, 0]), float(m[1, 1])


def asymmetry(state: GaussianState, mode: ModeSpec, theta: float) -> float:
    """(omega/2) (<p_{theta/2}^2> - <x_{theta/2}^2>), with non-central moments."""
    if state.n_modes != 1:
        raise ValueError("asymmetry acts on a single mode")
    x2, p2 = quadrature_second_moments(state, theta / 2)
    return 0.5 * mode.omega * (p2 - x2)


def symplectic_eigenvalues(state: GaussianState) -> np.ndarray:
    if state.n_modes == 1:
        det = float(np.linalg.det(state.cov))
        return np.array([math.sqrt(max(det, 0.0))])
    omega = symplectic_form(state.n_modes)
    ev = np.abs(np.linalg.eigvals(1j * omega @ state.cov))
    return np.sort(ev)[::2]


def is_physical(state: GaussianState, tol: float = SYM_TOL) -> bool:
    return bool(np.min(symplectic_eigenvalues(state)) >= 0.5 - tol)


def _mode_entropy(nu: float) -> float:
    if nu - 0.5 < NU_CUTOFF:
        return 0.0
    return (nu + 0.5) * math.log(nu + 0.5) - (nu - 0.5) * math.log(nu - 0.5)


def entropy_gaussian(state: GaussianState) -> float:
    """Von Neumann entropy in nats."""
    nus = symplectic_eigenvalues(state)
    if np.min(nus) < 0.5 - PHYS_TOL:
        raise UnphysicalStateError(f"symplectic eigenvalue {np.min(nus)} < 1/2")
    return float(sum(_mode_entropy(nu) for nu in nus))


def entropy_derivative(nu: float) -> float:
    """dS/dnu for one mode."""
    if nu - 0.5 < NU_CUTOFF:
        return math.inf
    return math.log((nu + 0.5) / (nu - 0.5))


# ---------------------------------------------------------------- relaxation


def jump_operator_moments(state: GaussianState, sq: SqueezeParams) -> tuple[complex, complex, float]:
    """(<R>, <R^2>, <R^dag R>) with R = a cosh r + a^dag sinh r e^{i theta}."""
    a1, a2, n = ladder_moments(state)
    c, s = math.cosh(sq.r), math.sinh(sq.r)
    ph = complex(math.cos(sq.theta), math.sin(sq.theta))
    r1 = c * a1 + s * ph * a1.conjugate()
    r2 = c * c * a2 + s * s * ph * ph * a2.conjugate() + c * s * ph * (2 * n + 1)
    rr = c * c * n + s * s * (n + 1) + 2 * c * s * (ph.conjugate() * a2).real
    return r1, r2, rr


def relax_moments_analytic(initial: GaussianState, res: ReservoirSpec, t: float) -> GaussianState:
    """State at time t under the squeezed-reservoir master equation.

    The moments of R decay as <R> ~ e^{-gt/2}, <R^2> ~ e^{-gt} and
    <R^dag R> -> n_th at rate g; the moments of a follow from
    a = R cosh r - R^dag sinh r e^{i theta}.
    """
    if t < 0:
        raise DomainError(f"time must be >= 0, got {t}")
    if initial.n_modes != 1:
        raise ValueError("relaxation acts on a single mode")
    if t == 0:
        return initial
    r1, r2, rr = jump_operator_moments(initial, res.sq)
    decay = math.exp(-res.gamma * t)
    n_th = res.n_th
    r1 *= math.sqrt(decay)
    r2 *= decay
    rr = n_th + decay * (rr - n_th)

    c, s = math.cosh(res.r), math.sinh(res.r)
    ph = complex(math.cos(res.theta), math.sin(res.theta))
    a1 = c * r1 - s * ph * r1.conjugate()
    a2 = c * c * r2 + s * s * ph * ph * r2.conjugate() - c * s * ph * (2 * rr + 1)
    n = c * c * rr + s * s * (rr + 1) - 2 * c * s * (ph.conjugate() * r2).real
    return from_ladder_moments(a1, a2, n)


def covariance_rate(state: GaussianState, res: ReservoirSpec) -> tuple[np.ndarray, np.ndarray]:
    """(d mean/dt, d cov/dt) generated by the master equation."""
    pi = steady_state(res)
    return -0.5 * res.gamma * state.mean, -res.gamma * (state.cov - pi.cov)
