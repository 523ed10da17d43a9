"""Truncated Fock-space backend for the squeezed-reservoir master equation.

The generator has no Hamiltonian part (interaction picture, Lamb-Stark shifts
dropped) and two jump operators sqrt(g (n_th+1)) R and sqrt(g n_th) R^dag with
R = a cosh r + a^dag sinh r e^{i theta}, and is integrated with classical
fixed-step RK4.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import sparse
from scipy.linalg import expm

from . import gaussian as gs
from .params import DomainError, ModeSpec, ReservoirSpec, SqueezeParams

log = logging.getLogger(__name__)

HERM_TOL = 1e-10
TRACE_TOL = 1e-8
EIG_TOL = 1e-10
TOP_POP_TOL = 1e-8
# eigenvalue floor used when taking logarithms of density matrices
LOG_FLOOR = 1e-14
# RK4 is stable on the negative real axis up to h*lambda ~ 2.78
RK4_STABILITY = 2.5


class TruncationError(RuntimeError):
    """The Fock truncation is too small for the state being represented."""

    def __init__(self, message: str, required_dim: int | None = None):
        super().__init__(message if required_dim is None else f"{message}; try dim >= {required_dim}")
        self.required_dim = required_dim


DIM_FACTOR = 18


def default_dim(N: float, M_abs: float) -> int:
    """Truncation keeping the top-level population of a squeezed thermal
    state with moments (N, |M|) below 1e-10."""
    return max(40, math.ceil(DIM_FACTOR * (N + M_abs + 1)))


def dim_for_state(state: gs.GaussianState) -> int:
    a1, a2, n = gs.ladder_moments(state)
    return default_dim(n, abs(a2) + abs(a1) ** 2)


def minimal_dim(state: gs.GaussianState, tail_tol: float = 1e-10, cap: int | None = None) -> int:
    """Smallest truncation whose discarded weight is below ``tail_tol``."""
    big = dim_for_state(state) + 60
    rho = gaussian_to_fock(state, big, pad=max(60, big), check=False)
    tail = np.cumsum(np.real(np.diagonal(rho.data))[::-1])[::-1]
    ok = np.nonzero(tail < tail_tol)[0]
    if ok.size == 0:
        raise TruncationError(f"no truncation up to {big} reaches tail weight {tail_tol}", 2 * big)
    d = max(int(ok[0]), 2)
    if cap is not None and d > cap:
        raise TruncationError(f"state needs dim {d} > cap {cap} for tail weight {tail_tol}", d)
    return d


def ladder(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)


@dataclass(frozen=True, eq=False)
class FockDensityMatrix:
    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1] or data.shape[0] < 2:
            raise ValueError(f"density matrix must be square with dim >= 2, got {data.shape}")
        if np.max(np.abs(data - data.conj().T)) > HERM_TOL:
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(data).real
        if abs(tr - 1) > TRACE_TOL:
            raise ValueError(f"trace {tr} differs from 1")
        ev = np.linalg.eigvalsh(data)
        if ev[0] < -EIG_TOL:
            raise ValueError(f"negative eigenvalue {ev[0]}")
        top = data[-1, -1].real
        if top > TOP_POP_TOL:
            raise TruncationError(
                f"top Fock level population {top:.3e} exceeds {TOP_POP_TOL}", required_dim=2 * data.shape[0]
            )
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def dim(self) -> int:
        return self.data.shape[0]


def _unchecked(data: np.ndarray) -> FockDensityMatrix:
    obj = object.__new__(FockDensityMatrix)
    object.__setattr__(obj, "data", data)
    return obj


def basis_state(dim: int, n: int) -> FockDensityMatrix:
    rho = np.zeros((dim, dim), complex)
    rho[n, n] = 1.0
    return FockDensityMatrix(rho)


# ---------------------------------------------------------------- state preparation


def squeeze_operator(dim: int, sq: SqueezeParams) -> np.ndarray:
    a = ladder(dim)
    ph = complex(math.cos(sq.theta), math.sin(sq.theta))
    gen = 0.5 * sq.r * (ph.conjugate() * a @ a - ph * a.conj().T @ a.conj().T)
    return expm(gen)


def displacement_operator(dim: int, alpha: complex) -> np.ndarray:
    a = ladder(dim)
    return expm(alpha * a.conj().T - alpha.conjugate() * a)


def squeeze_decomposition(state: gs.GaussianState) -> tuple[float, SqueezeParams]:
    """Write a single-mode covariance as S(r, theta) (nu I) S^T; returns (nu, sq)."""
    nu = float(gs.symplectic_eigenvalues(state)[0])
    ev, vecs = np.linalg.eigh(state.cov / nu)
    lam = min(max(ev[0], 1e-300), 1.0)
    r = max(0.0, -0.5 * math.log(lam))
    u = vecs[:, 0]
    phi = math.atan2(u[1], u[0]) % math.pi
    return nu, SqueezeParams(r, 2 * phi)


def gaussian_to_fock(
    state: gs.GaussianState, dim: int, pad: int | None = None, check: bool = True
) -> FockDensityMatrix:
    """Fock representation built in a padded space and projected to ``dim``."""
    nu, sq = squeeze_decomposition(state)
    big = dim + (pad if pad is not None else max(60, dim))
    n_th = max(nu - 0.5, 0.0)
    if n_th > 0:
        q = n_th / (n_th + 1)
        pops = (1 - q) * q ** np.arange(big)
    else:
        pops = np.zeros(big)
        pops[0] = 1.0
    rho = np.diag(pops).astype(complex)
    if sq.r > 0:
        S = squeeze_operator(big, sq)
        rho = S @ rho @ S.conj().T
    alpha = complex(state.mean[0], state.mean[1]) / math.sqrt(2)
    if alpha != 0:
        D = displacement_operator(big, alpha)
        rho = D @ rho @ D.conj().T
    lost = 1 - np.trace(rho[:dim, :dim]).real
    if check and lost > TOP_POP_TOL:
        raise TruncationError(f"state weight {lost:.3e} lies beyond level {dim}", dim_for_state(state))
    rho = rho[:dim, :dim]
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    if not check:
        return _unchecked(rho)
    return FockDensityMatrix(rho)


# ---------------------------------------------------------------- generator


def _dag(X: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(X, -1, -2))


@dataclass(frozen=True, eq=False)
class LindbladGenerator:
    dim: int
    res: ReservoirSpec
    jump_ops: tuple = field(repr=False)

    def __post_init__(self):
        ops = tuple(np.asarray(L, complex) for L in self.jump_ops)
        object.__setattr__(self, "jump_ops", ops)
        object.__setattr__(self, "_dags", tuple(L.conj().T.copy() for L in ops))
        object.__setattr__(self, "K", sum(Ld @ L for L, Ld in zip(ops, self._dags)))

    @property
    def R(self) -> np.ndarray:
        return self.jump_ops[0] / math.sqrt(self.res.gamma * (self.res.n_th + 1))

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        """d rho / dt for a Hermitian rho (or a stack of them)."""
        kr = self.K @ rho
        out = -0.5 * (kr + _dag(kr))
        for L, Ld in zip(self.jump_ops, self._dags):
            out += L @ rho @ Ld
        return out

    def dense_apply(self, rho: np.ndarray) -> np.ndarray:
        """Reference evaluation, valid for non-Hermitian input too."""
        out = -0.5 * (self.K @ rho + rho @ self.K)
        for L in self.jump_ops:
            out = out + L @ rho @ L.conj().T
        return out

    @property
    def superoperator(self) -> sparse.csr_matrix:
        """Sparse matrix acting on row-major vec(rho); the generator is banded
        in the number basis, so this is far cheaper than dense products."""
        cached = self.__dict__.get("_super")
        if cached is None:
            eye = sparse.identity(self.dim, dtype=complex, format="csr")
            K = sparse.csr_matrix(self.K)
            cached = -0.5 * (sparse.kron(K, eye) + sparse.kron(eye, K.T))
            for L, Ld in zip(self.jump_ops, self._dags):
                cached = cached + sparse.kron(sparse.csr_matrix(L), sparse.csr_matrix(Ld.T))
            cached = sparse.csr_matrix(cached)
            cached.eliminate_zeros()
            object.__setattr__(self, "_super", cached)
        return cached

    def spectral_bound(self) -> float:
        return 2.0 * float(np.linalg.eigvalsh(self.K)[-1])

    def max_step(self, dt_max: float = math.inf) -> float:
        return min(dt_max, 0.01 / self.res.gamma, RK4_STABILITY / self.spectral_bound())


def build_generator(dim: int, res: ReservoirSpec) -> LindbladGenerator:
    if dim < 2:
        raise DomainError(f"dim must be >= 2, got {dim}")
    a = ladder(dim)
    ph = complex(math.cos(res.theta), math.sin(res.theta))
    R = math.cosh(res.r) * a + math.sinh(res.r) * ph * a.conj().T
    ops = (math.sqrt(res.gamma * (res.n_th + 1)) * R, math.sqrt(res.gamma * res.n_th) * R.conj().T)
    return LindbladGenerator(dim, res, ops)


# ---------------------------------------------------------------- integration


def rk4_step(gen: LindbladGenerator, rho: np.ndarray, h: float) -> np.ndarray:
    k1 = gen(rho)
    k2 = gen(rho + 0.5 * h * k1)
    k3 = gen(rho + 0.5 * h * k2)
    k4 = gen(rho + h * k3)
    return rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


@dataclass
class FockTrajectory:
    times: np.ndarray
    states: list  # list of lists of FockDensityMatrix, [sample][member]
    step: float
    max_trace_drift: float = 0.0
    max_herm_drift: float = 0.0
    # largest per-step trace correction since the previous sample
    trace_drift: list = field(default_factory=list)

    def rows(self, res: ReservoirSpec, member: int = 0) -> list[tuple]:
        """Trajectory dump (t, energy, asymmetry, entropy, rel_entropy_to_pi, trace_drift)."""
        mode = res.mode()
        out = []
        for t, sample, drift in zip(self.times, self.states, self.trace_drift):
            rho = sample[member]
            obs = observables(rho, mode, res.theta)
            out.append(
                (float(t), obs["energy"], obs["asymmetry"], obs["entropy"], relative_entropy_to_steady(rho, res), drift)
            )
        return out


TRAJECTORY_HEADER = ("t", "energy", "asymmetry", "entropy", "rel_entropy_to_pi", "trace_drift")


def _check_top(rho: np.ndarray, t: float):
    top = np.max(np.real(rho[..., -1, -1]))
    if top > TOP_POP_TOL:
        dim = rho.shape[-1]
        raise TruncationError(
            f"top Fock level population {top:.3e} at t={t:.6g} exceeds {TOP_POP_TOL}", required_dim=2 * dim
        )


def propagate_many(
    rhos: Sequence[FockDensityMatrix],
    gen: LindbladGenerator,
    times: Sequence[float],
    dt_max: float = math.inf,
    hook: Callable[[float, np.ndarray], None] | None = None,
) -> FockTrajectory:
    """Evolve several states under one generator, sampling at ``times``.

    Each step is followed by re-Hermitization and trace renormalization; the
    size of both corrections is tracked and logged.
    """
    times = np.asarray(times, float)
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise DomainError("sample times must be non-negative and sorted")
    for r in rhos:
        if r.dim != gen.dim:
            raise ValueError(f"state dim {r.dim} != generator dim {gen.dim}")
    rho = np.stack([r.data for r in rhos]).astype(complex)
    n, d = rho.shape[0], gen.dim
    L = gen.superoperator
    h_cap = gen.max_step(dt_max)
    t = 0.0
    samples = []
    traj = FockTrajectory(times, samples, h_cap)
    for t_next in times:
        span = t_next - t
        n_steps = math.ceil(span / h_cap - 1e-12) if span > 0 else 0
        h = span / n_steps if n_steps else 0.0
        interval_drift = 0.0
        for _ in range(n_steps):
            x = rho.reshape(n, d * d).T
            k1 = L @ x
            k2 = L @ (x + 0.5 * h * k1)
            k3 = L @ (x + 0.5 * h * k2)
            k4 = L @ (x + h * k3)
            rho = (x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)).T.reshape(n, d, d)
            t += h
            herm = np.max(np.abs(rho - _dag(rho)))
            rho = 0.5 * (rho + _dag(rho))
            tr = np.real(np.trace(rho, axis1=-2, axis2=-1))
            drift = float(np.max(np.abs(tr - 1)))
            rho = rho / tr[:, None, None]
            interval_drift = max(interval_drift, drift)
            traj.max_trace_drift = max(traj.max_trace_drift, drift)
            traj.max_herm_drift = max(traj.max_herm_drift, float(herm))
            _check_top(rho, t)
            if hook is not None:
                hook(t, rho)
        t = float(t_next)
        traj.trace_drift.append(interval_drift)
        samples.append([FockDensityMatrix(r) for r in rho])
    log.debug("propagated %d state(s), step %.3g, trace drift %.2e", len(rhos), h_cap, traj.max_trace_drift)
    return traj


def evolve(
    rho: FockDensityMatrix,
    gen: LindbladGenerator,
    t: float,
    dt_max: float = math.inf,
    hook: Callable[[float, np.ndarray], None] | None = None,
) -> FockDensityMatrix:
    if t < 0:
        raise DomainError(f"time must be >= 0, got {t}")
    if t == 0:
        return rho
    return propagate_many([rho], gen, [t], dt_max, hook).states[-1][0]


STEADY_RESID_TOL = 1e-6


def _steady_residual(dim: int, res: ReservoirSpec) -> float:
    pi = gaussian_to_fock(gs.steady_state(res), dim, check=False)
    return float(np.linalg.norm(build_generator(dim, res)(pi.data)))


def steady_state_fock(dim: int, res: ReservoirSpec, pad: int | None = None) -> FockDensityMatrix:
    pi = gaussian_to_fock(gs.steady_state(res), dim, pad)
    resid = np.linalg.norm(build_generator(dim, res)(pi.data))
    if resid > STEADY_RESID_TOL * res.gamma:
        raise TruncationError(
            f"steady-state residual {resid:.3e} too large at dim {dim}", steady_state_dim(res, start=dim)
        )
    return pi


def steady_state_dim(res: ReservoirSpec, tol: float = STEADY_RESID_TOL, start: int | None = None, step: int = 10) -> int:
    """Smallest dim (in steps of ``step``) at which the projected pi_S is
    stationary to ||L(pi)|| <= tol * gamma.  The boundary error decays more
    slowly than the top-level population, so this can exceed default_dim."""
    dim = start or max(minimal_dim(gs.steady_state(res)), 2)
    while _steady_residual(dim, res) > tol * res.gamma:
        dim += step
    return dim


# ---------------------------------------------------------------- information measures


def _eigh(rho) -> tuple[np.ndarray, np.ndarray]:
    data = rho.data if isinstance(rho, FockDensityMatrix) else rho
    return np.linalg.eigh(data)


def von_neumann_entropy(rho) -> float:
    ev = _eigh(rho)[0]
    ev = ev[ev > 0]
    return float(-np.sum(ev * np.log(ev)))


def log_matrix(rho, floor: float = LOG_FLOOR) -> np.ndarray:
    ev, vecs = _eigh(rho)
    return (vecs * np.log(np.maximum(ev, floor))) @ vecs.conj().T


def relative_entropy(rho, sigma, floor: float = LOG_FLOOR, support_tol: float = TOP_POP_TOL) -> float:
    """Tr[rho (ln rho - ln sigma)]; +inf when sigma misses part of rho's support."""
    r = rho.data if isinstance(rho, FockDensityMatrix) else rho
    s_ev, s_vec = _eigh(sigma)
    below = s_ev < floor
    if np.any(below):
        weight = np.real(np.einsum("ij,jk,ki->", s_vec[:, below].conj().T, r, s_vec[:, below]))
        if weight > support_tol:
            return math.inf
    ln_sigma = (s_vec * np.log(np.maximum(s_ev, floor))) @ s_vec.conj().T
    return float(-von_neumann_entropy(r) - np.real(np.trace(r @ ln_sigma)))


def nonequilibrium_potential(dim: int, res: ReservoirSpec) -> np.ndarray:
    """-ln pi_S = beta omega R^dag R + ln Z, built from the truncated R."""
    a = ladder(dim)
    ph = complex(math.cos(res.theta), math.sin(res.theta))
    R = math.cosh(res.r) * a + math.sinh(res.r) * ph * a.conj().T
    ln_z = -math.log(-math.expm1(-res.beta * res.omega))
    return res.beta * res.omega * (R.conj().T @ R) + ln_z * np.eye(dim)


def relative_entropy_to_steady(rho, res: ReservoirSpec) -> float:
    """D(rho || pi_S) = -S(rho) + Tr[rho Phi] without taking ln pi_S numerically.

    Preferred over :func:`relative_entropy` because pi_S has eigenvalues far
    below the log floor.
    """
    r = rho.data if isinstance(rho, FockDensityMatrix) else rho
    phi = nonequilibrium_potential(r.shape[0], res)
    return float(-von_neumann_entropy(r) + np.real(np.trace(r @ phi)))


def fidelity(rho, sigma) -> float:
    from scipy.linalg import sqrtm

    r = rho.data if isinstance(rho, FockDensityMatrix) else rho
    s = sigma.data if isinstance(sigma, FockDensityMatrix) else sigma
    sr = sqrtm(r)
    return float(np.real(np.trace(sqrtm(sr @ s @ sr))) ** 2)


# ---------------------------------------------------------------- observables


def ladder_moments(rho) -> tuple[complex, complex, float]:
    """(<a>, <a^2>, <a^dag a>) from a Fock density matrix."""
    r = rho.data if isinstance(rho, FockDensityMatrix) else rho
    k = np.arange(r.shape[0])
    a1 = np.sum(np.sqrt(k[1:]) * np.diagonal(r, -1))
    a2 = np.sum(np.sqrt(k[2:] * k[1:-1]) * np.diagonal(r, -2))
    n = np.sum(k * np.real(np.diagonal(r)))
    return complex(a1), complex(a2), float(n)


def energy(rho, mode: ModeSpec) -> float:
    return mode.omega * ladder_moments(rho)[2]


def asymmetry(rho, mode: ModeSpec, theta: float) -> float:
    a2 = ladder_moments(rho)[1]
    return -mode.omega * (complex(math.cos(theta), -math.sin(theta)) * a2).real


def observables(rho, mode: ModeSpec, theta: float) -> dict:
    return {
        "energy": energy(rho, mode),
        "asymmetry": asymmetry(rho, mode, theta),
        "entropy": von_neumann_entropy(rho),
    }


def diagonal_part(rho: FockDensityMatrix) -> FockDensityMatrix:
    """Drop all coherences in the number basis."""
    return FockDensityMatrix(np.diag(np.real(np.diagonal(rho.data))).astype(complex))
