"""Otto cycle between a cold thermal reservoir and a hot squeezed one.

Strokes: A -> B adiabatic frequency change omega_1 -> omega_2 (occupation
kept); B -> C relaxation with the squeezed reservoir (beta_2, r, theta);
C -> D unsqueezing followed by the adiabatic return to omega_1; D -> A
relaxation with the cold reservoir beta_1.  Work and heat are counted
positive when extracted from / entering the mode respectively.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import gaussian as gs
from .params import ConsistencyError, DomainError, ModeSpec, ReservoirSpec, SqueezeParams, thermal_occupation

TIE_TOL = 1e-12
# relaxation strokes are run to gamma t = RELAX_GT, leaving e^-60 of the initial deviation
RELAX_GT = 60.0
NUMERIC_TOL = 1e-8


class Region(str, enum.Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"
    INFEASIBLE = "infeasible"


REGION_CODES = {Region.INFEASIBLE: 0, Region.I: 1, Region.II: 2, Region.III: 3, Region.IV: 4}
CODE_REGIONS = {v: k for k, v in REGION_CODES.items()}


@dataclass(frozen=True)
class CycleParams:
    beta1: float
    beta2: float
    omega1: float = 1.0
    omega2: float = 1.0
    sq: SqueezeParams = field(default_factory=SqueezeParams)

    def __post_init__(self):
        for name in ("beta1", "beta2", "omega1", "omega2"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise DomainError(f"{name} must be positive and finite, got {v}")
        if self.beta2 > self.beta1:
            raise DomainError(f"hot reservoir must be hotter: beta2={self.beta2} > beta1={self.beta1}")
        if self.omega2 < self.omega1:
            raise DomainError(f"need omega2 >= omega1, got {self.omega2} < {self.omega1}")

    @property
    def r(self) -> float:
        return self.sq.r

    @property
    def n1(self) -> float:
        return thermal_occupation(self.beta1, self.omega1)

    @property
    def n2(self) -> float:
        return thermal_occupation(self.beta2, self.omega2)

    @property
    def omega2_star(self) -> float:
        return self.omega1 * self.beta1 / self.beta2

    @property
    def eta_c(self) -> float:
        return 1.0 - self.beta2 / self.beta1

    def hot_reservoir(self) -> ReservoirSpec:
        return ReservoirSpec(self.beta2, self.omega2, self.sq)

    def cold_reservoir(self) -> ReservoirSpec:
        return ReservoirSpec(self.beta1, self.omega1)

    def replace(self, **kw) -> "CycleParams":
        d = {"beta1": self.beta1, "beta2": self.beta2, "omega1": self.omega1, "omega2": self.omega2, "sq": self.sq}
        if "r" in kw or "theta" in kw:
            d["sq"] = SqueezeParams(kw.pop("r", self.sq.r), kw.pop("theta", self.sq.theta))
        d.update(kw)
        return CycleParams(**d)

    def to_dict(self) -> dict:
        return {
            "beta1": self.beta1,
            "beta2": self.beta2,
            "omega1": self.omega1,
            "omega2": self.omega2,
            "r": self.sq.r,
            "theta": self.sq.theta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CycleParams":
        return cls(d["beta1"], d["beta2"], d["omega1"], d["omega2"], SqueezeParams(d["r"], d["theta"]))


# ---------------------------------------------------------------- vectorized core


def _n_th(beta, omega):
    return 1.0 / np.expm1(beta * omega)


def energetics(beta1, beta2, omega1, omega2, r) -> dict:
    """Per-stroke energies, broadcasting over array arguments."""
    n1 = _n_th(beta1, omega1)
    n2 = _n_th(beta2, omega2)
    s2 = np.sinh(r) ** 2
    c2r, s2r = np.cosh(2 * r), np.sinh(2 * r)
    hot = n2 * c2r + s2
    W_AB = -(omega2 - omega1) * n1
    Q_BC = omega2 * (hot - n1)
    W_CD = omega2 * hot - omega1 * n2
    Q_DA = omega1 * (n1 - n2)
    dA = omega2 * s2r * (n2 + 0.5)
    return {
        "n1": n1,
        "n2": n2,
        "W_AB": W_AB,
        "Q_BC": Q_BC,
        "W_CD": W_CD,
        "Q_DA": Q_DA,
        "W_out": W_AB + W_CD,
        "DeltaA_BC": dA,
        "Sigma_cyc": entropy_production(beta1, beta2, r, Q_BC, Q_DA, dA),
    }


def entropy_production(beta1, beta2, r, Q_BC, Q_DA, dA):
    return -beta1 * Q_DA - beta2 * (np.cosh(2 * r) * Q_BC - np.sinh(2 * r) * dA)


def classify_codes(W, Q_BC, Q_DA, tol: float = TIE_TOL) -> np.ndarray:
    """Region codes 1..4 (0 = infeasible); ties go to the lower-numbered region."""
    W, Q_BC, Q_DA = np.broadcast_arrays(*(np.asarray(v, float) for v in (W, Q_BC, Q_DA)))
    pos = lambda v: v >= -tol  # noqa: E731
    neg = lambda v: v <= tol  # noqa: E731
    conds = [
        pos(W) & pos(Q_BC) & neg(Q_DA),
        neg(W) & neg(Q_BC) & pos(Q_DA),
        pos(W) & neg(Q_BC) & pos(Q_DA),
        pos(W) & pos(Q_BC) & pos(Q_DA),
    ]
    return np.select(conds, [1, 2, 3, 4], default=0)


def efficiencies(beta1, beta2, r, W, Q_BC, Q_DA, dA, codes) -> tuple[np.ndarray, np.ndarray]:
    """(eta, eta_max) per region; NaN where undefined (region II, infeasible, 0/0)."""
    W, Q_BC, Q_DA, dA = (np.asarray(v, float) for v in (W, Q_BC, Q_DA, dA))
    with np.errstate(divide="ignore", invalid="ignore"):
        c2r, t2r = np.cosh(2 * r), np.tanh(2 * r)
        eta_I = W / Q_BC
        max_I = 1 - (beta2 / beta1) * (c2r - np.sinh(2 * r) * dA / Q_BC)
        eta_III = W / Q_DA
        max_III = 1 - beta1 / (beta2 * c2r) + t2r * dA / Q_DA
    eta = np.select([codes == 1, codes == 3, codes == 4], [eta_I, eta_III, 1.0], default=np.nan)
    eta_max = np.select([codes == 1, codes == 3, codes == 4], [max_I, max_III, 1.0], default=np.nan)
    return eta, eta_max


# ---------------------------------------------------------------- boundaries


@dataclass(frozen=True)
class Boundaries:
    omega2_star: float
    r_q: float | None
    r_w: float | None
    r_c: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def _r_from_sinh2(x: float) -> float:
    return math.asinh(math.sqrt(max(x, 0.0)))


def region_boundaries(beta1: float, beta2: float, omega1: float, omega2: float) -> Boundaries:
    """Squeezing thresholds at fixed omega2.

    r_q (Q_BC = 0) and r_w (W_out = 0) exist for omega2 >= omega2*; r_c
    (eta = eta_c) exists for omega2 <= omega2*.
    """
    star = omega1 * beta1 / beta2
    n1 = thermal_occupation(beta1, omega1)
    n2 = thermal_occupation(beta2, omega2)
    r_q = r_w = r_c = None
    if omega2 >= star:
        sq_q = (n1 - n2) / (2 * n2 + 1)
        r_q = _r_from_sinh2(sq_q)
        r_w = _r_from_sinh2((1 - omega1 / omega2) * sq_q)
    if omega2 <= star:
        r_c = _r_from_sinh2((star / omega2 - 1) * (n2 - n1) / (2 * n2 + 1))
    return Boundaries(star, r_q, r_w, r_c)


# ---------------------------------------------------------------- reports


def _opt(x) -> float | None:
    x = float(x)
    return None if math.isnan(x) else x


@dataclass(frozen=True)
class CycleReport:
    """All cycle quantities at one parameter point; eta / eta_max are None
    where no engine efficiency is defined (region II)."""

    params: CycleParams
    W_AB: float
    Q_BC: float
    W_CD: float
    Q_DA: float
    W_out: float
    DeltaA_BC: float
    eta: float | None
    eta_c: float
    eta_ht: float
    eta_max: float | None
    Sigma_cyc: float
    region: Region
    boundaries: Boundaries

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k not in ("params", "region", "boundaries")}
        d["params"] = self.params.to_dict()
        d["region"] = self.region.value
        d["boundaries"] = self.boundaries.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CycleReport":
        kw = {k: d[k] for k in cls.__dataclass_fields__ if k not in ("params", "region", "boundaries")}
        return cls(
            params=CycleParams.from_dict(d["params"]),
            region=Region(d["region"]),
            boundaries=Boundaries(**d["boundaries"]),
            **kw,
        )

    def first_law_residual(self) -> float:
        return abs(self.W_out - self.Q_BC - self.Q_DA)


def _report(p: CycleParams, W_AB, Q_BC, W_CD, Q_DA, dA) -> CycleReport:
    W_out = W_AB + W_CD
    code = int(classify_codes(W_out, Q_BC, Q_DA))
    eta, eta_max = efficiencies(p.beta1, p.beta2, p.r, W_out, Q_BC, Q_DA, dA, np.asarray(code))
    return CycleReport(
        params=p,
        W_AB=float(W_AB),
        Q_BC=float(Q_BC),
        W_CD=float(W_CD),
        Q_DA=float(Q_DA),
        W_out=float(W_out),
        DeltaA_BC=float(dA),
        eta=_opt(eta),
        eta_c=p.eta_c,
        eta_ht=eta_ht(p),
        eta_max=_opt(eta_max),
        Sigma_cyc=float(entropy_production(p.beta1, p.beta2, p.r, Q_BC, Q_DA, dA)),
        region=CODE_REGIONS[code],
        boundaries=region_boundaries(p.beta1, p.beta2, p.omega1, p.omega2),
    )


def analyze_cycle(p: CycleParams) -> CycleReport:
    e = energetics(p.beta1, p.beta2, p.omega1, p.omega2, p.r)
    return _report(p, e["W_AB"], e["Q_BC"], e["W_CD"], e["Q_DA"], e["DeltaA_BC"])


def sign_pattern(report: CycleReport) -> tuple[int, int, int]:
    return tuple(int(np.sign(v)) for v in (report.W_out, report.Q_BC, report.Q_DA))


def classify_region(report: CycleReport, tol: float = TIE_TOL) -> Region:
    """Region from the signs of (W_out, Q_BC, Q_DA); Region.INFEASIBLE if no
    region matches (see :func:`sign_pattern` for the offending signs)."""
    return CODE_REGIONS[int(classify_codes(report.W_out, report.Q_BC, report.Q_DA, tol))]


def eta_ht(p: CycleParams) -> float:
    """High-temperature efficiency bound with an effectively hotter squeezed bath."""
    return 1.0 - p.beta2 / (p.beta1 * (1 + 2 * math.sinh(p.r) ** 2))


def max_power_frequency_ht(p: CycleParams) -> float:
    return p.omega1 * math.sqrt(p.beta1 * (1 + 2 * math.sinh(p.r) ** 2) / p.beta2)


def numeric_max_power_frequency(p: CycleParams, omega2_max: float | None = None, n_scan: int = 2001) -> float:
    """Argmax of W_out over omega2: coarse scan, then golden-section refinement."""
    hi = omega2_max or 20 * max_power_frequency_ht(p)
    grid = np.linspace(p.omega1, hi, n_scan)
    w = energetics(p.beta1, p.beta2, p.omega1, grid, p.r)["W_out"]
    k = int(np.argmax(w))
    lo_b, hi_b = grid[max(k - 1, 0)], grid[min(k + 1, n_scan - 1)]
    if k in (0, n_scan - 1):
        return float(grid[k])
    res = minimize_scalar(
        lambda x: -float(energetics(p.beta1, p.beta2, p.omega1, x, p.r)["W_out"]),
        bracket=(lo_b, grid[k], hi_b),
        method="golden",
        tol=1e-10,
    )
    return float(res.x)


# ---------------------------------------------------------------- free energy


@dataclass(frozen=True)
class FreeEnergy:
    carnot_term: float
    squeezing_term: float
    DeltaF2: float
    W_out: float
    asymmetry_dominates: bool

    @property
    def gap(self) -> float:
        return self.DeltaF2 - self.W_out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gap"] = self.gap
        return d


def free_energy_decomposition(p: CycleParams) -> FreeEnergy:
    """Non-equilibrium free energy released by the hot reservoir, measured at
    the cold temperature; it bounds W_out with gap Sigma_cyc / beta1."""
    rep = analyze_cycle(p)
    ratio = p.beta2 / p.beta1  # T1 / T2
    s2 = math.sinh(p.r) ** 2
    carnot = (1 - ratio) * rep.Q_BC
    squeeze = ratio * (math.sinh(2 * p.r) * rep.DeltaA_BC - 2 * s2 * rep.Q_BC)
    total = carnot + squeeze
    if rep.W_out > total + TIE_TOL:
        raise ConsistencyError(f"W_out={rep.W_out!r} exceeds free-energy release {total!r}")
    return FreeEnergy(carnot, squeeze, total, rep.W_out, rep.DeltaA_BC >= math.tanh(p.r) * rep.Q_BC)


# ---------------------------------------------------------------- explicit strokes


@dataclass(frozen=True)
class CycleStates:
    A: gs.GaussianState
    B: gs.GaussianState
    C: gs.GaussianState
    D: gs.GaussianState
    A_closed: gs.GaussianState


def cycle_states(p: CycleParams) -> CycleStates:
    """Step explicit Gaussian states around the cycle.

    Quadratures are dimensionless, so an adiabatic frequency change leaves the
    covariance untouched and only relabels the mode.
    """
    hot, cold = p.hot_reservoir(), p.cold_reservoir()
    A = gs.thermal(p.beta1, ModeSpec(p.omega1))
    B = A
    C = gs.relax_moments_analytic(B, hot, RELAX_GT / hot.gamma)
    D = gs.apply_squeeze(C, p.sq.inverse())
    A_closed = gs.relax_moments_analytic(D, cold, RELAX_GT / cold.gamma)
    return CycleStates(A, B, C, D, A_closed)


def verify_cycle_numeric(p: CycleParams) -> CycleReport:
    """Cycle report from energies of explicitly evolved states; raises if it
    departs from :func:`analyze_cycle` by more than 1e-8."""
    st = cycle_states(p)
    m1, m2 = ModeSpec(p.omega1), ModeSpec(p.omega2)
    E = gs.mean_energy
    W_AB = E(st.A, m1) - E(st.B, m2)
    Q_BC = E(st.C, m2) - E(st.B, m2)
    W_CD = E(st.C, m2) - E(st.D, m1)
    Q_DA = E(st.A_closed, m1) - E(st.D, m1)
    dA = gs.asymmetry(st.C, m2, p.sq.theta) - gs.asymmetry(st.B, m2, p.sq.theta)
    numeric = _report(p, W_AB, Q_BC, W_CD, Q_DA, dA)
    analytic = analyze_cycle(p)
    dev = report_deviation(numeric, analytic)
    closure = float(np.max(np.abs(st.A_closed.cov - st.A.cov)))
    if dev > NUMERIC_TOL or closure > NUMERIC_TOL:
        raise ConsistencyError(f"numeric cycle departs from closed form: energies {dev:.3e}, closure {closure:.3e}")
    return numeric


ENERGY_FIELDS = ("W_AB", "Q_BC", "W_CD", "Q_DA", "W_out", "DeltaA_BC", "Sigma_cyc")


def report_deviation(a: CycleReport, b: CycleReport) -> float:
    return max(abs(getattr(a, k) - getattr(b, k)) for k in ENERGY_FIELDS)


def fock_stroke_check(p: CycleParams, dim: int, gamma_t: float = 20.0) -> float:
    """Run the hot relaxation stroke through the Fock backend and return the
    largest moment deviation from the squeezed steady state."""
    from . import fock as fk

    hot = p.hot_reservoir()
    st = cycle_states(p)
    rho = fk.gaussian_to_fock(st.B, dim)
    out = fk.evolve(rho, fk.build_generator(dim, hot), gamma_t / hot.gamma)
    target = gs.relax_moments_analytic(st.B, hot, gamma_t / hot.gamma)
    return max(abs(x - y) for x, y in zip(fk.ladder_moments(out), gs.ladder_moments(target)))


# ---------------------------------------------------------------- sweeps


@dataclass
class PhaseDiagram:
    omega2: np.ndarray
    r: np.ndarray
    codes: np.ndarray  # shape (len(omega2), len(r))
    eta: np.ndarray
    eta_max: np.ndarray
    fields: dict

    HEADER = ("omega2", "r", "region", "eta")

    def regions(self) -> np.ndarray:
        return np.vectorize(lambda c: CODE_REGIONS[int(c)].value)(self.codes)

    def rows(self) -> list[tuple]:
        out = []
        for i, w in enumerate(self.omega2):
            for j, r in enumerate(self.r):
                e = self.eta[i, j]
                out.append((float(w), float(r), CODE_REGIONS[int(self.codes[i, j])].value, None if np.isnan(e) else float(e)))
        return out


def phase_diagram(
    beta1: float,
    beta2: float,
    omega2: Sequence[float],
    r: Sequence[float],
    omega1: float = 1.0,
) -> PhaseDiagram:
    """Regions and efficiencies on the (omega2, r) grid, omega2-major order."""
    CycleParams(beta1, beta2, omega1, float(np.min(omega2)))
    W2, R = np.meshgrid(np.asarray(omega2, float), np.asarray(r, float), indexing="ij")
    if np.any(R < 0):
        raise DomainError("squeezing must be >= 0")
    e = energetics(beta1, beta2, omega1, W2, R)
    codes = classify_codes(e["W_out"], e["Q_BC"], e["Q_DA"])
    eta, eta_max = efficiencies(beta1, beta2, R, e["W_out"], e["Q_BC"], e["Q_DA"], e["DeltaA_BC"], codes)
    return PhaseDiagram(np.asarray(omega2, float), np.asarray(r, float), codes, eta, eta_max, e)


FIG2_R = (0.0, 0.5, 0.7, 0.8, 0.9)


def fig2_rows(beta1=1.0, beta2=0.2, omega1=1.0, omega2=None, r_values=FIG2_R) -> tuple[tuple, list]:
    omega2 = np.linspace(1.0, 8.0, 351) if omega2 is None else np.asarray(omega2, float)
    header = ("omega2",) + tuple(f"W_out_r{r:g}" for r in r_values)
    cols = [energetics(beta1, beta2, omega1, omega2, r)["W_out"] for r in r_values]
    return header, [(float(w),) + tuple(float(c[i]) for c in cols) for i, w in enumerate(omega2)]


def fig4_rows(beta1=1.0, beta2=0.2, omega1=1.0, omega2=3.0, r=None) -> tuple[tuple, list]:
    r = np.linspace(0.0, 1.2, 241) if r is None else np.asarray(r, float)
    header = ("r", "eta", "eta_max", "eta_c", "eta_ht")
    rows = []
    for x in r:
        rep = analyze_cycle(CycleParams(beta1, beta2, omega1, omega2, SqueezeParams(float(x))))
        rows.append((float(x), rep.eta, rep.eta_max, rep.eta_c, rep.eta_ht))
    return header, rows
