"""Parameter records shared by every backend."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

TWO_PI = 2.0 * math.pi


class DomainError(ValueError):
    """A parameter lies outside the physical domain of an operation."""


class ConsistencyError(RuntimeError):
    """Two routes to the same quantity disagree beyond tolerance."""


def thermal_occupation(beta: float, omega: float) -> float:
    """Bose-Einstein occupation 1 / (exp(beta * omega) - 1)."""
    if beta <= 0 or omega <= 0:
        raise DomainError(f"need beta > 0 and omega > 0, got beta={beta}, omega={omega}")
    return 1.0 / math.expm1(beta * omega)


@dataclass(frozen=True)
class ModeSpec:
    omega: float = 1.0
    label: str = ""

    def __post_init__(self):
        if not self.omega > 0:
            raise DomainError(f"mode frequency must be positive, got {self.omega}")


@dataclass(frozen=True)
class SqueezeParams:
    """Squeezing magnitude r >= 0 and phase theta, wrapped into [0, 2 pi)."""

    r: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if not self.r >= 0:
            raise DomainError(f"squeezing r must be >= 0, got {self.r}")
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)

    def inverse(self) -> "SqueezeParams":
        # S(r, theta + pi) = S(r, theta)^dagger
        return SqueezeParams(self.r, self.theta + math.pi)


@dataclass(frozen=True)
class ReservoirSpec:
    """Squeezed thermal reservoir seen by a mode resonant at ``omega``.

    ``n_th``, ``N`` and ``M`` are the reservoir moments <b^dag b> of the
    unsqueezed bath, <b^dag b> and <b^2> of the squeezed one.
    """

    beta: float
    omega: float = 1.0
    sq: SqueezeParams = field(default_factory=SqueezeParams)
    gamma: float = 1.0

    def __post_init__(self):
        for name in ("beta", "omega", "gamma"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"reservoir {name} must be positive and finite, got {value}")

    @property
    def r(self) -> float:
        return self.sq.r

    @property
    def theta(self) -> float:
        return self.sq.theta

    @property
    def n_th(self) -> float:
        return thermal_occupation(self.beta, self.omega)

    @property
    def N(self) -> float:
        r = self.sq.r
        return self.n_th * math.cosh(2 * r) + math.sinh(r) ** 2

    @property
    def M(self) -> complex:
        r = self.sq.r
        return -math.sinh(r) * math.cosh(r) * (2 * self.n_th + 1) * complex(
            math.cos(self.theta), math.sin(self.theta)
        )

    def mode(self) -> ModeSpec:
        return ModeSpec(self.omega)
