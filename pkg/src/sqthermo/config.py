"""Run configurations for the command-line front end.

Each command reads one JSON document.  Loading is strict: unknown keys and
ill-typed values raise :class:`ConfigError` naming the offending field path,
and every physical parameter is validated before any computation starts.
"""

from __future__ import annotations

import dataclasses
import json
import math
import typing
from dataclasses import dataclass, field
from pathlib import Path

from . import gaussian as gs
from .params import DomainError, ReservoirSpec, SqueezeParams

FORMATS = ("csv", "json")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path or '<root>'}: {message}")
        self.path = path


def _check_number(path: str, value, kind):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if kind is int:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return int(value)
    if not math.isfinite(value):
        raise ConfigError(path, f"expected a finite number, got {value!r}")
    return float(value)


def _coerce(path: str, value, tp):
    origin = typing.get_origin(tp)
    if origin is typing.Union or str(origin) == "<class 'types.UnionType'>":
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if value is None:
            return None
        return _coerce(path, value, args[0])
    if dataclasses.is_dataclass(tp):
        return load_dataclass(tp, value, path)
    if origin in (list, tuple):
        if not isinstance(value, list):
            raise ConfigError(path, f"expected a list, got {value!r}")
        (inner,) = typing.get_args(tp)[:1]
        return [_coerce(f"{path}[{i}]", v, inner) for i, v in enumerate(value)]
    if tp in (int, float):
        return _check_number(path, value, tp)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected true/false, got {value!r}")
        return value
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    raise TypeError(f"unsupported config type {tp}")


def load_dataclass(cls, data, path: str = ""):
    if not isinstance(data, dict):
        raise ConfigError(path, f"expected an object, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}" if path else unknown[0], "unknown key")
    kwargs = {}
    for name in names & set(data):
        sub = f"{path}.{name}" if path else name
        kwargs[name] = _coerce(sub, data[name], hints[name])
    try:
        obj = cls(**kwargs)
    except ConfigError:
        raise
    except (DomainError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from exc
    validate = getattr(obj, "validate", None)
    if validate is not None:
        try:
            validate()
        except ConfigError as exc:
            raise ConfigError(f"{path}.{exc.path}" if path else exc.path, str(exc).split(": ", 1)[-1]) from exc
        except (DomainError, ValueError) as exc:
            raise ConfigError(path, str(exc)) from exc
    return obj


def to_dict(obj) -> dict:
    return dataclasses.asdict(obj)


def _positive(name: str, v: float):
    if not v > 0:
        raise ConfigError(name, f"must be positive, got {v}")


# ---------------------------------------------------------------- building blocks


@dataclass
class ReservoirConfig:
    beta: float = 1.0
    omega: float = 1.0
    r: float = 0.0
    theta: float = 0.0
    gamma: float = 1.0

    def spec(self) -> ReservoirSpec:
        return ReservoirSpec(self.beta, self.omega, SqueezeParams(self.r, self.theta), self.gamma)

    def validate(self):
        self.spec()


INITIAL_KINDS = ("gaussian", "fock", "illustrative")


@dataclass
class InitialConfig:
    """Initial state: 'gaussian' is D(alpha) S(r, theta) applied to a thermal
    state of occupation n_th; 'fock' is the number state |n>; 'illustrative'
    keeps only the number-basis populations of the reservoir's steady state."""

    kind: str = "gaussian"
    n_th: float = 0.0
    r: float = 0.0
    theta: float = 0.0
    alpha_re: float = 0.0
    alpha_im: float = 0.0
    n: int = 0

    def validate(self):
        if self.kind not in INITIAL_KINDS:
            raise ConfigError("kind", f"must be one of {INITIAL_KINDS}, got {self.kind!r}")
        if self.n_th < 0:
            raise ConfigError("n_th", f"must be >= 0, got {self.n_th}")
        if self.n < 0:
            raise ConfigError("n", f"must be >= 0, got {self.n}")
        SqueezeParams(self.r, self.theta)

    def gaussian(self) -> gs.GaussianState | None:
        if self.kind != "gaussian":
            return None
        state = gs.apply_squeeze(gs.thermal_from_occupation(self.n_th), SqueezeParams(self.r, self.theta))
        return gs.displace(state, complex(self.alpha_re, self.alpha_im))


@dataclass
class UnitaryConfig:
    """Gaussian unitary D(alpha) R(phase) S(r, theta); ``unsqueeze`` selects
    the inverse of the reservoir squeezing instead."""

    unsqueeze: bool = False
    r: float = 0.0
    theta: float = 0.0
    phase: float = 0.0
    alpha_re: float = 0.0
    alpha_im: float = 0.0

    def validate(self):
        SqueezeParams(self.r, self.theta)


# ---------------------------------------------------------------- commands


@dataclass
class CommonConfig:
    out: str = "out"
    seed: int = 0
    format: str = "csv"
    threads: int = 1

    def validate(self):
        if self.format not in FORMATS:
            raise ConfigError("format", f"must be one of {FORMATS}, got {self.format!r}")
        if self.threads < 1:
            raise ConfigError("threads", f"must be >= 1, got {self.threads}")
        if self.seed < 0:
            raise ConfigError("seed", f"must be >= 0, got {self.seed}")


@dataclass
class RelaxConfig(CommonConfig):
    reservoir: ReservoirConfig = field(default_factory=lambda: ReservoirConfig(r=0.5, theta=0.0))
    initial: InitialConfig = field(default_factory=InitialConfig)
    t_final: float = 5.0
    n_samples: int = 201
    dim: int | None = None
    dt_max: float | None = None

    def validate(self):
        CommonConfig.validate(self)
        _positive("t_final", self.t_final)
        if self.n_samples < 3:
            raise ConfigError("n_samples", "need at least 3 samples")
        if self.dim is not None and self.dim < 2:
            raise ConfigError("dim", f"must be >= 2, got {self.dim}")
        if self.dt_max is not None:
            _positive("dt_max", self.dt_max)


@dataclass
class CycleConfig(CommonConfig):
    beta1: float = 1.0
    beta2: float = 0.2
    omega1: float = 1.0
    omega2: float = 3.0
    r: float = 0.5
    theta: float = 0.0
    fock_dim: int | None = None

    def validate(self):
        CommonConfig.validate(self)
        self.params()
        if self.fock_dim is not None and self.fock_dim < 2:
            raise ConfigError("fock_dim", f"must be >= 2, got {self.fock_dim}")

    def params(self):
        from .otto import CycleParams

        return CycleParams(self.beta1, self.beta2, self.omega1, self.omega2, SqueezeParams(self.r, self.theta))


@dataclass
class PhaseDiagramConfig(CommonConfig):
    beta1: float = 1.0
    beta2: float = 0.2
    omega1: float = 1.0
    omega2_min: float = 1.0
    omega2_max: float = 8.0
    n_omega2: int = 200
    r_min: float = 0.0
    r_max: float = 1.5
    n_r: int = 200

    def validate(self):
        from .otto import CycleParams

        CommonConfig.validate(self)
        CycleParams(self.beta1, self.beta2, self.omega1, self.omega2_min)
        if self.omega2_max < self.omega2_min:
            raise ConfigError("omega2_max", "must be >= omega2_min")
        if not 0 <= self.r_min <= self.r_max:
            raise ConfigError("r_max", "need 0 <= r_min <= r_max")
        for name in ("n_omega2", "n_r"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be >= 1")


@dataclass
class FiguresConfig(CommonConfig):
    beta1: float = 1.0
    beta2: float = 0.2
    omega1: float = 1.0
    fig2_omega2_max: float = 8.0
    fig2_points: int = 351
    fig3_points: int = 200
    fig4_omega2: float = 3.0
    fig4_points: int = 241

    def validate(self):
        from .otto import CycleParams

        CommonConfig.validate(self)
        CycleParams(self.beta1, self.beta2, self.omega1, self.fig4_omega2)
        if self.fig2_omega2_max < self.omega1:
            raise ConfigError("fig2_omega2_max", "must be >= omega1")
        for name in ("fig2_points", "fig3_points", "fig4_points"):
            if getattr(self, name) < 2:
                raise ConfigError(name, "must be >= 2")


@dataclass
class CollideConfig(CommonConfig):
    ancilla: ReservoirConfig = field(default_factory=lambda: ReservoirConfig(r=0.5))
    initial: InitialConfig = field(default_factory=InitialConfig)
    g: float = 1.0
    tau: float = 0.1
    rate: float = 1.0
    n_collisions: int = 500
    n_traj: int = 256
    gamma_t_final: float = 5.0
    n_samples: int = 51
    angles: list[float] = field(default_factory=lambda: [0.1, 0.05, 0.025])
    limit_check: bool = True

    def validate(self):
        CommonConfig.validate(self)
        if self.initial.kind != "gaussian":
            raise ConfigError("initial.kind", "the collisional model needs a Gaussian initial state")
        self.collision_config()
        if self.n_traj < 2:
            raise ConfigError("n_traj", "must be >= 2")
        _positive("gamma_t_final", self.gamma_t_final)
        if self.n_samples < 3:
            raise ConfigError("n_samples", "must be >= 3")
        for i, a in enumerate(self.angles):
            if not 0 < a <= 0.1:
                raise ConfigError(f"angles[{i}]", f"must lie in (0, 0.1], got {a}")

    def collision_config(self):
        from .collisional import CollisionConfig

        return CollisionConfig(self.g, self.tau, self.rate, self.n_collisions, self.seed, self.ancilla.spec())


@dataclass
class SingleReservoirConfig(CommonConfig):
    reservoir: ReservoirConfig = field(default_factory=lambda: ReservoirConfig(r=0.5))
    unitary: UnitaryConfig = field(default_factory=lambda: UnitaryConfig(unsqueeze=True))
    t_final: float = 10.0
    n_samples: int = 401

    def validate(self):
        CommonConfig.validate(self)
        _positive("t_final", self.t_final)
        if self.n_samples < 3:
            raise ConfigError("n_samples", "must be >= 3")


COMMANDS = {
    "relax": RelaxConfig,
    "cycle": CycleConfig,
    "phase-diagram": PhaseDiagramConfig,
    "figures": FiguresConfig,
    "collide": CollideConfig,
    "single-reservoir": SingleReservoirConfig,
}


def load_config(command: str, path: str | Path | None, overrides: dict | None = None):
    cls = COMMANDS[command]
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError("--config", f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("", "config must be a JSON object")
    data = dict(data)
    for k, v in (overrides or {}).items():
        if v is not None:
            data[k] = v
    return load_dataclass(cls, data)
