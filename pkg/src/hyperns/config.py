"""
Run configuration files: INI-style sections, one file per run.

Every section maps onto a small dataclass; ``dumps(loads(text))`` reproduces
an equal :class:`RunConfig`.  Floats are written with ``repr`` so the round
trip is exact.
"""

from __future__ import annotations

import configparser
import dataclasses
import types
import typing
from dataclasses import dataclass, field

import numpy as np

from .dynamics import SolverConfig, smooth_initial
from .spectral import SpectralField, TorusConfig

__all__ = [
    "ConfigError",
    "InitialSpec",
    "RunOptions",
    "ConvergenceSpec",
    "UniquenessSpec",
    "OUSpec",
    "InequalitySpec",
    "SweepSpec",
    "RunConfig",
    "loads",
    "dumps",
    "load",
]


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name
        self.message = message


@dataclass(frozen=True)
class InitialSpec:
    kind: str = "smooth"  # zero | smooth | single_mode | file
    amplitude: float = 1.0
    decay: float = 1.0
    seed: int = 12345
    k: tuple[int, ...] = (1, 0, 0)
    coeff: tuple[float, ...] = (0.0, 1.0, 0.0)
    path: str = ""

    def build(self, torus: TorusConfig) -> SpectralField:
        if self.kind == "zero":
            return SpectralField.zeros(torus)
        if self.kind == "smooth":
            return smooth_initial(torus, seed=self.seed, amplitude=self.amplitude,
                                  decay=self.decay)
        if self.kind == "single_mode":
            return SpectralField.from_modes(torus, {tuple(self.k): np.array(self.coeff)})
        if self.kind == "file":
            from .snapshot import load
            u = load(self.path, torus.grid_N)
            if u.torus != torus:
                raise ConfigError("initial.path", "snapshot lattice does not match [torus]")
            return u
        raise ConfigError("initial.kind", f"unknown kind {self.kind!r}")


@dataclass(frozen=True)
class RunOptions:
    override_regularity: bool = False
    max_modes: int = 200_000
    dump_noise: bool = False


@dataclass(frozen=True)
class ConvergenceSpec:
    levels: tuple[int, ...] = (4, 8, 16)
    dt_halvings: int = 3


@dataclass(frozen=True)
class UniquenessSpec:
    epsilons: tuple[float, ...] = (0.0, 1e-8, 0.5)
    perturb_k: tuple[int, ...] = (1, 0, 0)


@dataclass(frozen=True)
class OUSpec:
    ensemble: int = 1000
    theta: float = 1.25
    modes: int = 8
    T: float | None = None  # horizon for the ensemble; defaults to solver T, may be 0


@dataclass(frozen=True)
class InequalitySpec:
    ids: tuple[str, ...] = ("Bcon4", "BconA", "BconA2", "B1_m1", "B1_m2")
    trials: int = 10_000
    alpha: float = 1.25


@dataclass(frozen=True)
class SweepSpec:
    alphas: tuple[float, ...] = (1.1, 1.25, 1.5, 1.75)
    s_levels: tuple[int, ...] = (1,)
    seeds: int = 2
    levels: tuple[int, ...] = (4, 8)


@dataclass(frozen=True)
class RunConfig:
    solver: SolverConfig = field(default_factory=SolverConfig)
    initial: InitialSpec = field(default_factory=InitialSpec)
    run: RunOptions = field(default_factory=RunOptions)
    convergence: ConvergenceSpec = field(default_factory=ConvergenceSpec)
    uniqueness: UniquenessSpec = field(default_factory=UniquenessSpec)
    ou: OUSpec = field(default_factory=OUSpec)
    inequalities: InequalitySpec = field(default_factory=InequalitySpec)
    sweep: SweepSpec = field(default_factory=SweepSpec)


# ---------------------------------------------------------------------------
# value conversion

_SOLVER_TYPES = {
    "nu": float, "alpha": float, "gamma": float, "dt": float, "T": float, "seed": int,
    "mode": str, "theta_track": tuple[float, ...], "v_track": tuple[float, ...],
    "noise_substeps": int, "split_z": str, "snapshot_times": tuple[float, ...],
    "mask_radius": typing.Optional[float], "v_energy": bool,
}
_TORUS_TYPES = {"period_L": float, "trunc_n": int, "grid_N": int}


def _parse(tp, text: str):
    text = text.strip()
    origin = typing.get_origin(tp)
    if origin is tuple:
        (inner, _) = typing.get_args(tp)
        return tuple(_parse(inner, t) for t in text.split(",") if t.strip())
    if origin in (typing.Union, types.UnionType):
        if text.lower() in ("", "none"):
            return None
        return _parse(typing.get_args(tp)[0], text)
    if tp is bool:
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if tp is int:
        return int(text)
    if tp is float:
        return float(text)
    return text


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    return str(value)


def _hints(cls) -> dict:
    return typing.get_type_hints(cls)


_SECTIONS = ("initial", "run", "convergence", "uniqueness", "ou", "inequalities", "sweep")


def _first_word(msg: str) -> str:
    return msg.split()[0].split("=")[0] if msg else "?"


def from_mapping(data: dict) -> RunConfig:
    """Build a :class:`RunConfig` from ``{section: {key: text}}``."""
    torus_kw = {}
    for key, text in data.get("torus", {}).items():
        if key not in _TORUS_TYPES:
            raise ConfigError(f"torus.{key}", "unknown key")
        try:
            torus_kw[key] = _parse(_TORUS_TYPES[key], text)
        except ValueError as err:
            raise ConfigError(f"torus.{key}", str(err)) from None
    try:
        torus = TorusConfig(**torus_kw)
    except ValueError as err:
        raise ConfigError(_first_word(str(err)), str(err)) from None

    solver_kw = {}
    for key, text in data.get("solver", {}).items():
        if key not in _SOLVER_TYPES:
            raise ConfigError(f"solver.{key}", "unknown key")
        try:
            solver_kw[key] = _parse(_SOLVER_TYPES[key], text)
        except ValueError as err:
            raise ConfigError(key, str(err)) from None
    try:
        solver = SolverConfig(torus=torus, **solver_kw)
    except ValueError as err:
        raise ConfigError(_first_word(str(err)), str(err)) from None

    parts = {}
    for name in _SECTIONS:
        cls = _hints(RunConfig)[name]
        hints = _hints(cls)
        kw = {}
        for key, text in data.get(name, {}).items():
            if key not in hints:
                raise ConfigError(f"{name}.{key}", "unknown key")
            try:
                kw[key] = _parse(hints[key], text)
            except ValueError as err:
                raise ConfigError(f"{name}.{key}", str(err)) from None
        parts[name] = cls(**kw)
    unknown = set(data) - {"torus", "solver", *_SECTIONS, "DEFAULT"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown section")
    return RunConfig(solver=solver, **parts)


def to_mapping(cfg: RunConfig) -> dict:
    s = cfg.solver
    out = {
        "torus": {k: _format(getattr(s.torus, k)) for k in _TORUS_TYPES},
        "solver": {k: _format(getattr(s, k)) for k in _SOLVER_TYPES},
    }
    for name in _SECTIONS:
        part = getattr(cfg, name)
        out[name] = {f.name: _format(getattr(part, f.name)) for f in dataclasses.fields(part)}
    return out


def loads(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keys are case sensitive (T vs t)
    try:
        cp.read_string(text)
    except configparser.Error as err:
        raise ConfigError("file", str(err).splitlines()[0]) from None
    return from_mapping({sec: dict(cp.items(sec)) for sec in cp.sections()})


def dumps(cfg: RunConfig) -> str:
    lines = []
    for sec, kv in to_mapping(cfg).items():
        lines.append(f"[{sec}]")
        lines.extend(f"{k} = {v}" for k, v in kv.items())
        lines.append("")
    return "\n".join(lines)


def load(path) -> RunConfig:
    with open(path) as fh:
        return loads(fh.read())


def with_overrides(cfg: RunConfig, **solver_overrides) -> RunConfig:
    """Replace solver fields, validating like a freshly parsed file."""
    kw = {k: v for k, v in solver_overrides.items() if v is not None}
    if not kw:
        return cfg
    try:
        solver = dataclasses.replace(cfg.solver, **kw)
    except ValueError as err:
        raise ConfigError(_first_word(str(err)), str(err)) from None
    return dataclasses.replace(cfg, solver=solver)
