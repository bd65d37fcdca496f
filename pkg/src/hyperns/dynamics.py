"""
Time integration of the projected equation

    du + [nu A^alpha u + B(u, u)] dt = A^-gamma dw

either directly or through the splitting u = v + z, where z is the exact OU
process and v solves the random (pathwise deterministic) PDE

    dv/dt + nu A^alpha v = -B(v + z, v + z).

Both routes use the exponential Euler step
``u <- e^{-nu A^alpha dt} (u - dt N(u)) + eta`` with the stochastic convolution
``eta`` sampled exactly (see :mod:`hyperns.stochastic`).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np

from .nonlinear import bilinear_B, pairing
from .spectral import (
    SpectralField,
    TorusConfig,
    _leray,
    divergence_residual,
    prolong,
    random_field,
    restrict,
    sobolev_norm,
)
from .stochastic import NoiseConfig, check_regularity_condition, ou_increment

__all__ = [
    "SolverConfig",
    "DiagnosticsRecord",
    "Trajectory",
    "BlowUpError",
    "HypothesisError",
    "step_direct",
    "step_v",
    "simulate",
    "evolve",
    "energy_balance_check",
    "energy_defect",
    "uniqueness_probe",
    "GronwallReport",
    "regularity_suite",
    "RegularityReport",
    "regime_flags",
    "smooth_initial",
    "sup_h1_difference",
    "states",
]

MODES = ("direct", "splitting", "deterministic")
BLOWUP_FACTOR = 1e12


class BlowUpError(RuntimeError):
    """Non-finite state or runaway H^1 norm; carries the partial trajectory."""

    def __init__(self, reason: str, t: float, norms: dict, trajectory: "Trajectory | None" = None):
        super().__init__(f"blow-up at t={t:g}: {reason}")
        self.reason = reason
        self.t = t
        self.norms = norms
        self.trajectory = trajectory

    def to_json(self) -> str:
        return json.dumps({"blowup": True, "reason": self.reason, "t": self.t,
                           "norms": {k: _finite(v) for k, v in self.norms.items()}})


class HypothesisError(ValueError):
    """Parameters outside the proven regime and no override given."""


def _finite(x):
    return x if math.isfinite(x) else str(x)


@dataclass(frozen=True)
class SolverConfig:
    nu: float = 1.0
    alpha: float = 1.25
    gamma: float = 0.76
    dt: float = 0.01
    T: float = 0.5
    seed: int = 0
    mode: str = "direct"
    torus: TorusConfig = field(default_factory=TorusConfig)
    theta_track: tuple = (0.0, 1.0, 2.0)
    # splitting only: Sobolev indices recorded for the v-part
    v_track: tuple = ()
    # Brownian sub-increments per step; keep dt / noise_substeps fixed across
    # a dt-refinement study to reuse one Wiener path
    noise_substeps: int = 1
    # time level of z seen by the v-step: "end" (z_{n+1}) or "start" (z_n)
    split_z: str = "end"
    snapshot_times: tuple = ()
    mask_radius: float | None = None
    v_energy: bool = False

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if self.alpha < 1:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.T >= self.dt:
            raise ValueError(f"T must be >= dt, got T={self.T}, dt={self.dt}")
        if abs(self.T / self.dt - round(self.T / self.dt)) > 1e-8 * self.T / self.dt:
            raise ValueError(f"T={self.T} is not a multiple of dt={self.dt}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.split_z not in ("start", "end"):
            raise ValueError(f"split_z must be 'start' or 'end', got {self.split_z!r}")
        if int(self.noise_substeps) != self.noise_substeps or self.noise_substeps < 1:
            raise ValueError(f"noise_substeps must be a positive integer, got {self.noise_substeps}")
        object.__setattr__(self, "theta_track", tuple(float(s) for s in self.theta_track))
        object.__setattr__(self, "v_track", tuple(float(s) for s in self.v_track))
        object.__setattr__(self, "snapshot_times", tuple(float(s) for s in self.snapshot_times))

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def noise(self) -> NoiseConfig:
        return NoiseConfig(self.gamma, self.seed, self.nu, self.alpha, self.mask_radius)

    @property
    def stochastic(self) -> bool:
        return self.mode != "deterministic"


def norm_key(s: float) -> str:
    return f"{s:g}"


@dataclass
class DiagnosticsRecord:
    t: float
    norms: dict
    energy_residual: float
    divergence_residual: float
    dissipation_integral: float
    noise_power: float = 0.0
    v_norms: dict = field(default_factory=dict)
    v_energy_residual: float = float("nan")

    def to_json(self) -> str:
        out = {
            "t": self.t,
            "norms": {k: _finite(v) for k, v in self.norms.items()},
            "energy_residual": _finite(self.energy_residual),
            "div_residual": _finite(self.divergence_residual),
            "dissipation_integral": _finite(self.dissipation_integral),
            "noise_power": _finite(self.noise_power),
        }
        if self.v_norms:
            out["v_norms"] = {k: _finite(v) for k, v in self.v_norms.items()}
        if math.isfinite(self.v_energy_residual):
            out["v_energy_residual"] = self.v_energy_residual
        return json.dumps(out)


@dataclass
class Trajectory:
    config: SolverConfig
    records: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)  # (t, SpectralField)
    final: SpectralField | None = None

    def series(self, key: str) -> np.ndarray:
        return np.array([r.norms[key] for r in self.records])

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    def to_ndjson(self) -> str:
        return "".join(r.to_json() + "\n" for r in self.records)


# ---------------------------------------------------------------------------
# single steps

def _decay(u: SpectralField, cfg: SolverConfig) -> np.ndarray:
    return np.exp(-cfg.nu * u.lattice.lam ** cfg.alpha * cfg.dt)[:, None]


def _noise(cfg: SolverConfig, torus: TorusConfig, step_index: int) -> SpectralField:
    return ou_increment(cfg.noise, torus, cfg.dt, step_index, cfg.noise_substeps)


def _lawson(u: SpectralField, forcing: SpectralField, cfg: SolverConfig) -> np.ndarray:
    return _decay(u, cfg) * (u.coeffs - cfg.dt * forcing.coeffs)


def step_direct(u: SpectralField, cfg: SolverConfig, step_index: int) -> SpectralField:
    """``e^{-nu A^alpha dt}(u - dt B(u, u)) + eta``; ``eta`` is omitted when deterministic."""
    c = _lawson(u, bilinear_B(u, u), cfg)
    if cfg.stochastic:
        c = c + _noise(cfg, u.torus, step_index).coeffs
    return SpectralField(c, u.torus)


def step_v(v: SpectralField, z: SpectralField, cfg: SolverConfig) -> SpectralField:
    """Exponential Euler step of ``dv/dt + nu A^alpha v = -B(v+z, v+z)``.

    The four bilinear terms ``B(v,v) + B(z,v) + B(v,z) + B(z,z)`` are
    evaluated together as ``B(v+z, v+z)``.
    """
    w = v + z
    return SpectralField(_lawson(v, bilinear_B(w, w), cfg), v.torus)


# ---------------------------------------------------------------------------
# trajectories

@dataclass
class State:
    n: int
    t: float
    u: SpectralField
    v: SpectralField | None = None
    z: SpectralField | None = None
    eta: SpectralField | None = None
    z_used: SpectralField | None = None  # z seen by the v-step that produced this state


def evolve(cfg: SolverConfig, u0: SpectralField) -> Iterator[State]:
    """Yield the state at every step, starting with ``t = 0``."""
    if u0.torus != cfg.torus:
        raise ValueError("u0 lives on a different torus/truncation than cfg.torus")
    torus = cfg.torus
    if cfg.mode == "splitting":
        v, z = u0, SpectralField.zeros(torus)
        yield State(0, 0.0, u0, v, z)
        decay = None
        for n in range(cfg.steps):
            eta = _noise(cfg, torus, n)
            if decay is None:
                decay = _decay(z, cfg)
            z_new = SpectralField(decay * z.coeffs + eta.coeffs, torus)
            z_used = z_new if cfg.split_z == "end" else z
            v = step_v(v, z_used, cfg)
            z = z_new
            yield State(n + 1, (n + 1) * cfg.dt, v + z, v, z, eta, z_used)
    else:
        u = u0
        yield State(0, 0.0, u)
        for n in range(cfg.steps):
            c = _lawson(u, bilinear_B(u, u), cfg)
            eta = None
            if cfg.stochastic:
                eta = _noise(cfg, torus, n)
                c = c + eta.coeffs
            u = SpectralField(c, torus)
            yield State(n + 1, (n + 1) * cfg.dt, u, eta=eta)


def _blowup_reason(norm1: float, ref1: float, coeffs: np.ndarray) -> str | None:
    if not np.all(np.isfinite(coeffs)):
        return "non-finite coefficients"
    if norm1 > BLOWUP_FACTOR * ref1:
        return f"|u|_1 exceeded {BLOWUP_FACTOR:g} x its initial value"
    return None


def simulate(cfg: SolverConfig, u0: SpectralField) -> Trajectory:
    """Advance ``u0`` to ``T`` recording diagnostics at every step.

    Raises :class:`BlowUpError` (with the partial trajectory attached) if the
    state becomes non-finite or ``|u|_1`` grows by more than 1e12.
    """
    traj = Trajectory(cfg)
    keys = {norm_key(s): s for s in cfg.theta_track}
    keys["alpha"] = cfg.alpha
    vkeys = {norm_key(s): s for s in cfg.v_track}
    snap_steps = {int(round(t / cfg.dt)) for t in cfg.snapshot_times}
    ref1 = sobolev_norm(u0, 1) or 1.0
    dt = cfg.dt

    prev = None
    diss = 0.0
    for st in evolve(cfg, u0):
        u = st.u
        norms = {k: sobolev_norm(u, s) for k, s in keys.items()}
        e0 = norms["0"] ** 2 if "0" in norms else sobolev_norm(u, 0) ** 2
        ea = norms["alpha"] ** 2
        v_norms = {k: sobolev_norm(st.v, s) for k, s in vkeys.items()} if st.v is not None else {}
        res, noise_pow, v_res = 0.0, 0.0, float("nan")
        if prev is not None:
            p_st, p_e0, p_ea = prev
            diss += dt * p_ea
            res = 0.5 * (e0 - p_e0) / dt + cfg.nu * p_ea
            if st.eta is not None:
                noise_pow = 0.5 * (e0 - sobolev_norm(u - st.eta, 0) ** 2) / dt
            if cfg.v_energy and st.v is not None:
                pv = p_st.v
                w = pv + st.z_used
                v_res = (0.5 * (sobolev_norm(st.v, 0) ** 2 - sobolev_norm(pv, 0) ** 2) / dt
                         + cfg.nu * sobolev_norm(pv, cfg.alpha) ** 2
                         + pairing(bilinear_B(w, st.z_used), pv))
        rec = DiagnosticsRecord(st.t, norms, res, divergence_residual(u), diss,
                                noise_pow, v_norms, v_res)
        reason = _blowup_reason(sobolev_norm(u, 1), ref1, u.coeffs)
        if reason:
            traj.records.append(rec)
            traj.final = u
            raise BlowUpError(reason, st.t, norms, traj)
        traj.records.append(rec)
        if st.n in snap_steps:
            traj.snapshots.append((st.t, u))
        prev = (st, e0, ea)
        traj.final = u
    return traj


def energy_balance_check(traj: Trajectory) -> float:
    """Largest energy-balance residual along a trajectory.

    Direct/deterministic runs use ``1/2 d|u|^2/dt + nu |u|_alpha^2`` with the
    noise work removed; splitting runs with ``v_energy`` use the v-balance
    including the forcing pairing ``<B(v+z, z), v>``.
    """
    recs = traj.records[1:]
    if not recs:
        return 0.0
    if traj.config.mode == "splitting" and traj.config.v_energy:
        return float(max(abs(r.v_energy_residual) for r in recs))
    return float(max(abs(r.energy_residual - r.noise_power) for r in recs))


def energy_defect(traj: Trajectory) -> float:
    """``|u(T)|^2 + 2 nu int_0^T |u|_alpha^2 dt - |u(0)|^2``.

    The time integral is the left-point sum kept in the records, so the
    defect equals ``2 dt`` times the sum of the per-step energy residuals.
    """
    first, last = traj.records[0], traj.records[-1]
    return (last.norms["0"] ** 2 + 2 * traj.config.nu * last.dissipation_integral
            - first.norms["0"] ** 2)


def sup_h1_difference(a: Trajectory | Sequence[SpectralField],
                      b: Trajectory | Sequence[SpectralField]) -> float:
    """``sup_t |u_a(t) - u_b(t)|_1`` for two equal-length state sequences.

    Fields on different lattices are compared after zero-padding the smaller.
    """
    best = 0.0
    for ua, ub in zip(a, b, strict=True):
        if ua.torus != ub.torus:
            if ua.lattice.size < ub.lattice.size:
                ua = prolong(ua, ub.torus)
            else:
                ub = prolong(ub, ua.torus)
        best = max(best, sobolev_norm(ua - ub, 1))
    return best


def states(cfg: SolverConfig, u0: SpectralField) -> list[SpectralField]:
    """All states ``u(t_n)``, ``n = 0..steps``."""
    return [st.u for st in evolve(cfg, u0)]


def smooth_initial(torus: TorusConfig, seed: int = 0, amplitude: float = 1.0,
                   decay: float = 1.0) -> SpectralField:
    """Random field with coefficients damped by ``exp(-decay |k|)``, ``|u|_1 = amplitude``.

    Built on the requested lattice from a shell-ordered stream, so the field
    on a smaller ball is the truncation of the field on a larger one.
    """
    lat = torus.lattice
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((len(lat.half), 2, 3))
    c = np.zeros((lat.size, 3), complex)
    c[lat.half] = (g[:, 0] + 1j * g[:, 1]) * np.exp(-decay * np.sqrt(lat.k2[lat.half]))[:, None]
    c[lat.neg[lat.half]] = np.conj(c[lat.half])
    u = SpectralField(_leray(c, lat), torus)
    return u * (amplitude / sobolev_norm(u, 1))


# ---------------------------------------------------------------------------
# pathwise uniqueness

@dataclass
class GronwallReport:
    t: np.ndarray
    diff_h1: np.ndarray          # |U(t)|_1
    exponent_integral: np.ndarray  # int_0^t |u1|_alpha^2 + |u2|_alpha^2 ds
    log_growth: np.ndarray       # log(|U(t)|_1^2 / |U(0)|_1^2)
    c_fit: float                 # least-squares slope of log_growth on exponent_integral
    c_fit_residual: float
    c_envelope: float            # smallest c with log_growth <= c * exponent_integral
    identical: bool              # both runs bitwise equal at every step

    def bound_holds(self, c: float, rtol: float = 1e-9) -> bool:
        """Does ``|U(t)|_1^2 <= |U(0)|_1^2 exp(c int ...)`` hold at every step?"""
        if self.diff_h1[0] == 0:
            return bool(np.all(self.diff_h1 == 0))
        ok = self.log_growth <= c * self.exponent_integral + rtol * (1 + np.abs(self.log_growth))
        return bool(np.all(ok))


def uniqueness_probe(cfg: SolverConfig, u0a: SpectralField, u0b: SpectralField,
                     cfg_b: SolverConfig | None = None) -> GronwallReport:
    """Run two initial data on one noise realization and fit the Gronwall exponent."""
    if cfg_b is not None:
        if cfg_b.seed != cfg.seed:
            raise ValueError(f"seed mismatch: {cfg.seed} vs {cfg_b.seed}; "
                             "both runs must share one noise realization")
        if cfg_b != cfg:
            raise ValueError("the two runs must use identical solver configurations")
    ts, dh1, integ = [], [], []
    identical = True
    acc, prev = 0.0, None
    for sa, sb in zip(evolve(cfg, u0a), evolve(cfg, u0b)):
        for st in (sa, sb):
            reason = _blowup_reason(sobolev_norm(st.u, 1), 1.0, st.u.coeffs)
            if reason and "non-finite" in reason:
                raise BlowUpError(reason, st.t, {"1": sobolev_norm(st.u, 1)})
        identical = identical and np.array_equal(sa.u.coeffs, sb.u.coeffs)
        ea = sobolev_norm(sa.u, cfg.alpha) ** 2 + sobolev_norm(sb.u, cfg.alpha) ** 2
        if prev is not None:
            acc += 0.5 * cfg.dt * (prev + ea)
        prev = ea
        ts.append(sa.t)
        dh1.append(sobolev_norm(sa.u - sb.u, 1))
        integ.append(acc)
    t, dh1, integ = np.array(ts), np.array(dh1), np.array(integ)
    if dh1[0] == 0:
        nan = float("nan")
        return GronwallReport(t, dh1, integ, np.zeros_like(t), nan, nan, nan, identical)
    with np.errstate(divide="ignore"):
        y = np.log(dh1 ** 2 / dh1[0] ** 2)
    x, yy = integ[1:], y[1:]
    c_fit = float(x @ yy / (x @ x))
    resid = float(np.sqrt(np.mean((yy - c_fit * x) ** 2)))
    c_env = float(np.max(yy / x))
    return GronwallReport(t, dh1, integ, y, c_fit, resid, c_env, identical)


# ---------------------------------------------------------------------------
# regularity suites

def regime_flags(alpha: float, gamma: float, s: int) -> dict:
    """Which of the well-posedness results cover ``(alpha, gamma)`` at level ``s``.

    ``violations`` lists hypotheses that fail for the existence result at
    this level; ``uniqueness`` is False where only existence is known.
    """
    if s not in (0, 1, 2):
        raise ValueError(f"s must be 0, 1 or 2, got {s}")
    violations = []
    if alpha < 1.25:
        violations.append(f"alpha={alpha:g} < 5/4")
    if s in (0, 1):
        if not gamma > 0.75:
            violations.append(f"gamma={gamma:g} <= 3/4")
    elif not check_regularity_condition(alpha, gamma, s):
        violations.append(f"alpha + 2 gamma = {alpha + 2 * gamma:g} <= s + 3/2 = {s + 1.5:g}")
    uniqueness = not violations and (s != 0 or alpha > 1.5)
    return {"existence": not violations, "uniqueness": uniqueness, "violations": violations}


@dataclass
class RegularityReport:
    s: int
    alpha: float
    gamma: float
    levels: list
    seeds: list
    flags: dict
    # quantity -> array (level, seed)
    quantities: dict
    blowups: list

    @property
    def bounded(self) -> bool:
        return all(np.all(np.isfinite(q)) for q in self.quantities.values())

    def refinement_ratios(self) -> dict:
        """Per quantity, ratio level[i+1]/level[i] for every seed, shape (levels-1, seeds)."""
        return {name: q[1:] / q[:-1] for name, q in self.quantities.items()}

    def max_change(self) -> dict:
        out = {}
        for name, r in self.refinement_ratios().items():
            with np.errstate(divide="ignore", invalid="ignore"):
                out[name] = float(np.max(np.maximum(r, 1 / r)))
        return out

    @property
    def stable(self) -> bool:
        return self.bounded and all(v < 2 for v in self.max_change().values())

    def summary(self) -> str:
        lines = [f"s={self.s} alpha={self.alpha:g} gamma={self.gamma:g} "
                 f"existence={self.flags['existence']} uniqueness={self.flags['uniqueness']}"]
        for name, q in self.quantities.items():
            means = ", ".join(f"n={n}: {m:.4g}" for n, m in zip(self.levels, q.mean(axis=1)))
            lines.append(f"  {name}: {means}; max change {self.max_change()[name]:.3f}")
        return "\n".join(lines)


def regularity_suite(cfg: SolverConfig, s: int, *, seeds: Sequence[int] = range(8),
                     levels: Sequence[int] = (4, 8), u0: SpectralField | None = None,
                     override: bool = False) -> RegularityReport:
    """Norm tracking for the H^s theory over seeds and Galerkin levels.

    Runs in splitting mode and reports, per level and seed, ``sup_t |u|_s``,
    ``int |v|_{s+alpha}^2 dt`` and ``int |u|_alpha^{2 alpha/(alpha-1)} dt``.
    ``u0`` is given on the largest level and restricted to the others.
    """
    flags = regime_flags(cfg.alpha, cfg.gamma, s)
    if flags["violations"] and not override:
        raise HypothesisError(f"s={s} suite outside the proven regime: "
                              + "; ".join(flags["violations"]) + " (override required)")
    levels = sorted(levels)
    top = cfg.torus.with_trunc(levels[-1])
    if u0 is None:
        u0 = smooth_initial(top, seed=12345)
    elif u0.torus.trunc_n != levels[-1]:
        raise ValueError("u0 must be given on the largest level")
    p = 2 * cfg.alpha / (cfg.alpha - 1) if cfg.alpha > 1 else float("nan")
    names = ("sup_u_s", "int_v_s_plus_alpha_sq", "int_u_alpha_interp")
    q = {k: np.full((len(levels), len(seeds)), np.nan) for k in names}
    blowups = []
    for i, n in enumerate(levels):
        torus = cfg.torus.with_trunc(n)
        for j, seed in enumerate(seeds):
            c = replace(cfg, torus=torus, seed=seed, mode="splitting",
                        theta_track=(0.0, 1.0, float(s)), v_track=(s + cfg.alpha,),
                        snapshot_times=())
            try:
                tr = simulate(c, restrict(u0, torus))
            except BlowUpError as err:
                blowups.append({"n": n, "seed": seed, "t": err.t, "reason": err.reason})
                for k in names:
                    q[k][i, j] = np.inf
                continue
            t = tr.times
            q["sup_u_s"][i, j] = tr.series(norm_key(float(s))).max()
            vs = np.array([r.v_norms[norm_key(s + cfg.alpha)] for r in tr.records])
            q["int_v_s_plus_alpha_sq"][i, j] = np.trapezoid(vs ** 2, t)
            q["int_u_alpha_interp"][i, j] = np.trapezoid(tr.series("alpha") ** p, t)
    return RegularityReport(s, cfg.alpha, cfg.gamma, list(levels), list(seeds), flags, q, blowups)
