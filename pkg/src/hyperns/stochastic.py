"""
Additive noise A^-gamma dw and the linear stochastic Stokes (OU) flow.

Conventions
-----------
Before projection every real coordinate of a mode (3 components, real and
imaginary part) is driven by an independent standard Brownian motion.  The
Leray projector then keeps a rank-2 subspace, so the real part of an
increment ``xi_k`` has covariance ``dt lambda^-2gamma P_k`` with trace
``2 dt lambda^-2gamma`` (same for the imaginary part).

Hermitian symmetry is imposed by sampling the lexicographically positive
half of the lattice and filling ``-k`` with the conjugate.  The lattice never
contains ``k = 0``, so there are no self-conjugate modes to special-case.

Randomness for step ``s`` comes from ``default_rng([seed, s])`` and is drawn
in the shell order of the lattice; a smaller ball consumes a prefix of the
same stream, so Galerkin levels share the noise on their common modes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .seeding import derive_seed
from .spectral import SpectralField, TorusConfig, _leray, lattice_for, sobolev_norm

__all__ = [
    "NoiseConfig",
    "NoiseIncrement",
    "check_regularity_condition",
    "sample_increment",
    "ou_increment",
    "ou_exact_step",
    "ou_mode_variance",
    "ou_path_norm",
    "RegularityWarning",
    "OUEnsemble",
    "ou_ensemble",
]


class RegularityWarning(UserWarning):
    """Run requested outside the parameter range where z is H^theta-continuous."""


@dataclass(frozen=True)
class NoiseConfig:
    gamma: float
    seed: int
    nu: float
    alpha: float
    mask_radius: float | None = None  # force only modes with |k| <= mask_radius

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")


@dataclass(frozen=True)
class NoiseIncrement:
    field: SpectralField
    dt: float


def check_regularity_condition(alpha: float, gamma: float, theta: float) -> bool:
    """True iff ``alpha + 2 gamma > theta + 3/2`` (strict)."""
    return alpha + 2 * gamma > theta + 1.5


def _standard_draw(torus: TorusConfig, seed: int, step_index: int) -> np.ndarray:
    """Projected complex Gaussian on the full lattice, unit variance per real coordinate."""
    lat = lattice_for(torus)
    rng = np.random.default_rng([int(seed), int(step_index)])
    g = rng.standard_normal((len(lat.half), 2, 3))
    c = np.zeros((lat.size, 3), complex)
    c[lat.half] = g[:, 0] + 1j * g[:, 1]
    c = _leray(c, lat)
    c[lat.neg[lat.half]] = np.conj(c[lat.half])
    return c


def _mask(cfg: NoiseConfig, torus: TorusConfig) -> np.ndarray | None:
    if cfg.mask_radius is None:
        return None
    return lattice_for(torus).k2 <= cfg.mask_radius ** 2


def sample_increment(cfg: NoiseConfig, torus: TorusConfig, dt: float,
                     step_index: int) -> NoiseIncrement:
    """One sample of ``A^-gamma (w(t + dt) - w(t))`` on the retained lattice."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    lat = lattice_for(torus)
    c = _standard_draw(torus, cfg.seed, step_index)
    scale = np.sqrt(dt) * lat.lam ** (-cfg.gamma)
    m = _mask(cfg, torus)
    if m is not None:
        scale = scale * m
    return NoiseIncrement(SpectralField(c * scale[:, None], torus), dt)


def ou_mode_variance(cfg: NoiseConfig, lam, t: float):
    """Variance per real coordinate of an OU mode started at 0, after time ``t``.

    ``lambda^-2gamma (1 - exp(-2 nu lambda^alpha t)) / (2 nu lambda^alpha)``.
    """
    lam = np.asarray(lam, dtype=float)
    a = cfg.nu * lam ** cfg.alpha
    return lam ** (-2 * cfg.gamma) * -np.expm1(-2 * a * t) / (2 * a)


def ou_increment(cfg: NoiseConfig, torus: TorusConfig, dt: float, step_index: int,
                 substeps: int = 1) -> SpectralField:
    """Stochastic convolution ``int_t^{t+dt} e^{-nu A^alpha (t+dt-s)} A^-gamma dw(s)``.

    With ``substeps = r`` the interval is split into ``r`` pieces whose draws
    are keyed by the fine step indices ``step_index * r + j``.  Runs at
    ``dt / 2`` with ``2 r`` substeps therefore see the same Brownian path.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    lat = lattice_for(torus)
    h = dt / substeps
    a = cfg.nu * lat.lam ** cfg.alpha
    sd = np.sqrt(ou_mode_variance(cfg, lat.lam, h))
    m = _mask(cfg, torus)
    if m is not None:
        sd = sd * m
    acc = np.zeros((lat.size, 3), complex)
    decay_h = np.exp(-a * h)
    for j in range(substeps):
        eta = _standard_draw(torus, cfg.seed, step_index * substeps + j) * sd[:, None]
        acc = acc * decay_h[:, None] + eta
    return SpectralField(acc, torus)


def ou_exact_step(z: SpectralField, cfg: NoiseConfig, dt: float, step_index: int,
                  substeps: int = 1) -> SpectralField:
    """Exact transition ``z <- e^{-nu lambda^alpha dt} z + eta`` of every OU mode."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    lat = z.lattice
    decay = np.exp(-cfg.nu * lat.lam ** cfg.alpha * dt)
    eta = ou_increment(cfg, z.torus, dt, step_index, substeps)
    return SpectralField(z.coeffs * decay[:, None] + eta.coeffs, z.torus)


def ou_path_norm(cfg: NoiseConfig, torus: TorusConfig, T: float, dt: float, theta: float,
                 *, allow_irregular: bool = False) -> float:
    """``sup_t |z(t)|_theta`` along an exact OU path from ``z(0) = 0``.

    Outside ``alpha + 2 gamma > theta + 3/2`` the sup-norm is not expected to
    stay bounded as the lattice grows; such runs need ``allow_irregular``.
    """
    if not check_regularity_condition(cfg.alpha, cfg.gamma, theta):
        msg = (f"alpha + 2 gamma = {cfg.alpha + 2 * cfg.gamma:g} <= theta + 3/2 = "
               f"{theta + 1.5:g}")
        if not allow_irregular:
            raise ValueError(msg + "; pass allow_irregular=True to run anyway")
        warnings.warn(msg, RegularityWarning, stacklevel=2)
    steps = int(round(T / dt)) if T > 0 else 0
    z = SpectralField.zeros(torus)
    best = 0.0
    for s in range(steps):
        z = ou_exact_step(z, cfg, dt, s)
        best = max(best, sobolev_norm(z, theta))
    return best


@dataclass
class OUEnsemble:
    final: np.ndarray      # (members, M, 3) coefficients of z(T)
    sup_norms: np.ndarray  # (members,) sup_t |z(t)|_theta, NaN when theta is None
    member_seeds: list


def ou_ensemble(cfg: NoiseConfig, torus: TorusConfig, T: float, dt: float, members: int,
                theta: float | None = None, z0: SpectralField | None = None) -> OUEnsemble:
    """Independent exact OU paths; member ``i`` uses seed ``derive_seed(cfg.seed, i)``."""
    steps = int(round(T / dt)) if T > 0 else 0
    lat = lattice_for(torus)
    final = np.zeros((members, lat.size, 3), complex)
    sups = np.full(members, np.nan if theta is None else 0.0)
    seeds = [derive_seed(cfg.seed, i) for i in range(members)]
    for i, sd in enumerate(seeds):
        c = replace(cfg, seed=sd)
        z = z0 if z0 is not None else SpectralField.zeros(torus)
        if theta is not None:
            sups[i] = sobolev_norm(z, theta)
        for s in range(steps):
            z = ou_exact_step(z, c, dt, s)
            if theta is not None:
                sups[i] = max(sups[i], sobolev_norm(z, theta))
        final[i] = z.coeffs
    return OUEnsemble(final, sups, seeds)
