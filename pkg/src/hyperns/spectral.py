"""
Fourier calculus on the periodic box [0, L]^3.

Fields are stored as complex coefficients over a truncated wavevector
lattice (the Euclidean ball 0 < |k| <= n), with

    u(x) = sum_k c(k) exp(i kappa . x),   kappa = 2 pi k / L.

Every Sobolev norm is the plain lattice sum sum_k lambda(k)^s |c(k)|^2 with
lambda = |kappa|^2; the constant L^3 from Parseval is dropped everywhere.

Lattice modes are ordered by (|k|^2, kx, ky, kz).  A ball of smaller radius
is therefore always a prefix of a larger one, which makes Galerkin
truncation, prolongation and truncation-consistent noise simple slicing.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.fft

__all__ = [
    "TorusConfig",
    "Lattice",
    "SpectralField",
    "lattice_for",
    "leray_project",
    "apply_fractional_stokes",
    "sobolev_norm",
    "galerkin_truncate",
    "to_physical",
    "from_physical",
    "random_field",
    "restrict",
    "prolong",
    "divergence_residual",
    "hermitian_residual",
]


@dataclass(frozen=True)
class TorusConfig:
    """Box size, Galerkin radius and the physical grid used for products.

    ``grid_N`` defaults to ``3 * trunc_n``, the smallest grid on which
    quadratic products of retained divergence-free modes are alias-free.
    """

    period_L: float = 2 * np.pi
    trunc_n: int = 8
    grid_N: int | None = None

    def __post_init__(self):
        if not self.period_L > 0:
            raise ValueError(f"period_L must be positive, got {self.period_L}")
        if int(self.trunc_n) != self.trunc_n or self.trunc_n < 1:
            raise ValueError(f"trunc_n must be an integer >= 1, got {self.trunc_n}")
        object.__setattr__(self, "trunc_n", int(self.trunc_n))
        if self.grid_N is None:
            object.__setattr__(self, "grid_N", 3 * self.trunc_n)
        if self.grid_N < 3 * self.trunc_n:
            raise ValueError(
                f"grid_N={self.grid_N} too small for dealiasing; need >= {3 * self.trunc_n}"
            )
        object.__setattr__(self, "grid_N", int(self.grid_N))

    @property
    def lattice(self) -> "Lattice":
        return lattice_for(self)

    def with_trunc(self, n: int) -> "TorusConfig":
        """Same box, radius ``n`` and its default dealiased grid."""
        return TorusConfig(self.period_L, n)


class Lattice:
    """Retained wavevectors of a :class:`TorusConfig` plus FFT bookkeeping."""

    def __init__(self, torus: TorusConfig):
        n = torus.trunc_n
        r = np.arange(-n, n + 1)
        k = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)
        k2 = np.einsum("ij,ij->i", k, k)
        keep = (k2 > 0) & (k2 <= n * n)
        k, k2 = k[keep], k2[keep]
        order = np.lexsort((k[:, 2], k[:, 1], k[:, 0], k2))
        self.torus = torus
        self.k = k[order].astype(np.int64)
        self.k2 = k2[order]
        self.size = len(self.k)
        self.kappa = (2 * np.pi / torus.period_L) * self.k
        self.lam = np.einsum("ij,ij->i", self.kappa, self.kappa)

        # index of -k for every k
        pos = {tuple(kk): i for i, kk in enumerate(self.k)}
        self.neg = np.array([pos[tuple(-kk)] for kk in self.k], dtype=np.int64)

        # lexicographically positive half: first nonzero component > 0
        first = np.where(self.k[:, 0] != 0, self.k[:, 0],
                         np.where(self.k[:, 1] != 0, self.k[:, 1], self.k[:, 2]))
        self.half = np.flatnonzero(first > 0)

        # rfft layout: modes with kz >= 0 are stored directly, kz < 0 via -k
        N = torus.grid_N
        self.rshape = (N, N, N // 2 + 1)
        self.stored = np.flatnonzero(self.k[:, 2] >= 0)
        ks = self.k[self.stored]
        self.stored_flat = np.ravel_multi_index(
            (ks[:, 0] % N, ks[:, 1] % N, ks[:, 2]), self.rshape)
        # for each mode: flat rfft index of k (if kz >= 0) or of -k, and conj flag
        src = np.where(self.k[:, 2] >= 0, np.arange(self.size), self.neg)
        kk = self.k[src]
        self.gather_flat = np.ravel_multi_index(
            (kk[:, 0] % N, kk[:, 1] % N, kk[:, 2]), self.rshape)
        self.gather_conj = self.k[:, 2] < 0

    def index_of(self, k) -> int:
        k = np.asarray(k)
        hit = np.flatnonzero((self.k == k).all(axis=1))
        if len(hit) == 0:
            raise KeyError(f"wavevector {tuple(k)} not on the retained lattice")
        return int(hit[0])

    def count_within(self, m: float) -> int:
        """Number of modes with |k| <= m (a prefix of the ordering)."""
        return int(np.searchsorted(self.k2, m * m, side="right"))


@functools.lru_cache(maxsize=32)
def lattice_for(torus: TorusConfig) -> Lattice:
    return Lattice(torus)


class SpectralField:
    """Real divergence-free field given by its lattice coefficients.

    ``coeffs`` has shape ``(M, 3)`` with ``M = lattice.size``.  Instances are
    treated as immutable; the arithmetic operators return new fields.
    """

    __slots__ = ("coeffs", "torus")

    def __init__(self, coeffs, torus: TorusConfig):
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        M = lattice_for(torus).size
        if coeffs.shape != (M, 3):
            raise ValueError(f"coeffs must have shape {(M, 3)}, got {coeffs.shape}")
        coeffs.flags.writeable = False
        self.coeffs = coeffs
        self.torus = torus

    @property
    def lattice(self) -> Lattice:
        return lattice_for(self.torus)

    @classmethod
    def zeros(cls, torus: TorusConfig) -> "SpectralField":
        return cls(np.zeros((lattice_for(torus).size, 3), complex), torus)

    @classmethod
    def from_modes(cls, torus: TorusConfig, modes: Mapping, *, project: bool = True,
                   add_conjugates: bool = True) -> "SpectralField":
        """Build a field from ``{k: 3-vector}``.

        With ``add_conjugates`` the partner ``-k`` receives the complex
        conjugate, so a single entry describes a real Hermitian pair.
        """
        lat = lattice_for(torus)
        c = np.zeros((lat.size, 3), complex)
        for k, vec in modes.items():
            k = tuple(int(x) for x in k)
            if k == (0, 0, 0):
                raise ValueError("k = 0 coefficient given; fields must have zero mean")
            i = lat.index_of(k)
            c[i] += vec
            if add_conjugates:
                c[lat.neg[i]] += np.conj(vec)
        if project:
            c = _leray(c, lat)
        return cls(c, torus)

    def to_modes(self) -> dict:
        return {tuple(int(x) for x in k): self.coeffs[i]
                for i, k in enumerate(self.lattice.k) if np.any(self.coeffs[i])}

    def _same(self, other: "SpectralField"):
        if self.torus != other.torus:
            raise ValueError("fields live on different tori/truncations")

    def __add__(self, other):
        self._same(other)
        return SpectralField(self.coeffs + other.coeffs, self.torus)

    def __sub__(self, other):
        self._same(other)
        return SpectralField(self.coeffs - other.coeffs, self.torus)

    def __neg__(self):
        return SpectralField(-self.coeffs, self.torus)

    def __mul__(self, a):
        return SpectralField(self.coeffs * float(a), self.torus)

    __rmul__ = __mul__

    def __repr__(self):
        return (f"SpectralField(n={self.torus.trunc_n}, L={self.torus.period_L:g}, "
                f"|u|_0={sobolev_norm(self, 0):.4g})")


def _leray(c: np.ndarray, lat: Lattice) -> np.ndarray:
    kap = lat.kappa
    dot = np.einsum("...mj,mj->...m", c, kap)
    return c - (dot / lat.lam)[..., None] * kap


def leray_project(v) -> SpectralField:
    """Divergence-free part of a field, mode by mode ``(I - kk^T/|k|^2) c``.

    ``v`` is a :class:`SpectralField` (possibly carrying a gradient part) or
    a pair ``(torus, {k: 3-vector})`` of raw coefficients; raw input may not
    contain ``k = 0``.
    """
    if isinstance(v, SpectralField):
        return SpectralField(_leray(v.coeffs, v.lattice), v.torus)
    torus, modes = v
    if any(tuple(int(x) for x in k) == (0, 0, 0) for k in modes):
        raise ValueError("k = 0 coefficient given; fields must have zero mean")
    return SpectralField.from_modes(torus, modes, project=True, add_conjugates=False)


def apply_fractional_stokes(u: SpectralField, alpha: float) -> SpectralField:
    """``A^alpha u``: multiply each mode by ``lambda(k)^alpha``."""
    if alpha == 0:
        return u
    return SpectralField(u.coeffs * (u.lattice.lam ** alpha)[:, None], u.torus)


def sobolev_norm(u: SpectralField, s: float) -> float:
    """``|u|_s = (sum_k lambda^s |c_k|^2)^(1/2)`` over the full lattice."""
    w = np.einsum("mj,mj->m", u.coeffs.real, u.coeffs.real)
    w += np.einsum("mj,mj->m", u.coeffs.imag, u.coeffs.imag)
    if s != 0:
        w = w * u.lattice.lam ** s
    return float(np.sqrt(w.sum()))


def galerkin_truncate(u: SpectralField, m: int) -> SpectralField:
    """Zero every mode with ``|k| > m`` (the projection onto H_m)."""
    if m < 1:
        raise ValueError(f"truncation radius must be >= 1, got {m}")
    cut = u.lattice.count_within(m)
    if cut == u.lattice.size:
        return u
    c = u.coeffs.copy()
    c[cut:] = 0
    return SpectralField(c, u.torus)


def restrict(u: SpectralField, torus: TorusConfig) -> SpectralField:
    """Express ``u`` on a smaller lattice, dropping the modes outside it."""
    M = lattice_for(torus).size
    if M > u.lattice.size or torus.period_L != u.torus.period_L:
        raise ValueError("target lattice must be a sub-ball of the same box")
    return SpectralField(u.coeffs[:M], torus)


def prolong(u: SpectralField, torus: TorusConfig) -> SpectralField:
    """Embed ``u`` into a larger lattice by zero padding."""
    M = lattice_for(torus).size
    if M < u.lattice.size or torus.period_L != u.torus.period_L:
        raise ValueError("target lattice must contain the source ball")
    c = np.zeros((M, 3), complex)
    c[: u.lattice.size] = u.coeffs
    return SpectralField(c, torus)


def divergence_residual(u: SpectralField) -> float:
    """``max_k |kappa . c(k)| / |u|_0`` (0 for the zero field)."""
    nrm = sobolev_norm(u, 0)
    if nrm == 0:
        return 0.0
    d = np.abs(np.einsum("mj,mj->m", u.coeffs, u.lattice.kappa))
    return float(d.max() / nrm)


def hermitian_residual(u: SpectralField) -> float:
    nrm = sobolev_norm(u, 0)
    if nrm == 0:
        return 0.0
    c = u.coeffs
    return float(np.abs(c[u.lattice.neg] - np.conj(c)).max() / nrm)


# ---------------------------------------------------------------------------
# transforms

def _to_grid(c: np.ndarray, lat: Lattice) -> np.ndarray:
    """Coefficients ``(..., M, 3)`` -> physical values ``(..., 3, N, N, N)``."""
    N = lat.torus.grid_N
    lead = c.shape[:-2]
    buf = np.zeros(lead + (3, int(np.prod(lat.rshape))), complex)
    buf[..., lat.stored_flat] = np.swapaxes(c[..., lat.stored, :], -1, -2)
    buf = buf.reshape(lead + (3,) + lat.rshape)
    return scipy.fft.irfftn(buf, s=(N, N, N), axes=(-3, -2, -1), norm="forward")


def _from_grid(g: np.ndarray, lat: Lattice) -> np.ndarray:
    """Physical values ``(..., 3, N, N, N)`` -> coefficients ``(..., M, 3)``."""
    spec = scipy.fft.rfftn(g, axes=(-3, -2, -1), norm="forward")
    spec = spec.reshape(spec.shape[:-3] + (-1,))
    c = spec[..., lat.gather_flat]
    c = np.where(lat.gather_conj, np.conj(c), c)
    return np.swapaxes(c, -1, -2)


def to_physical(u: SpectralField) -> np.ndarray:
    """Values of ``u`` on the ``grid_N^3`` grid, shape ``(3, N, N, N)``.

    Grid point ``(a, b, c)`` sits at ``x = L (a, b, c) / N``.
    """
    return _to_grid(u.coeffs, u.lattice)


def from_physical(g: np.ndarray, torus: TorusConfig) -> SpectralField:
    """Lattice coefficients of a real grid field (modes beyond ``n`` dropped).

    The result is not Leray-projected; a band-limited divergence-free input
    round-trips exactly.
    """
    g = np.asarray(g, dtype=float)
    N = torus.grid_N
    if g.shape != (3, N, N, N):
        raise ValueError(f"grid field must have shape {(3, N, N, N)}, got {g.shape}")
    return SpectralField(_from_grid(g, lattice_for(torus)), torus)


def random_field(torus: TorusConfig, rng: np.random.Generator, *, beta: float = 0.0,
                 amplitude: float = 1.0) -> SpectralField:
    """Gaussian divergence-free field with coefficient profile ``lambda^-beta``.

    The result is rescaled so that ``|u|_0 = amplitude``.
    """
    lat = lattice_for(torus)
    c = rng.standard_normal((lat.size, 3)) + 1j * rng.standard_normal((lat.size, 3))
    c *= (lat.lam ** -beta)[:, None]
    c = 0.5 * (c + np.conj(c[lat.neg]))
    c = _leray(c, lat)
    u = SpectralField(c, torus)
    return u * (amplitude / sobolev_norm(u, 0))
