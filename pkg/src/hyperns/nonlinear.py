"""
The convective term B(u, v) = Pi (u . grad) v and checks on it.

``bilinear_B`` evaluates the product pseudo-spectrally on the dealiased grid;
``bilinear_B_direct`` is an FFT-free reference that sums over all pairs of
interacting modes.  The inequality estimator samples random fields and
reports the largest observed ratio LHS/RHS for the trilinear and product
estimates used in the energy arguments.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .seeding import derive_seed
from .spectral import (
    Lattice,
    SpectralField,
    TorusConfig,
    _from_grid,
    _leray,
    _to_grid,
    lattice_for,
    random_field,
)

__all__ = [
    "bilinear_B",
    "bilinear_B_direct",
    "pairing",
    "InequalityReport",
    "INEQUALITY_IDS",
    "inequality_ratio",
    "estimate_inequality_constant",
    "trial_seed",
]

INEQUALITY_IDS = ("Bcon4", "BconA", "BconA2", "B1_m1", "B1_m2")
ALPHA_MIN = 1.25
DENOM_FLOOR = 1e-14


def _convect(uc: np.ndarray, vc: np.ndarray, lat: Lattice) -> np.ndarray:
    """Projected, truncated ``(u . grad) v`` on coefficient arrays ``(..., M, 3)``."""
    ug = _to_grid(uc, lat)
    # grad v: (..., j, M, i) = i kappa_j v_i
    dv = 1j * lat.kappa.T[:, :, None] * vc[..., None, :, :]
    dvg = _to_grid(dv, lat)  # (..., j, i, N, N, N)
    w = np.einsum("...jxyz,...jixyz->...ixyz", ug, dvg, optimize=True)
    return _leray(_from_grid(w, lat), lat)


def bilinear_B(u: SpectralField, v: SpectralField) -> SpectralField:
    """``B(u, v)`` projected onto the divergence-free Galerkin space."""
    if u.torus != v.torus:
        raise ValueError("fields live on different tori/truncations")
    return SpectralField(_convect(u.coeffs, v.coeffs, u.lattice), u.torus)


def _lookup_table(lat: Lattice):
    n = lat.torus.trunc_n
    R = 2 * n
    table = -np.ones((2 * R + 1,) * 3, dtype=np.int64)
    kk = lat.k + R
    table[kk[:, 0], kk[:, 1], kk[:, 2]] = np.arange(lat.size)
    return table, R


def bilinear_B_direct(u: SpectralField, v: SpectralField, chunk: int = 64) -> SpectralField:
    """Reference ``B(u, v)`` by explicit convolution over mode pairs (no FFT).

    ``[(u . grad) v](k) = sum_{p + q = k} i (u(p) . kappa_q) v(q)``, then the
    Leray projection.
    """
    if u.torus != v.torus:
        raise ValueError("fields live on different tori/truncations")
    lat = u.lattice
    table, R = _lookup_table(lat)
    out = np.zeros((lat.size, 3), complex)
    uq = u.coeffs
    vq = v.coeffs
    for start in range(0, lat.size, chunk):
        p = np.arange(start, min(start + chunk, lat.size))
        s = lat.k[p][:, None, :] + lat.k[None, :, :]  # (P, Q, 3)
        idx = table[s[..., 0] + R, s[..., 1] + R, s[..., 2] + R]
        a = 1j * np.einsum("pj,qj->pq", uq[p], lat.kappa)  # i u(p) . kappa_q
        contrib = a[..., None] * vq[None, :, :]
        ok = idx >= 0
        np.add.at(out, idx[ok], contrib[ok])
    return SpectralField(_leray(out, lat), u.torus)


def _pair(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (np.einsum("...mj,...mj->...", a.real, b.real)
            + np.einsum("...mj,...mj->...", a.imag, b.imag))


def pairing(w: SpectralField, f: SpectralField) -> float:
    """``<w, f>``: real lattice sum ``Re sum_k w(k) . conj(f(k))``."""
    if w.torus != f.torus:
        raise ValueError("fields live on different tori/truncations")
    return float(_pair(w.coeffs, f.coeffs))


# ---------------------------------------------------------------------------
# inequality estimation

@dataclass
class InequalityReport:
    inequality_id: str
    alpha: float
    trunc_n: int
    num_trials: int
    seed: int
    max_ratio: float
    witness_trial: int
    witness_seed: int
    witness: str
    skipped: int = 0

    def to_json(self) -> str:
        return json.dumps({
            "id": self.inequality_id,
            "alpha": self.alpha,
            "trunc_n": self.trunc_n,
            "trials": self.num_trials,
            "seed": self.seed,
            "max_ratio": self.max_ratio,
            "witness_seed": self.witness_seed,
        })

    def as_dict(self) -> dict:
        return asdict(self)


def trial_seed(seed: int, trial: int) -> int:
    """Integer seed for trial ``trial``; independent of evaluation order."""
    return derive_seed(seed, trial)


def _norms(c: np.ndarray, lam: np.ndarray, s: float) -> np.ndarray:
    w = (c.real ** 2 + c.imag ** 2).sum(axis=-1)
    return np.sqrt((w * lam ** s).sum(axis=-1))


def _arity(tag: str) -> int:
    return 3 if tag.startswith("Bcon") else 2


def _ratios(tag: str, alpha: float, fields: list[np.ndarray], lat: Lattice, Bc):
    """Numerators and denominators for batched coefficient arrays."""
    lam = lat.lam
    if tag == "Bcon4":
        u1, u2, u3 = fields
        num = np.abs(_pair(Bc, u3))
        den = [_norms(u1, lam, 0), _norms(u2, lam, alpha), _norms(u3, lam, alpha)]
    elif tag in ("BconA", "BconA2"):
        u1, u2, u3 = fields
        num = np.abs(_pair(Bc, u3 * lam[:, None]))
        if tag == "BconA":
            den = [_norms(u1, lam, alpha), _norms(u2, lam, 1), _norms(u3, lam, alpha + 1)]
        else:
            den = [_norms(u1, lam, 1), _norms(u2, lam, alpha), _norms(u3, lam, alpha + 1)]
    elif tag in ("B1_m1", "B1_m2"):
        m = int(tag[-1])
        u, ut = fields
        num = _norms(Bc, lam, m)
        den = [_norms(u, lam, m + 1), _norms(ut, lam, m + 1)]
    else:
        raise ValueError(f"unknown inequality id {tag!r}; expected one of {INEQUALITY_IDS}")
    return num, den


def _check(tag: str, alpha: float):
    if tag not in INEQUALITY_IDS:
        raise ValueError(f"unknown inequality id {tag!r}; expected one of {INEQUALITY_IDS}")
    if tag.startswith("Bcon") and alpha < ALPHA_MIN:
        raise ValueError(f"{tag} requires alpha >= 5/4, got {alpha}")


def inequality_ratio(tag: str, alpha: float, *fields: SpectralField, bilinear=bilinear_B) -> float:
    """LHS/RHS of one inequality for explicit fields; 0 if the RHS vanishes."""
    _check(tag, alpha)
    if len(fields) != _arity(tag):
        raise ValueError(f"{tag} takes {_arity(tag)} fields, got {len(fields)}")
    lat = fields[0].lattice
    Bc = bilinear(fields[0], fields[1]).coeffs
    num, den = _ratios(tag, alpha, [f.coeffs for f in fields], lat, Bc)
    if min(float(d) for d in den) < DENOM_FLOOR:
        return 0.0
    return float(num / np.prod(den))


def _trial_fields(tag: str, torus: TorusConfig, seed: int, trial: int) -> list[np.ndarray]:
    rng = np.random.default_rng(trial_seed(seed, trial))
    beta = float(rng.choice([0.0, 1.0, 2.0]))
    return [random_field(torus, rng, beta=beta).coeffs for _ in range(_arity(tag))]


def estimate_inequality_constant(tag: str, alpha: float, trials: int, seed: int,
                                 torus: TorusConfig | None = None,
                                 batch: int = 32) -> InequalityReport:
    """Largest observed LHS/RHS over ``trials`` random field tuples.

    Trial ``i`` draws its fields from ``trial_seed(seed, i)``, so the witness
    can be regenerated on its own.  A finite maximum is evidence only.
    """
    _check(tag, alpha)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    torus = torus or TorusConfig(2 * np.pi, 8)
    lat = lattice_for(torus)
    best, best_i, skipped = -1.0, -1, 0
    for start in range(0, trials, batch):
        idx = range(start, min(start + batch, trials))
        per = [_trial_fields(tag, torus, seed, i) for i in idx]
        fields = [np.stack(f) for f in zip(*per)]
        Bc = _convect(fields[0], fields[1], lat)
        num, den = _ratios(tag, alpha, fields, lat, Bc)
        den = np.stack(den)
        ok = (den >= DENOM_FLOOR).all(axis=0)
        skipped += int((~ok).sum())
        r = np.where(ok, num / np.where(ok, den.prod(axis=0), 1.0), -1.0)
        j = int(np.argmax(r))
        if r[j] > best:
            best, best_i = float(r[j]), start + j
    if best < 0:
        best = 0.0
    witness = (f"trial {best_i} of seed {seed}: fields drawn with "
               f"default_rng(trial_seed({seed}, {best_i}))") if best_i >= 0 else "none"
    return InequalityReport(
        inequality_id=tag, alpha=float(alpha), trunc_n=torus.trunc_n,
        num_trials=trials, seed=int(seed), max_ratio=best, witness_trial=best_i,
        witness_seed=trial_seed(seed, best_i) if best_i >= 0 else -1,
        witness=witness, skipped=skipped)
