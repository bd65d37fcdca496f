"""Binary container for spectral fields.

Layout (little-endian)::

    b"HNSF"  u32 version  f64 L  u32 trunc_n  u64 mode_count
    mode_count x { i32 kx, i32 ky, i32 kz, 6 x f64 (re, im) per component }

Modes are written in lexicographic order of ``k``.  A file may hold several
containers back to back (noise dumps write one per step).
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator

import numpy as np

from .spectral import SpectralField, TorusConfig, lattice_for

MAGIC = b"HNSF"
VERSION = 1
_HEADER = struct.Struct("<4sIdIQ")
_MODE = np.dtype([("k", "<i4", (3,)), ("c", "<f8", (6,))])


def write_field(fh: BinaryIO, u: SpectralField) -> None:
    lat = u.lattice
    order = np.lexsort((lat.k[:, 2], lat.k[:, 1], lat.k[:, 0]))
    rec = np.empty(lat.size, _MODE)
    rec["k"] = lat.k[order]
    c = u.coeffs[order]
    rec["c"] = np.stack([c.real, c.imag], axis=-1).reshape(-1, 6)
    fh.write(_HEADER.pack(MAGIC, VERSION, float(u.torus.period_L), u.torus.trunc_n, lat.size))
    fh.write(rec.tobytes())


def read_field(fh: BinaryIO, grid_N: int | None = None) -> SpectralField | None:
    """Read one container; returns ``None`` at a clean end of file."""
    head = fh.read(_HEADER.size)
    if not head:
        return None
    if len(head) < _HEADER.size:
        raise ValueError("truncated snapshot header")
    magic, version, L, n, count = _HEADER.unpack(head)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    torus = TorusConfig(L, n, grid_N)
    lat = lattice_for(torus)
    if count != lat.size:
        raise ValueError(f"mode count {count} does not match lattice size {lat.size}")
    raw = fh.read(count * _MODE.itemsize)
    if len(raw) < count * _MODE.itemsize:
        raise ValueError("truncated snapshot body")
    rec = np.frombuffer(raw, _MODE)
    c6 = rec["c"].reshape(-1, 3, 2)
    coeffs = np.zeros((lat.size, 3), complex)
    order = np.lexsort((lat.k[:, 2], lat.k[:, 1], lat.k[:, 0]))
    if not np.array_equal(rec["k"], lat.k[order]):
        raise ValueError("snapshot wavevectors do not match the lattice")
    coeffs[order] = c6[..., 0] + 1j * c6[..., 1]
    return SpectralField(coeffs, torus)


def save(path, fields: SpectralField | Iterable[SpectralField]) -> None:
    if isinstance(fields, SpectralField):
        fields = [fields]
    with open(path, "wb") as fh:
        for u in fields:
            write_field(fh, u)


def iter_fields(path, grid_N: int | None = None) -> Iterator[SpectralField]:
    with open(path, "rb") as fh:
        while (u := read_field(fh, grid_N)) is not None:
            yield u


def load(path, grid_N: int | None = None) -> SpectralField:
    """First field stored in ``path``."""
    for u in iter_fields(Path(path), grid_N):
        return u
    raise ValueError(f"{path} holds no snapshot")
