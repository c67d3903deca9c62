"""Sampled Plancherel model: frequency grid, operator fields and Fourier-side operations.

A field assigns a dense n x n complex matrix, written in the basis e_i^{lam/2pi},
to every grid frequency lam. Norms use the weights of the measure
(2 pi)^-2 |lam| dlam.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .group import GroupElement, IDENTITY
from .hermite import HermiteBasis, rep_matrix

MAGIC = b"HFMRA1"


def band_upper(k: int, d: int) -> float:
    """Upper edge pi / (2^(2k+1) d) of the band I_0^k (exact power-of-two scaling)."""
    return math.ldexp(math.pi / d, -(2 * k + 1))


def band_mass(k: int, d: int) -> float:
    """Plancherel measure of I_0^k, both signs: 15 / (256 16^k d^2)."""
    b = band_upper(k, d)
    return 2.0 * (b * b - (b / 4) ** 2) / (2.0 * (2.0 * math.pi) ** 2)


@dataclass(frozen=True)
class LambdaGrid:
    """Log-uniform frequency grid over the signed bands k_min..k_max.

    Points are ordered by sign (negative first), then band, then position
    inside the band. Every band holds 2Q points per sign, at
    lam = b_k 2^{-(n + 1/2)/Q}, which makes lam -> 4 lam an exact map between
    bands k and k - 1.
    """

    d: int
    k_min: int
    k_max: int
    Q: int

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError("d must be a positive integer")
        if self.k_min > self.k_max:
            raise ValueError("empty band range: k_min > k_max")
        if self.Q < 4:
            raise ValueError("Q must be at least 4")

    @property
    def per_band(self) -> int:
        return 2 * self.Q

    @property
    def bands(self) -> range:
        return range(self.k_min, self.k_max + 1)

    @cached_property
    def _table(self):
        nb = self.k_max - self.k_min + 1
        band = np.repeat(np.arange(self.k_min, self.k_max + 1), self.per_band)
        pos = np.tile(np.arange(self.per_band), nb)
        upper = np.array([band_upper(int(k), self.d) for k in band])
        mag = upper * np.exp2(-(pos + 0.5) / self.Q)
        width = upper * (np.exp2(-pos / self.Q) - np.exp2(-(pos + 1) / self.Q))
        sign = np.concatenate([-np.ones(band.size), np.ones(band.size)])
        lam = sign * np.concatenate([mag, mag])
        weight = np.concatenate([mag * width, mag * width]) / (2.0 * math.pi) ** 2
        for arr in (lam, weight, sign):
            arr.setflags(write=False)
        band2 = np.concatenate([band, band])
        pos2 = np.concatenate([pos, pos])
        band2.setflags(write=False)
        pos2.setflags(write=False)
        return lam, band2, weight, sign, pos2

    @property
    def lam(self) -> np.ndarray:
        return self._table[0]

    @property
    def band(self) -> np.ndarray:
        return self._table[1]

    @property
    def weight(self) -> np.ndarray:
        return self._table[2]

    @property
    def sign(self) -> np.ndarray:
        return self._table[3]

    @property
    def position(self) -> np.ndarray:
        return self._table[4]

    def __len__(self) -> int:
        return self.lam.size

    def index_of(self, sign: int, band: int, pos: int) -> int:
        nb = self.k_max - self.k_min + 1
        half = 0 if sign < 0 else nb * self.per_band
        return half + (band - self.k_min) * self.per_band + pos

    def shift_map(self, j: int) -> np.ndarray:
        """Index of the point 4^-j lam for every lam, or -1 where it is off the grid."""
        src_band = self.band + j
        inside = (src_band >= self.k_min) & (src_band <= self.k_max)
        nb = self.k_max - self.k_min + 1
        half = np.where(self.sign < 0, 0, nb * self.per_band)
        idx = half + (src_band - self.k_min) * self.per_band + self.position
        return np.where(inside, idx, -1)

    def band_weight(self, k: int) -> float:
        return float(np.sum(self.weight[self.band == k]))

    def describe(self) -> dict:
        return {
            "d": self.d,
            "k_min": self.k_min,
            "k_max": self.k_max,
            "Q": self.Q,
            "npoints": len(self),
            "order": "sign (negative first), band ascending, position ascending",
        }


def build_grid(d: int, k_min: int, k_max: int, Q: int) -> LambdaGrid:
    return LambdaGrid(d=d, k_min=k_min, k_max=k_max, Q=Q)


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class OperatorField:
    grid: LambdaGrid
    matrices: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrices, dtype=complex)
        if m.ndim != 3 or m.shape[0] != len(self.grid) or m.shape[1] != m.shape[2]:
            raise ValueError(f"matrices of shape {m.shape} do not fit a grid of {len(self.grid)} points")
        if m is self.matrices and m.flags.writeable:
            m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrices", m)

    @property
    def n(self) -> int:
        return self.matrices.shape[1]

    @classmethod
    def zeros(cls, grid: LambdaGrid, n: int) -> "OperatorField":
        return cls(grid, np.zeros((len(grid), n, n), dtype=complex))

    def _same_grid(self, other: "OperatorField"):
        if self.grid != other.grid or self.n != other.n:
            raise GridMismatchError("fields live on different grids or bases")

    def __add__(self, other):
        self._same_grid(other)
        return OperatorField(self.grid, self.matrices + other.matrices)

    def __sub__(self, other):
        self._same_grid(other)
        return OperatorField(self.grid, self.matrices - other.matrices)

    def __mul__(self, c):
        return OperatorField(self.grid, self.matrices * c)

    __rmul__ = __mul__

    def __neg__(self):
        return OperatorField(self.grid, -self.matrices)

    def equals(self, other: "OperatorField") -> bool:
        return self.grid == other.grid and np.array_equal(self.matrices, other.matrices)


def _hs_per_point(m: np.ndarray) -> np.ndarray:
    return np.sum((m.real * m.real + m.imag * m.imag).reshape(m.shape[0], -1), axis=1)


def hs_norm_sq(f: OperatorField) -> float:
    return float(np.sum(f.grid.weight * _hs_per_point(f.matrices)))


def hs_norm(f: OperatorField) -> float:
    return math.sqrt(hs_norm_sq(f))


def field_inner(f: OperatorField, g: OperatorField) -> complex:
    """Sum over points of weight * trace(f(lam) g(lam)^*)."""
    f._same_grid(g)
    per = np.sum((f.matrices * g.matrices.conj()).reshape(len(f.grid), -1), axis=1)
    return complex(np.sum(f.grid.weight * per))


def convolve(f: OperatorField, g: OperatorField) -> OperatorField:
    f._same_grid(g)
    return OperatorField(f.grid, f.matrices @ g.matrices)


def involution(f: OperatorField) -> OperatorField:
    return OperatorField(f.grid, np.conj(np.swapaxes(f.matrices, 1, 2)))


def rep_field(grid: LambdaGrid, g: GroupElement, basis: HermiteBasis) -> np.ndarray:
    """rho_lam(g) at every grid point, using rho_{-lam}(g) = conj(rho_lam(g))."""
    out = np.empty((len(grid), basis.n_max, basis.n_max), dtype=complex)
    half = len(grid) // 2
    for i in range(half, len(grid)):
        out[i] = rep_matrix(float(grid.lam[i]), g, basis, check=False).entries
    out[:half] = out[half:].conj()
    return out


def translate(f: OperatorField, g: GroupElement, basis: HermiteBasis) -> OperatorField:
    """Fourier side of left translation: rho_lam(g) f(lam)."""
    if basis.n_max != f.n:
        raise GridMismatchError("basis size does not match the field")
    return OperatorField(f.grid, rep_field(f.grid, g, basis) @ f.matrices)


def dilate_field(f: OperatorField, j: int) -> OperatorField:
    """Fourier side of f -> 2^{4j} f(2^j .): the matrix at lam is read from 4^-j lam.

    Points whose source lies outside the band range are zero-filled.
    """
    if j == 0:
        return f
    src = f.grid.shift_map(j)
    if not np.any(src >= 0):
        raise ValueError(f"shift by {j} levels leaves the band range entirely")
    out = np.zeros_like(f.matrices)
    ok = src >= 0
    out[ok] = f.matrices[src[ok]]
    return OperatorField(f.grid, out)


def synthesize(f: OperatorField, g: GroupElement, basis: HermiteBasis) -> complex:
    """Value at g of the function with Fourier field f: sum weight * tr(rho(g)^* f)."""
    if g == IDENTITY:
        per = np.trace(f.matrices, axis1=1, axis2=2)
    else:
        rho = rep_field(f.grid, g, basis)
        per = np.sum((rho.conj() * f.matrices).reshape(len(f.grid), -1), axis=1)
    return complex(np.sum(f.grid.weight * per))


def random_field(grid: LambdaGrid, n: int, rng: np.random.Generator, columns=None) -> OperatorField:
    """Complex Gaussian field normalized to hs_norm 1.

    ``columns`` is an optional per-point count of leading columns allowed to be nonzero.
    """
    shape = (len(grid), n, n)
    m = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    if columns is not None:
        m = m * (np.arange(n)[None, None, :] < np.asarray(columns)[:, None, None])
    f = OperatorField(grid, m)
    norm = hs_norm(f)
    return f * (1.0 / norm) if norm > 0 else f


def _pack_k(k: int) -> int:
    # signed band indices are stored as 32-bit two's complement
    return k & 0xFFFFFFFF


def _unpack_k(u: int) -> int:
    return u - (1 << 32) if u & 0x80000000 else u


def write_field(f: OperatorField, path) -> tuple[Path, Path]:
    """Binary dump plus a JSON sidecar with the grid description."""
    path = Path(path)
    g = f.grid
    header = MAGIC + struct.pack("<5I", g.d, _pack_k(g.k_min), _pack_k(g.k_max), g.Q, f.n)
    body = np.ascontiguousarray(f.matrices, dtype="<c16").tobytes()
    path.write_bytes(header + body)
    side = path.with_suffix(path.suffix + ".json")
    meta = dict(g.describe(), n_max=f.n, magic=MAGIC.decode(), dtype="complex128 little-endian, row-major")
    meta["points"] = [
        {"lambda": float(l), "band_k": int(k), "weight": float(w)}
        for l, k, w in zip(g.lam, g.band, g.weight)
    ]
    side.write_text(json.dumps(meta, indent=1) + "\n")
    return path, side


def read_field(path) -> OperatorField:
    raw = Path(path).read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise ValueError("not a field dump: bad magic")
    d, kmin, kmax, q, n = struct.unpack_from("<5I", raw, len(MAGIC))
    grid = build_grid(d, _unpack_k(kmin), _unpack_k(kmax), q)
    body = np.frombuffer(raw, dtype="<c16", offset=len(MAGIC) + 20)
    if body.size != len(grid) * n * n:
        raise ValueError("field dump length does not match its header")
    return OperatorField(grid, body.reshape(len(grid), n, n).astype(complex))
