"""The sinc-type projection system and the spaces V_j, W_j on the Fourier side.

On the band I_0^k the field S_hat(lam) is the orthogonal projection onto the
first 2^(2k) + 1 basis vectors, and S_hat vanishes for |lam| > pi / (2d).
The level-j field is S_hat_j(lam) = S_hat(4^-j lam). V_j is the set of fields
whose columns beyond the level-j rank vanish.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from threading import Lock

import numpy as np

from .plancherel import LambdaGrid, OperatorField, band_upper, hs_norm, random_field


class RankTruncationWarning(UserWarning):
    pass


def rank_of(k: int) -> int:
    if k < 0:
        raise ValueError("rank is defined for bands k >= 0")
    return 4**k + 1


def grid_band(lam: float, d: int) -> int:
    """The integer k with pi/(2^(2k+3) d) < |lam| <= pi/(2^(2k+1) d); k may be negative."""
    if lam == 0:
        raise ValueError("lambda = 0 lies in no band")
    x = abs(lam)
    k = math.floor(math.log(math.pi / (2.0 * d * x), 4.0))
    while x > band_upper(k, d):
        k -= 1
    while x <= band_upper(k + 1, d):
        k += 1
    return k


def band_index(lam: float, d: int) -> int | None:
    """The band k >= 0 containing lam, or None when |lam| > pi / (2d)."""
    k = grid_band(lam, d)
    return k if k >= 0 else None


def sinc_rank(lam: float, d: int) -> int:
    """Rank of S_hat(lam): 2^(2k) + 1 on I_0^k, 0 outside the support (lam = 0 included)."""
    if lam == 0:
        return 0
    k = band_index(lam, d)
    return 0 if k is None else rank_of(k)


def multiplicity(lam: float, d: int) -> int:
    """Multiplicity function of V_0: the rank of S_hat(2 pi lam)."""
    return sinc_rank(2.0 * math.pi * lam, d)


@dataclass(frozen=True)
class MultiplicityFn:
    """m(lam) = rank S_hat(2 pi lam); ``zero`` gives the trivial function."""

    d: int = 1
    zero: bool = False

    def __call__(self, lam: float) -> int:
        return 0 if self.zero else multiplicity(lam, self.d)

    def at_sinc_frequency(self, mu: float) -> int:
        """m(mu / 2 pi), i.e. the rank of S_hat(mu)."""
        return 0 if self.zero else sinc_rank(mu, self.d)

    def support_bound(self) -> float:
        """Half-width of the support in the sinc-frequency variable."""
        return 0.0 if self.zero else math.pi / (2.0 * self.d)


@dataclass
class SincSystem:
    """Band/rank bookkeeping for S_hat and its levels on a fixed grid.

    Levels are built on demand, straight from the rank rule, and stored once.
    A level whose nominal rank exceeds n_max somewhere is recorded in
    ``truncated``.
    """

    grid: LambdaGrid
    n_max: int
    _levels: dict = field(default_factory=dict, repr=False)
    _lock: Lock = field(default_factory=Lock, repr=False)
    truncated: set = field(default_factory=set)

    @property
    def d(self) -> int:
        return self.grid.d

    @property
    def rank_table(self) -> dict[int, int]:
        return {k: rank_of(k) for k in self.grid.bands if k >= 0}

    def nominal_ranks(self, j: int) -> np.ndarray:
        """Untruncated rank of S_hat_j at every grid point."""
        src = self.grid.band + j
        return np.where(src >= 0, 4.0 ** np.maximum(src, 0) + 1, 0).astype(np.int64)

    def ranks(self, j: int) -> np.ndarray:
        return np.minimum(self.nominal_ranks(j), self.n_max)

    def is_truncated(self, j: int) -> bool:
        return bool(np.any(self.nominal_ranks(j) > self.n_max))

    def level(self, j: int) -> OperatorField:
        hit = self._levels.get(j)
        if hit is not None:
            return hit
        if self.is_truncated(j):
            warnings.warn(
                f"level {j}: rank exceeds n_max={self.n_max}, diagonal filled to n_max",
                RankTruncationWarning,
                stacklevel=2,
            )
        ranks = self.ranks(j)
        diag = (np.arange(self.n_max)[None, :] < ranks[:, None]).astype(float)
        mats = np.zeros((len(self.grid), self.n_max, self.n_max), dtype=complex)
        idx = np.arange(self.n_max)
        mats[:, idx, idx] = diag
        lev = OperatorField(self.grid, mats)
        with self._lock:
            if self.is_truncated(j):
                self.truncated.add(j)
            return self._levels.setdefault(j, lev)

    @property
    def sinc(self) -> OperatorField:
        return self.level(0)

    def column_mask(self, j: int) -> np.ndarray:
        """Boolean (points, n) mask of the columns allowed in V_j."""
        return np.arange(self.n_max)[None, :] < self.ranks(j)[:, None]

    def detail_mask(self, j: int) -> np.ndarray:
        """Boolean (points, n) mask of the columns of W_j."""
        return self.column_mask(j + 1) & ~self.column_mask(j)

    def detail_level(self, j: int) -> OperatorField:
        """The multiplier S_hat_{j+1} - S_hat_j of Q_j."""
        return self.level(j + 1) - self.level(j)


def build_sinc(grid: LambdaGrid, n_max: int, allow_truncation: bool = True) -> SincSystem:
    sys = SincSystem(grid, n_max)
    if sys.is_truncated(0):
        if not allow_truncation:
            raise ValueError(f"band rank exceeds n_max={n_max} and truncation is not allowed")
        sys.level(0)
    return sys


def _apply_mask(f: OperatorField, mask: np.ndarray) -> OperatorField:
    return OperatorField(f.grid, np.where(mask[:, None, :], f.matrices, 0))


def project(f: OperatorField, sys: SincSystem, j: int) -> OperatorField:
    """P_j f, the field f(lam) S_hat_j(lam).

    Multiplying by a 0/1 diagonal only keeps or zeroes columns, so this is
    done by masking; the result agrees exactly with ``convolve(f, S_hat_j)``.
    """
    if f.grid != sys.grid:
        raise ValueError("field and sinc system live on different grids")
    return _apply_mask(f, sys.column_mask(j))


def detail(f: OperatorField, sys: SincSystem, j: int) -> OperatorField:
    """Q_j f = P_{j+1} f - P_j f."""
    return project(f, sys, j + 1) - project(f, sys, j)


def residual_low(f: OperatorField, sys: SincSystem, j: int) -> float:
    return hs_norm(project(f, sys, j))


def residual_high(f: OperatorField, sys: SincSystem, j: int) -> float:
    return hs_norm(project(f, sys, j) - f)


def in_level(f: OperatorField, sys: SincSystem, j: int) -> bool:
    """Whether f lies in V_j exactly (no nonzero column beyond the rank)."""
    return project(f, sys, j).equals(f)


def convergence_range(sys: SincSystem) -> tuple[int, int]:
    """Smallest level range on which every grid field is fully resolved.

    At the low end S_hat_j vanishes on the whole grid; at the high end every
    point has rank n_max.
    """
    g = sys.grid
    j_low = -(g.k_max + 1)
    j_high = j_low
    while np.any(sys.ranks(j_high) < sys.n_max):
        j_high += 1
    return j_low, j_high


def random_level_field(sys: SincSystem, j: int, rng: np.random.Generator) -> OperatorField:
    """Seeded complex Gaussian field in V_j, hs_norm 1."""
    return random_field(sys.grid, sys.n_max, rng, columns=sys.ranks(j))


def random_detail_field(sys: SincSystem, j: int, rng: np.random.Generator) -> OperatorField:
    """Seeded complex Gaussian field in W_j, hs_norm 1."""
    f = random_field(sys.grid, sys.n_max, rng)
    f = detail(f, sys, j)
    norm = hs_norm(f)
    if norm == 0:
        raise ValueError(f"W_{j} is empty on this grid")
    return f * (1.0 / norm)


def band_masses(f: OperatorField) -> dict[int, float]:
    """Squared HS mass of f per band."""
    g = f.grid
    per = np.sum(np.abs(f.matrices.reshape(len(g), -1)) ** 2, axis=1) * g.weight
    return {int(k): float(np.sum(per[g.band == k])) for k in g.bands}


def write_sinc_csv(sys: SincSystem, path, fields: dict[str, OperatorField] | None = None, j: int = 0):
    """One row per grid point: lambda, band_k, rank, weight, then per-field HS mass."""
    g = sys.grid
    fields = fields or {}
    ranks = sys.ranks(j)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", "band_k", "rank", "weight"] + [f"hs_mass_{name}" for name in fields])
        masses = {
            name: np.sum(np.abs(f.matrices.reshape(len(g), -1)) ** 2, axis=1) * g.weight
            for name, f in fields.items()
        }
        for i in range(len(g)):
            row = [repr(float(g.lam[i])), int(g.band[i]), int(ranks[i]), repr(float(g.weight[i]))]
            row += [repr(float(masses[name][i])) for name in fields]
            w.writerow(row)
