"""Hermite functions, the scaled bases e_i^{lam'} and Schroedinger matrices.

For lam != 0 the basis used at frequency lam is e_i^{lam'} with lam' = lam / (2 pi),

    e_i^{lam'}(x) = |lam'|^{1/4} h_i(sqrt|lam'| x).

All integrals are done in the variable y = sqrt|lam'| x, where the basis is
independent of lam and one fixed Gauss-Legendre rule serves every frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from threading import Lock

import numpy as np

from .group import GroupElement


class NumericalAccuracyError(RuntimeError):
    """Raised when a quadrature error estimate exceeds its threshold."""


def hermite_table(n: int, x) -> np.ndarray:
    """Values h_0..h_{n-1} at the points x, shape (n, len(x))."""
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    out = np.empty((n, flat.size))
    if n == 0:
        return out.reshape((0,) + x.shape)
    out[0] = math.pi ** -0.25 * np.exp(-0.5 * flat * flat)
    if n > 1:
        out[1] = math.sqrt(2.0) * flat * out[0]
    for k in range(1, n - 1):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * flat * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out.reshape((n,) + x.shape)


def hermite_eval(n: int, x, n_max: int | None = None):
    """L2-normalized Hermite function h_n, via the three-term recurrence."""
    if n < 0:
        raise ValueError("Hermite index must be nonnegative")
    if n_max is not None and n >= n_max:
        raise ValueError(f"index {n} outside basis of size {n_max}")
    vals = hermite_table(n + 1, x)[n]
    return float(vals) if np.ndim(vals) == 0 else vals


def scaled_basis_eval(i: int, lambda_prime: float, x, n_max: int | None = None):
    """e_i^{lambda_prime}(x) = |lambda_prime|^{1/4} h_i(sqrt|lambda_prime| x)."""
    if lambda_prime == 0:
        raise ValueError("scaled basis is undefined at lambda' = 0")
    s = math.sqrt(abs(lambda_prime))
    return math.sqrt(s) * hermite_eval(i, s * np.asarray(x, dtype=float), n_max)


def panel_rule(half_width: float, panels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on [-half_width, half_width]."""
    base_x, base_w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(-half_width, half_width, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * base_x[None, :]).ravel()
    weights = (half[:, None] * base_w[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True)
class HermiteBasis:
    """Truncated basis of size n_max together with its fixed quadrature rule.

    The rule covers y in [-(sqrt(2 n_max) + 12), sqrt(2 n_max) + 12] with
    8 n_max nodes, as 8 Gauss-Legendre panels of n_max nodes each. A second
    rule with 7 panels and the same order family is used only to estimate
    quadrature error.
    """

    n_max: int = 64

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be positive")

    @property
    def half_width(self) -> float:
        return math.sqrt(2.0 * self.n_max) + 12.0

    @cached_property
    def rule(self) -> tuple[np.ndarray, np.ndarray]:
        return panel_rule(self.half_width, 8, self.n_max)

    @cached_property
    def check_rule(self) -> tuple[np.ndarray, np.ndarray]:
        return panel_rule(self.half_width, 7, -(-8 * self.n_max // 7))

    @cached_property
    def node_table(self) -> np.ndarray:
        """h_i at the main rule's nodes, shape (n_max, nodes)."""
        return hermite_table(self.n_max, self.rule[0])

    def table(self, y) -> np.ndarray:
        return hermite_table(self.n_max, y)

    def gram(self) -> np.ndarray:
        h = self.node_table
        return (h * self.rule[1]) @ h.T


def _rep_entries(lam: float, g: GroupElement, n: int, nodes, weights, table=None) -> np.ndarray:
    sigma = math.sqrt(abs(lam) / (2.0 * math.pi))
    h0 = hermite_table(n, nodes) if table is None else table
    hq = hermite_table(n, nodes + sigma * g.q)
    phase = np.exp(1j * lam * g.t) * np.exp(-1j * lam * (g.p * nodes / sigma + 0.5 * g.p * g.q))
    return (h0 * (weights * phase)) @ hq.T


@dataclass(frozen=True)
class RepMatrix:
    lam: float
    element: GroupElement
    entries: np.ndarray
    error_estimate: float = float("nan")


def rep_matrix(
    lam: float,
    g: GroupElement,
    basis: HermiteBasis,
    check: bool = True,
    tol: float = 1e-8,
) -> RepMatrix:
    """Matrix of rho_lam(g) in the basis e_i^{lam/2pi}.

    rho_lam(p, q, t) phi(x) = exp(i lam t) exp(-i lam (p x + p q / 2)) phi(x + q),
    with the modulation sign chosen so that rho_lam(g) rho_lam(h) = rho_lam(g * h)
    for the product in ``group``. Entry (i, j) is <rho_lam(g) e_j, e_i>.

    With ``check`` the result is compared against a second quadrature rule and
    NumericalAccuracyError is raised when the discrepancy exceeds ``tol``.
    """
    if lam == 0:
        raise ValueError("Schroedinger representations require lambda != 0")
    nodes, weights = basis.rule
    entries = _rep_entries(lam, g, basis.n_max, nodes, weights, basis.node_table)
    err = float("nan")
    if check:
        alt = _rep_entries(lam, g, basis.n_max, *basis.check_rule)
        err = float(np.max(np.abs(entries - alt)))
        if err > tol:
            raise NumericalAccuracyError(
                f"quadrature error estimate {err:.3e} exceeds {tol:.1e} at lambda={lam}, g={g}"
            )
    return RepMatrix(lam, g, entries, err)


def leading_block(a: np.ndarray, size: int | None = None) -> np.ndarray:
    size = a.shape[-1] // 4 if size is None else size
    return a[..., :size, :size]


def unitarity_residual(m: np.ndarray) -> float:
    """Max-entry deviation of the leading quarter block of M*M from identity."""
    block = leading_block(m.conj().T @ m)
    return float(np.max(np.abs(block - np.eye(block.shape[0]))))


def homomorphism_residual(lam: float, g: GroupElement, h: GroupElement, basis: HermiteBasis) -> float:
    mg = rep_matrix(lam, g, basis, check=False).entries
    mh = rep_matrix(lam, h, basis, check=False).entries
    mgh = rep_matrix(lam, g * h, basis, check=False).entries
    return float(np.max(np.abs(leading_block(mg @ mh - mgh))))


def rep_dilation_check(lam: float, a: float, g: GroupElement, basis: HermiteBasis) -> float:
    """Leading-block deviation between rho_lam(delta_{1/a} g) and rho_{lam/a^2}(g).

    Conjugation by the L2 dilation maps e_i^{lam'} to e_i^{lam'/a^2}, so the two
    matrices agree index by index.
    """
    from .group import dilate

    if not a > 0:
        raise ValueError("dilation factor must be positive")
    lhs = rep_matrix(lam, dilate(1.0 / a, g), basis, check=False).entries
    rhs = rep_matrix(lam / (a * a), g, basis, check=False).entries
    return float(np.max(np.abs(leading_block(lhs - rhs))))


@dataclass
class RepCache:
    """Insert-once memo of representation matrices keyed by (grid index, point index)."""

    basis: HermiteBasis
    _store: dict = field(default_factory=dict)
    _lock: Lock = field(default_factory=Lock)

    def get(self, key, lam: float, g: GroupElement) -> np.ndarray:
        hit = self._store.get(key)
        if hit is not None:
            return hit
        entries = rep_matrix(lam, g, self.basis, check=False).entries
        entries.setflags(write=False)
        with self._lock:
            return self._store.setdefault(key, entries)

    def __len__(self):
        return len(self._store)
