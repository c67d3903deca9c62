"""Heisenberg group arithmetic, Lie dilations and the lattices Gamma_d.

Points are triples (p, q, t) with the product

    (p1, q1, t1) * (p2, q2, t2) = (p1 + p2, q1 + q2, t1 + t2 + (p1*q2 - q1*p2) / 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_LATTICE_SCALE = (2.0 * math.pi) ** -0.5


@dataclass(frozen=True)
class GroupElement:
    p: float
    q: float
    t: float

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return multiply(self, other)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p, self.q, self.t)


IDENTITY = GroupElement(0.0, 0.0, 0.0)


def multiply(g: GroupElement, h: GroupElement) -> GroupElement:
    return GroupElement(
        g.p + h.p,
        g.q + h.q,
        g.t + h.t + 0.5 * (g.p * h.q - g.q * h.p),
    )


def inverse(g: GroupElement) -> GroupElement:
    return GroupElement(-g.p, -g.q, -g.t)


def dilate(a: float, g: GroupElement) -> GroupElement:
    """Automorphism (p, q, t) -> (a p, a q, a^2 t) for a > 0."""
    if not a > 0:
        raise ValueError(f"dilation factor must be positive, got {a!r}")
    return GroupElement(a * g.p, a * g.q, a * a * g.t)


@dataclass(frozen=True)
class LatticeSpec:
    """The lattice delta_scale(Gamma_d), Gamma_d = {(m, d k, l + d m k / 2)}.

    The center step of the realized lattice is r = scale**2.
    """

    d: int = 1
    scale: float = DEFAULT_LATTICE_SCALE

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"lattice d must be a positive integer, got {self.d!r}")
        if not self.scale > 0:
            raise ValueError(f"lattice scale must be positive, got {self.scale!r}")

    @property
    def r(self) -> float:
        return self.scale * self.scale

    @classmethod
    def from_r(cls, d: int, r: float) -> "LatticeSpec":
        if not r > 0:
            raise ValueError(f"center step r must be positive, got {r!r}")
        return cls(d=d, scale=math.sqrt(r))

    def rescaled(self, factor: float) -> "LatticeSpec":
        """The lattice delta_factor applied on top of this one."""
        return LatticeSpec(d=self.d, scale=self.scale * factor)


def lattice_indices(radius: int) -> np.ndarray:
    """Integer triples (m, k, l) of the index box, lexicographic, shape (N, 3)."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    axis = np.arange(-radius, radius + 1)
    m, k, l = np.meshgrid(axis, axis, axis, indexing="ij")
    return np.stack([m.ravel(), k.ravel(), l.ravel()], axis=1)


def lattice_coords(spec: LatticeSpec, radius: int) -> np.ndarray:
    """Coordinates (p, q, t) of the enumerated lattice points, shape (N, 3)."""
    idx = lattice_indices(radius).astype(float)
    m, k, l = idx[:, 0], idx[:, 1], idx[:, 2]
    a = spec.scale
    return np.stack([a * m, a * spec.d * k, a * a * (l + 0.5 * spec.d * m * k)], axis=1)


def lattice_point(spec: LatticeSpec, m: int, k: int, l: int) -> GroupElement:
    base = GroupElement(float(m), float(spec.d * k), l + 0.5 * spec.d * m * k)
    return dilate(spec.scale, base)


def lattice_points(spec: LatticeSpec, radius: int) -> list[GroupElement]:
    return [GroupElement(*map(float, row)) for row in lattice_coords(spec, radius)]


def membership_residual(spec: LatticeSpec, g: GroupElement) -> float:
    """Distance of the preimage of g under delta_scale from the Gamma_d pattern.

    Zero (up to rounding) exactly when g lies in the realized lattice.
    """
    base = dilate(1.0 / spec.scale, g)
    m = base.p
    k = base.q / spec.d
    l = base.t - 0.5 * spec.d * m * k
    return max(abs(x - round(x)) for x in (m, k, l))
