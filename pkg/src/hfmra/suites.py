"""Verification suites behind ``hfmra verify``.

Each check returns a dict with a residual, its tolerance and a pass flag, so
reports can be compared byte for byte across runs.
"""

from __future__ import annotations

import csv
import math
import warnings
from pathlib import Path

import numpy as np

from .config import RunConfig
from .group import GroupElement, IDENTITY, dilate, inverse, lattice_points, membership_residual, multiply
from .hermite import HermiteBasis, homomorphism_residual, rep_dilation_check, rep_matrix, unitarity_residual
from .plancherel import band_mass, build_grid, convolve, dilate_field, hs_norm_sq, involution, random_field, synthesize
from .shannon import (
    RankTruncationWarning,
    build_sinc,
    convergence_range,
    rank_of,
    residual_high,
    residual_low,
)


def check(name: str, residual: float, tol: float, **extra) -> dict:
    out = {"name": name, "residual": float(residual), "tolerance": tol, "pass": bool(residual <= tol)}
    out.update(extra)
    return out


def coord_residual(a: GroupElement, b: GroupElement, scale: float = 1.0) -> float:
    """Largest coordinate deviation divided by ``scale``."""
    return max(abs(x - y) for x, y in zip(a.as_tuple(), b.as_tuple())) / scale


def magnitude(*gs: GroupElement) -> float:
    """Rounding scale of a product of the inputs: max(1, |coord|)^2."""
    m = max(1.0, *(abs(x) for g in gs for x in g.as_tuple()))
    return m * m


# ---------------------------------------------------------------- group


def group_suite(cfg: RunConfig, samples: int = 200) -> list[dict]:
    """Group axioms on random inputs with |coords| <= 1e3.

    Real inputs are judged relative to the rounding scale max(1, |coord|)^2;
    dyadic inputs (multiples of 1/64) make every operation exact in binary
    floating point, so for them the absolute residual is reported.
    """
    rng = np.random.default_rng(cfg.seeds.group)
    tol = cfg.tolerances.group

    def draw_real():
        return GroupElement(*map(float, rng.uniform(-1e3, 1e3, 3)))

    def draw_dyadic():
        return GroupElement(*map(float, rng.integers(-64000, 64001, 3) / 64.0))

    res = {key: 0.0 for key in ("identity", "inverse", "assoc", "auto", "comp")}
    exact = dict(res)
    for _ in range(samples):
        for draw, store, rel in ((draw_real, res, True), (draw_dyadic, exact, False)):
            g, h, k = draw(), draw(), draw()
            a, b = (float(x) for x in rng.uniform(0.1, 10.0, 2))
            if not rel:
                a, b = 2.0 ** int(rng.integers(-3, 4)), 2.0 ** int(rng.integers(-3, 4))
            sc = magnitude(g, h, k) if rel else 1.0
            sd = magnitude(dilate(max(a, b, a * b), g), dilate(max(a, b, a * b), h)) if rel else 1.0
            store["identity"] = max(store["identity"], coord_residual(g * IDENTITY, g, sc), coord_residual(IDENTITY * g, g, sc))
            store["inverse"] = max(store["inverse"], coord_residual(g * inverse(g), IDENTITY, sc))
            store["assoc"] = max(store["assoc"], coord_residual((g * h) * k, g * (h * k), sc))
            store["auto"] = max(store["auto"], coord_residual(dilate(a, g * h), dilate(a, g) * dilate(a, h), sd))
            store["comp"] = max(store["comp"], coord_residual(dilate(a, dilate(b, g)), dilate(a * b, g), sd))
    lat = cfg.lattice.spec()
    pts = lattice_points(lat, 2)
    closure = 0.0
    for i in range(0, len(pts), 7):
        for j in range(0, len(pts), 11):
            closure = max(
                closure,
                membership_residual(lat, multiply(pts[i], pts[j])),
                membership_residual(lat, inverse(pts[i])),
            )
    names = {
        "identity": "group identity",
        "inverse": "group inverse",
        "assoc": "group associativity",
        "auto": "dilation automorphism",
        "comp": "dilation composition",
    }
    out = []
    for key, label in names.items():
        out.append(check(label + " (relative to rounding scale)", res[key], tol))
        out.append(check(label + " (dyadic inputs, absolute)", exact[key], tol))
    out.append(check("lattice closure", closure, cfg.tolerances.lattice))
    return out


# ---------------------------------------------------------------- sinc identities


def _grid_and_sinc(cfg: RunConfig):
    grid = build_grid(cfg.d, cfg.k_min, cfg.k_max, cfg.Q)
    sys = build_sinc(grid, cfg.n_max, allow_truncation=cfg.allow_truncation)
    return grid, sys


def sinc_suite(cfg: RunConfig) -> list[dict]:
    grid, sys = _grid_and_sinc(cfg)
    lo, hi = convergence_range(sys)
    levels = range(lo, hi + 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankTruncationWarning)
        fields = {j: sys.level(j) for j in levels}
    bad_self = bad_idem = bad_nest = bad_support = bad_detail = bad_dilate = 0
    for j, s in fields.items():
        bad_self += int(not involution(s).equals(s))
        bad_idem += int(not convolve(s, s).equals(s))
        cap = math.ldexp(math.pi / cfg.d, 2 * j - 1)
        outside = np.abs(grid.lam) > cap
        bad_support += int(np.count_nonzero(s.matrices[outside]))
        for k, t in fields.items():
            bad_nest += int(not convolve(s, t).equals(fields[min(j, k)]))
        src = grid.shift_map(j) >= 0
        if src.any():
            shifted = dilate_field(sys.sinc, j)
            bad_dilate += int(not np.array_equal(shifted.matrices[src], s.matrices[src]))
    for j in levels:
        if j + 1 > hi:
            continue
        qj = fields[j + 1] - fields[j]
        for k in levels:
            if k + 1 > hi or k == j:
                continue
            qk = fields[k + 1] - fields[k]
            bad_detail += int(np.count_nonzero(convolve(qj, qk).matrices))
    hs = np.sum(np.abs(sys.sinc.matrices.reshape(len(grid), -1)) ** 2, axis=1)
    bad_rank = 0
    for i, k in enumerate(grid.band):
        if k >= 0 and rank_of(int(k)) <= cfg.n_max:
            bad_rank += int(hs[i] != rank_of(int(k)))
        elif k < 0:
            bad_rank += int(hs[i] != 0)
    return [
        check("self-adjointness S_j = S_j*", bad_self, 0, levels=[lo, hi]),
        check("idempotence S_j S_j = S_j", bad_idem, 0),
        check("nesting S_j S_k = S_min(j,k)", bad_nest, 0),
        check("band support of S_j", bad_support, 0),
        check("detail orthogonality Q_j Q_k = 0", bad_detail, 0),
        check("dilate_field(S, j) = S_j on in-range bands", bad_dilate, 0),
        check("per-point HS^2 = 2^(2k)+1", bad_rank, 0),
    ]


def analytic_sinc_norm_sq(d: int, k_max: int) -> float:
    return sum(rank_of(k) * band_mass(k, d) for k in range(0, k_max + 1))


def norm_suite(cfg: RunConfig) -> list[dict]:
    grid, sys = _grid_and_sinc(cfg)
    numeric = hs_norm_sq(sys.sinc)
    exact = analytic_sinc_norm_sq(cfg.d, cfg.k_max)
    limit = 9.0 / (64.0 * cfg.d**2)
    basis = HermiteBasis(cfg.n_max)
    inv = synthesize(sys.sinc, IDENTITY, basis).real
    return [
        check(
            "hs_norm^2(S) against truncated band sum",
            abs(numeric - exact) / exact,
            cfg.tolerances.norm_rel,
            numeric=numeric,
            analytic=exact,
            infinite_limit=limit,
        ),
        check(
            "synthesize(S, identity) against hs_norm^2(S)",
            abs(inv - numeric) / numeric,
            cfg.tolerances.inversion_rel,
            synthesized=inv,
            hs_norm_sq=numeric,
        ),
    ]


# ---------------------------------------------------------------- convergence


def convergence_suite(cfg: RunConfig, out_dir: Path | None = None) -> list[dict]:
    grid, sys = _grid_and_sinc(cfg)
    lo, hi = convergence_range(sys)
    rng = np.random.default_rng(cfg.seeds.convergence)
    fields = [random_field(grid, cfg.n_max, rng) for _ in range(cfg.seeds.count)]
    rows = []
    monotone_breaks = 0
    end_high = end_low = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankTruncationWarning)
        for t, f in enumerate(fields):
            highs = [residual_high(f, sys, j) for j in range(lo, hi + 1)]
            lows = [residual_low(f, sys, j) for j in range(lo, hi + 1)]
            monotone_breaks += sum(int(b > a) for a, b in zip(highs, highs[1:]))
            end_high = max(end_high, highs[-1])
            end_low = max(end_low, lows[0])
            rows += [(j, t, lw, hg) for j, lw, hg in zip(range(lo, hi + 1), lows, highs)]
    if out_dir is not None:
        with open(Path(out_dir) / "convergence.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["j", "field", "residual_low", "residual_high"])
            for j, t, lw, hg in rows:
                w.writerow([j, t, repr(lw), repr(hg)])
    return [
        check("residual_high nonincreasing in j", monotone_breaks, 0, j_range=[lo, hi]),
        check("residual_high = 0 at j_max", end_high, 0.0, j_max=hi),
        check("residual_low = 0 at j_min", end_low, 0.0, j_min=lo),
    ]


# ---------------------------------------------------------------- representations


def rep_suite(cfg: RunConfig, out_dir: Path | None = None) -> list[dict]:
    grid = build_grid(cfg.d, cfg.k_min, cfg.k_max, cfg.Q)
    basis = HermiteBasis(cfg.n_max)
    tol = cfg.tolerances.rep
    steps = (-2.0, -1.0, 0.0, 1.0, 2.0)
    elements = [GroupElement(p, q, 0.0) for p in steps for q in steps]
    pairs = [
        (GroupElement(2.0, 2.0, 0.5), GroupElement(-2.0, 2.0, -1.0)),
        (GroupElement(2.0, -2.0, 0.0), GroupElement(2.0, 2.0, 0.0)),
        (GroupElement(-1.0, 2.0, 0.25), GroupElement(2.0, -1.0, 0.0)),
        (GroupElement(0.5, -1.5, 1.0), GroupElement(-2.0, -2.0, 0.5)),
    ]
    rows = []
    unit = hom = center = 0.0
    for lam in grid.lam:
        lam = float(lam)
        u = max(unitarity_residual(rep_matrix(lam, g, basis, check=False).entries) for g in elements)
        h = max(homomorphism_residual(lam, g, k, basis) for g, k in pairs)
        c_m = rep_matrix(lam, GroupElement(0.0, 0.0, 1.7), basis, check=False).entries
        c = float(np.max(np.abs(c_m - np.exp(1j * lam * 1.7) * np.eye(cfg.n_max))))
        unit, hom, center = max(unit, u), max(hom, h), max(center, c)
        rows.append((lam, u, h))
    dil = 0.0
    probes = [GroupElement(1.0, 0.0, 0.0), GroupElement(0.5, -1.0, 0.3), GroupElement(-1.5, 1.5, -2.0)]
    for j in (-1, 1, 2):
        ok = grid.shift_map(j) >= 0
        for lam in grid.lam[ok]:
            for g in probes:
                dil = max(dil, rep_dilation_check(float(lam), 2.0**j, g, basis))
    # non-dyadic factors exercise the quadrature rather than exact power-of-two scaling
    for a in (0.7, 1.3):
        for lam in grid.lam[:: max(1, len(grid) // 24)]:
            for g in probes:
                dil = max(dil, rep_dilation_check(float(lam), a, g, basis))
    if out_dir is not None:
        with open(Path(out_dir) / "representation.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["lambda", "unitarity_residual", "homomorphism_residual"])
            for lam, u, h in rows:
                w.writerow([repr(lam), repr(u), repr(h)])
    passing = [lam for lam, u, h in rows if u <= tol and h <= tol]
    return [
        check("leading-block unitarity, |p|,|q| <= 2", unit, tol),
        check("leading-block homomorphism, |p|,|q| <= 2", hom, tol),
        check("center action", center, cfg.tolerances.center),
        check("dilation equivalence", dil, tol),
        {
            "name": "representation suite coverage",
            "points": len(rows),
            "points_within_tolerance": len(passing),
            "largest_abs_lambda_below_which_all_pass": _clean_prefix(rows, tol),
            "pass": len(passing) == len(rows),
        },
    ]


def _clean_prefix(rows, tol) -> float:
    """Largest |lam| such that every point with smaller or equal |lam| passes."""
    best = 0.0
    for lam, u, h in sorted(rows, key=lambda r: abs(r[0])):
        if u > tol or h > tol:
            break
        best = abs(lam)
    return best


def run_verify(cfg: RunConfig, out_dir: Path | None = None) -> dict:
    suites = {
        "group": group_suite(cfg),
        "sinc": sinc_suite(cfg),
        "norm": norm_suite(cfg),
        "convergence": convergence_suite(cfg, out_dir),
        "representation": rep_suite(cfg, out_dir),
    }
    passed = all(item["pass"] for items in suites.values() for item in items)
    return {"config": cfg.to_dict(), "suites": suites, "pass": passed}
