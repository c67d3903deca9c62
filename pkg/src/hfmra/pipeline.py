"""Frame experiments end to end: gate, scaling generator search, wavelet, Parseval sums.

Every stage writes its own files so the CLI subcommands can run them one at a
time. Nothing time-dependent goes into a report, which keeps repeated runs
byte-identical.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .config import RunConfig, dump_json
from .frames import (
    AdmissibilityReport,
    CoefficientEngine,
    OptimizeResult,
    admissible,
    analytic_support_radius,
    band_envelope,
    box_energy,
    calibrated_start,
    detail_band_fields,
    frame_bounds_estimate,
    frame_test_fields,
    level_systems,
    optimize_generator,
    parseval_check,
    wavelet_from_scaling,
)
from .group import LatticeSpec
from .hermite import HermiteBasis
from .plancherel import LambdaGrid, OperatorField, build_grid, hs_norm_sq, write_field
from .shannon import MultiplicityFn, RankTruncationWarning, SincSystem, build_sinc

STATUS_OK = 0
STATUS_CONFIG = 2
STATUS_FAIL = 3
STATUS_INADMISSIBLE = 4


@dataclass
class FramesSetup:
    """Grid, sinc system, basis and lattice shared by the frame stages."""

    cfg: RunConfig

    @cached_property
    def grid(self) -> LambdaGrid:
        fr = self.cfg.frames
        return build_grid(self.cfg.d, fr.k_min, fr.k_max, fr.Q)

    @cached_property
    def sys(self) -> SincSystem:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RankTruncationWarning)
            return build_sinc(self.grid, self.cfg.n_max, self.cfg.frames.allow_truncation)

    @cached_property
    def basis(self) -> HermiteBasis:
        return HermiteBasis(self.cfg.n_max)

    @cached_property
    def lat(self) -> LatticeSpec:
        return self.cfg.lattice.spec()

    @property
    def j_range(self) -> tuple[int, int]:
        return tuple(self.cfg.j_range)


def admissibility_stage(setup: FramesSetup) -> dict:
    """The configured lattice plus the control with its right-hand side shrunk 8x."""
    m = MultiplicityFn(setup.cfg.d)
    own = admissible(m, setup.lat, setup.grid)
    shrunk_lat = LatticeSpec(setup.lat.d * 8, setup.lat.scale)
    shrunk = admissible(m, shrunk_lat, setup.grid)
    return {"lattice": own, "shrunk_rhs_8x": shrunk}


def _admissibility_dict(rep: AdmissibilityReport, lat: LatticeSpec) -> dict:
    return dict(rep.as_dict(), lattice={"d": lat.d, "scale": lat.scale, "r": lat.r})


def optimize_stage(setup: FramesSetup) -> tuple[OptimizeResult, OperatorField]:
    cfg, fr = setup.cfg, setup.cfg.frames
    start = calibrated_start(setup.sys, setup.lat, cfg.radius, setup.basis, np.random.default_rng(cfg.seeds.init))
    train = frame_test_fields(setup.sys, cfg.seeds.count, cfg.seeds.v0_corpus, "v0")
    res = optimize_generator(
        start,
        setup.lat,
        cfg.radius,
        train,
        fr.steps,
        fr.step_size,
        setup.basis,
        setup.sys,
        patience=fr.patience,
    )
    return res, start


def scaling_reports(setup: FramesSetup, phi: OperatorField) -> dict:
    cfg = setup.cfg
    out = {}
    for name, seed in (("train", cfg.seeds.v0_corpus), ("holdout", cfg.seeds.holdout)):
        tests = frame_test_fields(setup.sys, cfg.seeds.count, seed, "v0")
        out[name] = frame_bounds_estimate(phi, setup.lat, [0], cfg.radius, tests, setup.basis)
    return out


def leakage_stage(setup: FramesSetup, psi: OperatorField, half: bool) -> dict:
    """Energy of W_j test fields at every level; off-diagonal entries are leakage."""
    lo, hi = setup.j_range
    levels = list(range(lo, hi + 1))
    fields = detail_band_fields(setup.sys, levels, setup.cfg.seeds.detail)
    tests = [fields[j] for j in levels]
    R = setup.cfg.radius
    eng = CoefficientEngine(setup.basis, setup.grid, setup.lat.d, R)
    coeffs = eng.coefficients(tests, level_systems(psi, setup.lat, levels, half))
    norms = np.array([hs_norm_sq(f) for f in tests])
    table = np.stack([box_energy(c, R) for c in coeffs], axis=1) / norms[:, None]
    off = table.copy()
    np.fill_diagonal(off, 0.0)
    return {
        "levels": levels,
        "energy_ratio": [[float(x) for x in row] for row in table],
        "max_cross_scale": float(np.max(off)),
        "min_own_scale": float(np.min(np.diag(table))),
    }


def parseval_stage(setup: FramesSetup, psi: OperatorField, half: bool) -> dict[int, object]:
    cfg = setup.cfg
    tests = frame_test_fields(setup.sys, cfg.seeds.count, cfg.seeds.span_corpus, "span", setup.j_range)
    radii = sorted(set(cfg.frames.radii) | {cfg.radius})
    return parseval_check(psi, setup.lat, setup.j_range, cfg.radius, tests, setup.basis, half=half, radii=radii)


def _nonincreasing(values) -> bool:
    return all(b <= a for a, b in zip(values, values[1:]))


def _item(name: str, passed: bool, **extra) -> dict:
    return dict({"name": name, "pass": bool(passed)}, **extra)


def write_trace_csv(path, trace):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "objective"])
        for i, v in enumerate(trace):
            w.writerow([i, repr(float(v))])


def write_parseval_csv(path, sweeps: dict):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["translations", "radius", "lower_est", "upper_est", "tightness_residual"])
        for label, reps in sweeps.items():
            for R, rep in sorted(reps.items()):
                w.writerow([label, R, repr(rep.lower_est), repr(rep.upper_est), repr(rep.tightness_residual)])


def run_frames(cfg: RunConfig, out_dir: Path) -> tuple[int, dict]:
    """Full frame pipeline; returns (exit status, report)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tol = cfg.tolerances
    setup = FramesSetup(cfg)
    adm = admissibility_stage(setup)
    report = {
        "config": cfg.to_dict(),
        "seeds": dict(vars(cfg.seeds)),
        "radius": cfg.radius,
        "j_range": list(cfg.j_range),
        "grid": setup.grid.describe(),
        "admissibility": {
            "lattice": _admissibility_dict(adm["lattice"], setup.lat),
            "shrunk_rhs_8x": _admissibility_dict(adm["shrunk_rhs_8x"], LatticeSpec(setup.lat.d * 8, setup.lat.scale)),
        },
        "max_ratio": adm["lattice"].max_ratio,
    }
    if not adm["lattice"].passed:
        report["pass"] = False
        report["halted"] = "inadmissible lattice"
        dump_json(report, out_dir / "frames_report.json")
        return STATUS_INADMISSIBLE, report

    res, _ = optimize_stage(setup)
    write_trace_csv(out_dir / "optimizer_trace.csv", res.trace)
    write_field(res.phi, out_dir / "phi.bin")
    scal = scaling_reports(setup, res.phi)
    train = scal["train"]

    psi = wavelet_from_scaling(res.phi, setup.sys)
    write_field(psi, out_dir / "psi.bin")
    envelope = band_envelope(psi)
    claimed = math.pi / cfg.d

    modes = {"half": True, "full": False}
    default = "half" if cfg.frames.half_translations else "full"
    leak = {label: leakage_stage(setup, psi, half) for label, half in modes.items()}
    sweeps = {label: parseval_stage(setup, psi, half) for label, half in modes.items()}
    write_parseval_csv(out_dir / "parseval_radius.csv", sweeps)
    main = sweeps[default][cfg.radius]

    radii = sorted(sweeps[default])
    tight_curve = [sweeps[default][R].tightness_residual for R in radii]
    criteria = [
        _item("admissibility of the configured lattice", adm["lattice"].passed, max_ratio=adm["lattice"].max_ratio),
        _item(
            "admissible max_ratio equals the band-edge value",
            abs(adm["lattice"].max_ratio - tol.admissible_ratio) <= tol.admissible_ratio_tol,
            expected=tol.admissible_ratio,
        ),
        _item("8x-shrunk right-hand side is rejected", not adm["shrunk_rhs_8x"].passed, max_ratio=adm["shrunk_rhs_8x"].max_ratio),
        _item("objective reduction from the seeded start", res.reduction >= tol.reduction, reduction=res.reduction),
        _item("scaling tightness residual on the V_0 corpus", train.tightness_residual <= tol.tightness, residual=train.tightness_residual),
        _item("no divergence abort", not res.aborted, reason=res.reason),
        _item("wavelet multiplier support inside [-pi/d, pi/d]", envelope <= claimed * (1 + 1e-12), envelope=envelope, bound=claimed),
        _item(
            "cross-scale leakage for detail-band tests",
            leak[default]["max_cross_scale"] <= tol.leakage,
            leakage=leak[default]["max_cross_scale"],
        ),
        _item("Parseval residual at the configured radius", main.tightness_residual <= tol.parseval, residual=main.tightness_residual),
        _item("Parseval residual nonincreasing in radius", _nonincreasing(tight_curve), radii=radii, residuals=tight_curve),
    ]
    report.update(
        {
            "optimizer": {
                "trace": [float(v) for v in res.trace],
                "aborted": res.aborted,
                "reason": res.reason,
                "reduction": res.reduction,
                "steps": len(res.trace) - 1,
            },
            "scaling": {name: rep.as_dict() for name, rep in scal.items()},
            "wavelet": {
                "band_envelope": envelope,
                "largest_grid_lambda": analytic_support_radius(psi),
                "claimed_bound": claimed,
            },
            "leakage": leak,
            "parseval": {
                label: {str(R): rep.as_dict() for R, rep in sorted(reps.items())} for label, reps in sweeps.items()
            },
            "translations": default,
            "lower_est": main.lower_est,
            "upper_est": main.upper_est,
            "tightness_residual": main.tightness_residual,
            "per_test": main.as_dict()["per_test"],
            "criteria": criteria,
            "pass": all(c["pass"] for c in criteria),
        }
    )
    dump_json(report, out_dir / "frames_report.json")
    return (STATUS_OK if report["pass"] else STATUS_FAIL), report

