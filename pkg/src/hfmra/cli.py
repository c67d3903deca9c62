"""Command-line driver.

    hfmra verify --config run.json
    hfmra frames --output out/frames
    hfmra admissible --lattice-r 0.5

Exit status: 0 all checks pass, 2 bad config, 3 a check failed, 4 inadmissible lattice.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, config_from_dict, dump_json
from .frames import (
    CoefficientEngine,
    InadmissibleError,
    SupportError,
    band_envelope,
    frame_test_fields,
    level_systems,
    wavelet_from_scaling,
    write_coefficient_csv,
)
from .pipeline import (
    STATUS_CONFIG,
    STATUS_FAIL,
    STATUS_INADMISSIBLE,
    STATUS_OK,
    FramesSetup,
    _admissibility_dict,
    admissibility_stage,
    optimize_stage,
    parseval_stage,
    run_frames,
    scaling_reports,
    write_parseval_csv,
    write_trace_csv,
)
from .plancherel import build_grid, read_field, write_field
from .shannon import RankTruncationWarning, band_masses, build_sinc, write_sinc_csv
from .suites import run_verify

# flag -> (config path, type)
OVERRIDES = {
    "d": ("d", int),
    "k_min": ("k_min", int),
    "k_max": ("k_max", int),
    "Q": ("Q", int),
    "n_max": ("n_max", int),
    "radius": ("radius", int),
    "lattice_d": ("lattice.d", int),
    "lattice_r": ("lattice.r", float),
    "lattice_scale": ("lattice.scale", float),
    "frames_k_min": ("frames.k_min", int),
    "frames_k_max": ("frames.k_max", int),
    "frames_Q": ("frames.Q", int),
    "steps": ("frames.steps", int),
    "step_size": ("frames.step_size", float),
    "output": ("output", str),
}


def _set(data: dict, dotted: str, value):
    *head, last = dotted.split(".")
    for key in head:
        data = data.setdefault(key, {})
    data[last] = value


def build_config(args) -> RunConfig:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    for flag, (dotted, _) in OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            _set(data, dotted, value)
    if args.j_range is not None:
        data["j_range"] = list(args.j_range)
    if args.allow_truncation:
        data["allow_truncation"] = True
    if args.full_translations:
        _set(data, "frames.half_translations", False)
    if args.seed_offset:
        seeds = data.setdefault("seeds", {})
        defaults = dict(vars(RunConfig().seeds))
        for key, value in defaults.items():
            if key != "count":
                seeds[key] = seeds.get(key, value) + args.seed_offset
    return config_from_dict(data)


def _out(cfg: RunConfig) -> Path:
    path = Path(cfg.output)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_build_grid(cfg: RunConfig, args) -> int:
    grid = build_grid(cfg.d, cfg.k_min, cfg.k_max, cfg.Q)
    out = _out(cfg)
    with open(out / "grid.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "sign", "band_k", "position", "lambda", "weight"])
        for i in range(len(grid)):
            w.writerow([i, int(grid.sign[i]), int(grid.band[i]), int(grid.position[i]), repr(float(grid.lam[i])), repr(float(grid.weight[i]))])
    dump_json(grid.describe(), out / "grid.json")
    print(f"{len(grid)} points -> {out / 'grid.csv'}")
    return STATUS_OK


def cmd_build_sinc(cfg: RunConfig, args) -> int:
    grid = build_grid(cfg.d, cfg.k_min, cfg.k_max, cfg.Q)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankTruncationWarning)
        sys_ = build_sinc(grid, cfg.n_max, cfg.allow_truncation)
    out = _out(cfg)
    write_sinc_csv(sys_, out / "sinc.csv", {"sinc": sys_.sinc})
    write_field(sys_.sinc, out / "sinc.bin")
    masses = band_masses(sys_.sinc)
    dump_json({"grid": grid.describe(), "band_hs_mass": {str(k): v for k, v in masses.items()}, "ranks": {str(k): v for k, v in sys_.rank_table.items()}}, out / "sinc.json")
    print(f"sinc field -> {out / 'sinc.bin'}")
    return STATUS_OK


def _print_items(items):
    for item in items:
        flag = "PASS" if item["pass"] else "FAIL"
        res = item.get("residual")
        tail = f"  residual={res:.3e}" if isinstance(res, float) else ""
        print(f"  [{flag}] {item['name']}{tail}")


def cmd_verify(cfg: RunConfig, args) -> int:
    out = _out(cfg)
    report = run_verify(cfg, out)
    dump_json(report, out / "verify_report.json")
    for name, items in report["suites"].items():
        print(name)
        _print_items(items)
    return STATUS_OK if report["pass"] else STATUS_FAIL


def cmd_admissible(cfg: RunConfig, args) -> int:
    setup = FramesSetup(cfg)
    rep = admissibility_stage(setup)["lattice"]
    report = dict(_admissibility_dict(rep, setup.lat), config=cfg.to_dict())
    dump_json(report, _out(cfg) / "admissibility.json")
    print(f"max_ratio={rep.max_ratio!r} pass={rep.passed}")
    return STATUS_OK if rep.passed else STATUS_INADMISSIBLE


def cmd_optimize(cfg: RunConfig, args) -> int:
    setup = FramesSetup(cfg)
    out = _out(cfg)
    res, _ = optimize_stage(setup)
    write_trace_csv(out / "optimizer_trace.csv", res.trace)
    write_field(res.phi, out / "phi.bin")
    scal = scaling_reports(setup, res.phi)
    tol = cfg.tolerances
    ok = res.reduction >= tol.reduction and scal["train"].tightness_residual <= tol.tightness and not res.aborted
    report = {
        "config": cfg.to_dict(),
        "seeds": dict(vars(cfg.seeds)),
        "trace": [float(v) for v in res.trace],
        "reduction": res.reduction,
        "aborted": res.aborted,
        "reason": res.reason,
        "scaling": {k: v.as_dict() for k, v in scal.items()},
        "pass": bool(ok),
    }
    dump_json(report, out / "optimize_report.json")
    print(f"reduction={res.reduction:.3e} train residual={scal['train'].tightness_residual:.3e}")
    return STATUS_OK if ok else STATUS_FAIL


def _field_arg(path, cfg: RunConfig, name: str) -> Path:
    return Path(path) if path else Path(cfg.output) / name


def cmd_wavelet(cfg: RunConfig, args) -> int:
    setup = FramesSetup(cfg)
    phi = read_field(_field_arg(args.field, cfg, "phi.bin"))
    if phi.grid != setup.grid:
        raise ConfigError("phi was written on a different grid than the frames config")
    psi = wavelet_from_scaling(phi, setup.sys)
    out = _out(cfg)
    write_field(psi, out / "psi.bin")
    env = band_envelope(psi)
    bound = np.pi / cfg.d
    dump_json({"band_envelope": env, "claimed_bound": bound, "inside": env <= bound}, out / "wavelet_report.json")
    print(f"psi band envelope {env!r} (bound {bound!r})")
    return STATUS_OK if env <= bound else STATUS_FAIL


def cmd_parseval(cfg: RunConfig, args) -> int:
    setup = FramesSetup(cfg)
    psi = read_field(_field_arg(args.field, cfg, "psi.bin"))
    if psi.grid != setup.grid:
        raise ConfigError("psi was written on a different grid than the frames config")
    out = _out(cfg)
    half = cfg.frames.half_translations
    reps = parseval_stage(setup, psi, half)
    label = "half" if half else "full"
    write_parseval_csv(out / "parseval_radius.csv", {label: reps})
    main = reps[cfg.radius]
    report = dict(main.as_dict(), config=cfg.to_dict(), seeds=dict(vars(cfg.seeds)), translations=label)
    report["sweep"] = {str(R): r.as_dict() for R, r in sorted(reps.items())}
    report["pass"] = main.tightness_residual <= cfg.tolerances.parseval
    dump_json(report, out / "parseval_report.json")
    print(f"radius {cfg.radius}: lower={main.lower_est:.4f} upper={main.upper_est:.4f}")
    return STATUS_OK if report["pass"] else STATUS_FAIL


def cmd_export(cfg: RunConfig, args) -> int:
    """Per-point HS mass of a field dump, and optionally its lattice coefficients."""
    path = _field_arg(args.field, cfg, "psi.bin")
    f = read_field(path)
    out = _out(cfg)
    target = out / (path.stem + "_points.csv")
    with open(target, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", "band_k", "weight", "hs_mass"])
        per = np.sum(np.abs(f.matrices.reshape(len(f.grid), -1)) ** 2, axis=1)
        for lam, k, wt, m in zip(f.grid.lam, f.grid.band, f.grid.weight, per):
            w.writerow([repr(float(lam)), int(k), repr(float(wt)), repr(float(m * wt))])
    print(f"points -> {target}")
    if args.coefficients:
        setup = FramesSetup(cfg)
        if f.grid != setup.grid:
            raise ConfigError("field was written on a different grid than the frames config")
        test = frame_test_fields(setup.sys, 1, cfg.seeds.span_corpus, "span", setup.j_range)
        lo, hi = setup.j_range
        levels = list(range(lo, hi + 1))
        half = cfg.frames.half_translations
        eng = CoefficientEngine(setup.basis, setup.grid, setup.lat.d, cfg.radius)
        coeffs = eng.coefficients(test, level_systems(f, setup.lat, levels, half))
        target = out / (path.stem + "_coefficients.csv")
        write_coefficient_csv(target, dict(zip(levels, coeffs)), setup.lat, half)
        print(f"coefficients -> {target}")
    return STATUS_OK


def cmd_frames(cfg: RunConfig, args) -> int:
    status, report = run_frames(cfg, _out(cfg))
    for item in report.get("criteria", []):
        print(f"  [{'PASS' if item['pass'] else 'FAIL'}] {item['name']}")
    if status == STATUS_INADMISSIBLE:
        print(f"inadmissible lattice: max_ratio={report['max_ratio']!r}")
    return status


COMMANDS = {
    "build-grid": (cmd_build_grid, "write the frequency grid as CSV and JSON"),
    "build-sinc": (cmd_build_sinc, "write the sinc-type projection field"),
    "verify": (cmd_verify, "run the identity, convergence and representation suites"),
    "admissible": (cmd_admissible, "check tight-frame admissibility of the lattice"),
    "optimize": (cmd_optimize, "search for a near-tight scaling generator"),
    "wavelet": (cmd_wavelet, "derive the wavelet from a scaling generator dump"),
    "parseval": (cmd_parseval, "Parseval sums of the wavelet system"),
    "export": (cmd_export, "export a field dump as CSV"),
    "frames": (cmd_frames, "full pipeline: admissibility, search, wavelet, Parseval"),
}


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON run config; flags override its fields")
    p.add_argument("--d", type=int)
    p.add_argument("--k-min", dest="k_min", type=int)
    p.add_argument("--k-max", dest="k_max", type=int)
    p.add_argument("--Q", type=int, help="grid points per octave and sign")
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--allow-truncation", action="store_true")
    p.add_argument("--radius", type=int)
    p.add_argument("--j-range", dest="j_range", type=int, nargs=2, metavar=("J_MIN", "J_MAX"))
    p.add_argument("--lattice-d", dest="lattice_d", type=int)
    p.add_argument("--lattice-r", dest="lattice_r", type=float)
    p.add_argument("--lattice-scale", dest="lattice_scale", type=float)
    p.add_argument("--frames-k-min", dest="frames_k_min", type=int)
    p.add_argument("--frames-k-max", dest="frames_k_max", type=int)
    p.add_argument("--frames-Q", dest="frames_Q", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--step-size", dest="step_size", type=float)
    p.add_argument("--full-translations", action="store_true", help="use Gamma instead of Gamma/2 for W_0")
    p.add_argument("--seed-offset", type=int, default=0, help="shift every seed by this amount")
    p.add_argument("--output", "-o")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hfmra", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name in ("wavelet", "parseval", "export"):
            p.add_argument("--field", help="binary field dump to read")
        if name == "export":
            p.add_argument("--coefficients", action="store_true", help="also write lattice coefficients")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return STATUS_CONFIG
    handler = COMMANDS[args.command][0]
    try:
        return handler(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return STATUS_CONFIG
    except InadmissibleError as exc:
        print(f"inadmissible: {exc}", file=sys.stderr)
        return STATUS_INADMISSIBLE
    except (SupportError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return STATUS_FAIL


if __name__ == "__main__":
    sys.exit(main())
