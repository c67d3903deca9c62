"""Acceptance criteria A1-A10 at the default desk scale.

Each test prints one line "Ak PASS|FAIL: ..." with the measured value and the
tolerance it was judged against; the terminal summary repeats all of them.
The frame pipeline runs once at full resolution (about two minutes).
"""

import filecmp
from pathlib import Path

import pytest

from hfmra.config import RunConfig, config_from_dict, dump_json
from hfmra.pipeline import run_frames
from hfmra.suites import analytic_sinc_norm_sq, rep_suite, run_verify

LINES: list[str] = []


def record(tag: str, passed: bool, detail: str):
    line = f"{tag} {'PASS' if passed else 'FAIL'}: {detail}"
    LINES.append(line)
    print(line)
    return passed


def items(report, suite):
    return {it["name"]: it for it in report["suites"][suite]}


@pytest.fixture(scope="module")
def cfg():
    return RunConfig().validate()


@pytest.fixture(scope="module")
def verify_report(cfg, tmp_path_factory):
    out = tmp_path_factory.mktemp("verify")
    return run_verify(cfg, out), out


@pytest.fixture(scope="module")
def frames_report(cfg, tmp_path_factory):
    out = tmp_path_factory.mktemp("frames")
    status, report = run_frames(cfg, out)
    return status, report


def test_a1_group_and_lattice(verify_report):
    rep, _ = verify_report
    group = rep["suites"]["group"]
    worst = max(it["residual"] for it in group if "lattice" not in it["name"])
    closure = items(rep, "group")["lattice closure"]["residual"]
    ok = all(it["pass"] for it in group)
    assert record("A1", ok, f"max group residual {worst:.2e} (tol 1e-14), lattice closure {closure:.2e}")


def test_a2_sinc_identities(verify_report):
    rep, _ = verify_report
    sinc = rep["suites"]["sinc"]
    ok = all(it["pass"] and it["residual"] == 0 for it in sinc)
    levels = sinc[0]["levels"]
    assert record("A2", ok, f"{len(sinc)} exact identities, all residuals zero, levels {levels[0]}..{levels[1]}")


def test_a3_norm_closed_form(verify_report):
    rep, _ = verify_report
    it = items(rep, "norm")["hs_norm^2(S) against truncated band sum"]
    # geometric series: 15/256 * (sum 4^-k + sum 16^-k) = 15/256 * 36/15 = 9/64
    limit_ok = abs(analytic_sinc_norm_sq(1, 60) - 9.0 / 64.0) < 1e-15
    ok = it["pass"] and limit_ok
    assert record(
        "A3",
        ok,
        f"rel error {it['residual']:.2e} (tol 5e-3), numeric {it['numeric']:.6f} vs {it['analytic']:.6f}, "
        f"series limit matches 9/64: {limit_ok}",
    )


def test_a4_convergence(verify_report):
    rep, out = verify_report
    conv = rep["suites"]["convergence"]
    rows = (Path(out) / "convergence.csv").read_text().splitlines()
    fields = {line.split(",")[1] for line in rows[1:]}
    ok = all(it["pass"] for it in conv) and len(fields) == 16
    assert record("A4", ok, f"16 fields, residual_high monotone and 0 at j_max, residual_low 0 at j_min, curves in convergence.csv")


def test_a5_representation(verify_report):
    rep, _ = verify_report
    # same suite with a doubled basis, to separate basis truncation from quadrature error
    wide = {it["name"]: it for it in rep_suite(config_from_dict({"n_max": 128}))}
    r = items(rep, "representation")
    unit = r["leading-block unitarity, |p|,|q| <= 2"]
    hom = r["leading-block homomorphism, |p|,|q| <= 2"]
    dil = r["dilation equivalence"]
    cov = r["representation suite coverage"]
    ok = unit["pass"] and hom["pass"] and dil["pass"]
    assert record(
        "A5",
        ok,
        f"unitarity {unit['residual']:.2e}, homomorphism {hom['residual']:.2e}, dilation {dil['residual']:.2e} (tol 1e-6); "
        f"{cov['points_within_tolerance']}/{cov['points']} grid points pass, all |lam| <= "
        f"{cov['largest_abs_lambda_below_which_all_pass']:.3f} pass; with n_max=128: unitarity "
        f"{wide['leading-block unitarity, |p|,|q| <= 2']['residual']:.1e}, "
        f"homomorphism {wide['leading-block homomorphism, |p|,|q| <= 2']['residual']:.1e}",
    )


def test_a6_inversion(verify_report):
    rep, _ = verify_report
    it = items(rep, "norm")["synthesize(S, identity) against hs_norm^2(S)"]
    assert record("A6", it["pass"], f"rel difference {it['residual']:.2e} (tol 1e-2)")


def test_a7_admissibility(frames_report):
    _, rep = frames_report
    own = rep["admissibility"]["lattice"]
    bad = rep["admissibility"]["shrunk_rhs_8x"]
    ok = own["pass"] and abs(own["max_ratio"] - 0.5) <= 1e-9 and not bad["pass"]
    assert record("A7", ok, f"max_ratio {own['max_ratio']!r} (0.5 +- 1e-9); 8x-shrunk RHS max_ratio {bad['max_ratio']} rejected")


def test_a8_generator_search(frames_report):
    _, rep = frames_report
    opt = rep["optimizer"]
    train = rep["scaling"]["train"]["tightness_residual"]
    hold = rep["scaling"]["holdout"]["tightness_residual"]
    ok = opt["reduction"] >= 100 and train <= 5e-2 and not opt["aborted"]
    assert record(
        "A8",
        ok,
        f"reduction {opt['reduction']:.2e} (>= 100), tightness residual {train:.2e} (tol 5e-2), no abort; "
        f"held-out corpus residual {hold:.3f}",
    )


def test_a9_wavelet_pipeline(frames_report):
    _, rep = frames_report
    crit = {c["name"]: c for c in rep["criteria"]}
    sup = crit["wavelet multiplier support inside [-pi/d, pi/d]"]
    leak = crit["cross-scale leakage for detail-band tests"]
    pars = crit["Parseval residual at the configured radius"]
    mono = crit["Parseval residual nonincreasing in radius"]
    full = rep["parseval"]["full"]["6"]["tightness_residual"]
    ok = sup["pass"] and leak["pass"] and pars["pass"] and mono["pass"]
    curve = ", ".join(f"R={R}: {v:.3f}" for R, v in zip(mono["radii"], mono["residuals"]))
    assert record(
        "A9",
        ok,
        f"support envelope {sup['envelope']:.4f} vs bound {sup['bound']:.4f} ({'ok' if sup['pass'] else 'exceeded'}); "
        f"leakage {leak['leakage']:.1e} (tol 1e-10); Parseval residual {pars['residual']:.3f} (tol 1e-1) "
        f"[Gamma translations: {full:.3f}]; radius sweep {curve}",
    )


SMALL_FRAMES = {"frames": {"Q": 4, "steps": 5, "radii": [2, 3]}, "radius": 3, "j_range": [-1, 1], "seeds": {"count": 3}}


def _same_tree(a: Path, b: Path) -> bool:
    names = sorted(p.name for p in a.iterdir())
    if names != sorted(p.name for p in b.iterdir()):
        return False
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    return not mismatch and not errors


def test_a10_determinism(cfg, tmp_path):
    same = {}
    for name in ("v1", "v2"):
        out = tmp_path / name
        out.mkdir()
        dump_json(run_verify(cfg, out), out / "verify_report.json")
    same["verify"] = _same_tree(tmp_path / "v1", tmp_path / "v2")
    small = config_from_dict(SMALL_FRAMES)
    for name in ("f1", "f2"):
        run_frames(small, tmp_path / name)
    same["frames"] = _same_tree(tmp_path / "f1", tmp_path / "f2")
    ok = all(same.values())
    assert record("A10", ok, f"byte-identical outputs across two runs: verify {same['verify']}, reduced frames config {same['frames']}")
