import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hfmra.frames import (
    CoefficientEngine,
    InadmissibleError,
    ScalingObjective,
    SupportError,
    System,
    admissible,
    band_envelope,
    box_energy,
    calibrated_start,
    check_support,
    frame_bounds_estimate,
    frame_coeff,
    frame_test_fields,
    optimize_generator,
    parseval_check,
    system_dilate,
    translation_scale,
    wavelet_from_scaling,
)
from hfmra.group import GroupElement, LatticeSpec, dilate, lattice_point
from hfmra.plancherel import OperatorField, build_grid, field_inner, hs_norm_sq, random_field
from hfmra.shannon import MultiplicityFn, build_sinc, detail, project, random_detail_field


# ---------------------------------------------------------------- admissibility


def test_default_lattice_admissible_at_band_edge(grid):
    rep = admissible(MultiplicityFn(1), LatticeSpec(), grid)
    assert rep.passed
    assert abs(rep.max_ratio - 0.5) <= 1e-9


def test_shrunk_rhs_fails(grid):
    rep = admissible(MultiplicityFn(1), LatticeSpec(d=8), grid)
    assert not rep.passed
    assert rep.violating_bands


def test_zero_multiplicity_trivially_admissible(grid):
    rep = admissible(MultiplicityFn(zero=True), LatticeSpec(d=5, scale=3.0), grid)
    assert rep.passed and rep.max_ratio == 0


@settings(max_examples=20, deadline=None)
@given(r=st.floats(0.01, 2.0), grow=st.floats(1.0, 4.0), d=st.integers(1, 3))
def test_admissibility_monotone_in_r(grid, r, grow, d):
    """Growing r shrinks the right-hand side, so a fail never turns into a pass."""
    m = MultiplicityFn(1)
    small = admissible(m, LatticeSpec.from_r(d, r), grid)
    big = admissible(m, LatticeSpec.from_r(d, r * grow), grid)
    if not small.passed:
        assert not big.passed


# ---------------------------------------------------------------- coefficients


def _block_field(grid, rng, n=64, size=4, bands=None):
    m = np.zeros((len(grid), n, n), dtype=complex)
    m[:, :size, :size] = rng.standard_normal((len(grid), size, size)) + 1j * rng.standard_normal((len(grid), size, size))
    if bands is not None:
        m[~np.isin(grid.band, bands)] = 0
    return OperatorField(grid, m)


def test_engine_matches_direct_inner_products(basis, rng):
    g = build_grid(1, 1, 2, 4)
    lat = LatticeSpec()
    f = _block_field(g, rng)
    gen = _block_field(g, rng)
    R = 2
    c = CoefficientEngine(basis, g, 1, R).coefficients([f], [System(gen, lat.scale)])[0]
    for m, k, l in [(0, 0, 0), (1, -2, 2), (-2, 1, -1)]:
        gamma = lattice_point(lat, m, k, l)
        direct = frame_coeff(f, gen, gamma, 0, basis)
        assert abs(c[0, m + R, k + R, l + R] - direct) < 1e-10


def test_engine_matches_direct_at_other_level(basis, rng):
    g = build_grid(1, 0, 2, 4)
    lat = LatticeSpec()
    f = _block_field(g, rng)
    gen = _block_field(g, rng)
    R = 1
    sys = System(system_dilate(gen, 1), translation_scale(lat, 1))
    c = CoefficientEngine(basis, g, 1, R).coefficients([f], [sys])[0]
    gamma = lattice_point(lat, 1, -1, 1)
    assert abs(c[0, 2, 0, 2] - frame_coeff(f, gen, gamma, 1, basis)) < 1e-10


def test_scale_consistency(basis, rng):
    """<f, L U_j g> = <U_j^-1 f, L g> when no band is pushed off the grid."""
    g = build_grid(1, 0, 2, 4)
    lat = LatticeSpec()
    f = _block_field(g, rng, bands=[0, 1])
    gen = _block_field(g, rng, bands=[1, 2])
    R = 2
    eng = CoefficientEngine(basis, g, 1, R)
    lhs = eng.coefficients([f], [System(system_dilate(gen, 1), translation_scale(lat, 1))])[0]
    rhs = eng.coefficients([system_dilate(f, -1)], [System(gen, lat.scale)])[0]
    assert np.max(np.abs(lhs - rhs)) <= 1e-8 * np.max(np.abs(lhs))


def test_central_lattice_step_shifts_l_index(basis, frames_sys, lat):
    phi = calibrated_start(frames_sys, lat, 2, basis, np.random.default_rng(0))
    f = frame_test_fields(frames_sys, 1, 5, "v0")
    g = frames_sys.grid
    moved = OperatorField(g, np.exp(1j * g.lam * lat.r)[:, None, None] * phi.matrices)
    eng = CoefficientEngine(basis, g, 1, 2)
    a, b = eng.coefficients(f, [System(phi, lat.scale), System(moved, lat.scale)])
    assert np.max(np.abs(b[..., :-1] - a[..., 1:])) < 1e-12 * np.max(np.abs(a))


def test_box_energy_subbox(rng):
    c = rng.standard_normal((2, 5, 5, 5)) + 0j
    assert np.allclose(box_energy(c, 0), np.abs(c[:, 2, 2, 2]) ** 2)
    with pytest.raises(ValueError):
        box_energy(c, 3)


# ---------------------------------------------------------------- scaling generator objective


@pytest.fixture(scope="module")
def objective(frames_sys, lat, basis):
    tests = frame_test_fields(frames_sys, 4, 100, "v0")
    return ScalingObjective(tests, lat, 3, basis, frames_sys.column_mask(0))


@pytest.fixture(scope="module")
def start(frames_sys, lat, basis):
    return calibrated_start(frames_sys, lat, 3, basis, np.random.default_rng(1))


def test_gradient_matches_finite_difference(objective, start, frames_sys):
    _, _, grad = objective.evaluate(start)
    d = random_field(frames_sys.grid, 64, np.random.default_rng(3), columns=frames_sys.ranks(0))
    eps = 1e-5
    vp = objective.evaluate(start + eps * d, False)[0]
    vm = objective.evaluate(start - eps * d, False)[0]
    fd = (vp - vm) / (2 * eps)
    assert abs(fd - field_inner(d, grad).real) < 1e-6 * max(1.0, abs(fd))


def test_objective_invariant_under_constant_phase(objective, start):
    a = objective.evaluate(start, False)[0]
    b = objective.evaluate(start * np.exp(0.7j), False)[0]
    assert abs(a - b) < 1e-12 * a


def test_energy_matches_frame_bounds(objective, start, lat, basis):
    _, energy, _ = objective.evaluate(start, False)
    rep = frame_bounds_estimate(start, lat, [0], 3, objective.tests, basis)
    assert np.allclose(energy / objective.norms, rep.ratios, rtol=1e-12)


def test_zero_tests_give_zero_objective_and_gradient(frames_sys, lat, basis, start):
    zero = OperatorField.zeros(frames_sys.grid, 64)
    obj = ScalingObjective([zero], lat, 2, basis, frames_sys.column_mask(0))
    value, _, grad = obj.evaluate(start)
    assert value == 0 and np.all(grad.matrices == 0)


def test_calibrated_start_lives_in_v0(start, frames_sys):
    check_support(start, frames_sys.column_mask(0))
    assert np.all(start.matrices[frames_sys.ranks(0) == 0] == 0)


def test_optimizer_descends_monotonically_small_steps(frames_sys, lat, basis):
    tests = frame_test_fields(frames_sys, 16, 2000, "v0")
    init = calibrated_start(frames_sys, lat, 6, basis, np.random.default_rng(7))
    res = optimize_generator(init, lat, 6, tests, 50, 1e-2, basis, frames_sys)
    assert not res.aborted
    assert all(b < a for a, b in zip(res.trace, res.trace[1:]))


def test_optimizer_aborts_on_divergence(objective, start, frames_sys, lat, basis):
    res = optimize_generator(start, lat, 3, objective.tests, 40, 1e4, basis, frames_sys, patience=3)
    assert res.aborted
    assert "consecutive" in res.reason or "finite" in res.reason


def test_optimizer_gate_rejects_bad_lattice(objective, start, frames_sys, basis):
    with pytest.raises(InadmissibleError):
        optimize_generator(start, LatticeSpec(d=8), 3, objective.tests, 1, 0.1, basis, frames_sys)


def test_optimizer_rejects_out_of_support_start(objective, frames_sys, lat, basis):
    bad = random_field(frames_sys.grid, 64, np.random.default_rng(0))
    with pytest.raises(SupportError):
        optimize_generator(bad, lat, 3, objective.tests, 1, 0.1, basis, frames_sys)


# ---------------------------------------------------------------- wavelet


def test_wavelet_of_zero_is_zero(frames_sys):
    z = OperatorField.zeros(frames_sys.grid, 64)
    assert np.all(wavelet_from_scaling(z, frames_sys).matrices == 0)


def test_wavelet_in_detail_space(start, frames_sys):
    psi = wavelet_from_scaling(start, frames_sys)
    assert np.all(project(psi, frames_sys, 0).matrices == 0)
    assert detail(psi, frames_sys, 0).equals(psi)


def test_wavelet_support_envelope(start, frames_sys):
    """The W_0 pattern reaches band -1, i.e. |lam| up to 2 pi / d."""
    psi = wavelet_from_scaling(start, frames_sys)
    assert band_envelope(psi) == 2 * math.pi


def test_wavelet_rejects_generator_outside_v0(frames_sys):
    bad = random_field(frames_sys.grid, 64, np.random.default_rng(0))
    with pytest.raises(SupportError):
        wavelet_from_scaling(bad, frames_sys)


def test_single_detail_band_has_no_cross_scale_energy(start, frames_sys, lat, basis):
    psi = wavelet_from_scaling(start, frames_sys)
    f = random_detail_field(frames_sys, 1, np.random.default_rng(4))
    from hfmra.frames import level_systems

    eng = CoefficientEngine(basis, frames_sys.grid, 1, 2)
    coeffs = eng.coefficients([f], level_systems(psi, lat, [-1, 0, 1, 2], True))
    energies = [float(box_energy(c, 2)[0]) for c in coeffs]
    assert energies[2] > 0
    assert energies[0] == energies[1] == energies[3] == 0


def test_parseval_ratio_monotone_in_radius_and_levels(start, frames_sys, lat, basis):
    psi = wavelet_from_scaling(start, frames_sys)
    tests = frame_test_fields(frames_sys, 3, 9, "span", (-1, 1))
    wide = parseval_check(psi, lat, (-1, 1), 3, tests, basis, radii=[1, 2, 3])
    narrow = parseval_check(psi, lat, (0, 0), 3, tests, basis)
    for a, b in zip(wide[1].ratios, wide[2].ratios):
        assert b >= a
    for a, b in zip(wide[2].ratios, wide[3].ratios):
        assert b >= a
    for a, b in zip(narrow[3].ratios, wide[3].ratios):
        assert b >= a - 1e-15


def test_span_corpus_confined_to_detail_range(frames_sys):
    f = frame_test_fields(frames_sys, 1, 1, "span", (-1, 0))[0]
    assert abs(hs_norm_sq(f) - 1.0) < 1e-14
    assert np.all(project(f, frames_sys, -1).matrices == 0)
    assert project(f, frames_sys, 1).equals(f)


def test_unknown_corpus_kind(frames_sys):
    with pytest.raises(ValueError):
        frame_test_fields(frames_sys, 1, 0, "nope")
