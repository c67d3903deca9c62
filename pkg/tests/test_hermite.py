import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hfmra.group import GroupElement, dilate
from hfmra.hermite import (
    NumericalAccuracyError,
    RepCache,
    _rep_entries,
    hermite_eval,
    hermite_table,
    homomorphism_residual,
    leading_block,
    rep_dilation_check,
    rep_matrix,
    scaled_basis_eval,
    unitarity_residual,
)


def test_gram_is_identity(basis):
    assert np.max(np.abs(basis.gram() - np.eye(64))) < 1e-13


def test_hermite_matches_closed_forms():
    x = np.linspace(-3, 3, 13)
    h = hermite_table(3, x)
    g = math.pi**-0.25 * np.exp(-x * x / 2)
    assert np.allclose(h[0], g)
    assert np.allclose(h[1], math.sqrt(2) * x * g)
    assert np.allclose(h[2], (2 * x * x - 1) / math.sqrt(2) * g)
    assert np.allclose(hermite_eval(2, x), h[2])


def test_scaled_basis_normalized():
    y = np.linspace(-40, 40, 40001)
    for lp in (0.05, 0.3):
        v = scaled_basis_eval(3, lp, y)
        assert abs(np.sum(v * v) * (y[1] - y[0]) - 1.0) < 1e-8


def test_ground_state_entries(basis):
    lam = 0.7
    s2 = lam / (2 * math.pi)
    m = rep_matrix(lam, GroupElement(0.0, 1.3, 0.0), basis).entries
    assert abs(m[0, 0] - math.exp(-s2 * 1.3**2 / 4)) < 1e-13
    m = rep_matrix(lam, GroupElement(1.1, 0.0, 0.0), basis).entries
    assert abs(m[0, 0] - math.exp(-lam * lam * 1.21 / (4 * s2))) < 1e-13


def test_center_acts_by_character(basis):
    m = rep_matrix(-0.4, GroupElement(0.0, 0.0, 1.7), basis).entries
    assert np.max(np.abs(m - np.exp(-0.4j * 1.7) * np.eye(64))) < 1e-12


small = st.floats(-1.0, 1.0)


@settings(max_examples=25, deadline=None)
@given(p1=small, q1=small, p2=small, q2=small, lam=st.sampled_from([0.05, -0.1, 0.3]))
def test_homomorphism_on_resolved_range(basis, p1, q1, p2, q2, lam):
    g = GroupElement(p1, q1, 0.3)
    h = GroupElement(p2, q2, -0.2)
    assert homomorphism_residual(lam, g, h, basis) < 1e-10


def test_printed_sign_is_antihomomorphism(basis):
    """With the opposite modulation sign the map reverses products."""
    nodes, weights = basis.rule
    lam = 0.2

    def flipped(g):
        return _rep_entries(lam, GroupElement(-g.p, g.q, g.t), 64, nodes, weights)

    g = GroupElement(0.8, -0.6, 0.0)
    h = GroupElement(-0.5, 0.9, 0.0)
    fg, fh = flipped(g), flipped(h)
    assert np.max(np.abs(leading_block(fg @ fh - flipped(g * h)))) > 1e-3
    assert np.max(np.abs(leading_block(fg @ fh - flipped(h * g)))) < 1e-10


def test_conjugate_symmetry(basis):
    g = GroupElement(0.4, -0.7, 0.9)
    a = rep_matrix(0.3, g, basis).entries
    b = rep_matrix(-0.3, g, basis).entries
    assert np.max(np.abs(b - a.conj())) < 1e-14


def test_unitarity_on_resolved_range(basis):
    m = rep_matrix(0.1, GroupElement(2.0, -2.0, 0.0), basis).entries
    assert unitarity_residual(m) < 1e-10


@pytest.mark.parametrize("a", [0.5, 0.7, 2.0, 3.1])
def test_dilation_equivalence(a, basis):
    g = GroupElement(0.5, -1.0, 0.3)
    assert rep_dilation_check(0.2, a, g, basis) < 1e-12


def test_accuracy_error_raised_for_unresolved_oscillation(basis):
    with pytest.raises(NumericalAccuracyError):
        rep_matrix(1.0, GroupElement(200.0, 0.0, 0.0), basis)


def test_error_estimate_reported(basis):
    r = rep_matrix(0.2, GroupElement(0.5, 0.5, 0.0), basis)
    assert r.error_estimate < 1e-10


def test_lambda_zero_rejected(basis):
    with pytest.raises(ValueError):
        rep_matrix(0.0, GroupElement(0.0, 0.0, 0.0), basis)


def test_rep_cache_inserts_once(basis):
    cache = RepCache(basis)
    g = GroupElement(0.1, 0.2, 0.0)
    a = cache.get((0, 0), 0.3, g)
    b = cache.get((0, 0), 0.3, g)
    assert a is b and len(cache) == 1
