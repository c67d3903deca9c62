import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hfmra.group import IDENTITY, GroupElement
from hfmra.plancherel import (
    MAGIC,
    GridMismatchError,
    LambdaGrid,
    OperatorField,
    band_mass,
    band_upper,
    build_grid,
    convolve,
    dilate_field,
    field_inner,
    hs_norm,
    hs_norm_sq,
    involution,
    random_field,
    read_field,
    synthesize,
    translate,
    write_field,
)


def test_grid_layout(grid):
    assert len(grid) == 2 * 3 * 8
    assert np.all(grid.lam[: len(grid) // 2] < 0)
    assert np.all(grid.lam[len(grid) // 2 :] > 0)
    pos = grid.lam[len(grid) // 2 :]
    assert np.all(np.diff(pos[:8]) < 0)  # descending inside a band
    for k in grid.bands:
        sel = (grid.band == k) & (grid.sign > 0)
        assert np.all(grid.lam[sel] <= band_upper(k, 1))
        assert np.all(grid.lam[sel] > band_upper(k, 1) / 4)


def test_band_edges_are_powers_of_two():
    assert band_upper(0, 1) == math.pi / 2
    assert band_upper(2, 3) == math.pi / 3 / 32
    assert band_upper(-1, 1) == 2 * math.pi


@pytest.mark.parametrize("Q", [4, 16])
def test_weights_integrate_band_mass(Q):
    g = build_grid(2, 0, 1, Q)
    for k in g.bands:
        assert abs(g.band_weight(k) - band_mass(k, 2)) / band_mass(k, 2) < 2e-2 / Q
    assert math.isclose(band_mass(0, 1), 15 / 256, rel_tol=1e-14)


def test_shift_map_is_exact_quarter_scaling(grid):
    for j in (-1, 1, 2):
        src = grid.shift_map(j)
        ok = src >= 0
        assert np.array_equal(grid.lam[src[ok]], grid.lam[ok] * 4.0 ** (-j))
    assert np.all(grid.shift_map(3) == -1)


def test_grid_validation():
    with pytest.raises(ValueError):
        LambdaGrid(1, 2, 1, 4)
    with pytest.raises(ValueError):
        LambdaGrid(1, 0, 1, 3)
    with pytest.raises(ValueError):
        LambdaGrid(0, 0, 1, 4)


def test_field_is_read_only(grid, rng):
    f = random_field(grid, 4, rng)
    with pytest.raises(ValueError):
        f.matrices[0, 0, 0] = 1.0


def test_field_shape_checked(grid):
    with pytest.raises(ValueError):
        OperatorField(grid, np.zeros((3, 2, 2)))


def test_mismatched_grids_rejected(grid, rng):
    other = build_grid(1, 0, 1, 4)
    with pytest.raises(GridMismatchError):
        random_field(grid, 4, rng) + random_field(other, 4, rng)


def test_random_field_unit_norm(grid, rng):
    assert abs(hs_norm(random_field(grid, 5, rng)) - 1.0) < 1e-14


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), a=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_inner_product_sesquilinear(grid, seed, a):
    r = np.random.default_rng(seed)
    f, g, h = (random_field(grid, 3, r) for _ in range(3))
    lhs = field_inner(a * f + g, h)
    rhs = a * field_inner(f, h) + field_inner(g, h)
    assert abs(lhs - rhs) < 1e-12 * (1 + abs(a))
    assert abs(field_inner(f, f) - hs_norm_sq(f)) < 1e-14


def test_involution_adjoint(grid, rng):
    f, g, h = (random_field(grid, 3, rng) for _ in range(3))
    # <f g, h> = <g, f* h>
    assert abs(field_inner(convolve(f, g), h) - field_inner(g, convolve(involution(f), h))) < 1e-14


def test_translate_preserves_norm_on_resolved_range(basis, rng):
    g = build_grid(1, 2, 3, 4)
    m = np.zeros((len(g), 64, 64), dtype=complex)
    m[:, :8, :8] = rng.standard_normal((len(g), 8, 8))
    f = OperatorField(g, m)
    moved = translate(f, GroupElement(0.5, -0.5, 0.3), basis)
    # a low-index block stays inside the truncated basis at small frequencies
    assert abs(hs_norm(moved) / hs_norm(f) - 1.0) < 1e-10


def test_dilate_field_reads_from_quarter_frequency(grid, rng):
    f = random_field(grid, 3, rng)
    moved = dilate_field(f, 1)
    src = grid.shift_map(1)
    i = int(np.flatnonzero(src >= 0)[0])
    assert np.array_equal(moved.matrices[i], f.matrices[src[i]])
    assert np.all(moved.matrices[src < 0] == 0)
    with pytest.raises(ValueError):
        dilate_field(f, 5)


def test_synthesize_identity_is_weighted_trace(grid, rng, basis):
    f = random_field(grid, 64, rng, columns=np.full(len(grid), 2))
    tr = np.sum(grid.weight * np.trace(f.matrices, axis1=1, axis2=2))
    assert abs(synthesize(f, IDENTITY, basis) - tr) < 1e-15
    g = GroupElement(0.0, 0.0, 0.0 + 1e-300)
    assert abs(synthesize(f, g, basis) - tr) < 1e-10


def test_dump_round_trip(tmp_path, rng):
    g = build_grid(2, -2, 1, 4)
    f = random_field(g, 3, rng)
    path, side = write_field(f, tmp_path / "f.bin")
    raw = path.read_bytes()
    assert raw[:6] == MAGIC
    d, kmin, kmax, q, n = struct.unpack_from("<5I", raw, 6)
    assert (d, kmin, kmax, q, n) == (2, 2**32 - 2, 1, 4, 3)
    assert len(raw) == 6 + 20 + len(g) * 9 * 16
    back = read_field(path)
    assert back.grid == g and back.equals(f)
    assert side.exists()


def test_dump_rejects_bad_magic(tmp_path):
    p = tmp_path / "x.bin"
    p.write_bytes(b"NOPE" + bytes(40))
    with pytest.raises(ValueError):
        read_field(p)
