import warnings

import numpy as np
import pytest

from roomloc.dictionary import (
    DictionaryWarning,
    build_dictionary,
    build_grid,
    coherence,
    gram,
    mic_factor,
    read_matrix_csv,
    write_matrix_csv,
)
from roomloc.modal import (
    RoomSpec,
    eigenfunction,
    enumerate_modes_in_index_cube,
    make_mode,
    peak_height,
)

from conftest import PAPER_MIC


def test_grid_paper_size(paper_grid):
    assert paper_grid.size == 1500
    assert paper_grid.dims == (10, 15, 10)


def test_grid_single_cell_is_center(paper_room):
    g = build_grid(paper_room, (1, 1, 1))
    np.testing.assert_allclose(g.points[0], [2.0, 3.5, 1.5])


def test_grid_spacing_and_order(paper_room, paper_grid):
    xs = paper_grid.points[:10, 0]
    np.testing.assert_allclose(np.diff(xs), 0.4)
    for idx in [0, 1, 9, 10, 149, 150, 777, 1499]:
        ix, iy, iz = paper_grid.cell(idx)
        assert paper_grid.linear_index(ix, iy, iz) == idx
        expected = [(i + 0.5) * L / g for i, L, g in zip((ix, iy, iz), paper_room.dims, (10, 15, 10))]
        np.testing.assert_allclose(paper_grid.points[idx], expected)


def test_grid_margin(paper_room):
    g = build_grid(paper_room, (4, 4, 4), margin=0.5)
    assert g.points.min(axis=0) == pytest.approx([0.5 + 3 / 8, 0.5 + 6 / 8, 0.5 + 2 / 8])
    with pytest.raises(ValueError):
        build_grid(paper_room, (4, 4, 4), margin=1.5)
    with pytest.raises(ValueError):
        build_grid(paper_room, (0, 4, 4))


def test_dictionary_shape(paper_dict):
    assert paper_dict.shape == (63, 1500)
    assert paper_dict.zero_columns == ()


def test_dictionary_columns_match_peak_heights(paper_dict, paper_room):
    for m in [0, 17, 733, 1499]:
        p = paper_dict.grid.point(m)
        col = [peak_height(mode, paper_dict.mic, p, paper_room) for mode in paper_dict.modes]
        np.testing.assert_allclose(paper_dict.matrix[:, m], col, rtol=1e-12, atol=0)


def test_hadamard_factorization(paper_dict, paper_room):
    factor = mic_factor(paper_dict.modes, paper_dict.mic, paper_room)
    position = np.array(
        [[eigenfunction(mode, p) for p in paper_dict.grid.points] for mode in paper_dict.modes]
    )
    product = np.tile(factor[:, None], (1, 1500)) * position
    np.testing.assert_allclose(paper_dict.matrix, product, rtol=1e-12, atol=0)


def test_corner_single_mode(paper_room):
    mode = make_mode((1, 0, 0), paper_room)
    g = build_grid(paper_room, (1, 1, 1))
    # cell centre of a 1x1x1 grid is not a corner; use the scalar route for the corner value
    assert peak_height(mode, (0, 0, 0), (0, 0, 0), paper_room) == pytest.approx(
        paper_room.rho0 * paper_room.c**2 / (2 * mode.kn_norm * mode.delta_n)
    )
    with pytest.warns(DictionaryWarning):
        d = build_dictionary([mode], g, (0, 0, 0), paper_room)
    assert d.matrix[0, 0] == pytest.approx(0.0, abs=1e-9)  # centre sits on the nodal plane


def test_zero_columns_flagged(paper_room):
    modes = [make_mode((1, 0, 0), paper_room), make_mode((0, 0, 1), paper_room)]
    g = build_grid(paper_room, (2, 1, 1))  # x = 1 and 3 are off the (1,0,0) nodal plane
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        d = build_dictionary(modes, g, (0.3, 0.3, 0.2), paper_room)
    assert d.zero_columns == ()
    g = build_grid(paper_room, (1, 1, 1))
    with pytest.warns(DictionaryWarning, match="identically zero"):
        d = build_dictionary(modes, g, (0.3, 0.3, 0.2), paper_room)
    assert d.zero_columns == (0,)
    with pytest.raises(ValueError):
        coherence(d.matrix[:, [0, 0]])


def test_mic_on_nodal_planes_warns(paper_room, paper_grid):
    modes = enumerate_modes_in_index_cube(3, paper_room)
    with pytest.warns(DictionaryWarning, match="nodal planes"):
        build_dictionary(modes, paper_grid, (2.0, 3.5, 1.5), paper_room)


def test_gram_basics(rng):
    a = rng.standard_normal((6, 4))
    g = gram(a)
    np.testing.assert_allclose(np.diag(g), np.linalg.norm(a, axis=0) ** 2)
    q, _ = np.linalg.qr(rng.standard_normal((6, 4)))
    g = gram(q * [1, 2, 3, 4])
    np.testing.assert_allclose(g - np.diag(np.diag(g)), 0, atol=1e-12)


def test_coherence_trivial_cases(rng):
    assert coherence(np.eye(5)).mu == 0
    assert coherence(np.eye(5)).max_sparsity_guarantee is None
    a = rng.standard_normal((5, 4))
    a[:, 3] = a[:, 1]
    rep = coherence(a)
    assert rep.mu == pytest.approx(1.0)
    assert rep.argmax_pair == (1, 3)
    assert rep.max_sparsity_guarantee == 1


def test_coherence_guarantee_formula():
    # two unit columns at 60 degrees: mu = 1/2, (1 + 2) / 2 -> 1
    a = np.array([[1.0, 0.5], [0.0, np.sqrt(3) / 2]])
    rep = coherence(a)
    assert rep.mu == pytest.approx(0.5)
    assert rep.max_sparsity_guarantee == 1
    b = np.array([[1.0, 0.2], [0.0, np.sqrt(0.96)]])
    assert coherence(b).max_sparsity_guarantee == 3


def test_coherence_scale_invariant(paper_dict):
    base = coherence(paper_dict)
    for c in (-3.0, 1e-4, 250.0):
        assert coherence(c * paper_dict.matrix).mu == pytest.approx(base.mu, rel=1e-12)


def test_paper_dictionary_highly_coherent(paper_dict):
    rep = coherence(paper_dict)
    # default mic; value depends on mic placement
    assert rep.mu == pytest.approx(0.9878221897843196, rel=1e-9)
    assert rep.max_sparsity_guarantee == 1
    assert sum(rep.histogram[1]) == 1500 * 1499 // 2


def test_spatial_smoothness(paper_dict, rng):
    phi = paper_dict.matrix / np.linalg.norm(paper_dict.matrix, axis=0)
    grid = paper_dict.grid
    near, far = [], []
    while len(near) < 100:
        ix, iy, iz = rng.integers(0, 8), rng.integers(0, 15), rng.integers(0, 10)
        a = grid.linear_index(ix, iy, iz)
        near.append(phi[:, a] @ phi[:, grid.linear_index(ix + 1, iy, iz)])
        far.append(phi[:, a] @ phi[:, grid.linear_index(ix + 2, iy, iz)])
    assert np.mean(near) >= np.mean(far)


def test_symmetric_mic_makes_mirror_columns_identical(paper_room, paper_grid, paper_modes):
    with pytest.warns(DictionaryWarning):
        d = build_dictionary(paper_modes, paper_grid, (2.0, 2.2, 0.65), paper_room)
    for ix, iy, iz in [(0, 3, 4), (2, 7, 1), (4, 14, 9)]:
        a = paper_grid.linear_index(ix, iy, iz)
        b = paper_grid.linear_index(9 - ix, iy, iz)
        np.testing.assert_allclose(d.matrix[:, a], d.matrix[:, b], atol=1e-9)
    # magnitudes coincide for any mic
    a = paper_grid.linear_index(1, 3, 4)
    b = paper_grid.linear_index(8, 3, 4)
    m = build_dictionary(paper_modes, paper_grid, PAPER_MIC, paper_room).matrix
    np.testing.assert_allclose(np.abs(m[:, a]), np.abs(m[:, b]), rtol=1e-9)
    assert not np.allclose(m[:, a], m[:, b])


def test_matrix_dump_roundtrip(paper_dict, tmp_path):
    path = tmp_path / "phi.csv"
    write_matrix_csv(paper_dict, path)
    meta, matrix = read_matrix_csv(path)
    assert meta["room"] == "4.0x7.0x3.0"
    assert meta["grid"] == "10x15x10"
    assert meta["mic"] == "0.9,2.2,0.65"
    assert meta["modes"].split()[0] == "(0,1,0)"
    assert len(meta["modes"].split()) == 63
    np.testing.assert_array_equal(matrix, paper_dict.matrix)
