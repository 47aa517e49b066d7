import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polyroad.geometry import AABB, HPolyhedron
from polyroad.gridmap import (
    CoverageTracker,
    GridFormatError,
    GridMap,
    sample_uncovered_free,
    update_ratio,
)


def small_map(dims=(10, 10, 2), res=0.2, occ=None):
    occupancy = np.zeros(dims, dtype=bool) if occ is None else occ
    return GridMap(origin=np.zeros(3), resolution=res, occupancy=occupancy)


# ------------------------------------------------------------------- format


def test_round_trip_random(tmp_path):
    rng = np.random.default_rng(5)
    occ = rng.random((10, 10, 10)) < 0.3
    m = GridMap(origin=[1.0, -2.0, 0.5], resolution=0.25, occupancy=occ)
    p = tmp_path / "m.grid"
    m.save(p)
    m2 = GridMap.load(p)
    assert np.array_equal(m.occupancy, m2.occupancy)
    assert np.allclose(m.origin, m2.origin)
    assert m.resolution == m2.resolution


def test_large_header_accepted(tmp_path):
    # 50x50x5 m at 0.2 m resolution
    m = small_map(dims=(250, 250, 25))
    p = tmp_path / "big.grid"
    m.save(p)
    m2 = GridMap.load(p)
    assert m2.dims == (250, 250, 25)
    assert m2.resolution == 0.2


def test_bad_magic(tmp_path):
    p = tmp_path / "bad.grid"
    p.write_text("not-a-grid 9\n")
    with pytest.raises(GridFormatError):
        GridMap.load(p)


def test_truncated_file(tmp_path):
    m = small_map(dims=(4, 4, 4))
    p = tmp_path / "t.grid"
    m.save(p)
    text = p.read_text().rsplit("end", 1)[0]
    p.write_text(text)
    with pytest.raises(GridFormatError):
        GridMap.load(p)


def test_dims_mismatch(tmp_path):
    p = tmp_path / "mm.grid"
    p.write_text(
        "polyroad-grid 1\nresolution 0.2\ndims 2 2 2\norigin 0.0 0.0 0.0\n"
        "rle\n7x0\nend\n"
    )
    with pytest.raises(GridFormatError):
        GridMap.load(p)


def test_rle_order_is_x_fastest(tmp_path):
    # single occupied cell at (1,0,0) must appear at flat position 1
    occ = np.zeros((3, 2, 2), dtype=bool)
    occ[1, 0, 0] = True
    m = small_map(dims=(3, 2, 2), occ=occ)
    p = tmp_path / "o.grid"
    m.save(p)
    body = p.read_text().split("rle\n")[1].split("\nend")[0].split()
    assert body == ["1x0", "1x1", "10x0"]


# ----------------------------------------------------------------- geometry


def test_cell_center_world_roundtrip():
    m = small_map()
    assert np.allclose(m.cell_center((0, 0, 0)), [0.1, 0.1, 0.1])
    assert m.world_to_cell([0.1, 0.1, 0.1]) == (0, 0, 0)
    assert m.world_to_cell([1.99, 1.99, 0.39]) == (9, 9, 1)
    assert m.world_to_cell([5, 5, 5]) is None
    assert m.world_to_cell([-0.01, 0.5, 0.1]) is None


@given(st.integers(0, 9), st.integers(0, 9), st.integers(0, 1))
@settings(max_examples=50, deadline=None)
def test_cell_world_bijection(i, j, k):
    m = small_map()
    assert m.world_to_cell(m.cell_center((i, j, k))) == (i, j, k)


def test_occupied_indices_in_aabb():
    occ = np.zeros((10, 10, 2), dtype=bool)
    occ[3, 4, 0] = True
    occ[9, 9, 1] = True
    m = small_map(occ=occ)
    idx = m.occupied_indices_in_aabb(AABB([0.5, 0.5, 0.0], [1.0, 1.2, 0.4]))
    assert [3, 4, 0] in idx.tolist()
    assert [9, 9, 1] not in idx.tolist()
    full = m.occupied_indices_in_aabb(m.bounds)
    assert len(full) == 2


# ----------------------------------------------------------------- coverage


def test_update_ratio_full_cover():
    m = small_map()
    t = CoverageTracker(m)
    box = HPolyhedron.from_aabb(m.bounds)
    assert update_ratio(t, m, box) == pytest.approx(1.0)


def test_update_ratio_half():
    m = small_map()  # 10x10x2 cells, x in [0,2]
    t = CoverageTracker(m)
    half = HPolyhedron.from_aabb(AABB([0, 0, 0], [1.0, 2.0, 0.4]))
    rho = update_ratio(t, m, half)
    assert rho == pytest.approx(0.5)


def test_update_ratio_disjoint_poly_no_change():
    m = small_map()
    t = CoverageTracker(m)
    away = HPolyhedron.from_aabb(AABB([10, 10, 10], [11, 11, 11]))
    assert update_ratio(t, m, away) == 0.0


def test_rho_monotone_and_covered_subset_free():
    rng = np.random.default_rng(9)
    occ = rng.random((8, 8, 4)) < 0.2
    m = small_map(dims=(8, 8, 4), occ=occ)
    t = CoverageTracker(m)
    last = 0.0
    for _ in range(15):
        lo = rng.uniform(0, 1.4, 3)
        poly = HPolyhedron.from_aabb(AABB(lo, lo + rng.uniform(0.2, 0.8, 3)))
        rho = update_ratio(t, m, poly)
        assert rho >= last
        last = rho
    assert not np.any(t.covered & m.occupancy)


# ----------------------------------------------------------------- sampling


def test_sample_only_free_uncovered():
    occ = np.zeros((4, 4, 1), dtype=bool)
    occ[0, :, :] = True
    m = small_map(dims=(4, 4, 1), occ=occ)
    t = CoverageTracker(m)
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = sample_uncovered_free(m, t, rng)
        ijk = m.world_to_cell(p)
        assert not m.occupancy[ijk]


def test_sample_saturation_returns_none():
    m = small_map(dims=(2, 2, 1))
    t = CoverageTracker(m)
    update_ratio(t, m, HPolyhedron.from_aabb(m.bounds))
    assert sample_uncovered_free(m, t, 3) is None


def test_sample_deterministic_with_seed():
    m = small_map(dims=(6, 6, 2))
    t = CoverageTracker(m)
    a = [sample_uncovered_free(m, t, np.random.default_rng(42)) for _ in range(5)]
    b = [sample_uncovered_free(m, t, np.random.default_rng(42)) for _ in range(5)]
    assert np.allclose(a, b)


def test_sample_chi_square_uniform():
    # 8 free cells, 1e5 draws: chi^2 with 7 dof, 1% critical value 18.475
    m = small_map(dims=(2, 2, 2))
    t = CoverageTracker(m)
    rng = np.random.default_rng(1234)
    counts = np.zeros(8)
    for _ in range(100_000):
        p = sample_uncovered_free(m, t, rng)
        ijk = m.world_to_cell(p)
        counts[np.ravel_multi_index(ijk, (2, 2, 2))] += 1
    expected = 100_000 / 8
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    assert chi2 < 18.475
