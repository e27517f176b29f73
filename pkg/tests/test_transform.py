import numpy as np
import pytest

from shearframes.generators import BandlimitedGenerator, CompactGenerator, CompactSpec, ResolutionError, sample_spatial
from shearframes.lattice import LatticeSpec, PyramidTag, ShearletIndex
from shearframes.phantom import ball_phantom, cube_phantom
from shearframes.sparsebench import census_exponent, haar_scale_census
from shearframes.transform import (CoeffTable, GridMismatchError, SampledField, ShearletSystem, analyze,
                                   direct_inner_product, export_coeffs_csv, fourier_analyze, fourier_synthesize,
                                   haar_analyze, haar_synthesize, import_coeffs_csv, synthesize)

K7L4 = CompactSpec(7, 4)


@pytest.fixture(scope="module")
def bl2():
    return ShearletSystem((64, 64), BandlimitedGenerator(), base_freq=4.0)


@pytest.fixture(scope="module")
def cp2():
    return ShearletSystem((64, 64), CompactGenerator(K7L4), base_freq=4.0)


@pytest.fixture(scope="module")
def cp3():
    return ShearletSystem((16, 16, 16), CompactGenerator(K7L4), LatticeSpec(1.0, 0.5), base_freq=2.0,
                          sampling="lattice")


def _rand(shape, seed):
    return SampledField(np.random.default_rng(seed).standard_normal(shape))


def _resolvable(system, gen):
    """Flat indices of tiles the spatial oracle can sample."""
    out = []
    for t, tile in enumerate(system.tiles):
        probe = ShearletIndex(tile.pyramid, tile.j, tile.k, (0,) * system.d)
        try:
            sample_spatial(gen, probe, system.grid, system.base_freq, system.lattice_spec)
        except ResolutionError:
            continue
        out.append(np.arange(system.offsets[t], system.offsets[t + 1]))
    return np.concatenate(out)


@pytest.mark.parametrize("which,tol", [("bl2", 1e-6), ("cp2", 1e-3)])
def test_analyze_matches_direct_inner_product(which, tol, request):
    system = request.getfixturevalue(which)
    rng = np.random.default_rng(11)
    f = _rand(system.shape, 12)
    coeffs = analyze(f, system)
    pick = rng.choice(_resolvable(system, system.generator), 20, replace=False)
    keys = system.keys()
    direct = np.array([direct_inner_product(f, keys[i], system) for i in pick])
    err = np.linalg.norm(coeffs.values[pick] - direct) / np.linalg.norm(direct)
    assert err < tol


@pytest.mark.parametrize("which", ["bl2", "cp2", "cp3"])
def test_adjoint_identity(which, request):
    system = request.getfixturevalue(which)
    rng = np.random.default_rng(5)
    f = _rand(system.shape, 6)
    c = rng.standard_normal(system.n_coeffs)
    lhs = SampledField(system.synthesize_vector(c)).inner(f)
    rhs = float(c @ system.analyze_vector(f))
    assert abs(lhs - rhs) <= 1e-8 * abs(rhs)


def test_linearity(cp2):
    rng = np.random.default_rng(8)
    c1, c2 = rng.standard_normal((2, cp2.n_coeffs))
    a = 2.5
    lhs = cp2.synthesize_vector(a * c1 + c2)
    rhs = a * cp2.synthesize_vector(c1) + cp2.synthesize_vector(c2)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(rhs))


@pytest.mark.parametrize("shape", [(128, 128), (64, 64, 64)])
def test_bandlimited_parseval(shape):
    system = ShearletSystem(shape, BandlimitedGenerator())
    assert np.max(np.abs(system.potential() - 1)) < 1e-12
    for seed in range(3):
        f = _rand(shape, seed)
        energy = np.sum(system.analyze_vector(f) ** 2)
        assert energy == pytest.approx(f.norm_sq(), rel=1e-10)


def test_zero_field_and_self_dominance(bl2):
    assert not np.any(analyze(SampledField(np.zeros((64, 64))), bl2).values)
    keys = bl2.keys()
    i = bl2.offsets[5] + 7
    atom = SampledField(bl2.atom_field(keys[i]))
    c = analyze(atom, bl2).values
    t = 5
    seg = np.abs(c[bl2.offsets[t]:bl2.offsets[t + 1]])
    assert abs(c[i]) >= seg.max() - 1e-12


def test_single_coefficient_synthesis_matches_spatial_atom(bl2):
    keys = bl2.keys()
    for i in (bl2.offsets[3] + 2, bl2.offsets[9]):
        lam = keys[i]
        e = np.zeros(bl2.n_coeffs)
        e[i] = 1.0
        atom = bl2.synthesize_vector(e) / bl2.atom_scale(bl2.locate(i)[0])
        # the spatial sampler takes the realised centre
        from shearframes.transform import _index_at_centre
        ref = sample_spatial(bl2.generator, _index_at_centre(lam, bl2.atom_centre(lam), bl2), bl2.grid,
                             bl2.base_freq, bl2.lattice_spec)
        cell = bl2.grid.cell_volume
        assert np.max(np.abs(atom * cell - ref * cell)) < 1e-6 * np.max(np.abs(ref * cell))


def test_direct_inner_product_self_tests(cp2):
    keys = cp2.keys()
    lam = keys[cp2.offsets[4] + 3]
    one = SampledField(np.ones((64, 64)))
    assert abs(direct_inner_product(one, lam, cp2)) < 1e-8
    assert direct_inner_product(SampledField(np.zeros((64, 64))), lam, cp2) == 0


def test_shift_covariance_bandlimited(bl2):
    # a whole-cell shift matching a stride moves coefficients within each tile
    f = _rand((64, 64), 3)
    c0 = bl2.analyze_vector(f)
    t = next(t for t, tile in enumerate(bl2.tiles) if not tile.dense and tile.points is None)
    tile = bl2.tiles[t]
    sx = tile.stride[0]
    c1 = bl2.analyze_vector(SampledField(np.roll(f.data, sx, axis=0)))
    sub = tile.sub_shape(bl2.shape)
    a = c0[bl2.offsets[t]:bl2.offsets[t + 1]].reshape(sub)
    b = c1[bl2.offsets[t]:bl2.offsets[t + 1]].reshape(sub)
    assert np.allclose(np.roll(a, 1, axis=0), b, atol=1e-12)


def test_grid_mismatch(bl2):
    with pytest.raises(GridMismatchError):
        bl2.analyze_vector(np.zeros((32, 32)))


def test_sorted_view_ties_and_rearrangement():
    t = CoeffTable(np.array([1.0, -3.0, 3.0, 0.5, -1.0]), list("abcde"))
    assert list(t.sorted_view) == [1, 2, 0, 4, 3]
    assert np.array_equal(t.rearranged(), [3, 3, 1, 1, 0.5])


def test_top_coefficients_match_sorted_view(cp2):
    f = ball_phantom((0.5, 0.5), 0.3, 64, 2)
    full = analyze(f, cp2)
    idx, vals, energy = cp2.top_coefficients(f.data, 300)
    assert np.array_equal(idx, full.sorted_view[:300])
    assert np.array_equal(vals, full.values[idx])
    assert energy == pytest.approx(np.sum(full.values ** 2), rel=1e-12)
    sparse = cp2.synthesize_sparse(idx, vals)
    dense = np.zeros(cp2.n_coeffs)
    dense[idx] = vals
    assert np.allclose(sparse, cp2.synthesize_vector(dense), atol=1e-13)


def test_frame_operator_equals_synthesis_of_analysis(cp2, cp3):
    for system in (cp2, cp3):
        f = _rand(system.shape, 21).data
        a = system.frame_operator(f)
        b = system.synthesize_vector(system.analyze_vector(f))
        assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(b))


def test_lattice_labels_unique(cp3):
    for tile in cp3.tiles:
        m = np.asarray(tile.m)
        assert len(np.unique(m, axis=0)) == len(m)


@pytest.mark.parametrize("sampling", ["stride", "lattice"])
def test_coeff_csv_round_trip(tmp_path, sampling):
    system = ShearletSystem((32, 32), CompactGenerator(K7L4), LatticeSpec(1.0, 0.5), base_freq=2.0,
                            sampling=sampling)
    table = analyze(_rand(system.shape, 2), system)
    export_coeffs_csv(table, tmp_path / "c.csv")
    back = import_coeffs_csv(tmp_path / "c.csv", system)
    assert np.array_equal(back.values, table.values)


def test_fourier_baseline():
    const = SampledField(np.full((16, 16), 2.0))
    c = fourier_analyze(const)
    assert np.count_nonzero(np.abs(c.values) > 1e-14) == 1 and c.keys[0] == (0, 0)
    f = _rand((32, 32, 32), 4)
    c = fourier_analyze(f)
    assert np.sum(np.abs(c.values) ** 2) == pytest.approx(f.norm_sq(), rel=1e-10)
    assert np.allclose(fourier_synthesize(c, f.shape), f.data, atol=1e-12)


def test_ball_dft_tracks_oracle():
    from shearframes.phantom import ball_fourier_oracle
    n = 128
    f = ball_phantom((0.5, 0.5, 0.5), 0.25, n, 3)
    c = fourier_analyze(f).values.reshape(f.shape)
    for k in ((2, 0, 0), (3, 4, 0), (1, 2, 2)):
        xi = np.array(k, float)
        ref = ball_fourier_oracle(xi, 0.25, 3) * np.prod(np.sinc(xi / n))
        assert abs(c[k]) == pytest.approx(abs(ref), rel=0.01)


def test_haar_baseline():
    const = SampledField(np.full((16, 16), 1.5))
    c = haar_analyze(const)
    nz = np.flatnonzero(np.abs(c.values) > 1e-12)
    assert len(nz) == 1 and c.keys[int(nz[0])][0] == -1
    for shape in ((64, 64), (16, 16, 16)):
        f = _rand(shape, 9)
        c = haar_analyze(f)
        assert np.sum(c.values ** 2) == pytest.approx(f.norm_sq(), rel=1e-10)
        assert np.allclose(haar_synthesize(c), f.data, atol=1e-12)
    with pytest.raises(ValueError):
        haar_analyze(np.zeros((24, 24)))


@pytest.mark.parametrize("d,n", [(2, 1024), (3, 128)])
def test_haar_cube_census(d, n):
    cube = cube_phantom(0.2137, 0.7191, n, d)
    c = haar_analyze(cube)
    census = haar_scale_census(c)
    assert census_exponent(census) == pytest.approx(d - 1, abs=0.15)
    # the coefficient count is the same order, within the 2^d - 1 wavelet types
    coef = haar_scale_census(c, by="coefficient")
    assert all(census[j] <= coef[j] <= (2 ** d - 1) * census[j] for j in census)
    # largest coefficient per scale ~ 2^(-j d / 2)
    scales = c.keys.scale_of_entries()
    js = np.arange(2, int(np.log2(n)))
    mags = [np.abs(c.values[scales == j]).max() for j in js]
    assert np.polyfit(js, np.log2(mags), 1)[0] == pytest.approx(-d / 2, abs=0.15)


def test_census_exponent_synthetic():
    assert census_exponent({j: 3 * 4 ** j for j in range(8)}) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        haar_scale_census(fourier_analyze(np.ones((4, 4))))
