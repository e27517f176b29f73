import dataclasses

import numpy as np
import pytest

from shearframes.generators import (BandlimitedGenerator, BandlimitedSpec, CompactGenerator, CompactSpec,
                                    FactorizationError, GridSpec, ResolutionError, ScalingTable,
                                    bandpass_symbol_sq, bl_psi1_hat, bl_psi2_hat, bl_shearlet_hat,
                                    compact_shearlet_hat, export_taps_csv, import_taps_csv,
                                    lowpass_symbol_sq, sample_spatial, scaling_hat, spectral_factorize)
from shearframes.lattice import LatticeSpec, PyramidTag, ShearletIndex

S22 = CompactSpec(2, 2)
BL = BandlimitedSpec()


def blend_ref(t):
    # written out independently of the module
    t = min(max(t, 0.0), 1.0)
    return 35 * t ** 4 - 84 * t ** 5 + 70 * t ** 6 - 20 * t ** 7


# -- symbols ----------------------------------------------------------------

def test_lowpass_symbol_examples():
    for K, L in ((1, 1), (7, 4), (39, 19)):
        spec = CompactSpec(K, L)
        assert lowpass_symbol_sq(spec, 0.0) == pytest.approx(1.0, abs=1e-15)
        assert lowpass_symbol_sq(spec, 0.5) == pytest.approx(0.0, abs=1e-15)
    # cos^4(pi/4) (1 + 2 sin^2(pi/4))
    assert lowpass_symbol_sq(S22, 0.25) == pytest.approx(0.5, abs=1e-15)


def test_bandpass_symbol_examples():
    assert bandpass_symbol_sq(S22, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert bandpass_symbol_sq(S22, 0.5) == pytest.approx(1.0, abs=1e-15)
    assert bandpass_symbol_sq(S22, 0.25) == pytest.approx(lowpass_symbol_sq(S22, 0.75), abs=1e-15)


def test_lowpass_symbol_nonnegative():
    xi = np.random.default_rng(0).uniform(-3, 3, 100_000)
    for spec in (S22, CompactSpec(7, 4), CompactSpec(39, 19)):
        assert lowpass_symbol_sq(spec, xi).min() >= 0.0


@pytest.mark.parametrize("K", [1, 2, 5, 9])
def test_qmf_identity_when_k_equals_l(K):
    spec = CompactSpec(K, K)
    xi = np.linspace(0, 1, 1024)
    assert np.max(np.abs(lowpass_symbol_sq(spec, xi) + bandpass_symbol_sq(spec, xi) - 1)) < 1e-12


def test_strict_mode_constraints():
    CompactSpec(39, 19, strict=True)
    with pytest.raises(ValueError):
        CompactSpec(7, 4, strict=True)
    with pytest.raises(ValueError):
        CompactSpec(0, 3)
    with pytest.raises(ValueError):
        CompactSpec(7, 4, phase="linear")


# -- factorisation ----------------------------------------------------------

def test_haar_taps():
    assert np.allclose(spectral_factorize(CompactSpec(1, 1)), [0.5, 0.5], atol=1e-15)


@pytest.mark.parametrize("K,L", [(4, 2), (7, 4), (39, 19)])
def test_factorisation_round_trip(K, L):
    spec = CompactSpec(K, L)
    h = spectral_factorize(spec)
    assert h.size == K + L
    assert h.sum() == pytest.approx(1.0, abs=1e-8)
    xi = np.arange(4096) / 4096
    resp = np.abs(np.polynomial.polynomial.polyval(np.exp(-2j * np.pi * xi), h)) ** 2
    assert np.max(np.abs(resp - lowpass_symbol_sq(spec, xi))) < 1e-8


def test_factorisation_guard():
    with pytest.raises(FactorizationError):
        spectral_factorize(CompactSpec(60, 10))


def test_taps_csv_round_trip(tmp_path):
    h = spectral_factorize(CompactSpec(7, 4))
    export_taps_csv(h, tmp_path / "taps.csv")
    assert np.array_equal(import_taps_csv(tmp_path / "taps.csv"), h)


# -- scaling function and generator -----------------------------------------

def test_scaling_hat_values():
    assert abs(scaling_hat(S22, 0.0)) == pytest.approx(1.0, abs=1e-14)
    # mpmath product of sqrt(|m0|^2) over 80 factors, 30 digits
    assert abs(scaling_hat(S22, 0.3)) == pytest.approx(0.49301377253039064, rel=1e-12)
    assert abs(scaling_hat(CompactSpec(7, 4), 5.3)) == pytest.approx(1.1217851069542911e-06, rel=1e-9)


def test_scaling_hat_truncation_modulus():
    spec = CompactSpec(7, 4).with_taps()
    deeper = dataclasses.replace(spec, j_trunc=32)
    xi = np.array([0.3, 5.0, 60.0, 255.0])
    a, b = np.abs(scaling_hat(spec, xi)), np.abs(scaling_hat(deeper, xi))
    assert np.max(np.abs(a - b) / b) < 1e-10


def test_zero_phase_has_same_modulus():
    xi = np.linspace(-4, 4, 257)
    a = scaling_hat(CompactSpec(7, 4), xi)
    b = scaling_hat(CompactSpec(7, 4, phase="zero"), xi)
    assert np.allclose(np.abs(a), b, atol=1e-13)


def test_compact_shearlet_examples():
    assert abs(compact_shearlet_hat(S22, np.zeros(3))) < 1e-15
    # |m1(1/2)| = 1, so psi^(1/8, 0, 0) = phi^(1/8) in modulus
    v = compact_shearlet_hat(S22, np.array([0.125, 0.0, 0.0]))
    assert abs(v) == pytest.approx(abs(scaling_hat(S22, 0.125)), rel=1e-13)
    # factor-wise mpmath oracle
    v = compact_shearlet_hat(S22, np.array([0.3, 0.1, 0.2]))
    assert abs(v) == pytest.approx(0.02918313293773011, rel=1e-12)


def test_scaling_table_matches_product():
    spec = CompactSpec(7, 4)
    table = ScalingTable(spec)
    xi = np.random.default_rng(1).uniform(-40, 40, 2000)
    exact = scaling_hat(spec.with_taps(), xi)
    assert np.max(np.abs(table(xi) - exact)) < 1e-4
    assert np.all(table.magnitude_bound(xi) >= np.abs(table(xi)) - 1e-15)
    far = np.array([300.0, -700.0])
    assert np.allclose(table(far), scaling_hat(spec.with_taps(), far))


def test_psi_bound_dominates():
    gen = CompactGenerator(CompactSpec(7, 4))
    rng = np.random.default_rng(2)
    y = [rng.uniform(-3, 3, 5000) for _ in range(3)]
    assert np.all(gen.psi_bound(y) >= np.abs(gen.psi_hat(y)) - 1e-15)


# -- band-limited windows ---------------------------------------------------

def test_bandlimited_window_examples():
    assert bl_psi2_hat(BL, 0.0) ** 2 + bl_psi2_hat(BL, 1.0) ** 2 + bl_psi2_hat(BL, -1.0) ** 2 == pytest.approx(1.0)
    xi = np.linspace(-0.4999, 0.4999, 1001)
    assert np.all(bl_psi1_hat(BL, xi) == 0)
    assert sum(bl_psi1_hat(BL, 2.0 ** -j * 3.0) ** 2 for j in range(9)) == pytest.approx(1.0, abs=1e-12)


def test_calderon_and_shift_identities():
    xi = np.linspace(1.0, 200.0, 20001)
    cal = sum(bl_psi1_hat(BL, 2.0 ** -j * xi) ** 2 for j in range(12))
    assert np.max(np.abs(cal - 1)) < 1e-10
    eta = np.linspace(-1.0, 1.0, 20001)
    shift = sum(bl_psi2_hat(BL, eta + l) ** 2 for l in (-1, 0, 1))
    assert np.max(np.abs(shift - 1)) < 1e-10


def test_bandlimited_shearlet_examples():
    assert bl_shearlet_hat(BL, np.array([0.25, 0.0, 0.0])) == 0
    assert bl_shearlet_hat(BL, np.array([1.0, 2.0, 0.0])) == 0
    for xi in ([2.0, 0.4, -0.2], [1.5, 0.4, -0.2]):
        x1, x2, x3 = xi
        g = lambda t: blend_ref(2 - 2 * abs(t))
        ref = np.sqrt(max(g(x1 / 2) - g(x1), 0)) * np.sqrt(blend_ref(1 - abs(x2 / x1))) \
            * np.sqrt(blend_ref(1 - abs(x3 / x1)))
        assert bl_shearlet_hat(BL, np.array(xi)) == pytest.approx(ref, abs=1e-14)


def test_bandlimited_cone_support():
    rng = np.random.default_rng(4)
    xi = rng.uniform(-5, 5, size=(20000, 3))
    v = bl_shearlet_hat(BL, xi)
    outside = (np.abs(xi[:, 1] / xi[:, 0]) > 1) | (np.abs(xi[:, 2] / xi[:, 0]) > 1)
    assert np.all(v[outside] == 0)


# -- spatial sampling -------------------------------------------------------

GRID = GridSpec((256, 256))
SPEC11 = LatticeSpec(1.0, 1.0)


def _norm(a, grid):
    return np.sqrt(np.sum(a ** 2) * grid.cell_volume)


def test_sample_spatial_l2_norm_independent_of_scale_and_shear():
    gen = CompactGenerator(CompactSpec(7, 4))
    tag = PyramidTag.C1
    ref = _norm(sample_spatial(gen, ShearletIndex(tag, 0, (0,), (0, 0)), GRID, 32.0, SPEC11), GRID)
    for j, k in ((0, (1,)), (1, (-2,)), (2, (2,)), (2, (-1,))):
        a = sample_spatial(gen, ShearletIndex(tag, j, k, (0, 0)), GRID, 32.0, SPEC11)
        assert _norm(a, GRID) == pytest.approx(ref, rel=0.02)


def test_sample_spatial_j0_is_generator():
    from shearframes.generators import generator_space
    gen = CompactGenerator(CompactSpec(7, 4))
    grid = GridSpec((256, 256))
    f0 = 64.0
    a = sample_spatial(gen, ShearletIndex(PyramidTag.C1, 0, (0,), (0, 0)), grid, f0, SPEC11)
    # x_gen = f0 x; the support (about 62 units) fits in one period of 64
    x = np.stack(grid.coords(), axis=-1) * f0
    ref = sum(generator_space(gen.spec, x + f0 * np.array(p)) for p in ((0, 0), (-1, 0), (0, -1), (-1, -1)))
    assert np.max(np.abs(a - f0 * ref)) < 1e-6 * np.max(np.abs(a))


def test_sample_spatial_translation_is_shift():
    gen = CompactGenerator(CompactSpec(7, 4, phase="zero"))
    grid = GridSpec((64, 64))
    # C2 at j=0: m = (1, 0) moves c2 = 1 generator unit along axis 0, i.e. 16 cells at f0 = 4
    b0 = sample_spatial(gen, ShearletIndex(PyramidTag.C2, 0, (0,), (0, 0)), grid, 4.0, SPEC11)
    b1 = sample_spatial(gen, ShearletIndex(PyramidTag.C2, 0, (0,), (1, 0)), grid, 4.0, SPEC11)
    assert np.max(np.abs(np.roll(b0, 16, axis=0) - b1)) < 1e-6 * np.max(np.abs(b0))


def test_sample_spatial_resolution_guard():
    with pytest.raises(ResolutionError):
        sample_spatial(BandlimitedGenerator(), ShearletIndex(PyramidTag.C1, 3, (0,), (0, 0)),
                       GridSpec((64, 64)), 16.0, SPEC11)
    with pytest.raises(ResolutionError):
        sample_spatial(CompactGenerator(CompactSpec(7, 4)), ShearletIndex(PyramidTag.C1, 5, (0,), (0, 0)),
                       GridSpec((64, 64)), 8.0, SPEC11)
