import numpy as np
import pytest

from shearframes.frame import constant_field_quotient
from shearframes.generators import BandlimitedGenerator, CompactGenerator, CompactSpec
from shearframes.lattice import LatticeSpec
from shearframes.phantom import ball_phantom
from shearframes.sparsebench import (ErrorCurve, FourierSystem, HaarSystem, bench_haar, bench_shearlet,
                                     coeff_decay_vs_n, counting_experiment, default_fit_range, error_curve,
                                     fit_decay_slope, geometric_n, halfplane_decay_experiment, l2_normalised,
                                     nterm_error, nterm_select, selected_keys, significant_count, weak_lp_norm)
from shearframes.transform import CoeffTable, SampledField, ShearletSystem, analyze


def _table(vals):
    vals = np.asarray(vals, dtype=float)
    return CoeffTable(vals, list(range(vals.size)))


@pytest.fixture(scope="module")
def disk64():
    return ball_phantom((0.5, 0.5), 0.3, 64, 2)


@pytest.fixture(scope="module")
def compact64():
    return ShearletSystem((64, 64), CompactGenerator(CompactSpec(7, 4)), LatticeSpec(1.0, 1.0), base_freq=4.0)


def test_fit_synthetic_power_laws():
    N = np.array(geometric_n(16, 16384, 20), float)
    fit = fit_decay_slope((N, N ** -2.0))
    assert fit.slope == pytest.approx(-2.0, abs=1e-9)
    assert fit.r_squared == pytest.approx(1.0)
    fit = fit_decay_slope((N, N ** -2.0 * np.log(N) ** 3), log_power=3)
    assert fit.slope == pytest.approx(-2.0, abs=0.01) and fit.log_correction
    planted = fit_decay_slope((N, 7.0 * N ** -0.731), fit_range=(N[0], N[-1]))
    assert planted.slope == pytest.approx(-0.731, abs=1e-6)
    assert planted.intercept == pytest.approx(np.log(7.0), abs=1e-6)


def test_fit_range_rules():
    N = list(range(1, 21))
    assert default_fit_range(N) == (2, 18)
    with pytest.raises(ValueError):
        fit_decay_slope((np.arange(1, 10.0), np.ones(9)), fit_range=(5, 5))
    with pytest.raises(ValueError):
        fit_decay_slope((np.array([2.0, 3, 4]), np.ones(3)))


def test_nterm_select_examples():
    t = _table([2, -3, 1])
    assert np.array_equal(nterm_select(t, 1).values, [0, -3, 0])
    assert np.array_equal(nterm_select(t, 3).values, t.values)
    with pytest.raises(ValueError):
        nterm_select(t, 4)
    rng = np.random.default_rng(0)
    big = _table(np.round(rng.standard_normal(500), 1))  # many ties
    for n in range(0, 499, 37):
        assert set(selected_keys(big, n)) <= set(selected_keys(big, n + 1))


@pytest.mark.parametrize("system_cls", [FourierSystem, HaarSystem])
def test_orthonormal_error_is_tail(system_cls, disk64):
    system = system_cls(disk64.shape)
    curve = error_curve(disk64, system, [0, 1, 10, 100, 1000])
    assert curve.err_sq[0] == pytest.approx(disk64.norm_sq(), rel=1e-12)
    for e, t in zip(curve.err_sq, curve.tail):
        assert e == pytest.approx(t, rel=1e-10, abs=1e-14)
    assert all(b <= a + 1e-15 for a, b in zip(curve.err_sq, curve.err_sq[1:]))
    with pytest.raises(ValueError):
        error_curve(disk64, system, [1, 10, 10])


def test_frame_curve_and_lemma1(disk64, compact64):
    A = constant_field_quotient(compact64)
    N = [0, 50, 100, 400, 1600]
    curve = error_curve(disk64, compact64, N, A_est=A, cg_tol=1e-10)
    assert curve.err_sq[0] == pytest.approx(disk64.norm_sq(), rel=1e-6)
    assert curve.lemma1_violations == 0
    # non-increasing up to the CG slack
    assert all(b <= a + 1e-5 for a, b in zip(curve.err_sq, curve.err_sq[1:]))
    err, bound = nterm_error(disk64, compact64, 400, A_est=A)
    assert err == pytest.approx(curve.err_sq[3], rel=1e-6)
    assert bound == pytest.approx(curve.bound[3], rel=1e-12)
    with pytest.raises(ValueError):
        nterm_error(disk64, compact64, 10)


def test_streamed_matches_full_table(disk64, compact64):
    A = 1.0
    full = analyze(disk64, compact64)
    a = error_curve(disk64, compact64, [20, 200], A_est=A, coeffs=full, cg_tol=1e-12)
    b = error_curve(disk64, compact64, [20, 200], A_est=A, cg_tol=1e-12)
    assert np.allclose(a.err_sq, b.err_sq, rtol=1e-8)
    assert np.allclose(a.tail, b.tail, rtol=1e-10)


def test_tight_frame_full_reconstruction():
    system = ShearletSystem((32, 32), BandlimitedGenerator(), base_freq=4.0)
    f = ball_phantom((0.5, 0.5), 0.3, 32, 2)
    err, bound = nterm_error(f, system, system.n_coeffs, A_est=1.0)
    assert err <= 1e-8 and bound <= 1e-8


def test_weak_lp_norm():
    assert weak_lp_norm(2.0 ** -np.arange(20), 1.0) == pytest.approx(1.0)
    assert weak_lp_norm(np.zeros(5), 0.5) == 0.0
    assert weak_lp_norm(np.arange(1, 101) ** -1.5, 2 / 3) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        weak_lp_norm([1.0], 0)


def test_coeff_decay_synthetic():
    n = np.arange(1, 5001, dtype=float)
    fit = coeff_decay_vs_n(_table(n ** -1.5))
    assert fit.slope == pytest.approx(-1.5, abs=1e-9)
    with pytest.raises(ValueError):
        coeff_decay_vs_n(_table(np.ones(50)))


def test_significant_count():
    t = _table([0.5, -2.0, 0.1, 3.0])
    assert significant_count(t, 5.0)[0] == 0
    assert significant_count(t, 0.3)[0] == 3
    with pytest.raises(ValueError):
        significant_count(t, 0)


def test_counting_on_disk(disk64, compact64):
    coeffs = l2_normalised(analyze(disk64, compact64))
    rows, count_fit, cut_fit = counting_experiment(coeffs, decades=3.0)
    counts = [r["count"] for r in rows]
    assert all(b >= a for a, b in zip(counts, counts[1:]))
    assert count_fit.slope > 0 and cut_fit.slope >= 0
    eps = rows[len(rows) // 2]["eps"]
    assert significant_count(coeffs, eps)[0] == rows[len(rows) // 2]["count"]


def test_halfplane_ordering():
    # j = 0 atoms are wider than the torus at f0 = 4, so the scan starts at j = 1
    system = ShearletSystem((128, 128), CompactGenerator(CompactSpec(7, 4)), base_freq=4.0)
    js = range(1, system.j_max + 1)
    rows, fits_i = halfplane_decay_experiment(0.0, js, system, case="i")
    _, fits_ii = halfplane_decay_experiment(4.0, js, system, case="ii")
    _, fits_iii = halfplane_decay_experiment(0.5, js, system, case="iii")
    assert fits_i["j_slope"].slope == pytest.approx(-0.75, abs=0.1)
    assert fits_iii["j_slope"].slope < fits_ii["j_slope"].slope < fits_i["j_slope"].slope
    assert {"j", "k1", "khat1", "max_coeff"} <= set(rows[0])


def test_haar_bench_disk():
    f = ball_phantom((0.5, 0.5), 0.25, 256, 2)
    res = bench_haar(f, geometric_n(16, 4096, 16))
    assert res.fit.slope == pytest.approx(-1.0, abs=0.2)
    assert res.extra["grid_floor"] <= res.extra["nonzero"]


def test_bench_shearlet_fields(disk64, compact64):
    res = bench_shearlet(disk64, compact64, geometric_n(20, 2000, 10), 1.0, "disk")
    d = res.to_dict()
    assert d["lemma1_violations"] == 0
    assert {"fit", "log_fit", "coeff_fit", "A_est"} <= set(d)
    assert res.curve.phantom_id == "disk" and res.system.startswith("shearlet")


def test_error_curve_csv(tmp_path):
    c = ErrorCurve([1, 2], [0.5, 0.25], bound=[1.0, 0.5], tail=[1.0, 0.5])
    c.to_csv(tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "N,err_sq,tail,lemma1_bound" and len(lines) == 3
