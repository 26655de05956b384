import numpy as np
import pytest

from painleve_rogue.errors import PrecisionExhaustedError, ValidationError
from painleve_rogue.soliton import (BINARY64, PrecisionPolicy, WaveField, darboux_evaluate,
                                    dressing_factor, evaluate_field, extremal_peak,
                                    one_soliton_modulus, oracle_evaluate)
from painleve_rogue.spectral import SpectralData, evolve_spectral_data, one_soliton, sample_ensemble

EMPTY = SpectralData(np.zeros(0, complex), np.zeros(0, complex), np.zeros(0, complex))


@pytest.mark.parametrize("x", [0.0, 0.5, -0.5, 1.0, -1.0])
def test_one_soliton_sech_profile(x):
    assert abs(abs(darboux_evaluate(one_soliton(), x, 0.0)) - 2 / np.cosh(2 * x)) < 1e-14


def test_one_soliton_peak_is_extremal():
    d = one_soliton()
    assert abs(abs(darboux_evaluate(d, 0, 0)) - 2) < 1e-15
    assert extremal_peak(d) == 2


def test_moving_soliton_profile():
    d = one_soliton(eta=0.8, xi=0.3)
    x = np.linspace(-3, 3, 13)
    f = evaluate_field(d, x, [0.4])
    assert np.allclose(np.abs(f.values[0]), one_soliton_modulus(x, 0.4, 0.8, 0.3), atol=1e-13)


def test_empty_data_is_zero():
    assert darboux_evaluate(EMPTY, 0.3, 0.1) == 0
    assert oracle_evaluate(EMPTY, 0.3, 0.1) == 0
    assert np.all(evaluate_field(EMPTY, [0, 1], [0]).values == 0)


def test_extremal_peak_sums():
    assert extremal_peak(SpectralData.from_eigenvalues([1j, 2j])) == 6


def test_extremal_peak_matches_amplitudes(piii_config):
    from dataclasses import replace
    d = sample_ensemble(replace(piii_config, N=50), 1)
    assert extremal_peak(d) == 2 * np.sum(d.eigenvalues.imag)


def test_oracle_one_soliton():
    d = one_soliton()
    assert abs(oracle_evaluate(d, 0.3, 0.1) - darboux_evaluate(d, 0.3, 0.1)) < 1e-12


def test_oracle_matches_darboux_random(piii_config):
    x = np.linspace(-2, 2, 21)
    for r in range(piii_config.realizations):
        d = sample_ensemble(piii_config, r)
        for t in (0.0, 0.1):
            dar = evaluate_field(d, x, [t]).values[0]
            orc = np.array([oracle_evaluate(d, xv, t) for xv in x])
            assert np.max(np.abs(dar - orc)) < 1e-10


def test_time_via_seed_equals_evolved_parameters():
    d = SpectralData.from_eigenvalues([0.2 + 1j, -0.4 + 0.7j, 0.1 + 1.4j])
    t = 0.3
    e = evolve_spectral_data(d, t)
    for x in (-0.5, 0.0, 0.8):
        assert abs(darboux_evaluate(d, x, t) - darboux_evaluate(e, x, 0.0)) < 1e-12


def test_permutation_invariance(piii_config):
    from dataclasses import replace
    d = sample_ensemble(replace(piii_config, N=20), 0)
    perm = np.random.default_rng(4).permutation(20)
    e = SpectralData.from_eigenvalues(d.eigenvalues[perm])
    for x in (-0.3, 0.0, 0.2):
        a, b = darboux_evaluate(d, x, 0.05), darboux_evaluate(e, x, 0.05)
        assert abs(a - b) <= 1e-9 * abs(a)


def test_global_bound_on_grid(pv_config):
    d = sample_ensemble(pv_config, 0)
    f = evaluate_field(d, np.linspace(-2, 2, 81), np.linspace(-0.5, 0.5, 11))
    assert np.max(np.abs(f.values)) <= extremal_peak(d) * (1 + 1e-8)


def test_high_precision_agrees_with_binary64(pv_config):
    d = sample_ensemble(pv_config, 1)
    a = darboux_evaluate(d, 0.4, 0.1)
    b = darboux_evaluate(d, 0.4, 0.1, PrecisionPolicy("fixed", 128))
    assert abs(a - b) < 1e-10 * max(1, abs(a))


def test_auto_policy_extremality(piii_config):
    d = sample_ensemble(piii_config, 0)
    v = darboux_evaluate(d, 0, 0, PrecisionPolicy.auto())
    assert abs(abs(v) - extremal_peak(d)) <= 1e-8 * extremal_peak(d)


def test_auto_policy_exhaustion_reported():
    d = SpectralData.from_eigenvalues([1j, 2j])
    strict = PrecisionPolicy("auto", 53, 53, 1e-30)
    with pytest.raises(PrecisionExhaustedError):
        darboux_evaluate(d, 0.3, 0.0, strict)


def test_precision_policy_validation():
    with pytest.raises(ValidationError):
        PrecisionPolicy("fixed", 32)
    with pytest.raises(ValidationError):
        PrecisionPolicy("sometimes")


def test_dressing_factor_scale_invariant(rng):
    q = rng.normal(size=2) + 1j * rng.normal(size=2)
    lam, z = 0.3 + 1.1j, 0.7 - 0.2j
    assert np.allclose(dressing_factor(lam, q, z), dressing_factor(lam, (2 - 3j) * q, z), atol=1e-15)


def test_dressing_factor_determinant():
    # det chi(z) = (z - lam) / (z - conj lam) for any q
    lam, q = 1j, np.array([1.0, 2.0j])
    assert abs(np.linalg.det(dressing_factor(lam, q, 0.4))
               - (0.4 - lam) / (0.4 - np.conj(lam))) < 1e-15


def test_field_grid_validation():
    with pytest.raises(ValidationError):
        evaluate_field(one_soliton(), [0, 1, 0.5], [0])


def test_single_point_field_equals_pointwise():
    d = SpectralData.from_eigenvalues([1j, 0.5 + 2j])
    f = evaluate_field(d, [0.0], [0.0])
    assert f.values.shape == (1, 1)
    assert f.values[0, 0] == darboux_evaluate(d, 0.0, 0.0)


def test_field_matches_oracle_n2():
    d = SpectralData.from_eigenvalues([0.4 + 1j, -0.3 + 0.6j])
    x = np.linspace(-1.5, 1.5, 7)
    f = evaluate_field(d, x, [0.0, 0.2])
    for i, t in enumerate((0.0, 0.2)):
        assert np.allclose(f.values[i], [oracle_evaluate(d, xv, t) for xv in x], atol=1e-10)


def test_csv_and_sidecar(tmp_path):
    f = evaluate_field(one_soliton(), [0.0, 0.1], [0.0])
    f.frame = {"kind": "raw"}
    path = tmp_path / "f.csv"
    f.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,t,re_psi,im_psi,abs_psi"
    assert float(lines[1].split(",")[4]) == abs(f.values[0, 0])
    assert (tmp_path / "f.csv.json").exists()


def test_wavefield_shape_check():
    with pytest.raises(ValueError):
        WaveField([0, 1], [0], np.zeros(3))


def test_binary64_default():
    assert BINARY64.mode == "fixed" and BINARY64.bits == 53
