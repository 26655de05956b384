import numpy as np
import pytest

from painleve_rogue import models, rhp
from painleve_rogue.errors import GeometryError, ValidationError
from painleve_rogue.soliton import darboux_evaluate
from painleve_rogue.spectral import SpectralData, one_soliton, sample_ensemble


def test_params_validation():
    with pytest.raises(ValidationError):
        models.ModelParams("PVI")
    with pytest.raises(ValidationError):
        models.ModelParams("PV", 0, 0, None, 2.0)
    with pytest.raises(ValidationError):
        models.ModelParams("PV", 0, 0, 0.3, -1.0)
    with pytest.raises(ValidationError):
        models.ModelParams("PIII", np.inf)
    assert models.ModelParams("piii").case == "PIII"


@pytest.mark.parametrize("params", [models.ModelParams("PIII", 0.3, 0.1),
                                    models.ModelParams("PV", -0.5, 0.0, 0.3, 2.0)])
def test_jump_unimodular_and_schwartz(params):
    jump = models.model_jump(params)
    Z = np.exp(1j * np.linspace(0, 2 * np.pi, 37))
    J = jump(Z)
    assert np.max(np.abs(np.linalg.det(J) - 1)) < 1e-12
    # J(Z) J(conj Z)^H = I on the circle, where conj Z = 1/Z
    JH = np.conj(np.swapaxes(jump(np.conj(Z)), -1, -2))
    assert np.max(np.abs(J @ JH - np.eye(2))) < 1e-12


def test_blaschke_unimodular_on_real_axis():
    lam = [0.3 + 1j, -1 + 0.5j, 2j]
    x = np.linspace(-5, 5, 11)
    assert np.allclose(np.abs(models.blaschke(x, lam)), 1, atol=1e-14)


def test_blaschke_single_factor():
    assert np.isclose(models.blaschke(np.array([0.0]), [1j])[0], -1)
    assert np.isclose(models.blaschke(np.array([1.0]), [1j], log_space=False)[0], (1 - 1j) / (1 + 1j))


def test_blaschke_log_space_agrees():
    lam = np.array([0.3 + 1j, -1 + 0.5j])
    z = np.array([0.5 + 2j, -3 - 1j])
    assert np.allclose(models.blaschke(z, lam), models.blaschke(z, lam, log_space=False))


def test_pv_exponent_tends_to_piii():
    # (mu/zeta) Log(1 + zeta/Z) -> mu / Z; with mu = 2 the PIII term 2/Z
    Z = np.exp(1j * np.linspace(0, 6, 7))
    a = models.pv_exponent(Z, 0.4, 0.0, 1e-6, 2.0)
    b = models.piii_exponent(Z, 0.4, 0.0)
    assert np.max(np.abs(a - b)) < 1e-5


def test_pv_margin_excludes_branch_cut():
    r_in, r_out = models.pv_margin(0.3)
    assert 0.3 < r_in < 1 < r_out


def test_pv_peak_is_twice_mean_amplitude():
    psi, _, _ = models.solve_model(models.ModelParams("PV", 0, 0, 0.3, 4.0), 128)
    assert abs(abs(psi) - 8) < 1e-4


def test_scaling_examples():
    s = models.scaling_map("PIII", 50, 4.0)
    assert s.length == pytest.approx(0.01)
    x, t = s.forward(2.0, 1.0)
    assert x == pytest.approx(0.02) and t == pytest.approx(1e-4)
    assert models.scaling_map("PV", 100).length == pytest.approx(0.01)
    with pytest.raises(ValidationError):
        models.scaling_map("PIII", 10)
    with pytest.raises(ValidationError):
        models.scaling_map("PIII", 0, 1.0)


def test_nsoliton_rhp_matches_one_soliton():
    d = one_soliton()
    for x in (-0.7, 0.0, 0.4):
        psi, _ = models.nsoliton_rhp_evaluate(d, x, 0.1)
        assert abs(psi - darboux_evaluate(d, x, 0.1)) < 1e-10


def test_nsoliton_rhp_matches_darboux(piii_config):
    for r in range(piii_config.realizations):
        d = sample_ensemble(piii_config, r)
        for x, t in ((0.0, 0.0), (0.3, 0.0), (0.1, 0.02)):
            psi, _ = models.nsoliton_rhp_evaluate(d, x, t)
            ref = darboux_evaluate(d, x, t)
            assert abs(psi - ref) < 1e-7 * abs(ref)


def test_nsoliton_rhp_accurate_or_refused(piii_config):
    # away from the origin the jump entries grow like exp(2 |Im theta|); the
    # solve then either stays within the rounding floor or refuses outright
    from painleve_rogue.errors import IllConditionedError
    for r in range(piii_config.realizations):
        d = sample_ensemble(piii_config, r)
        for x, t in ((-0.2, 0.0), (0.2, -0.05), (-0.4, 0.1)):
            try:
                psi, _ = models.nsoliton_rhp_evaluate(d, x, t)
            except IllConditionedError:
                continue
            ref = darboux_evaluate(d, x, t)
            assert abs(psi - ref) < 1e-3 * abs(ref)


def test_nsoliton_radius_independent():
    d = SpectralData.from_eigenvalues([0.2 + 1j, -0.3 + 0.6j])
    a, _ = models.nsoliton_rhp_evaluate(d, 0.3, 0.0, radius=2.0)
    b, _ = models.nsoliton_rhp_evaluate(d, 0.3, 0.0, radius=4.0)
    assert abs(a - b) < 1e-10


def test_hopeless_conditioning_is_refused(piii_config):
    from painleve_rogue.errors import IllConditionedError
    d = sample_ensemble(piii_config, 1)
    reach = np.max(np.abs(d.eigenvalues))
    with pytest.raises(IllConditionedError):
        models.nsoliton_rhp_evaluate(d, -0.4, 0.1, radius=3 * reach)


def test_nsoliton_jump_needs_enclosing_circle():
    with pytest.raises(GeometryError):
        models.nsoliton_jump(SpectralData.from_eigenvalues([3j]), 0, 0, 2.0)


def test_rescaled_soliton_peak_is_exact(piii_config):
    from dataclasses import replace
    d = sample_ensemble(replace(piii_config, N=25), 0)
    s = models.scaling_map("PIII", 25, 4.0)
    psi = models.rescaled_soliton(d, s, [0.0])
    assert abs(abs(psi[0]) - s.amplitude * 2 * np.sum(d.eigenvalues.imag)) < 1e-8 * abs(psi[0])


def test_rescaled_soliton_approaches_model(fig1_laws):
    # the L2 distance to the model shrinks as N grows, for a fixed realization stream
    from painleve_rogue.experiments import l2_error
    from painleve_rogue.spectral import RandomEnsembleConfig
    mu, v = fig1_laws
    X = np.linspace(-1, 1, 21)
    model = models.model_profile("PIII", X, M=64)
    err = []
    for N in (25, 400):
        d = sample_ensemble(RandomEnsembleConfig("PIII", N, mu, v, 1, 1), 0)
        err.append(l2_error(models.rescaled_soliton(d, models.scaling_map("PIII", N, 4.0), X, M=64),
                            model, X))
    assert err[1] < err[0]


def test_model_profile_cached_copy():
    X = np.array([0.0, 0.5])
    a = models.model_profile("PIII", X, M=64)
    a[:] = 0
    assert abs(models.model_profile("PIII", X, M=64)[0]) > 3


def test_good_set_predicates():
    mu = np.array([1.0, 2.0, 3.0, 2.0])
    assert models.in_omega(mu / 2, np.zeros(4), 0.45)      # 1.5 < 4^0.45 = 1.87
    assert not models.in_omega(mu, np.zeros(4), 0.45)
    assert not models.in_omega(mu / 2, np.full(4, 2.0), 0.45)
    assert models.in_v2delta(mu, 2.0, 0.3)
    assert not models.in_v2delta(mu + 1, 2.0, 0.3)         # deviation 4 > 4^0.6 = 2.3
    assert models.u2delta_statistic(np.full(5, 2.0), 2.0, 0.3) == 0
    assert models.in_u2delta(np.full(5, 2.0), 2.0, 0.3, 0.3)


def test_u_statistic_single_term():
    # one amplitude: |mu - mean| max over the circle of 1/|Z + zeta| = 1/(1 - zeta) at Z = -1
    s = models.u2delta_statistic([3.0], 2.0, 0.5, n_angles=4)
    assert s == pytest.approx(2.0)


def test_solution_diagnostics_present():
    _, _, sol = models.solve_model(models.ModelParams("PIII", 0.2), 64)
    assert isinstance(sol, rhp.RhpSolution)
    assert sol.diagnostics["relative_residual"] < 1e-10
