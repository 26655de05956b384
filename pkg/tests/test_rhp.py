import numpy as np
import pytest

from painleve_rogue import models, rhp
from painleve_rogue.errors import (DivergenceError, GeometryError, ResolutionError,
                                   StructureError, ValidationError)


def _random_series(rng, M=16):
    c = rng.normal(size=(2 * M, 2, 2)) + 1j * rng.normal(size=(2 * M, 2, 2))
    return rhp.LaurentSeries(c, -M)


def small_jump(eps=0.2):
    def ev(Z):
        J = np.empty(Z.shape + (2, 2), complex)
        J[..., 0, 0] = 1
        J[..., 1, 1] = 1
        J[..., 0, 1] = eps * Z ** 2
        J[..., 1, 0] = -eps * np.conj(Z) ** 2
        return J
    return rhp.JumpMatrix(ev, margin=(0.5, 2.0), symmetric=False, label="small")


# ------------------------------------------------------------ projectors

def test_projector_difference_is_identity(rng):
    s = _random_series(rng)
    d = rhp.cauchy_project(s, "plus").coeffs - rhp.cauchy_project(s, "minus").coeffs
    assert np.array_equal(d, s.coeffs)


def test_projectors_annihilate_each_other(rng):
    s = _random_series(rng)
    assert np.all(rhp.cauchy_project(rhp.cauchy_project(s, "minus"), "plus").coeffs == 0)
    assert np.all(rhp.cauchy_project(rhp.cauchy_project(s, "plus"), "minus").coeffs == 0)


def test_projector_side_validated(rng):
    with pytest.raises(ValidationError):
        rhp.cauchy_project(_random_series(rng), "left")


def test_laurent_evaluation():
    s = rhp.LaurentSeries(np.array([2.0, 0.0, 3.0]), -1)
    assert np.isclose(s(0.5), 2 / 0.5 + 3 * 0.5)
    assert s.M == 1
    assert s.mode(5) == 0


# --------------------------------------------------------- closed forms

def test_constant_jump_closed_form():
    J0 = np.array([[1, 0.5], [0.2, 1.4]])
    sol = rhp.solve_collocation(rhp.constant_jump(J0), 16)
    # E = J0 inside, I outside, so E_- = I and R1 = 0
    assert np.max(np.abs(sol.R1)) < 1e-12
    inside = rhp.evaluate_off_contour(sol, np.array([0.3, -0.2j]))
    outside = rhp.evaluate_off_contour(sol, np.array([2.0, 1.5 - 3j]))
    assert np.max(np.abs(inside - J0)) < 1e-12
    assert np.max(np.abs(outside - np.eye(2))) < 1e-12


def test_neumann_matches_collocation():
    jump = small_jump()
    a = rhp.solve_collocation(jump, 32)
    b = rhp.solve_neumann(jump, 32)
    assert np.max(np.abs(a.R1 - b.R1)) < 1e-10
    assert b.diagnostics["terms"] > 1


def test_neumann_refuses_large_jump():
    with pytest.raises(DivergenceError):
        rhp.solve_neumann(small_jump(2.0), 32)


def test_boundary_residual_small():
    sol = rhp.solve_collocation(small_jump(), 32)
    assert sol.residual < 1e-12


def test_mode_count_validated():
    with pytest.raises(ValidationError):
        rhp.solve_collocation(small_jump(), 24)
    with pytest.raises(ValidationError):
        rhp.solve_collocation(small_jump(), 8)


def test_margin_must_straddle_circle():
    with pytest.raises(ValidationError):
        rhp.JumpMatrix(lambda Z: Z, margin=(1.1, 2.0))


def test_off_contour_rejects_circle():
    sol = rhp.solve_collocation(small_jump(), 16)
    with pytest.raises(GeometryError):
        rhp.evaluate_off_contour(sol, np.array([1.0 + 1e-8]))


# ----------------------------------------------------------- model problems

def test_piii_peak_is_four():
    psi, m, sol = models.solve_model(models.ModelParams("PIII"), 128, strict=True)
    assert abs(abs(psi) - 4) < 1e-4
    assert sol.residual < 1e-8


def test_piii_r1_structure():
    sol = rhp.solve(models.piii_jump(models.ModelParams("PIII", 0.7, 0.2)))
    R1 = sol.R1
    assert abs(R1[1, 0] + np.conj(R1[0, 1])) < 1e-10
    assert abs(R1[0, 0] + R1[1, 1]) < 1e-10


def test_solution_has_unit_determinant():
    sol = rhp.solve(models.piii_jump(models.ModelParams("PIII", 0.4)))
    E = rhp.evaluate_off_contour(sol, np.array([0.3 + 0.1j, 2.0 - 1j]))
    assert np.max(np.abs(np.linalg.det(E) - 1)) < 1e-10


def test_refinement_in_modes_converges():
    jump = models.piii_jump(models.ModelParams("PIII", -1.0))
    r = [rhp.solve_collocation(jump, M, check_tail=False).R1 for M in (32, 64, 128)]
    assert np.max(np.abs(r[2] - r[1])) < np.max(np.abs(r[1] - r[0]))
    assert np.max(np.abs(r[2] - r[1])) < 1e-9


def test_too_few_modes_is_resolution_error():
    with pytest.raises(ResolutionError) as info:
        rhp.solve_collocation(models.piii_jump(models.ModelParams("PIII")), 16)
    assert info.value.exit_code == 3


def test_adaptive_solve_records_diagnostics():
    sol = rhp.solve(models.piii_jump(models.ModelParams("PIII")), 16)
    assert sol.M > 16
    assert set(sol.diagnostics) >= {"tail", "jump_norm", "relative_residual", "floor"}


def test_structure_violation_detected():
    sol = rhp.solve_collocation(small_jump(), 16)
    sol.R1 = np.array([[0.0, 1.0], [1.0, 0.0]], complex)
    with pytest.raises(StructureError):
        rhp.extract_potential(sol)


def test_resolution_threshold_tracks_jump_size():
    assert rhp.resolution_threshold(1e-10, 1.0) == 1e-10
    assert rhp.resolution_threshold(1e-10, 1e4) == pytest.approx(1e-6)


def test_to_json_has_r1():
    import json
    sol = rhp.solve_collocation(small_jump(), 16)
    doc = json.loads(sol.to_json())
    assert doc["M"] == 16 and len(doc["R1"]) == 2


def test_boundary_residual_over_model_window():
    # PIII in absolute terms; PV relative to |E_- J|, whose entries reach |J|
    for X in np.linspace(-2, 2, 5):
        for T in np.linspace(-2, 2, 5):
            _, _, s3 = models.solve_model(models.ModelParams("PIII", X, T))
            _, _, s5 = models.solve_model(models.ModelParams("PV", X, T, 0.3, 2.0))
            assert s3.residual < 1e-8
            assert s5.diagnostics["relative_residual"] < 1e-8
