"""Diagonal model: construction, source solutions, forward map, evaluation."""

import json
import math

import numpy as np
import numpy.testing as npt
import pytest

from rkhs_invlab import (DataFunction, DomainError, ParameterError,
                         ShapeError, SpectralProblem, basis_matrix,
                         build_power_law_problem, eval_function, forward_data,
                         make_source_solution, problem_from_descriptor,
                         problem_to_descriptor, resolve_w_spec)


class TestBuildPowerLawProblem:
    def test_power_law_values(self):
        problem = build_power_law_problem(3, 2.0, 1.0)
        npt.assert_allclose(problem.mu, [1.0, 0.25, 1.0 / 9.0], rtol=1e-15)
        npt.assert_allclose(problem.sigma_sv ** 2, problem.mu, rtol=1e-15)

    def test_single_mode(self):
        problem = build_power_law_problem(1, 2.0, 1.0)
        npt.assert_allclose(problem.mu, [1.0])

    def test_rejects_flat_decay(self):
        with pytest.raises(ParameterError):
            build_power_law_problem(2, 1.0, 1.0)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ParameterError):
            build_power_law_problem(0, 2.0, 1.0)
        with pytest.raises(ParameterError):
            build_power_law_problem(2, 2.0, -1.0)
        with pytest.raises(ParameterError):
            build_power_law_problem(2, 0.5, 1.0)

    def test_decay_certificate_two_sided(self):
        problem = build_power_law_problem(200, 2.5, 3.0)
        j = np.arange(1, 201, dtype=float)
        envelope = 3.0 / j ** 2.5
        assert np.all(problem.mu <= envelope * (1 + 1e-12))
        assert np.all(problem.mu >= envelope * (1 - 1e-12))

    def test_kernel_bound_constant(self):
        problem = build_power_law_problem(50, 2.0, 1.0)
        assert problem.kernel_bound_sq == pytest.approx(
            2.0 * np.sum(problem.mu), rel=1e-15)

    def test_immutable(self):
        problem = build_power_law_problem(4, 2.0, 1.0)
        with pytest.raises(ValueError):
            problem.mu[0] = 7.0

    def test_direct_construction_validates_monotonicity(self):
        with pytest.raises(ParameterError):
            SpectralProblem(mu=np.array([0.25, 1.0]), decay_b=2.0, decay_d=1.0)


class TestMakeSourceSolution:
    def test_half_smoothness_by_hand(self):
        # mu^0.5 * w with mu = (1, 1/4), w = (1, 1): (1, 0.5), radius sqrt(2)
        problem = build_power_law_problem(2, 2.0, 1.0)
        truth = make_source_solution(problem, 0.5, [1.0, 1.0])
        npt.assert_allclose(truth.coeffs, [1.0, 0.5], rtol=1e-15)
        assert truth.source_radius == pytest.approx(math.sqrt(2.0), rel=1e-15)

    def test_zero_source(self):
        problem = build_power_law_problem(5, 2.0, 1.0)
        truth = make_source_solution(problem, 1.0, np.zeros(5))
        npt.assert_array_equal(truth.coeffs, np.zeros(5))
        assert truth.source_radius == 0.0

    def test_unit_eigenvalue_passthrough(self):
        problem = build_power_law_problem(1, 2.0, 1.0)
        truth = make_source_solution(problem, 1.0, [2.0])
        npt.assert_allclose(truth.coeffs, [2.0])
        assert truth.source_radius == 2.0

    def test_length_mismatch(self):
        problem = build_power_law_problem(3, 2.0, 1.0)
        with pytest.raises(ShapeError):
            make_source_solution(problem, 1.0, [1.0, 2.0])


class TestForwardData:
    def test_componentwise_product(self):
        # sigma = (1, 0.5): (1, 0.5) maps to (1, 0.25)
        problem = build_power_law_problem(2, 2.0, 1.0)
        y = forward_data(problem, [1.0, 0.5])
        npt.assert_allclose(y.coeffs, [1.0, 0.25], rtol=1e-15)
        assert y.kind == "clean" and y.delta == 0.0

    def test_zero(self):
        problem = build_power_law_problem(3, 2.0, 1.0)
        npt.assert_array_equal(forward_data(problem, np.zeros(3)).coeffs,
                               np.zeros(3))

    def test_unit_singular_value(self):
        problem = build_power_law_problem(1, 2.0, 1.0)
        npt.assert_allclose(forward_data(problem, [3.0]).coeffs, [3.0])

    def test_shape_error(self):
        problem = build_power_law_problem(3, 2.0, 1.0)
        with pytest.raises(ShapeError):
            forward_data(problem, [1.0])

    def test_linearity(self):
        problem = build_power_law_problem(40, 2.0, 1.0)
        rng = np.random.default_rng(7)
        f, g = rng.standard_normal(40), rng.standard_normal(40)
        lhs = forward_data(problem, 2.5 * f + g).coeffs
        rhs = (2.5 * forward_data(problem, f).coeffs
               + forward_data(problem, g).coeffs)
        npt.assert_allclose(lhs, rhs, rtol=1e-14)


class TestEvalFunction:
    def test_two_mode_value(self):
        # u_1(1/4) = sqrt(2) sin(pi/4) = 1, u_2(1/4) = sqrt(2) sin(pi/2)
        problem = build_power_law_problem(2, 2.0, 1.0)
        value = eval_function(problem, [1.0, 0.25], "output", 0.25)
        assert value == pytest.approx(1.0 + 0.25 * math.sqrt(2.0), rel=1e-12)

    def test_zero_coefficients(self):
        problem = build_power_law_problem(2, 2.0, 1.0)
        assert eval_function(problem, [0.0, 0.0], "input", 0.7) == 0.0

    def test_vanishes_at_origin(self):
        problem = build_power_law_problem(1, 2.0, 1.0)
        assert eval_function(problem, [1.0], "input", 0.0) == 0.0

    def test_domain_error(self):
        problem = build_power_law_problem(1, 2.0, 1.0)
        with pytest.raises(DomainError):
            eval_function(problem, [1.0], "input", 1.5)

    def test_unknown_space(self):
        problem = build_power_law_problem(1, 2.0, 1.0)
        with pytest.raises(ParameterError):
            eval_function(problem, [1.0], "nowhere", 0.5)

    def test_parseval_on_fine_grid(self):
        # midpoint quadrature of (sum c_j u_j)^2 reproduces sum c_j^2
        problem = build_power_law_problem(40, 2.0, 1.0)
        rng = np.random.default_rng(11)
        coeffs = rng.standard_normal(40)
        grid = (np.arange(10_000) + 0.5) / 10_000
        values = basis_matrix(problem, grid) @ coeffs
        quad = float(np.mean(values ** 2))
        exact = float(np.sum(coeffs ** 2))
        assert abs(quad - exact) / exact < 1e-3


class TestDescriptors:
    def test_round_trip_explicit(self):
        descriptor = {"J": 4, "b": 2.0, "d": 1.5, "r": 1.0,
                      "w_spec": [1.0, -0.5, 0.25, 0.1], "seed": 3}
        problem, truth = problem_from_descriptor(descriptor)
        back = problem_to_descriptor(problem, truth, seed=3)
        problem2, truth2 = problem_from_descriptor(back)
        npt.assert_allclose(problem2.mu, problem.mu, rtol=1e-15)
        npt.assert_allclose(truth2.coeffs, truth.coeffs, rtol=1e-15)
        json.dumps(back)  # descriptor must be a JSON document

    def test_ones_and_unit_random(self):
        npt.assert_array_equal(resolve_w_spec("ones", 3), np.ones(3))
        w = resolve_w_spec("unit-random", 64, seed=5)
        assert np.linalg.norm(w) == pytest.approx(1.0, rel=1e-12)
        npt.assert_array_equal(w, resolve_w_spec("unit-random", 64, seed=5))
        assert not np.array_equal(w, resolve_w_spec("unit-random", 64, seed=6))

    def test_missing_key(self):
        with pytest.raises(ParameterError):
            problem_from_descriptor({"J": 3, "b": 2.0})

    def test_data_function_validation(self):
        with pytest.raises(ParameterError):
            DataFunction(coeffs=np.ones(2), kind="noisy")
        with pytest.raises(ParameterError):
            DataFunction(coeffs=np.ones(2), kind="perturbed", delta=-0.1)
