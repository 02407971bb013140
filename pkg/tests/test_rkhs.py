"""Kernel evaluation, Gram matrices, the range norm and the pullback."""

import csv
import math

import numpy as np
import numpy.testing as npt
import pytest

from rkhs_invlab import (DomainError, ShapeError, SpectralProblem,
                         build_power_law_problem, correspondence_pullback,
                         forward_data, gram_matrix, gram_to_csv, kernel_eval,
                         rkhs_norm)


@pytest.fixture
def two_mode():
    return build_power_law_problem(2, 2.0, 1.0)


class TestKernelEval:
    def test_center_value(self, two_mode):
        # u_1(0.5) = sqrt(2), u_2(0.5) = 0: K = 1*2 + 0.25*0
        assert kernel_eval(two_mode, 0.5, 0.5) == pytest.approx(2.0, rel=1e-14)

    def test_vanishes_at_boundary(self, two_mode):
        assert kernel_eval(two_mode, 0.0, 0.37) == pytest.approx(0.0, abs=1e-15)

    def test_cross_value(self, two_mode):
        # 1*u1(.25)u1(.75) + 0.25*u2(.25)u2(.75) = 1 + 0.25*sqrt2*(-sqrt2)
        assert kernel_eval(two_mode, 0.25, 0.75) == pytest.approx(0.5, rel=1e-12)

    def test_domain_error(self, two_mode):
        with pytest.raises(DomainError):
            kernel_eval(two_mode, -0.1, 0.5)


class TestGramMatrix:
    def test_two_point_matrix(self, two_mode):
        gram = gram_matrix(two_mode, [0.25, 0.75])
        npt.assert_allclose(gram.entries, [[1.5, 0.5], [0.5, 1.5]], atol=1e-12)

    def test_single_boundary_point(self, two_mode):
        gram = gram_matrix(two_mode, [0.0])
        npt.assert_allclose(gram.entries, [[0.0]], atol=1e-15)

    def test_repeated_point_rank_one(self):
        problem = build_power_law_problem(1, 2.0, 1.0)
        gram = gram_matrix(problem, [0.5, 0.5])
        npt.assert_allclose(gram.entries, [[2.0, 2.0], [2.0, 2.0]], rtol=1e-12)
        eigs = np.linalg.eigvalsh(gram.entries)
        assert eigs[0] >= -1e-10 * eigs[-1]

    def test_empty_point_set(self, two_mode):
        with pytest.raises(ShapeError):
            gram_matrix(two_mode, [])

    def test_random_sets_positive_semidefinite(self):
        problem = build_power_law_problem(40, 2.0, 1.0)
        rng = np.random.default_rng(13)
        for _ in range(50):
            n = int(rng.integers(1, 21))
            gram = gram_matrix(problem, rng.random(n))
            eigs = np.linalg.eigvalsh(gram.entries)
            assert eigs[0] >= -1e-10 * max(eigs[-1], 0.0)
            npt.assert_allclose(gram.entries, gram.entries.T, atol=1e-14)

    def test_csv_round_trip(self, two_mode, tmp_path):
        gram = gram_matrix(two_mode, [0.25, 0.75])
        path = tmp_path / "gram.csv"
        gram_to_csv(gram, path)
        with open(path) as handle:
            rows = list(csv.reader(handle))
        npt.assert_allclose([float(v) for v in rows[0]], gram.points)
        parsed = np.array([[float(v) for v in row] for row in rows[1:]])
        npt.assert_allclose(parsed, gram.entries, rtol=1e-15)


class TestRangeNorm:
    def test_two_mode_norm(self, two_mode):
        # 1/1 + 0.25/0.25 = 2
        assert rkhs_norm(two_mode, [1.0, 0.5]) == pytest.approx(
            math.sqrt(2.0), rel=1e-14)

    def test_zero(self, two_mode):
        assert rkhs_norm(two_mode, [0.0, 0.0]) == 0.0

    def test_eigenvalue_four(self):
        problem = SpectralProblem(mu=np.array([4.0]), decay_b=2.0, decay_d=4.0)
        assert rkhs_norm(problem, [2.0]) == pytest.approx(1.0, rel=1e-15)

    def test_partial_isometry(self):
        # forward then range norm reproduces the parameter-space norm
        problem = build_power_law_problem(80, 2.0, 1.0)
        rng = np.random.default_rng(17)
        for _ in range(100):
            f = rng.standard_normal(80)
            g = forward_data(problem, f)
            norm_f = float(np.linalg.norm(f))
            assert abs(rkhs_norm(problem, g.coeffs) - norm_f) <= 1e-10 * norm_f


class TestPullback:
    def test_componentwise_division(self, two_mode):
        npt.assert_allclose(correspondence_pullback(two_mode, [1.0, 0.25]),
                            [1.0, 0.5], rtol=1e-15)

    def test_zero(self, two_mode):
        npt.assert_array_equal(correspondence_pullback(two_mode, [0.0, 0.0]),
                               [0.0, 0.0])

    def test_identity_when_sigma_is_one(self):
        problem = build_power_law_problem(1, 2.0, 1.0)
        npt.assert_allclose(correspondence_pullback(problem, [7.0]), [7.0])

    def test_round_trip(self):
        problem = build_power_law_problem(60, 2.0, 1.0)
        rng = np.random.default_rng(19)
        g = rng.standard_normal(60)
        back = forward_data(problem, correspondence_pullback(problem, g)).coeffs
        npt.assert_allclose(back, g, rtol=1e-12, atol=1e-14)


class TestReproducingStructure:
    def test_evaluation_equals_kernel_pairing(self):
        # g(x) = sum g_j u_j(x) agrees with the weighted pairing
        # sum g_j (mu_j u_j(x)) / mu_j computed through the kernel section
        from rkhs_invlab import eval_function
        problem = build_power_law_problem(50, 2.0, 1.0)
        rng = np.random.default_rng(23)
        from rkhs_invlab import basis_matrix
        for _ in range(25):
            g = rng.standard_normal(50)
            x = float(rng.random())
            direct = eval_function(problem, g, "output", x)
            u = basis_matrix(problem, x)[0]
            series = float(np.sum(g * u))
            pairing = float(np.sum(g * (problem.mu * u) / problem.mu))
            scale = max(1.0, abs(direct))
            assert abs(direct - series) <= 1e-10 * scale
            assert abs(direct - pairing) <= 1e-10 * scale

    def test_unitary_quotient_leaves_kernel_invariant(self):
        # sign flips composed with a coordinate permutation act unitarily on
        # feature coordinates and must not change kernel values
        problem = build_power_law_problem(30, 2.0, 1.0)
        from rkhs_invlab import basis_matrix
        rng = np.random.default_rng(29)
        for _ in range(10):
            x, x2 = rng.random(2)
            phi = problem.sigma_sv * basis_matrix(problem, float(x))[0]
            phi2 = problem.sigma_sv * basis_matrix(problem, float(x2))[0]
            perm = rng.permutation(30)
            signs = np.where(rng.random(30) < 0.5, -1.0, 1.0)
            rotated = float(np.sum((signs * phi[perm]) * (signs * phi2[perm])))
            direct = kernel_eval(problem, float(x), float(x2))
            assert rotated == pytest.approx(direct, abs=1e-12)
