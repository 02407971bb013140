"""Design schemes, noisy outputs, bounded perturbations, reproducibility."""

import csv
import math

import numpy as np
import numpy.testing as npt
import pytest

from rkhs_invlab import (DataFunction, FilterSpec, NoiseModel,
                         ParameterError, PerturbationSpec, SampleSet,
                         ShapeError, adversarial_mode,
                         build_power_law_problem, eval_function, fit_rate,
                         forward_data, make_source_solution, perturb_data,
                         sample_design, sample_outputs, samples_to_csv)


@pytest.fixture
def two_mode_truth():
    problem = build_power_law_problem(2, 2.0, 1.0)
    truth = make_source_solution(problem, 0.5, [1.0, 1.0])  # f = (1, 0.5)
    return problem, truth


class TestSampleDesign:
    def test_midpoint_grid(self):
        npt.assert_array_equal(sample_design("grid", 2), [0.25, 0.75])
        npt.assert_array_equal(sample_design("grid", 1), [0.5])

    def test_uniform_mean(self):
        design = sample_design("iid-uniform", 1000, seed=7)
        assert abs(design.mean() - 0.5) < 0.05
        assert np.all((design >= 0.0) & (design <= 1.0))

    def test_empty_and_unknown(self):
        with pytest.raises(ShapeError):
            sample_design("grid", 0)
        with pytest.raises(ParameterError):
            sample_design("sobol", 4)

    def test_replicate_streams_differ(self):
        a = sample_design("iid-uniform", 16, seed=1, index=0)
        b = sample_design("iid-uniform", 16, seed=1, index=1)
        assert not np.array_equal(a, b)


class TestSampleOutputs:
    def test_noiseless_grid_values(self, two_mode_truth):
        # y = (1, 0.25); y(0.25) = 1 + 0.25 sqrt(2), y(0.75) = 1 - 0.25 sqrt(2)
        problem, truth = two_mode_truth
        samples = sample_outputs(problem, truth, sample_design("grid", 2),
                                 NoiseModel(), seed=0, scheme="grid")
        expected = [1.0 + 0.25 * math.sqrt(2.0), 1.0 - 0.25 * math.sqrt(2.0)]
        npt.assert_allclose(samples.outputs, expected, rtol=1e-12)

    def test_noiseless_equals_evaluation(self, two_mode_truth):
        problem, truth = two_mode_truth
        design = sample_design("iid-uniform", 50, seed=3)
        samples = sample_outputs(problem, truth, design, NoiseModel(),
                                 seed=3, scheme="iid-uniform")
        y = forward_data(problem, truth.coeffs)
        exact = eval_function(problem, y.coeffs, "output", design)
        npt.assert_allclose(samples.outputs, exact, rtol=1e-14)

    def test_noise_mean_clt(self):
        # 1e4 replicates of a single noisy sample at x = 0.5; the sample
        # mean must sit within 3 sigma / sqrt(replicates) of y(0.5)
        problem = build_power_law_problem(1, 2.0, 1.0)
        truth = make_source_solution(problem, 1.0, [1.0])
        noise = NoiseModel(kind="gaussian", sigma=0.1)
        design = np.array([0.5])
        replicates = 10_000
        total = 0.0
        for rep in range(replicates):
            samples = sample_outputs(problem, truth, design, noise, seed=21,
                                     scheme="iid-uniform", index=rep)
            total += samples.outputs[0]
        target = math.sqrt(2.0)  # y(0.5) = sigma_1 f_1 u_1(0.5)
        assert abs(total / replicates - target) <= 3.0 * 0.1 / 100.0

    def test_grid_tag_validated(self, two_mode_truth):
        problem, truth = two_mode_truth
        with pytest.raises(ShapeError):
            sample_outputs(problem, truth, np.array([0.1, 0.9]), NoiseModel(),
                           scheme="grid")

    def test_reproducible_bit_identical(self, two_mode_truth):
        problem, truth = two_mode_truth
        noise = NoiseModel(kind="gaussian", sigma=0.5)
        design = sample_design("iid-uniform", 32, seed=9, index=4)
        first = sample_outputs(problem, truth, design, noise, seed=9,
                               scheme="iid-uniform", index=4)
        second = sample_outputs(problem, truth, design, noise, seed=9,
                                scheme="iid-uniform", index=4)
        assert np.array_equal(first.outputs, second.outputs)
        assert np.array_equal(first.design, second.design)


class TestPerturbData:
    def test_zero_delta_unchanged(self, two_mode_truth):
        problem, truth = two_mode_truth
        y = forward_data(problem, truth.coeffs)
        y_delta = perturb_data(problem, y,
                               PerturbationSpec(delta=0.0, mode="random-unit"))
        npt.assert_array_equal(y_delta.coeffs, y.coeffs)
        assert y_delta.kind == "perturbed"

    def test_adversarial_mode_selection(self, two_mode_truth):
        # Tikhonov lambda = 1: responses s(mu) sigma = (0.5, 0.4), argmax 1
        problem, _ = two_mode_truth
        assert adversarial_mode(problem, FilterSpec.tikhonov(1.0)) == 1

    def test_fixed_mode_addition(self, two_mode_truth):
        problem, truth = two_mode_truth
        y = forward_data(problem, truth.coeffs)  # (1, 0.25)
        spec = PerturbationSpec(delta=0.3, mode="fixed-mode", index=2)
        y_delta = perturb_data(problem, y, spec)
        npt.assert_allclose(y_delta.coeffs, [1.0, 0.55], rtol=1e-14)

    def test_norm_exact_all_modes(self):
        problem = build_power_law_problem(60, 2.0, 1.0)
        truth = make_source_solution(problem, 1.0,
                                     np.arange(1, 61, dtype=float) ** -1.0)
        y = forward_data(problem, truth.coeffs)
        delta = 0.37
        for spec in (PerturbationSpec(delta=delta, mode="random-unit"),
                     PerturbationSpec(delta=delta, mode="fixed-mode", index=5),
                     PerturbationSpec(delta=delta, mode="filter-adversarial",
                                      filter=FilterSpec.tikhonov(0.05))):
            y_delta = perturb_data(problem, y, spec, seed=31)
            norm = float(np.linalg.norm(y_delta.coeffs - y.coeffs))
            assert abs(norm - delta) <= 1e-14
            assert y_delta.delta == delta

    def test_parameter_errors(self, two_mode_truth):
        problem, truth = two_mode_truth
        y = forward_data(problem, truth.coeffs)
        with pytest.raises(ParameterError):
            PerturbationSpec(delta=-0.1, mode="random-unit")
        with pytest.raises(ShapeError):
            perturb_data(problem, y,
                         PerturbationSpec(delta=0.1, mode="fixed-mode",
                                          index=3))


class TestGridRiemannProperty:
    def test_empirical_square_risk_second_order(self):
        # data coefficients decay like j^-1.4; the midpoint empirical risk
        # approaches the exact squared-distance integral at order ~ n^-2
        problem = build_power_law_problem(512, 2.0, 1.0)
        j = np.arange(1, 513, dtype=float)
        y = DataFunction(coeffs=j ** -1.4)
        exact = float(np.sum(y.coeffs ** 2))
        points = []
        for n in (4, 8, 16, 32):
            grid = sample_design("grid", n)
            values = eval_function(problem, y.coeffs, "output", grid)
            emp = float(np.mean(values ** 2))  # square loss against g = 0
            points.append((n, abs(emp - exact)))
        slope = fit_rate(points).slope
        assert -2.6 <= slope <= -1.6


class TestSampleSetValidation:
    def test_grid_midpoints_enforced(self):
        with pytest.raises(ShapeError):
            SampleSet(design=np.array([0.1, 0.9]), outputs=np.zeros(2),
                      scheme="grid", noise=NoiseModel(), seed=0)

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            SampleSet(design=np.array([0.5]), outputs=np.zeros(2),
                      scheme="iid-uniform", noise=NoiseModel(), seed=0)

    def test_noise_model_validation(self):
        with pytest.raises(ParameterError):
            NoiseModel(kind="none", sigma=0.2)
        with pytest.raises(ParameterError):
            NoiseModel(kind="gaussian", sigma=-0.2)

    def test_csv_export(self, tmp_path):
        problem = build_power_law_problem(2, 2.0, 1.0)
        truth = make_source_solution(problem, 0.5, [1.0, 1.0])
        samples = sample_outputs(problem, truth, sample_design("grid", 3),
                                 NoiseModel(), scheme="grid")
        path = tmp_path / "samples.csv"
        samples_to_csv(samples, path)
        with open(path) as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["i", "x", "y"]
        assert len(rows) == 4
        npt.assert_allclose([float(r[1]) for r in rows[1:]], samples.design)
