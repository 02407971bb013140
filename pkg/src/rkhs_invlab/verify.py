"""Built-in property suite behind the ``verify`` CLI subcommand.

Each check exercises one documented invariant of the library at a desk
scale small enough that the whole suite runs in well under a minute.
Checks are deterministic given the seed; each returns its name, a pass
flag and a one-line numeric detail.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import streams
from .rates import (RateLink, delta_of, epsilon_lambda, fit_rate, hs_norm,
                    loss_factor_tau, n_of)
from .regularization import (FilterSpec, certify_filter, estimator_learn,
                             estimator_paper, kernel_tikhonov,
                             solve_continuous)
from .rkhs import gram_matrix, kernel_eval, rkhs_norm
from .sampling import (NoiseModel, PerturbationSpec, perturb_data,
                       sample_design, sample_outputs)
from .spectral_model import (DataFunction, basis_matrix,
                             build_power_law_problem, eval_function,
                             forward_data, make_source_solution)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _result(name, passed, detail):
    return CheckResult(name=name, passed=bool(passed), detail=detail)


def _house_problem(size=100, b=2.0, d=1.0, r=1.0):
    problem = build_power_law_problem(size, b, d)
    j = np.arange(1, size + 1, dtype=float)
    truth = make_source_solution(problem, r, j ** -1.0)
    return problem, truth


def check_parseval(seed):
    problem = build_power_law_problem(40, 2.0, 1.0)
    rng = streams.generator(seed, streams.GENERIC_STREAM, 1)
    coeffs = rng.standard_normal(40)
    grid = (np.arange(10_000) + 0.5) / 10_000
    values = basis_matrix(problem, grid) @ coeffs
    quad = float(np.mean(values ** 2))
    exact = float(np.sum(coeffs ** 2))
    rel = abs(quad - exact) / exact
    return _result("parseval-quadrature", rel < 1e-3, f"rel={rel:.2e}")


def check_decay_bounds(seed):
    problem = build_power_law_problem(200, 2.5, 3.0)
    j = np.arange(1, 201, dtype=float)
    upper = np.all(problem.mu <= 3.0 / j ** 2.5 * (1 + 1e-12))
    lower = np.all(problem.mu >= 3.0 / j ** 2.5 * (1 - 1e-12))
    return _result("power-law-decay-bounds", upper and lower,
                   "two-sided d/j^b envelope")


def check_forward_linearity(seed):
    problem = build_power_law_problem(60, 2.0, 1.0)
    rng = streams.generator(seed, streams.GENERIC_STREAM, 2)
    f, g = rng.standard_normal(60), rng.standard_normal(60)
    alpha = 1.3721
    lhs = forward_data(problem, alpha * f + g).coeffs
    rhs = alpha * forward_data(problem, f).coeffs + forward_data(problem, g).coeffs
    rel = float(np.max(np.abs(lhs - rhs)) / max(np.max(np.abs(rhs)), 1e-300))
    return _result("forward-linearity", rel <= 1e-14, f"rel={rel:.2e}")


def check_partial_isometry(seed):
    problem = build_power_law_problem(80, 2.0, 1.0)
    rng = streams.generator(seed, streams.GENERIC_STREAM, 3)
    worst = 0.0
    for _ in range(100):
        f = rng.standard_normal(80)
        norm_f = float(np.linalg.norm(f))
        worst = max(worst, abs(rkhs_norm(problem, forward_data(problem, f).coeffs)
                               - norm_f) / norm_f)
    return _result("range-norm-isometry", worst <= 1e-10, f"max rel={worst:.2e}")


def check_reproducing_property(seed):
    problem = build_power_law_problem(50, 2.0, 1.0)
    rng = streams.generator(seed, streams.GENERIC_STREAM, 4)
    worst = 0.0
    for _ in range(25):
        g = rng.standard_normal(50)
        x = float(rng.random())
        direct = eval_function(problem, g, "output", x)
        u = basis_matrix(problem, x)[0]
        series = float(np.sum(g * u))
        pairing = float(np.sum(g * (problem.mu * u) / problem.mu))
        scale = max(1.0, abs(direct))
        worst = max(worst, abs(direct - series) / scale,
                    abs(direct - pairing) / scale)
    return _result("reproducing-property", worst <= 1e-10, f"max={worst:.2e}")


def check_gram_psd(seed):
    problem = build_power_law_problem(40, 2.0, 1.0)
    rng = streams.generator(seed, streams.GENERIC_STREAM, 5)
    worst = np.inf
    for _ in range(50):
        n = int(rng.integers(1, 21))
        gram = gram_matrix(problem, rng.random(n))
        eigs = np.linalg.eigvalsh(gram.entries)
        worst = min(worst, eigs[0] + 1e-10 * max(eigs[-1], 0.0))
    return _result("gram-positive-semidefinite", worst >= 0.0,
                   f"worst margin={worst:.2e}")


def check_unitary_invariance(seed):
    problem = build_power_law_problem(30, 2.0, 1.0)
    rng = streams.generator(seed, streams.GENERIC_STREAM, 6)
    x, x2 = float(rng.random()), float(rng.random())
    u = basis_matrix(problem, x)[0]
    u2 = basis_matrix(problem, x2)[0]
    phi = problem.sigma_sv * u
    phi2 = problem.sigma_sv * u2
    perm = rng.permutation(30)
    signs = np.where(rng.random(30) < 0.5, -1.0, 1.0)
    rotated = float(np.sum((signs * phi[perm]) * (signs * phi2[perm])))
    direct = kernel_eval(problem, x, x2)
    gap = abs(rotated - direct) / max(1.0, abs(direct))
    return _result("feature-map-unitary-quotient", gap <= 1e-12,
                   f"gap={gap:.2e}")


def check_perturbation_norms(seed):
    problem, truth = _house_problem(60)
    y = forward_data(problem, truth.coeffs)
    filt = FilterSpec.tikhonov(0.05)
    worst = 0.0
    for spec in (PerturbationSpec(delta=0.37, mode="random-unit"),
                 PerturbationSpec(delta=0.37, mode="fixed-mode", index=3),
                 PerturbationSpec(delta=0.37, mode="filter-adversarial",
                                  filter=filt)):
        y_delta = perturb_data(problem, y, spec, seed)
        worst = max(worst, abs(float(np.linalg.norm(y_delta.coeffs - y.coeffs))
                               - 0.37))
    return _result("perturbation-norm-exact", worst <= 1e-14,
                   f"max dev={worst:.2e}")


def check_reproducibility(seed):
    problem, truth = _house_problem(40)
    noise = NoiseModel(kind="gaussian", sigma=0.3)
    design = sample_design("iid-uniform", 64, seed, index=7)
    first = sample_outputs(problem, truth, design, noise, seed, "iid-uniform",
                           index=7)
    second = sample_outputs(problem, truth, design, noise, seed, "iid-uniform",
                            index=7)
    same = (np.array_equal(first.design, second.design)
            and np.array_equal(first.outputs, second.outputs))
    return _result("seeded-streams-bit-identical", same, "bit-identical")


def check_riemann_slope(seed):
    problem = build_power_law_problem(512, 2.0, 1.0)
    j = np.arange(1, 513, dtype=float)
    y = DataFunction(coeffs=j ** -1.4)
    exact = float(np.sum(y.coeffs ** 2))
    points = []
    for n in (4, 8, 16, 32):
        grid = sample_design("grid", n)
        emp = float(np.mean(eval_function(problem, y.coeffs, "output", grid) ** 2))
        points.append((n, abs(emp - exact)))
    slope = fit_rate(points).slope
    return _result("grid-riemann-order", -2.6 <= slope <= -1.6,
                   f"slope={slope:.3f}")


def check_filter_certificates(seed):
    problem = build_power_law_problem(100, 2.0, 1.0)
    worst = np.inf
    for kind in ("tikhonov", "cutoff", "landweber"):
        margins = certify_filter(kind, problem, n_lambda=20, n_t=2000)
        worst = min(worst, min(margins.values()))
    return _result("filter-certificates", worst >= -1e-12,
                   f"worst margin={worst:.2e}")


def check_methods_equivalence(seed):
    rng = streams.generator(seed, streams.GENERIC_STREAM, 8)
    worst = 0.0
    for _ in range(5):
        size = int(rng.integers(10, 51))
        problem = build_power_law_problem(size, float(rng.uniform(1.5, 3.0)),
                                          float(rng.uniform(0.5, 2.0)))
        truth = make_source_solution(problem, 1.0, rng.standard_normal(size))
        n = int(rng.integers(5, 31))
        design = sample_design("iid-uniform", n, seed, index=int(rng.integers(1 << 20)))
        samples = sample_outputs(problem, truth, design, NoiseModel(), seed,
                                 "iid-uniform")
        lam = float(rng.uniform(0.05, 0.5))
        learn = estimator_learn(problem, FilterSpec.tikhonov(lam), samples)
        kernel_side = kernel_tikhonov(problem, samples, lam)
        push = forward_data(problem, learn.coeffs).coeffs
        worst = max(worst, float(np.linalg.norm(push - kernel_side.g_coeffs))
                    / float(np.linalg.norm(kernel_side.g_coeffs)))
        worst = max(worst, abs(rkhs_norm(problem, kernel_side.g_coeffs)
                               - float(np.linalg.norm(learn.coeffs)))
                    / float(np.linalg.norm(learn.coeffs)))
    return _result("kernel-vs-parameter-tikhonov", worst <= 1e-10,
                   f"max rel={worst:.2e}")


def check_representer_limit(seed):
    problem = build_power_law_problem(60, 1.5, 1.0)
    j = np.arange(1, 61, dtype=float)
    truth = make_source_solution(problem, 1.0, j ** -1.0)
    rng = streams.generator(seed, streams.GENERIC_STREAM, 9)
    n = 12
    design = np.clip((np.arange(1, n + 1) - 0.5) / n
                     + rng.uniform(-0.2, 0.2, n) / n, 0.0, 1.0)
    samples = sample_outputs(problem, truth, design, NoiseModel(), seed,
                             "iid-uniform")
    gram = gram_matrix(problem, design)
    scale = float(np.trace(gram.entries)) / n
    betas = [kernel_tikhonov(problem, samples, lam).beta
             for lam in (1e-2 * scale, 1e-4 * scale, 1e-6 * scale,
                         1e-8 * scale)]
    gaps = [float(np.linalg.norm(b2 - b1))
            for b1, b2 in zip(betas, betas[1:])]
    cauchy = all(g2 <= g1 for g1, g2 in zip(gaps, gaps[1:]))
    interp = kernel_tikhonov(problem, samples, 1e-10 * scale)
    residual = float(np.max(np.abs(samples.outputs
                                   - gram.entries @ interp.beta)))
    return _result("representer-small-lambda-limit",
                   cauchy and residual <= 1e-6,
                   f"cauchy gaps={['%.1e' % g for g in gaps]}, "
                   f"sup residual={residual:.2e}")


def check_rate_identities(seed):
    rng = streams.generator(seed, streams.GENERIC_STREAM, 10)
    ns = np.arange(1, 10_001)
    worst_conj = 0.0
    worst_inv = 0.0
    for _ in range(50):
        link = RateLink(sigma=float(rng.uniform(0.05, 2.0)),
                        epsilon=float(rng.uniform(0.0, 2.0)),
                        lam=1.0)
        v = link.sigma ** 2 / ns
        delta = v / (np.sqrt(v + link.epsilon ** 2) + link.epsilon)
        conj = np.sqrt(v + link.epsilon ** 2) - link.epsilon
        worst_conj = max(worst_conj, float(np.max(np.abs(delta - conj)
                                                  / np.maximum(1.0, v))))
        back = link.sigma ** 2 / (delta ** 2 + 2 * delta * link.epsilon)
        worst_inv = max(worst_inv, float(np.max(np.abs(back - ns) / ns)))
    single = delta_of(100, RateLink(sigma=0.5, epsilon=0.25, lam=0.1))
    n_back, _ = n_of(single, RateLink(sigma=0.5, epsilon=0.25, lam=0.1))
    ok = worst_conj <= 1e-12 and worst_inv <= 1e-9 and abs(n_back - 100) <= 1e-7
    return _result("sample-noise-bridge-identities", ok,
                   f"conj={worst_conj:.1e}, inverse={worst_inv:.1e}")


def check_loss_factors(seed):
    taus = [(r, b, loss_factor_tau(r, b, "general"),
             loss_factor_tau(r, b, "tikhonov"))
            for r in (0.5, 1.0, 2.0) for b in (1.5, 2.0, 4.0)]
    bounded = all(1.0 < tg < 2.0 and 1.0 < tt < 3.0 for _, _, tg, tt in taus)
    asymptote = abs(loss_factor_tau(1.0, 1e3, "general") - 1.0) <= 1e-3
    return _result("loss-factor-bounds", bounded and asymptote,
                   "tau in (1,2) / (1,3), b->inf asymptote")


def check_epsilon_report(seed):
    problem, truth = _house_problem(100)
    lams = np.exp(np.linspace(math.log(10 * problem.mu[-1]),
                              math.log(problem.mu[0]), 25))
    eps = [epsilon_lambda(problem, FilterSpec.tikhonov(l), truth)
           for l in lams]
    gamma_hat = fit_rate(list(zip(lams, eps))).slope
    nominal = truth.r + 0.5
    return _result("epsilon-lambda-scaling", 1.3 <= gamma_hat <= 2.1,
                   f"gamma_hat={gamma_hat:.3f} vs nominal {nominal:.2f}")


def check_mini_monte_carlo(seed):
    problem, truth = _house_problem(50)
    filt = FilterSpec.tikhonov(0.05)
    sigma, n, reps = 0.1, 100, 400
    noise = NoiseModel(kind="gaussian", sigma=sigma)
    design = sample_design("grid", n)
    rows = []
    for rep in range(reps):
        samples = sample_outputs(problem, truth, design, noise, seed,
                                 "grid", index=rep)
        rows.append(estimator_paper(problem, filt, samples).coeffs)
    rows = np.array(rows)
    err2 = np.sum((rows - truth.coeffs) ** 2, axis=1)
    f_lam = solve_continuous(problem, filt, forward_data(problem, truth.coeffs))
    bias2 = float(np.sum((f_lam.coeffs - truth.coeffs) ** 2))
    lower = sigma ** 2 / n * hs_norm(problem, filt) ** 2 + bias2
    se = float(err2.std(ddof=1) / math.sqrt(reps))
    ok = float(err2.mean()) >= lower - 3 * se
    return _result("monte-carlo-risk-lower-bound", ok,
                   f"mean={err2.mean():.4e} lower={lower:.4e} se={se:.1e}")


ALL_CHECKS = (
    check_parseval,
    check_decay_bounds,
    check_forward_linearity,
    check_partial_isometry,
    check_reproducing_property,
    check_gram_psd,
    check_unitary_invariance,
    check_perturbation_norms,
    check_reproducibility,
    check_riemann_slope,
    check_filter_certificates,
    check_methods_equivalence,
    check_representer_limit,
    check_rate_identities,
    check_loss_factors,
    check_epsilon_report,
    check_mini_monte_carlo,
)


def run_all(seed=20260809):
    """Run every invariant check; returns the list of results."""
    return [check(seed) for check in ALL_CHECKS]
