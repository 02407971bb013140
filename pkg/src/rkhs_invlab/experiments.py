"""Verification studies: reproducible desk-scale rate and identity checks.

Five study kinds are implemented.

stat-rate          Monte-Carlo squared reconstruction error of the sampled
                   estimator along a lambda schedule in n, slope-fitted
                   against 1/n and compared to 2r/(2r+1+1/b).
det-rate           Squared error of the perturbed-data reconstruction along
                   a lambda schedule in delta, slope-fitted against delta.
lemma-check        At fixed (n, lambda): Monte-Carlo verification of the
                   variance-plus-bias lower bound, the matching of the mean
                   estimate with the continuous reconstruction, the exact
                   sample bias-variance decomposition, and the dominance of
                   the bounded-perturbation error by the sampled risk at
                   noise level Delta(n, lambda).
gamma-study        Noiseless midpoint grids with fixed lambda: kernel-side
                   distance between the empirical and continuous penalized
                   fits, recorded both in the kernel norm and pulled back
                   to parameter space (the two must agree), and required to
                   decrease with n.
equivalence-check  Maximal deviations of the isometry, the pullback
                   round-trip, the kernel-vs-parameter Tikhonov solves and
                   the descent-solver-vs-closed-form oracle.

Every study prints one machine-readable line "STUDY <kind> <pass|fail>".
Replicates use counter-based substreams keyed by their index, so reports
are identical no matter how many worker threads run them
(RKHS_INVLAB_THREADS caps the pool size).
"""

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import streams
from .errors import ValidationError
from .rates import (RateFit, RateLink, convert_upper, delta_of, fit_rate,
                    lambda_schedule, statistical_exponents, hs_norm)
from .regularization import (FilterSpec, LossSpec, PenaltySpec,
                             erm_representer_solve, estimator_learn,
                             estimator_paper, kernel_tikhonov,
                             solve_continuous)
from .rkhs import correspondence_pullback, rkhs_norm
from .sampling import (NoiseModel, PerturbationSpec, SampleSet, perturb_data,
                       sample_design, sample_outputs)
from .spectral_model import (basis_matrix, forward_data,
                             problem_from_descriptor)

_KINDS = ("stat-rate", "det-rate", "lemma-check", "gamma-study",
          "equivalence-check")


def worker_cap():
    """Thread-pool size, capped by the RKHS_INVLAB_THREADS variable."""
    raw = os.environ.get("RKHS_INVLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_indexed(fn, count):
    """Apply fn to 0..count-1, possibly threaded; order of results is fixed."""
    workers = min(worker_cap(), count)
    if workers <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def spearman(xs, ys):
    """Rank correlation of two equally long sequences."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    rx = np.argsort(np.argsort(xs)).astype(float)
    ry = np.argsort(np.argsort(ys)).astype(float)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = math.sqrt(float(rx @ rx) * float(ry @ ry))
    return float(rx @ ry) / denom if denom > 0 else 0.0


@dataclass(frozen=True)
class StudyConfig:
    """Declarative description of one study run."""

    kind: str
    problem: dict
    filter_kind: str = "tikhonov"
    design: str = "grid"
    sigma: float = 0.0
    n_grid: tuple = ()
    delta_grid: tuple = ()
    schedule_c: float | None = None
    schedule_exponent: float | None = None
    lam: float | None = None
    n: int | None = None
    perturbation: str = "filter-adversarial"
    perturbation_index: int | None = None
    theory: str = "classical"
    gamma: float | None = None
    replicates: int = 1
    seed: int = 0
    tolerances: dict = field(default_factory=dict)

    @staticmethod
    def from_dict(raw):
        known = {
            "kind", "problem", "filter", "design", "sigma", "n_grid",
            "delta_grid", "schedule", "lambda", "n", "perturbation",
            "perturbation_index", "theory", "gamma", "replicates", "seed",
            "tolerances",
        }
        bad = sorted(set(raw) - known)
        if bad:
            raise ValidationError(f"unknown config keys: {bad}", bad)
        schedule = raw.get("schedule") or {}
        config = StudyConfig(
            kind=raw.get("kind", ""),
            problem=dict(raw.get("problem") or {}),
            filter_kind=raw.get("filter", "tikhonov"),
            design=raw.get("design", "grid"),
            sigma=float(raw.get("sigma", 0.0)),
            n_grid=tuple(raw.get("n_grid") or ()),
            delta_grid=tuple(raw.get("delta_grid") or ()),
            schedule_c=schedule.get("c"),
            schedule_exponent=schedule.get("exponent"),
            lam=raw.get("lambda"),
            n=raw.get("n"),
            perturbation=raw.get("perturbation", "filter-adversarial"),
            perturbation_index=raw.get("perturbation_index"),
            theory=raw.get("theory", "classical"),
            gamma=raw.get("gamma"),
            replicates=int(raw.get("replicates", 1)),
            seed=int(raw.get("seed", 0)),
            tolerances=dict(raw.get("tolerances") or {}),
        )
        config.validate()
        return config

    def to_dict(self):
        out = {"kind": self.kind, "problem": dict(self.problem),
               "filter": self.filter_kind, "design": self.design,
               "sigma": self.sigma, "replicates": self.replicates,
               "seed": self.seed, "tolerances": dict(self.tolerances)}
        if self.n_grid:
            out["n_grid"] = list(self.n_grid)
        if self.delta_grid:
            out["delta_grid"] = list(self.delta_grid)
        if self.schedule_c is not None:
            out["schedule"] = {"c": self.schedule_c,
                               "exponent": self.schedule_exponent}
        for key, value in (("lambda", self.lam), ("n", self.n),
                           ("gamma", self.gamma),
                           ("perturbation_index", self.perturbation_index)):
            if value is not None:
                out[key] = value
        if self.kind == "det-rate":
            out["perturbation"] = self.perturbation
            out["theory"] = self.theory
        return out

    def validate(self):
        bad = []
        if self.kind not in _KINDS:
            bad.append("kind")
        for key in ("J", "b", "d", "r", "w_spec"):
            if key not in self.problem:
                bad.append(f"problem.{key}")
        if self.replicates < 1:
            bad.append("replicates")
        if any(v <= 0 for v in self.tolerances.values()):
            bad.append("tolerances")
        if self.design not in ("grid", "iid-uniform"):
            bad.append("design")
        needs_schedule = self.kind in ("stat-rate", "det-rate")
        if needs_schedule and (self.schedule_c is None
                               or self.schedule_exponent is None
                               or self.schedule_c <= 0
                               or self.schedule_exponent <= 0):
            bad.append("schedule")
        if self.kind == "stat-rate":
            if len(self.n_grid) < 2 or any(np.diff(self.n_grid) <= 0):
                bad.append("n_grid")
            if self.sigma <= 0:
                bad.append("sigma")
        elif self.kind == "det-rate":
            if len(self.delta_grid) < 2 or any(np.diff(self.delta_grid) <= 0):
                bad.append("delta_grid")
            if self.theory not in ("classical", "converted"):
                bad.append("theory")
            if self.perturbation not in ("random-unit", "fixed-mode",
                                         "filter-adversarial"):
                bad.append("perturbation")
            if self.perturbation == "fixed-mode" and not self.perturbation_index:
                bad.append("perturbation_index")
        elif self.kind == "lemma-check":
            if not self.n or self.n < 1:
                bad.append("n")
            if self.lam is None or self.lam <= 0:
                bad.append("lambda")
            if self.sigma <= 0:
                bad.append("sigma")
            if self.replicates < 2:
                bad.append("replicates")
        elif self.kind == "gamma-study":
            if len(self.n_grid) < 2 or any(np.diff(self.n_grid) <= 0):
                bad.append("n_grid")
            if self.lam is None or self.lam <= 0:
                bad.append("lambda")
        elif self.kind == "equivalence-check":
            if not self.n or self.n < 1:
                bad.append("n")
            if self.lam is None or self.lam <= 0:
                bad.append("lambda")
        if bad:
            raise ValidationError(
                f"invalid study config, offending fields: {sorted(set(bad))}",
                sorted(set(bad)))


@dataclass
class StudyReport:
    """Outcome of one study; verdicts derive only from recorded numbers."""

    kind: str
    points: list
    fit: RateFit | None
    theory: dict
    checks: list
    verdict: bool
    runtime_s: float
    config: dict

    def canonical_dict(self):
        """Report content without the runtime (determinism comparisons)."""
        out = {"kind": self.kind, "points": self.points,
               "theory": self.theory, "checks": self.checks,
               "verdict": self.verdict, "config": self.config}
        if self.fit is not None:
            out["fit"] = {"slope": self.fit.slope,
                          "intercept": self.fit.intercept,
                          "stderr": self.fit.stderr,
                          "points": [list(p) for p in self.fit.points]}
        else:
            out["fit"] = None
        return out

    def to_dict(self):
        out = self.canonical_dict()
        out["runtime_s"] = self.runtime_s
        return out

    @staticmethod
    def from_dict(raw):
        fit = None
        if raw.get("fit") is not None:
            fdata = raw["fit"]
            fit = RateFit(slope=fdata["slope"], intercept=fdata["intercept"],
                          stderr=fdata["stderr"],
                          points=tuple(tuple(p) for p in fdata["points"]))
        return StudyReport(kind=raw["kind"], points=list(raw["points"]),
                           fit=fit, theory=dict(raw["theory"]),
                           checks=list(raw["checks"]),
                           verdict=bool(raw["verdict"]),
                           runtime_s=float(raw.get("runtime_s", 0.0)),
                           config=dict(raw["config"]))

    def recompute_checks(self):
        """Re-derive pass flags from the stored numbers."""
        fresh = []
        for check in self.checks:
            passed = (check["value"] <= check["threshold"]
                      if check["op"] == "<=" else
                      check["value"] >= check["threshold"])
            fresh.append({**check, "passed": bool(passed)})
        return fresh


def _check(name, value, op, threshold):
    passed = value <= threshold if op == "<=" else value >= threshold
    return {"name": name, "value": float(value), "op": op,
            "threshold": float(threshold), "passed": bool(passed)}


def _filter_for(kind, lam):
    if kind == "tikhonov":
        return FilterSpec.tikhonov(lam)
    if kind == "cutoff":
        return FilterSpec.cutoff(lam)
    if kind == "landweber":
        return FilterSpec.landweber(max(1, round(1.0 / lam)))
    raise ValidationError(f"unknown filter kind: {kind!r}", ["filter"])


def _problem_of(config):
    descriptor = dict(config.problem)
    descriptor.setdefault("seed", config.seed)
    return problem_from_descriptor(descriptor)


def _finish(config, points, fit, theory, checks, started):
    verdict = all(c["passed"] for c in checks)
    report = StudyReport(kind=config.kind, points=points, fit=fit,
                         theory=theory, checks=checks, verdict=verdict,
                         runtime_s=time.perf_counter() - started,
                         config=config.to_dict())
    print(f"STUDY {config.kind} {'pass' if verdict else 'fail'}")
    return report


def _run_stat_rate(config, started):
    problem, truth = _problem_of(config)
    noise = NoiseModel(kind="gaussian", sigma=config.sigma)
    points = []
    replicates = config.replicates
    for point_idx, n in enumerate(config.n_grid):
        lam = lambda_schedule("by-n", config.schedule_c,
                              config.schedule_exponent, n)
        filt = _filter_for(config.filter_kind, lam)
        grid_design = (sample_design("grid", n)
                       if config.design == "grid" else None)

        def one(rep, n=n, lam=lam, filt=filt, point_idx=point_idx,
                grid_design=grid_design):
            index = point_idx * replicates + rep
            if grid_design is not None:
                design = grid_design
            else:
                design = sample_design("iid-uniform", n, config.seed,
                                       index=index)
            samples = sample_outputs(problem, truth, design, noise,
                                     config.seed, scheme=config.design,
                                     index=index)
            estimate = estimator_paper(problem, filt, samples)
            return float(np.sum((estimate.coeffs - truth.coeffs) ** 2))

        errors = np.array(_map_indexed(one, replicates))
        points.append({
            "x": int(n), "lambda": lam,
            "err_mean": float(errors.mean()),
            "err_se": float(errors.std(ddof=1) / math.sqrt(replicates))
            if replicates > 1 else 0.0,
            "err_median": float(np.median(errors)),
        })
    fit = fit_rate([(1.0 / p["x"], p["err_mean"]) for p in points])
    r, b = float(config.problem["r"]), float(config.problem["b"])
    alpha = statistical_exponents(r, b).alpha
    theory = {"alpha": alpha}
    tol = config.tolerances.get("slope", 0.12)
    checks = [_check("slope-matches-theory", abs(fit.slope - alpha), "<=", tol)]
    medians = [p["err_median"] for p in points]
    if len(medians) > 4:
        # consistency criterion: past the first two grid points the median
        # error must be decreasing in n
        corr = spearman(config.n_grid[2:], medians[2:])
        checks.append(_check("median-error-decreasing", corr, "<=", -0.9))
    return _finish(config, points, fit, theory, checks, started)


def _run_det_rate(config, started):
    problem, truth = _problem_of(config)
    y_clean = forward_data(problem, truth.coeffs)
    points = []
    for point_idx, delta in enumerate(config.delta_grid):
        lam = lambda_schedule("by-delta", config.schedule_c,
                              config.schedule_exponent, delta)
        filt = _filter_for(config.filter_kind, lam)
        spec = PerturbationSpec(delta=delta, mode=config.perturbation,
                                index=config.perturbation_index, filter=filt)
        y_delta = perturb_data(problem, y_clean, spec, config.seed,
                               index=point_idx)
        estimate = solve_continuous(problem, filt, y_delta)
        err2 = float(np.sum((estimate.coeffs - truth.coeffs) ** 2))
        points.append({"x": float(delta), "lambda": lam, "err_mean": err2,
                       "err_se": 0.0})
    fit = fit_rate([(p["x"], p["err_mean"]) for p in points])
    r, b = float(config.problem["r"]), float(config.problem["b"])
    if config.theory == "classical":
        exponent = 4.0 * r / (2.0 * r + 1.0)
    else:
        exponents = statistical_exponents(r, b, gamma=config.gamma)
        exponent = convert_upper(exponents).exponent
    theory = {"delta_exponent": exponent, "branch": config.theory}
    tol = config.tolerances.get("slope", 0.15)
    checks = [_check("slope-matches-theory", abs(fit.slope - exponent),
                     "<=", tol)]
    return _finish(config, points, fit, theory, checks, started)


def _run_lemma_check(config, started):
    problem, truth = _problem_of(config)
    n = int(config.n)
    filt = _filter_for(config.filter_kind, config.lam)
    noise = NoiseModel(kind="gaussian", sigma=config.sigma)
    replicates = config.replicates
    grid_design = sample_design("grid", n) if config.design == "grid" else None

    def one(rep):
        if grid_design is not None:
            design = grid_design
        else:
            design = sample_design("iid-uniform", n, config.seed, index=rep)
        samples = sample_outputs(problem, truth, design, noise, config.seed,
                                 scheme=config.design, index=rep)
        return estimator_paper(problem, filt, samples).coeffs

    coeff_rows = np.array(_map_indexed(one, replicates))
    err2 = np.sum((coeff_rows - truth.coeffs) ** 2, axis=1)
    mc_mean = float(err2.mean())
    mc_se = float(err2.std(ddof=1) / math.sqrt(replicates))
    mean_coeffs = coeff_rows.mean(axis=0)
    mc_bias2 = float(np.sum((mean_coeffs - truth.coeffs) ** 2))
    mc_var = float(np.mean(np.sum((coeff_rows - mean_coeffs) ** 2, axis=1)))

    f_lam = solve_continuous(problem, filt,
                             forward_data(problem, truth.coeffs))
    bias2 = float(np.sum((f_lam.coeffs - truth.coeffs) ** 2))
    hs = hs_norm(problem, filt)
    lower = config.sigma ** 2 / n * hs ** 2 + bias2

    comp_se = coeff_rows.std(axis=0, ddof=1) / math.sqrt(replicates)
    z = np.abs(mean_coeffs - f_lam.coeffs) / np.where(comp_se > 0, comp_se,
                                                      np.inf)
    identity_gap = abs(mc_mean - (mc_bias2 + mc_var)) / max(1.0, mc_mean)

    link = RateLink.from_problem(problem, filt, truth, config.sigma)
    dmax = delta_of(n, link)
    y_clean = forward_data(problem, truth.coeffs)
    det_worst = -np.inf
    for mode, idx in (("random-unit", None), ("fixed-mode", 1),
                      ("filter-adversarial", None)):
        spec = PerturbationSpec(delta=dmax, mode=mode, index=idx, filter=filt)
        y_delta = perturb_data(problem, y_clean, spec, config.seed)
        det_err2 = float(np.sum(
            (solve_continuous(problem, filt, y_delta).coeffs
             - truth.coeffs) ** 2))
        det_worst = max(det_worst, det_err2)

    points = [{"x": n, "lambda": filt.lam, "err_mean": mc_mean,
               "err_se": mc_se, "mc_bias2": mc_bias2, "mc_var": mc_var,
               "theory_bias2": bias2, "hs_norm": hs, "delta_n": dmax,
               "det_err2_worst": det_worst}]
    theory = {"lower_bound": lower, "bias2": bias2, "hs_norm": hs}
    checks = [
        _check("risk-above-lower-bound", mc_mean - (lower - 3.0 * mc_se),
               ">=", 0.0),
        _check("mean-matches-continuous", float(np.max(z)), "<=",
               config.tolerances.get("z_max", 3.0)),
        _check("bias-variance-identity", identity_gap, "<=",
               config.tolerances.get("identity", 1e-10)),
        _check("perturbed-error-below-risk",
               det_worst - (mc_mean + 3.0 * mc_se), "<=", 0.0),
    ]
    return _finish(config, points, fit=None, theory=theory, checks=checks,
                   started=started)


def _run_gamma_study(config, started):
    problem, truth = _problem_of(config)
    lam = float(config.lam)
    y = forward_data(problem, truth.coeffs)
    g_cont = problem.mu * y.coeffs / (problem.mu + lam)
    points = []
    for n in config.n_grid:
        design = sample_design("grid", int(n))
        samples = sample_outputs(problem, truth, design, NoiseModel(),
                                 config.seed, scheme="grid")
        solution = kernel_tikhonov(problem, samples, lam)
        diff = solution.g_coeffs - g_cont
        hk = rkhs_norm(problem, diff)
        h1 = float(np.linalg.norm(correspondence_pullback(problem, diff)))
        points.append({"x": int(n), "lambda": lam, "err_mean": hk,
                       "err_se": 0.0, "h1_dist": h1})
    hk_values = [p["err_mean"] for p in points]
    agreement = max(abs(p["err_mean"] - p["h1_dist"]) for p in points)
    corr = spearman([p["x"] for p in points], hk_values)
    checks = [
        _check("error-decreasing", corr, "<=", -0.9),
        _check("final-error-below-tenth", hk_values[-1],
               "<=", hk_values[0] / 10.0),
        _check("kernel-vs-parameter-norm", agreement, "<=",
               config.tolerances.get("norm_equality", 1e-10)),
    ]
    theory = {"lambda": lam, "continuous_norm": rkhs_norm(problem, g_cont)}
    return _finish(config, points, fit=None, theory=theory, checks=checks,
                   started=started)


def equivalence_deviations(problem, truth, samples, lam, seed=0,
                           erm_tol=1e-12, draws=100):
    """Maximal relative deviations of the four equivalence properties.

    Depends only on the realized sample points and outputs, never on the
    scheme tag of ``samples``.
    """
    rng = streams.generator(seed, streams.GENERIC_STREAM)
    iso_dev = 0.0
    pullback_dev = 0.0
    for _ in range(draws):
        f = rng.standard_normal(problem.size)
        g = forward_data(problem, f)
        iso_dev = max(iso_dev,
                      abs(rkhs_norm(problem, g.coeffs)
                          - float(np.linalg.norm(f)))
                      / float(np.linalg.norm(f)))
        g2 = rng.standard_normal(problem.size)
        roundtrip = forward_data(
            problem, correspondence_pullback(problem, g2)).coeffs
        pullback_dev = max(pullback_dev,
                           float(np.linalg.norm(roundtrip - g2))
                           / float(np.linalg.norm(g2)))
    learn = estimator_learn(problem, FilterSpec.tikhonov(lam), samples)
    kernel_side = kernel_tikhonov(problem, samples, lam)
    g_norm = float(np.linalg.norm(kernel_side.g_coeffs))
    forward_learn = forward_data(problem, learn.coeffs).coeffs
    methods_dev = (float(np.linalg.norm(forward_learn - kernel_side.g_coeffs))
                   / max(g_norm, 1e-300))
    f_norm = float(np.linalg.norm(learn.coeffs))
    norm_dev = (abs(rkhs_norm(problem, kernel_side.g_coeffs) - f_norm)
                / max(f_norm, 1e-300))
    erm = erm_representer_solve(problem, samples, LossSpec(kind="square"),
                                PenaltySpec(), lam, tol=erm_tol)
    beta_norm = float(np.linalg.norm(kernel_side.beta))
    erm_dev = (float(np.linalg.norm(erm.beta - kernel_side.beta))
               / max(beta_norm, 1e-300))
    return {"isometry": iso_dev, "pullback_roundtrip": pullback_dev,
            "methods_equivalence": max(methods_dev, norm_dev),
            "representer_oracle": erm_dev}


def _run_equivalence_check(config, started):
    problem, truth = _problem_of(config)
    design = sample_design(config.design, int(config.n), config.seed)
    samples = sample_outputs(problem, truth, design, NoiseModel(),
                             config.seed, scheme=config.design)
    deviations = equivalence_deviations(problem, truth, samples,
                                        float(config.lam), seed=config.seed)
    tolerances = {"isometry": 1e-10, "pullback_roundtrip": 1e-12,
                  "methods_equivalence": 1e-10, "representer_oracle": 1e-6}
    tolerances.update(config.tolerances)
    checks = [_check(name, deviations[name], "<=", tolerances[name])
              for name in sorted(deviations)]
    points = [{"x": float(i), "lambda": float(config.lam),
               "err_mean": deviations[name], "err_se": 0.0, "property": name}
              for i, name in enumerate(sorted(deviations))]
    return _finish(config, points, fit=None,
                   theory={"tolerances": tolerances}, checks=checks,
                   started=started)


_RUNNERS = {
    "stat-rate": _run_stat_rate,
    "det-rate": _run_det_rate,
    "lemma-check": _run_lemma_check,
    "gamma-study": _run_gamma_study,
    "equivalence-check": _run_equivalence_check,
}


def run_study(config):
    """Execute a study and return its report."""
    config.validate()
    started = time.perf_counter()
    return _RUNNERS[config.kind](config, started)


def write_report(report, fmt, path):
    """Write a report as a JSON document or per-point CSV records.

    The JSON document round-trips through ``StudyReport.from_dict`` and the
    verdicts can be recomputed bit-for-bit from its numbers.  The CSV
    carries the columns kind, x, lambda, err_mean, err_se and then any
    study-specific extras in sorted order.  Nothing is written if the
    target cannot be opened.
    """
    if fmt == "json":
        payload = json.dumps(report.to_dict(), indent=2, sort_keys=True)
        with open(path, "w") as handle:
            handle.write(payload + "\n")
        return
    if fmt != "csv":
        raise ValidationError(f"unknown report format: {fmt!r}", ["format"])
    base_cols = ("x", "lambda", "err_mean", "err_se")
    extras = sorted({key for point in report.points for key in point
                     if key not in base_cols})
    rows = []
    for point in report.points:
        row = [report.kind] + [f"{point[c]:.17g}" for c in base_cols]
        row += [f"{point[c]:.17g}" if isinstance(point.get(c), float)
                else str(point.get(c, "")) for c in extras]
        rows.append(row)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["kind"] + list(base_cols) + extras)
        writer.writerows(rows)
