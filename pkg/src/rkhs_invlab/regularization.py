"""Spectral filters and the four regularized solution objects.

A filter family s_lambda defines the regularized reconstruction in four
guises, all computed here:

  continuous     f_lam   : coeffs_j = s(mu_j) sigma_j y_j        (full data)
  noisy-delta    f_lam_d : same formula applied to perturbed data
  paper-n        fhat    : s applied to B, data replaced by the empirical
                           moment (1/n) sum_i Y_i phi_{X_i}
  learn-n        fhat_l  : s applied to the empirical operator; for the
                           Tikhonov filter this is the n-by-n kernel system
                           (K + lambda n I) beta = y, in general it uses the
                           eigendecomposition of K/n and the identity that
                           moves s across the sampling operator.

Filter families implemented: Tikhonov s(t) = 1/(t + lambda) with
qualification 1; spectral cutoff s(t) = 1/t for t >= lambda (qualification
unbounded, tabulated to 8); Landweber with m iterations, lambda = 1/m,
s(t) = sum_{k<m} (1-t)^k, valid on spectra bounded by 1.

The generic penalized empirical risk solver works on the coefficient
expansion g = sum_i beta_i K_{x_i} and minimizes

    (1/n) sum_i V(Y_i, (K beta)_i) + lambda * ||g||_K^2,

with a Barzilai-Borwein first-order descent under a nonmonotone Armijo
line search.  For the square loss it must and does reproduce the closed
form (K + lambda n I)^{-1} y.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import (ConvergenceError, DomainError, ModelError,
                     NumericalError, ParameterError, ShapeError)
from .rkhs import gram_matrix
from .spectral_model import basis_matrix

_QUALIFICATION_CAP = 8.0


def _half_grid(q):
    steps = int(round(2 * q))
    return [k / 2.0 for k in range(steps + 1)]


@dataclass(frozen=True)
class FilterSpec:
    """A spectral filter s_lambda with its certified constants.

    ``bound_d`` dominates t*s(t), ``bound_e`` dominates lambda*s(t), and
    ``c_nu[nu]`` dominates t^nu (1 - t s(t)) / lambda^nu for each Hoelder
    exponent nu up to the qualification ``q``.
    """

    kind: str
    lam: float
    q: float
    bound_d: float = 1.0
    bound_e: float = 1.0
    c_nu: dict = field(default_factory=dict)
    m: int | None = None

    def __post_init__(self):
        if self.kind not in ("tikhonov", "cutoff", "landweber"):
            raise ParameterError(f"unknown filter kind: {self.kind!r}")
        if self.lam <= 0.0:
            raise ParameterError("lambda must be positive")

    @staticmethod
    def tikhonov(lam):
        """s(t) = 1/(t + lambda); D = E = 1, q = 1, C_0 = C_1 = 1."""
        return FilterSpec(kind="tikhonov", lam=float(lam), q=1.0,
                          c_nu={0.0: 1.0, 0.5: 0.5, 1.0: 1.0})

    @staticmethod
    def cutoff(lam):
        """s(t) = 1/t on t >= lambda, else 0; every C_nu = 1 (q capped at 8)."""
        return FilterSpec(kind="cutoff", lam=float(lam), q=_QUALIFICATION_CAP,
                          c_nu={nu: 1.0 for nu in _half_grid(_QUALIFICATION_CAP)})

    @staticmethod
    def landweber(m):
        """m-step Landweber, lambda = 1/m; C_nu = (nu/e)^nu (q capped at 8).

        Valid only on spectra contained in (0, 1].
        """
        if m < 1:
            raise ParameterError("landweber needs at least one iteration")
        c_nu = {nu: (nu / math.e) ** nu for nu in _half_grid(_QUALIFICATION_CAP)}
        c_nu[0.0] = 1.0
        return FilterSpec(kind="landweber", lam=1.0 / int(m),
                          q=_QUALIFICATION_CAP, c_nu=c_nu, m=int(m))

    def value(self, t):
        """s_lambda(t) for t > 0 (scalar or array)."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr <= 0.0):
            raise DomainError("filter argument t must be positive")
        if self.kind == "landweber" and np.any(t_arr > 1.0 + 1e-12):
            raise ModelError("landweber requires a spectrum bounded by 1; "
                             "rescale the problem so mu_1 <= 1")
        out = self._evaluate(t_arr)
        return float(out) if np.isscalar(t) or np.ndim(t) == 0 else out

    def _evaluate(self, t):
        if self.kind == "tikhonov":
            return 1.0 / (t + self.lam)
        if self.kind == "cutoff":
            return np.where(t >= self.lam, 1.0 / np.where(t > 0, t, 1.0), 0.0)
        # Landweber geometric sum (1 - (1-t)^m)/t, stable via expm1/log1p;
        # the t -> 0 limit is m, at t = 1 the value is 1.
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, float(self.m))
        pos = t > 0
        with np.errstate(divide="ignore"):
            out[pos] = -np.expm1(self.m * np.log1p(-np.minimum(t[pos], 1.0))) / t[pos]
        return out

    def at_eigenvalues(self, eigs):
        """Filter applied to empirical eigenvalues; clips roundoff negatives.

        Uses the analytic limits at t = 0 (Tikhonov 1/lambda, cutoff 0,
        Landweber m), needed when s acts on rank-deficient matrices.
        """
        eigs = np.clip(np.asarray(eigs, dtype=float), 0.0, None)
        if self.kind == "landweber" and np.any(eigs > 1.0 + 1e-12):
            raise ModelError("landweber requires an empirical spectrum "
                             "bounded by 1; rescale the problem")
        return self._evaluate(eigs)

    def on_spectrum(self, problem):
        """s_lambda(mu_j) over the problem spectrum, validating the model."""
        if self.kind == "landweber" and problem.mu[0] > 1.0 + 1e-12:
            raise ModelError("landweber requires mu_1 <= 1; rescale the "
                             "problem (see rescale_for_landweber)")
        return self._evaluate(problem.mu)


def filter_value(filt, t):
    """s_lambda(t) for t in the positive spectrum range."""
    return filt.value(t)


def rescale_for_landweber(problem):
    """Return (problem with mu_1 = 1, scale) so Landweber applies.

    The eigenvalues are divided by mu_1; ``scale`` records the divisor.
    """
    from .spectral_model import SpectralProblem
    scale = float(problem.mu[0])
    if scale <= 1.0:
        return problem, 1.0
    rescaled = SpectralProblem(mu=problem.mu / scale,
                               decay_b=problem.decay_b,
                               decay_d=problem.decay_d / scale)
    return rescaled, scale


def certify_filter(kind, problem, n_lambda=50, n_t=10_000):
    """Numerically verify the three filter bounds on a log t-grid.

    Sweeps ``n_lambda`` filters across [mu_J, mu_1] (iteration counts for
    Landweber) and returns the worst signed margins; nonnegative margins
    mean the declared constants hold.
    """
    t = np.exp(np.linspace(np.log(problem.mu[-1]), np.log(problem.mu[0]), n_t))
    if kind == "landweber":
        ms = np.unique(np.geomspace(1, 10_000, n_lambda).astype(int))
        filters = [FilterSpec.landweber(int(m)) for m in ms]
    else:
        lams = np.exp(np.linspace(np.log(problem.mu[-1]),
                                  np.log(problem.mu[0]), n_lambda))
        maker = FilterSpec.tikhonov if kind == "tikhonov" else FilterSpec.cutoff
        filters = [maker(l) for l in lams]
    margin_d = margin_e = margin_q = np.inf
    for filt in filters:
        s = filt.value(t)
        margin_d = min(margin_d, filt.bound_d - np.max(np.abs(t * s)))
        margin_e = min(margin_e, filt.bound_e - np.max(np.abs(filt.lam * s)))
        residual = np.abs(1.0 - t * s)
        for nu, c in filt.c_nu.items():
            lhs = np.max(t ** nu * residual)
            margin_q = min(margin_q, c * filt.lam ** nu - lhs)
    return {"D": float(margin_d), "E": float(margin_e),
            "qualification": float(margin_q)}


@dataclass(frozen=True)
class Estimate:
    """A reconstruction in parameter-space coordinates with its provenance."""

    coeffs: np.ndarray
    provenance: str
    lam: float
    n: int | None = None
    delta: float | None = None

    def __post_init__(self):
        allowed = ("continuous", "noisy-delta", "paper-n", "learn-n",
                   "kernel-tikhonov", "erm")
        if self.provenance not in allowed:
            raise ParameterError(f"unknown provenance: {self.provenance!r}")
        arr = np.asarray(self.coeffs, dtype=float).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    def to_dict(self):
        return {"provenance": self.provenance, "lambda": self.lam,
                "n_or_delta": self.n if self.n is not None else self.delta,
                "coeffs": [float(c) for c in self.coeffs]}


@dataclass(frozen=True)
class LossSpec:
    """Pointwise loss V(y, w), nonnegative with V(y, y) = 0.

    square: (w - y)^2, strictly convex.
    absolute: |w - y|, convex; the solver differentiates its pseudo-Huber
        smoothing with parameter ``smooth``.
    gaussian-nll: (w - y)^2 / (2 scale^2), the shifted Gaussian negative
        log-likelihood with known scale, strictly convex.
    ``lipschitz`` records the constant used in continuity arguments (exact
    for the absolute loss, data-range dependent otherwise).
    """

    kind: str
    lipschitz: float | None = None
    scale: float = 1.0
    smooth: float = 1e-6

    def __post_init__(self):
        if self.kind not in ("square", "absolute", "gaussian-nll"):
            raise ParameterError(f"unknown loss kind: {self.kind!r}")
        if self.scale <= 0.0 or self.smooth <= 0.0:
            raise ParameterError("scale and smooth must be positive")
        if self.lipschitz is None and self.kind == "absolute":
            object.__setattr__(self, "lipschitz", 1.0)

    def value(self, y, w):
        res = np.asarray(w, dtype=float) - np.asarray(y, dtype=float)
        if self.kind == "square":
            return res ** 2
        if self.kind == "absolute":
            return np.abs(res)
        return res ** 2 / (2.0 * self.scale ** 2)

    def smoothed_value(self, y, w):
        if self.kind != "absolute":
            return self.value(y, w)
        res = np.asarray(w, dtype=float) - np.asarray(y, dtype=float)
        return np.sqrt(res ** 2 + self.smooth ** 2) - self.smooth

    def derivative(self, y, w):
        """d/dw of the (smoothed) loss."""
        res = np.asarray(w, dtype=float) - np.asarray(y, dtype=float)
        if self.kind == "square":
            return 2.0 * res
        if self.kind == "absolute":
            return res / np.sqrt(res ** 2 + self.smooth ** 2)
        return res / self.scale ** 2

    def curvature_bound(self):
        if self.kind == "square":
            return 2.0
        if self.kind == "absolute":
            return 1.0 / self.smooth
        return 1.0 / self.scale ** 2


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty psi(||g||): continuous, convex, strictly increasing on [0, inf)."""

    psi: str = "square"

    def __post_init__(self):
        if self.psi != "square":
            raise ParameterError("only the square penalty psi(t) = t^2 is "
                                 "implemented")

    def value(self, t):
        return np.asarray(t, dtype=float) ** 2


class KernelSolution(NamedTuple):
    beta: np.ndarray
    g_coeffs: np.ndarray


class ErmSolution(NamedTuple):
    beta: np.ndarray
    g_coeffs: np.ndarray
    diagnostics: dict


def solve_continuous(problem, filt, y):
    """f = s(B) A* y in coordinates: coeffs_j = s(mu_j) sigma_j y_j."""
    if y.coeffs.size != problem.size:
        raise ShapeError("data length does not match the problem")
    s = filt.on_spectrum(problem)
    coeffs = s * problem.sigma_sv * y.coeffs
    if y.kind == "clean":
        return Estimate(coeffs=coeffs, provenance="continuous", lam=filt.lam)
    return Estimate(coeffs=coeffs, provenance="noisy-delta", lam=filt.lam,
                    delta=y.delta)


def estimator_paper(problem, filt, samples):
    """s(B) applied to the empirical moment (1/n) sum_i Y_i phi_{X_i}.

    coeffs_j = s(mu_j) sigma_j (1/n) sum_i Y_i u_j(X_i).
    """
    u = basis_matrix(problem, samples.design)
    moment = u.T @ samples.outputs / samples.size
    s = filt.on_spectrum(problem)
    return Estimate(coeffs=s * problem.sigma_sv * moment,
                    provenance="paper-n", lam=filt.lam, n=samples.size)


def estimator_learn(problem, filt, samples):
    """Classical kernel estimator s(A_x* A_x) A_x* y.

    Tikhonov reduces to the n-by-n system (K + lambda n I) beta = y; other
    filters act through the eigendecomposition of K/n, moving s across the
    sampling operator onto its finite-rank Gram side.
    """
    n = samples.size
    u = basis_matrix(problem, samples.design)
    kernel = (u * problem.mu) @ u.T
    kernel = 0.5 * (kernel + kernel.T)
    if filt.kind == "tikhonov":
        try:
            beta = np.linalg.solve(kernel + filt.lam * n * np.eye(n),
                                   samples.outputs)
        except np.linalg.LinAlgError as exc:  # pragma: no cover
            raise NumericalError(f"kernel system is singular: {exc}") from exc
    else:
        eigs, vecs = np.linalg.eigh(kernel / n)
        s_eigs = filt.at_eigenvalues(eigs)
        beta = vecs @ (s_eigs * (vecs.T @ samples.outputs)) / n
    coeffs = problem.sigma_sv * (u.T @ beta)
    return Estimate(coeffs=coeffs, provenance="learn-n", lam=filt.lam, n=n)


def kernel_tikhonov(problem, samples, lam):
    """Solve (K + lambda n I) beta = y; return beta and g = sum beta_i K_{x_i}.

    The range element g comes back in output-basis coordinates
    g_j = mu_j sum_i beta_i u_j(x_i); pulling g back to parameter space
    reproduces the Tikhonov ``estimator_learn`` solution.
    """
    if lam <= 0.0:
        raise ParameterError("lambda must be positive")
    n = samples.size
    gram = gram_matrix(problem, samples.design)
    try:
        beta = np.linalg.solve(gram.entries + lam * n * np.eye(n),
                               samples.outputs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalError(f"kernel system is singular: {exc}") from exc
    u = basis_matrix(problem, samples.design)
    g_coeffs = problem.mu * (u.T @ beta)
    return KernelSolution(beta=beta, g_coeffs=g_coeffs)


def erm_representer_solve(problem, samples, loss, penalty, lam,
                          tol=1e-10, max_iter=100_000):
    """Minimize the penalized empirical risk over span{K_{x_i}}.

    Works on beta with g = sum_i beta_i K_{x_i}, fitted values K beta and
    squared norm beta' K beta.  First-order descent: Barzilai-Borwein steps
    guarded by a nonmonotone Armijo backtracking line search, started at
    beta = 0.  Terminates when the gradient norm falls below ``tol``;
    otherwise raises a diagnostic error carrying the iteration trace.

    With lambda = 0 and a singular Gram matrix the iterates stay in the
    range of K, so the returned beta realizes the minimum-norm minimizer
    over the span.
    """
    if lam < 0.0:
        raise ParameterError("lambda must be nonnegative")
    if penalty.psi != "square":
        raise ParameterError("solver requires the square penalty")
    n = samples.size
    kernel = gram_matrix(problem, samples.design).entries
    y = samples.outputs

    def objective(beta, fitted):
        data_term = float(np.mean(loss.smoothed_value(y, fitted)))
        return data_term + lam * float(beta @ (kernel @ beta))

    def gradient(beta, fitted):
        rho = loss.derivative(y, fitted) / n + 2.0 * lam * beta
        return kernel @ rho

    kernel_norm = float(np.linalg.norm(kernel, 2))
    lipschitz = kernel_norm * (loss.curvature_bound() * kernel_norm / n
                               + 2.0 * lam) + 1e-300
    beta = np.zeros(n)
    fitted = kernel @ beta
    f_val = objective(beta, fitted)
    grad = gradient(beta, fitted)
    history = [f_val]
    trace = []
    step = 1.0 / lipschitz
    prev_beta = prev_grad = None
    measure = float(np.linalg.norm(grad))
    iteration = 0
    for iteration in range(max_iter):
        if iteration % 50 == 0:
            trace.append((iteration, f_val, measure))
        if measure <= tol:
            diagnostics = {"iterations": iteration, "measure": measure,
                           "objective": f_val, "converged": True}
            g_coeffs = problem.mu * (basis_matrix(problem, samples.design).T
                                     @ beta)
            return ErmSolution(beta=beta, g_coeffs=g_coeffs,
                               diagnostics=diagnostics)
        if prev_beta is not None:
            diff_b = beta - prev_beta
            diff_g = grad - prev_grad
            denom = float(diff_b @ diff_g)
            step = float(diff_b @ diff_b) / denom if denom > 0 else 1.0 / lipschitz
        reference = max(history[-10:])
        t = step
        accepted = False
        for _ in range(60):
            candidate = beta - t * grad
            cand_fitted = kernel @ candidate
            cand_val = objective(candidate, cand_fitted)
            if cand_val <= reference - 1e-4 * t * measure ** 2:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break  # objective at its floating-point floor
        prev_beta, prev_grad = beta, grad
        beta, fitted, f_val = candidate, cand_fitted, cand_val
        history.append(f_val)
        grad = gradient(beta, fitted)
        measure = float(np.linalg.norm(grad))
    trace.append((iteration, f_val, measure))
    if measure <= tol:
        g_coeffs = problem.mu * (basis_matrix(problem, samples.design).T @ beta)
        return ErmSolution(beta=beta, g_coeffs=g_coeffs,
                           diagnostics={"iterations": iteration,
                                        "measure": measure,
                                        "objective": f_val, "converged": True})
    raise ConvergenceError(
        f"descent stopped at gradient norm {measure:.3e} > tol {tol:.1e}",
        trace)
