"""Rate calculus: operator norms, the n <-> delta bridge, and slope fits.

In the diagonal model the reconstruction operator L = s(B) A* has singular
values s(mu_j) sigma_j, so

    ||L||_HS  = sqrt(sum_j s(mu_j)^2 mu_j),
    ||L||_op  = max_j s(mu_j) sigma_j.

The bridge between a sample count n and a noise level delta at fixed
filter parameter lambda is

    Delta(n) = (sigma^2/n) / (sqrt(sigma^2/n + eps^2) + eps)
             = sqrt(sigma^2/n + eps^2) - eps,
    N(delta) = sigma^2 / (delta^2 + 2 delta eps),

with eps = ||f_lam - f_true|| / ||L||_HS; the two maps are exact inverses.

Rate conversion between squared-error exponents:

  upper bounds, n -> delta (error O(n^-alpha), lambda_n ~ n^-p,
  eps ~ lambda^gamma):
      p*gamma >= 1/2 : exponent 2*alpha,        lambda_delta ~ delta^(2p)
      p*gamma <  1/2 : exponent alpha/(1-p*gamma),
                       lambda_delta ~ delta^(p/(1-p*gamma))

  lower bounds, delta -> n (error Omega(delta^alpha), lambda ~ delta^pstar):
      pstar*gamma >= 1 : exponent alpha/2,      lambda_n ~ n^(-pstar/2)
      pstar*gamma <  1 : exponent alpha/(1+pstar*gamma),
                         lambda_n ~ n^(-pstar/(1+pstar*gamma))

The loss factor tau = (2r+1+1/b)/(2r+1) (Tikhonov variant: 2/b in place of
1/b) measures how much slower the sample-count-optimal rate is than the
noise-level-optimal one under the same source smoothness.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, ModelError, ParameterError, ShapeError
from .regularization import solve_continuous
from .spectral_model import forward_data


def hs_norm(problem, filt):
    """Hilbert-Schmidt norm of the reconstruction operator."""
    s = filt.on_spectrum(problem)
    return float(np.sqrt(np.sum(s ** 2 * problem.mu)))


def operator_norm(problem, filt):
    """Spectral norm max_j s(mu_j) sigma_j of the reconstruction operator."""
    s = filt.on_spectrum(problem)
    return float(np.max(s * problem.sigma_sv))


def epsilon_lambda(problem, filt, f_true):
    """Reconstruction bias over HS norm: ||f_lam - f_true|| / ||L||_HS."""
    hs = hs_norm(problem, filt)
    if hs == 0.0:
        raise ModelError("filter annihilates the whole spectrum; the "
                         "bias-to-HS ratio is undefined")
    f_lam = solve_continuous(problem, filt, forward_data(problem, f_true.coeffs))
    bias = float(np.linalg.norm(f_lam.coeffs - f_true.coeffs))
    return bias / hs


@dataclass(frozen=True)
class RateLink:
    """Ties a noise std sigma and a bias ratio eps to a filter parameter."""

    sigma: float
    epsilon: float
    lam: float

    def __post_init__(self):
        if self.sigma <= 0.0:
            raise ParameterError("sigma must be positive")
        if self.epsilon < 0.0:
            raise ParameterError("epsilon must be nonnegative")
        if self.lam <= 0.0:
            raise ParameterError("lambda must be positive")

    @staticmethod
    def from_problem(problem, filt, f_true, sigma):
        return RateLink(sigma=float(sigma),
                        epsilon=epsilon_lambda(problem, filt, f_true),
                        lam=filt.lam)


def delta_of(n, link):
    """Largest noise level whose error is dominated by the n-sample risk.

    Delta(n) = (sigma^2/n) / (sqrt(sigma^2/n + eps^2) + eps); equals
    sqrt(sigma^2/n + eps^2) - eps by conjugate rationalization.
    """
    if n < 1:
        raise DomainError("n must be a positive integer")
    v = link.sigma ** 2 / float(n)
    return v / (math.sqrt(v + link.epsilon ** 2) + link.epsilon)


def n_of(delta, link):
    """Largest sample count dominated by noise level delta; also its floor.

    N(delta) = sigma^2 / (delta^2 + 2 delta eps); exact inverse of
    :func:`delta_of`.
    """
    if delta <= 0.0:
        raise DomainError("delta must be positive")
    value = link.sigma ** 2 / (delta ** 2 + 2.0 * delta * link.epsilon)
    return value, int(math.floor(value))


@dataclass(frozen=True)
class RateExponents:
    """Exponent bundle for the conversion theorems.

    ``alpha`` is the squared-error rate exponent, ``p`` the sample-count
    schedule exponent (lambda_n ~ n^-p), ``p_star`` the noise-level
    schedule exponent (lambda_delta ~ delta^p_star), ``gamma`` the bias
    ratio exponent (eps ~ lambda^gamma).  ``r`` and ``b`` record the source
    parameters when known.
    """

    alpha: float
    gamma: float
    p: float | None = None
    p_star: float | None = None
    r: float | None = None
    b: float | None = None

    def __post_init__(self):
        for name in ("alpha", "gamma", "p", "p_star"):
            value = getattr(self, name)
            if value is not None and value <= 0.0:
                raise ParameterError(f"{name} must be positive")


class ConvertedRate(NamedTuple):
    exponent: float
    lambda_exponent: float
    case: str


def convert_upper(exponents):
    """Squared-error upper rate in delta from one in n.

    Boundary p*gamma = 1/2 belongs to the fast branch.
    """
    if exponents.p is None:
        raise ParameterError("convert_upper requires the schedule exponent p")
    p, gamma, alpha = exponents.p, exponents.gamma, exponents.alpha
    if p * gamma >= 0.5:
        return ConvertedRate(2.0 * alpha, 2.0 * p, "fast")
    return ConvertedRate(alpha / (1.0 - p * gamma),
                         p / (1.0 - p * gamma), "slow")


def convert_lower(exponents):
    """Squared-error lower rate in n from one in delta.

    Boundary p_star*gamma = 1 belongs to the fast branch.
    """
    if exponents.p_star is None:
        raise ParameterError("convert_lower requires the schedule exponent "
                             "p_star")
    p_star, gamma, alpha = exponents.p_star, exponents.gamma, exponents.alpha
    if p_star * gamma >= 1.0:
        return ConvertedRate(alpha / 2.0, p_star / 2.0, "fast")
    return ConvertedRate(alpha / (1.0 + p_star * gamma),
                         p_star / (1.0 + p_star * gamma), "slow")


def loss_factor_tau(r, b, variant="general"):
    """Exponent ratio between noise-level-optimal and converted rates.

    general:  (2r + 1 + 1/b) / (2r + 1), always in (1, 2);
    tikhonov: (2r + 1 + 2/b) / (2r + 1), always in (1, 3).
    """
    if r <= 0.0:
        raise ParameterError("r must be positive")
    if b <= 1.0:
        raise ParameterError("b must exceed 1")
    if variant == "general":
        return (2.0 * r + 1.0 + 1.0 / b) / (2.0 * r + 1.0)
    if variant == "tikhonov":
        return (2.0 * r + 1.0 + 2.0 / b) / (2.0 * r + 1.0)
    raise ParameterError(f"unknown variant: {variant!r}")


def statistical_exponents(r, b, gamma=None):
    """Exponent bundle of the sample-count-optimal schedule.

    alpha = 2r/(2r+1+1/b) with lambda_n ~ n^(-1/(2r+1+1/b)); the
    noise-level-optimal schedule exponent p_star = 2/(2r+1) is attached for
    lower-rate conversion.  gamma defaults to the nominal Tikhonov value
    r + 1/2.
    """
    if r <= 0.0 or b <= 1.0:
        raise ParameterError("need r > 0 and b > 1")
    denom = 2.0 * r + 1.0 + 1.0 / b
    return RateExponents(alpha=2.0 * r / denom, p=1.0 / denom,
                         p_star=2.0 / (2.0 * r + 1.0),
                         gamma=(r + 0.5) if gamma is None else float(gamma),
                         r=float(r), b=float(b))


@dataclass(frozen=True)
class RateFit:
    """Ordinary least squares in log-log coordinates."""

    slope: float
    intercept: float
    stderr: float
    points: tuple


def fit_rate(points):
    """Fit log y = slope * log x + intercept; needs >= 2 distinct x > 0."""
    pts = [(float(x), float(y)) for x, y in points]
    if len({x for x, _ in pts}) < 2:
        raise ShapeError("rate fit needs at least two distinct x values")
    if any(x <= 0.0 or y <= 0.0 for x, y in pts):
        raise DomainError("rate fit needs strictly positive coordinates")
    lx = np.log([x for x, _ in pts])
    ly = np.log([y for _, y in pts])
    n = lx.size
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    slope = float(np.sum((lx - lx.mean()) * (ly - ly.mean())) / sxx)
    intercept = float(ly.mean() - slope * lx.mean())
    if n > 2:
        residuals = ly - (slope * lx + intercept)
        stderr = float(np.sqrt(np.sum(residuals ** 2) / (n - 2) / sxx))
    else:
        stderr = 0.0
    return RateFit(slope=slope, intercept=intercept, stderr=stderr,
                   points=tuple(pts))


def lambda_schedule(kind, c, exponent, value):
    """A-priori filter schedules: by-n gives c*n^-exponent, by-delta
    gives c*delta^exponent."""
    if c <= 0.0 or exponent <= 0.0:
        raise ParameterError("schedule constant and exponent must be positive")
    if value <= 0.0:
        raise ParameterError("schedule argument must be positive")
    if kind == "by-n":
        return c * float(value) ** (-exponent)
    if kind == "by-delta":
        return c * float(value) ** exponent
    raise ParameterError(f"unknown schedule kind: {kind!r}")
