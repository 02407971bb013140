"""Fully computable diagonal test model for the equation y = Af.

The operator A acts between two copies of L2([0,1]) (Lebesgue probability
measure on both sides) and is diagonal in the sine basis

    u_j(x) = v_j(t) = sqrt(2) sin(j pi x),   j = 1..J,

with singular values sigma_j = sqrt(mu_j) where mu_j are the eigenvalues of
B = A*A.  Eigenvalues follow the power law mu_j = d j**(-b) with b > 1, so
every norm, bias and filter quantity has a closed form.  Solutions with a
prescribed smoothness are built through the source construction
f_j = mu_j**r w_j with a square-summable source element w.

All objects are immutable after construction and every operation is a pure
function, so values can be shared freely across threads.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError, ShapeError
from . import streams


def _frozen_array(values, dtype=float):
    arr = np.asarray(values, dtype=dtype).copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SpectralProblem:
    """Diagonal model: eigenvalues of B = A*A in the fixed sine basis.

    ``mu`` must be positive and nonincreasing, dominated by d j**(-b).
    ``kernel_bound_sq`` is the finite constant 2 sum(mu) that dominates
    K(x, x) uniformly in x (the squared evaluation-functional bound).
    """

    mu: np.ndarray
    decay_b: float
    decay_d: float
    basis: str = "sine"

    def __post_init__(self):
        mu = _frozen_array(self.mu)
        if mu.ndim != 1 or mu.size == 0:
            raise ShapeError("mu must be a nonempty 1-d sequence")
        if self.basis != "sine":
            raise ParameterError(f"unsupported basis tag: {self.basis!r}")
        if not np.all(mu > 0):
            raise ParameterError("all eigenvalues must be positive")
        if np.any(np.diff(mu) > 0):
            raise ParameterError("eigenvalues must be nonincreasing")
        j = np.arange(1, mu.size + 1, dtype=float)
        bound = self.decay_d * j ** (-self.decay_b)
        if self.decay_b <= 1.0:
            raise ParameterError("decay exponent b must exceed 1")
        if self.decay_d <= 0.0:
            raise ParameterError("decay constant d must be positive")
        if np.any(mu > bound * (1.0 + 1e-12)):
            raise ParameterError("eigenvalues violate the decay bound d/j^b")
        object.__setattr__(self, "mu", mu)

    @property
    def size(self):
        """Truncation order J."""
        return int(self.mu.size)

    @property
    def sigma_sv(self):
        """Singular values sigma_j = sqrt(mu_j) of A."""
        return np.sqrt(self.mu)

    @property
    def kernel_bound_sq(self):
        """c**2 = 2 sum(mu_j): uniform bound on K(x, x)."""
        return 2.0 * float(np.sum(self.mu))


@dataclass(frozen=True)
class GroundTruth:
    """Source-condition solution f_j = mu_j**r w_j with radius R = ||w||."""

    coeffs: np.ndarray
    r: float
    source_radius: float
    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _frozen_array(self.coeffs))
        object.__setattr__(self, "w", _frozen_array(self.w))


@dataclass(frozen=True)
class DataFunction:
    """Right-hand side y in the output basis; ``delta`` is 0 for clean data."""

    coeffs: np.ndarray
    kind: str = "clean"
    delta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("clean", "perturbed"):
            raise ParameterError(f"unknown data kind: {self.kind!r}")
        if self.delta < 0.0:
            raise ParameterError("delta must be nonnegative")
        object.__setattr__(self, "coeffs", _frozen_array(self.coeffs))


def build_power_law_problem(size, b, d):
    """Construct the problem with mu_j = d j**(-b), j = 1..size.

    Rejects size < 1, b <= 1 and d <= 0.
    """
    if size < 1:
        raise ParameterError("truncation order must be at least 1")
    if b <= 1.0:
        raise ParameterError("decay exponent b must exceed 1")
    if d <= 0.0:
        raise ParameterError("decay constant d must be positive")
    j = np.arange(1, size + 1, dtype=float)
    return SpectralProblem(mu=d * j ** (-b), decay_b=float(b), decay_d=float(d))


def make_source_solution(problem, r, w):
    """Build f with coordinates mu_j**r w_j; records R = ||w||."""
    if r <= 0.0:
        raise ParameterError("smoothness r must be positive")
    w = np.asarray(w, dtype=float)
    if w.shape != (problem.size,):
        raise ShapeError(f"w has length {w.size}, problem has {problem.size} modes")
    coeffs = problem.mu ** r * w
    return GroundTruth(coeffs=coeffs, r=float(r),
                       source_radius=float(np.linalg.norm(w)), w=w)


def forward_data(problem, f_coeffs):
    """Apply A: y_j = sigma_j f_j.  Returns clean data."""
    f_coeffs = np.asarray(f_coeffs, dtype=float)
    if f_coeffs.shape != (problem.size,):
        raise ShapeError(f"coefficients have length {f_coeffs.size}, "
                         f"problem has {problem.size} modes")
    return DataFunction(coeffs=problem.sigma_sv * f_coeffs)


def basis_matrix(problem, x):
    """Evaluate the sine basis at points x: matrix with entries u_j(x_i)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise DomainError("evaluation points must lie in [0, 1]")
    j = np.arange(1, problem.size + 1)
    return np.sqrt(2.0) * np.sin(np.pi * np.outer(x, j))


def eval_function(problem, coeffs, space, x):
    """Evaluate sum_j coeffs_j u_j(x) for x in [0, 1].

    ``space`` is "input" or "output"; both sides share the sine basis, the
    tag only records which side the coefficients came from.
    """
    if space not in ("input", "output"):
        raise ParameterError(f"unknown space tag: {space!r}")
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (problem.size,):
        raise ShapeError("coefficient length does not match the problem")
    values = basis_matrix(problem, x) @ coeffs
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(values[0])
    return values


def resolve_w_spec(w_spec, size, seed=0):
    """Turn a source-element spec into a concrete vector.

    "ones" gives (1, ..., 1); "unit-random" gives i.i.d. signs scaled to
    unit norm (drawn from the counter-based source stream of ``seed``);
    a sequence is used as-is.
    """
    if isinstance(w_spec, str):
        if w_spec == "ones":
            return np.ones(size)
        if w_spec == "unit-random":
            rng = streams.generator(seed, streams.SOURCE_STREAM)
            signs = np.where(rng.random(size) < 0.5, -1.0, 1.0)
            return signs / np.sqrt(size)
        raise ParameterError(f"unknown w_spec: {w_spec!r}")
    w = np.asarray(w_spec, dtype=float)
    if w.shape != (size,):
        raise ShapeError("explicit w_spec has wrong length")
    return w


def problem_from_descriptor(descriptor):
    """Build (problem, truth) from a JSON-style descriptor.

    Expected keys: J, b, d, r, w_spec, seed.
    """
    try:
        size = int(descriptor["J"])
        b = float(descriptor["b"])
        d = float(descriptor["d"])
        r = float(descriptor["r"])
        w_spec = descriptor["w_spec"]
        seed = int(descriptor.get("seed", 0))
    except KeyError as exc:
        raise ParameterError(f"descriptor is missing key {exc}") from exc
    problem = build_power_law_problem(size, b, d)
    truth = make_source_solution(problem, r, resolve_w_spec(w_spec, size, seed))
    return problem, truth


def problem_to_descriptor(problem, truth, w_spec=None, seed=0):
    """Inverse of :func:`problem_from_descriptor` (explicit w unless given)."""
    return {
        "J": problem.size,
        "b": problem.decay_b,
        "d": problem.decay_d,
        "r": truth.r,
        "w_spec": list(map(float, truth.w)) if w_spec is None else w_spec,
        "seed": int(seed),
    }
