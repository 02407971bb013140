"""Discretization of the data function into n samples.

Two design schemes are supported: the deterministic midpoint grid
x_i = (i - 1/2)/n and i.i.d. Uniform[0,1] draws.  Outputs are either exact
evaluations Y_i = y(x_i) (a Dirac conditional law) or carry additive i.i.d.
Gaussian noise with constant conditional variance, so the conditional mean
of Y given X = x is always the clean data value y(x).

Bounded perturbations of the full data function are produced separately:
y_delta = y + delta * e with a unit-norm direction e that is either uniform
on the coefficient sphere, a single basis mode, or the basis mode on which
a given filter's reconstruction response s(mu_j) sigma_j is largest (the
worst mode for the reconstruction error).

All draws go through counter-based streams keyed by (seed, purpose,
replicate), so identical seeds give bit-identical samples on any platform
and replicates can run concurrently in any order.
"""

import csv
from dataclasses import dataclass

import numpy as np

from . import streams
from .errors import ParameterError, ShapeError
from .spectral_model import DataFunction, basis_matrix, forward_data

_SCHEMES = ("grid", "iid-uniform")


@dataclass(frozen=True)
class NoiseModel:
    """Conditional law of Y given X: exact ("none") or Gaussian with std sigma."""

    kind: str = "none"
    sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "gaussian"):
            raise ParameterError(f"unknown noise kind: {self.kind!r}")
        if self.kind == "none" and self.sigma != 0.0:
            raise ParameterError("noise kind 'none' requires sigma = 0")
        if self.sigma < 0.0:
            raise ParameterError("sigma must be nonnegative")


@dataclass(frozen=True)
class SampleSet:
    """n design points with outputs, tagged by scheme, noise model and seed."""

    design: np.ndarray
    outputs: np.ndarray
    scheme: str
    noise: NoiseModel
    seed: int

    def __post_init__(self):
        design = np.asarray(self.design, dtype=float).copy()
        outputs = np.asarray(self.outputs, dtype=float).copy()
        if design.ndim != 1 or design.size == 0:
            raise ShapeError("design must be a nonempty 1-d sequence")
        if outputs.shape != design.shape:
            raise ShapeError("outputs must match the design in length")
        if self.scheme not in _SCHEMES:
            raise ParameterError(f"unknown design scheme: {self.scheme!r}")
        if self.scheme == "grid":
            n = design.size
            expected = (np.arange(1, n + 1) - 0.5) / n
            if not np.array_equal(design, expected):
                raise ShapeError("grid scheme requires midpoints (i - 1/2)/n")
        design.setflags(write=False)
        outputs.setflags(write=False)
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "outputs", outputs)

    @property
    def size(self):
        return int(self.design.size)


@dataclass(frozen=True)
class PerturbationSpec:
    """Perturbation y + delta*e with ||e|| = 1.

    mode "random-unit": e uniform on the coefficient sphere;
    mode "fixed-mode": e = basis vector ``index`` (1-based);
    mode "filter-adversarial": e = basis vector maximizing s(mu_j) sigma_j
    for ``filter`` (the filter's worst single mode).
    """

    delta: float
    mode: str = "random-unit"
    index: int | None = None
    filter: object = None

    def __post_init__(self):
        if self.delta < 0.0:
            raise ParameterError("delta must be nonnegative")
        if self.mode not in ("random-unit", "fixed-mode", "filter-adversarial"):
            raise ParameterError(f"unknown perturbation mode: {self.mode!r}")
        if self.mode == "fixed-mode" and (self.index is None or self.index < 1):
            raise ParameterError("fixed-mode requires a 1-based mode index")
        if self.mode == "filter-adversarial" and self.filter is None:
            raise ParameterError("filter-adversarial requires a filter")


def sample_design(scheme, n, seed=0, index=0):
    """Draw the design points: midpoint grid or i.i.d. Uniform[0,1].

    ``index`` selects the replicate substream; the grid ignores it.
    """
    if n < 1:
        raise ShapeError("need at least one design point")
    if scheme == "grid":
        return (np.arange(1, n + 1) - 0.5) / n
    if scheme == "iid-uniform":
        rng = streams.generator(seed, streams.DESIGN_STREAM, index)
        return rng.random(n)
    raise ParameterError(f"unknown design scheme: {scheme!r}")


def sample_outputs(problem, f_true, design, noise, seed=0, scheme="grid",
                   index=0):
    """Sample Y_i = y(x_i) + zeta_i with y = A f_true and zeta i.i.d. noise.

    The conditional mean of Y_i given x_i is exactly y(x_i); with noise kind
    "none" the outputs are the exact evaluations.  ``index`` selects the
    replicate substream for the noise draw.
    """
    design = np.asarray(design, dtype=float)
    if design.ndim != 1 or design.size == 0:
        raise ShapeError("design must be a nonempty 1-d sequence")
    y = forward_data(problem, f_true.coeffs)
    values = basis_matrix(problem, design) @ y.coeffs
    if noise.kind == "gaussian" and noise.sigma > 0.0:
        rng = streams.generator(seed, streams.NOISE_STREAM, index)
        values = values + noise.sigma * rng.standard_normal(design.size)
    return SampleSet(design=design, outputs=values, scheme=scheme,
                     noise=noise, seed=int(seed))


def perturb_data(problem, y, spec, seed=0, index=0):
    """Return y + delta*e with ||e|| = 1 exactly (coefficient 2-norm)."""
    if y.coeffs.size != problem.size:
        raise ShapeError("data length does not match the problem")
    if spec.delta == 0.0:
        return DataFunction(coeffs=y.coeffs, kind="perturbed", delta=0.0)
    direction = np.zeros(problem.size)
    if spec.mode == "random-unit":
        rng = streams.generator(seed, streams.PERTURBATION_STREAM, index)
        direction = rng.standard_normal(problem.size)
        direction /= np.linalg.norm(direction)
    elif spec.mode == "fixed-mode":
        if spec.index > problem.size:
            raise ShapeError(f"mode index {spec.index} exceeds {problem.size}")
        direction[spec.index - 1] = 1.0
    else:  # filter-adversarial
        response = spec.filter.on_spectrum(problem) * problem.sigma_sv
        direction[int(np.argmax(response))] = 1.0
    return DataFunction(coeffs=y.coeffs + spec.delta * direction,
                        kind="perturbed", delta=float(spec.delta))


def adversarial_mode(problem, filt):
    """1-based index of the mode maximizing the response s(mu_j) sigma_j."""
    return int(np.argmax(filt.on_spectrum(problem) * problem.sigma_sv)) + 1


def samples_to_csv(samples, path):
    """Write a sample set as CSV with columns (i, x, y)."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["i", "x", "y"])
        for i, (x, y) in enumerate(zip(samples.design, samples.outputs), 1):
            writer.writerow([i, f"{x:.17g}", f"{y:.17g}"])
