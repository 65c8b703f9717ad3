"""Utility functions and benchmarking statistics.

Success probability and 1-norm utilities score a strategy's measured output
against a known target; effective polarization weighs outcomes by Hamming
distance from the target, and the exponential decay of polarization with
benchmark depth yields the error per layer (EPL).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .sim import CountsDistribution

__all__ = [
    "UtilityKind",
    "UtilityValue",
    "DecayPoint",
    "FitFailure",
    "success_probability",
    "one_norm_utility",
    "polarization",
    "polarization_point",
    "fit_epl",
    "mrb_training_utility",
]


class FitFailure(ValueError):
    """Decay fit impossible: no usable signal or parameters out of range."""


class UtilityKind(str, enum.Enum):
    SUCCESS_PROBABILITY = "success_probability"
    ONE_NORM = "one_norm"
    MRB_MEAN_SUCCESS = "mrb_mean_success"


@dataclass(frozen=True)
class UtilityValue:
    value: float
    kind: UtilityKind

    def __post_init__(self):
        if not (0.0 <= self.value <= 1.0):
            raise ValueError(f"utility {self.value} outside [0, 1]")

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class DecayPoint:
    """Polarization S at benchmark depth D with its standard error."""

    depth: int
    polarization: float
    uncertainty: float = 0.0

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("depth must be >= 0")
        if self.uncertainty < 0:
            raise ValueError("uncertainty must be >= 0")


def success_probability(counts: CountsDistribution, target: str) -> UtilityValue:
    """Fraction of shots landing exactly on the target bitstring."""
    if counts.shots < 1:
        raise ValueError("need at least one shot")
    return UtilityValue(
        counts.counts.get(target, 0) / counts.shots, UtilityKind.SUCCESS_PROBABILITY
    )


def one_norm_utility(
    counts: CountsDistribution, ideal: Mapping[str, float]
) -> UtilityValue:
    """1 - (1/2) * sum_k |p(k) - phat(k)| over the union of supports."""
    total = sum(ideal.values())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"ideal distribution sums to {total}, expected 1")
    observed = counts.probabilities()
    keys = set(ideal) | set(observed)
    dist = sum(abs(ideal.get(k, 0.0) - observed.get(k, 0.0)) for k in keys)
    return UtilityValue(max(0.0, 1.0 - 0.5 * dist), UtilityKind.ONE_NORM)


def _hamming_histogram(counts: CountsDistribution, target: str) -> np.ndarray:
    n = len(target)
    h = np.zeros(n + 1)
    t_bits = np.array([c == "1" for c in target])
    for bits, c in counts.counts.items():
        b = np.array([ch == "1" for ch in bits])
        h[int((b ^ t_bits).sum())] += c
    return h / counts.shots


def polarization(counts: CountsDistribution, target: str, n: int) -> float:
    """Effective polarization: Hamming-weighted success statistic.

    S = 4^N/(4^N-1) * sum_k (-1/2)^k h_k - 1/(4^N-1), where h_k is the
    fraction of shots at Hamming distance k from the target.  S = 1 for
    perfect output, 0 in expectation for fully random output.
    """
    if len(target) != n or counts.num_bits not in (0, n):
        raise ValueError("bitstring length must match N")
    h = _hamming_histogram(counts, target)
    weights = (-0.5) ** np.arange(n + 1)
    four_n = 4.0**n
    return float(four_n / (four_n - 1.0) * (weights * h).sum() - 1.0 / (four_n - 1.0))


def polarization_point(
    counts: CountsDistribution, target: str, n: int, depth: int
) -> DecayPoint:
    """Polarization with binomial standard error propagated per h_k bin."""
    s = polarization(counts, target, n)
    h = _hamming_histogram(counts, target)
    var_h = h * (1.0 - h) / counts.shots
    weights = (-0.5) ** np.arange(n + 1)
    four_n = 4.0**n
    var_s = (four_n / (four_n - 1.0)) ** 2 * float((weights**2 * var_h).sum())
    return DecayPoint(depth=depth, polarization=s, uncertainty=math.sqrt(var_s))


def _golden_section(f, lo: float, hi: float, tol: float) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2.0


def fit_epl(points: Sequence[DecayPoint], n: int) -> dict[str, float]:
    """Fit S ~ A * p^D by least squares and return the error per layer.

    p is scanned over (0, 1] on a 1e-3 grid with the closed-form optimal A
    at each p, then refined to 1e-6 by golden section.  EPL =
    (2^N - 1)/2^N * (1 - p).

    Raises FitFailure when the shallowest-depth polarization is consistent
    with zero (mean <= 2x its standard error) or the best fit leaves (0, 1].
    """
    if len(points) < 3:
        raise FitFailure("need at least 3 decay points")
    depths = np.array([p.depth for p in points], dtype=float)
    if len(set(depths.tolist())) < 2:
        raise FitFailure("need at least 2 distinct depths")
    svals = np.array([p.polarization for p in points], dtype=float)

    d_min = depths.min()
    at_min = [p for p in points if p.depth == d_min]
    mean_s = float(np.mean([p.polarization for p in at_min]))
    se = math.sqrt(sum(p.uncertainty**2 for p in at_min)) / len(at_min)
    if mean_s <= 2.0 * se:
        raise FitFailure(
            f"no signal: mean S({int(d_min)}) = {mean_s:.4f} <= 2 x SE = {2 * se:.4f}"
        )

    def sse(p: float) -> float:
        basis = p**depths
        denom = float(basis @ basis)
        if denom <= 0.0:
            return float(svals @ svals)
        a = float(basis @ svals) / denom
        resid = svals - a * basis
        return float(resid @ resid)

    grid = np.linspace(1e-3, 1.0, 1000)
    losses = [sse(p) for p in grid]
    i = int(np.argmin(losses))
    lo = grid[max(0, i - 1)]
    hi = grid[min(len(grid) - 1, i + 1)]
    p_best = _golden_section(sse, lo, hi, 1e-6) if hi > lo else grid[i]
    if not (0.0 < p_best <= 1.0 + 1e-12):
        raise FitFailure(f"best-fit p = {p_best} outside (0, 1]")
    p_best = min(p_best, 1.0)
    basis = p_best**depths
    a_best = float(basis @ svals) / float(basis @ basis)
    epl = (2.0**n - 1.0) / (2.0**n) * (1.0 - p_best)
    return {"A": a_best, "p": p_best, "epl": epl}


def mrb_training_utility(success_probs: Sequence[float]) -> UtilityValue:
    """Mean success probability over a fixed set of training circuits."""
    if not success_probs:
        raise ValueError("need at least one success probability")
    if any(not (0.0 <= p <= 1.0) for p in success_probs):
        raise ValueError("success probabilities must lie in [0, 1]")
    return UtilityValue(float(np.mean(success_probs)), UtilityKind.MRB_MEAN_SUCCESS)
