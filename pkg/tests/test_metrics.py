"""Utility formulas and the decay fitter against hand/brute-force values."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ddforge.metrics import (
    DecayPoint,
    FitFailure,
    UtilityKind,
    UtilityValue,
    fit_epl,
    mrb_training_utility,
    one_norm_utility,
    polarization,
    polarization_point,
    success_probability,
)
from ddforge.sim import CountsDistribution


def counts_of(d: dict) -> CountsDistribution:
    return CountsDistribution(d, shots=sum(d.values()))


def test_success_probability_examples():
    assert float(success_probability(counts_of({"11": 10000}), "11")) == 1.0
    c = counts_of({"00": 9600, "11": 400})
    assert float(success_probability(c, "11")) == pytest.approx(0.04)
    u = success_probability(counts_of({"00": 50, "11": 50}), "11")
    assert float(u) == 0.5
    assert u.kind is UtilityKind.SUCCESS_PROBABILITY


def test_one_norm_examples():
    ideal = {"000": 0.5, "111": 0.5}
    match = counts_of({"000": 500, "111": 500})
    assert float(one_norm_utility(match, ideal)) == pytest.approx(1.0)
    allzero = counts_of({"000": 1000})
    assert float(one_norm_utility(allzero, ideal)) == pytest.approx(0.5)
    disjoint = counts_of({"010": 1000})
    assert float(one_norm_utility(disjoint, ideal)) == pytest.approx(0.0)


def test_one_norm_validates_ideal():
    with pytest.raises(ValueError):
        one_norm_utility(counts_of({"0": 1}), {"0": 0.7})


def test_one_norm_symmetry_and_relabeling():
    a = {"00": 0.3, "01": 0.2, "10": 0.5}
    b = {"00": 0.6, "11": 0.4}
    ca = counts_of({"00": 30, "01": 20, "10": 50})
    cb = counts_of({"00": 60, "11": 40})
    assert float(one_norm_utility(ca, b)) == pytest.approx(float(one_norm_utility(cb, a)))
    # relabel both distributions with the same bit flip
    flip = lambda k: k.translate(str.maketrans("01", "10"))
    ca2 = counts_of({flip(k): v for k, v in ca.counts.items()})
    b2 = {flip(k): v for k, v in b.items()}
    assert float(one_norm_utility(ca2, b2)) == pytest.approx(float(one_norm_utility(ca, b)))


def test_polarization_values():
    assert polarization(counts_of({"0": 100}), "0", 1) == pytest.approx(1.0, abs=1e-12)
    assert polarization(counts_of({"0": 50, "1": 50}), "0", 1) == pytest.approx(0.0, abs=1e-12)
    assert polarization(counts_of({"00": 77}), "00", 2) == pytest.approx(1.0, abs=1e-12)


def brute_polarization(counts: CountsDistribution, target: str, n: int) -> float:
    total = 0.0
    four_n = 4.0**n
    for bits in itertools.product("01", repeat=n):
        key = "".join(bits)
        p = counts.counts.get(key, 0) / counts.shots
        k = sum(a != b for a, b in zip(key, target))
        total += (-0.5) ** k * p
    return four_n / (four_n - 1.0) * total - 1.0 / (four_n - 1.0)


@given(st.integers(1, 4), st.data())
def test_polarization_matches_bruteforce(n, data):
    outcomes = ["".join(b) for b in itertools.product("01", repeat=n)]
    weights = data.draw(
        st.lists(st.integers(0, 20), min_size=2**n, max_size=2**n)
    )
    if sum(weights) == 0:
        weights[0] = 1
    counts = counts_of({o: w for o, w in zip(outcomes, weights) if w})
    target = data.draw(st.sampled_from(outcomes))
    assert polarization(counts, target, n) == pytest.approx(
        brute_polarization(counts, target, n), abs=1e-12
    )


def test_polarization_point_uncertainty():
    pt = polarization_point(counts_of({"0": 50, "1": 50}), "0", 1, depth=2)
    assert pt.depth == 2
    # var(h_k) = 0.25/100 each; weights 1 and 1/4; prefactor (4/3)^2
    expected = math.sqrt((4 / 3) ** 2 * (0.25 / 100 * (1 + 0.25)))
    assert pt.uncertainty == pytest.approx(expected)


def test_fit_epl_recovers_synthetic():
    a, p = 0.95, 0.98
    pts = [DecayPoint(d, a * p**d, 0.0) for d in (2, 4, 8, 16)]
    fit = fit_epl(pts, n=1)
    assert fit["p"] == pytest.approx(p, abs=1e-3)
    assert fit["A"] == pytest.approx(a, abs=1e-2)


@pytest.mark.parametrize("p", [0.5, 0.8, 0.95, 0.999])
def test_fit_epl_recovery_range(p):
    pts = [DecayPoint(d, 0.9 * p**d, 0.0) for d in (1, 2, 4, 8, 16)]
    assert fit_epl(pts, n=2)["p"] == pytest.approx(p, abs=1e-3)


def test_fit_epl_p_equal_one_gives_zero_epl():
    pts = [DecayPoint(d, 0.9, 0.0) for d in (2, 4, 8)]
    fit = fit_epl(pts, n=3)
    assert fit["p"] == pytest.approx(1.0, abs=1e-6)
    assert fit["epl"] == pytest.approx(0.0, abs=1e-6)


def test_epl_formula_value():
    pts = [DecayPoint(d, 0.95 * 0.9**d, 0.0) for d in (1, 2, 4, 8)]
    fit = fit_epl(pts, n=1)
    assert fit["epl"] == pytest.approx(0.5 * (1 - fit["p"]), abs=1e-9)
    assert fit["epl"] == pytest.approx(0.05, abs=1e-3)


def test_fit_epl_no_signal():
    pts = [
        DecayPoint(2, 0.01, 0.02),
        DecayPoint(2, -0.01, 0.02),
        DecayPoint(4, 0.0, 0.02),
    ]
    with pytest.raises(FitFailure):
        fit_epl(pts, n=4)


def test_fit_epl_needs_points():
    with pytest.raises(FitFailure):
        fit_epl([DecayPoint(2, 0.5, 0.0)] * 2, n=1)
    with pytest.raises(FitFailure):
        fit_epl([DecayPoint(2, 0.5, 0.0)] * 3, n=1)


def test_mrb_training_utility():
    assert float(mrb_training_utility([1, 1, 1, 1, 1])) == 1.0
    assert float(mrb_training_utility([0.2, 0.4, 0.6, 0.8, 1.0])) == pytest.approx(0.6)
    assert float(mrb_training_utility([0.3])) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        mrb_training_utility([])


def test_utility_value_bounds():
    with pytest.raises(ValueError):
        UtilityValue(1.2, UtilityKind.ONE_NORM)
    with pytest.raises(ValueError):
        DecayPoint(2, 0.5, -0.1)
