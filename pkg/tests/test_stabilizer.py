"""Tableau simulator cross-checked against the statevector path."""

import numpy as np
import pytest

from ddforge.gates import random_clifford_1q
from ddforge.scheduler import schedule_asap
from ddforge.sim import simulate_ideal, statevector_probabilities
from ddforge.stabilizer import (
    NondeterministicOutcome,
    clifford_distribution,
    is_clifford_circuit,
    target_bitstring,
)
from ddforge.topology import Topology
from ddforge.workloads import ghz_circuit


def test_identity_circuit_target():
    c = schedule_asap([("x", (1,)), ("x", (1,))], 3, measured_qubits=[0, 1, 2])
    assert target_bitstring(c) == "000"


def test_x_flip_target():
    c = schedule_asap([("x", (1,))], 3, measured_qubits=[0, 1, 2])
    assert target_bitstring(c) == "010"


def test_measured_subset_ordering():
    c = schedule_asap([("x", (2,)), ("x", (0,))], 3, measured_qubits=[0, 2])
    assert target_bitstring(c) == "11"


def test_nondeterministic_outcome_raises():
    c = schedule_asap([("h", (0,))], 1, measured_qubits=[0])
    with pytest.raises(NondeterministicOutcome):
        target_bitstring(c)


def test_ghz_distribution_via_affine_support():
    c, ideal = ghz_circuit(3, Topology.line(3))
    assert clifford_distribution(c) == pytest.approx(ideal)


def test_ghz_wide_beyond_statevector_limit():
    # stabilizer path has no statevector limit
    c, ideal = ghz_circuit(20, Topology.line(20))
    dist = simulate_ideal(c)
    assert dist == pytest.approx({"0" * 20: 0.5, "1" * 20: 0.5})


def _random_clifford_circuit(n, depth, rng, measured=True):
    ops = []
    edges = Topology.line(n).edges
    for _ in range(depth):
        for q in range(n):
            if rng.random() < 0.6:
                gate, params = random_clifford_1q(rng)
                ops.append((gate, (q,), params))
        for a, b in edges:
            if rng.random() < 0.3:
                ops.append(("cx", (a, b)))
    return schedule_asap(ops, n, edges, measured_qubits=range(n) if measured else [])


def test_clifford_distribution_matches_statevector(rng):
    for trial in range(10):
        c = _random_clifford_circuit(4, 3, rng)
        assert is_clifford_circuit(c)
        sv = statevector_probabilities(c)
        stab = clifford_distribution(c)
        assert set(sv) == set(stab)
        for k, v in sv.items():
            assert stab[k] == pytest.approx(v, abs=1e-9)


def test_deterministic_targets_match_statevector_argmax(rng):
    found = 0
    for trial in range(30):
        c = _random_clifford_circuit(5, 3, rng)
        try:
            t = target_bitstring(c)
        except NondeterministicOutcome:
            continue
        found += 1
        sv = statevector_probabilities(c)
        assert sv == pytest.approx({t: 1.0})
    assert found >= 1
