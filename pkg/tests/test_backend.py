"""Backend contracts: batching statelessness, determinism, stub behavior."""

import pytest

from ddforge.backend import (
    HardwareBackendStub,
    LocalSimulatorBackend,
    UnsupportedBackend,
)
from ddforge.sim import NoiseModel, desk_device_noise
from ddforge.topology import Topology
from ddforge.workloads import bv_circuit, ghz_circuit


@pytest.fixture
def backend():
    noise = desk_device_noise(Topology.line(4).edges)
    return LocalSimulatorBackend(noise=noise, trajectories=64)


def test_submit_returns_counts_in_order(backend):
    c1, _ = bv_circuit(3, Topology.line(4))
    c2, _ = ghz_circuit(4, Topology.line(4))
    out = backend.submit([c1, c2], 200, 5)
    assert len(out) == 2
    assert out[0].num_bits == 3
    assert out[1].num_bits == 4


def test_submit_batch_split_invariance(backend):
    c1, _ = bv_circuit(3, Topology.line(4))
    c2, _ = ghz_circuit(4, Topology.line(4))
    together = backend.submit([c1, c2], 300, 42)
    alone1 = backend.submit([c1], 300, 42)
    alone2 = backend.submit([c2], 300, 42)
    assert together[0].counts == alone1[0].counts
    assert together[1].counts == alone2[0].counts
    # and reversing the batch changes nothing
    reversed_batch = backend.submit([c2, c1], 300, 42)
    assert reversed_batch[1].counts == together[0].counts


def test_submit_deterministic_in_seed(backend):
    c, _ = bv_circuit(3, Topology.line(4))
    a = backend.submit([c], 500, 7)[0]
    b = backend.submit([c], 500, 7)[0]
    assert a.counts == b.counts
    c2 = backend.submit([c], 500, 8)[0]
    assert a.counts != c2.counts


def test_capabilities():
    backend = LocalSimulatorBackend(noise=NoiseModel())
    caps = backend.capabilities
    assert caps.max_qubits == 14
    assert caps.supports_clifford_fast_path


def test_hardware_stub_raises():
    stub = HardwareBackendStub()
    with pytest.raises(UnsupportedBackend):
        stub.submit([], 10, 0)
