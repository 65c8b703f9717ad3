"""Execution backends: the local trajectory simulator and a hardware stub.

`submit` is stateless: each circuit's sampling seed derives from the submit
seed and the circuit's own canonical serialization, so splitting a batch
across calls cannot change any circuit's counts.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .scheduler import ScheduledCircuit
from .sim import (
    DEFAULT_STATEVECTOR_LIMIT,
    CountsDistribution,
    NoiseModel,
    simulate_counts,
)

__all__ = [
    "ExecutionBackend",
    "BackendCapabilities",
    "LocalSimulatorBackend",
    "HardwareBackendStub",
    "UnsupportedBackend",
]


class UnsupportedBackend(RuntimeError):
    """Raised by backends that define the interface but cannot execute."""


@dataclass(frozen=True)
class BackendCapabilities:
    max_qubits: int
    supports_clifford_fast_path: bool


class ExecutionBackend(Protocol):
    """Anything that can run scheduled circuits and return counts."""

    name: str
    capabilities: BackendCapabilities

    def submit(
        self, circuits: Sequence[ScheduledCircuit], shots: int, seed
    ) -> list[CountsDistribution]:
        """One CountsDistribution per circuit, in order; deterministic in seed."""
        ...


def _seed_entropy(seed) -> list[int]:
    if isinstance(seed, np.random.SeedSequence):
        e = seed.entropy
        if e is None:
            return [0]
        return [int(x) for x in e] if isinstance(e, (list, tuple)) else [int(e)]
    if isinstance(seed, (int, np.integer)):
        return [int(seed)]
    return [int(x) for x in seed]


def _circuit_seed(circuit: ScheduledCircuit, seed) -> np.random.SeedSequence:
    digest = hashlib.sha256(circuit.serialize().encode()).digest()
    words = [int.from_bytes(digest[i : i + 4], "big") for i in range(0, 16, 4)]
    return np.random.SeedSequence(_seed_entropy(seed) + words)


@dataclass
class LocalSimulatorBackend:
    """Noisy trajectory simulator behind the backend interface.

    `trajectories` caps field draws per evaluation (None = one per shot);
    experiment configs trade a little sampling purity for large speedups.
    """

    noise: NoiseModel
    trajectories: int | None = None
    statevector_limit: int = DEFAULT_STATEVECTOR_LIMIT
    name: str = "local-trajectory-sim"

    @property
    def capabilities(self) -> BackendCapabilities:
        return BackendCapabilities(
            max_qubits=self.statevector_limit, supports_clifford_fast_path=True
        )

    def submit(
        self, circuits: Sequence[ScheduledCircuit], shots: int, seed
    ) -> list[CountsDistribution]:
        out = []
        for circuit in circuits:
            out.append(
                simulate_counts(
                    circuit,
                    self.noise,
                    shots,
                    _circuit_seed(circuit, seed),
                    trajectories=self.trajectories,
                    statevector_limit=self.statevector_limit,
                )
            )
        return out


@dataclass
class HardwareBackendStub:
    """Documented extension point; no network client ships with this package."""

    name: str = "hardware-stub"

    @property
    def capabilities(self) -> BackendCapabilities:
        return BackendCapabilities(max_qubits=0, supports_clifford_fast_path=False)

    def submit(self, circuits, shots, seed):
        raise UnsupportedBackend(
            "hardware execution is an extension point; implement ExecutionBackend "
            "against your provider's client"
        )
