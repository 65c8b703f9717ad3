"""Stabilizer-tableau simulation of Clifford circuits.

Used for ideal (noiseless) outcome determination: deterministic target
bitstrings of mirror/BV-style circuits at any width, and exact output
distributions of nondeterministic Clifford circuits via affine-subspace
extraction of the computational-basis support.
"""

from __future__ import annotations

import math

import numpy as np

from .gates import is_clifford_gate
from .pauli import PulseLabel
from .scheduler import ScheduledCircuit

__all__ = [
    "Tableau",
    "NondeterministicOutcome",
    "SupportTooLarge",
    "run_tableau",
    "target_bitstring",
    "clifford_distribution",
    "is_clifford_circuit",
]


class NondeterministicOutcome(ValueError):
    """A measured qubit is not stabilized by +/-Z."""


class SupportTooLarge(ValueError):
    """The Clifford output support has too many basis states to enumerate."""


class Tableau:
    """Aaronson-Gottesman tableau: n destabilizers + n stabilizers."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("need at least one qubit")
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=np.uint8)
        self.z = np.zeros((2 * n, n), dtype=np.uint8)
        self.r = np.zeros(2 * n, dtype=np.uint8)
        for i in range(n):
            self.x[i, i] = 1
            self.z[n + i, i] = 1

    # -- generator gates (vectorized over all rows) --

    def h(self, q: int) -> None:
        self.r ^= self.x[:, q] & self.z[:, q]
        self.x[:, q], self.z[:, q] = self.z[:, q].copy(), self.x[:, q].copy()

    def s(self, q: int) -> None:
        self.r ^= self.x[:, q] & self.z[:, q]
        self.z[:, q] ^= self.x[:, q]

    def cx(self, c: int, t: int) -> None:
        self.r ^= self.x[:, c] & self.z[:, t] & (self.x[:, t] ^ self.z[:, c] ^ 1)
        self.x[:, t] ^= self.x[:, c]
        self.z[:, c] ^= self.z[:, t]

    # -- derived gates --

    def z_gate(self, q: int) -> None:
        self.r ^= self.x[:, q]

    def x_gate(self, q: int) -> None:
        self.r ^= self.z[:, q]

    def y_gate(self, q: int) -> None:
        self.r ^= self.x[:, q] ^ self.z[:, q]

    def sdg(self, q: int) -> None:
        self.s(q)
        self.z_gate(q)

    def sx(self, q: int) -> None:
        # Conjugation: X -> X, Z -> -Y, Y -> Z.
        self.r ^= (self.x[:, q] ^ 1) & self.z[:, q]
        self.x[:, q] ^= self.z[:, q]

    def rz_quarter(self, k: int, q: int) -> None:
        k %= 4
        if k == 1:
            self.s(q)
        elif k == 2:
            self.z_gate(q)
        elif k == 3:
            self.sdg(q)

    def cz(self, a: int, b: int) -> None:
        self.h(b)
        self.cx(a, b)
        self.h(b)

    def swap(self, a: int, b: int) -> None:
        self.cx(a, b)
        self.cx(b, a)
        self.cx(a, b)

    def apply(self, gate: str, qubits, params=()) -> None:
        if gate == "measure":
            return
        if gate == "h":
            self.h(qubits[0])
        elif gate == "x":
            self.x_gate(qubits[0])
        elif gate == "y":
            self.y_gate(qubits[0])
        elif gate == "sx":
            self.sx(qubits[0])
        elif gate == "rz":
            self._rz_angle(params[0], qubits[0])
        elif gate == "zsxz":
            a, b, c = params
            self._rz_angle(c, qubits[0])
            self.sx(qubits[0])
            self._rz_angle(b, qubits[0])
            self.sx(qubits[0])
            self._rz_angle(a, qubits[0])
        elif gate == "dd":
            label = PulseLabel.from_token(params[0])
            if label.axis == "X":
                self.x_gate(qubits[0])
            elif label.axis == "Y":
                self.y_gate(qubits[0])
            elif label.axis == "Z":
                self.z_gate(qubits[0])
        elif gate == "cx":
            self.cx(*qubits)
        elif gate == "cz":
            self.cz(*qubits)
        elif gate == "swap":
            self.swap(*qubits)
        else:
            raise ValueError(f"gate {gate!r} is not Clifford-simulable")

    def _rz_angle(self, theta: float, q: int) -> None:
        k = round(theta / (math.pi / 2))
        if abs(theta / (math.pi / 2) - k) > 1e-9:
            raise ValueError(f"rz({theta}) is not a Clifford angle")
        self.rz_quarter(k, q)

    # -- phase-correct row multiplication (CHP rowsum) --

    @staticmethod
    def _g(x1, z1, x2, z2) -> np.ndarray:
        x1 = x1.astype(np.int64)
        z1 = z1.astype(np.int64)
        x2 = x2.astype(np.int64)
        z2 = z2.astype(np.int64)
        return (
            x1 * z1 * (z2 - x2)
            + x1 * (1 - z1) * z2 * (2 * x2 - 1)
            + (1 - x1) * z1 * x2 * (1 - 2 * z2)
        )

    def _rowsum_into(self, xh, zh, rh, i: int):
        """Multiply generator i into the scratch row (xh, zh, rh); returns new rh."""
        total = 2 * rh + 2 * int(self.r[i]) + int(self._g(self.x[i], self.z[i], xh, zh).sum())
        total %= 4
        if total % 2:
            raise AssertionError("imaginary phase on a Hermitian product")
        xh ^= self.x[i]
        zh ^= self.z[i]
        return total // 2

    def deterministic_outcome(self, q: int) -> int:
        """Measurement outcome of qubit q, requiring determinism."""
        if self.x[self.n :, q].any():
            raise NondeterministicOutcome(f"qubit {q} has a random outcome")
        xh = np.zeros(self.n, dtype=np.uint8)
        zh = np.zeros(self.n, dtype=np.uint8)
        rh = 0
        for j in range(self.n):
            if self.x[j, q]:
                rh = self._rowsum_into(xh, zh, rh, self.n + j)
        return int(rh)

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        """Computational-basis support as (v0, basis) over GF(2).

        The support is the affine space {v0 XOR span(basis rows)}; all
        support states carry equal probability 1/2^rank.
        """
        n = self.n
        x = self.x[n:].copy()
        z = self.z[n:].copy()
        r = self.r[n:].astype(np.int64).copy()

        def mul_rows(dst: int, src: int) -> None:
            total = 2 * r[dst] + 2 * r[src] + int(self._g_static(x[src], z[src], x[dst], z[dst]).sum())
            r[dst] = (total % 4) // 2
            x[dst] ^= x[src]
            z[dst] ^= z[src]

        pivot_rows: list[int] = []
        row = 0
        for col in range(n):
            pivot = next((i for i in range(row, n) if x[i, col]), None)
            if pivot is None:
                continue
            if pivot != row:
                x[[row, pivot]] = x[[pivot, row]]
                z[[row, pivot]] = z[[pivot, row]]
                r[[row, pivot]] = r[[pivot, row]]
            for i in range(n):
                if i != row and x[i, col]:
                    mul_rows(i, row)
            pivot_rows.append(row)
            row += 1
        rank = row
        basis = x[:rank].copy()
        # Remaining rows are pure-Z constraints b.v = r (mod 2).
        zb = z[rank:]
        rb = r[rank:] % 2
        v0 = _solve_gf2(zb, rb, n)
        return v0, basis

    @staticmethod
    def _g_static(x1, z1, x2, z2):
        return Tableau._g(x1, z1, x2, z2)


def _solve_gf2(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    """One solution of A v = b over GF(2); raises if inconsistent."""
    a = a.copy().astype(np.uint8)
    b = b.copy().astype(np.uint8)
    m = a.shape[0]
    v = np.zeros(n, dtype=np.uint8)
    pivots = []
    row = 0
    for col in range(n):
        pivot = next((i for i in range(row, m) if a[i, col]), None)
        if pivot is None:
            continue
        if pivot != row:
            a[[row, pivot]] = a[[pivot, row]]
            b[[row, pivot]] = b[[pivot, row]]
        for i in range(m):
            if i != row and a[i, col]:
                a[i] ^= a[row]
                b[i] ^= b[row]
        pivots.append((row, col))
        row += 1
    if any(b[i] for i in range(row, m)):
        raise AssertionError("inconsistent stabilizer constraints")
    for rrow, col in pivots:
        v[col] = b[rrow]
    return v


def is_clifford_circuit(circuit: ScheduledCircuit) -> bool:
    return all(
        ins.gate == "measure" or is_clifford_gate(ins.gate, ins.params)
        for ins in circuit.instructions
    )


def run_tableau(circuit: ScheduledCircuit) -> Tableau:
    tab = Tableau(circuit.num_qubits)
    for ins in circuit.instructions:
        tab.apply(ins.gate, ins.qubits, ins.params)
    return tab


def target_bitstring(circuit: ScheduledCircuit) -> str:
    """Deterministic outcome over the measured qubits, in qubit-index order.

    Raises NondeterministicOutcome if any measured qubit is unstabilized.
    """
    measured = circuit.measured_qubits
    if not measured:
        raise ValueError("circuit measures no qubits")
    tab = run_tableau(circuit)
    return "".join(str(tab.deterministic_outcome(q)) for q in measured)


def clifford_distribution(
    circuit: ScheduledCircuit, max_support: int = 1 << 16
) -> dict[str, float]:
    """Exact output distribution of a Clifford circuit over measured qubits."""
    measured = circuit.measured_qubits
    if not measured:
        raise ValueError("circuit measures no qubits")
    tab = run_tableau(circuit)
    v0, basis = tab.support()
    k = basis.shape[0]
    if 2**k > max_support:
        raise SupportTooLarge(f"support has 2^{k} basis states")
    probs: dict[str, float] = {}
    p = 1.0 / 2**k
    for mask in range(2**k):
        v = v0.copy()
        for bit in range(k):
            if (mask >> bit) & 1:
                v ^= basis[bit]
        key = "".join(str(int(v[q])) for q in measured)
        probs[key] = probs.get(key, 0.0) + p
    return probs
