"""Workload generators: BV, GHZ, Grover, mirror circuits, and mirror RB.

Every generator is deterministic given its seed and returns self-contained
scheduled circuits together with their ideal targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .gates import (
    conjugate_pauli,
    gate_unitary,
    inverse_1q,
    is_clifford_gate,
    random_clifford_1q,
    zsxz_from_unitary,
)
from .scheduler import (
    GateTimingModel,
    Instruction,
    ScheduledCircuit,
    schedule_asap,
)
from .topology import Topology

__all__ = [
    "TopologyTooSmall",
    "TopologyDisconnected",
    "UnsupportedGate",
    "NonInvertibleGate",
    "MRBSpec",
    "bv_circuit",
    "ghz_circuit",
    "grover_circuit",
    "grover_ideal_success",
    "grover_default_iterations",
    "cliffordize",
    "mirror_circuit",
    "edge_grab_sample",
    "mrb_circuit",
    "mrb_training_set",
]


class TopologyTooSmall(ValueError):
    pass


class TopologyDisconnected(ValueError):
    pass


class UnsupportedGate(ValueError):
    pass


class NonInvertibleGate(ValueError):
    pass


# --------------------------------------------------------------------------
# Bernstein-Vazirani
# --------------------------------------------------------------------------


def bv_circuit(
    n: int, topology: Topology, timing: GateTimingModel | None = None
) -> tuple[ScheduledCircuit, str]:
    """BV oracle circuit for the all-ones hidden string.

    The ancilla starts at physical qubit 0 and is routed to each problem
    qubit by SWAP walking (on a line this is the standard ancilla walk: n
    CNOTs and n-1 SWAPs).  Only the n problem qubits are measured; the
    target is 1^n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if topology.num_qubits < n + 1:
        raise TopologyTooSmall(f"need {n + 1} qubits, topology has {topology.num_qubits}")
    width = n + 1
    sub = Topology(width, topology.induced(width))
    adj = sub.adjacency()

    ops: list[tuple] = []
    # logical problem qubit i (1-based) starts at physical i; ancilla at 0.
    pos = {i: i for i in range(width)}  # logical -> physical
    anc = 0
    for i in range(1, n + 1):
        ops.append(("h", (pos[i],)))
    ops.append(("x", (pos[anc],)))
    ops.append(("h", (pos[anc],)))
    phys_of = {log: p for log, p in pos.items()}
    anc_phys = phys_of[anc]
    for i in range(1, n + 1):
        target_phys = phys_of[i]
        while target_phys not in adj[anc_phys]:
            path = sub.shortest_path(anc_phys, target_phys)
            step = path[1]
            ops.append(("swap", (anc_phys, step)))
            displaced = next(l for l, p in phys_of.items() if p == step)
            phys_of[displaced] = anc_phys
            phys_of[anc] = step
            anc_phys = step
            target_phys = phys_of[i]
        ops.append(("cx", (phys_of[i], anc_phys)))
    for i in range(1, n + 1):
        ops.append(("h", (phys_of[i],)))
    measured = sorted(phys_of[i] for i in range(1, n + 1))
    circuit = schedule_asap(ops, width, sub.edges, measured, timing)
    return circuit, "1" * n


# --------------------------------------------------------------------------
# GHZ
# --------------------------------------------------------------------------


def ghz_circuit(
    n: int, topology: Topology, timing: GateTimingModel | None = None
) -> tuple[ScheduledCircuit, dict[str, float]]:
    """GHZ fan-out along a BFS spanning tree rooted at a graph center."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if topology.num_qubits < n:
        raise TopologyTooSmall(f"need {n} qubits, topology has {topology.num_qubits}")
    try:
        root = topology.center(n)
        tree = topology.bfs_tree(root, n)
    except ValueError as exc:
        raise TopologyDisconnected(str(exc)) from None
    ops: list[tuple] = [("h", (root,))]
    ops.extend(("cx", (parent, child)) for parent, child in tree)
    circuit = schedule_asap(ops, n, topology.induced(n), range(n), timing)
    ideal = {"0" * n: 0.5, "1" * n: 0.5}
    return circuit, ideal


# --------------------------------------------------------------------------
# Grover
# --------------------------------------------------------------------------


def grover_default_iterations(n: int) -> int:
    theta = math.asin(2.0 ** (-n / 2.0))
    return max(1, round(math.pi / (4.0 * theta) - 0.5))


def grover_ideal_success(n: int, iterations: int) -> float:
    theta = math.asin(2.0 ** (-n / 2.0))
    return math.sin((2 * iterations + 1) * theta) ** 2


def _phase_flip_ops(n: int, marked: str) -> list[tuple]:
    """Parity-network realization of the phase flip on |marked>.

    Every non-empty qubit subset contributes one rz on a CNOT staircase; the
    rz angle's sign encodes the marked bitstring, so all 2^n oracles share
    an identical schedule and differ only in rz parameters.
    """
    base = math.pi / 2.0 ** (n - 1)
    ops: list[tuple] = []
    zeros = [i for i in range(n) if marked[i] == "0"]
    for mask in range(1, 2**n):
        subset = [i for i in range(n) if (mask >> i) & 1]
        angle = base * (-1.0) ** (len(subset) + 1)
        if sum(1 for i in subset if i in zeros) % 2:
            angle = -angle
        anchor = subset[-1]
        for q in subset[:-1]:
            ops.append(("cx", (q, anchor)))
        ops.append(("rz", (anchor,), (angle,)))
        for q in reversed(subset[:-1]):
            ops.append(("cx", (q, anchor)))
    return ops


def grover_circuit(
    n: int,
    oracle_bits: str,
    iterations: int | None = None,
    timing: GateTimingModel | None = None,
) -> ScheduledCircuit:
    """Grover search circuit on an all-to-all coupling, decomposed into
    1q gates, virtual rz, and CNOTs."""
    if len(oracle_bits) != n or set(oracle_bits) - {"0", "1"}:
        raise ValueError("oracle_bits must be an n-bit string")
    iterations = grover_default_iterations(n) if iterations is None else iterations
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    ops: list[tuple] = [("h", (q,)) for q in range(n)]
    for _ in range(iterations):
        ops.extend(_phase_flip_ops(n, oracle_bits))
        ops.extend(("h", (q,)) for q in range(n))
        ops.extend(_phase_flip_ops(n, "0" * n))
        ops.extend(("h", (q,)) for q in range(n))
    topo = Topology.complete(n)
    return schedule_asap(ops, n, topo.edges, range(n), timing)


# --------------------------------------------------------------------------
# Cliffordization
# --------------------------------------------------------------------------


def _round_phase(phi: float, rng: np.random.Generator) -> float:
    two_pi = 2.0 * math.pi
    quarter = math.pi / 2.0
    phi %= two_pi
    k = phi / quarter
    if abs(k - round(k)) < 1e-9:
        return (round(k) * quarter) % two_pi
    a = math.floor(k) * quarter
    b = a + quarter
    chosen = b if rng.random() < (phi - a) / quarter else a
    return chosen % two_pi


def cliffordize(circuit: ScheduledCircuit, rng: np.random.Generator) -> ScheduledCircuit:
    """Stochastically round every gate phase to the nearest Clifford angles.

    Each phase phi in (a, b) (quadrant bounds) becomes b with probability
    (phi - a)/(pi/2) and a otherwise, independently per angle, so rounding
    preserves expectations.  Instruction count and timing are unchanged.
    """
    new_instructions: list[Instruction] = []
    for ins in circuit.instructions:
        if ins.gate == "measure" or is_clifford_gate(ins.gate, ins.params):
            new_instructions.append(ins)
            continue
        if len(ins.qubits) != 1:
            raise UnsupportedGate(f"cannot Cliffordize multi-qubit gate {ins.gate}")
        if ins.gate == "rz":
            params = (_round_phase(ins.params[0], rng),)
            new_instructions.append(
                Instruction("rz", ins.qubits, ins.t0, ins.duration, params)
            )
        elif ins.gate == "zsxz":
            params = tuple(_round_phase(p, rng) for p in ins.params)
            new_instructions.append(
                Instruction("zsxz", ins.qubits, ins.t0, ins.duration, params)
            )
        else:  # pragma: no cover - vocabulary has no other non-Clifford 1q kinds
            raise UnsupportedGate(f"cannot Cliffordize gate {ins.gate}")
    return ScheduledCircuit(
        num_qubits=circuit.num_qubits,
        instructions=tuple(new_instructions),
        coupling_edges=circuit.coupling_edges,
        measured_qubits=circuit.measured_qubits,
    )


# --------------------------------------------------------------------------
# circuit mirroring
# --------------------------------------------------------------------------

_PAULI_TOKENS = ("i", "x", "y", "z")


def mirror_circuit(
    motif: ScheduledCircuit,
    rng: np.random.Generator,
    timing: GateTimingModel | None = None,
) -> tuple[ScheduledCircuit, str]:
    """Mirror a Clifford motif: motif + random Pauli layer + time-reversed
    inverses (idle timings mirrored) + measurement.

    The deterministic target is the central Pauli frame propagated through
    the inverse half.
    """
    timing = timing or GateTimingModel()
    if any(ins.gate == "measure" for ins in motif.instructions):
        raise NonInvertibleGate("motif must not contain measurements")
    for ins in motif.instructions:
        if not is_clifford_gate(ins.gate, ins.params):
            raise UnsupportedGate(
                f"mirror target needs a Clifford motif; {ins.gate}{ins.params} is not"
            )
    n = motif.num_qubits
    t_motif = motif.duration
    slot = timing.one_qubit_duration

    instructions = list(motif.instructions)
    paulis = [int(rng.integers(4)) for _ in range(n)]
    for q, p in enumerate(paulis):
        tok = _PAULI_TOKENS[p]
        if tok in ("x", "y"):
            instructions.append(Instruction(tok, (q,), t_motif, slot))
        elif tok == "z":
            instructions.append(Instruction("rz", (q,), t_motif, 0.0, (math.pi,)))

    offset = t_motif + slot
    inverse_half: list[Instruction] = []
    for ins in motif.instructions:
        gate, params = ins.gate, ins.params
        if len(ins.qubits) == 1:
            gate, params = inverse_1q(gate, params)
        mirrored_t0 = offset + (t_motif - ins.t0 - ins.duration)
        inverse_half.append(
            Instruction(gate, ins.qubits, mirrored_t0, ins.duration, tuple(params))
        )
    instructions.extend(inverse_half)

    # Frame-propagate the central Pauli through the inverse half.
    x_bits = np.array([1 if p in (1, 2) else 0 for p in paulis], dtype=np.uint8)
    z_bits = np.array([1 if p in (2, 3) else 0 for p in paulis], dtype=np.uint8)
    for ins in sorted(inverse_half, key=lambda i: (i.t0, i.duration > 0, i.qubits)):
        conjugate_pauli(ins.gate, ins.params, ins.qubits, x_bits, z_bits)
    target = "".join(str(int(b)) for b in x_bits)

    meas_t = offset + t_motif
    instructions.extend(
        Instruction("measure", (q,), meas_t, timing.measurement_duration)
        for q in range(n)
    )
    circuit = ScheduledCircuit(
        num_qubits=n,
        instructions=tuple(instructions),
        coupling_edges=motif.coupling_edges,
        measured_qubits=tuple(range(n)),
    )
    return circuit, target


# --------------------------------------------------------------------------
# edge-grab sampling
# --------------------------------------------------------------------------

_EDGE_GRAB_CACHE: dict[tuple, float] = {}


def _greedy_matching(
    edges: Sequence[tuple[int, int]], rng: np.random.Generator
) -> list[tuple[int, int]]:
    order = rng.permutation(len(edges))
    used: set[int] = set()
    out: list[tuple[int, int]] = []
    for k in order:
        a, b = edges[k]
        if a not in used and b not in used:
            used.add(a)
            used.add(b)
            out.append((a, b))
    return out


def _mean_matching_size(edges: tuple[tuple[int, int], ...]) -> float:
    key = edges
    if key not in _EDGE_GRAB_CACHE:
        rng = np.random.default_rng(np.random.SeedSequence([853421, len(edges)]))
        sizes = [len(_greedy_matching(edges, rng)) for _ in range(100)]
        _EDGE_GRAB_CACHE[key] = float(np.mean(sizes))
    return _EDGE_GRAB_CACHE[key]


def edge_grab_sample(
    edges: Sequence[tuple[int, int]], xi: float, rng: np.random.Generator
) -> list[tuple[int, int]]:
    """Random matching with expected qubit occupancy calibrated to xi.

    Greedily builds a candidate matching from shuffled edges, then retains
    each candidate with probability min(1, xi*N/(2*E[|candidates|])), the
    mean candidate count being estimated once per graph.
    """
    if not (0.0 <= xi <= 1.0):
        raise ValueError("xi must lie in [0, 1]")
    edges = tuple(tuple(sorted(e)) for e in edges)
    if not edges or xi == 0.0:
        return []
    n = len({q for e in edges for q in e})
    expected = _mean_matching_size(edges)
    p_keep = min(1.0, xi * n / (2.0 * expected)) if expected > 0 else 0.0
    candidates = _greedy_matching(edges, rng)
    return [e for e in candidates if rng.random() < p_keep]


# --------------------------------------------------------------------------
# mirror randomized benchmarking
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MRBSpec:
    """Mirror RB circuit parameters: width, benchmark depth (even), two-qubit
    gate density, flavor, coupling subgraph, and seed."""

    width: int
    depth: int
    two_qubit_density: float = 0.25
    flavor: str = "clifford"
    edges: tuple[tuple[int, int], ...] | None = None
    seed: int | tuple = 0

    def __post_init__(self):
        if self.depth % 2:
            raise ValueError("benchmark depth must be even")
        if not (0.0 <= self.two_qubit_density <= 1.0):
            raise ValueError("two_qubit_density must lie in [0, 1]")
        if self.flavor not in ("clifford", "su2"):
            raise ValueError("flavor must be 'clifford' or 'su2'")
        edges = (
            Topology.line(self.width).edges if self.edges is None else
            tuple(sorted(tuple(sorted(e)) for e in self.edges))
        )
        for a, b in edges:
            if not (0 <= a < self.width and 0 <= b < self.width):
                raise ValueError(f"edge ({a},{b}) outside width {self.width}")
        object.__setattr__(self, "edges", edges)


_PAULI_MATS = {
    0: np.eye(2, dtype=complex),
    1: np.array([[0, 1], [1, 0]], dtype=complex),
    2: np.array([[0, -1j], [1j, 0]], dtype=complex),
    3: np.array([[1, 0], [0, -1]], dtype=complex),
}


def _pauli_product_table() -> np.ndarray:
    """Sign-free product of Pauli labels 0..3 (I, X, Y, Z)."""
    to_bits = {0: (0, 0), 1: (1, 0), 2: (1, 1), 3: (0, 1)}
    from_bits = {v: k for k, v in to_bits.items()}
    table = np.zeros((4, 4), dtype=np.int64)
    for a in range(4):
        for b in range(4):
            xa, za = to_bits[a]
            xb, zb = to_bits[b]
            table[a, b] = from_bits[(xa ^ xb, za ^ zb)]
    return table


_PAULI_PRODUCT = _pauli_product_table()


def _haar_su2(rng: np.random.Generator) -> np.ndarray:
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    a, b, c, d = q
    return np.array([[a + 1j * b, c + 1j * d], [-c + 1j * d, a - 1j * b]])


def _as_physical_zsxz(u: np.ndarray) -> tuple[str, tuple]:
    """Express a 1q unitary as a physical zsxz slot (diagonals included)."""
    kind, params = zsxz_from_unitary(u)
    if kind == "rz":
        theta = params[0]
        return "zsxz", ((theta + math.pi) % (2 * math.pi), math.pi, 0.0)
    return "zsxz", params


def _emit_1q_layer(
    instructions: list[Instruction],
    specs: Sequence[tuple[str, tuple]],
    t0: float,
    timing: GateTimingModel,
) -> None:
    for q, (gate, params) in enumerate(specs):
        if gate == "i":
            continue
        dur = 0.0 if gate == "rz" else timing.one_qubit_duration
        instructions.append(Instruction(gate, (q,), t0, dur, tuple(params)))


def _pauli_layer_specs(labels: Sequence[int]) -> list[tuple[str, tuple]]:
    out: list[tuple[str, tuple]] = []
    for p in labels:
        if p == 0:
            out.append(("i", ()))
        elif p == 1:
            out.append(("x", ()))
        elif p == 2:
            out.append(("y", ()))
        else:
            out.append(("rz", (math.pi,)))
    return out


def _conj_paulis_through_cx_layer(
    labels: np.ndarray, matching: Sequence[tuple[int, int]]
) -> np.ndarray:
    x = (labels == 1) | (labels == 2)
    z = (labels == 2) | (labels == 3)
    x = x.astype(np.uint8)
    z = z.astype(np.uint8)
    for a, b in matching:
        conjugate_pauli("cx", (), (a, b), x, z)
    return (x & (1 - z)) * 1 + (x & z) * 2 + ((1 - x) & z) * 3


def mrb_circuit(
    spec: MRBSpec, timing: GateTimingModel | None = None
) -> tuple[ScheduledCircuit, str]:
    """Mirror RB circuit plus its deterministic target bitstring.

    Clifford flavor: explicit random Pauli dressing layers around random 1q
    Clifford layers and edge-grab CX layers, mirrored with inverses; the
    target comes from stabilizer tracking.  SU(2) flavor: Haar-random 1q
    layers with the Pauli dressing and randomized-compiling corrections
    merged into single gates so the mirror stays exact; the target comes
    from statevector simulation.
    """
    timing = timing or GateTimingModel()
    rng = np.random.default_rng(spec.seed)
    n, half = spec.width, spec.depth // 2
    t1, t2 = timing.one_qubit_duration, timing.two_qubit_duration
    instructions: list[Instruction] = []
    matchings = [edge_grab_sample(spec.edges, spec.two_qubit_density, rng) for _ in range(half)]

    def emit_cx_layer(matching, t0):
        instructions.extend(
            Instruction("cx", (a, b), t0, t2) for a, b in matching
        )

    t = 0.0
    if spec.flavor == "clifford":
        init = [random_clifford_1q(rng) for _ in range(n)]
        pauli_layers = [
            [int(p) for p in rng.integers(0, 4, size=n)] for _ in range(half)
        ]
        cliff_layers = [
            [random_clifford_1q(rng) for _ in range(n)] for _ in range(half)
        ]
        central = [int(p) for p in rng.integers(0, 4, size=n)]
        mirror_paulis = [
            [int(p) for p in rng.integers(0, 4, size=n)] for _ in range(half)
        ]
        _emit_1q_layer(instructions, init, t, timing)
        t += t1
        for j in range(half):
            _emit_1q_layer(instructions, _pauli_layer_specs(pauli_layers[j]), t, timing)
            t += t1
            _emit_1q_layer(instructions, cliff_layers[j], t, timing)
            t += t1
            emit_cx_layer(matchings[j], t)
            t += t2
        _emit_1q_layer(instructions, _pauli_layer_specs(central), t, timing)
        t += t1
        for j in reversed(range(half)):
            emit_cx_layer(matchings[j], t)
            t += t2
            _emit_1q_layer(
                instructions, [inverse_1q(g, p) for g, p in cliff_layers[j]], t, timing
            )
            t += t1
            _emit_1q_layer(instructions, _pauli_layer_specs(mirror_paulis[j]), t, timing)
            t += t1
        _emit_1q_layer(instructions, [inverse_1q(g, p) for g, p in init], t, timing)
        t += t1
    else:
        init = [_haar_su2(rng) for _ in range(n)]
        u_layers = [[_haar_su2(rng) for _ in range(n)] for _ in range(half)]
        pauli_layers = [rng.integers(0, 4, size=n) for _ in range(half)]
        central = rng.integers(0, 4, size=n)
        rc_layers = [rng.integers(0, 4, size=n) for _ in range(half)]
        final_paulis = rng.integers(0, 4, size=n)

        _emit_1q_layer(instructions, [_as_physical_zsxz(u) for u in init], t, timing)
        t += t1
        for j in range(half):
            merged = [
                u_layers[j][q] @ _PAULI_MATS[int(pauli_layers[j][q])] for q in range(n)
            ]
            _emit_1q_layer(instructions, [_as_physical_zsxz(u) for u in merged], t, timing)
            t += t1
            emit_cx_layer(matchings[j], t)
            t += t2
        _emit_1q_layer(instructions, _pauli_layer_specs([int(p) for p in central]), t, timing)
        t += t1
        frame = central.copy()
        for j in reversed(range(half)):
            emit_cx_layer(matchings[j], t)
            t += t2
            frame = _conj_paulis_through_cx_layer(frame, matchings[j])
            merged = [
                _PAULI_MATS[int(rc_layers[j][q])]
                @ u_layers[j][q].conj().T
                @ _PAULI_MATS[int(frame[q])].conj().T
                for q in range(n)
            ]
            _emit_1q_layer(instructions, [_as_physical_zsxz(u) for u in merged], t, timing)
            t += t1
            frame = np.array(
                [_PAULI_PRODUCT[int(rc_layers[j][q]), int(pauli_layers[j][q])] for q in range(n)]
            )
        final_merged = [
            _PAULI_MATS[int(final_paulis[q])]
            @ init[q].conj().T
            @ _PAULI_MATS[int(frame[q])].conj().T
            for q in range(n)
        ]
        _emit_1q_layer(instructions, [_as_physical_zsxz(u) for u in final_merged], t, timing)
        t += t1

    instructions.extend(
        Instruction("measure", (q,), t, timing.measurement_duration) for q in range(n)
    )
    circuit = ScheduledCircuit(
        num_qubits=n,
        instructions=tuple(instructions),
        coupling_edges=spec.edges,
        measured_qubits=tuple(range(n)),
    )
    if spec.flavor == "clifford":
        from .stabilizer import target_bitstring as stab_target

        target = stab_target(circuit)
    else:
        from .sim import statevector_probabilities

        probs = statevector_probabilities(circuit)
        target = max(probs, key=probs.get)
        if probs[target] < 1.0 - 1e-9:
            raise AssertionError("su2 mirror construction lost determinism")
    return circuit, target


def mrb_training_set(
    width: int = 10,
    layers: int = 6,
    count: int = 5,
    flavor: str = "clifford",
    seed: int = 0,
    edges: Sequence[tuple[int, int]] | None = None,
    two_qubit_density: float = 0.25,
    timing: GateTimingModel | None = None,
) -> list[tuple[ScheduledCircuit, str]]:
    """Fixed seeded set of MRB circuits reused verbatim across GA iterations."""
    if count < 1:
        raise ValueError("count must be >= 1")
    base = tuple(int(s) for s in seed) if isinstance(seed, (tuple, list)) else (int(seed),)
    out = []
    for i in range(count):
        spec = MRBSpec(
            width=width,
            depth=layers,
            two_qubit_density=two_qubit_density,
            flavor=flavor,
            edges=None if edges is None else tuple(edges),
            seed=base + (7, i),
        )
        out.append(mrb_circuit(spec, timing))
    return out
