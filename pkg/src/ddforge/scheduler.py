"""Timed circuit representation, ASAP scheduling, idle-gap detection, and DD
pulse insertion.

Times are in nanoseconds.  Only final measurements exist; they are aligned to
start simultaneously (at the latest ready time among measured qubits), which
turns early-finishing qubits' tail idles into insertable gaps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .gates import ONE_QUBIT_GATES, TWO_QUBIT_GATES
from .strategy import ColorAssignment, DDStrategy, TimingMode

__all__ = [
    "Instruction",
    "GateTimingModel",
    "ScheduledCircuit",
    "IdleGap",
    "InsertionReport",
    "InvalidEdge",
    "schedule_asap",
    "find_idle_gaps",
    "insert_dd",
]

_TIME_EPS = 1e-6


class InvalidEdge(ValueError):
    """A two-qubit gate references a pair outside the coupling graph."""


@dataclass(frozen=True)
class Instruction:
    gate: str
    qubits: tuple[int, ...]
    t0: float
    duration: float
    params: tuple = ()

    @property
    def end(self) -> float:
        return self.t0 + self.duration

    def to_json_dict(self) -> dict:
        return {
            "gate": self.gate,
            "qubits": list(self.qubits),
            "t0": self.t0,
            "dt": self.duration,
            "params": list(self.params),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Instruction":
        return cls(
            gate=d["gate"],
            qubits=tuple(d["qubits"]),
            t0=float(d["t0"]),
            duration=float(d["dt"]),
            params=tuple(d.get("params", ())),
        )


@dataclass(frozen=True)
class GateTimingModel:
    """Durations used for scheduling, in ns (all strictly positive)."""

    one_qubit_duration: float = 50.0
    two_qubit_duration: float = 500.0
    pulse_duration: float = 50.0
    measurement_duration: float = 700.0

    def __post_init__(self):
        for name in (
            "one_qubit_duration",
            "two_qubit_duration",
            "pulse_duration",
            "measurement_duration",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")

    def duration_of(self, gate: str) -> float:
        if gate == "rz":
            return 0.0
        if gate == "dd":
            return self.pulse_duration
        if gate == "measure":
            return self.measurement_duration
        if gate in TWO_QUBIT_GATES:
            return self.two_qubit_duration
        if gate in ONE_QUBIT_GATES:
            return self.one_qubit_duration
        raise ValueError(f"unknown gate kind {gate!r}")


@dataclass(frozen=True)
class IdleGap:
    qubit: int
    start: float
    end: float

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class ScheduledCircuit:
    """Immutable timed instruction list on a coupling graph."""

    num_qubits: int
    instructions: tuple[Instruction, ...]
    coupling_edges: tuple[tuple[int, int], ...] = ()
    measured_qubits: tuple[int, ...] = ()

    def __post_init__(self):
        # Zero-duration (virtual) instructions at time t always precede
        # positive-duration ones starting at t: anything emitted after a
        # windowed gate is scheduled at or past that gate's end.
        object.__setattr__(
            self,
            "instructions",
            tuple(
                sorted(self.instructions, key=lambda i: (i.t0, i.duration > 0, i.qubits))
            ),
        )
        object.__setattr__(
            self,
            "coupling_edges",
            tuple(sorted(tuple(sorted(e)) for e in self.coupling_edges)),
        )
        object.__setattr__(self, "measured_qubits", tuple(sorted(self.measured_qubits)))
        self.validate()

    def validate(self) -> None:
        busy: dict[int, list[tuple[float, float]]] = {}
        for ins in self.instructions:
            if ins.t0 < -_TIME_EPS:
                raise ValueError(f"negative start time on {ins}")
            if ins.duration < 0 or (ins.duration == 0 and ins.gate != "rz"):
                raise ValueError(f"non-positive duration on {ins}")
            for q in ins.qubits:
                if not (0 <= q < self.num_qubits):
                    raise ValueError(f"qubit {q} out of range in {ins}")
                if ins.duration > 0:
                    busy.setdefault(q, []).append((ins.t0, ins.end))
        for q, spans in busy.items():
            spans.sort()
            for (s0, e0), (s1, _e1) in zip(spans, spans[1:]):
                if s1 < e0 - _TIME_EPS:
                    raise ValueError(
                        f"overlapping instructions on qubit {q}: "
                        f"[{s0},{e0}) and starting {s1}"
                    )

    @property
    def duration(self) -> float:
        return max((i.end for i in self.instructions), default=0.0)

    def instructions_on(self, qubit: int) -> list[Instruction]:
        return [i for i in self.instructions if qubit in i.qubits]

    def interaction_edges(self) -> tuple[tuple[int, int], ...]:
        """Edges that actually carry a two-qubit gate (coloring input)."""
        pairs = {
            tuple(sorted(i.qubits))
            for i in self.instructions
            if i.gate in TWO_QUBIT_GATES
        }
        return tuple(sorted(pairs))

    def to_json_dict(self) -> dict:
        return {
            "qubits": self.num_qubits,
            "edges": [list(e) for e in self.coupling_edges],
            "measured": list(self.measured_qubits),
            "instructions": [i.to_json_dict() for i in self.instructions],
        }

    def serialize(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, d: dict) -> "ScheduledCircuit":
        return cls(
            num_qubits=int(d["qubits"]),
            instructions=tuple(
                Instruction.from_json_dict(x) for x in d["instructions"]
            ),
            coupling_edges=tuple(tuple(e) for e in d.get("edges", ())),
            measured_qubits=tuple(d.get("measured", ())),
        )


def schedule_asap(
    ops: Sequence[tuple],
    num_qubits: int,
    coupling_edges: Iterable[tuple[int, int]] = (),
    measured_qubits: Iterable[int] = (),
    timing: GateTimingModel | None = None,
) -> ScheduledCircuit:
    """As-soon-as-possible schedule of an abstract gate list.

    `ops` entries are (gate, qubits) or (gate, qubits, params).  Each gate
    starts at the max end-time of its qubits' previous instructions.  Final
    measurements are appended for `measured_qubits`, aligned at their common
    latest ready time.
    """
    timing = timing or GateTimingModel()
    edges = {tuple(sorted(e)) for e in coupling_edges}
    ready = [0.0] * num_qubits
    instructions: list[Instruction] = []
    for op in ops:
        gate, qubits = op[0], tuple(op[1])
        params = tuple(op[2]) if len(op) > 2 else ()
        if len(qubits) == 2 and gate in TWO_QUBIT_GATES:
            if tuple(sorted(qubits)) not in edges:
                raise InvalidEdge(f"{gate} on {qubits} is off the coupling graph")
        t0 = max(ready[q] for q in qubits)
        dur = timing.duration_of(gate)
        instructions.append(Instruction(gate, qubits, t0, dur, params))
        for q in qubits:
            ready[q] = t0 + dur
    measured = tuple(sorted(set(measured_qubits)))
    if measured:
        t_meas = max(ready[q] for q in measured)
        for q in measured:
            instructions.append(
                Instruction("measure", (q,), t_meas, timing.measurement_duration)
            )
    return ScheduledCircuit(
        num_qubits=num_qubits,
        instructions=tuple(instructions),
        coupling_edges=tuple(edges),
        measured_qubits=measured,
    )


def find_idle_gaps(circuit: ScheduledCircuit, min_duration: float = 0.0) -> list[IdleGap]:
    """Maximal per-qubit idle intervals of length >= min_duration.

    Only intervals strictly between a qubit's first and last instruction
    count: leading idle before its first gate and trailing idle after its
    last instruction are not insertable.
    """
    if min_duration < 0:
        raise ValueError("min_duration must be >= 0")
    gaps: list[IdleGap] = []
    per_qubit: dict[int, list[Instruction]] = {}
    for ins in circuit.instructions:
        if ins.duration == 0:
            continue
        for q in ins.qubits:
            per_qubit.setdefault(q, []).append(ins)
    for q in sorted(per_qubit):
        spans = sorted((i.t0, i.end) for i in per_qubit[q])
        for (_s0, e0), (s1, _e1) in zip(spans, spans[1:]):
            if s1 - e0 >= max(min_duration, _TIME_EPS):
                gaps.append(IdleGap(q, e0, s1))
    gaps.sort(key=lambda g: (g.qubit, g.start))
    return gaps


@dataclass
class InsertionReport:
    gaps_total: int = 0
    gaps_filled: int = 0
    gaps_skipped_short: int = 0
    pulses_inserted: int = 0


def _pulse_starts(
    t0: float, span: float, count: int, width: float, mode: TimingMode
) -> list[float]:
    slack = span - count * width
    if mode is TimingMode.SYMMETRIC:
        lead = slack / (2 * count)
        pitch = slack / count + width
        return [t0 + lead + k * pitch for k in range(count)]
    pitch = width + (slack / (count - 1) if count > 1 else 0.0)
    if mode is TimingMode.ASYM_EARLY:
        return [t0 + k * pitch for k in range(count)]
    # asym_late: time-mirror of asym_early (last pulse flush with the gap end).
    last_start = t0 + span - width
    return [last_start - (count - 1 - k) * pitch for k in range(count)]


def insert_dd(
    circuit: ScheduledCircuit,
    strategy: DDStrategy,
    coloring: ColorAssignment,
    timing: GateTimingModel | None = None,
    repetitions: int = 1,
    return_report: bool = False,
):
    """Insert the per-color DD sequences into every sufficiently long gap.

    A gap of duration T on a color-c qubit receives the color's sequence
    (repeated `repetitions` times) iff T >= L*t_p; shorter gaps are skipped
    silently and tallied in the report.  Identity labels occupy schedule
    slots like any pulse.  Noiseless semantics are unchanged: sequences
    frame-multiply to identity and Ip/Im are identities.
    """
    timing = timing or GateTimingModel()
    if len(coloring.colors) < circuit.num_qubits:
        raise ValueError("coloring must cover every circuit qubit")
    used_colors = {coloring.color_of(q) for q in range(circuit.num_qubits)}
    if max(used_colors) > strategy.num_colors:
        raise ValueError(
            f"strategy has {strategy.num_colors} colors but coloring uses {max(used_colors)}"
        )
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    t_p = timing.pulse_duration
    report = InsertionReport()
    new_instructions = list(circuit.instructions)
    for gap in find_idle_gaps(circuit, 0.0):
        report.gaps_total += 1
        seq = strategy.sequence_for_color(coloring.color_of(gap.qubit))
        mode = strategy.mode_for_color(coloring.color_of(gap.qubit))
        pulses = seq.pulses * repetitions
        count = len(pulses)
        if gap.duration < count * t_p - _TIME_EPS:
            report.gaps_skipped_short += 1
            continue
        starts = _pulse_starts(gap.start, gap.duration, count, t_p, mode)
        for label, s in zip(pulses, starts):
            new_instructions.append(
                Instruction("dd", (gap.qubit,), s, t_p, (label.token,))
            )
        report.gaps_filled += 1
        report.pulses_inserted += count
    out = ScheduledCircuit(
        num_qubits=circuit.num_qubits,
        instructions=tuple(new_instructions),
        coupling_edges=circuit.coupling_edges,
        measured_qubits=circuit.measured_qubits,
    )
    return (out, report) if return_report else out
