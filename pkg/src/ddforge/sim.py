"""Monte-Carlo trajectory simulator and ideal simulators.

Noise model: per-trajectory quasi-static fields h ~ Normal(mean, sigma) per
qubit per axis, always-on ZZ couplings on designated edges, systematic
flip-angle over-rotation of physical 1q rotations, optional Markovian
dephasing, optional readout flips.

Evolution semantics: the timeline is sliced at instruction boundaries.  ZZ
phases (diagonal, mutually commuting) accumulate exactly over every slice in
which the edge is active (both endpoints outside two-qubit-gate/measurement
windows) and are flushed right before any non-diagonal operation.  Each
qubit's field evolution is applied as one exact rotation per idle chunk
between that qubit's own instructions.  This is exact when the noise is
fields-only or ZZ-only; in the mixed case the reordering differs from the
joint exponential by O(h*J*dt^2) cross terms, far below the sampling noise
at the magnitudes used here.

Virtual rz gates are exact and instantaneous; identity DD slots are pure
schedule bookkeeping (fields and ZZ keep acting through them) unless
`identity_as_2pi_pulse` promotes Im to a physical 2*pi rotation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels as _k
from .gates import TWO_QUBIT_GATES, gate_unitary, two_qubit_unitary
from .pauli import PulseLabel
from .scheduler import Instruction, ScheduledCircuit
from .stabilizer import (
    NondeterministicOutcome,
    clifford_distribution,
    is_clifford_circuit,
    target_bitstring as _stab_target,
)

__all__ = [
    "NoiseModel",
    "CountsDistribution",
    "TooManyQubits",
    "NondeterministicOutcome",
    "simulate_counts",
    "simulate_ideal",
    "statevector_probabilities",
    "target_bitstring",
    "desk_device_noise",
    "DEFAULT_STATEVECTOR_LIMIT",
]

DEFAULT_STATEVECTOR_LIMIT = 14


class TooManyQubits(ValueError):
    """Circuit exceeds the statevector limit."""


def _per_qubit(value, n: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise ValueError(f"{name} must be scalar or length-{n}")
    if (arr < 0).any():
        raise ValueError(f"{name} entries must be >= 0")
    return arr


@dataclass(frozen=True)
class NoiseModel:
    """Stochastic noise parameters; all rates in rad/ns or 1/ns.

    sigma_* are the per-axis std-devs of the quasi-static random fields
    (scalar or per-qubit); mean_field optionally adds a deterministic static
    field (n, 3) for oracle tests.  zz_coupling maps coupling edges to J.
    """

    sigma_x: float | Sequence[float] = 0.0
    sigma_y: float | Sequence[float] = 0.0
    sigma_z: float | Sequence[float] = 0.0
    mean_field: Sequence | None = None
    zz_coupling: Mapping[tuple[int, int], float] = field(default_factory=dict)
    flip_angle_error: float = 0.0
    markovian_dephasing_rate: float | Sequence[float] = 0.0
    readout_error: float | Sequence[float] | None = None
    identity_as_2pi_pulse: bool = False

    def __post_init__(self):
        for e, j in self.zz_coupling.items():
            if j < 0:
                raise ValueError(f"negative ZZ coupling on edge {e}")
        if self.readout_error is not None:
            arr = np.atleast_1d(np.asarray(self.readout_error, dtype=float))
            if ((arr < 0) | (arr > 0.5)).any():
                raise ValueError("readout flip probabilities must lie in [0, 0.5]")

    def sigmas(self, n: int) -> np.ndarray:
        """(n, 3) per-qubit std-devs in axis order x, y, z."""
        return np.stack(
            [
                _per_qubit(self.sigma_x, n, "sigma_x"),
                _per_qubit(self.sigma_y, n, "sigma_y"),
                _per_qubit(self.sigma_z, n, "sigma_z"),
            ],
            axis=1,
        )

    def means(self, n: int) -> np.ndarray:
        if self.mean_field is None:
            return np.zeros((n, 3))
        arr = np.asarray(self.mean_field, dtype=float)
        if arr.shape != (n, 3):
            raise ValueError(f"mean_field must have shape ({n}, 3)")
        return arr

    def dephasing(self, n: int) -> np.ndarray:
        return _per_qubit(self.markovian_dephasing_rate, n, "dephasing rate")

    def readout(self, n: int) -> np.ndarray | None:
        if self.readout_error is None:
            return None
        return _per_qubit(self.readout_error, n, "readout_error")

    def has_fields(self, n: int) -> bool:
        return bool(self.sigmas(n).any() or self.means(n).any())

    def scaled(self, factor: float) -> "NoiseModel":
        """All noise magnitudes multiplied by one factor (readout too)."""

        def sc(v):
            return tuple(np.asarray(v, dtype=float) * factor) if np.ndim(v) else float(v) * factor

        return NoiseModel(
            sigma_x=sc(self.sigma_x),
            sigma_y=sc(self.sigma_y),
            sigma_z=sc(self.sigma_z),
            mean_field=None if self.mean_field is None else tuple(
                tuple(row) for row in np.asarray(self.mean_field) * factor
            ),
            zz_coupling={e: j * factor for e, j in self.zz_coupling.items()},
            flip_angle_error=self.flip_angle_error * factor,
            markovian_dephasing_rate=sc(self.markovian_dephasing_rate),
            readout_error=None if self.readout_error is None else sc(self.readout_error),
            identity_as_2pi_pulse=self.identity_as_2pi_pulse,
        )


def desk_device_noise(
    coupling_edges: Iterable[tuple[int, int]], scale: float = 1.0
) -> NoiseModel:
    """Default noise preset sized so a 10-qubit BV circuit lands at bare
    success probability ~0.1-0.4, leaving headroom for DD."""
    base = NoiseModel(
        sigma_x=5e-5,
        sigma_y=5e-5,
        sigma_z=2e-4,
        zz_coupling={tuple(sorted(e)): 1e-4 for e in coupling_edges},
        flip_angle_error=0.02,
    )
    return base if scale == 1.0 else base.scaled(scale)


@dataclass(frozen=True)
class CountsDistribution:
    """Measured bitstring histogram."""

    counts: dict[str, int]
    shots: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise ValueError("counts must sum to shots")
        lengths = {len(k) for k in self.counts}
        if len(lengths) > 1:
            raise ValueError("inconsistent bitstring lengths")

    @property
    def num_bits(self) -> int:
        return len(next(iter(self.counts))) if self.counts else 0

    def probability(self, bitstring: str) -> float:
        return self.counts.get(bitstring, 0) / self.shots

    def probabilities(self) -> dict[str, float]:
        return {k: v / self.shots for k, v in self.counts.items()}

    def to_json_dict(self) -> dict:
        return {"shots": self.shots, "counts": dict(sorted(self.counts.items()))}

    @classmethod
    def from_json_dict(cls, d: dict) -> "CountsDistribution":
        return cls(counts=dict(d["counts"]), shots=int(d["shots"]))


# --------------------------------------------------------------------------
# execution plan
# --------------------------------------------------------------------------


@dataclass
class _Plan:
    num_qubits: int
    steps: list
    measured: tuple[int, ...]
    num_field_chunks: int


def _z_signs(n: int, q: int) -> np.ndarray:
    """sigma_z eigenvalue (+1/-1) of qubit q per basis index."""
    idx = np.arange(1 << n)
    bit = (idx >> (n - 1 - q)) & 1
    return 1.0 - 2.0 * bit


def _build_plan(circuit: ScheduledCircuit, noise: NoiseModel | None) -> _Plan:
    n = circuit.num_qubits
    eps = noise.flip_angle_error if noise else 0.0
    identity_2pi = bool(noise.identity_as_2pi_pulse) if noise else False
    zz = dict(noise.zz_coupling) if noise else {}
    fields_on = noise.has_fields(n) if noise else False
    deph = noise.dephasing(n) if noise else np.zeros(n)
    deph_on = bool(deph.any())

    def is_noop_identity(ins: Instruction) -> bool:
        if ins.gate != "dd":
            return False
        label = PulseLabel.from_token(ins.params[0])
        if label is PulseLabel.Ip:
            return True
        return label is PulseLabel.Im and not identity_2pi

    physical = [i for i in circuit.instructions if not is_noop_identity(i)]
    gate_like = [i for i in physical if i.gate != "measure"]
    measures = [i for i in physical if i.gate == "measure"]
    meas_start = min((m.t0 for m in measures), default=None)

    # Blocking windows suspend ZZ on edges touching their qubits.
    blocking: list[tuple[float, float, tuple[int, ...]]] = [
        (i.t0, i.end, i.qubits)
        for i in physical
        if i.gate in TWO_QUBIT_GATES or i.gate == "measure"
    ]

    times = sorted(
        {i.t0 for i in physical} | {i.end for i in physical if i.duration > 0}
    )
    gates_at: dict[float, list[Instruction]] = {}
    for i in gate_like:
        gates_at.setdefault(i.t0, []).append(i)

    zsign_cache: dict[int, np.ndarray] = {}

    def zsign(q: int) -> np.ndarray:
        if q not in zsign_cache:
            zsign_cache[q] = _z_signs(n, q)
        return zsign_cache[q]

    steps: list = []
    pending_angles: np.ndarray | None = None
    num_chunks = 0

    def add_angles(vec: np.ndarray) -> None:
        nonlocal pending_angles
        if pending_angles is None:
            pending_angles = vec.copy()
        else:
            pending_angles += vec

    def flush_diag() -> None:
        nonlocal pending_angles
        if pending_angles is not None and np.any(pending_angles):
            steps.append(("diag", np.exp(-1j * pending_angles)))
        pending_angles = None

    def edge_active_span(a: int, b: int, t1: float, t2: float) -> float:
        """Length of [t1, t2) during which edge (a, b) is unblocked."""
        span = t2 - t1
        if span <= 0:
            return 0.0
        cuts = []
        for s, e, qs in blocking:
            if (a in qs or b in qs) and e > t1 and s < t2:
                cuts.append((max(s, t1), min(e, t2)))
        if not cuts:
            return span
        cuts.sort()
        covered = 0.0
        cur_s, cur_e = cuts[0]
        for s, e in cuts[1:]:
            if s > cur_e:
                covered += cur_e - cur_s
                cur_s, cur_e = s, e
            else:
                cur_e = max(cur_e, e)
        covered += cur_e - cur_s
        return span - covered

    def flush_chunk(q: int, until: float) -> None:
        nonlocal num_chunks
        dur = until - cursor[q]
        if dur <= 0:
            return
        if fields_on:
            flush_diag()
            steps.append(("field", q, dur))
            num_chunks += 1
        if deph_on and deph[q] > 0:
            steps.append(("deph", q, dur))

    cursor = {q: 0.0 for q in range(n)}

    def accumulate_zz(t1: float, t2: float) -> None:
        if not zz or t2 <= t1:
            return
        for (a, b), j in zz.items():
            dur = edge_active_span(a, b, t1, t2)
            if dur > 0:
                add_angles((j * dur / 4.0) * zsign(a) * zsign(b))

    prev_t = 0.0
    for t in times:
        accumulate_zz(prev_t, t)
        prev_t = t
        if meas_start is not None and t >= meas_start:
            break
        for ins in sorted(gates_at.get(t, ()), key=lambda i: (i.duration > 0, i.qubits)):
            if ins.gate == "rz":
                # Diagonal: merge into the pending phase accumulator.
                for q in ins.qubits:
                    flush_chunk(q, t)
                    cursor[q] = t
                add_angles((ins.params[0] / 2.0) * zsign(ins.qubits[0]))
                continue
            flush_diag()
            for q in ins.qubits:
                flush_chunk(q, t)
                cursor[q] = ins.end
            if len(ins.qubits) == 1:
                mat = gate_unitary(ins.gate, ins.params, eps)
                steps.append(("u1", ins.qubits[0], mat))
            else:
                steps.append(("u2", ins.qubits[0], ins.qubits[1], two_qubit_unitary(ins.gate)))

    if measures:
        # Pending diagonal phases are unobservable in the Z basis; only the
        # measured qubits' trailing field chunks matter.
        pending_angles = None
        for m in sorted(measures, key=lambda i: i.qubits):
            flush_chunk(m.qubits[0], m.t0)
            cursor[m.qubits[0]] = m.end

    return _Plan(
        num_qubits=n,
        steps=steps,
        measured=circuit.measured_qubits,
        num_field_chunks=num_chunks,
    )


# --------------------------------------------------------------------------
# execution
# --------------------------------------------------------------------------


def _field_rotation_matrices(h: np.ndarray, dur: float) -> np.ndarray:
    """(T, 2, 2) unitaries exp(-i*dur*(h.sigma)/2) for per-trajectory h (T,3)."""
    norm = np.linalg.norm(h, axis=1)
    theta = norm * dur
    c = np.cos(theta / 2.0)
    s = np.sin(theta / 2.0)
    safe = np.where(norm > 0, norm, 1.0)
    nx, ny, nz = (h[:, 0] / safe, h[:, 1] / safe, h[:, 2] / safe)
    mats = np.empty((h.shape[0], 2, 2), dtype=np.complex128)
    mats[:, 0, 0] = c - 1j * s * nz
    mats[:, 0, 1] = -1j * s * nx - s * ny
    mats[:, 1, 0] = -1j * s * nx + s * ny
    mats[:, 1, 1] = c + 1j * s * nz
    return mats


def _execute_plan(
    plan: _Plan,
    ntraj: int,
    fields: np.ndarray | None,
    deph_rates: np.ndarray,
    rng_deph: np.random.Generator | None,
) -> np.ndarray:
    n = plan.num_qubits
    dim = 1 << n
    state = np.zeros((ntraj, dim), dtype=np.complex128)
    state[:, 0] = 1.0
    buf = np.empty_like(state)
    for step in plan.steps:
        kind = step[0]
        if kind == "diag":
            _k.apply_diag_inplace(state, step[1])
        elif kind == "u1":
            _, q, mat = step
            stride = 1 << (n - 1 - q)
            _k.apply_1q_shared(
                state, buf, mat[0, 0], mat[0, 1], mat[1, 0], mat[1, 1], stride
            )
            state, buf = buf, state
        elif kind == "u2":
            _, qa, qb, mat = step
            _k.apply_2q_shared(
                state, buf, mat, 1 << (n - 1 - qa), 1 << (n - 1 - qb)
            )
            state, buf = buf, state
        elif kind == "field":
            _, q, dur = step
            mats = _field_rotation_matrices(fields[:, q, :], dur)
            _k.apply_1q_pertraj(state, buf, mats, 1 << (n - 1 - q))
            state, buf = buf, state
        elif kind == "deph":
            _, q, dur = step
            p = 1.0 - np.exp(-deph_rates[q] * dur)
            mask = rng_deph.random(ntraj) < p
            if mask.any():
                _k.apply_zflip_masked(state, mask, 1 << (n - 1 - q))
        else:  # pragma: no cover
            raise AssertionError(f"unknown step {kind}")
    norms = np.abs(state) ** 2
    total = norms.sum(axis=1)
    if np.max(np.abs(total - 1.0)) > 1e-10:
        raise RuntimeError("statevector norm drifted beyond 1e-10")
    return state


def _measured_probs(state: np.ndarray, n: int, measured: Sequence[int]) -> np.ndarray:
    """(T, 2^m) marginal over measured qubits, first measured qubit = MSB."""
    ntraj = state.shape[0]
    probs = (np.abs(state) ** 2).reshape((ntraj,) + (2,) * n)
    axes_measured = [1 + q for q in measured]
    axes_rest = [1 + q for q in range(n) if q not in set(measured)]
    probs = probs.transpose([0] + axes_measured + axes_rest)
    probs = probs.reshape(ntraj, 1 << len(measured), -1).sum(axis=2)
    return probs


def simulate_counts(
    circuit: ScheduledCircuit,
    noise: NoiseModel | None,
    shots: int,
    seed,
    trajectories: int | None = None,
    statevector_limit: int = DEFAULT_STATEVECTOR_LIMIT,
) -> CountsDistribution:
    """Sample measurement counts from the noisy trajectory simulator.

    Each trajectory draws fresh static fields; by default one trajectory per
    shot.  `trajectories` caps the number of field draws and spreads the
    shots over them (an unbiased variance/runtime tradeoff for large GA
    sweeps).  Deterministic given (circuit, noise, shots, seed).
    """
    n = circuit.num_qubits
    if n > statevector_limit:
        raise TooManyQubits(f"{n} qubits exceeds statevector limit {statevector_limit}")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if not circuit.measured_qubits:
        raise ValueError("circuit measures no qubits")
    ntraj = shots if trajectories is None else max(1, min(trajectories, shots))

    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    ss_fields, ss_deph, ss_meas, ss_read = ss.spawn(4)

    noise = noise or NoiseModel()
    plan = _build_plan(circuit, noise)

    fields = None
    if noise.has_fields(n):
        rng_f = np.random.default_rng(ss_fields)
        fields = noise.means(n) + noise.sigmas(n) * rng_f.standard_normal((ntraj, n, 3))
    deph = noise.dephasing(n)
    rng_deph = np.random.default_rng(ss_deph) if deph.any() else None

    state = _execute_plan(plan, ntraj, fields, deph, rng_deph)
    probs = _measured_probs(state, n, plan.measured)
    probs /= probs.sum(axis=1, keepdims=True)

    base, extra = divmod(shots, ntraj)
    shots_per = np.full(ntraj, base, dtype=np.int64)
    shots_per[:extra] += 1

    rng_meas = np.random.default_rng(ss_meas)
    m = len(plan.measured)
    outcome_chunks = []
    for t in range(ntraj):
        if shots_per[t] == 0:
            continue
        cnt = rng_meas.multinomial(shots_per[t], probs[t])
        nz = np.flatnonzero(cnt)
        outcome_chunks.append(np.repeat(nz, cnt[nz]))
    outcomes = np.concatenate(outcome_chunks)

    readout = noise.readout(n)
    if readout is not None:
        rng_read = np.random.default_rng(ss_read)
        for j, q in enumerate(plan.measured):
            p = readout[q]
            if p > 0:
                flips = rng_read.random(outcomes.shape[0]) < p
                outcomes = outcomes ^ (flips.astype(np.int64) << (m - 1 - j))

    values, cnts = np.unique(outcomes, return_counts=True)
    counts = {format(int(v), f"0{m}b"): int(c) for v, c in zip(values, cnts)}
    return CountsDistribution(counts=counts, shots=shots)


def statevector_probabilities(
    circuit: ScheduledCircuit,
    statevector_limit: int = DEFAULT_STATEVECTOR_LIMIT,
    tol: float = 1e-12,
) -> dict[str, float]:
    """Exact noiseless output distribution over measured qubits."""
    n = circuit.num_qubits
    if n > statevector_limit:
        raise TooManyQubits(f"{n} qubits exceeds statevector limit {statevector_limit}")
    if not circuit.measured_qubits:
        raise ValueError("circuit measures no qubits")
    plan = _build_plan(circuit, None)
    state = _execute_plan(plan, 1, None, np.zeros(n), None)
    probs = _measured_probs(state, n, plan.measured)[0]
    m = len(plan.measured)
    return {
        format(v, f"0{m}b"): float(p) for v, p in enumerate(probs) if p > tol
    }


def simulate_ideal(
    circuit: ScheduledCircuit,
    statevector_limit: int = DEFAULT_STATEVECTOR_LIMIT,
) -> dict[str, float]:
    """Exact noiseless output distribution.

    Clifford circuits take the stabilizer path (no width limit at desk
    scale); everything else requires n <= statevector_limit.
    """
    if is_clifford_circuit(circuit):
        return clifford_distribution(circuit)
    if circuit.num_qubits > statevector_limit:
        raise TooManyQubits(
            f"non-Clifford circuit with {circuit.num_qubits} qubits exceeds "
            f"statevector limit {statevector_limit}"
        )
    return statevector_probabilities(circuit, statevector_limit)


def target_bitstring(circuit: ScheduledCircuit) -> str:
    """Deterministic Clifford outcome over measured qubits (qubit-index order)."""
    return _stab_target(circuit)
