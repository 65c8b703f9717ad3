"""Gate vocabulary shared by the scheduler, simulators, and workload builders.

Single-qubit gates are physical rotations (``x``, ``y``, ``h``, ``sx``) or the
hardware normal form ``zsxz`` = RZ(a) * SX * RZ(b) * SX * RZ(c); ``rz`` is a
virtual frame change with zero duration and no error.  Two-qubit gates are
``cx``, ``cz`` and ``swap``.  DD pulses use the dedicated ``dd`` kind carrying
a pulse-label token so that flip-angle errors apply to them independently of
circuit gates.
"""

from __future__ import annotations

import cmath
import math
from functools import lru_cache

import numpy as np

from .pauli import PulseLabel, pulse_unitary, rotation

__all__ = [
    "ONE_QUBIT_GATES",
    "TWO_QUBIT_GATES",
    "gate_unitary",
    "two_qubit_unitary",
    "is_clifford_gate",
    "zsxz_from_unitary",
    "unitary_from_zsxz",
    "inverse_1q",
    "conjugate_pauli",
    "random_clifford_1q",
    "clifford_unitaries_1q",
]

ONE_QUBIT_GATES = frozenset({"h", "x", "y", "sx", "zsxz", "rz"})
TWO_QUBIT_GATES = frozenset({"cx", "cz", "swap"})

_SQ2 = 1.0 / math.sqrt(2.0)

_CX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
_CZ = np.diag([1, 1, 1, -1]).astype(complex)
_SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)

# Exact error-free matrices (up to global phase) so that noiseless circuits
# compose bit-reproducibly.
_EXACT_1Q = {
    "x": np.array([[0, -1j], [-1j, 0]], dtype=complex),
    "y": np.array([[0, -1], [1, 0]], dtype=complex),
    "h": -1j * _SQ2 * np.array([[1, 1], [1, -1]], dtype=complex),
    "sx": _SQ2 * np.array([[1, -1j], [-1j, 1]], dtype=complex),
}

_AXES = {
    "x": np.array([1.0, 0.0, 0.0]),
    "y": np.array([0.0, 1.0, 0.0]),
    "h": np.array([_SQ2, 0.0, _SQ2]),
}


def _rz_matrix(theta: float) -> np.ndarray:
    return np.array(
        [[cmath.exp(-0.5j * theta), 0], [0, cmath.exp(0.5j * theta)]], dtype=complex
    )


def _sx_matrix(flip_angle_error: float) -> np.ndarray:
    if flip_angle_error == 0.0:
        return _EXACT_1Q["sx"].copy()
    return rotation(_AXES["x"], math.pi / 2 + flip_angle_error)


def unitary_from_zsxz(params, flip_angle_error: float = 0.0) -> np.ndarray:
    a, b, c = params
    sx = _sx_matrix(flip_angle_error)
    return _rz_matrix(a) @ sx @ _rz_matrix(b) @ sx @ _rz_matrix(c)


def gate_unitary(gate: str, params=(), flip_angle_error: float = 0.0) -> np.ndarray:
    """2x2 matrix of a 1q gate, with flat over-rotation of its physical
    rotation(s) by `flip_angle_error` (virtual rz is exact)."""
    if gate == "rz":
        return _rz_matrix(params[0])
    if gate == "zsxz":
        return unitary_from_zsxz(params, flip_angle_error)
    if gate == "dd":
        label = PulseLabel.from_token(params[0])
        identity_2pi = bool(params[1]) if len(params) > 1 else False
        return pulse_unitary(label, flip_angle_error, identity_2pi)
    if gate in ("x", "y", "h"):
        if flip_angle_error == 0.0:
            return _EXACT_1Q[gate].copy()
        return rotation(_AXES[gate], math.pi + flip_angle_error)
    if gate == "sx":
        return _sx_matrix(flip_angle_error)
    raise ValueError(f"unknown 1q gate {gate!r}")


def two_qubit_unitary(gate: str) -> np.ndarray:
    try:
        return {"cx": _CX, "cz": _CZ, "swap": _SWAP}[gate].copy()
    except KeyError:
        raise ValueError(f"unknown 2q gate {gate!r}") from None


def _is_clifford_angle(theta: float, tol: float = 1e-9) -> bool:
    return abs(theta / (math.pi / 2) - round(theta / (math.pi / 2))) < tol


def is_clifford_gate(gate: str, params=()) -> bool:
    if gate in ("x", "y", "h", "sx", "cx", "cz", "swap", "measure", "dd"):
        return True
    if gate == "rz":
        return _is_clifford_angle(params[0])
    if gate == "zsxz":
        return all(_is_clifford_angle(p) for p in params)
    return False


def zsxz_from_unitary(u: np.ndarray, tol: float = 1e-12):
    """Decompose a 1q unitary into hardware normal form, up to global phase.

    Returns ("rz", (theta,)) for diagonal gates and ("zsxz", (a, b, c))
    otherwise, with U ~ RZ(a) * SX * RZ(b) * SX * RZ(c).
    """
    det = u[0, 0] * u[1, 1] - u[0, 1] * u[1, 0]
    su = u / cmath.sqrt(det)
    # ZYZ Euler angles of su = RZ(phi) RY(theta) RZ(lam) up to phase.
    c_abs = abs(su[0, 0])
    s_abs = abs(su[1, 0])
    theta = 2.0 * math.atan2(s_abs, c_abs)
    if s_abs < tol:
        # Diagonal: phase difference is the whole gate.
        lam = cmath.phase(su[1, 1]) - cmath.phase(su[0, 0])
        return "rz", (lam % (2 * math.pi),)
    if c_abs < tol:
        # theta = pi: only phi - lam is defined; put it all in phi so that
        # Clifford inputs keep quarter-turn angles.
        phi = 2.0 * cmath.phase(su[1, 0])
        lam = 0.0
    else:
        g = cmath.phase(su[0, 0])
        phi = cmath.phase(su[1, 0]) - g
        lam = cmath.phase(-su[0, 1]) - g
    two_pi = 2 * math.pi
    return "zsxz", ((phi + math.pi) % two_pi, (theta + math.pi) % two_pi, lam % two_pi)


def decompose_unitary_1q(u: np.ndarray):
    """Alias with explicit naming for workload builders."""
    return zsxz_from_unitary(u)


def inverse_1q(gate: str, params=()):
    """(gate, params) realizing the inverse, in the same vocabulary."""
    if gate in ("x", "y", "h"):
        return gate, ()
    if gate == "rz":
        return "rz", (-params[0] % (2 * math.pi),)
    if gate == "dd":
        label = PulseLabel.from_token(params[0])
        flipped = PulseLabel(int(label) ^ 1)
        return "dd", (flipped.token,) + tuple(params[1:])
    u = gate_unitary(gate, params)
    return zsxz_from_unitary(u.conj().T)


# --- sign-free Pauli frame conjugation through Clifford gates ---------------

# Generator action on (x, z) bits per qubit:
#   h: swap x/z; s: z ^= x; sx: x ^= z; pauli gates: identity (signs ignored).
_GEN_SEQ = {
    "h": ("h",),
    "x": (),
    "y": (),
    "sx": ("sx",),
}


def _rz_gen_seq(theta: float) -> tuple[str, ...]:
    k = round(theta / (math.pi / 2)) % 4
    return ("s",) * k


def conjugate_pauli(gate: str, params, qubits, x: np.ndarray, z: np.ndarray) -> None:
    """Propagate a sign-free Pauli (x/z bit vectors) through one Clifford gate,
    updating in place.  Raises ValueError for non-Clifford gates."""
    if gate == "measure" or gate == "dd":
        # dd pulses are Pauli rotations: conjugation only changes signs.
        return
    if gate in ("x", "y"):
        return
    if gate == "cx":
        c, t = qubits
        x[t] ^= x[c]
        z[c] ^= z[t]
        return
    if gate == "cz":
        a, b = qubits
        new_za = z[a] ^ x[b]
        z[b] ^= x[a]
        z[a] = new_za
        return
    if gate == "swap":
        a, b = qubits
        x[a], x[b] = x[b], x[a]
        z[a], z[b] = z[b], z[a]
        return
    (q,) = qubits
    if gate == "h":
        x[q], z[q] = z[q], x[q]
        return
    if gate == "sx":
        x[q] ^= z[q]
        return
    if gate == "rz":
        if not _is_clifford_angle(params[0]):
            raise ValueError("cannot conjugate a Pauli through a non-Clifford rz")
        k = round(params[0] / (math.pi / 2)) % 4
        if k % 2:
            z[q] ^= x[q]
        return
    if gate == "zsxz":
        if not all(_is_clifford_angle(p) for p in params):
            raise ValueError("cannot conjugate a Pauli through a non-Clifford zsxz")
        a, b, c = params
        for sub, sub_params in (
            ("rz", (c,)),
            ("sx", ()),
            ("rz", (b,)),
            ("sx", ()),
            ("rz", (a,)),
        ):
            conjugate_pauli(sub, sub_params, (q,), x, z)
        return
    raise ValueError(f"cannot conjugate a Pauli through gate {gate!r}")


@lru_cache(maxsize=1)
def clifford_unitaries_1q() -> tuple[tuple[tuple[str, tuple], np.ndarray], ...]:
    """The 24 single-qubit Cliffords as (gate spec, matrix) pairs.

    Enumerated by canonicalizing all zsxz/rz forms with quarter-turn angles
    up to global phase.
    """
    quarter = [k * math.pi / 2 for k in range(4)]
    seen: dict[tuple, tuple[tuple[str, tuple], np.ndarray]] = {}

    def canon_key(u: np.ndarray) -> tuple:
        # Fix global phase by the first nonzero entry.
        flat = u.ravel()
        ref = flat[np.argmax(np.abs(flat) > 1e-9)]
        v = u * (abs(ref) / ref)
        return tuple(np.round(v.ravel(), 9))

    for th in quarter:
        u = gate_unitary("rz", (th,))
        seen.setdefault(canon_key(u), (("rz", (th,)), u))
    for a in quarter:
        for b in quarter:
            for c in quarter:
                spec = ("zsxz", (a, b, c))
                u = gate_unitary(*spec)
                seen.setdefault(canon_key(u), (spec, u))
    cliffords = tuple(seen.values())
    assert len(cliffords) == 24, f"expected 24 1q Cliffords, found {len(cliffords)}"
    return cliffords


def random_clifford_1q(rng: np.random.Generator) -> tuple[str, tuple]:
    """Uniformly random 1q Clifford gate spec."""
    cliffords = clifford_unitaries_1q()
    return cliffords[int(rng.integers(len(cliffords)))][0]
