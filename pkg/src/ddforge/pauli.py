"""Algebra of the 8-element decoupling group and its phase-free Pauli frames.

The pulse alphabet is ``{Ip, Im, Xp, Xm, Yp, Ym, Zp, Zm}``: pi rotations about
the Pauli axes in either direction, plus two identity slots.  Discarding signs
and global phases, each pulse reduces to its *frame* -- an element of the
quotient group {I, X, Y, Z}, which is abelian (isomorphic to Z2 x Z2) and
self-inverse.  All sequence-validity bookkeeping (identity products, crossover
completions, mutation repairs) happens at the frame level; the signed labels
only matter when pulses are compiled to physical rotations.
"""

from __future__ import annotations

import enum
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "PauliFrame",
    "PulseLabel",
    "frame_product",
    "completion_frame",
    "labels_for_frame",
    "pulses_from_group_path",
    "pulse_unitary",
]


class PauliFrame(enum.IntEnum):
    """Phase-quotient Pauli group {I, X, Y, Z}.

    Encoded on two bits so that the group law is XOR: X*Y = Z, every element
    is its own inverse, and the empty product is I.
    """

    I = 0
    X = 1
    Y = 2
    Z = 3

    def __mul__(self, other: "PauliFrame") -> "PauliFrame":
        return PauliFrame(int(self) ^ int(other))

    @property
    def inverse(self) -> "PauliFrame":
        return self

    @property
    def symbol(self) -> str:
        return self.name


class PulseLabel(enum.IntEnum):
    """One of the 8 signed pulse labels.

    The integer code is ``frame << 1 | sign_bit`` with sign_bit 0 for "p"
    (positive rotation) and 1 for "m" (negative rotation), so ``label >> 1``
    recovers the frame.  This packing is shared with the vectorized GA
    engine, which manipulates raw uint8 codes.
    """

    Ip = 0
    Im = 1
    Xp = 2
    Xm = 3
    Yp = 4
    Ym = 5
    Zp = 6
    Zm = 7

    @property
    def frame(self) -> PauliFrame:
        return PauliFrame(int(self) >> 1)

    @property
    def axis(self) -> str:
        return "IXYZ"[int(self) >> 1]

    @property
    def sign(self) -> int:
        """+1 for the p labels, -1 for the m labels."""
        return -1 if int(self) & 1 else 1

    @property
    def token(self) -> str:
        """Two-character serialization, e.g. ``"Xp"``."""
        return self.axis + ("m" if int(self) & 1 else "p")

    @classmethod
    def from_token(cls, token: str) -> "PulseLabel":
        try:
            return _TOKEN_TO_LABEL[token]
        except KeyError:
            raise ValueError(f"unknown pulse label {token!r}") from None


_TOKEN_TO_LABEL = {lab.token: lab for lab in PulseLabel}

ALL_LABELS: tuple[PulseLabel, ...] = tuple(PulseLabel)
GROUP_SIZE = len(ALL_LABELS)


def frame_product(pulses: Iterable[PulseLabel | PauliFrame]) -> PauliFrame:
    """Product of the frames of `pulses` in the phase-discarding quotient.

    Accepts labels or frames; an empty iterable yields I.
    """
    acc = 0
    for p in pulses:
        acc ^= int(p) >> 1 if isinstance(p, PulseLabel) else int(p)
    return PauliFrame(acc)


def completion_frame(prefix: PauliFrame, suffix: PauliFrame) -> PauliFrame:
    """The unique frame f with prefix * f * suffix = I.

    The quotient is abelian and self-inverse, so f = prefix * suffix.
    """
    return PauliFrame(int(prefix) ^ int(suffix))


def labels_for_frame(frame: PauliFrame) -> set[PulseLabel]:
    """The two signed labels carrying `frame` (sign degeneracy of the group)."""
    base = int(frame) << 1
    return {PulseLabel(base), PulseLabel(base | 1)}


def pulses_from_group_path(path: Sequence[PauliFrame]) -> list[PauliFrame]:
    """Map a toggling-frame path (g_1 .. g_{L-1}) to its L pulse frames.

    The pulses realizing consecutive conjugations by the path elements are
    p_1 = g_1, p_j = g_{j-1} * g_j for interior j, p_L = g_{L-1} (inverses
    coincide with the elements in the quotient).  The result always
    frame-multiplies to the identity.
    """
    if not path:
        raise ValueError("group path must be non-empty")
    gs = [PauliFrame(int(g)) for g in path]
    pulses = [gs[0]]
    for prev, cur in zip(gs, gs[1:]):
        pulses.append(prev * cur)
    pulses.append(gs[-1])
    return pulses


_SIGMA = {
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

# Exact pi rotations exp(-i*s*pi*sigma/2); hand-coded so that error-free
# pulses compose to exact identities (no cos(pi/2) residue).
_EXACT_PULSE = {
    PulseLabel.Ip: np.eye(2, dtype=complex),
    PulseLabel.Im: np.eye(2, dtype=complex),
    PulseLabel.Xp: np.array([[0, -1j], [-1j, 0]], dtype=complex),
    PulseLabel.Xm: np.array([[0, 1j], [1j, 0]], dtype=complex),
    PulseLabel.Yp: np.array([[0, -1], [1, 0]], dtype=complex),
    PulseLabel.Ym: np.array([[0, 1], [-1, 0]], dtype=complex),
    PulseLabel.Zp: np.array([[-1j, 0], [0, 1j]], dtype=complex),
    PulseLabel.Zm: np.array([[1j, 0], [0, -1j]], dtype=complex),
}


def rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    """exp(-i*angle*(axis . sigma)/2) for a unit 3-vector axis."""
    nx, ny, nz = axis
    h = nx * _SIGMA["X"] + ny * _SIGMA["Y"] + nz * _SIGMA["Z"]
    c, s = np.cos(angle / 2.0), np.sin(angle / 2.0)
    return c * np.eye(2, dtype=complex) - 1j * s * h


def pulse_unitary(
    label: PulseLabel,
    flip_angle_error: float = 0.0,
    identity_as_2pi_pulse: bool = False,
) -> np.ndarray:
    """2x2 unitary realizing the pulse.

    Axis pulses rotate by sign*(pi + flip_angle_error) about their axis.  Ip
    is always the exact identity; Im is too, unless `identity_as_2pi_pulse`
    realizes it as a 2pi rotation (about x, by convention) subject to the
    same flip-angle error.
    """
    if label is PulseLabel.Ip:
        return np.eye(2, dtype=complex)
    if label is PulseLabel.Im:
        if identity_as_2pi_pulse:
            return rotation(np.array([1.0, 0.0, 0.0]), 2 * np.pi + flip_angle_error)
        return np.eye(2, dtype=complex)
    if flip_angle_error == 0.0:
        return _EXACT_PULSE[label].copy()
    axis = {"X": (1, 0, 0), "Y": (0, 1, 0), "Z": (0, 0, 1)}[label.axis]
    return rotation(np.asarray(axis, dtype=float), label.sign * (np.pi + flip_angle_error))


def label_matrix(label: PulseLabel) -> np.ndarray:
    """Ideal (error-free) matrix of a label; oracle-friendly accessor."""
    return _EXACT_PULSE[label].copy()
