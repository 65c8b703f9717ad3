"""Decoupling-group algebra against brute-force matrix oracles."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ddforge.pauli import (
    ALL_LABELS,
    PauliFrame,
    PulseLabel,
    completion_frame,
    frame_product,
    label_matrix,
    labels_for_frame,
    pulse_unitary,
    pulses_from_group_path,
)

SIGMA = {
    PauliFrame.I: np.eye(2, dtype=complex),
    PauliFrame.X: np.array([[0, 1], [1, 0]], dtype=complex),
    PauliFrame.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    PauliFrame.Z: np.array([[1, 0], [0, -1]], dtype=complex),
}


def frame_of_matrix(m: np.ndarray) -> PauliFrame:
    """Brute-force oracle: which Pauli is m proportional to?"""
    for frame, sigma in SIGMA.items():
        overlap = abs(np.trace(sigma.conj().T @ m)) / 2
        if np.isclose(overlap, 1.0, atol=1e-9):
            return frame
    raise AssertionError(f"matrix {m} is not proportional to a Pauli")


def test_exactly_eight_labels_with_expected_tokens():
    assert [lab.token for lab in ALL_LABELS] == [
        "Ip", "Im", "Xp", "Xm", "Yp", "Ym", "Zp", "Zm",
    ]
    for lab in ALL_LABELS:
        assert PulseLabel.from_token(lab.token) is lab


def test_frames_of_labels():
    assert PulseLabel.Ip.frame is PauliFrame.I
    assert PulseLabel.Im.frame is PauliFrame.I
    for axis in "XYZ":
        assert PulseLabel.from_token(axis + "p").frame.name == axis
        assert PulseLabel.from_token(axis + "m").frame.name == axis


def test_all_64_label_pairs_match_matrix_oracle():
    for a in ALL_LABELS:
        for b in ALL_LABELS:
            expected = frame_of_matrix(label_matrix(a) @ label_matrix(b))
            assert frame_product([a, b]) is expected, (a, b)


def test_frame_product_examples():
    assert frame_product([PulseLabel.Xp, PulseLabel.Xm]) is PauliFrame.I
    assert frame_product([PulseLabel.Xp, PulseLabel.Yp]) is PauliFrame.Z
    assert frame_product([PulseLabel.Xp, PulseLabel.Yp] * 2) is PauliFrame.I
    assert frame_product([]) is PauliFrame.I


def test_completion_frame_examples():
    assert completion_frame(PauliFrame.I, PauliFrame.I) is PauliFrame.I
    assert completion_frame(PauliFrame.X, PauliFrame.Y) is PauliFrame.Z
    assert completion_frame(PauliFrame.Z, PauliFrame.Z) is PauliFrame.I


@given(st.sampled_from(list(PauliFrame)), st.sampled_from(list(PauliFrame)))
def test_completion_solves_sandwich(prefix, suffix):
    f = completion_frame(prefix, suffix)
    assert prefix * f * suffix is PauliFrame.I


@given(st.sampled_from(list(PauliFrame)))
def test_self_inverse(f):
    assert f * f is PauliFrame.I
    assert completion_frame(f, PauliFrame.I) * f is PauliFrame.I


def test_labels_for_frame():
    assert labels_for_frame(PauliFrame.I) == {PulseLabel.Ip, PulseLabel.Im}
    assert labels_for_frame(PauliFrame.X) == {PulseLabel.Xp, PulseLabel.Xm}
    assert labels_for_frame(PauliFrame.Z) == {PulseLabel.Zp, PulseLabel.Zm}


def test_group_path_cpmg_and_xy4():
    assert pulses_from_group_path([PauliFrame.X]) == [PauliFrame.X, PauliFrame.X]
    assert pulses_from_group_path([PauliFrame.X, PauliFrame.Z, PauliFrame.Y]) == [
        PauliFrame.X, PauliFrame.Y, PauliFrame.X, PauliFrame.Y,
    ]
    assert pulses_from_group_path([PauliFrame.I]) == [PauliFrame.I, PauliFrame.I]


def test_group_path_empty_rejected():
    with pytest.raises(ValueError):
        pulses_from_group_path([])


def test_group_path_always_identity_product(rng):
    for _ in range(1000):
        length = int(rng.integers(2, 17))
        path = [PauliFrame(int(v)) for v in rng.integers(0, 4, size=length - 1)]
        pulses = pulses_from_group_path(path)
        assert len(pulses) == length
        assert frame_product(pulses) is PauliFrame.I


def test_pulse_unitaries_are_unitary_and_exact():
    for lab in ALL_LABELS:
        u = pulse_unitary(lab, 0.0)
        assert np.allclose(u @ u.conj().T, np.eye(2), atol=1e-12)
    assert np.allclose(pulse_unitary(PulseLabel.Ip, 0.5), np.eye(2))
    x = pulse_unitary(PulseLabel.Xp, 0.0)
    assert np.allclose(x, np.array([[0, -1j], [-1j, 0]]))


def test_opposite_signs_cancel():
    for axis in "XYZ":
        p = pulse_unitary(PulseLabel.from_token(axis + "p"), 0.0)
        m = pulse_unitary(PulseLabel.from_token(axis + "m"), 0.0)
        prod = p @ m
        assert np.allclose(prod / prod[0, 0], np.eye(2), atol=1e-12)


@given(st.floats(-0.3, 0.3))
def test_flip_angle_error_preserves_unitarity(eps):
    for lab in (PulseLabel.Xp, PulseLabel.Ym, PulseLabel.Zp):
        u = pulse_unitary(lab, eps)
        assert np.allclose(u @ u.conj().T, np.eye(2), atol=1e-12)


def test_identity_as_2pi_pulse():
    u = pulse_unitary(PulseLabel.Im, 0.0, identity_as_2pi_pulse=True)
    assert np.allclose(u, -np.eye(2), atol=1e-12)
    v = pulse_unitary(PulseLabel.Im, 0.1, identity_as_2pi_pulse=True)
    assert not np.allclose(v, -np.eye(2), atol=1e-3)
