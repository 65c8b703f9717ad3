"""Numba kernels for the batched trajectory statevector simulator.

States are (trajectories, 2**n) complex128 C-contiguous arrays.  Qubit q
occupies bit position (n-1-q), i.e. qubit 0 is the most significant bit and
the leftmost character of an outcome bitstring.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def apply_1q_shared(src, dst, u00, u01, u10, u11, stride):
    """dst = (U on one qubit) src, same 2x2 for every trajectory."""
    T, D = src.shape
    step = 2 * stride
    for t in range(T):
        for base in range(0, D, step):
            for i in range(base, base + stride):
                j = i + stride
                a0 = src[t, i]
                a1 = src[t, j]
                dst[t, i] = u00 * a0 + u01 * a1
                dst[t, j] = u10 * a0 + u11 * a1


@njit(cache=True)
def apply_1q_pertraj(src, dst, mats, stride):
    """dst = (U_t on one qubit) src with a distinct 2x2 per trajectory."""
    T, D = src.shape
    step = 2 * stride
    for t in range(T):
        u00 = mats[t, 0, 0]
        u01 = mats[t, 0, 1]
        u10 = mats[t, 1, 0]
        u11 = mats[t, 1, 1]
        for base in range(0, D, step):
            for i in range(base, base + stride):
                j = i + stride
                a0 = src[t, i]
                a1 = src[t, j]
                dst[t, i] = u00 * a0 + u01 * a1
                dst[t, j] = u10 * a0 + u11 * a1


@njit(cache=True)
def apply_2q_shared(src, dst, u, stride_a, stride_b):
    """dst = (U on qubit pair) src; u is 4x4 ordered |a b> with a the
    lower-stride... a and b strides are per-qubit bit strides."""
    T, D = src.shape
    for t in range(T):
        for i in range(D):
            if (i & stride_a) == 0 and (i & stride_b) == 0:
                i00 = i
                i01 = i + stride_b
                i10 = i + stride_a
                i11 = i + stride_a + stride_b
                a00 = src[t, i00]
                a01 = src[t, i01]
                a10 = src[t, i10]
                a11 = src[t, i11]
                dst[t, i00] = u[0, 0] * a00 + u[0, 1] * a01 + u[0, 2] * a10 + u[0, 3] * a11
                dst[t, i01] = u[1, 0] * a00 + u[1, 1] * a01 + u[1, 2] * a10 + u[1, 3] * a11
                dst[t, i10] = u[2, 0] * a00 + u[2, 1] * a01 + u[2, 2] * a10 + u[2, 3] * a11
                dst[t, i11] = u[3, 0] * a00 + u[3, 1] * a01 + u[3, 2] * a10 + u[3, 3] * a11


@njit(cache=True)
def apply_diag_inplace(state, diag):
    T, D = state.shape
    for t in range(T):
        for i in range(D):
            state[t, i] *= diag[i]


@njit(cache=True)
def apply_zflip_masked(state, mask, stride):
    """Multiply odd-parity components of one qubit by -1 where mask[t]."""
    T, D = state.shape
    step = 2 * stride
    for t in range(T):
        if mask[t]:
            for base in range(0, D, step):
                for i in range(base + stride, base + step):
                    state[t, i] = -state[t, i]
