"""Elementwise kernels for the right-hand side.

Every kernel exists twice.  The ``naive`` variant is written with whole-array
numpy expressions (one pass and one temporary per ufunc) and serves as the
reference.  The ``fused`` variant visits every grid point once and computes
all components there, compiled with numba.
"""
from __future__ import annotations

import numba
import numpy as np

__all__ = [
    "KERNEL_PATHS",
    "cross3_naive",
    "cross3_fused",
    "rhs_tail_naive",
    "rhs_tail_fused",
    "Kernels",
    "get_kernels",
    "ulp_distance",
]

KERNEL_PATHS = ("naive", "fused")


def _check_vec(*arrays):
    shape = arrays[0].shape
    if len(shape) < 1 or shape[0] != 3:
        raise ValueError(f"expected a vector field of shape (3, ...), got {shape}")
    for a in arrays[1:]:
        if a.shape != shape:
            raise ValueError(f"shape mismatch: {a.shape} vs {shape}")


def cross3_naive(a, b, c):
    """c = a x b"""
    _check_vec(a, b, c)
    c[0] = a[1] * b[2] - a[2] * b[1]
    c[1] = a[2] * b[0] - a[0] * b[2]
    c[2] = a[0] * b[1] - a[1] * b[0]
    return c


@numba.njit(cache=True, nogil=True)
def _cross3(a, b, c):
    for i in range(a.shape[1]):
        a0 = a[0, i]
        a1 = a[1, i]
        a2 = a[2, i]
        b0 = b[0, i]
        b1 = b[1, i]
        b2 = b[2, i]
        c[0, i] = a1 * b2 - a2 * b1
        c[1, i] = a2 * b0 - a0 * b2
        c[2, i] = a0 * b1 - a1 * b0


def _flat(a, lead):
    v = a.reshape(lead + (-1,))
    if not np.shares_memory(v, a):
        raise ValueError("kernel operands must be C-contiguous")
    return v


def cross3_fused(a, b, c):
    """c = a x b, single pass over the grid."""
    _check_vec(a, b, c)
    _cross3(_flat(a, (3,)), _flat(b, (3,)), _flat(c, (3,)))
    return c


def rhs_tail_naive(dU, P_hat, U_hat, K, K_over_K2, K2, dealias, nu):
    """Dealias, project out the pressure and add viscosity, one ufunc at a time.

    On return ``dU = D*dU - K*(K/|K|^2 . D*dU) - nu*|K|^2*U_hat`` and
    ``P_hat = K/|K|^2 . D*dU`` where ``D`` is the dealias mask.
    """
    _check_vec(dU, U_hat, K, K_over_K2)
    dU *= dealias
    np.sum(dU * K_over_K2, 0, out=P_hat)
    dU -= P_hat * K
    dU -= (dU.real.dtype.type(nu) * K2.astype(dU.real.dtype, copy=False)) * U_hat
    return dU


@numba.njit(cache=True, nogil=True)
def _rhs_tail(dU, P_hat, U_hat, K, K_over_K2, K2, dealias, nu, zero):
    for i in range(dU.shape[1]):
        if dealias[i]:
            d0 = dU[0, i]
            d1 = dU[1, i]
            d2 = dU[2, i]
        else:
            d0 = zero
            d1 = zero
            d2 = zero
        p = d0 * K_over_K2[0, i] + d1 * K_over_K2[1, i] + d2 * K_over_K2[2, i]
        P_hat[i] = p
        # store between the two subtractions to round like the naive sequence
        dU[0, i] = d0 - p * K[0, i]
        dU[1, i] = d1 - p * K[1, i]
        dU[2, i] = d2 - p * K[2, i]
        visc = nu * K2[i]
        dU[0, i] -= visc * U_hat[0, i]
        dU[1, i] -= visc * U_hat[1, i]
        dU[2, i] -= visc * U_hat[2, i]


def rhs_tail_fused(dU, P_hat, U_hat, K, K_over_K2, K2, dealias, nu):
    """Same result as :func:`rhs_tail_naive` in one pass over the spectral grid.

    Pass ``K2`` already in the real dtype of ``dU`` (``WaveTables.K2_float``)
    to avoid a conversion copy.
    """
    _check_vec(dU, U_hat, K, K_over_K2)
    if P_hat.shape != dU.shape[1:] or K2.shape != dU.shape[1:] or dealias.shape != dU.shape[1:]:
        raise ValueError("shape mismatch between vector and scalar operands")
    real = dU.real.dtype.type
    _rhs_tail(_flat(dU, (3,)), _flat(P_hat, ()), _flat(U_hat, (3,)), _flat(K, (3,)),
              _flat(K_over_K2, (3,)), _flat(K2.astype(dU.real.dtype, copy=False), ()), _flat(dealias, ()),
              real(nu), dU.dtype.type(0))
    return dU


class Kernels:
    """Selected implementation of every kernel; chosen at runtime."""

    def __init__(self, path="fused"):
        if path not in KERNEL_PATHS:
            raise ValueError(f"kernel path must be one of {KERNEL_PATHS}, got {path!r}")
        self.path = path
        if path == "fused":
            self.cross3, self.rhs_tail = cross3_fused, rhs_tail_fused
        else:
            self.cross3, self.rhs_tail = cross3_naive, rhs_tail_naive

    def __repr__(self):
        return f"Kernels({self.path!r})"


def get_kernels(path):
    if isinstance(path, Kernels):
        return path
    return Kernels(path)


def ulp_distance(a, b):
    """Largest elementwise distance between ``a`` and ``b`` in units in the last place.

    Complex arrays are compared on real and imaginary parts separately.
    """
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if np.iscomplexobj(a) or np.iscomplexobj(b):
        return max(ulp_distance(a.real, b.real), ulp_distance(a.imag, b.imag))
    if a.size == 0:
        return 0.0
    scale = np.spacing(np.maximum(np.abs(a), np.abs(b)))
    return float(np.max(np.abs(a - b) / scale))
