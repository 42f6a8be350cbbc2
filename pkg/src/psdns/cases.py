"""Initial conditions."""
from __future__ import annotations

import numpy as np

__all__ = ["taylor_green_init", "shear_mode_init", "random_solenoidal_init", "project"]


def taylor_green_init(X, out=None):
    """Taylor-Green vortex ``(sin x cos y cos z, -cos x sin y cos z, 0)`` on mesh ``X``."""
    if out is None:
        out = np.empty_like(X)
    out[0] = np.sin(X[0]) * np.cos(X[1]) * np.cos(X[2])
    out[1] = -np.cos(X[0]) * np.sin(X[1]) * np.cos(X[2])
    out[2] = 0
    return out


def shear_mode_init(X, out=None):
    """Single shear mode ``(sin y, 0, 0)``; decays as ``exp(-nu t)`` under the full equations."""
    if out is None:
        out = np.empty_like(X)
    out[0] = np.sin(X[1])
    out[1:] = 0
    return out


def project(U_hat, tables):
    """Remove the gradient part: ``U_hat -= K (K_over_K2 . U_hat)`` in place."""
    P = np.sum(U_hat * tables.K_over_K2, 0)
    U_hat -= P * tables.K
    return U_hat


def random_solenoidal_init(fft, seed, energy=0.5):
    """Seeded random divergence-free spectral velocity on the local block.

    A complex Gaussian half spectrum ``g`` with conjugate symmetry on the
    ``kz = 0`` plane is drawn on the full mesh from ``seed``, so every
    decomposition sees the same global field.  It is quantized to Gaussian
    integers ``W`` and projected in exact integer arithmetic as
    ``|k|^2 (I - k k^T/|k|^2) W = K2*W - K (K.W)``; ``g`` carries a ``1/|k|^2``
    factor so the result keeps a flat spectrum.  A power-of-two rescale
    preserves ``K . U_hat == 0`` exactly in double precision.  Every Nyquist
    mode (any ``|k_i| = N/2``) is zero and the kinetic energy matches
    ``energy`` to rounding.
    """
    N = fft.N
    tables = fft.wave_tables()
    K, K2 = tables.K, tables.K2
    rng = np.random.default_rng(seed)
    shape = (3, N, N, N // 2 + 1)
    g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    neg = (-np.arange(N)) % N
    plane = g[..., 0]
    g[..., 0] = (plane + plane[:, neg][:, :, neg].conj()) / np.sqrt(2)
    g = g[(slice(None),) + fft.spectral_layout.slices].copy()
    g /= np.where(K2 == 0, 1, K2)
    g[:, (K2 == 0) | (np.abs(K) == N // 2).any(axis=0)] = 0

    def weighted_energy(V):
        local = float(np.sum(tables.weights * np.sum(np.abs(V) ** 2, axis=0)))
        return 0.5 * fft.comm.allreduce(local) / N**6

    e = weighted_energy(K2 * g - K * np.sum(K * g, axis=0))
    if e == 0:
        return np.zeros((3,) + fft.complex_shape(), dtype=fft.complex)
    amplitude = np.sqrt(energy / e)
    # |W| stays near 2**40 times a Gaussian draw, so every product sits well below 2**53
    m = int(np.floor(np.log2(2.0**40 / amplitude)))
    R = np.ldexp(amplitude, m)
    parts = []
    for W in (np.rint(R * g.real).astype(np.int64), np.rint(R * g.imag).astype(np.int64)):
        parts.append(K2 * W - K * np.sum(K * W, axis=0))
    U_hat = np.empty((3,) + fft.complex_shape(), dtype=fft.complex)
    U_hat.real = np.ldexp(parts[0].astype(np.float64), -m)
    U_hat.imag = np.ldexp(parts[1].astype(np.float64), -m)
    return U_hat
