"""Global scalar diagnostics, reduced over all ranks onto rank 0.

Every function is collective: all ranks must call it.  Rank 0 receives the
value; other ranks receive ``None``.  Spectral sums use the half-spectrum
multiplicity ``w(k)`` (1 on the kz=0 and kz=N/2 planes, 2 elsewhere) so that

    sum_x u**2 = 1/N**3 * sum_k w(k) |u_k|**2.
"""
from __future__ import annotations

import numpy as np

from .solver import curl_physical

__all__ = [
    "kinetic_energy",
    "enstrophy",
    "dissipation",
    "divergence_max",
    "spectral_energy",
    "summary",
]


def _mean_square(U, N, comm):
    local = float(np.sum(U.astype(np.float64, copy=False) ** 2))
    total = comm.reduce_sum(local)
    return None if total is None else 0.5 * total / N**3


def kinetic_energy(U, N, comm):
    """``0.5 * <|u|^2>`` from the physical velocity."""
    return _mean_square(U, N, comm)


def enstrophy(fft, U_hat, K, work=None):
    """``0.5 * <|curl u|^2>``, evaluated in physical space."""
    curl = fft.real_empty(3) if work is None else work
    curl_physical(fft, U_hat, K, curl)
    return _mean_square(curl, fft.N, fft.comm)


def _weighted_sum(field, tables, comm):
    local = float(np.sum(tables.weights * field))
    return comm.reduce_sum(local)


def spectral_energy(U_hat, tables, comm):
    """Kinetic energy from the half spectrum (Parseval)."""
    N = tables.N
    total = _weighted_sum(np.sum(np.abs(U_hat) ** 2, axis=0, dtype=np.float64), tables, comm)
    return None if total is None else 0.5 * total / N**6


def dissipation(U_hat, tables, nu, comm):
    """Viscous dissipation ``nu * sum_k w(k)|k|^2|u_k|^2 / N**6``."""
    N = tables.N
    e = np.sum(np.abs(U_hat) ** 2, axis=0, dtype=np.float64) * tables.K2
    total = _weighted_sum(e, tables, comm)
    return None if total is None else nu * total / N**6


def divergence_max(U_hat, tables, comm):
    """Global ``max |K . U_hat|``."""
    K = tables.K
    div = K[0] * U_hat[0] + K[1] * U_hat[1] + K[2] * U_hat[2]
    local = float(np.abs(div).max()) if div.size else 0.0
    return comm.reduce(local, "max")


def summary(solver):
    """Diagnostics record for the current solver state (``None`` off rank 0)."""
    s, fft, T = solver.state, solver.fft, solver.tables
    rec = {
        "step": s.tstep,
        "t": s.t,
        "kinetic_energy": kinetic_energy(s.U, fft.N, fft.comm),
        "enstrophy": enstrophy(fft, s.U_hat, T.K, solver._rwork),
        "dissipation": dissipation(s.U_hat, T, s.nu, fft.comm),
        "divergence_max": divergence_max(s.U_hat, T, fft.comm),
    }
    return rec if fft.comm.rank == 0 else None
