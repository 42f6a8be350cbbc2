"""Spectral Navier-Stokes right-hand side and explicit time integrators.

In rotational form the transformed velocity obeys

    dU_hat/dt = D*(u x w)^ - K (K . D*(u x w)^)/|K|^2 - nu |K|^2 U_hat

with ``w = curl u`` and ``D`` the dealias mask.  The convection term is
evaluated pseudo-spectrally: velocity and vorticity are brought to physical
space, crossed pointwise and transformed back.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import get_kernels

__all__ = [
    "RkTableau",
    "RK4",
    "SolverState",
    "curl_physical",
    "cross_spectral",
    "NavierStokes",
    "INTEGRATORS",
]

INTEGRATORS = ("euler", "rk4")


@dataclass(frozen=True)
class RkTableau:
    """Classical four-stage Runge-Kutta weights ``a`` and stage offsets ``b``."""

    a: tuple = (1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0)
    b: tuple = (0.5, 0.5, 1.0)


RK4 = RkTableau()


@dataclass(eq=False)
class SolverState:
    """Per-rank solution and work arrays.

    ``U`` and ``U_hat`` hold the velocity in physical and spectral space and
    are transforms of one another after every completed step.
    """

    U: np.ndarray
    U_hat: np.ndarray
    curl: np.ndarray
    dU: np.ndarray
    U_hat0: np.ndarray
    U_hat1: np.ndarray
    P_hat: np.ndarray
    nu: float
    dt: float
    t: float = 0.0
    tstep: int = 0

    @classmethod
    def allocate(cls, fft, nu, dt):
        return cls(
            U=fft.real_empty(3),
            U_hat=fft.complex_empty(3),
            curl=fft.real_empty(3),
            dU=fft.complex_empty(3),
            U_hat0=fft.complex_empty(3),
            U_hat1=fft.complex_empty(3),
            P_hat=fft.complex_empty(),
            nu=nu,
            dt=dt,
        )


def curl_physical(fft, U_hat, K, out, work=None):
    """Vorticity in physical space, ``out = F^-1(i K x U_hat)``."""
    w = fft.complex_empty() if work is None else work
    for i, j, k in ((2, 0, 1), (1, 2, 0), (0, 1, 2)):
        # w_i = i*(K_j*u_k - K_k*u_j)
        np.subtract(K[j] * U_hat[k], K[k] * U_hat[j], out=w)
        w *= 1j
        fft.inverse(w, out[i])
    return out


def cross_spectral(fft, U, curl, out, kernels="fused", work=None):
    """Transformed convection ``out = F(U x curl)``."""
    kernels = get_kernels(kernels)
    w = fft.real_empty(3) if work is None else work
    kernels.cross3(U, curl, w)
    for i in range(3):
        fft.forward(w[i], out[i])
    return out


class NavierStokes:
    """Pseudo-spectral solver on one rank of a decomposed periodic box.

    Parameters
    ----------
    fft : DistributedFFT
        Transform for the active decomposition (carries the communicator).
    nu, dt : float
        Kinematic viscosity and time step.
    tables : WaveTables, optional
        Built from ``fft`` with ``dealias_rule`` when omitted.
    kernels : {"fused", "naive"}
        Elementwise kernel implementation.
    """

    def __init__(self, fft, nu, dt, tables=None, kernels="fused", dealias_rule="appendix"):
        self.fft = fft
        self.comm = fft.comm
        self.tables = tables if tables is not None else fft.wave_tables(dealias_rule)
        if self.tables.K.shape[1:] != fft.complex_shape():
            raise ValueError("wave tables do not match the spectral layout of the transform")
        self.kernels = get_kernels(kernels)
        self.state = SolverState.allocate(fft, nu, dt)
        self._cwork = fft.complex_empty()
        self._rwork = fft.real_empty(3)

    @property
    def nu(self):
        return self.state.nu

    @property
    def dt(self):
        return self.state.dt

    def set_velocity(self, U):
        """Initialize from a physical velocity field on the local block."""
        s = self.state
        s.U[:] = U
        self.fft.forward_vec(s.U, s.U_hat)
        return s

    def set_spectral_velocity(self, U_hat):
        s = self.state
        s.U_hat[:] = U_hat
        self.refresh_physical()
        return s

    def refresh_physical(self):
        s = self.state
        self.fft.inverse_vec(s.U_hat, s.U)
        return s.U

    def curl_physical(self, U_hat=None, out=None):
        s = self.state
        U_hat = s.U_hat if U_hat is None else U_hat
        out = s.curl if out is None else out
        return curl_physical(self.fft, U_hat, self.tables.K, out, self._cwork)

    def cross_spectral(self, U, curl, out):
        return cross_spectral(self.fft, U, curl, out, self.kernels, self._rwork)

    def compute_rhs(self, rk=0):
        """Right-hand side into ``state.dU``; stages ``rk > 0`` first refresh ``U``."""
        s, T = self.state, self.tables
        if rk > 0:
            self.refresh_physical()
        self.curl_physical(s.U_hat, s.curl)
        self.cross_spectral(s.U, s.curl, s.dU)
        self.kernels.rhs_tail(s.dU, s.P_hat, s.U_hat, T.K, T.K_over_K2, T.K2_float, T.dealias, s.nu)
        return s.dU

    def euler_step(self):
        s = self.state
        self.compute_rhs(0)
        s.U_hat += s.dt * s.dU
        self.refresh_physical()
        s.t += s.dt
        s.tstep += 1
        return s

    def rk4_step(self, tableau=RK4):
        s = self.state
        a, b, dt = tableau.a, tableau.b, s.dt
        s.U_hat1[:] = s.U_hat0[:] = s.U_hat
        for rk in range(4):
            self.compute_rhs(rk)
            if rk < 3:
                np.multiply(b[rk] * dt, s.dU, out=s.U_hat)
                s.U_hat += s.U_hat0
            s.U_hat1 += a[rk] * dt * s.dU
        s.U_hat[:] = s.U_hat1
        self.refresh_physical()
        s.t += dt
        s.tstep += 1
        return s

    def step(self, integrator="rk4"):
        if integrator == "rk4":
            return self.rk4_step()
        if integrator == "euler":
            return self.euler_step()
        raise ValueError(f"integrator must be one of {INTEGRATORS}, got {integrator!r}")

    def run(self, T, integrator="rk4", callback=None):
        """Advance until ``t`` reaches ``T``; ``callback(self)`` runs after every step."""
        s = self.state
        while s.t < T - 1e-8:
            self.step(integrator)
            if callback is not None:
                callback(self)
        return s
