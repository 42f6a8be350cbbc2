"""Distributed 3D real FFTs for serial, slab and pencil decompositions.

Each transform composes serial 1D transforms with pack, all-to-all exchange
and unpack steps on preallocated work arrays.  ``forward`` maps a real field
on the physical layout to its half spectrum on the spectral layout,
``inverse`` undoes it (including the ``1/N**3`` normalization) and never
modifies its input.
"""
from __future__ import annotations

import numpy as np

from ..comm import SerialComm
from ..mesh import Decomposition, physical_layout, spectral_layout, build_physical_mesh, build_wave_tables
from .providers import get_provider

__all__ = [
    "PRECISIONS",
    "FftWorkspace",
    "DistributedFFT",
    "SerialFFT",
    "SlabFFT",
    "PencilFFT",
    "make_fft",
]

PRECISIONS = {
    "single": (np.float32, np.complex64),
    "double": (np.float64, np.complex128),
}


class FftWorkspace:
    """Named preallocated buffers for the intermediate layouts of a transform."""

    def __init__(self, **buffers):
        self.buffers = buffers
        for name, buf in buffers.items():
            setattr(self, name, buf)

    def shapes(self):
        return {name: buf.shape for name, buf in self.buffers.items()}

    @property
    def nbytes(self):
        return sum(b.nbytes for b in self.buffers.values())


class DistributedFFT:
    """Base class; use :func:`make_fft` to construct the right subclass."""

    kind = None

    def __init__(self, N, comm=None, decomp=None, precision="double", provider="numpy"):
        self.comm = comm if comm is not None else SerialComm()
        if decomp is None:
            decomp = Decomposition(self.kind, self.comm.size)
        if decomp.kind != self.kind:
            raise ValueError(f"{type(self).__name__} cannot run a {decomp.kind} decomposition")
        if decomp.ranks != self.comm.size:
            raise ValueError(f"decomposition expects {decomp.ranks} ranks, communicator has {self.comm.size}")
        if precision not in PRECISIONS:
            raise ValueError(f"precision must be one of {sorted(PRECISIONS)}")
        self.decomp = decomp.validate(N)
        self.N = N
        self.Nf = N // 2 + 1
        self.precision = precision
        self.float, self.complex = PRECISIONS[precision]
        self.provider = get_provider(provider)
        self.rank = self.comm.rank
        self.physical_layout = physical_layout(N, decomp, self.rank)
        self.spectral_layout = spectral_layout(N, decomp, self.rank)

    def real_shape(self):
        return self.physical_layout.local_shape

    def complex_shape(self):
        return self.spectral_layout.local_shape

    def real_empty(self, *lead):
        return np.empty(lead + self.real_shape(), dtype=self.float)

    def complex_empty(self, *lead):
        return np.empty(lead + self.complex_shape(), dtype=self.complex)

    def local_mesh(self):
        return build_physical_mesh(self.N, self.decomp, self.rank, self.float)

    def wave_tables(self, dealias_rule="appendix"):
        return build_wave_tables(self.N, self.decomp, self.rank, dealias_rule, self.float)

    def _check(self, a, shape, dtype, what):
        if a.shape != shape:
            raise ValueError(f"layout mismatch: {what} has local shape {a.shape}, expected {shape}")
        if a.dtype != dtype:
            raise ValueError(f"layout mismatch: {what} has dtype {a.dtype}, expected {np.dtype(dtype)}")

    def forward(self, u, fu=None):
        """Forward transform of the real scalar field ``u`` into ``fu``."""
        if fu is None:
            fu = self.complex_empty()
        self._check(u, self.real_shape(), self.float, "real field")
        self._check(fu, self.complex_shape(), self.complex, "spectral field")
        return self._forward(u, fu)

    def inverse(self, fu, u=None):
        """Inverse transform of the half spectrum ``fu`` into ``u``."""
        if u is None:
            u = self.real_empty()
        self._check(fu, self.complex_shape(), self.complex, "spectral field")
        self._check(u, self.real_shape(), self.float, "real field")
        return self._inverse(fu, u)

    def forward_vec(self, U, U_hat):
        for i in range(U.shape[0]):
            self.forward(U[i], U_hat[i])
        return U_hat

    def inverse_vec(self, U_hat, U):
        for i in range(U_hat.shape[0]):
            self.inverse(U_hat[i], U[i])
        return U

    def __repr__(self):
        return (f"{type(self).__name__}(N={self.N}, ranks={self.comm.size}, "
                f"precision={self.precision!r}, provider={self.provider.name!r})")


class SerialFFT(DistributedFFT):
    kind = "serial"

    def __init__(self, N, comm=None, decomp=None, precision="double", provider="numpy"):
        super().__init__(N, comm, decomp, precision, provider)
        N, Nf = self.N, self.Nf
        self.work = FftWorkspace(Uc_hat=np.empty((N, N, Nf), dtype=self.complex))

    def _forward(self, u, fu):
        p, w = self.provider, self.work.Uc_hat
        p.rfft(u, axis=2, out=w)
        p.fft(w, axis=1, out=w)
        p.fft(w, axis=0, out=fu)
        return fu

    def _inverse(self, fu, u):
        p, w = self.provider, self.work.Uc_hat
        p.ifft(fu, axis=0, out=w)
        p.ifft(w, axis=1, out=w)
        p.irfft(w, self.N, axis=2, out=u)
        return u


class SlabFFT(DistributedFFT):
    """Physical x-slabs ``(Np, N, N)``, spectral ky-slabs ``(N, Np, N/2+1)``."""

    kind = "slab"

    def __init__(self, N, comm=None, decomp=None, precision="double", provider="numpy"):
        super().__init__(N, comm, decomp, precision, provider)
        N, Nf, M = self.N, self.Nf, self.comm.size
        self.Np = Np = N // M
        self.work = FftWorkspace(
            Uc_hatT=np.empty((Np, N, Nf), dtype=self.complex),
            Uc_hat=np.empty((N, Np, Nf), dtype=self.complex),
            U_mpi=np.empty((M, Np, Np, Nf), dtype=self.complex),
        )

    def _forward(self, u, fu):
        p, w = self.provider, self.work
        M, Np, Nf = self.comm.size, self.Np, self.Nf
        p.rfft(u, axis=2, out=w.Uc_hatT)
        p.fft(w.Uc_hatT, axis=1, out=w.Uc_hatT)
        # (Np, N, Nf) -> (M, Np, Np, Nf): block j holds ky-chunk j of this x-slab
        w.U_mpi[:] = np.rollaxis(w.Uc_hatT.reshape(Np, M, Np, Nf), 1)
        self.comm.alltoall(w.U_mpi, fu)
        p.fft(fu, axis=0, out=fu)
        return fu

    def _inverse(self, fu, u):
        p, w = self.provider, self.work
        p.ifft(fu, axis=0, out=w.Uc_hat)
        self.comm.alltoall(w.Uc_hat, w.U_mpi)
        w.Uc_hatT[:] = np.rollaxis(w.U_mpi, 1).reshape(w.Uc_hatT.shape)
        p.ifft(w.Uc_hatT, axis=1, out=w.Uc_hatT)
        p.irfft(w.Uc_hatT, self.N, axis=2, out=u)
        return u


class PencilFFT(DistributedFFT):
    """Pencil decomposition on a ``p1 x p2`` process grid.

    Physical z-pencils ``(N1, N2, N)`` become spectral y-pencils
    ``(N2, N, N1/2)``, with ``N1 = N/p1`` and ``N2 = N/p2``.  The kz Nyquist
    plane is dropped on the way forward and reinserted as zeros on the way back.
    All exchanges happen with the data aligned in x.
    """

    kind = "pencil"

    def __init__(self, N, comm=None, decomp=None, precision="double", provider="numpy"):
        if decomp is None:
            raise ValueError("PencilFFT needs an explicit Decomposition with p1")
        super().__init__(N, comm, decomp, precision, provider)
        self.P1, self.P2 = decomp.p1, decomp.p2
        self.commxz = self.comm.split(self.rank // self.P1)
        self.commxy = self.comm.split(self.rank % self.P1)
        self.xzrank, self.xyrank = self.commxz.rank, self.commxy.rank
        N, Nf = self.N, self.Nf
        self.N1, self.N2 = N1, N2 = N // self.P1, N // self.P2
        self.work = FftWorkspace(
            Uc_hat_z=np.empty((N1, N2, Nf), dtype=self.complex),
            Uc_hat_x=np.empty((N, N2, N1 // 2), dtype=self.complex),
            Uc_hat_xr=np.empty((N, N2, N1 // 2), dtype=self.complex),
            Uc_hat_y=np.empty((N2, N, N1 // 2), dtype=self.complex),
        )

    def _forward(self, u, fu):
        p, w = self.provider, self.work
        N1, N2, P1, P2 = self.N1, self.N2, self.P1, self.P2
        p.rfft(u, axis=2, out=w.Uc_hat_z)
        # drop kz = N/2, then block j of the xz exchange is kz-chunk j
        w.Uc_hat_x[:] = np.rollaxis(w.Uc_hat_z[:, :, :-1].reshape(N1, N2, P1, N1 // 2), 2) \
            .reshape(w.Uc_hat_x.shape)
        self.commxz.alltoall(w.Uc_hat_x, w.Uc_hat_xr)
        p.fft(w.Uc_hat_xr, axis=0, out=w.Uc_hat_x)
        # block j of the xy exchange is x-chunk j; received blocks are y-chunks
        self.commxy.alltoall(w.Uc_hat_x, w.Uc_hat_xr)
        w.Uc_hat_y[:] = np.rollaxis(w.Uc_hat_xr.reshape(P2, N2, N2, N1 // 2), 1) \
            .reshape(w.Uc_hat_y.shape)
        p.fft(w.Uc_hat_y, axis=1, out=fu)
        return fu

    def _inverse(self, fu, u):
        p, w = self.provider, self.work
        N, N1, N2, P1, P2 = self.N, self.N1, self.N2, self.P1, self.P2
        p.ifft(fu, axis=1, out=w.Uc_hat_y)
        w.Uc_hat_x[:] = np.rollaxis(w.Uc_hat_y.reshape(N2, P2, N2, N1 // 2), 1) \
            .reshape(w.Uc_hat_x.shape)
        self.commxy.alltoall(w.Uc_hat_x, w.Uc_hat_xr)
        p.ifft(w.Uc_hat_xr, axis=0, out=w.Uc_hat_x)
        self.commxz.alltoall(w.Uc_hat_x, w.Uc_hat_xr)
        w.Uc_hat_z[:, :, :-1] = np.rollaxis(w.Uc_hat_xr.reshape(P1, N1, N2, N1 // 2), 0, 3) \
            .reshape(N1, N2, N // 2)
        w.Uc_hat_z[:, :, -1] = 0
        p.irfft(w.Uc_hat_z, N, axis=2, out=u)
        return u


_KINDS = {"serial": SerialFFT, "slab": SlabFFT, "pencil": PencilFFT}


def make_fft(N, comm=None, decomp=None, precision="double", provider="numpy"):
    """Build the transform for ``decomp`` (default: serial on one rank, slab otherwise)."""
    comm = comm if comm is not None else SerialComm()
    if decomp is None:
        decomp = Decomposition("serial") if comm.size == 1 else Decomposition("slab", comm.size)
    return _KINDS[decomp.kind](N, comm, decomp, precision, provider)
