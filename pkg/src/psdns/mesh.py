"""Decomposed physical meshes, wavenumber meshes and derived spectral operators.

Axis conventions are fixed for every decomposition: physical arrays are indexed
``(x, y, z)`` and the real transform is taken along ``z``.  Spectral arrays are
indexed ``(kx, ky, kz)`` with only the non-negative half of ``kz`` stored.

* serial: physical ``(N, N, N)``, spectral ``(N, N, N/2+1)``
* slab:   physical ``(N/M, N, N)`` split in x, spectral ``(N, N/M, N/2+1)`` split in ky
* pencil: physical ``(N/P1, N/P2, N)`` split in x and y, spectral ``(N/P2, N, N/(2*P1))``
  split in kx and kz.  The kz Nyquist plane is not represented.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "Decomposition",
    "Layout",
    "WaveTables",
    "dft_frequencies",
    "half_frequencies",
    "dealias_cutoff",
    "physical_layout",
    "spectral_layout",
    "build_physical_mesh",
    "build_wave_tables",
]

KINDS = ("serial", "slab", "pencil")
DEALIAS_RULES = ("maintext", "appendix")


def _check_even(N):
    if isinstance(N, bool) or int(N) != N or N < 2 or N % 2:
        raise ValueError(f"N must be a positive even integer, got {N!r}")
    return int(N)


def dft_frequencies(N):
    """Integer DFT wavenumbers ``(0, 1, ..., N/2-1, -N/2, ..., -1)``."""
    N = _check_even(N)
    k = np.arange(N, dtype=np.int64)
    k[N // 2:] -= N
    return k


def half_frequencies(N):
    """Wavenumbers of the real transformed axis, ``(0, 1, ..., N/2)``."""
    N = _check_even(N)
    k = dft_frequencies(N)[: N // 2 + 1].copy()
    k[-1] *= -1
    return k


def dealias_cutoff(N, rule="appendix"):
    """Cutoff for the 2/3-rule mask.

    ``"maintext"`` uses ``N/3``; ``"appendix"`` uses ``2/3*(N/2+1)``.
    """
    if rule == "maintext":
        return N / 3.0
    if rule == "appendix":
        return 2.0 / 3.0 * (N / 2 + 1)
    raise ValueError(f"unknown dealias rule {rule!r}, expected one of {DEALIAS_RULES}")


@dataclass(frozen=True)
class Decomposition:
    """How the global mesh is distributed over ``ranks`` processes.

    For the pencil decomposition ``p1`` is the number of processes in the
    first split direction and ``p2 = ranks // p1`` in the second.
    """

    kind: str = "serial"
    ranks: int = 1
    p1: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown decomposition {self.kind!r}, expected one of {KINDS}")
        if self.ranks < 1:
            raise ValueError("ranks must be positive")
        if self.kind == "serial" and self.ranks != 1:
            raise ValueError("serial decomposition requires exactly one rank")
        if self.kind == "pencil":
            if self.p1 is None or self.p1 < 1:
                raise ValueError("pencil decomposition requires p1 >= 1")
            if self.ranks % self.p1:
                raise ValueError(f"p1={self.p1} does not divide ranks={self.ranks}")
        elif self.p1 is not None:
            raise ValueError("p1 only applies to the pencil decomposition")

    @property
    def p2(self):
        if self.kind != "pencil":
            return None
        return self.ranks // self.p1

    def validate(self, N):
        """Raise ``ValueError`` if this decomposition cannot split a mesh of size ``N``."""
        N = _check_even(N)
        if self.kind == "slab":
            if self.ranks > N or N % self.ranks:
                raise ValueError(f"slab: ranks={self.ranks} must divide N={N}")
        elif self.kind == "pencil":
            p1, p2 = self.p1, self.p2
            if N % p1 or N % p2:
                raise ValueError(f"pencil: p1={p1} and p2={p2} must both divide N={N}")
            if (N // p1) % 2:
                raise ValueError(f"pencil: N/p1={N // p1} must be even")
        return self

    def coords(self, rank):
        """Group-local ranks of ``rank``.

        Slab returns ``(rank,)``; pencil returns ``(xzrank, xyrank)`` where
        the xz-group has color ``rank // p1`` and the xy-group ``rank % p1``.
        """
        if not 0 <= rank < self.ranks:
            raise ValueError(f"rank {rank} out of range for {self.ranks} ranks")
        if self.kind == "pencil":
            return rank % self.p1, rank // self.p1
        return (rank,)


@dataclass(frozen=True)
class Layout:
    """Local block of a global 3D array.

    ``split_axes`` maps each partitioned axis to the name of the communicator
    group that partitions it (``"world"``, ``"xz"`` or ``"xy"``).
    """

    global_shape: tuple
    local_shape: tuple
    global_offset: tuple
    split_axes: tuple = field(default=())

    @property
    def slices(self):
        return tuple(slice(o, o + n) for o, n in zip(self.global_offset, self.local_shape))

    @property
    def size(self):
        return int(np.prod(self.local_shape))


def physical_layout(N, decomp, rank=0):
    N = _check_even(N)
    decomp.validate(N)
    if decomp.kind == "serial":
        return Layout((N, N, N), (N, N, N), (0, 0, 0))
    if decomp.kind == "slab":
        Np = N // decomp.ranks
        return Layout((N, N, N), (Np, N, N), (rank * Np, 0, 0), ((0, "world"),))
    xzrank, xyrank = decomp.coords(rank)
    N1, N2 = N // decomp.p1, N // decomp.p2
    return Layout((N, N, N), (N1, N2, N), (xzrank * N1, xyrank * N2, 0),
                  ((0, "xz"), (1, "xy")))


def spectral_layout(N, decomp, rank=0):
    N = _check_even(N)
    decomp.validate(N)
    Nf = N // 2 + 1
    if decomp.kind == "serial":
        return Layout((N, N, Nf), (N, N, Nf), (0, 0, 0))
    if decomp.kind == "slab":
        Np = N // decomp.ranks
        return Layout((N, N, Nf), (N, Np, Nf), (0, rank * Np, 0), ((1, "world"),))
    xzrank, xyrank = decomp.coords(rank)
    N1, N2 = N // decomp.p1, N // decomp.p2
    return Layout((N, N, N // 2), (N2, N, N1 // 2), (xyrank * N2, 0, xzrank * (N1 // 2)),
                  ((0, "xy"), (2, "xz")))


def build_physical_mesh(N, decomp, rank=0, dtype=np.float64):
    """Local block of the mesh ``x_i = 2*pi*i/N``, shape ``(3,) + local_shape``."""
    layout = physical_layout(N, decomp, rank)
    X = np.mgrid[layout.slices].astype(dtype)
    X *= 2 * np.pi / N
    return X


@dataclass(frozen=True, eq=False)
class WaveTables:
    """Local wavenumber mesh and the operators derived from it.

    ``K`` has shape ``(3,) + local_shape`` of signed integers, ``K2 = |K|^2``,
    ``K_over_K2 = K/|K|^2`` (zero at the origin) and ``dealias`` is the
    boolean 2/3-rule mask.
    """

    N: int
    layout: Layout
    K: np.ndarray
    K2: np.ndarray
    K_over_K2: np.ndarray
    dealias: np.ndarray
    cutoff: float

    @cached_property
    def K2_float(self):
        """``K2`` in the floating precision of ``K_over_K2``."""
        a = self.K2.astype(self.K_over_K2.dtype)
        a.setflags(write=False)
        return a

    @property
    def weights(self):
        """Half-spectrum multiplicity: 1 on the kz=0 and kz=N/2 planes, else 2."""
        kz = self.K[2]
        return np.where((kz == 0) | (kz == self.N // 2), 1, 2)


def build_wave_tables(N, decomp, rank=0, dealias_rule="appendix", dtype=np.float64):
    cutoff = dealias_cutoff(N, dealias_rule)
    layout = spectral_layout(N, decomp, rank)
    sx, sy, sz = layout.slices
    kx = dft_frequencies(N)[sx]
    ky = dft_frequencies(N)[sy]
    if decomp.kind == "pencil":
        kz = dft_frequencies(N)[sz]
    else:
        kz = half_frequencies(N)[sz]
    K = np.array(np.meshgrid(kx, ky, kz, indexing="ij"), dtype=np.int64)
    K2 = np.sum(K * K, 0, dtype=np.int64)
    K_over_K2 = K.astype(dtype) / np.where(K2 == 0, 1, K2).astype(dtype)
    dealias = (abs(K[0]) < cutoff) & (abs(K[1]) < cutoff) & (abs(K[2]) < cutoff)
    for a in (K, K2, K_over_K2, dealias):
        a.setflags(write=False)
    return WaveTables(N, layout, K, K2, K_over_K2, dealias, cutoff)
