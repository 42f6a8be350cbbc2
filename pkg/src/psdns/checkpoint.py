"""Rank-private binary checkpoints of the spectral velocity.

A checkpoint is a directory holding one ``rank#####.spk`` file per rank plus
a ``manifest.json`` written by rank 0.  Each rank file is a fixed little-endian
header followed by the raw C-ordered ``U_hat`` block::

    magic "SPK1" | version u32 | N u32 | itemsize u8 | kind u8 | ranks u32 |
    p1 u32 | rank u32 | t f64 | step u64 | local shape 3 x u32
"""
from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

__all__ = [
    "MAGIC",
    "VERSION",
    "CheckpointError",
    "CheckpointShapeError",
    "write_checkpoint",
    "read_checkpoint",
    "restore_checkpoint",
]

MAGIC = b"SPK1"
VERSION = 1
_HEADER = struct.Struct("<4sIIBBIIIdQ3I")
_KINDS = ("serial", "slab", "pencil")
_PRECISION = {4: "single", 8: "double"}


class CheckpointError(OSError):
    """Unreadable, corrupt or incompatible checkpoint."""


class CheckpointShapeError(CheckpointError):
    """Checkpoint does not match the configured mesh or decomposition."""


def rank_file(path, rank):
    return Path(path) / f"rank{rank:05d}.spk"


def write_checkpoint(solver, path):
    """Collective: every rank writes its block, then rank 0 writes the manifest."""
    s, fft = solver.state, solver.fft
    path = Path(path)
    if fft.comm.rank == 0:
        path.mkdir(parents=True, exist_ok=True)
    fft.comm.barrier()
    d = fft.decomp
    U_hat = np.ascontiguousarray(s.U_hat)
    header = _HEADER.pack(MAGIC, VERSION, fft.N, np.dtype(fft.float).itemsize, _KINDS.index(d.kind),
                          d.ranks, d.p1 or 0, fft.comm.rank, float(s.t), int(s.tstep),
                          *U_hat.shape[1:])
    target = rank_file(path, fft.comm.rank)
    tmp = target.with_suffix(".tmp")
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(U_hat.tobytes())
    os.replace(tmp, target)
    fft.comm.barrier()
    if fft.comm.rank == 0:
        manifest = {
            "magic": MAGIC.decode(),
            "version": VERSION,
            "N": fft.N,
            "precision": fft.precision,
            "decomposition": d.kind,
            "ranks": d.ranks,
            "p1": d.p1,
            "t": s.t,
            "step": s.tstep,
            "nu": s.nu,
            "dt": s.dt,
            "files": [rank_file(path, r).name for r in range(d.ranks)],
        }
        (path / "manifest.json").write_text(json.dumps(manifest, indent=2))
    fft.comm.barrier()
    return path


def read_checkpoint(path, rank=0):
    """Return ``(header, U_hat)`` from the file of ``rank``."""
    target = rank_file(path, rank)
    try:
        raw = target.read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {target}: {e}") from e
    if len(raw) < _HEADER.size:
        raise CheckpointError(f"{target}: truncated header")
    magic, version, N, itemsize, kind, ranks, p1, r, t, step, n0, n1, n2 = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointError(f"{target}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise CheckpointError(f"{target}: unsupported version {version}")
    if itemsize not in _PRECISION or kind >= len(_KINDS):
        raise CheckpointError(f"{target}: corrupt header")
    header = {
        "N": N,
        "precision": _PRECISION[itemsize],
        "decomposition": _KINDS[kind],
        "ranks": ranks,
        "p1": p1 or None,
        "rank": r,
        "t": t,
        "step": step,
        "local_shape": (n0, n1, n2),
    }
    dtype = np.complex64 if itemsize == 4 else np.complex128
    count = 3 * n0 * n1 * n2
    body = raw[_HEADER.size:]
    if len(body) != count * np.dtype(dtype).itemsize:
        raise CheckpointError(f"{target}: payload has {len(body)} bytes, expected "
                              f"{count * np.dtype(dtype).itemsize}")
    U_hat = np.frombuffer(body, dtype=dtype).reshape(3, n0, n1, n2).copy()
    return header, U_hat


def restore_checkpoint(solver, path):
    """Load this rank's block into ``solver`` and refresh the physical velocity."""
    fft = solver.fft
    header, U_hat = read_checkpoint(path, fft.comm.rank)
    d = fft.decomp
    expected = {
        "N": fft.N,
        "precision": fft.precision,
        "decomposition": d.kind,
        "ranks": d.ranks,
        "p1": d.p1,
        "local_shape": fft.complex_shape(),
    }
    for key, value in expected.items():
        if header[key] != value:
            raise CheckpointShapeError(f"checkpoint {key}={header[key]!r} does not match "
                                       f"configured {key}={value!r}")
    s = solver.state
    s.t, s.tstep = header["t"], header["step"]
    solver.set_spectral_velocity(U_hat)
    return header
