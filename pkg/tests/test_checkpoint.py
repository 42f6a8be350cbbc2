import json

import numpy as np
import pytest

from psdns.cases import taylor_green_init
from psdns.checkpoint import (
    MAGIC,
    CheckpointError,
    CheckpointShapeError,
    rank_file,
    read_checkpoint,
    restore_checkpoint,
    write_checkpoint,
)
from psdns.comm import run_ranks
from psdns.diagnostics import kinetic_energy
from psdns.fft import make_fft
from psdns.mesh import Decomposition
from psdns.solver import NavierStokes


def _tg_solver(comm, N, decomp=None, precision="double"):
    fft = make_fft(N, comm, decomp, precision)
    s = NavierStokes(fft, 0.01, 0.01)
    s.set_velocity(taylor_green_init(fft.local_mesh()))
    return s


@pytest.mark.parametrize("precision", ["double", "single"])
def test_roundtrip_is_bitwise(tmp_path, precision):
    s = _tg_solver(None, 8, precision=precision)
    s.rk4_step()
    write_checkpoint(s, tmp_path / "ck")
    header, U_hat = read_checkpoint(tmp_path / "ck")
    assert U_hat.dtype == s.state.U_hat.dtype
    assert np.array_equal(U_hat, s.state.U_hat)
    assert header["step"] == 1 and header["t"] == s.state.t
    assert header["N"] == 8 and header["precision"] == precision
    assert rank_file(tmp_path / "ck", 0).read_bytes()[:4] == MAGIC
    manifest = json.loads((tmp_path / "ck" / "manifest.json").read_text())
    assert manifest["files"] == ["rank00000.spk"]


def test_multi_rank_files(tmp_path):
    def fn(comm):
        s = _tg_solver(comm, 8, Decomposition("pencil", 4, 2))
        write_checkpoint(s, tmp_path / "ck")
        header, U_hat = read_checkpoint(tmp_path / "ck", comm.rank)
        return header["rank"] == comm.rank and np.array_equal(U_hat, s.state.U_hat)

    assert all(run_ranks(4, fn))
    manifest = json.loads((tmp_path / "ck" / "manifest.json").read_text())
    assert manifest["ranks"] == 4 and manifest["p1"] == 2 and len(manifest["files"]) == 4


def test_wrong_mesh_size_rejected(tmp_path):
    write_checkpoint(_tg_solver(None, 8), tmp_path / "ck")
    with pytest.raises(CheckpointShapeError, match="N"):
        restore_checkpoint(_tg_solver(None, 16), tmp_path / "ck")


def test_wrong_decomposition_rejected(tmp_path):
    write_checkpoint(_tg_solver(None, 8), tmp_path / "ck")

    def fn(comm):
        restore_checkpoint(_tg_solver(comm, 8, Decomposition("slab", 1)), tmp_path / "ck")

    with pytest.raises(CheckpointShapeError, match="decomposition"):
        run_ranks(1, fn)


def test_bad_magic_and_truncation(tmp_path):
    write_checkpoint(_tg_solver(None, 8), tmp_path / "ck")
    f = rank_file(tmp_path / "ck", 0)
    raw = bytearray(f.read_bytes())
    f.write_bytes(bytes(raw[:-8]))
    with pytest.raises(CheckpointError, match="payload"):
        read_checkpoint(tmp_path / "ck")
    raw[:4] = b"XXXX"
    f.write_bytes(bytes(raw))
    with pytest.raises(CheckpointError, match="magic"):
        read_checkpoint(tmp_path / "ck")
    f.write_bytes(b"SPK")
    with pytest.raises(CheckpointError, match="truncated"):
        read_checkpoint(tmp_path / "ck")


def test_missing_checkpoint(tmp_path):
    with pytest.raises(OSError):
        read_checkpoint(tmp_path / "nowhere")


@pytest.mark.parametrize("decomp", [None, Decomposition("slab", 2)], ids=["serial", "slab2"])
def test_resume_matches_uninterrupted(tmp_path, decomp):
    N, steps, split = 16, 8, 3
    ranks = 1 if decomp is None else decomp.ranks

    def straight(comm):
        s = _tg_solver(comm, N, decomp)
        for _ in range(steps):
            s.rk4_step()
        return s.state.U_hat.copy(), kinetic_energy(s.state.U, N, comm)

    def resumed(comm):
        s = _tg_solver(comm, N, decomp)
        for _ in range(split):
            s.rk4_step()
        write_checkpoint(s, tmp_path / "mid")
        r = _tg_solver(comm, N, decomp)
        restore_checkpoint(r, tmp_path / "mid")
        assert r.state.tstep == split
        for _ in range(steps - split):
            r.rk4_step()
        return r.state.U_hat.copy(), kinetic_energy(r.state.U, N, comm)

    a = run_ranks(ranks, straight)
    b = run_ranks(ranks, resumed)
    for (ua, ea), (ub, eb) in zip(a, b):
        assert np.array_equal(ua, ub)
    assert a[0][1] == b[0][1]
