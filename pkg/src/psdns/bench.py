"""Timing harnesses for the parallel FFT and the solver kernels.

FFT timings follow the usual convention for scaling plots: the best of
``repetitions`` forward+inverse pairs, setup excluded, together with the time
scaled by ``ranks / (N**3 log2 N)``, which is constant under ideal scaling.
"""
from __future__ import annotations

import math
import time

import numpy as np

from .cases import taylor_green_init
from .comm import run_ranks
from .fft import make_fft
from .kernels import ulp_distance
from .mesh import Decomposition
from .solver import NavierStokes

__all__ = ["default_p1", "bench_fft_rank", "bench_fft", "bench_solver_rank", "scaled_time"]


def scaled_time(seconds, N, ranks):
    return seconds * ranks / (N**3 * math.log2(N))


def default_p1(ranks, N):
    """Most square ``p1 x p2`` grid with ``p1 <= p2`` that splits ``N``."""
    best = None
    for p1 in range(1, ranks + 1):
        if ranks % p1:
            continue
        try:
            Decomposition("pencil", ranks, p1).validate(N)
        except ValueError:
            continue
        if p1 * p1 <= ranks:
            best = p1
    if best is None:
        raise ValueError(f"no pencil grid of {ranks} ranks splits N={N}")
    return best


def _timed(comm, fn):
    comm.barrier()
    t0 = time.perf_counter()
    fn()
    comm.barrier()
    return time.perf_counter() - t0


def bench_fft_rank(comm, N, decomp, precision="double", repetitions=10, provider="numpy", seed=0):
    """Best-of-``repetitions`` forward+inverse wall time on this rank (collective)."""
    fft = make_fft(N, comm, decomp, precision, provider)
    rng = np.random.default_rng(seed + comm.rank)
    fu = fft.complex_empty()
    v = fft.real_empty()
    # restrict to representable modes so the roundtrip error is meaningful for pencils
    u = fft.inverse(fft.forward(rng.standard_normal(fft.real_shape()).astype(fft.float), fu))

    def pair():
        fft.forward(u, fu)
        fft.inverse(fu, v)

    pair()
    times = [_timed(comm, pair) for _ in range(repetitions)]
    best = comm.allreduce(min(times), "max")
    err = comm.allreduce(float(np.abs(v - u).max()), "max")
    return {"best_time": best, "times": times, "roundtrip_error": err}


def bench_fft(N, decomposition="slab", ranks=(1,), precision="double", repetitions=10,
              provider="numpy", p1=None, comm=None):
    """One timing record per rank count.

    With ``comm`` given (an MPI run) only ``comm.size`` ranks are timed;
    otherwise every count in ``ranks`` runs on the in-process backend.
    """
    records = []
    counts = [comm.size] if comm is not None else list(ranks)
    for R in counts:
        if decomposition == "serial" and R == 1:
            decomp = Decomposition("serial")
        elif decomposition == "pencil":
            decomp = Decomposition("pencil", R, p1 if p1 is not None else default_p1(R, N))
        else:
            decomp = Decomposition("slab", R)
        decomp.validate(N)
        args = (N, decomp, precision, repetitions, provider)
        if comm is not None:
            res = bench_fft_rank(comm, *args)
        else:
            res = run_ranks(R, bench_fft_rank, *args)[0]
        records.append({
            "N": N,
            "decomposition": decomp.kind,
            "ranks": R,
            "p1": decomp.p1,
            "precision": precision,
            "provider": provider,
            "repetitions": repetitions,
            "best_time": res["best_time"],
            "scaled_time": scaled_time(res["best_time"], N, R),
            "roundtrip_error": res["roundtrip_error"],
        })
    base = records[0]
    for rec in records:
        rec["speedup"] = base["best_time"] / rec["best_time"]
        rec["efficiency"] = base["best_time"] * base["ranks"] / (rec["ranks"] * rec["best_time"])
    return records


def bench_solver_rank(comm, config, steps=10):
    """Per-step timings of both kernel paths on the same Taylor-Green state."""
    fft = make_fft(config.N, comm, config.decomp(), config.precision, config.provider)
    tables = fft.wave_tables(config.dealias_rule)
    U0 = taylor_green_init(fft.local_mesh())
    out = {}
    rhs = {}
    for path in ("naive", "fused"):
        solver = NavierStokes(fft, config.nu, config.dt, tables=tables, kernels=path)
        solver.set_velocity(U0)
        rhs[path] = solver.compute_rhs(0).copy()
        solver.step(config.integrator)  # warm-up, includes JIT compilation
        times = [_timed(comm, lambda: solver.step(config.integrator)) for _ in range(steps)]
        out[path] = {
            "best_step_time": comm.allreduce(min(times), "max"),
            "mean_step_time": comm.allreduce(sum(times) / len(times), "max"),
            "steps": steps,
        }
    out["speedup"] = out["naive"]["best_step_time"] / out["fused"]["best_step_time"]
    out["rhs_max_ulp"] = comm.allreduce(float(ulp_distance(rhs["naive"], rhs["fused"])), "max")
    return out
