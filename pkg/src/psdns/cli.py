"""Command-line interface.

Single-rank and in-process multi-rank runs need no launcher::

    psdns run --M 5 --T 1.0 --decomposition slab --ranks 4 --output ts.csv

Under an MPI launcher every process runs the same command and the rank count
is taken from the launcher::

    mpirun -n 4 psdns run --backend mpi --decomposition pencil --p1 2

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .comm import run_ranks
from .config import INITS, ConfigError, RunConfig

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

TG_REFERENCE_ENERGY = 0.124953117517
TG_TOLERANCE = 5e-8

_MPI_ENV = ("OMPI_COMM_WORLD_SIZE", "PMI_SIZE", "PMIX_RANK", "MPI_LOCALNRANKS")


def _add_config_args(p, *, outputs=True):
    d = RunConfig()
    g = p.add_argument_group("run configuration")
    g.add_argument("--M", type=int, default=d.M, help="mesh exponent, N = 2**M (default %(default)s)")
    g.add_argument("--nu", type=float, default=d.nu, help="kinematic viscosity (default %(default)s)")
    g.add_argument("--dt", type=float, default=d.dt, help="time step (default %(default)s)")
    g.add_argument("--T", type=float, default=d.T, help="end time (default %(default)s)")
    g.add_argument("--precision", choices=("single", "double"), default=d.precision)
    g.add_argument("--decomposition", choices=("serial", "slab", "pencil"), default=None,
                   help="default: serial on one rank, slab otherwise")
    g.add_argument("--p1", type=int, default=None, help="ranks in the first pencil direction")
    g.add_argument("--integrator", choices=("euler", "rk4"), default=d.integrator)
    g.add_argument("--dealias-rule", choices=("maintext", "appendix"), default=d.dealias_rule)
    g.add_argument("--kernels", choices=("naive", "fused"), default=d.kernels)
    g.add_argument("--provider", choices=("numpy", "scipy", "radix2"), default=d.provider,
                   help="serial FFT implementation")
    g.add_argument("--init", choices=INITS, default=d.init)
    g.add_argument("--seed", type=int, default=d.seed)
    g.add_argument("--diag-interval", type=int, default=d.diag_interval, help="steps between diagnostics")
    if outputs:
        g.add_argument("--output", default=None, help="time-series CSV path")
        g.add_argument("--checkpoint-dir", default=None)
        g.add_argument("--checkpoint-interval", type=int, default=0, help="steps between checkpoints (0: final only)")
        g.add_argument("--restart", default=None, help="checkpoint directory to resume from")


def _add_backend_args(p):
    g = p.add_argument_group("parallel backend")
    g.add_argument("--backend", choices=("auto", "threads", "mpi"), default="auto",
                   help="auto: mpi when started by an MPI launcher, else threads")
    g.add_argument("--ranks", type=int, default=1, help="number of in-process ranks (threads backend)")


def _use_mpi(args):
    if args.backend == "auto":
        return any(k in os.environ for k in _MPI_ENV)
    return args.backend == "mpi"


def _config_from_args(args, ranks):
    decomposition = args.decomposition or ("serial" if ranks == 1 else "slab")
    fields = {k: getattr(args, k) for k in RunConfig.field_names() if hasattr(args, k)}
    fields.update(decomposition=decomposition, ranks=ranks)
    if decomposition != "pencil":
        fields["p1"] = None
    return RunConfig(**fields).validate()


def _launch(args, fn, *fargs):
    """Run ``fn(comm, *fargs)`` on every rank; return rank 0's result."""
    if _use_mpi(args):
        from .comm import mpi_world
        comm = mpi_world()
        return comm, fn(comm, *fargs)
    return None, run_ranks(args.ranks, fn, *fargs)[0]


def _ranks(args):
    if _use_mpi(args):
        from .comm import mpi_world
        return mpi_world().size
    if args.ranks < 1:
        raise ConfigError("--ranks must be positive")
    return args.ranks


def _is_root(comm):
    return comm is None or comm.rank == 0


def _emit(report, path=None):
    text = json.dumps(report, indent=2)
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text + "\n")
    else:
        print(text)


def cmd_run(args):
    from .runner import run_simulation
    config = _config_from_args(args, _ranks(args))
    comm, records = _launch(args, run_simulation, config)
    if _is_root(comm):
        _emit({"config": config.to_dict(), "final": records[-1], "records": len(records)})
    return EXIT_OK


def cmd_verify(args):
    from .runner import run_simulation
    config = _config_from_args(args, _ranks(args))
    comm, records = _launch(args, run_simulation, config)
    if not _is_root(comm):
        return EXIT_OK
    final = records[-1]
    error = final["kinetic_energy"] - args.expected
    checks = {
        "final_energy": abs(error) <= args.tolerance,
        "divergence": final["divergence_max"] <= args.divergence_tolerance,
    }
    _emit({
        "config": config.to_dict(),
        "final": final,
        "expected_energy": args.expected,
        "energy_error": error,
        "tolerance": args.tolerance,
        "checks": checks,
        "passed": all(checks.values()),
    })
    return EXIT_OK if all(checks.values()) else EXIT_NUMERICAL


def cmd_bench_fft(args):
    from .bench import bench_fft
    comm = None
    if _use_mpi(args):
        from .comm import mpi_world
        comm = mpi_world()
    N = 2**args.M
    if args.repetitions < 1:
        raise ConfigError("--repetitions must be positive")
    try:
        records = bench_fft(N, args.decomposition, args.ranks, args.precision, args.repetitions,
                            args.provider, args.p1, comm)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    if _is_root(comm):
        _emit({
            "benchmark": "fft",
            "config": {k: v for k, v in vars(args).items() if k != "func"},
            "metric": "scaled_time = best_time * ranks / (N**3 * log2(N))",
            "records": records,
        }, args.output)
    return EXIT_OK


def cmd_bench_solver(args):
    from .bench import bench_solver_rank
    config = _config_from_args(args, _ranks(args))
    if args.steps < 1:
        raise ConfigError("--steps must be positive")
    comm, result = _launch(args, bench_solver_rank, config, args.steps)
    if _is_root(comm):
        _emit({"benchmark": "solver", "config": config.to_dict(), **result}, args.output)
    return EXIT_OK


def cmd_checkpoint(args):
    from .checkpoint import read_checkpoint
    path = Path(args.path)
    manifest_file = path / "manifest.json"
    try:
        manifest = json.loads(manifest_file.read_text())
    except (OSError, ValueError) as e:
        raise OSError(f"cannot read manifest {manifest_file}: {e}") from e
    headers = []
    for r in range(manifest["ranks"]):
        header, U_hat = read_checkpoint(path, r)
        headers.append({**header, "bytes": U_hat.nbytes})
    _emit({"manifest": manifest, "ranks": headers})
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="psdns", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="advance a simulation and write diagnostics")
    _add_config_args(p)
    _add_backend_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="Taylor-Green regression against the reference energy")
    _add_config_args(p)
    _add_backend_args(p)
    p.add_argument("--expected", type=float, default=TG_REFERENCE_ENERGY)
    p.add_argument("--tolerance", type=float, default=TG_TOLERANCE)
    p.add_argument("--divergence-tolerance", type=float, default=1e-8)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench-fft", help="best-of-R forward+inverse FFT timings over rank counts")
    p.add_argument("--M", type=int, default=6)
    p.add_argument("--decomposition", choices=("serial", "slab", "pencil"), default="slab")
    p.add_argument("--ranks", type=int, nargs="+", default=[1], help="rank counts to time (threads backend)")
    p.add_argument("--p1", type=int, default=None)
    p.add_argument("--precision", choices=("single", "double"), default="double")
    p.add_argument("--provider", choices=("numpy", "scipy", "radix2"), default="numpy")
    p.add_argument("--repetitions", "-R", type=int, default=10)
    p.add_argument("--backend", choices=("auto", "threads", "mpi"), default="auto")
    p.add_argument("--output", default=None, help="JSON report path (default: stdout)")
    p.set_defaults(func=cmd_bench_fft)

    p = sub.add_parser("bench-solver", help="per-step timings of naive and fused kernels")
    _add_config_args(p, outputs=False)
    _add_backend_args(p)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--output", default=None, help="JSON report path (default: stdout)")
    p.set_defaults(func=cmd_bench_solver, M=5)

    p = sub.add_parser("checkpoint", help="inspect a checkpoint directory")
    p.add_argument("action", choices=("info",))
    p.add_argument("path")
    p.set_defaults(func=cmd_checkpoint)
    return parser


def main(argv=None):
    from .runner import NumericalError

    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"psdns: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as e:
        print(f"psdns: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as e:
        print(f"psdns: I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
