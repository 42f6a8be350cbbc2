"""Drive a full simulation from a :class:`RunConfig` on one rank."""
from __future__ import annotations

import csv
import json
import logging
import math
from pathlib import Path

import numpy as np

from .cases import random_solenoidal_init, shear_mode_init, taylor_green_init
from .checkpoint import restore_checkpoint, write_checkpoint
from .diagnostics import summary
from .fft import make_fft
from .solver import NavierStokes

__all__ = ["NumericalError", "TIMESERIES_FIELDS", "build_solver", "run_simulation", "read_timeseries"]

log = logging.getLogger(__name__)

TIMESERIES_FIELDS = ("step", "t", "kinetic_energy", "enstrophy", "dissipation", "divergence_max")


class NumericalError(ArithmeticError):
    """A diagnostic became non-finite during a run."""


def build_solver(comm, config):
    """Transform, solver and initial condition for ``config`` on this rank."""
    fft = make_fft(config.N, comm, config.decomp(), config.precision, config.provider)
    solver = NavierStokes(fft, config.nu, config.dt, kernels=config.kernels,
                          dealias_rule=config.dealias_rule)
    if config.restart:
        restore_checkpoint(solver, config.restart)
    elif config.init == "random":
        solver.set_spectral_velocity(random_solenoidal_init(fft, config.seed))
    elif config.init == "shear":
        solver.set_velocity(shear_mode_init(fft.local_mesh()))
    else:
        solver.set_velocity(taylor_green_init(fft.local_mesh()))
    return solver


class _TimeSeries:
    """CSV time series with a JSON header line; only rank 0 writes."""

    def __init__(self, path, config):
        self.path = Path(path) if path else None
        self._fh = None
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "w", newline="")
            self._fh.write("# " + json.dumps({"format": "psdns-timeseries/1", "config": config.to_dict()}) + "\n")
            self._writer = csv.DictWriter(self._fh, fieldnames=TIMESERIES_FIELDS)
            self._writer.writeheader()

    def append(self, record):
        if self._fh is not None:
            self._writer.writerow({k: repr(record[k]) if isinstance(record[k], float) else record[k]
                                   for k in TIMESERIES_FIELDS})
            self._fh.flush()

    def close(self):
        if self._fh is not None:
            self._fh.close()


def read_timeseries(path):
    """Return ``(header, records)`` from a time-series file."""
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError(f"{path}: missing JSON header line")
        header = json.loads(first[2:])
        records = []
        for row in csv.DictReader(fh):
            records.append({k: int(v) if k == "step" else float(v) for k, v in row.items()})
    return header, records


def run_simulation(comm, config):
    """Run ``config`` on this rank; collective over ``comm``.

    Returns the list of diagnostic records on rank 0 (``None`` elsewhere).
    Raises :class:`NumericalError` on every rank if a diagnostic turns
    non-finite.
    """
    config.validate()
    solver = build_solver(comm, config)
    root = comm.rank == 0
    series = _TimeSeries(config.output if root else None, config)
    records = []

    def diagnose():
        rec = summary(solver)
        ok = rec is None or all(math.isfinite(rec[k]) for k in TIMESERIES_FIELDS)
        if not comm.allreduce(ok, "min"):
            raise NumericalError(f"non-finite diagnostics at step {solver.state.tstep}")
        if root:
            records.append(rec)
            series.append(rec)
            log.info("step %d t=%.6g E=%.12g", rec["step"], rec["t"], rec["kinetic_energy"])

    def after_step(s):
        step = s.state.tstep
        if step % config.diag_interval == 0:
            diagnose()
        if config.checkpoint_interval and step % config.checkpoint_interval == 0:
            write_checkpoint(s, Path(config.checkpoint_dir) / f"step{step:08d}")

    try:
        diagnose()
        # blow-ups surface as non-finite diagnostics, not as floating-point warnings
        with np.errstate(over="ignore", invalid="ignore"):
            solver.run(config.T, config.integrator, after_step)
        if solver.state.tstep % config.diag_interval:
            diagnose()
        if config.checkpoint_dir:
            write_checkpoint(solver, Path(config.checkpoint_dir) / "final")
    finally:
        series.close()
    return records if root else None
