"""Run configuration shared by the CLI subcommands."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

from .fft import PRECISIONS
from .fft.providers import PROVIDERS
from .kernels import KERNEL_PATHS
from .mesh import DEALIAS_RULES, KINDS, Decomposition
from .solver import INTEGRATORS

__all__ = ["ConfigError", "RunConfig", "INITS"]

INITS = ("taylor-green", "random", "shear")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one run.  Defaults reproduce the Taylor-Green regression case."""

    M: int = 7
    nu: float = 0.000625
    dt: float = 0.01
    T: float = 0.1
    precision: str = "double"
    decomposition: str = "serial"
    ranks: int = 1
    p1: int | None = None
    integrator: str = "rk4"
    dealias_rule: str = "appendix"
    kernels: str = "fused"
    provider: str = "numpy"
    init: str = "taylor-green"
    seed: int = 0
    diag_interval: int = 1
    output: str | None = None
    checkpoint_dir: str | None = None
    checkpoint_interval: int = 0
    restart: str | None = None

    @property
    def N(self):
        return 2**self.M

    def decomp(self):
        return Decomposition(self.decomposition, self.ranks, self.p1)

    def validate(self):
        def choice(name, options):
            if getattr(self, name) not in options:
                raise ConfigError(f"{name} must be one of {tuple(options)}, got {getattr(self, name)!r}")

        if not isinstance(self.M, int) or self.M < 1:
            raise ConfigError(f"M must be a positive integer, got {self.M!r}")
        choice("precision", PRECISIONS)
        choice("decomposition", KINDS)
        choice("integrator", INTEGRATORS)
        choice("dealias_rule", DEALIAS_RULES)
        choice("kernels", KERNEL_PATHS)
        choice("provider", PROVIDERS)
        choice("init", INITS)
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not self.T >= 0:
            raise ConfigError(f"T must be non-negative, got {self.T}")
        if not self.nu >= 0:
            raise ConfigError(f"nu must be non-negative, got {self.nu}")
        if self.diag_interval < 1:
            raise ConfigError("diag_interval must be at least 1")
        if self.checkpoint_interval < 0:
            raise ConfigError("checkpoint_interval must be non-negative")
        if self.checkpoint_interval and not self.checkpoint_dir:
            raise ConfigError("checkpoint_interval requires checkpoint_dir")
        try:
            self.decomp().validate(self.N)
        except ValueError as e:
            raise ConfigError(str(e)) from None
        return self

    def replace(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]
