from .providers import FFTProvider, NumpyProvider, ScipyProvider, Radix2Provider, get_provider
from .distributed import (
    PRECISIONS,
    FftWorkspace,
    DistributedFFT,
    SerialFFT,
    SlabFFT,
    PencilFFT,
    make_fft,
)

__all__ = [
    "FFTProvider",
    "NumpyProvider",
    "ScipyProvider",
    "Radix2Provider",
    "get_provider",
    "PRECISIONS",
    "FftWorkspace",
    "DistributedFFT",
    "SerialFFT",
    "SlabFFT",
    "PencilFFT",
    "make_fft",
]
