"""Serial 1D FFT providers.

A provider exposes ``fft``, ``ifft``, ``rfft`` and ``irfft`` along one axis.
Forward transforms are unnormalized sums; every inverse carries ``1/n`` so
that three composed inverses carry ``1/N**3``.  All methods write into the
``out`` array when one is given and return it.
"""
from __future__ import annotations

import numpy as np

__all__ = ["PROVIDERS", "FFTProvider", "NumpyProvider", "ScipyProvider", "Radix2Provider", "get_provider"]


class FFTProvider:
    name = "abstract"

    def fft(self, a, axis=-1, out=None):
        raise NotImplementedError

    def ifft(self, a, axis=-1, out=None):
        raise NotImplementedError

    def rfft(self, a, axis=-1, out=None):
        raise NotImplementedError

    def irfft(self, a, n, axis=-1, out=None):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}()"


class NumpyProvider(FFTProvider):
    """numpy.fft (pocketfft)."""

    name = "numpy"

    def fft(self, a, axis=-1, out=None):
        return np.fft.fft(a, axis=axis, out=out)

    def ifft(self, a, axis=-1, out=None):
        return np.fft.ifft(a, axis=axis, out=out)

    def rfft(self, a, axis=-1, out=None):
        return np.fft.rfft(a, axis=axis, out=out)

    def irfft(self, a, n, axis=-1, out=None):
        return np.fft.irfft(a, n=n, axis=axis, out=out)


def _store(result, out):
    if out is None:
        return result
    out[...] = result
    return out


class ScipyProvider(FFTProvider):
    """scipy.fft, optionally multithreaded through ``workers``."""

    name = "scipy"

    def __init__(self, workers=None):
        import scipy.fft
        self._fft = scipy.fft
        self.workers = workers

    def fft(self, a, axis=-1, out=None):
        return _store(self._fft.fft(a, axis=axis, workers=self.workers), out)

    def ifft(self, a, axis=-1, out=None):
        return _store(self._fft.ifft(a, axis=axis, workers=self.workers), out)

    def rfft(self, a, axis=-1, out=None):
        return _store(self._fft.rfft(a, axis=axis, workers=self.workers), out)

    def irfft(self, a, n, axis=-1, out=None):
        return _store(self._fft.irfft(a, n=n, axis=axis, workers=self.workers), out)


def _complex_dtype(dtype):
    return np.result_type(dtype, np.complex64)


class Radix2Provider(FFTProvider):
    """Iterative decimation-in-time Cooley-Tukey FFT, vectorized over the other axes.

    Only power-of-two lengths are supported.  Twiddles are computed in double
    precision and cast to the working precision.
    """

    name = "radix2"

    def __init__(self):
        self._cache = {}

    def _plan(self, n, dtype):
        key = (n, np.dtype(dtype))
        plan = self._cache.get(key)
        if plan is None:
            if n < 1 or n & (n - 1):
                raise ValueError(f"radix-2 FFT requires a power-of-two length, got {n}")
            bits = n.bit_length() - 1
            rev = np.zeros(n, dtype=np.intp)
            for b in range(bits):
                rev |= ((np.arange(n) >> b) & 1) << (bits - 1 - b)
            twiddles = []
            m = 2
            while m <= n:
                twiddles.append(np.exp(-2j * np.pi * np.arange(m // 2) / m).astype(dtype))
                m *= 2
            plan = self._cache[key] = (rev, twiddles)
        return plan

    def _transform(self, a, axis, inverse):
        a = np.asarray(a)
        ctype = _complex_dtype(a.dtype)
        x = np.moveaxis(a, axis, -1).astype(ctype)
        n = x.shape[-1]
        rev, twiddles = self._plan(n, ctype)
        x = x[..., rev]
        lead = x.shape[:-1]
        m = 2
        for w in twiddles:
            if inverse:
                w = w.conj()
            x = x.reshape(lead + (n // m, 2, m // 2))
            even = x[..., 0, :]
            odd = x[..., 1, :] * w
            x = np.stack((even + odd, even - odd), axis=-2)
            m *= 2
        x = x.reshape(lead + (n,))
        if inverse:
            x /= n
        return np.moveaxis(x, -1, axis)

    def fft(self, a, axis=-1, out=None):
        return _store(self._transform(a, axis, False), out)

    def ifft(self, a, axis=-1, out=None):
        return _store(self._transform(a, axis, True), out)

    def rfft(self, a, axis=-1, out=None):
        a = np.asarray(a)
        n = a.shape[axis]
        full = self._transform(a, axis, False)
        half = np.take(full, np.arange(n // 2 + 1), axis=axis)
        return _store(half, out)

    def irfft(self, a, n, axis=-1, out=None):
        # rebuild the Hermitian spectrum; imaginary parts of k=0 and k=n/2 are ignored
        h = np.moveaxis(np.asarray(a), axis, -1)
        full = np.empty(h.shape[:-1] + (n,), dtype=h.dtype)
        full[..., : n // 2 + 1] = h[..., : n // 2 + 1]
        full[..., n // 2 + 1:] = h[..., 1: n // 2][..., ::-1].conj()
        full[..., 0] = full[..., 0].real
        full[..., n // 2] = full[..., n // 2].real
        x = self._transform(full, -1, True).real
        return _store(np.moveaxis(x, -1, axis), out)


PROVIDERS = {"numpy": NumpyProvider, "scipy": ScipyProvider, "radix2": Radix2Provider}


def get_provider(name="numpy"):
    if isinstance(name, FFTProvider):
        return name
    try:
        return PROVIDERS[name]()
    except KeyError:
        raise ValueError(f"unknown FFT provider {name!r}, expected one of {sorted(PROVIDERS)}") from None
