"""Shared oracles and helpers for the test suite."""
import numpy as np
import pytest

from psdns.mesh import Decomposition

# (kind, ranks, p1) combinations exercised on small meshes
DECOMPS = [
    ("serial", 1, None),
    ("slab", 1, None),
    ("slab", 2, None),
    ("slab", 4, None),
    ("pencil", 1, 1),
    ("pencil", 2, 1),
    ("pencil", 2, 2),
    ("pencil", 4, 1),
    ("pencil", 4, 2),
    ("pencil", 4, 4),
]


def decomp_id(d):
    kind, ranks, p1 = d
    return f"{kind}{ranks}" + (f"p{p1}" if kind == "pencil" else "")


def make_decomp(kind, ranks, p1=None):
    return Decomposition(kind, ranks, p1)


def gather(blocks, dtype=None):
    """Assemble ``[(layout, local_array), ...]`` into the global array.

    Leading axes of the local arrays (vector components) are kept.
    """
    layout, a = blocks[0]
    lead = a.shape[: a.ndim - 3]
    out = np.zeros(lead + tuple(layout.global_shape), dtype=dtype or a.dtype)
    seen = np.zeros(layout.global_shape, dtype=int)
    for layout, a in blocks:
        out[(Ellipsis,) + layout.slices] = a
        seen[layout.slices] += 1
    assert (seen == 1).all(), "local blocks do not tile the global array"
    return out


def scatter(global_array, layout):
    return np.ascontiguousarray(global_array[(Ellipsis,) + layout.slices])


def dft3_direct(u):
    """Brute-force ``sum_x u(x) exp(-i k.x)`` over all N**3 points for every k, O(N**6)."""
    N = u.shape[0]
    idx = np.indices((N, N, N)).reshape(3, -1)
    phase = idx.T @ idx  # k.j for every pair, k and j both in 0..N-1
    return (np.exp(-2j * np.pi * phase / N) @ u.reshape(-1)).reshape(N, N, N)


def spectral_view(full, kind):
    """Restrict a full (kx, ky, kz) spectrum to the half spectrum stored by ``kind``."""
    N = full.shape[-1]
    if kind == "pencil":
        return full[..., : N // 2]
    return full[..., : N // 2 + 1]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
