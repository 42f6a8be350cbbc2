import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psdns.mesh import (
    Decomposition,
    build_physical_mesh,
    build_wave_tables,
    dealias_cutoff,
    dft_frequencies,
    half_frequencies,
    physical_layout,
    spectral_layout,
)

from conftest import DECOMPS, decomp_id, gather, make_decomp


@pytest.mark.parametrize("N, expected", [
    (8, [0, 1, 2, 3, -4, -3, -2, -1]),
    (2, [0, -1]),
    (4, [0, 1, -2, -1]),
])
def test_dft_frequencies(N, expected):
    assert list(dft_frequencies(N)) == expected


@pytest.mark.parametrize("N, expected", [(8, [0, 1, 2, 3, 4]), (2, [0, 1]), (16, list(range(9)))])
def test_half_frequencies(N, expected):
    assert list(half_frequencies(N)) == expected


@given(st.integers(1, 64))
def test_frequencies_match_numpy(h):
    N = 2 * h
    assert np.array_equal(dft_frequencies(N), np.fft.fftfreq(N, 1.0 / N).astype(int))
    assert np.array_equal(half_frequencies(N), np.abs(np.fft.rfftfreq(N, 1.0 / N)).astype(int))


@pytest.mark.parametrize("N", [0, 3, -2, 7])
def test_frequencies_reject_odd_or_nonpositive(N):
    with pytest.raises(ValueError):
        dft_frequencies(N)


def test_serial_mesh_coordinates():
    X = build_physical_mesh(4, Decomposition("serial"))
    expected = np.array([0, np.pi / 2, np.pi, 3 * np.pi / 2])
    assert np.allclose(X[0][:, 0, 0], expected)
    assert np.allclose(X[1][0, :, 0], expected)
    assert np.allclose(X[2][0, 0, :], expected)


def test_slab_mesh_rank2_of_4():
    X = build_physical_mesh(8, Decomposition("slab", 4), rank=2)
    assert X.shape == (3, 2, 8, 8)
    assert np.allclose(X[0][:, 0, 0], [np.pi, 5 * np.pi / 4])


def test_pencil_mesh_rank3():
    d = Decomposition("pencil", 4, 2)
    assert d.coords(3) == (1, 1)
    layout = physical_layout(16, d, 3)
    assert layout.slices == (slice(8, 16), slice(8, 16), slice(0, 16))
    X = build_physical_mesh(16, d, 3)
    assert np.allclose(X[0][:, 0, 0] * 16 / (2 * np.pi), np.arange(8, 16))
    assert np.allclose(X[1][0, :, 0] * 16 / (2 * np.pi), np.arange(8, 16))
    assert np.allclose(X[2][0, 0, :] * 16 / (2 * np.pi), np.arange(16))


def test_pencil_group_coordinates():
    d = Decomposition("pencil", 4, 2)
    # same xy-coordinate shares an xz-group
    assert [r for r in range(4) if d.coords(r)[1] == 0] == [0, 1]
    assert [r for r in range(4) if d.coords(r)[0] == 0] == [0, 2]


def test_k_over_k2_examples():
    T = build_wave_tables(8, Decomposition("serial"))
    assert np.array_equal(T.K_over_K2[:, 0, 0, 0], [0, 0, 0])
    assert np.allclose(T.K_over_K2[:, 1, 2, 2], [1 / 9, 2 / 9, 2 / 9], rtol=0, atol=1e-16)
    assert T.K2[1, 2, 2] == 9


def test_dealias_rules_at_n8():
    assert dealias_cutoff(8, "appendix") == pytest.approx(10 / 3)
    assert dealias_cutoff(8, "maintext") == pytest.approx(8 / 3)
    app = build_wave_tables(8, Decomposition("serial"), dealias_rule="appendix").dealias
    main = build_wave_tables(8, Decomposition("serial"), dealias_rule="maintext").dealias
    assert app[3, 0, 0] and not app[4, 0, 0]  # index 4 is k = -4
    assert not main[3, 0, 0]
    assert main[2, 0, 0]


def test_unknown_dealias_rule():
    with pytest.raises(ValueError):
        dealias_cutoff(8, "half")


@pytest.mark.parametrize("kind, ranks, p1", [
    ("slab", 3, None),
    ("slab", 16, None),
    ("pencil", 4, 3),
    ("pencil", 8, 8),  # N/p1 = 1 is odd
])
def test_invalid_decompositions(kind, ranks, p1):
    with pytest.raises(ValueError):
        Decomposition(kind, ranks, p1).validate(8)


def test_decomposition_constructor_checks():
    with pytest.raises(ValueError):
        Decomposition("cube", 1)
    with pytest.raises(ValueError):
        Decomposition("serial", 2)
    with pytest.raises(ValueError):
        Decomposition("pencil", 4)


@pytest.mark.parametrize("d", DECOMPS, ids=decomp_id)
@pytest.mark.parametrize("N", [8, 16])
def test_wave_tables_reconstruct_serial(N, d):
    decomp = make_decomp(*d)
    serial = build_wave_tables(N, Decomposition("serial"))
    blocks = [(t.layout, t.K) for t in (build_wave_tables(N, decomp, r) for r in range(decomp.ranks))]
    K = gather(blocks)
    # pencils store kz = 0..N/2-1, the serial half spectrum without its Nyquist plane
    nz = N // 2 if decomp.kind == "pencil" else N // 2 + 1
    assert np.array_equal(K, serial.K[..., :nz])


@pytest.mark.parametrize("d", DECOMPS, ids=decomp_id)
def test_wave_table_identities(d):
    N = 8
    decomp = make_decomp(*d)
    for r in range(decomp.ranks):
        T = build_wave_tables(N, decomp, r)
        assert np.array_equal(T.K2, np.sum(T.K**2, 0))
        zero = T.K2 == 0
        assert np.all(T.K_over_K2[:, zero] == 0)
        rebuilt = T.K_over_K2 * T.K2
        assert np.allclose(rebuilt[:, ~zero], T.K[:, ~zero], rtol=1e-15, atol=0)
        assert T.K.dtype.kind == "i"
        assert not T.K.flags.writeable


@pytest.mark.parametrize("rule", ["appendix", "maintext"])
def test_dealias_mask_symmetric(rule):
    N = 16
    T = build_wave_tables(N, Decomposition("serial"), dealias_rule=rule)
    kappa = T.cutoff
    expected = np.all(np.abs(T.K) < kappa, axis=0)
    assert np.array_equal(T.dealias, expected)
    # k -> -k within the stored half spectrum: kz = 0 plane maps onto itself
    plane = T.dealias[:, :, 0]
    neg = (-np.arange(N)) % N
    assert np.array_equal(plane, plane[neg][:, neg])


@pytest.mark.parametrize("d", DECOMPS, ids=decomp_id)
def test_physical_blocks_tile_domain(d):
    N = 8
    decomp = make_decomp(*d)
    blocks = [(physical_layout(N, decomp, r), build_physical_mesh(N, decomp, r)) for r in range(decomp.ranks)]
    X = gather(blocks)
    assert np.allclose(X, build_physical_mesh(N, Decomposition("serial")))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(1, 1), (2, 1), (2, 2), (4, 1), (4, 2), (4, 4), (8, 2), (8, 4), (16, 4)]),
       st.sampled_from([8, 16, 32]))
def test_pencil_layouts_partition(grid, N):
    ranks, p1 = grid
    decomp = Decomposition("pencil", ranks, p1)
    try:
        decomp.validate(N)
    except ValueError:
        return
    for layout_fn in (physical_layout, spectral_layout):
        layouts = [layout_fn(N, decomp, r) for r in range(ranks)]
        seen = np.zeros(layouts[0].global_shape, dtype=int)
        for lay in layouts:
            seen[lay.slices] += 1
        assert (seen == 1).all()
        assert sum(lay.size for lay in layouts) == int(np.prod(layouts[0].global_shape))


def test_spectral_layout_shapes():
    assert spectral_layout(16, Decomposition("serial")).local_shape == (16, 16, 9)
    assert spectral_layout(16, Decomposition("slab", 4), 1).local_shape == (16, 4, 9)
    assert spectral_layout(16, Decomposition("pencil", 4, 2), 0).local_shape == (8, 16, 4)


def test_weights_half_spectrum():
    T = build_wave_tables(8, Decomposition("serial"))
    w = T.weights
    assert (w[..., 0] == 1).all() and (w[..., 4] == 1).all()
    assert (w[..., 1:4] == 2).all()
