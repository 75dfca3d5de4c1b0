import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_edges, random_block_coords
from pcac.graph_filter import (
    BlockGraph,
    apply_k_filter,
    build_block_graph,
    one_hop_filter,
    select_k,
    spectral_response,
    write_spectral_csv,
)


def _pair_graph():
    return build_block_graph(np.array([[0, 0, 0], [1, 0, 0]]))


def test_unit_distance_edge():
    g = _pair_graph()
    assert g.n_edges == 1
    np.testing.assert_array_equal(g.degrees, [1, 1])
    assert np.all(g.weights == 1.0)


def test_diagonal_is_not_connected():
    g = build_block_graph(np.array([[0, 0, 0], [1, 1, 0]]))
    assert g.n_edges == 0


@pytest.mark.parametrize("seed", range(5))
def test_edges_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    coords = random_block_coords(rng, int(rng.integers(20, 400)))
    g = build_block_graph(coords)
    got = {(min(a, b), max(a, b)) for a, b in zip(g.rows, g.cols)}
    assert got == brute_edges(coords)
    W = g.adjacency()
    np.testing.assert_array_equal(W, W.T)
    assert np.all(np.diag(W) == 0)
    np.testing.assert_array_equal(g.degrees, W.sum(axis=1))


def test_self_loops_rejected():
    with pytest.raises(ValueError):
        BlockGraph.from_edges(2, [0], [0], [1.0])


def test_two_vertex_filter():
    g = _pair_graph()
    np.testing.assert_allclose(one_hop_filter(g, np.array([0.0, 2.0])), [1.0, 1.0])
    np.testing.assert_allclose(apply_k_filter(g, np.array([0.0, 2.0]), 2), [1.0, 1.0])


def test_isolated_vertex_passes_through():
    g = build_block_graph(np.array([[0, 0, 0], [1, 0, 0], [5, 5, 5]]))
    y = one_hop_filter(g, np.array([[0.0], [2.0], [7.0]]))
    assert y[2, 0] == 7.0


def test_k_zero_identity():
    g = _pair_graph()
    x = np.array([[3.0, 1.0, 2.0], [0.0, 5.0, 9.0]])
    np.testing.assert_array_equal(apply_k_filter(g, x, 0), x)
    with pytest.raises(ValueError):
        apply_k_filter(g, x, -1)


@given(st.integers(0, 2 ** 32 - 1), st.floats(-300, 300), st.integers(0, 6))
def test_constant_signal_preserved(seed, c, k):
    rng = np.random.default_rng(seed)
    g = build_block_graph(random_block_coords(rng, int(rng.integers(1, 200))))
    x = np.full((g.n, 3), c)
    np.testing.assert_allclose(apply_k_filter(g, x, k), x, rtol=0, atol=1e-12)


@given(st.integers(0, 2 ** 32 - 1))
def test_range_contraction_and_dense_oracle(seed):
    rng = np.random.default_rng(seed)
    g = build_block_graph(random_block_coords(rng, int(rng.integers(2, 200))))
    x = rng.uniform(-50, 300, (g.n, 3))
    y = one_hop_filter(g, x)
    assert np.all(y >= x.min(axis=0) - 1e-12) and np.all(y <= x.max(axis=0) + 1e-12)
    dense = (np.eye(g.n) - 0.5 * g.rw_laplacian()) @ x
    np.testing.assert_allclose(y, dense, rtol=0, atol=1e-10)


def test_rw_laplacian_spectrum_in_unit_interval():
    rng = np.random.default_rng(3)
    for _ in range(10):
        g = build_block_graph(random_block_coords(rng, 150))
        lam = np.linalg.eigvals(g.rw_laplacian()).real
        assert lam.min() > -1e-9 and lam.max() < 2 + 1e-9


def test_select_k_exact_predictor():
    g = _pair_graph()
    x = np.array([[1.0, 2, 3], [4, 5, 6]])
    k, y = select_k(g, x, x, 5)
    assert k == 0
    np.testing.assert_array_equal(y, x)


def test_select_k_kmax_zero():
    g = _pair_graph()
    k, _ = select_k(g, np.zeros((2, 3)), np.array([[0.0, 0, 0], [9, 9, 9]]), 0)
    assert k == 0


def test_select_k_denoises_constant_target():
    rng = np.random.default_rng(0)
    side = np.arange(8)
    xx, yy = np.meshgrid(side, side, indexing="ij")
    coords = np.stack([xx.ravel(), yy.ravel(), np.zeros(64, int)], axis=1)
    g = build_block_graph(coords)
    target = np.full((64, 3), 100.0)
    noise = rng.normal(0, 10, (64, 3))
    noise -= noise.mean(axis=0)
    pred = target + noise
    errs = [np.sum((target - apply_k_filter(g, pred, k)) ** 2) for k in range(6)]
    k, y = select_k(g, target, pred, 5)
    assert k == int(np.argmin(errs)) and k > 0
    assert np.sum((target - y) ** 2) == min(errs) < errs[0]


def test_spectral_response_examples():
    assert spectral_response(2, [1.0])[0] == 0.25
    np.testing.assert_array_equal(spectral_response(4, [0.0]), [1.0])
    for k in range(1, 6):
        assert spectral_response(k, [2.0])[0] == 0.0
    with pytest.raises(ValueError):
        spectral_response(1, [2.5])
    with pytest.raises(ValueError):
        spectral_response(1, [-0.1])


def test_filter_matches_spectral_response_on_eigenvectors():
    # h^k(L_RW) acts on each eigenvector by (1 - lambda/2)^k
    coords = np.array([[i, 0, 0] for i in range(6)])
    g = build_block_graph(coords)
    lam, U = np.linalg.eig(g.rw_laplacian())
    lam, U = lam.real, U.real
    for j in range(g.n):
        y = apply_k_filter(g, U[:, j], 3)
        np.testing.assert_allclose(y, spectral_response(3, [np.clip(lam[j], 0, 2)])[0] * U[:, j],
                                   atol=1e-10)


def test_spectral_csv(tmp_path):
    p = tmp_path / "resp.csv"
    write_spectral_csv(p, range(3), 5)
    lines = p.read_text().splitlines()
    assert lines[0] == "lambda,k=0,k=1,k=2"
    assert len(lines) == 6
    assert lines[-1].startswith("2.000000,1.00000000,0.00000000")
