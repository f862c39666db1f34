from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from argmaxlab.bridge import (AnchorSet, BridgeSampler, ReconstructionSampler,
                              check_reconstruction_identity, gamma_functions,
                              reconstruct_from_bridge, require_grid_anchors, residual_kernel,
                              sample_conditioned_path)
from argmaxlab.errors import ConfigurationError, DegenerateAnchorError
from argmaxlab.kernels import KernelSpec, kernel_cross, kernel_matrix
from argmaxlab.paths import Grid
from argmaxlab.rng import SeedSpec

from oracles import schur_residual

BM = KernelSpec.brownian()
G64 = Grid.uniform(63)


def _cov_within(X, target, k=5.0):
    """Entrywise sample covariance against ``target`` within k standard errors."""
    N = X.shape[0]
    Xc = X - X.mean(axis=0)
    C = Xc.T @ Xc / (N - 1)
    prod = Xc[:, :, None] * Xc[:, None, :]
    se = prod.std(axis=0, ddof=1) / math.sqrt(N)
    bad = np.abs(C - target) > k * se + 1e-12
    return not bad.any(), C, se


def test_level_zero_is_base_kernel():
    P = G64.points
    np.testing.assert_array_equal(residual_kernel(BM, [[1.0]], 0).matrix(G64),
                                  kernel_matrix(BM, G64))
    np.testing.assert_array_equal(residual_kernel(BM, []).cross(P, P), kernel_cross(BM, P, P))


def test_brownian_bridge_kernel():
    R1 = residual_kernel(BM, [[1.0]])
    u = G64.times
    np.testing.assert_allclose(R1.matrix(G64), np.minimum.outer(u, u) - np.outer(u, u),
                               atol=1e-15)
    assert R1(0.25, 0.75) == pytest.approx(0.0625, abs=1e-15)


@pytest.mark.parametrize("spec,grid,anchors", [
    (BM, G64, [[0.5], [1.0]]),
    (KernelSpec.fbm(0.3), G64, [[0.25], [0.75], [1.0]]),
    (KernelSpec.ornstein_uhlenbeck(1.0, 1.0), G64, [[1.0], [0.5]]),
    (KernelSpec.sheet(), Grid.product((7, 7), (1.0, 1.0)), [[1.0, 0.0], [0.0, 1.0],
                                                            [4 / 7, 3 / 7]]),
])
def test_residual_matches_schur_complement_and_vanishes_at_anchors(spec, grid, anchors):
    A = np.asarray(anchors)
    P = grid.points
    R = residual_kernel(spec, A)
    oracle = schur_residual(kernel_cross(spec, P, P), kernel_cross(spec, P, A),
                            kernel_cross(spec, A, A))
    M = R.matrix(grid)
    scale = np.abs(kernel_cross(spec, P, P)).max()
    np.testing.assert_allclose(M, oracle, atol=1e-10 * scale)
    np.testing.assert_allclose(M, M.T, atol=0)
    assert np.linalg.eigvalsh(M).min() > -1e-10 * scale
    for k in range(1, A.shape[0] + 1):
        Rk = residual_kernel(spec, A, k)
        for j in range(k):
            assert np.abs(Rk.cross(A[j:j + 1], P)).max() <= 1e-12


def test_order_insensitivity():
    spec = KernelSpec.fbm(0.7)
    A = np.array([[0.2], [0.9], [0.55]])
    M1 = residual_kernel(spec, A).matrix(G64)
    M2 = residual_kernel(spec, A[::-1]).matrix(G64)
    assert np.abs(M1 - M2).max() <= 1e-10 * np.abs(kernel_matrix(spec, G64)).max()


def test_gamma_examples():
    g = gamma_functions(BM, [[1.0]])
    np.testing.assert_allclose(g(G64.points)[:, 0], G64.times)
    sg = gamma_functions(KernelSpec.sheet((2.0, 3.0)), [[2.0, 0.0], [0.0, 3.0]])
    P = Grid.product((4, 6), (2.0, 3.0)).points
    np.testing.assert_allclose(sg(P), P / np.array([2.0, 3.0]), atol=1e-15)
    np.testing.assert_allclose(sg(np.array([[2.0, 0.0], [0.0, 3.0]])), np.eye(2))
    np.testing.assert_allclose(sg.linear_slopes(P), [0.5, 1 / 3])
    with pytest.raises(ConfigurationError, match="condition 1"):
        gamma_functions(BM, [[0.5], [1.0]])


def test_reconstruction_exact_for_brownian_anchor_one():
    chk = check_reconstruction_identity(BM, [[1.0]], G64)
    assert chk.residual <= 1e-12
    assert check_reconstruction_identity(BM, [], G64).residual == 0.0


def _random_admissible(family, rng):
    if family == "brownian":
        return BM, G64, [[rng.integers(1, 64) / 63]]
    if family == "ou":
        return (KernelSpec.ornstein_uhlenbeck(rng.uniform(0.2, 3), rng.uniform(0.5, 2)), G64,
                [[rng.integers(1, 64) / 63]])
    if family == "fbm":
        return KernelSpec.fbm(rng.uniform(0.1, 0.95)), G64, [[rng.integers(1, 64) / 63]]
    g = Grid.product((7, 7), (1.0, 1.0))
    a, b = rng.integers(1, 8, size=2) / 7
    if family == "sheet":
        return KernelSpec.sheet(), g, [[a, 0.0], [0.0, b]]
    if family == "linear":
        return KernelSpec.linear((1.0, 1.0)), g, [[a, 0.0], [0.0, b]]
    return KernelSpec.additive(2), Grid.simplex(2, 10), [[1.0, 0.0], [0.0, 1.0]]


@given(st.sampled_from(["brownian", "ou", "fbm", "sheet", "linear", "additive"]),
       st.integers(0, 2 ** 32 - 1))
def test_reconstruction_identity_all_families(family, seed):
    spec, grid, anchors = _random_admissible(family, np.random.default_rng(seed))
    assert check_reconstruction_identity(spec, anchors, grid).passes(1e-10)


def test_degenerate_and_invalid_anchors():
    with pytest.raises(DegenerateAnchorError):
        residual_kernel(BM, [[0.5], [0.5 + 1e-14]])
    with pytest.raises(ConfigurationError):
        residual_kernel(BM, [[0.5], [0.5]])
    with pytest.raises(DegenerateAnchorError):
        residual_kernel(BM, [[0.0]])
    with pytest.raises(ConfigurationError):
        AnchorSet.build(BM, [[i / 10] for i in range(1, 10)])
    with pytest.raises(ConfigurationError):
        require_grid_anchors(Grid.uniform(8), [[0.3]])


def test_conditioned_paths_vanish_at_anchors():
    A = [[0.25], [1.0]]
    p = sample_conditioned_path(BM, A, Grid.uniform(16), SeedSpec(4, 2))
    assert p.values[4] == 0.0 and p.values[16] == 0.0
    sheet = KernelSpec.sheet()
    g = Grid.product((8, 8), (1.0, 1.0))
    X = BridgeSampler(sheet, [[1.0, 0.0], [0.0, 1.0]], g).sample_block(1, 0, 20)
    assert np.all(X[:, g.locate([1.0, 0.0])] == 0) and np.all(X[:, g.locate([0.0, 1.0])] == 0)


def test_bridge_conditional_law():
    g = Grid.uniform(16)
    X = BridgeSampler(BM, [[1.0]], g).sample_block(21, 0, 50_000)
    i, j = g.locate([0.25]), g.locate([0.75])
    x, y = X[:, i], X[:, j]
    c = np.cov(x, y)[0, 1]
    se = (x * y).std(ddof=1) / math.sqrt(x.size)
    assert abs(c - 0.0625) < 5 * se
    ok, C, se = _cov_within(X, residual_kernel(BM, [[1.0]]).matrix(g))
    assert ok
    spec, A = KernelSpec.fbm(0.3), [[0.5], [1.0]]
    X = BridgeSampler(spec, A, g).sample_block(22, 0, 50_000)
    assert _cov_within(X, residual_kernel(spec, A).matrix(g))[0]


def test_reconstruction_round_trip():
    g = Grid.uniform(8)
    rs = ReconstructionSampler(BM, [[1.0]], g)
    X = rs.sample_block(30, 0, 50_000)
    term = X[:, -1] ** 2
    assert abs(term.mean() - 1.0) < 5 * term.std(ddof=1) / math.sqrt(term.size)
    assert _cov_within(X, kernel_matrix(BM, g))[0]
    # the value at an anchor is the independent normal exactly
    p = reconstruct_from_bridge(BM, [[1.0]], g, SeedSpec(30, 3))
    assert p.values[-1] == X[3, -1]
    sheet = KernelSpec.sheet()
    gs = Grid.product((3, 3), (1.0, 1.0))
    Xs = ReconstructionSampler(sheet, [[1.0, 0.0], [0.0, 1.0]], gs).sample_block(31, 0, 50_000)
    assert _cov_within(Xs, kernel_matrix(sheet, gs))[0]
