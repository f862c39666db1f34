from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from argmaxlab.errors import DomainError
from argmaxlab.extremum import (argmax_nd, row_argmax, slice_max_projection, sup_and_argmax,
                                uniqueness_indicator)
from argmaxlab.kernels import KernelSpec
from argmaxlab.paths import Grid, PathSample
from argmaxlab.rng import SeedSpec
from argmaxlab.sampler import FieldSampler, GaussianSampler, sample_gaussian_path

from oracles import brute_argmax, discrete_arcsine_pmf


def test_parabola_peak():
    g = Grid.uniform(100)
    s = sup_and_argmax(PathSample(g, -(g.times - 0.5) ** 2))
    assert (s.S, s.zl, s.zr, s.count) == (0.0, 0.5, 0.5, 1)
    assert uniqueness_indicator(s, g.spacing)


def test_constant_path():
    g = Grid.uniform(10)
    s = sup_and_argmax(PathSample(g, np.full(11, 3.0)))
    assert (s.S, s.zl, s.zr, s.count) == (3.0, 0.0, 1.0, 11)
    assert not uniqueness_indicator(s, 0.99)


def test_random_bm_matches_exhaustive_scan():
    g = Grid.uniform(500)
    for r in range(20):
        p = sample_gaussian_path(KernelSpec.brownian(), g, SeedSpec(1, r))
        s = sup_and_argmax(p)
        S, zl, zr = brute_argmax(p.values[None, :], g.points, 1e-12)
        assert (s.S, s.zl, s.zr) == (S[0], zl[0, 0], zr[0, 0])


def test_slice_projection_examples():
    g = Grid.product((4, 6), (1.0, 1.0))
    xs, f = slice_max_projection(PathSample(g, np.full(g.size, 2.5)), 0)
    np.testing.assert_array_equal(f, 2.5)
    g1 = np.sin(3 * g.points[:, 0])
    g2 = np.cos(5 * g.points[:, 1])
    xs, f = slice_max_projection(PathSample(g, g1 + g2), 0)
    np.testing.assert_allclose(f, np.sin(3 * xs) + g2.max(), atol=1e-15)
    with pytest.raises(DomainError):
        slice_max_projection(PathSample(g, g1), 2)


def test_slice_projection_random_sheet_brute_force():
    g = Grid.product((6, 9), (1.0, 1.0))
    v = FieldSampler(KernelSpec.sheet((1.0, 1.0)), g).sample(SeedSpec(2, 0)).values
    for i in (0, 1):
        xs, f = slice_max_projection(PathSample(g, v), i)
        ref = [max(v[k] for k in range(g.size) if g.points[k, i] == x) for x in xs]
        np.testing.assert_array_equal(f, ref)
        assert f.max() == v.max()


def test_argmax_nd_examples():
    g = Grid.product((4, 4), (1.0, 1.0))
    p = g.points
    s = argmax_nd(PathSample(g, -((p[:, 0] - 0.25) ** 2 + (p[:, 1] - 0.75) ** 2)))
    assert s.z_left == s.z_right == (0.25, 0.75)
    s = argmax_nd(PathSample(g, -np.abs(p[:, 0] - 0.5)))
    assert s.z_left == (0.5, 0.0) and s.z_right == (0.5, 1.0)


def test_argmax_nd_random_field_matches_scan():
    g = Grid.simplex(2, 12)
    X = FieldSampler(KernelSpec.additive(2), g).sample_block(3, 0, 30)
    X = np.round(X, 1)  # force ties
    for r in range(30):
        s = argmax_nd(PathSample(g, X[r]), 1e-12)
        S, zl, zr = brute_argmax(X[r:r + 1], g.points, 1e-12)
        assert s.S == S[0]
        np.testing.assert_array_equal(s.z_left, zl[0])
        np.testing.assert_array_equal(s.z_right, zr[0])
    S, zl, zr, _ = row_argmax(X, g.points)
    S2, zl2, zr2 = brute_argmax(X, g.points, 1e-12)
    np.testing.assert_array_equal(zl, zl2)
    np.testing.assert_array_equal(zr, zr2)


def test_compound_poisson_uniqueness_fails():
    # a step path attains its maximum on an interval
    g = Grid.uniform(1000)
    v = np.where(g.times >= 0.3, 1.0, 0.0)
    s = sup_and_argmax(PathSample(g, v))
    assert not uniqueness_indicator(s, 1e-3)


@given(st.integers(0, 10_000), st.floats(0, 0.5), st.floats(0, 0.5))
def test_count_monotone_in_tolerance(seed, t1, t2):
    rng = np.random.default_rng(seed)
    g = Grid.uniform(50)
    p = PathSample(g, np.round(rng.standard_normal(51), 1))
    lo, hi = sorted((t1, t2))
    a, b = sup_and_argmax(p, lo), sup_and_argmax(p, hi)
    assert a.count <= b.count
    assert b.zl <= a.zl <= a.zr <= b.zr


@given(st.integers(0, 10_000))
def test_slice_maxima_equal_supremum(seed):
    g = Grid.product((5, 7), (1.0, 2.0))
    v = np.random.default_rng(seed).standard_normal(g.size)
    S = sup_and_argmax(PathSample(g, v)).S
    for i in (0, 1):
        assert slice_max_projection(PathSample(g, v), i)[1].max() == S


def test_grid_argmax_follows_discrete_arcsine_law():
    # argmax index of a Gaussian random walk has the Sparre Andersen law
    n, N = 32, 40_000
    g = Grid.uniform(n)
    X = GaussianSampler(KernelSpec.brownian(), g).sample_block(17, 0, N)
    k = X.argmax(axis=1)
    counts = np.bincount(k, minlength=n + 1)
    expected = discrete_arcsine_pmf(n) * N
    assert stats.chisquare(counts, expected).pvalue > 0.001
