from __future__ import annotations

import numpy as np

from argmaxlab.kernels import KernelSpec
from argmaxlab.levy import LevyTriplet
from argmaxlab.montecarlo import (GaussianProcess, LevyProcess, StageBlock, Tilt,
                                  run_replicates)
from argmaxlab.paths import Grid
from argmaxlab.sampler import stage_paths_block

from oracles import brute_argmax


def _observe(blk):
    S, zl, zr, _ = blk.argmax()
    return {"S": S, "Z": 0.5 * (zl[:, 0] + zr[:, 0])}


def test_results_independent_of_blocks_and_threads():
    proc = GaussianProcess(KernelSpec.brownian(), Grid.uniform(128))
    base = run_replicates(proc, 1000, 9, _observe, ["S", "Z"], keep=["Z"])
    for rows, threads in ((7, 1), (64, 4), (1000, 2)):
        r = run_replicates(proc, 1000, 9, _observe, ["S", "Z"], keep=["Z"],
                           block_rows=rows, threads=threads)
        np.testing.assert_array_equal(r.kept["Z"], base.kept["Z"])
        np.testing.assert_allclose(r.acc.mean, base.acc.mean, rtol=1e-12)
        np.testing.assert_allclose(r.acc.comoment, base.acc.comoment, rtol=1e-10)


def test_fixed_blocks_are_bitwise_reproducible():
    proc = LevyProcess(LevyTriplet(0.2, 1.0, 2.0), Grid.uniform(64))
    a = run_replicates(proc, 200, 4, _observe, ["S", "Z"], block_rows=50, threads=3)
    b = run_replicates(proc, 200, 4, _observe, ["S", "Z"], block_rows=50, threads=1)
    assert a.acc.to_dict() == b.acc.to_dict()


def test_stage_block_matches_materialized_field():
    grid = Grid.simplex(2, 12)
    st = stage_paths_block(2, 12, 5, 0, 40)
    blk = StageBlock(st, grid)
    mat = blk.materialize()
    tilt = Tilt(lambda p: 0.3 * p[:, 0] - 0.7 * p[:, 1], np.array([0.3, -0.7]))
    for t in (None, tilt):
        S, zl, zr, _ = blk.argmax(t)
        S2, zl2, zr2 = brute_argmax(mat.tilted(t), grid.points, 1e-12)
        np.testing.assert_allclose(S, S2, atol=1e-12)
        np.testing.assert_allclose(zl, zl2, atol=1e-12)
        np.testing.assert_allclose(zr, zr2, atol=1e-12)
    for p in grid.points[::7]:
        np.testing.assert_allclose(blk.value_at(p), mat.value_at(p), atol=1e-12)
