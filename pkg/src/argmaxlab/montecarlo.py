"""Replicate driver: processes produce blocks, observers reduce them.

The replicate range is cut into fixed-size blocks. Each block is reduced to
an accumulator independently (optionally on a thread pool) and the block
accumulators are merged in index order, so results do not depend on the
schedule or on the number of threads.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels as K
from .extremum import DEFAULT_TIE_TOL, row_argmax
from .kernels import DriftSpec, KernelSpec
from .levy import LevyTriplet, sample_levy_path
from .paths import Grid
from .rng import SeedSpec
from .sampler import FieldSampler, stage_bounds_index, stage_paths_block
from .stats import McAccumulator

BLOCK_ELEMENTS = 1 << 22


def thread_count() -> int:
    env = os.environ.get("ARGMAXLAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True, eq=False)
class Tilt:
    """A deterministic function added to every path of a block.

    ``fn(points) -> (P,)`` evaluates it anywhere. ``linear`` optionally gives
    coefficients c with tilt(u) = c . u, which lets stage-path blocks absorb
    the tilt without materializing the field.
    """

    fn: Callable
    linear: np.ndarray | None = None

    def __call__(self, points):
        return self.fn(points)


def _as_tilt(tilt):
    if tilt is None or isinstance(tilt, Tilt):
        return tilt
    return Tilt(tilt)


class MaterializedBlock:
    """Path values on a common evaluation set, one row per replicate."""

    def __init__(self, points: np.ndarray, values: np.ndarray):
        self.points = points
        self.values = values
        self._cache = {}

    @property
    def k(self) -> int:
        return self.values.shape[0]

    def tilt_values(self, tilt):
        key = id(tilt)
        if key not in self._cache:
            self._cache[key] = (tilt, np.asarray(tilt(self.points), dtype=float))
        return self._cache[key][1]

    def tilted(self, tilt):
        tilt = _as_tilt(tilt)
        if tilt is None:
            return self.values
        return self.values + self.tilt_values(tilt)[None, :]

    def argmax(self, tilt=None, tie_tol=DEFAULT_TIE_TOL):
        return row_argmax(self.tilted(tilt), self.points, tie_tol)

    def sup(self, tilt=None):
        return self.tilted(tilt).max(axis=1)

    def value_at(self, point) -> np.ndarray:
        p = np.atleast_1d(np.asarray(point, dtype=float))
        hit = np.flatnonzero(np.all(np.abs(self.points - p) <= 1e-12, axis=1))
        if hit.size == 0:
            raise KeyError(f"point {tuple(p)} is not an evaluation point")
        # cadlag: at a jump time the grid point carries the post-jump value
        return self.values[:, hit[-1]]

    def functional(self, kind, tilt=None):
        v = self.tilted(tilt)
        if kind == "supremum":
            return v.max(axis=1)
        if kind == "terminal":
            return v[:, -1]
        if kind == "integral":
            if self.points.shape[1] != 1:
                return v.mean(axis=1)
            return np.trapezoid(v, self.points[:, 0], axis=1)
        raise ValueError(f"unknown functional {kind!r}")


class StageBlock:
    """Additive Brownian field held as its n + 1 stage paths.

    The field maximum over the simplex lattice is a last-passage value and is
    computed by dynamic programming in O(n m) per replicate.
    """

    def __init__(self, stages: np.ndarray, grid: Grid):
        self.stages = stages
        self.grid = grid
        self.points = grid.points
        self.m = stages.shape[2] - 1
        self.n = stages.shape[1] - 1

    @property
    def k(self) -> int:
        return self.stages.shape[0]

    def _stages(self, tilt):
        tilt = _as_tilt(tilt)
        if tilt is None:
            return self.stages
        if tilt.linear is None:
            raise NotImplementedError("stage blocks absorb linear tilts only")
        # a * u_i is the length of stage i - 1 times a: a drift on that stage
        s = self.stages.copy()
        t = np.arange(self.m + 1) / self.m
        for i, a in enumerate(np.asarray(tilt.linear, dtype=float)):
            s[:, i, :] += a * t
        return s

    def materialize(self, tilt=None) -> MaterializedBlock:
        from .sampler import additive_field_from_stages
        v = additive_field_from_stages(self.stages, self.grid)
        blk = MaterializedBlock(self.points, v)
        if tilt is not None:
            blk = MaterializedBlock(self.points, blk.tilted(tilt))
        return blk

    def argmax(self, tilt=None, tie_tol=DEFAULT_TIE_TOL):
        tilt = _as_tilt(tilt)
        if tilt is not None and tilt.linear is None:
            return self.materialize(tilt).argmax(None, tie_tol)
        st = self._stages(tilt)
        S, s_left = last_passage(st, leftmost=True)
        _, s_right = last_passage(st, leftmost=False)
        ul = np.diff(s_left, axis=1)[:, :self.n] / self.m
        ur = np.diff(s_right, axis=1)[:, :self.n] / self.m
        lo = np.minimum(ul, ur)
        hi = np.maximum(ul, ur)
        count = np.where(np.all(s_left == s_right, axis=1), 1, 2)
        return S, lo, hi, count

    def sup(self, tilt=None):
        tilt = _as_tilt(tilt)
        if tilt is not None and tilt.linear is None:
            return self.materialize(tilt).sup()
        return last_passage(self._stages(tilt), leftmost=True)[0]

    def value_at(self, point) -> np.ndarray:
        p = np.atleast_1d(np.asarray(point, dtype=float))
        i = np.rint(p * self.m).astype(np.int64)
        s = np.concatenate([[0], np.cumsum(i), [self.m]])
        out = np.zeros(self.k)
        for j in range(self.n + 1):
            out += self.stages[:, j, s[j + 1]] - self.stages[:, j, s[j]]
        return out

    def functional(self, kind, tilt=None):
        if kind == "supremum":
            return self.sup(tilt)
        return self.materialize().functional(kind, tilt)


def last_passage(stages: np.ndarray, leftmost: bool = True):
    """Maximum of the additive field and a maximizing partial-sum sequence.

    ``stages`` is ``(k, n + 1, m + 1)``. Returns ``S (k,)`` and integer
    partial sums ``s (k, n + 2)`` with s_0 = 0 and s_{n+1} = m. ``leftmost``
    picks, at each stage, the smallest maximizing breakpoint (otherwise the
    largest).
    """
    k, n1, m1 = stages.shape
    n = n1 - 1
    idx = np.arange(m1)
    V = stages[:, 0, :] - stages[:, 0, :1]
    back = []
    for j in range(1, n + 1):
        W = V - stages[:, j, :]
        P = np.maximum.accumulate(W, axis=1)
        rec = np.empty_like(W, dtype=bool)
        rec[:, 0] = True
        if leftmost:
            rec[:, 1:] = W[:, 1:] > P[:, :-1]
        else:
            rec[:, 1:] = W[:, 1:] >= P[:, :-1]
        arg = np.maximum.accumulate(np.where(rec, idx, 0), axis=1)
        back.append(arg)
        V = P + stages[:, j, :]
    S = V[:, -1]
    s = np.empty((k, n + 2), dtype=np.int64)
    s[:, 0] = 0
    s[:, n + 1] = m1 - 1
    rows = np.arange(k)
    for j in range(n, 0, -1):
        s[:, j] = back[j - 1][rows, s[:, j + 1]]
    return S, s


# processes --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GaussianProcess:
    """A Gaussian family on a grid, optionally with a deterministic drift."""

    kernel: KernelSpec
    grid: Grid
    drift: DriftSpec | None = None
    method: str | None = None
    fast_additive: bool = True
    _sampler: FieldSampler = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_sampler", FieldSampler(self.kernel, self.grid, self.method))

    @property
    def points(self):
        return self.grid.points

    def block_rows(self) -> int:
        if self.kernel.family == K.ADDITIVE and self.fast_additive:
            per = (self.kernel.stages + 1) * (round(1 / self.grid.spacing) + 1) * 4
        elif self.kernel.family in K.ONE_D and self._sampler.method == "circulant":
            per = 4 * self.grid.size
        else:
            per = self.grid.size
        return max(1, min(4096, BLOCK_ELEMENTS // per))

    def blocks(self, seed: int, start: int, stop: int):
        if self.kernel.family == K.ADDITIVE and self.fast_additive and self.drift is None:
            m = int(round(1 / self.grid.spacing))
            yield StageBlock(stage_paths_block(self.kernel.stages, m, seed, start, stop),
                             self.grid)
            return
        v = self._sampler.sample_block(seed, start, stop)
        if self.drift is not None:
            v += self.drift.evaluate(self.grid.points)[None, :]
        yield MaterializedBlock(self.grid.points, v)

    def anchor_value(self, block, point):
        return block.value_at(point)


@dataclass(frozen=True, eq=False)
class LevyProcess:
    triplet: LevyTriplet
    grid: Grid

    @property
    def points(self):
        return self.grid.points

    def block_rows(self) -> int:
        return max(1, min(1024, BLOCK_ELEMENTS // (4 * self.grid.size)))

    def blocks(self, seed: int, start: int, stop: int):
        for r in range(start, stop):
            path = sample_levy_path(self.triplet, self.grid, SeedSpec(seed, r))
            pts, v = path.evaluation_points()
            yield MaterializedBlock(pts, v[None, :])


@dataclass
class MonteCarloResult:
    acc: McAccumulator
    kept: dict


def run_replicates(process, n_reps: int, seed: int, observe: Callable, names,
                   keep=(), block_rows: int | None = None,
                   threads: int | None = None) -> MonteCarloResult:
    """Apply ``observe(block) -> dict of (k,) arrays`` to every block.

    Columns listed in ``keep`` are also returned raw, in replicate order.
    """
    if n_reps < 1:
        raise ValueError("need at least one replicate")
    rows = block_rows or process.block_rows()
    spans = [(s, min(s + rows, n_reps)) for s in range(0, n_reps, rows)]
    names = tuple(names)

    def work(span):
        cols = {k: [] for k in names}
        for blk in process.blocks(seed, *span):
            out = observe(blk)
            for k in names:
                cols[k].append(np.broadcast_to(np.asarray(out[k], dtype=float), (blk.k,)))
        cols = {k: np.concatenate(v) for k, v in cols.items()}
        acc = McAccumulator(names).update(cols)
        return acc, {k: cols[k] for k in keep}

    nthreads = threads or thread_count()
    if nthreads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(nthreads) as ex:
            parts = list(ex.map(work, spans))
    else:
        parts = [work(s) for s in spans]
    acc = McAccumulator(names)
    for a, _ in parts:
        acc = acc.merge(a)
    kept = {k: np.concatenate([p[1][k] for p in parts]) for k in keep}
    return MonteCarloResult(acc, kept)


@dataclass(frozen=True, eq=False)
class BlockProcess:
    """Adapter for any ``sampler.sample_block(seed, start, stop) -> (k, P)``."""

    sampler: object
    grid: Grid

    @property
    def points(self):
        return self.grid.points

    def block_rows(self) -> int:
        return max(1, min(4096, BLOCK_ELEMENTS // self.grid.size))

    def blocks(self, seed: int, start: int, stop: int):
        yield MaterializedBlock(self.grid.points, self.sampler.sample_block(seed, start, stop))
