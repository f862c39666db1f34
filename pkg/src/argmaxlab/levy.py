"""Spectrally positive Levy paths and the argmax diagnostics L and tau.

Paths are drift + sigma * Brownian motion + compound Poisson with positive
jumps. Jumps are kept exactly (time, size) and the Brownian part is
evaluated at each jump time by bridge interpolation, so the supremum over
grid and jump times involves no binning of jumps to the grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .paths import Grid, JumpRecord, PathSample
from .rng import SeedSpec, replicate_generator

DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class JumpLaw:
    """Law of the (strictly positive) jump sizes.

    ``exponential``: mean ``mean``. ``pareto``: Pareto with scale 1 and shape
    ``shape`` conditioned on [1, cap].
    """

    kind: str = "exponential"
    mean: float = 1.0
    shape: float = 1.5
    cap: float = 100.0

    def __post_init__(self):
        if self.kind == "exponential":
            if not self.mean > 0:
                raise ConfigurationError("exponential jump mean must be > 0", "jumps.mean")
        elif self.kind == "pareto":
            if not self.shape > 0:
                raise ConfigurationError("Pareto shape must be > 0", "jumps.shape")
            if not self.cap > 1:
                raise ConfigurationError("Pareto cap must exceed the scale 1", "jumps.cap")
        else:
            raise ConfigurationError(f"unknown jump law {self.kind!r}", "jumps.kind")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "exponential":
            return rng.exponential(self.mean, size)
        # inverse CDF of the truncated Pareto on [1, cap]
        u = rng.random(size)
        tail = 1.0 - self.cap ** (-self.shape)
        return (1.0 - u * tail) ** (-1.0 / self.shape)

    def to_dict(self):
        if self.kind == "exponential":
            return {"kind": "exponential", "mean": self.mean}
        return {"kind": "pareto", "shape": self.shape, "cap": self.cap}


@dataclass(frozen=True)
class LevyTriplet:
    c: float = 0.0
    sigma: float = 0.0
    rate: float = 0.0
    jumps: JumpLaw = JumpLaw()

    def __post_init__(self):
        if not math.isfinite(self.c):
            raise ConfigurationError("drift c must be finite", "c")
        if not self.sigma >= 0:
            raise ConfigurationError("sigma must be >= 0", "sigma")
        if not self.rate >= 0:
            raise ConfigurationError("jump rate must be >= 0", "rate")

    def to_dict(self):
        return {"c": self.c, "sigma": self.sigma, "rate": self.rate,
                "jumps": self.jumps.to_dict()}

    @classmethod
    def from_dict(cls, d):
        kw = dict(d)
        if "jumps" in kw:
            kw["jumps"] = JumpLaw(**kw["jumps"])
        return cls(**kw)


def _check_unit_grid(grid):
    if grid.kind != "uniform" or abs(grid.horizon[0] - 1.0) > 1e-12:
        raise DomainError("Levy paths are simulated on a uniform grid over [0, 1]")


def sample_levy_path(triplet: LevyTriplet, grid: Grid, seed) -> PathSample:
    """One path on ``grid``; jumps at exactly a grid time are included in the
    value there (cadlag convention)."""
    _check_unit_grid(grid)
    if isinstance(seed, SeedSpec):
        rng = seed.generator()
    else:
        rng = replicate_generator(int(seed), 0)
    t = grid.times
    n = grid.n
    dt = grid.spacing
    B = np.zeros(n + 1)
    if triplet.sigma > 0:
        rng.standard_normal(out=B[1:])
        B[1:] *= math.sqrt(dt)
        np.cumsum(B, out=B)
    count = int(rng.poisson(triplet.rate)) if triplet.rate > 0 else 0
    times = np.sort(rng.random(count))
    sizes = triplet.jumps.sample(rng, count) if count else np.zeros(0)
    Bj = np.zeros(count)
    if triplet.sigma > 0 and count:
        Bj = _bridge_at(times, t, B, rng)
    csum = np.concatenate([[0.0], np.cumsum(sizes)])
    on_grid = csum[np.searchsorted(times, t, side="right")]
    values = triplet.c * t + triplet.sigma * B + on_grid
    jvals = triplet.c * times + triplet.sigma * Bj + csum[1:]
    return PathSample(grid, values, JumpRecord(times, sizes, jvals))


def _bridge_at(times, t, B, rng):
    """Brownian values at sorted ``times`` given grid values: sequential
    bridge sampling between the previous known point and the next grid point."""
    out = np.empty(times.size)
    right = np.searchsorted(t, times, side="left")
    prev_t, prev_b, prev_cell = None, None, -1
    for j, (tau, r) in enumerate(zip(times, right)):
        r = min(max(int(r), 1), t.size - 1)
        if tau == t[r]:
            out[j] = B[r]
            prev_t, prev_b, prev_cell = tau, B[r], r
            continue
        if r != prev_cell:
            prev_t, prev_b = t[r - 1], B[r - 1]
        t1, b1 = t[r], B[r]
        w = (tau - prev_t) / (t1 - prev_t)
        mean = prev_b + w * (b1 - prev_b)
        var = (tau - prev_t) * (t1 - tau) / (t1 - prev_t)
        out[j] = mean + math.sqrt(max(var, 0.0)) * rng.standard_normal()
        prev_t, prev_b, prev_cell = tau, out[j], r
    return out


def first_argmax_time(path: PathSample, tol: float = DEFAULT_TOL) -> float:
    """Smallest grid or jump time at which the path is within ``tol`` of its
    supremum."""
    pts, v = path.evaluation_points()
    S = v.max()
    return float(pts[np.flatnonzero(v >= S - tol)[0], 0])


def exit_time_from_zero(path: PathSample, tol: float = DEFAULT_TOL) -> float:
    """First grid or jump time with |value| > tol; ``inf`` if none."""
    pts, v = path.evaluation_points()
    hit = np.flatnonzero(np.abs(v) > tol)
    return float(pts[hit[0], 0]) if hit.size else math.inf


def reverse_path(path: PathSample) -> PathSample:
    """``s -> X((1 - s)-) - X(1)`` on the reflected grid.

    Left limits exclude jumps occurring exactly at ``1 - s``. A jump of size
    y at time tau becomes a jump of size -y at time 1 - tau.
    """
    grid = path.grid
    _check_unit_grid(grid)
    t = grid.times
    x1 = path.values[-1]
    jumps = path.jumps if path.jumps is not None else JumpRecord.empty()
    at_grid = np.zeros(t.size)
    if len(jumps):
        pos = np.searchsorted(t, jumps.times)
        exact = (pos < t.size) & (t[np.minimum(pos, t.size - 1)] == jumps.times)
        np.add.at(at_grid, pos[exact], jumps.sizes[exact])
    left = path.values - at_grid
    # the uniform grid is its own reflection: s_k = t_k pairs with t_{n-k}
    values = left[::-1] - x1
    if len(jumps):
        order = np.argsort(1.0 - jumps.times, kind="stable")
        rj = JumpRecord((1.0 - jumps.times)[order], -jumps.sizes[order],
                        (jumps.left_values - x1)[order])
    else:
        rj = JumpRecord.empty()
    return PathSample(grid, values, rj)


def reversal_moments(triplet: LevyTriplet, grid: Grid, s_values, N: int, seed: int):
    """Paired moments of X(s) and the reversed path at each s.

    Returns an accumulator over columns ``X{i}``, ``XX{i}``, ``R{i}``, ``RR{i}``
    (value and square of X(s_i) and of the reversed path at s_i), all from
    the same replicates.
    """
    from .stats import McAccumulator

    _check_unit_grid(grid)
    idx = [grid.locate([s]) for s in s_values]
    names = []
    for i in range(len(idx)):
        names += [f"X{i}", f"XX{i}", f"R{i}", f"RR{i}"]
    acc = McAccumulator(names)
    rows = np.empty((min(N, 4096), len(names)))
    filled = 0
    for r in range(N):
        path = sample_levy_path(triplet, grid, SeedSpec(seed, r))
        rev = reverse_path(path).values
        for i, j in enumerate(idx):
            x, y = path.values[j], rev[j]
            rows[filled, 4 * i:4 * i + 4] = (x, x * x, y, y * y)
        filled += 1
        if filled == rows.shape[0]:
            acc.update(rows)
            filled = 0
    if filled:
        acc.update(rows[:filled])
    return acc
