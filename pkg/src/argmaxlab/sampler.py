"""Gaussian path and field synthesis.

Replicates are generated in blocks: a block is a 2-d array with one row per
replicate, and row ``r`` is filled only from the stream of replicate
``start + r``. A single path is a block of one row, so it is bitwise equal
to the corresponding row of any block that contains it.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.fft

from . import kernels as K
from .errors import ConfigurationError, DomainError, KernelInvalidError
from .kernels import DriftSpec, KernelSpec, kernel_matrix
from .paths import Grid, PathSample
from .rng import SeedSpec, replicate_generator

EMBED_RTOL = 1e-8
JITTER = 1e-12


def _fgn_autocov(H, n):
    k = np.arange(n + 1, dtype=float)
    h2 = 2.0 * H
    return 0.5 * (np.abs(k + 1) ** h2 - 2.0 * k ** h2 + np.abs(k - 1) ** h2)


@lru_cache(maxsize=32)
def _fgn_embedding(H, n):
    """Square-root eigenvalues of the circulant embedding of unit-spacing fGn,
    or None when the embedding is not nonnegative definite."""
    r = _fgn_autocov(H, n)
    c = np.concatenate([r, r[n - 1:0:-1]])
    lam = scipy.fft.rfft(c).real
    if lam.min() < -EMBED_RTOL * lam.max():
        return None
    return np.sqrt(np.clip(lam, 0.0, None))


@lru_cache(maxsize=8)
def _cholesky_factor(spec, grid_key):
    kind, n, T = grid_key
    grid = Grid.uniform(n, T)
    C = kernel_matrix(spec, grid.points[1:], check_psd=False)
    try:
        return np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        pass
    C = C + JITTER * np.trace(C) / C.shape[0] * np.eye(C.shape[0])
    try:
        return np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        raise KernelInvalidError(
            f"Cholesky failed for {spec.family} after diagonal jitter") from None


class GaussianSampler:
    """Block sampler for one 1-d Gaussian family on a uniform grid.

    ``method`` is chosen once: ``iid`` (Brownian motion; its increment
    embedding is the identity), ``circulant`` (fBm, exact when the fGn
    embedding is nonnegative), ``ou`` (exact time-changed Brownian motion) or
    ``cholesky`` (fallback, also selectable explicitly).
    """

    def __init__(self, spec: KernelSpec, grid: Grid, method: str | None = None):
        if spec.family not in K.ONE_D:
            raise ConfigurationError(f"{spec.family} is not a 1-d family", "kernel.family")
        if grid.kind != "uniform":
            raise DomainError("1-d Gaussian sampling needs a uniform grid")
        if abs(grid.horizon[0] - spec.horizon[0]) > 1e-12 * spec.horizon[0]:
            raise DomainError("grid horizon does not match the kernel horizon")
        self.spec, self.grid = spec, grid
        n = grid.n
        self._sqrt_lam = None
        if method is None:
            if spec.family == K.BROWNIAN:
                method = "iid"
            elif spec.family == K.OU:
                method = "ou"
            else:
                self._sqrt_lam = _fgn_embedding(spec.H, n)
                method = "circulant" if self._sqrt_lam is not None else "cholesky"
        elif method == "circulant":
            if spec.family not in (K.FBM, K.BROWNIAN):
                raise ConfigurationError("circulant embedding applies to BM/fBm only")
            self._sqrt_lam = _fgn_embedding(spec.H if spec.family == K.FBM else 0.5, n)
            if self._sqrt_lam is None:
                method = "cholesky"
        self.method = method
        if method == "cholesky":
            self._L = _cholesky_factor(spec, ("uniform", n, grid.horizon[0]))
        elif method == "ou":
            g = spec.gamma
            t = grid.times
            tau = np.expm1(2.0 * g * t)
            self._ou_sd = np.sqrt(np.diff(tau))
            self._ou_scale = spec.sigma / np.sqrt(2.0 * g) * np.exp(-g * t[1:])
        elif method not in ("iid", "circulant"):
            raise ConfigurationError(f"unknown sampling method {method!r}")

    def sample_block(self, seed: int, start: int, stop: int) -> np.ndarray:
        n = self.grid.n
        k = stop - start
        out = np.empty((k, n + 1))
        out[:, 0] = 0.0
        if self.method == "circulant":
            self._circulant(out, seed, start)
        else:
            z = out[:, 1:]
            for r in range(k):
                replicate_generator(seed, start + r).standard_normal(out=z[r])
            if self.method == "iid":
                z *= np.sqrt(self.grid.spacing)
                np.cumsum(z, axis=1, out=z)
            elif self.method == "ou":
                z *= self._ou_sd
                np.cumsum(z, axis=1, out=z)
                z *= self._ou_scale
            else:
                z[:] = z @ self._L.T
        return out

    def _circulant(self, out, seed, start):
        n = self.grid.n
        k = out.shape[0]
        m = 2 * n
        xi = np.empty((k, n + 1), dtype=complex)
        buf = np.empty(m)
        inv_sqrt2 = 1.0 / np.sqrt(2.0)
        for r in range(k):
            replicate_generator(seed, start + r).standard_normal(out=buf)
            row = xi[r]
            row.real[0] = buf[0]
            row.real[n] = buf[1]
            row.imag[0] = row.imag[n] = 0.0
            row.real[1:n] = buf[2:n + 1] * inv_sqrt2
            row.imag[1:n] = buf[n + 1:] * inv_sqrt2
        xi *= self._sqrt_lam
        fgn = scipy.fft.irfft(xi, n=m, axis=1)[:, :n]
        fgn *= np.sqrt(m) * self.grid.spacing ** self.spec.H
        np.cumsum(fgn, axis=1, out=out[:, 1:])


def _seed_parts(seed):
    if isinstance(seed, SeedSpec):
        return seed.seed, seed.replicate
    return int(seed), 0


def sample_gaussian_path(spec: KernelSpec, grid: Grid, seed, method: str | None = None
                         ) -> PathSample:
    s, rep = _seed_parts(seed)
    row = GaussianSampler(spec, grid, method).sample_block(s, rep, rep + 1)[0]
    return PathSample(grid, row)


# sheet ----------------------------------------------------------------

def _check_product(grid, T):
    if grid.kind != "product" or grid.dim != len(T):
        raise DomainError("the sheet needs a product grid with one axis per horizon")
    if any(abs(a - b) > 1e-12 * b for a, b in zip(grid.horizon, T)):
        raise DomainError("grid horizons do not match the sheet horizons")


def sheet_block(T, grid: Grid, seed: int, start: int, stop: int,
                frontier: bool = True) -> np.ndarray:
    """Brownian sheet plus independent axis Brownian motions, one row per
    replicate, flattened in the grid's lexicographic order.

    The sheet is the multi-axis partial sum of independent cell increments
    with variance equal to the cell volume.
    """
    T = tuple(float(x) for x in T)
    _check_product(grid, T)
    ns = [s - 1 for s in grid.shape]
    d = len(ns)
    cell_sd = np.sqrt(np.prod([t / n for t, n in zip(T, ns)]))
    n_cells = int(np.prod(ns))
    n_axis = sum(ns) if frontier else 0
    k = stop - start
    out = np.zeros((k,) + tuple(grid.shape))
    axis_draws = np.empty((k, n_axis))
    buf = np.empty(n_cells + n_axis)
    inner = tuple(slice(1, None) for _ in range(d))
    for r in range(k):
        replicate_generator(seed, start + r).standard_normal(out=buf)
        out[r][inner] = buf[:n_cells].reshape(ns)
        axis_draws[r] = buf[n_cells:]
    out *= cell_sd
    for ax in range(d):
        np.cumsum(out, axis=ax + 1, out=out)
    if frontier:
        off = 0
        for ax in range(d):
            w = np.zeros((k, ns[ax] + 1))
            w[:, 1:] = np.cumsum(axis_draws[:, off:off + ns[ax]] * np.sqrt(T[ax] / ns[ax]),
                                 axis=1)
            shape = [k] + [1] * d
            shape[ax + 1] = ns[ax] + 1
            out += w.reshape(shape)
            off += ns[ax]
    return out.reshape(k, -1)


def sample_sheet_with_frontier(d: int, T, grid: Grid, seed, frontier: bool = True
                               ) -> PathSample:
    T = tuple(T)
    if len(T) != d:
        raise DomainError("need one horizon per dimension")
    s, rep = _seed_parts(seed)
    return PathSample(grid, sheet_block(T, grid, s, rep, rep + 1, frontier)[0])


# linear covariance --------------------------------------------------------

def linear_block(T, grid: Grid, seed: int, start: int, stop: int) -> np.ndarray:
    """Field X(u) = sum_i u_i xi_i with i.i.d. standard normal xi."""
    if grid.dim != len(T):
        raise DomainError("grid dimension does not match the linear kernel")
    k = stop - start
    xi = np.empty((k, grid.dim))
    for r in range(k):
        replicate_generator(seed, start + r).standard_normal(out=xi[r])
    return xi @ grid.points.T


# additive Brownian motion --------------------------------------------------

def _check_simplex(n, grid):
    if grid.kind != "simplex" or grid.dim != n:
        raise DomainError(f"additive BM with {n} stages needs an {n}-d simplex grid")


def stage_paths_block(n: int, m: int, seed: int, start: int, stop: int) -> np.ndarray:
    """The n + 1 independent Brownian motions B^(0..n) on [0, 1] at spacing
    1/m, shape ``(k, n + 1, m + 1)``."""
    k = stop - start
    out = np.zeros((k, n + 1, m + 1))
    buf = np.empty((n + 1, m))
    for r in range(k):
        replicate_generator(seed, start + r).standard_normal(out=buf)
        out[r, :, 1:] = buf
    out[:, :, 1:] *= np.sqrt(1.0 / m)
    np.cumsum(out, axis=2, out=out)
    return out


def stage_bounds_index(grid: Grid) -> np.ndarray:
    """Integer partial sums s_0 = 0, s_k = i_1 + ... + i_k, s_{n+1} = m for
    each simplex lattice point, shape ``(P, n + 2)``."""
    idx = grid.index
    m = int(round(1.0 / grid.spacing))
    P, n = idx.shape
    s = np.zeros((P, n + 2), dtype=np.int64)
    s[:, 1:n + 1] = np.cumsum(idx, axis=1)
    s[:, n + 1] = m
    return s


def additive_field_from_stages(stages: np.ndarray, grid: Grid) -> np.ndarray:
    """Evaluate X(u) = sum_k B^(k)(s_{k+1}) - B^(k)(s_k) at every simplex point
    from shared stage paths ``(k, n + 1, m + 1)``."""
    s = stage_bounds_index(grid)
    n = s.shape[1] - 2
    out = np.zeros((stages.shape[0], s.shape[0]))
    for j in range(n + 1):
        out += stages[:, j, s[:, j + 1]] - stages[:, j, s[:, j]]
    return out


def additive_block(n: int, grid: Grid, seed: int, start: int, stop: int) -> np.ndarray:
    _check_simplex(n, grid)
    m = int(round(1.0 / grid.spacing))
    return additive_field_from_stages(stage_paths_block(n, m, seed, start, stop), grid)


def sample_additive_bm_field(n: int, grid: Grid, seed) -> PathSample:
    s, rep = _seed_parts(seed)
    return PathSample(grid, additive_block(n, grid, s, rep, rep + 1)[0])


# dispatch ---------------------------------------------------------------

class FieldSampler:
    """Uniform block interface over every Gaussian family."""

    def __init__(self, spec: KernelSpec, grid: Grid, method: str | None = None):
        self.spec, self.grid = spec, grid
        f = spec.family
        if f in K.ONE_D:
            self._inner = GaussianSampler(spec, grid, method)
            self.method = self._inner.method
        elif f == K.SHEET:
            _check_product(grid, spec.horizon)
            self.method = "partial-sums"
        elif f == K.LINEAR:
            if grid.dim != spec.dim:
                raise DomainError("grid dimension does not match the linear kernel")
            spec.check_points(grid.points)
            self.method = "linear"
        elif f == K.ADDITIVE:
            _check_simplex(spec.stages, grid)
            self.method = "stages"
        else:  # pragma: no cover
            raise AssertionError(f)

    def sample_block(self, seed: int, start: int, stop: int) -> np.ndarray:
        f = self.spec.family
        if f in K.ONE_D:
            return self._inner.sample_block(seed, start, stop)
        if f == K.SHEET:
            return sheet_block(self.spec.horizon, self.grid, seed, start, stop,
                               self.spec.frontier)
        if f == K.LINEAR:
            return linear_block(self.spec.horizon, self.grid, seed, start, stop)
        return additive_block(self.spec.stages, self.grid, seed, start, stop)

    def sample(self, seed) -> PathSample:
        s, rep = _seed_parts(seed)
        return PathSample(self.grid, self.sample_block(s, rep, rep + 1)[0])


def add_drift(path: PathSample, f: DriftSpec) -> PathSample:
    """Shift a path pointwise by a deterministic drift; jump sizes unchanged,
    values at jump times shifted by the drift there."""
    shift = f.evaluate(path.grid.points)
    jumps = path.jumps
    if jumps is not None and len(jumps):
        jumps = jumps.shifted(f.evaluate(jumps.times[:, None]))
    return PathSample(path.grid, path.values + shift, jumps)
