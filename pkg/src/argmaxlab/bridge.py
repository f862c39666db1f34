"""Anticipative Gaussian bridges.

Conditioning a centred Gaussian process on X(t^1) = ... = X(t^k) = 0 one
anchor at a time deflates its kernel by rank one per level:

    R_k(u, v) = R_{k-1}(u, v) - R_{k-1}(u, t^k) R_{k-1}(v, t^k) / R_{k-1}(t^k, t^k).

With a diagonal anchor covariance the process splits as the bridge plus
sum_i gamma^i(z) N_i, gamma^i(z) = R(z, t^i) / R(t^i, t^i), N_i independent
with variance R(t^i, t^i).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DegenerateAnchorError, DomainError
from .kernels import KernelSpec, kernel_cross
from .paths import Grid, PathSample
from .rng import replicate_generator
from .sampler import FieldSampler, _seed_parts

PIVOT_TOL = 1e-12
MAX_ANCHORS = 8
DIAGONAL_ATOL = 1e-12
_NORMAL_STREAM = 1


def anchor_array(spec: KernelSpec, anchors) -> np.ndarray:
    """Anchors as a ``(d, dim)`` array inside the kernel's domain."""
    a = np.asarray(anchors, dtype=float)
    if a.size == 0:
        return np.zeros((0, spec.dim))
    return spec.check_points(a.reshape(-1, spec.dim))


@dataclass(frozen=True, eq=False)
class AnchorSet:
    points: np.ndarray
    covariance: np.ndarray
    inverse: np.ndarray | None

    @classmethod
    def build(cls, spec: KernelSpec, anchors) -> "AnchorSet":
        A = anchor_array(spec, anchors)
        if A.shape[0] > MAX_ANCHORS:
            raise ConfigurationError(f"at most {MAX_ANCHORS} anchors are supported", "anchors")
        if A.shape[0] > 1:
            gaps = np.abs(A[:, None, :] - A[None, :, :]).max(axis=2)
            np.fill_diagonal(gaps, np.inf)
            if gaps.min() <= 0:
                raise ConfigurationError("anchors must be distinct", "anchors")
        S0 = kernel_cross(spec, A, A, check=False)
        try:
            inv = np.linalg.inv(S0) if A.shape[0] else S0.copy()
        except np.linalg.LinAlgError:
            inv = None
        return cls(A, S0, inv)

    @property
    def d(self) -> int:
        return self.points.shape[0]

    @property
    def is_diagonal(self) -> bool:
        off = self.covariance - np.diag(np.diag(self.covariance))
        return bool(np.all(np.abs(off) <= DIAGONAL_ATOL)
                    and np.all(np.diag(self.covariance) > PIVOT_TOL))

    def require_diagonal(self):
        if not self.is_diagonal:
            raise ConfigurationError(
                "anchor covariance matrix must be diagonal and invertible (condition 1 of "
                "the multivariate identity); got "
                f"{np.array2string(self.covariance, precision=6)}", "anchors")


class ResidualKernel:
    """Covariance ``R_k`` of the process conditioned to vanish at the first
    ``k`` anchors. Immutable after construction."""

    def __init__(self, base: KernelSpec, anchors, k: int | None = None):
        self.base = base
        self.anchors = AnchorSet.build(base, anchors)
        A = self.anchors.points
        self.k = A.shape[0] if k is None else int(k)
        if not 0 <= self.k <= A.shape[0]:
            raise ValueError(f"level k must lie in [0, {A.shape[0]}]")
        self.active = A[:self.k]
        # R_{j-1}(t^i, t^l) for all anchors, deflated level by level
        R = self.anchors.covariance.copy()
        self.pivots = []
        for j in range(self.k):
            piv = R[j, j]
            if not piv > PIVOT_TOL:
                raise DegenerateAnchorError(
                    f"residual variance at anchor {j + 1} is {piv:.3g} <= {PIVOT_TOL:g}: "
                    "anchors are numerically dependent", "anchors")
            self.pivots.append(float(piv))
            R = R - np.outer(R[:, j], R[j, :]) / piv
        self._anchor_residual = R

    def _deflate(self, RUV, RUA, RAV):
        RAA = self.anchors.covariance[:self.k, :self.k].copy()
        for j in range(self.k):
            piv = RAA[j, j]
            RUV = RUV - np.outer(RUA[:, j], RAV[j, :]) / piv
            RUA = RUA - np.outer(RUA[:, j], RAA[j, :]) / piv
            RAV = RAV - np.outer(RAA[:, j], RAV[j, :]) / piv
            RAA = RAA - np.outer(RAA[:, j], RAA[j, :]) / piv
        return RUV

    def _anchored_rows(self, P):
        if self.k == 0:
            return np.zeros(P.shape[0], dtype=bool)
        return np.any(np.all(np.abs(P[:, None, :] - self.active[None, :, :]) <= 1e-15,
                             axis=2), axis=1)

    def cross(self, U, V) -> np.ndarray:
        U = self.base.check_points(U)
        V = self.base.check_points(V)
        RUV = kernel_cross(self.base, U, V, check=False)
        if self.k:
            RUA = kernel_cross(self.base, U, self.active, check=False)
            RAV = kernel_cross(self.base, self.active, V, check=False)
            RUV = self._deflate(RUV, RUA, RAV)
            RUV[self._anchored_rows(U), :] = 0.0
            RUV[:, self._anchored_rows(V)] = 0.0
        return RUV

    def __call__(self, u, v) -> float:
        return float(self.cross(np.atleast_1d(u), np.atleast_1d(v))[0, 0])

    def matrix(self, grid) -> np.ndarray:
        P = grid.points if isinstance(grid, Grid) else self.base.check_points(grid)
        M = self.cross(P, P)
        return 0.5 * (M + M.T)


def residual_kernel(base: KernelSpec, anchors, k: int | None = None) -> ResidualKernel:
    return ResidualKernel(base, anchors, k)


@dataclass(frozen=True, eq=False)
class GammaFunctions:
    """gamma^i(z) = R(z, t^i) / R(t^i, t^i) for a diagonal anchor set."""

    base: KernelSpec
    anchors: np.ndarray
    variances: np.ndarray

    @property
    def d(self) -> int:
        return self.anchors.shape[0]

    def __call__(self, points) -> np.ndarray:
        P = self.base.check_points(points)
        return kernel_cross(self.base, P, self.anchors, check=False) / self.variances[None, :]

    def combination(self, points, coef) -> np.ndarray:
        return self(points) @ np.asarray(coef, dtype=float)

    def linear_slopes(self, points, atol: float = 1e-12):
        """Slopes c_i with gamma^i(z) = c_i z_i on ``points``, or None when some
        gamma^i is not of that form there (or i exceeds the dimension)."""
        P = self.base.check_points(points)
        if self.d > P.shape[1]:
            return None
        G = self(P)
        slopes = np.zeros(self.d)
        for i in range(self.d):
            zi = P[:, i]
            c = G[zi.argmax(), i] / zi.max() if zi.max() > 0 else 0.0
            if np.max(np.abs(G[:, i] - c * zi)) > atol * max(1.0, abs(c)):
                return None
            slopes[i] = c
        return slopes

    def linear_coefficients(self, coef, points=None):
        if points is None:
            return None
        s = self.linear_slopes(points)
        if s is None:
            return None
        return s * np.asarray(coef, dtype=float)


def gamma_functions(base: KernelSpec, anchors) -> GammaFunctions:
    aset = AnchorSet.build(base, anchors)
    aset.require_diagonal()
    return GammaFunctions(base, aset.points, np.diag(aset.covariance).copy())


@dataclass
class ReconstructionCheck:
    residual: float
    scale: float

    @property
    def relative(self) -> float:
        return self.residual / self.scale if self.scale > 0 else self.residual

    def passes(self, rtol: float = 1e-10) -> bool:
        return self.residual <= rtol * self.scale

    def to_dict(self):
        return {"max_abs_residual": self.residual, "max_abs_R": self.scale,
                "relative": self.relative}


def check_reconstruction_identity(base: KernelSpec, anchors, grid) -> ReconstructionCheck:
    """max |R(z, v) - R_d(z, v) - sum_j gamma^j(z) gamma^j(v) R(t^j, t^j)| over
    all grid pairs, with max |R| on the grid as scale."""
    P = grid.points if isinstance(grid, Grid) else base.check_points(grid)
    R = kernel_cross(base, P, P)
    A = anchor_array(base, anchors)
    if A.shape[0] == 0:
        Rd = ResidualKernel(base, A).cross(P, P)
        return ReconstructionCheck(float(np.abs(R - Rd).max()), float(np.abs(R).max()))
    gam = gamma_functions(base, A)
    Rd = ResidualKernel(base, A).cross(P, P)
    G = gam(P)
    recon = Rd + (G * gam.variances[None, :]) @ G.T
    return ReconstructionCheck(float(np.abs(R - recon).max()), float(np.abs(R).max()))


# sampling ------------------------------------------------------------------

class BridgeSampler:
    """Path-wise recursion X^k = X^{k-1} - R_{k-1}(., t^k) / R_{k-1}(t^k, t^k) X^{k-1}(t^k)
    applied to unconditioned draws on a grid containing the anchors."""

    def __init__(self, base: KernelSpec, anchors, grid: Grid, method: str | None = None):
        self.base, self.grid = base, grid
        self.kernel = ResidualKernel(base, anchors)
        A = self.kernel.anchors.points
        self.index = [grid.locate(a) for a in A]
        self.sampler = FieldSampler(base, grid, method)
        P = grid.points
        # weights w_k(z) = R_{k-1}(z, t^k) / R_{k-1}(t^k, t^k)
        self.weights = []
        for j in range(A.shape[0]):
            Rj = ResidualKernel(base, A, j)
            self.weights.append(Rj.cross(P, A[j:j + 1])[:, 0] / self.kernel.pivots[j])

    def condition(self, values: np.ndarray) -> np.ndarray:
        X = np.array(values, dtype=float, copy=True)
        for j, w in enumerate(self.weights):
            X -= X[:, self.index[j]][:, None] * w[None, :]
        X[:, self.index] = 0.0
        return X

    def sample_block(self, seed: int, start: int, stop: int) -> np.ndarray:
        return self.condition(self.sampler.sample_block(seed, start, stop))


def sample_conditioned_path(base: KernelSpec, anchors, grid: Grid, seed,
                            method: str | None = None) -> PathSample:
    s, rep = _seed_parts(seed)
    row = BridgeSampler(base, anchors, grid, method).sample_block(s, rep, rep + 1)[0]
    return PathSample(grid, row)


class ReconstructionSampler:
    """Independent bridge plus sum_i gamma^i N_i."""

    def __init__(self, base: KernelSpec, anchors, grid: Grid, method: str | None = None):
        self.bridge = BridgeSampler(base, anchors, grid, method)
        self.gamma = gamma_functions(base, anchors)
        self.G = self.gamma(grid.points)
        self.sd = np.sqrt(self.gamma.variances)

    def sample_block(self, seed: int, start: int, stop: int) -> np.ndarray:
        X = self.bridge.sample_block(seed, start, stop)
        d = self.gamma.d
        N = np.empty((stop - start, d))
        for r in range(stop - start):
            N[r] = replicate_generator(seed, start + r, _NORMAL_STREAM).standard_normal(d)
        N *= self.sd
        return X + N @ self.G.T


def reconstruct_from_bridge(base: KernelSpec, anchors, grid: Grid, seed,
                            method: str | None = None) -> PathSample:
    s, rep = _seed_parts(seed)
    row = ReconstructionSampler(base, anchors, grid, method).sample_block(s, rep, rep + 1)[0]
    return PathSample(grid, row)


def require_grid_anchors(grid: Grid, anchors):
    try:
        return [grid.locate(a) for a in np.atleast_2d(anchors)]
    except (KeyError, ValueError, DomainError) as exc:
        raise ConfigurationError(f"anchor not on the grid: {exc}", "anchors") from exc
