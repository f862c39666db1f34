"""Suprema, argmax brackets and slice projections.

The continuum set of quasi-maximizers is approximated by the evaluation
points whose value lies within ``tie_tol`` of the supremum. For paths without
negative jumps quasi-maximizers attain the supremum, so at grid and jump
points the approximation is exact up to the grid itself.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .paths import PathSample

DEFAULT_TIE_TOL = 1e-12


@dataclass(frozen=True)
class ArgmaxSummary:
    S: float
    z_left: tuple
    z_right: tuple
    count: int

    @property
    def zl(self) -> float:
        return self.z_left[0]

    @property
    def zr(self) -> float:
        return self.z_right[0]

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.z_left) + np.asarray(self.z_right))

    @property
    def width(self) -> np.ndarray:
        return np.asarray(self.z_right) - np.asarray(self.z_left)

    def to_dict(self) -> dict:
        return {"S": self.S, "Z_l": list(self.z_left), "Z_r": list(self.z_right),
                "argmax_count": self.count}


def sup_and_argmax(path: PathSample, tie_tol: float = DEFAULT_TIE_TOL) -> ArgmaxSummary:
    if tie_tol < 0:
        raise ValueError("tie_tol must be >= 0")
    pts, v = path.evaluation_points()
    if v.size == 0:
        raise DomainError("empty path")
    if pts.shape[1] != 1:
        return argmax_nd(path, tie_tol)
    S = float(v.max())
    hit = v >= S - tie_tol
    t = pts[hit, 0]
    return ArgmaxSummary(S, (float(t.min()),), (float(t.max()),), int(hit.sum()))


def slice_max_projection(field: PathSample, i: int):
    """Tabulate ``f_i(x) = max {h(z) : z_i = x}`` over the grid's distinct
    values of coordinate ``i`` (0-based). Returns ``(xs, f)``."""
    pts, v = field.evaluation_points()
    if not 0 <= i < pts.shape[1]:
        raise DomainError(f"coordinate {i} out of range for a {pts.shape[1]}-d field")
    if v.size == 0:
        raise DomainError("empty slice")
    xs, inv = np.unique(pts[:, i], return_inverse=True)
    f = np.full(xs.size, -np.inf)
    np.maximum.at(f, inv, v)
    return xs, f


def argmax_nd(field: PathSample, tie_tol: float = DEFAULT_TIE_TOL) -> ArgmaxSummary:
    """Per-coordinate argmax extremes via the slice projections f_i."""
    pts, v = field.evaluation_points()
    if v.size == 0:
        raise DomainError("empty path")
    S = float(v.max())
    zl, zr = [], []
    for i in range(pts.shape[1]):
        xs, f = slice_max_projection(field, i)
        on = xs[f >= S - tie_tol]
        zl.append(float(on.min()))
        zr.append(float(on.max()))
    return ArgmaxSummary(S, tuple(zl), tuple(zr), int((v >= S - tie_tol).sum()))


def uniqueness_indicator(summary: ArgmaxSummary, delta: float) -> bool:
    if not delta > 0:
        raise ValueError("delta must be > 0")
    return bool(np.all(summary.width <= delta))


def row_argmax(values: np.ndarray, points: np.ndarray, tie_tol: float = DEFAULT_TIE_TOL):
    """Vectorized ``sup_and_argmax`` over the rows of a block.

    ``values`` is ``(k, P)``, ``points`` is ``(P, d)``. Returns ``S (k,)``,
    ``z_left (k, d)``, ``z_right (k, d)``, ``count (k,)``.
    """
    S = values.max(axis=1)
    hit = values >= (S - tie_tol)[:, None]
    count = hit.sum(axis=1)
    d = points.shape[1]
    k = values.shape[0]
    zl = np.empty((k, d))
    zr = np.empty((k, d))
    if d == 1 and np.all(np.diff(points[:, 0]) > 0):
        P = values.shape[1]
        first = hit.argmax(axis=1)
        last = P - 1 - hit[:, ::-1].argmax(axis=1)
        zl[:, 0] = points[first, 0]
        zr[:, 0] = points[last, 0]
    else:
        for i in range(d):
            c = points[:, i]
            zl[:, i] = np.where(hit, c, np.inf).min(axis=1)
            zr[:, i] = np.where(hit, c, -np.inf).max(axis=1)
    return S, zl, zr, count
