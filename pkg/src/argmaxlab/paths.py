"""Grids and realized paths."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError


@dataclass(frozen=True, eq=False)
class Grid:
    """Finite evaluation set standing in for a compact domain.

    ``points`` has shape ``(P, d)`` and is sorted lexicographically with the
    origin first. ``shape`` is the per-axis point count for product grids.
    """

    kind: str
    points: np.ndarray
    spacing: float
    horizon: tuple
    shape: tuple = ()
    index: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def uniform(cls, n: int, T: float = 1.0) -> "Grid":
        if n < 1:
            raise DomainError("uniform grid needs n >= 1 subintervals")
        if not T > 0:
            raise DomainError("horizon must be positive")
        t = np.linspace(0.0, T, n + 1)
        return cls("uniform", t[:, None], T / n, (float(T),), (n + 1,),
                   np.arange(n + 1)[:, None])

    @classmethod
    def product(cls, ns, Ts) -> "Grid":
        ns = tuple(int(n) for n in ns)
        Ts = tuple(float(T) for T in Ts)
        if len(ns) != len(Ts) or not ns:
            raise DomainError("product grid needs one (n, T) pair per axis")
        if min(ns) < 1 or min(Ts) <= 0:
            raise DomainError("product grid needs n >= 1 and T > 0 per axis")
        axes = [np.linspace(0.0, T, n + 1) for n, T in zip(ns, Ts)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        imesh = np.meshgrid(*[np.arange(n + 1) for n in ns], indexing="ij")
        idx = np.stack([m.ravel() for m in imesh], axis=1)
        spacing = max(T / n for n, T in zip(ns, Ts))
        return cls("product", pts, spacing, Ts, tuple(n + 1 for n in ns), idx)

    @classmethod
    def simplex(cls, n: int, m: int) -> "Grid":
        """Lattice points u/m with u_i >= 0 and sum(u) <= m, n coordinates."""
        if n < 1 or m < 1:
            raise DomainError("simplex grid needs n >= 1 and m >= 1")
        idx = _simplex_lattice(n, m)
        return cls("simplex", idx / m, 1.0 / m, (1.0,) * n, (), idx)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def times(self) -> np.ndarray:
        if self.dim != 1:
            raise DomainError("times is only defined for 1-d grids")
        return self.points[:, 0]

    @property
    def n(self) -> int:
        """Number of subintervals of a 1-d grid."""
        return self.size - 1

    def locate(self, point, atol: float = 1e-12) -> int:
        """Index of ``point`` on the grid; DomainError if absent."""
        p = np.atleast_1d(np.asarray(point, dtype=float))
        if p.shape != (self.dim,):
            raise DomainError(f"point {point!r} has wrong dimension for grid")
        hit = np.flatnonzero(np.all(np.abs(self.points - p) <= atol, axis=1))
        if hit.size == 0:
            raise DomainError(f"point {tuple(p)} is not a grid point")
        return int(hit[0])

    def to_dict(self) -> dict:
        if self.kind == "uniform":
            return {"kind": "uniform", "n": self.n, "T": self.horizon[0]}
        if self.kind == "product":
            return {"kind": "product", "n": [s - 1 for s in self.shape],
                    "T": list(self.horizon)}
        return {"kind": "simplex", "dim": self.dim,
                "m": int(round(1.0 / self.spacing))}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        kind = d["kind"]
        if kind == "uniform":
            return cls.uniform(int(d["n"]), float(d.get("T", 1.0)))
        if kind == "product":
            return cls.product(d["n"], d["T"])
        if kind == "simplex":
            return cls.simplex(int(d["dim"]), int(d["m"]))
        raise DomainError(f"unknown grid kind {kind!r}")


def _simplex_lattice(n, m):
    # lexicographic order: extend each prefix by every admissible last coordinate
    idx = np.arange(m + 1)[:, None]
    for _ in range(n - 1):
        left = m - idx.sum(axis=1)
        reps = left + 1
        head = np.repeat(idx, reps, axis=0)
        tail = np.concatenate([np.arange(r) for r in reps])
        idx = np.column_stack([head, tail])
    return idx.astype(np.int64)


@dataclass(frozen=True, eq=False)
class JumpRecord:
    """Exact jumps of a cadlag path: time, size and the path value at the
    jump time (jump included). Sorted by time."""

    times: np.ndarray
    sizes: np.ndarray
    values: np.ndarray

    @classmethod
    def empty(cls) -> "JumpRecord":
        z = np.zeros(0)
        return cls(z, z.copy(), z.copy())

    def __len__(self):
        return self.times.size

    @property
    def left_values(self) -> np.ndarray:
        return self.values - self.sizes

    def shifted(self, delta: np.ndarray) -> "JumpRecord":
        return JumpRecord(self.times, self.sizes, self.values + delta)


@dataclass(frozen=True, eq=False)
class PathSample:
    grid: Grid
    values: np.ndarray
    jumps: JumpRecord | None = None

    def __post_init__(self):
        if self.values.shape != (self.grid.size,):
            raise DomainError("values must have one entry per grid point")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("path values must be finite")

    def with_values(self, values, jumps=None) -> "PathSample":
        return PathSample(self.grid, values, self.jumps if jumps is None else jumps)

    def evaluation_points(self):
        """All points where the path is evaluated: grid plus jump times.

        Returns ``(points (P, d), values (P,))``; for 1-d paths the result is
        sorted by time.
        """
        if self.jumps is None or len(self.jumps) == 0:
            return self.grid.points, self.values
        t = np.concatenate([self.grid.times, self.jumps.times])
        v = np.concatenate([self.values, self.jumps.values])
        order = np.argsort(t, kind="stable")
        return t[order][:, None], v[order]

    def to_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            if self.grid.dim == 1:
                w.writerow(["t", "value"])
            else:
                w.writerow([f"coord_{i + 1}" for i in range(self.grid.dim)] + ["value"])
            for p, v in zip(self.grid.points, self.values):
                w.writerow([repr(float(x)) for x in p] + [repr(float(v))])

    def jumps_to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "size"])
            if self.jumps is not None:
                for t, s in zip(self.jumps.times, self.jumps.sizes):
                    w.writerow([repr(float(t)), repr(float(s))])
