"""Streaming moments and paired Monte Carlo estimates.

``McAccumulator`` keeps the count, mean vector and centred co-moment matrix
of a fixed list of named observables (Welford/Chan updates). Estimators of
means and covariances are smooth functions of the observable means, so their
standard errors follow from the delta method with the accumulated covariance
matrix; pairing is automatic because all observables come from the same
replicates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class McAccumulator:
    def __init__(self, names):
        self.names = tuple(names)
        if len(set(self.names)) != len(self.names):
            raise ValueError("observable names must be unique")
        m = len(self.names)
        self._pos = {k: i for i, k in enumerate(self.names)}
        self.n = 0
        self.mean = np.zeros(m)
        self.comoment = np.zeros((m, m))

    def _check(self, other):
        if other.names != self.names:
            raise ValueError("cannot merge accumulators tracking different observables")

    def update(self, rows) -> "McAccumulator":
        """Fold in a block of rows, shape ``(k, m)`` (or a dict of columns)."""
        if isinstance(rows, dict):
            rows = np.column_stack([np.asarray(rows[k], dtype=float) for k in self.names])
        rows = np.asarray(rows, dtype=float)
        if rows.ndim == 1:
            rows = rows[None, :]
        if rows.shape[0] == 0:
            return self
        if rows.shape[1] != len(self.names):
            raise ValueError("row width does not match the observable list")
        blk = McAccumulator(self.names)
        blk.n = rows.shape[0]
        blk.mean = rows.mean(axis=0)
        c = rows - blk.mean
        blk.comoment = c.T @ c
        self._absorb(blk)
        return self

    def _absorb(self, other):
        if other.n == 0:
            return
        if self.n == 0:
            self.n, self.mean, self.comoment = other.n, other.mean.copy(), other.comoment.copy()
            return
        n = self.n + other.n
        delta = other.mean - self.mean
        self.mean = self.mean + delta * (other.n / n)
        self.comoment = (self.comoment + other.comoment
                         + np.outer(delta, delta) * (self.n * other.n / n))
        self.n = n

    def merge(self, other: "McAccumulator") -> "McAccumulator":
        """Return a new accumulator equal to the concatenation ``self + other``."""
        self._check(other)
        out = self.copy()
        out._absorb(other)
        return out

    def copy(self) -> "McAccumulator":
        out = McAccumulator(self.names)
        out.n, out.mean, out.comoment = self.n, self.mean.copy(), self.comoment.copy()
        return out

    def index(self, name) -> int:
        return self._pos[name]

    def mean_of(self, name) -> float:
        return float(self.mean[self._pos[name]])

    def covariance(self) -> np.ndarray:
        if self.n < 2:
            raise ValueError("need at least two replicates")
        return self.comoment / (self.n - 1)

    def var(self, name) -> float:
        i = self._pos[name]
        return float(self.covariance()[i, i])

    def cov(self, a, b) -> float:
        return float(self.covariance()[self._pos[a], self._pos[b]])

    def se(self, grad: dict) -> float:
        """Delta-method standard error of an estimator with gradient ``grad``
        with respect to the observable means."""
        g = np.zeros(len(self.names))
        for k, w in grad.items():
            g[self._pos[k]] += w
        v = float(g @ self.covariance() @ g) / self.n
        return math.sqrt(max(v, 0.0))

    def to_dict(self) -> dict:
        return {"names": list(self.names), "n": self.n, "mean": self.mean.tolist(),
                "comoment": self.comoment.tolist()}

    @classmethod
    def from_dict(cls, d) -> "McAccumulator":
        acc = cls(d["names"])
        acc.n = int(d["n"])
        acc.mean = np.asarray(d["mean"], dtype=float)
        acc.comoment = np.asarray(d["comoment"], dtype=float)
        return acc


@dataclass(frozen=True)
class Estimate:
    """A smooth estimator: its value and gradient w.r.t. observable means."""

    value: float
    grad: dict = field(default_factory=dict)

    def __add__(self, other):
        if not isinstance(other, Estimate):
            return Estimate(self.value + other, self.grad)
        g = dict(self.grad)
        for k, w in other.grad.items():
            g[k] = g.get(k, 0.0) + w
        return Estimate(self.value + other.value, g)

    def __sub__(self, other):
        return self + (-1.0) * other if isinstance(other, Estimate) else self + (-other)

    def __rmul__(self, c):
        return Estimate(c * self.value, {k: c * w for k, w in self.grad.items()})

    __mul__ = __rmul__


def mean_estimate(acc: McAccumulator, name) -> Estimate:
    return Estimate(acc.mean_of(name), {name: 1.0})


def cov_estimate(acc: McAccumulator, a, b, ab) -> Estimate:
    """Sample covariance of observables ``a`` and ``b``; ``ab`` must track the
    product ``a * b`` so the standard error can be formed."""
    return Estimate(acc.cov(a, b), {ab: 1.0, a: -acc.mean_of(b), b: -acc.mean_of(a)})


@dataclass
class IdentityReport:
    name: str
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    z: float
    n: int
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_estimates(cls, name, acc: McAccumulator, lhs: Estimate, rhs: Estimate,
                       meta=None) -> "IdentityReport":
        diff = lhs - rhs
        se = acc.se(diff.grad)
        if se > 0:
            z = diff.value / se
        else:
            z = 0.0 if diff.value == 0 else math.copysign(math.inf, diff.value)
        return cls(name, lhs.value, acc.se(lhs.grad), rhs.value, acc.se(rhs.grad),
                   z, acc.n, dict(meta or {}))

    def passes(self, z_max: float) -> bool:
        return abs(self.z) < z_max

    def to_dict(self) -> dict:
        return {"experiment": self.name, "lhs": self.lhs, "lhs_se": self.lhs_se,
                "rhs": self.rhs, "rhs_se": self.rhs_se, "z": self.z, "n": self.n,
                "meta": self.meta}

    def csv_row(self) -> list:
        return [self.name, self.lhs, self.lhs_se, self.rhs, self.rhs_se, self.z, self.n]


CSV_HEADER = ["experiment", "lhs", "lhs_se", "rhs", "rhs_se", "z", "n"]
