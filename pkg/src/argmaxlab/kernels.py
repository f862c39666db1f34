"""Covariance kernels and deterministic drifts of the Gaussian families.

Every kernel is a closed form. ``kernel_cross`` is the vectorized workhorse;
``kernel_eval`` and ``kernel_matrix`` are thin wrappers around it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DomainError, KernelInvalidError

BROWNIAN = "BrownianMotion"
OU = "OrnsteinUhlenbeck"
FBM = "FractionalBM"
SHEET = "BrownianSheetFrontier"
LINEAR = "LinearCov"
ADDITIVE = "AdditiveBM"

FAMILIES = (BROWNIAN, OU, FBM, SHEET, LINEAR, ADDITIVE)
ONE_D = (BROWNIAN, OU, FBM)

PSD_RTOL = 1e-8
_SIMPLEX_SLACK = 1e-12
# points closer than this many ulps are one point (fBm kernel)
_SAME_POINT_ULPS = 64


@dataclass(frozen=True)
class KernelSpec:
    """A covariance family with its parameters.

    ``horizon`` holds one bound per coordinate: ``(T,)`` for the 1-d families,
    ``(T_1, ..., T_d)`` for the sheet and linear families. The additive
    Brownian family lives on the unit simplex and ignores ``horizon``.
    """

    family: str
    horizon: tuple = (1.0,)
    gamma: float | None = None
    sigma: float | None = None
    H: float | None = None
    stages: int | None = None
    frontier: bool = True

    def __post_init__(self):
        object.__setattr__(self, "horizon", tuple(float(x) for x in self.horizon))
        f = self.family
        if f not in FAMILIES:
            raise ConfigurationError(f"unknown kernel family {f!r}", "family")
        if f != ADDITIVE:
            if not self.horizon or min(self.horizon) <= 0 or not all(
                    np.isfinite(self.horizon)):
                raise ConfigurationError("horizons must be positive and finite", "horizon")
        if f in ONE_D and len(self.horizon) != 1:
            raise ConfigurationError(f"{f} takes a single horizon", "horizon")
        if f == OU:
            if self.gamma is None or not self.gamma > 0:
                raise ConfigurationError("OU rate gamma must be > 0", "gamma")
            if self.sigma is None or not self.sigma > 0:
                raise ConfigurationError("OU volatility sigma must be > 0", "sigma")
        if f == FBM:
            # H = 1 is admitted as the degenerate rank-one limit R(u, v) = uv
            if self.H is None or not 0.0 < self.H <= 1.0:
                raise ConfigurationError("Hurst index H must lie in (0, 1]", "H")
        if f == ADDITIVE:
            if self.stages is None or int(self.stages) < 1:
                raise ConfigurationError("additive BM needs n >= 1 stages", "stages")
            object.__setattr__(self, "stages", int(self.stages))
            object.__setattr__(self, "horizon", (1.0,) * self.stages)

    # constructors -----------------------------------------------------
    @classmethod
    def brownian(cls, T: float = 1.0) -> "KernelSpec":
        return cls(BROWNIAN, (T,))

    @classmethod
    def ornstein_uhlenbeck(cls, gamma: float, sigma: float, T: float = 1.0) -> "KernelSpec":
        return cls(OU, (T,), gamma=gamma, sigma=sigma)

    @classmethod
    def fbm(cls, H: float, T: float = 1.0) -> "KernelSpec":
        return cls(FBM, (T,), H=H)

    @classmethod
    def sheet(cls, T=(1.0, 1.0), frontier: bool = True) -> "KernelSpec":
        return cls(SHEET, tuple(T), frontier=frontier)

    @classmethod
    def linear(cls, T=(1.0,)) -> "KernelSpec":
        return cls(LINEAR, tuple(T))

    @classmethod
    def additive(cls, n: int) -> "KernelSpec":
        return cls(ADDITIVE, stages=n)

    @property
    def dim(self) -> int:
        return len(self.horizon)

    @property
    def zero_at_origin(self) -> bool:
        return self.family != ADDITIVE

    def to_dict(self) -> dict:
        d = {"family": self.family}
        if self.family != ADDITIVE:
            d["horizon"] = list(self.horizon)
        for k in ("gamma", "sigma", "H", "stages"):
            v = getattr(self, k)
            if v is not None:
                d[k] = v
        if self.family == SHEET:
            d["frontier"] = self.frontier
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        known = {"family", "horizon", "gamma", "sigma", "H", "stages", "frontier"}
        extra = set(d) - known
        if extra:
            raise ConfigurationError(f"unknown kernel fields {sorted(extra)}", "kernel")
        kw = dict(d)
        if "horizon" in kw:
            h = kw["horizon"]
            kw["horizon"] = tuple(h) if isinstance(h, (list, tuple)) else (h,)
        return cls(**kw)

    # domain -----------------------------------------------------------
    def check_points(self, pts) -> np.ndarray:
        """Return ``pts`` as an ``(m, d)`` float array, raising DomainError if
        any point lies outside the family's domain."""
        p = np.asarray(pts, dtype=float)
        if p.ndim == 0:
            p = p.reshape(1, 1)
        elif p.ndim == 1:
            p = p[:, None] if self.dim == 1 else p[None, :]
        if p.shape[1] != self.dim:
            raise DomainError(f"points must have {self.dim} coordinates for {self.family}")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise DomainError("points must be finite with nonnegative coordinates")
        if self.family == ADDITIVE:
            if np.any(p.sum(axis=1) > 1.0 + _SIMPLEX_SLACK):
                raise DomainError("additive BM points must satisfy sum(u) <= 1")
        elif np.any(p > np.asarray(self.horizon)):
            raise DomainError(f"points exceed the horizon {self.horizon}")
        return p


def kernel_cross(spec: KernelSpec, U, V, check: bool = True) -> np.ndarray:
    """Matrix ``R(U_i, V_j)`` for point arrays ``U (p, d)`` and ``V (q, d)``."""
    if check:
        U = spec.check_points(U)
        V = spec.check_points(V)
    a = U[:, None, :]
    b = V[None, :, :]
    f = spec.family
    if f == BROWNIAN:
        return np.minimum(a, b)[..., 0]
    if f == OU:
        g = spec.gamma
        lo = np.minimum(a, b)[..., 0]
        hi = np.maximum(a, b)[..., 0]
        return spec.sigma ** 2 / (2 * g) * np.exp(-g * hi) * (2.0 * np.sinh(g * lo))
    if f == FBM:
        h2 = 2.0 * spec.H
        u, v = a[..., 0], b[..., 0]
        # |u - v|^{2H} is not Lipschitz at 0: a gap of one ulp between two
        # spellings of the same point would otherwise show up at 1e-5 scale
        d = np.abs(u - v)
        d = np.where(d <= _SAME_POINT_ULPS * np.finfo(float).eps * np.maximum(u, v), 0.0, d)
        return 0.5 * (u ** h2 + v ** h2 - d ** h2)
    if f == SHEET:
        m = np.minimum(a, b)
        out = np.prod(m, axis=-1)
        if spec.frontier:
            out = out + m.sum(axis=-1)
        return out
    if f == LINEAR:
        return (a * b).sum(axis=-1)
    if f == ADDITIVE:
        return _additive_cross(U, V)
    raise AssertionError(f)


def _stage_bounds(P):
    # s_0 = 0, s_k = u_1 + ... + u_k, s_{n+1} = 1
    n = P.shape[1]
    s = np.zeros((P.shape[0], n + 2))
    s[:, 1:n + 1] = np.cumsum(P, axis=1)
    s[:, n + 1] = 1.0
    return s


def _additive_cross(U, V):
    su = _stage_bounds(U)[:, None, :]
    sv = _stage_bounds(V)[None, :, :]
    # stage k contributes the overlap of [s_k(u), s_{k+1}(u)] and [s_k(v), s_{k+1}(v)]
    lo = np.maximum(su[..., :-1], sv[..., :-1])
    hi = np.minimum(su[..., 1:], sv[..., 1:])
    return np.clip(hi - lo, 0.0, None).sum(axis=-1)


def kernel_eval(spec: KernelSpec, u, v) -> float:
    u = spec.check_points(np.atleast_1d(np.asarray(u, dtype=float)).reshape(1, -1))
    v = spec.check_points(np.atleast_1d(np.asarray(v, dtype=float)).reshape(1, -1))
    return float(kernel_cross(spec, u, v, check=False)[0, 0])


def _grid_points(spec, grid):
    pts = getattr(grid, "points", grid)
    return spec.check_points(pts)


def kernel_matrix(spec: KernelSpec, grid, check_psd: bool = True) -> np.ndarray:
    """Covariance matrix on a grid (a Grid or an array of distinct points)."""
    pts = _grid_points(spec, grid)
    if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
        raise DomainError("grid points must be pairwise distinct")
    K = kernel_cross(spec, pts, pts, check=False)
    if check_psd:
        ev = np.linalg.eigvalsh(K)
        top = max(ev[-1], 0.0)
        if ev[0] < -PSD_RTOL * top:
            raise KernelInvalidError(
                f"{spec.family} kernel matrix has eigenvalue {ev[0]:.3e} "
                f"below -{PSD_RTOL:g} x {top:.3e}")
    return K


@dataclass
class MonotoneReport:
    ok: bool
    first_violation: tuple | None = None

    def __bool__(self):
        return self.ok


def _section(spec, anchor) -> Callable:
    if callable(spec) and not isinstance(spec, KernelSpec):
        return lambda z: np.array([spec(x, anchor) for x in z], dtype=float)
    a = spec.check_points(np.atleast_1d(np.asarray(anchor, dtype=float)).reshape(1, -1))
    return lambda z: kernel_cross(spec, spec.check_points(z), a, check=False)[:, 0]


def check_monotone_in_first_arg(spec, anchor, grid) -> MonotoneReport:
    """Strict increase of ``z -> R(z, anchor)`` across consecutive grid points.

    ``spec`` may also be any callable ``R(u, v)``. A grid check cannot certify
    the continuum property; it only refutes it.
    """
    z = np.asarray(getattr(grid, "times", grid), dtype=float).ravel()
    r = _section(spec, anchor)(z)
    bad = np.flatnonzero(np.diff(r) <= 0)
    if bad.size:
        i = int(bad[0])
        return MonotoneReport(False, (float(z[i]), float(z[i + 1])))
    return MonotoneReport(True)


@dataclass
class AnchorConditionReport:
    """Pass/fail of the four anchor conditions with witnesses."""

    diagonal_invertible: bool
    coordinate_only: bool
    strictly_increasing: bool
    zero_at_axis: bool
    anchor_covariance: np.ndarray = field(repr=False)
    witnesses: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return (self.diagonal_invertible and self.coordinate_only
                and self.strictly_increasing and self.zero_at_axis)

    def failed(self) -> list:
        names = ["diagonal_invertible", "coordinate_only",
                 "strictly_increasing", "zero_at_axis"]
        return [i + 1 for i, k in enumerate(names) if not getattr(self, k)]

    def to_dict(self) -> dict:
        return {
            "diagonal_invertible": self.diagonal_invertible,
            "coordinate_only": self.coordinate_only,
            "strictly_increasing": self.strictly_increasing,
            "zero_at_axis": self.zero_at_axis,
            "anchor_covariance": self.anchor_covariance.tolist(),
            "witnesses": self.witnesses,
        }


def validate_anchor_conditions(spec: KernelSpec, anchors, grid,
                               atol: float = 1e-12) -> AnchorConditionReport:
    """Check the hypotheses of the multivariate covariance identity.

    With anchors ``t^1..t^d`` (one per coordinate):

    1. the anchor covariance matrix is diagonal and invertible;
    2. ``R(z, t^i)`` depends on ``z`` only through ``z_i``;
    3. ``R(z, t^i)`` is strictly increasing in ``z_i``;
    4. ``R(z, t^i) = 0`` whenever ``z_i = 0``.
    """
    A = spec.check_points(np.asarray(anchors, dtype=float).reshape(-1, spec.dim))
    pts = _grid_points(spec, grid)
    d = A.shape[0]
    S0 = kernel_cross(spec, A, A, check=False)
    wit = {}
    off = S0 - np.diag(np.diag(S0))
    diag_ok = bool(np.all(np.abs(off) <= atol) and np.all(np.diag(S0) > atol)
                   and d == spec.dim)
    if not diag_ok:
        wit["1"] = {"max_offdiag": float(np.abs(off).max()) if d > 1 else 0.0,
                    "min_diag": float(np.diag(S0).min()), "anchors": d}
    sec = kernel_cross(spec, pts, A, check=False)
    coord_ok = mono_ok = zero_ok = True
    for i in range(min(d, spec.dim)):
        xs, inv = np.unique(pts[:, i], return_inverse=True)
        col = sec[:, i]
        lo = np.full(xs.size, np.inf)
        hi = np.full(xs.size, -np.inf)
        np.minimum.at(lo, inv, col)
        np.maximum.at(hi, inv, col)
        spread = hi - lo
        if np.any(spread > atol) and coord_ok:
            j = int(np.argmax(spread))
            coord_ok = False
            wit["2"] = {"coordinate": i + 1, "z_i": float(xs[j]), "spread": float(spread[j])}
        steps = np.diff(lo)
        if np.any(steps <= 0) and mono_ok:
            j = int(np.flatnonzero(steps <= 0)[0])
            mono_ok = False
            wit["3"] = {"coordinate": i + 1, "between": [float(xs[j]), float(xs[j + 1])]}
        if xs[0] == 0.0 and max(abs(lo[0]), abs(hi[0])) > atol and zero_ok:
            zero_ok = False
            wit["4"] = {"coordinate": i + 1, "value": float(hi[0])}
        if xs[0] != 0.0 and zero_ok:
            zero_ok = False
            wit["4"] = {"coordinate": i + 1, "reason": "grid has no point with z_i = 0"}
    return AnchorConditionReport(diag_ok, coord_ok, mono_ok, zero_ok, S0, wit)


# drifts ---------------------------------------------------------------

DRIFT_KINDS = ("zero", "constant", "linear", "step", "tabulated")


@dataclass(frozen=True, eq=False)
class DriftSpec:
    """Deterministic drift f added to a centred Gaussian path.

    Closed forms: ``zero``; ``constant`` (value); ``linear`` (slope, one per
    coordinate, f(z) = slope . z); ``step`` (at, height, 1-d, right-continuous
    indicator of [at, T]). ``tabulated`` carries values on explicit points.
    """

    kind: str = "zero"
    value: float = 0.0
    slope: tuple = ()
    at: float = 0.0
    height: float = 0.0
    points: np.ndarray | None = None
    table: np.ndarray | None = None
    continuity: str = "continuous"

    def __post_init__(self):
        if self.kind not in DRIFT_KINDS:
            raise ConfigurationError(f"unknown drift kind {self.kind!r}", "drift.kind")
        if self.continuity not in ("continuous", "cadlag"):
            raise ConfigurationError("continuity must be 'continuous' or 'cadlag'",
                                     "drift.continuity")
        if self.kind == "step" and self.continuity != "cadlag":
            object.__setattr__(self, "continuity", "cadlag")
        if self.kind == "tabulated":
            if self.points is None or self.table is None:
                raise ConfigurationError("tabulated drift needs points and values", "drift")
            pts = np.asarray(self.points, dtype=float)
            if pts.ndim == 1:
                pts = pts[:, None]
            tab = np.asarray(self.table, dtype=float)
            if tab.shape != (pts.shape[0],) or not np.all(np.isfinite(tab)):
                raise ConfigurationError("tabulated drift values must be finite, one per point",
                                         "drift.values")
            object.__setattr__(self, "points", pts)
            object.__setattr__(self, "table", tab)

    def evaluate(self, pts) -> np.ndarray:
        p = np.asarray(pts, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        if self.kind == "zero":
            return np.zeros(p.shape[0])
        if self.kind == "constant":
            return np.full(p.shape[0], float(self.value))
        if self.kind == "linear":
            s = np.asarray(self.slope, dtype=float).reshape(-1)
            if s.size != p.shape[1]:
                raise DomainError("drift slope dimension does not match the grid")
            return p @ s
        if self.kind == "step":
            if p.shape[1] != 1:
                raise DomainError("step drift is 1-d only")
            return np.where(p[:, 0] >= self.at, float(self.height), 0.0)
        # tabulated: exact lookup of each point
        if p.shape[1] != self.points.shape[1]:
            raise DomainError("tabulated drift dimension does not match the grid")
        keys = {tuple(r): v for r, v in zip(self.points.tolist(), self.table.tolist())}
        try:
            return np.array([keys[tuple(r)] for r in p.tolist()])
        except KeyError as exc:
            raise DomainError(f"drift is not tabulated at point {exc.args[0]}") from None

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "continuity": self.continuity}
        if self.kind == "constant":
            d["value"] = self.value
        elif self.kind == "linear":
            d["slope"] = list(self.slope)
        elif self.kind == "step":
            d.update(at=self.at, height=self.height)
        elif self.kind == "tabulated":
            d.update(points=self.points.tolist(), values=self.table.tolist())
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DriftSpec":
        kw = dict(d)
        if "values" in kw:
            kw["table"] = kw.pop("values")
        if "slope" in kw:
            s = kw["slope"]
            kw["slope"] = tuple(s) if isinstance(s, (list, tuple)) else (s,)
        return cls(**kw)
