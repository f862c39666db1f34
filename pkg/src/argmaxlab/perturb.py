"""Perturbation families and the argmax identities they encode.

A path X is tilted to X^a = X + sum_i a_i rho_i with strictly increasing
rho_i. The expected supremum s(a) is differentiable at 0 exactly when the
argmax is unique, and then its gradient is E rho_i(Z_i). For Gaussian
families the same gradient equals a covariance with the anchor values,
which gives the covariance identities checked here.

All Monte Carlo estimators reuse one realization per replicate for every
amplitude (common random numbers) and report paired standard errors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels as K
from .bridge import anchor_array, gamma_functions
from .errors import ConfigurationError, DomainError
from .extremum import DEFAULT_TIE_TOL, sup_and_argmax
from .kernels import KernelSpec, kernel_cross
from .montecarlo import GaussianProcess, LevyProcess, Tilt, run_replicates
from .paths import PathSample
from .stats import Estimate, IdentityReport, cov_estimate, mean_estimate

RHO_KINDS = ("identity", "exp_combination", "power", "kernel_section", "affine")
BRACKET_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Rho:
    """A strictly increasing continuous function of one coordinate.

    ``identity``: z. ``exp_combination``: e^{gz} - e^{-gz}. ``power``: z^p.
    ``affine``: slope * z + intercept (slope > 0). ``kernel_section``:
    z -> R(z, anchor) for a kernel and anchor point; it is evaluated on the
    full point, which the anchor conditions reduce to a function of z_i.
    """

    kind: str = "identity"
    coordinate: int = 0
    gamma: float = 1.0
    power: float = 1.0
    slope: float = 1.0
    intercept: float = 0.0
    kernel: KernelSpec | None = None
    anchor: tuple | None = None
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in RHO_KINDS:
            raise ConfigurationError(f"unknown perturbation kind {self.kind!r}", "rho.kind")
        if self.kind == "exp_combination" and not self.gamma > 0:
            raise ConfigurationError("exp_combination needs gamma > 0", "rho.gamma")
        if self.kind == "power" and not self.power > 0:
            raise ConfigurationError("power needs a positive exponent", "rho.power")
        if self.kind == "affine" and not self.slope > 0:
            raise ConfigurationError("affine perturbation needs slope > 0", "rho.slope")
        if self.kind == "kernel_section" and (self.kernel is None or self.anchor is None):
            raise ConfigurationError("kernel_section needs a kernel and an anchor", "rho")

    def __call__(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        if p.ndim <= 1:
            p = p.reshape(-1, 1)
        if self.kind == "kernel_section":
            a = np.asarray(self.anchor, dtype=float).reshape(1, -1)
            return self.scale * kernel_cross(self.kernel, p, a)[:, 0]
        if self.coordinate >= p.shape[1]:
            raise DomainError(f"rho acts on coordinate {self.coordinate} of {p.shape[1]}-d points")
        z = p[:, self.coordinate]
        if self.kind == "identity":
            return z.copy()
        if self.kind == "exp_combination":
            return 2.0 * np.sinh(self.gamma * z)
        if self.kind == "power":
            return z ** self.power
        return self.slope * z + self.intercept

    @property
    def linear_coefficient(self):
        """Coefficient vector if rho is linear in the coordinate, else None."""
        if self.kind == "identity":
            return self.coordinate, 1.0
        if self.kind == "affine" and self.intercept == 0.0:
            return self.coordinate, self.slope
        return None

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "coordinate": self.coordinate}
        if self.kind == "exp_combination":
            d["gamma"] = self.gamma
        elif self.kind == "power":
            d["power"] = self.power
        elif self.kind == "affine":
            d.update(slope=self.slope, intercept=self.intercept)
        elif self.kind == "kernel_section":
            d.update(kernel=self.kernel.to_dict(), anchor=list(self.anchor), scale=self.scale)
        return d

    @classmethod
    def from_dict(cls, d) -> "Rho":
        kw = dict(d)
        if "kernel" in kw:
            kw["kernel"] = KernelSpec.from_dict(kw["kernel"])
        if "anchor" in kw:
            a = kw["anchor"]
            kw["anchor"] = tuple(a) if isinstance(a, (list, tuple)) else (a,)
        return cls(**kw)


def validate_rho(rho: Rho, points) -> None:
    """Strict increase of rho along its coordinate on the given points."""
    p = np.asarray(points, dtype=float)
    if p.ndim == 1:
        p = p[:, None]
    order = np.argsort(p[:, rho.coordinate], kind="stable")
    z = p[order, rho.coordinate]
    r = rho(p[order])
    distinct = np.diff(z) > 0
    if np.any(np.diff(r)[distinct] <= 0):
        raise ConfigurationError(f"perturbation {rho.kind} is not strictly increasing "
                                 "on the grid", "rho")


@dataclass(frozen=True, eq=False)
class PerturbationSpec:
    rhos: tuple
    amplitude: tuple

    def __post_init__(self):
        if len(self.rhos) != len(self.amplitude):
            raise ConfigurationError("one amplitude per perturbation function", "amplitude")

    def tilt(self) -> Tilt:
        return make_tilt(self.rhos, self.amplitude)


def make_tilt(rhos, amplitude) -> Tilt:
    rhos = tuple(rhos)
    amp = tuple(float(a) for a in amplitude)

    def fn(points):
        out = np.zeros(np.asarray(points).shape[0])
        for r, a in zip(rhos, amp):
            if a != 0.0:
                out += a * r(points)
        return out

    lin = None
    coefs = [r.linear_coefficient for r in rhos]
    if all(c is not None for c in coefs) and rhos:
        d = max(c[0] for c in coefs) + 1
        lin = np.zeros(d)
        for (i, w), a in zip(coefs, amp):
            lin[i] += a * w
    return Tilt(fn, lin)


def perturb_path(path: PathSample, spec: PerturbationSpec) -> PathSample:
    tilt = spec.tilt()
    values = path.values + tilt(path.grid.points)
    jumps = path.jumps
    if jumps is not None and len(jumps):
        jumps = jumps.shifted(tilt(jumps.times[:, None]))
    return PathSample(path.grid, values, jumps)


def difference_quotient(path: PathSample, a: float, rho: Rho) -> float:
    """(S(X^a) - S(X)) / a on one realization."""
    if a == 0:
        raise ValueError("amplitude must be nonzero")
    S = sup_and_argmax(path).S
    Sa = sup_and_argmax(perturb_path(path, PerturbationSpec((rho,), (a,)))).S
    return (Sa - S) / a


@dataclass
class BracketReport:
    ok: bool
    checks: dict
    S: float
    Sa: float
    quotient: float

    def __bool__(self):
        return self.ok


def check_bracketing(path: PathSample, a: float, rho: Rho, tol: float = BRACKET_TOL,
                     tie_tol: float = DEFAULT_TIE_TOL) -> BracketReport:
    """Path-wise maximality inequalities between X and X^a.

    For j in {l, r}: S + a rho(Z_j) <= S^a <= S + a rho(Z_j^a). For a < 0
    additionally rho(Z_l^a) - rho(Z_l) <= q - rho(Z_l) <= 0, and for a > 0
    0 <= q - rho(Z_r) <= rho(Z_r^a) - rho(Z_r), with q = (S^a - S) / a.
    """
    if a == 0:
        raise ValueError("amplitude must be nonzero")
    base = sup_and_argmax(path, tie_tol)
    pert = sup_and_argmax(perturb_path(path, PerturbationSpec((rho,), (a,))), tie_tol)
    S, Sa = base.S, pert.S
    r = lambda z: float(rho(np.array([[z]]))[0])  # noqa: E731
    checks = {}
    for j, z, za in (("l", base.zl, pert.zl), ("r", base.zr, pert.zr)):
        checks[f"lower_{j}"] = S + a * r(z) <= Sa + tol
        checks[f"upper_{j}"] = Sa <= S + a * r(za) + tol
    q = (Sa - S) / a
    if a < 0:
        checks["sandwich_left"] = r(pert.zl) - r(base.zl) <= q - r(base.zl) + tol
        checks["sandwich_right"] = q - r(base.zl) <= tol
    else:
        checks["sandwich_left"] = -tol <= q - r(base.zr)
        checks["sandwich_right"] = q - r(base.zr) <= r(pert.zr) - r(base.zr) + tol
    return BracketReport(all(checks.values()), checks, S, Sa, q)


# Monte Carlo -------------------------------------------------------------

def _rhos_for(process, rho):
    if isinstance(rho, Rho):
        return (rho,)
    return tuple(rho)


def _validate_rhos(process, rhos):
    for r in rhos:
        validate_rho(r, process.points)


@dataclass
class SCurve:
    a_values: np.ndarray
    means: np.ndarray
    ses: np.ndarray
    n: int
    convexity_violations: int
    acc: object = field(repr=False, default=None)

    def to_dict(self):
        return {"a": self.a_values.tolist(), "s_hat": self.means.tolist(),
                "se": self.ses.tolist(), "n": self.n,
                "convexity_violations": self.convexity_violations}


def estimate_s_curve(process, rho, a_values, N: int, seed: int,
                     convexity_tol: float = 1e-9) -> SCurve:
    """s_hat(a) = mean of S^a with one path per replicate reused for all a."""
    if N < 2:
        raise ValueError("need N >= 2 replicates")
    a = np.asarray(sorted(float(x) for x in a_values))
    if not np.any(a == 0.0):
        raise ValueError("a_values must include 0")
    rho = _rhos_for(process, rho)[0]
    _validate_rhos(process, (rho,))
    tilts = [None if x == 0 else make_tilt((rho,), (x,)) for x in a]
    names = [f"S[{i}]" for i in range(a.size)] + ["convex_bad"]

    def observe(blk):
        cols = {f"S[{i}]": blk.sup(t) for i, t in enumerate(tilts)}
        sa = np.column_stack([cols[f"S[{i}]"] for i in range(a.size)])
        bad = np.zeros(blk.k)
        for j in range(1, a.size - 1):
            # a_j between neighbours: convex combination bound
            w = (a[j + 1] - a[j]) / (a[j + 1] - a[j - 1])
            chord = w * sa[:, j - 1] + (1 - w) * sa[:, j + 1]
            bad += sa[:, j] > chord + convexity_tol * (1 + np.abs(chord))
        cols["convex_bad"] = bad
        return cols

    res = run_replicates(process, N, seed, observe, names)
    acc = res.acc
    means = np.array([acc.mean_of(f"S[{i}]") for i in range(a.size)])
    ses = np.array([acc.se({f"S[{i}]": 1.0}) for i in range(a.size)])
    bad = int(round(acc.mean_of("convex_bad") * acc.n))
    return SCurve(a, means, ses, acc.n, bad, acc)


@dataclass
class DerivativeReport:
    """Central-difference slope of s_hat at 0 against E rho(Z), per coordinate,
    at step h and at h / 2."""

    coordinate_reports: list
    half_step_reports: list
    step_agreement: list
    one_sided: list
    bracket_width: list
    h: float

    def passes(self, z_max: float = 3.0) -> bool:
        reps = self.coordinate_reports + self.half_step_reports + self.step_agreement
        return all(r.passes(z_max) for r in reps)

    def to_dict(self):
        return {"h": self.h,
                "central": [r.to_dict() for r in self.coordinate_reports],
                "half_step": [r.to_dict() for r in self.half_step_reports],
                "step_agreement": [r.to_dict() for r in self.step_agreement],
                "one_sided": self.one_sided, "bracket_width": self.bracket_width}


def derivative_observables(rhos, h):
    """Observer and column names for the derivative check."""
    d = len(rhos)
    steps = (h, h / 2)
    tilts = {}
    for i, r in enumerate(rhos):
        for s in steps:
            for sign in (1, -1):
                tilts[(i, sign * s)] = make_tilt((r,), (sign * s,))
    names = ["S"]
    for i in range(d):
        names += [f"rhoZ{i}", f"width{i}"]
        names += [f"S{i}[{sign * s:+g}]" for s in steps for sign in (1, -1)]

    def observe(blk):
        S, zl, zr, _ = blk.argmax()
        mid = 0.5 * (zl + zr)
        cols = {"S": S}
        for i, r in enumerate(rhos):
            if r.kind == "kernel_section":
                cols[f"rhoZ{i}"] = r(mid)
            else:
                pts = np.zeros((mid.shape[0], max(mid.shape[1], r.coordinate + 1)))
                pts[:, :mid.shape[1]] = mid
                cols[f"rhoZ{i}"] = r(pts)
            cols[f"width{i}"] = zr[:, r.coordinate] - zl[:, r.coordinate]
            for s in steps:
                for sign in (1, -1):
                    cols[f"S{i}[{sign * s:+g}]"] = blk.sup(tilts[(i, sign * s)])
        return cols

    return names, observe


def derivative_reports_from_acc(acc, rhos, h, name="derivative"):
    reps, half, agree, one_sided, widths = [], [], [], [], []

    def central(i, s):
        return (1.0 / (2 * s)) * (mean_estimate(acc, f"S{i}[{s:+g}]")
                                  - mean_estimate(acc, f"S{i}[{-s:+g}]"))

    for i in range(len(rhos)):
        rhs = mean_estimate(acc, f"rhoZ{i}")
        c1, c2 = central(i, h), central(i, h / 2)
        meta = {"coordinate": i + 1, "h": h}
        reps.append(IdentityReport.from_estimates(f"{name}[{i + 1}] h={h:g}", acc, c1, rhs, meta))
        half.append(IdentityReport.from_estimates(f"{name}[{i + 1}] h={h / 2:g}", acc, c2, rhs,
                                                  dict(meta, h=h / 2)))
        agree.append(IdentityReport.from_estimates(f"{name}[{i + 1}] step agreement", acc,
                                                   c1, c2, meta))
        S0 = mean_estimate(acc, "S")
        right = (1.0 / h) * (mean_estimate(acc, f"S{i}[{h:+g}]") - S0)
        left = (1.0 / h) * (S0 - mean_estimate(acc, f"S{i}[{-h:+g}]"))
        one_sided.append({"coordinate": i + 1, "right": right.value,
                          "right_se": acc.se(right.grad), "left": left.value,
                          "left_se": acc.se(left.grad)})
        widths.append({"coordinate": i + 1, "mean": acc.mean_of(f"width{i}"),
                       "se": acc.se({f"width{i}": 1.0})})
    return DerivativeReport(reps, half, agree, one_sided, widths, h)


def derivative_criterion_check(process, rho, h_step: float, N: int, seed: int
                               ) -> DerivativeReport:
    """Central difference of s_hat at 0 (per coordinate) against E rho(Z),
    with Z the midpoint of the argmax bracket."""
    if not h_step > 0:
        raise ValueError("h_step must be > 0")
    rhos = _rhos_for(process, rho)
    _validate_rhos(process, rhos)
    names, observe = derivative_observables(rhos, h_step)
    acc = run_replicates(process, N, seed, observe, names).acc
    rep = derivative_reports_from_acc(acc, rhos, h_step)
    rep.acc = acc
    return rep


# covariance identities -------------------------------------------------------

def _require_gaussian(process):
    if not isinstance(process, GaussianProcess):
        raise ConfigurationError("covariance identities need a Gaussian process", "process")


def identity_observables(process, anchors, delta: float | None = None):
    """Observer for E R(Z_i, t^i) vs Cov(S, X(t^i)), i = 1..d.

    Also tracks the indicator that every bracket width is at most ``delta``
    (default two grid spacings).
    """
    spec = process.kernel
    A = anchor_array(spec, anchors)
    delta = 2.0 * process.grid.spacing if delta is None else float(delta)
    names = ["S", "unique"]
    for i in range(A.shape[0]):
        names += [f"R{i}", f"X{i}", f"SX{i}", f"width{i}"]

    def observe(blk):
        S, zl, zr, _ = blk.argmax()
        mid = 0.5 * (zl + zr)
        mid = np.clip(mid, 0.0, None)
        if spec.family == K.ADDITIVE:
            # keep midpoints inside the simplex against rounding
            tot = mid.sum(axis=1, keepdims=True)
            mid = np.divide(mid, tot, out=mid.copy(), where=tot > 1.0)
        cols = {"S": S, "unique": np.all(zr - zl <= delta + 1e-12, axis=1)}
        for i in range(A.shape[0]):
            x = blk.value_at(A[i])
            cols[f"R{i}"] = kernel_cross(spec, mid, A[i:i + 1], check=False)[:, 0]
            cols[f"X{i}"] = x
            cols[f"SX{i}"] = S * x
            w = zr - zl
            cols[f"width{i}"] = w[:, min(i, w.shape[1] - 1)]
        return cols

    return names, observe


def _identity_forms(spec, acc, i, anchor):
    lhs = mean_estimate(acc, f"R{i}")
    rhs = cov_estimate(acc, "S", f"X{i}", f"SX{i}")
    out = [("kernel", lhs, rhs)]
    if spec.family == K.OU:
        g, s = spec.gamma, spec.sigma
        t = float(anchor[0])
        # R(z, t) = sigma^2/(2g) e^{-gt} (e^{gz} - e^{-gz})
        c = 2 * g / s ** 2 * math.exp(g * t)
        out.append(("ou", c * lhs, c * rhs))
    if spec.family == K.FBM:
        t2h = float(anchor[0]) ** (2 * spec.H)
        # 2 R(z, t) - t^{2H} = z^{2H} - (t - z)^{2H}
        out.append(("fbm", 2.0 * lhs - t2h, 2.0 * rhs - t2h))
    return out


def identity_reports_from_acc(spec, acc, anchors, label="identity", meta=None):
    A = anchor_array(spec, anchors)
    reports = []
    for i in range(A.shape[0]):
        for form, lhs, rhs in _identity_forms(spec, acc, i, A[i]):
            m = dict(meta or {})
            m.update(coordinate=i + 1, form=form, anchor=A[i].tolist(),
                     bracket_width_mean=acc.mean_of(f"width{i}"))
            reports.append(IdentityReport.from_estimates(
                f"{label}[{i + 1}]" + ("" if form == "kernel" else f" {form}"),
                acc, lhs, rhs, m))
    return reports


def covariance_identity_1d(process, T: float, N: int, seed: int):
    """E R(Z, T) against Cov(S, X(T)); family-specific forms for OU and fBm
    are appended. Returns a list of IdentityReports (kernel form first)."""
    _require_gaussian(process)
    spec = process.kernel
    if spec.family not in K.ONE_D:
        raise ConfigurationError("covariance_identity_1d needs a 1-d family", "kernel.family")
    mono = K.check_monotone_in_first_arg(spec, T, process.grid)
    if not mono:
        raise ConfigurationError(
            f"z -> R(z, {T}) is not strictly increasing on the grid "
            f"(first violation {mono.first_violation})", "kernel")
    process.grid.locate([T])
    names, observe = identity_observables(process, [[T]])
    acc = run_replicates(process, N, seed, observe, names).acc
    meta = {"grid": process.grid.to_dict(), "family": spec.family}
    return identity_reports_from_acc(spec, acc, [[T]], "identity-1d", meta)


def covariance_identity_nd(process, anchors, N: int, seed: int):
    """Per coordinate: E R(Z_i, t^i) against Cov(S, X(t^i))."""
    _require_gaussian(process)
    spec = process.kernel
    A = anchor_array(spec, anchors)
    rep = K.validate_anchor_conditions(spec, A, process.grid)
    if not rep.ok:
        raise ConfigurationError(
            f"anchor conditions {rep.failed()} fail: {rep.witnesses}", "anchors")
    for a in A:
        process.grid.locate(a)
    names, observe = identity_observables(process, A)
    acc = run_replicates(process, N, seed, observe, names).acc
    meta = {"grid": process.grid.to_dict(), "family": spec.family}
    return identity_reports_from_acc(spec, acc, A, "identity-nd", meta)


# gradient identity -----------------------------------------------------------

FUNCTIONALS = ("supremum", "terminal", "integral")


def gradient_observables(process, anchors, functional, h):
    spec = process.kernel
    gam = gamma_functions(spec, anchors)
    A = gam.anchors
    d = A.shape[0]
    tilts = {}
    for i in range(d):
        for sign in (1, -1):
            coef = [0.0] * d
            coef[i] = sign * h
            tilts[(i, sign)] = Tilt(lambda p, c=tuple(coef): gam.combination(p, c),
                                    gam.linear_coefficients(coef, process.points))
    names = ["Y"]
    for i in range(d):
        names += [f"X{i}", f"YX{i}", f"Y{i}+", f"Y{i}-"]

    def observe(blk):
        Y = blk.functional(functional)
        cols = {"Y": Y}
        for i in range(d):
            x = blk.value_at(A[i])
            cols[f"X{i}"] = x
            cols[f"YX{i}"] = Y * x
            cols[f"Y{i}+"] = blk.functional(functional, tilts[(i, 1)])
            cols[f"Y{i}-"] = blk.functional(functional, tilts[(i, -1)])
        return cols

    return names, observe, gam


@dataclass
class GradientReport:
    reports: list
    exact_gradient: list

    def to_dict(self):
        return {"coordinates": [r.to_dict() for r in self.reports],
                "central_difference": self.exact_gradient}


def gradient_reports_from_acc(acc, gam, h, functional):
    reps, grads = [], []
    for i in range(gam.anchors.shape[0]):
        lhs = (1.0 / (2 * h)) * (mean_estimate(acc, f"Y{i}+") - mean_estimate(acc, f"Y{i}-"))
        rhs = (1.0 / gam.variances[i]) * cov_estimate(acc, "Y", f"X{i}", f"YX{i}")
        reps.append(IdentityReport.from_estimates(
            f"gradient-{functional}[{i + 1}]", acc, lhs, rhs,
            {"coordinate": i + 1, "h": h, "functional": functional}))
        grads.append(lhs.value)
    return GradientReport(reps, grads)


def gaussian_gradient_identity(process, functional: str, anchors, N: int, seed: int,
                               h: float = 0.05) -> GradientReport:
    """Central-difference gradient of E Y(X + sum a_i gamma^i) at 0 against
    Cov(Y, X(t^i)) / sigma_ii."""
    _require_gaussian(process)
    if functional not in FUNCTIONALS:
        raise ConfigurationError(f"functional must be one of {FUNCTIONALS}", "functional")
    names, observe, gam = gradient_observables(process, anchors, functional, h)
    for a in gam.anchors:
        process.grid.locate(a)
    acc = run_replicates(process, N, seed, observe, names).acc
    rep = gradient_reports_from_acc(acc, gam, h, functional)
    rep.acc = acc
    return rep
