"""Experiment runner and reports.

Each experiment kind is split into ``collect`` (Monte Carlo, producing named
accumulators) and ``summarize`` (pure function of the config and the
accumulators). Reports keep the accumulator state, so runs with disjoint
seeds can be merged and re-summarized with pooled N.
"""
from __future__ import annotations

import copy
import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import kernels as K
from ..bridge import (AnchorSet, BridgeSampler, ReconstructionSampler, ResidualKernel,
                      anchor_array, check_reconstruction_identity, gamma_functions)
from ..errors import ConfigurationError
from ..extremum import sup_and_argmax
from ..kernels import KernelSpec, kernel_cross
from ..levy import reversal_moments, sample_levy_path
from ..montecarlo import BlockProcess, GaussianProcess, LevyProcess, run_replicates
from ..paths import Grid
from ..perturb import (derivative_observables, derivative_reports_from_acc,
                       gradient_observables, gradient_reports_from_acc,
                       identity_observables, identity_reports_from_acc, validate_rho)
from ..rng import SeedSpec
from ..sampler import FieldSampler, add_drift
from ..stats import CSV_HEADER, Estimate, IdentityReport, McAccumulator, mean_estimate
from .config import ExperimentConfig

REPORT_VERSION = 1


@dataclass
class Report:
    kind: str
    name: str
    config: dict
    preconditions: dict = field(default_factory=dict)
    identities: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    gates: dict = field(default_factory=dict)
    accumulators: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return all(self.gates.values())

    def to_dict(self, include_timing: bool = True) -> dict:
        d = {
            "version": REPORT_VERSION,
            "kind": self.kind,
            "name": self.name,
            "config": self.config,
            "preconditions": self.preconditions,
            "identities": [r.to_dict() for r in self.identities],
            "summary": self.summary,
            "tables": self.tables,
            "gates": self.gates,
            "passed": self.passed,
            "accumulators": {k: a.to_dict() for k, a in self.accumulators.items()},
        }
        if include_timing:
            d["timing"] = self.timing
        return d

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(_jsonable(self.to_dict(include_timing)), indent=2, sort_keys=True)

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.to_json() + "\n")
        with open(out / "tables.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for r in self.identities:
                w.writerow(r.csv_row())
        for name, rows in self.tables.items():
            if not rows:
                continue
            with open(out / f"{name}.csv", "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=list(rows[0]))
                w.writeheader()
                w.writerows(rows)
        path = self.artifacts.get("path")
        if path is not None:
            path.to_csv(out / "path.csv")
            if path.jumps is not None:
                path.jumps_to_csv(out / "jumps.csv")
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        idents = [IdentityReport(r["experiment"], r["lhs"], r["lhs_se"], r["rhs"],
                                 r["rhs_se"], r["z"], r["n"], r.get("meta", {}))
                  for r in d.get("identities", [])]
        accs = {k: McAccumulator.from_dict(v) for k, v in d.get("accumulators", {}).items()}
        return cls(d["kind"], d["name"], d["config"], d.get("preconditions", {}), idents,
                   d.get("summary", {}), d.get("tables", {}), d.get("gates", {}), accs,
                   d.get("timing", {}))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return x


# helpers ----------------------------------------------------------------

def _gaussian_process(cfg: ExperimentConfig, grid: Grid | None = None) -> GaussianProcess:
    return GaussianProcess(cfg.kernel, grid or cfg.grid, cfg.drift, cfg.method)


def _anchors_1d(cfg):
    if cfg.anchors:
        return [list(map(float, cfg.anchors[0]))]
    return [[cfg.grid.horizon[0]]]


def _z_gate(reports, z_max):
    return all(r.passes(z_max) for r in reports)


# preconditions ----------------------------------------------------------

def validate_preconditions(cfg: ExperimentConfig) -> dict:
    """Check every hypothesis the requested experiment relies on; raise a
    ConfigurationError naming the failed one."""
    k = cfg.kind
    out = {}
    if k == "identity-1d":
        if cfg.kernel.family not in K.ONE_D:
            raise ConfigurationError("identity-1d needs a 1-d kernel family", "process.kernel")
        T = _anchors_1d(cfg)[0][0]
        mono = K.check_monotone_in_first_arg(cfg.kernel, T, cfg.grid)
        out["monotone_section"] = {"anchor": T, "ok": mono.ok,
                                   "first_violation": mono.first_violation}
        if not mono:
            raise ConfigurationError(
                f"hypothesis failed: z -> R(z, {T}) must be strictly increasing on the grid "
                f"(first violation between {mono.first_violation})", "process.kernel")
        for n in cfg.refinement:
            Grid.uniform(n, cfg.grid.horizon[0]).locate([T])
    elif k in ("identity-nd", "gradient-identity", "bridge-check"):
        A = anchor_array(cfg.kernel, cfg.anchors)
        aset = AnchorSet.build(cfg.kernel, A)
        out["anchor_covariance"] = aset.covariance.tolist()
        aset.require_diagonal()
        if k == "identity-nd":
            rep = K.validate_anchor_conditions(cfg.kernel, A, cfg.grid)
            out["anchor_conditions"] = rep.to_dict()
            if not rep.ok:
                names = {1: "diagonal invertible anchor covariance",
                         2: "R(z, t^i) depends on z_i only",
                         3: "R(z, t^i) strictly increasing in z_i",
                         4: "R(z, t^i) = 0 when z_i = 0"}
                failed = "; ".join(f"({i}) {names[i]}" for i in rep.failed())
                raise ConfigurationError(f"hypothesis failed: {failed}; witnesses "
                                         f"{rep.witnesses}", "anchors")
    elif k == "derivative":
        for r in cfg.rhos:
            validate_rho(r, cfg.grid.points)
        out["rho_strictly_increasing"] = True
    elif k == "levy-cases":
        for c in cfg.cases:
            if "levy" not in c:
                raise ConfigurationError("every case needs a levy triplet", "cases")
    return out


# collect ------------------------------------------------------------------

def _collect_identity(cfg, grid=None, anchors=None, seed=None, N=None):
    proc = _gaussian_process(cfg, grid)
    anchors = anchors if anchors is not None else (
        _anchors_1d(cfg) if cfg.kind == "identity-1d" else cfg.anchors)
    names, observe = identity_observables(proc, anchors)
    return run_replicates(proc, N or cfg.replicates, cfg.seed if seed is None else seed,
                          observe, names).acc


def _process_for(cfg):
    if cfg.levy is not None:
        return LevyProcess(cfg.levy, cfg.grid)
    return _gaussian_process(cfg)


def _levy_case_observer(delta, tol, spacing):
    names = ["S", "unique", "at_end", "width_zero", "L", "tau_zero", "tau_step",
             "tau_finite", "tau", "width"]

    def observe(blk):
        S, zl, zr, _ = blk.argmax(tie_tol=tol)
        v, t = blk.values[0], blk.points[:, 0]
        moved = np.flatnonzero(np.abs(v) > tol)
        tau = t[moved[0]] if moved.size else math.inf
        w = zr[0, 0] - zl[0, 0]
        return {"S": S, "unique": w <= delta, "at_end": (zl[0, 0] == 1.0) and (zr[0, 0] == 1.0),
                "width_zero": w == 0.0, "L": zl[0, 0], "tau_zero": tau == 0.0,
                "tau_step": tau <= spacing,
                "tau_finite": math.isfinite(tau), "tau": tau if math.isfinite(tau) else 0.0,
                "width": w}

    return names, observe


def _law_columns(P):
    names = [f"X{i}" for i in range(P)]
    names += [f"P{i}_{j}" for i in range(P) for j in range(i, P)]
    return names


def _law_observer(P):
    names = _law_columns(P)

    def observe(blk):
        v = blk.values
        cols = {f"X{i}": v[:, i] for i in range(P)}
        for i in range(P):
            for j in range(i, P):
                cols[f"P{i}_{j}"] = v[:, i] * v[:, j]
        return cols

    return names, observe


def collect(cfg: ExperimentConfig) -> dict:
    k = cfg.kind
    accs = {}
    if k in ("identity-1d", "identity-nd"):
        accs["main"] = _collect_identity(cfg)
        if k == "identity-1d":
            T = cfg.grid.horizon[0]
            for n in cfg.refinement:
                accs[f"refine[{n}]"] = _collect_identity(cfg, Grid.uniform(n, T))
    elif k == "derivative":
        proc = _process_for(cfg)
        names, observe = derivative_observables(cfg.rhos, cfg.h)
        accs["main"] = run_replicates(proc, cfg.replicates, cfg.seed, observe, names).acc
    elif k == "gradient-identity":
        proc = _gaussian_process(cfg)
        names, observe, _ = gradient_observables(proc, cfg.anchors, cfg.functional, cfg.h)
        accs["main"] = run_replicates(proc, cfg.replicates, cfg.seed, observe, names).acc
    elif k == "levy-cases":
        from ..levy import LevyTriplet
        for i, case in enumerate(cfg.cases):
            trip = LevyTriplet.from_dict(case["levy"])
            delta = float(case.get("delta", 2.0 * cfg.grid.spacing))
            names, observe = _levy_case_observer(delta, cfg.tie_tol, cfg.grid.spacing)
            proc = LevyProcess(trip, cfg.grid)
            accs[f"case[{i}]"] = run_replicates(proc, cfg.replicates, cfg.seed,
                                                observe, names).acc
        if cfg.reversal is not None:
            rv = cfg.reversal
            trip = LevyTriplet.from_dict(rv["levy"])
            accs["reversal"] = reversal_moments(trip, cfg.grid, rv.get("s", [0.25, 0.5, 0.75]),
                                                int(rv.get("replicates", cfg.replicates)),
                                                cfg.seed)
    elif k == "bridge-check":
        lg = _law_grid(cfg)
        if lg is not None:
            P = lg.size
            names, observe = _law_observer(P)
            br = BlockProcess(BridgeSampler(cfg.kernel, cfg.anchors, lg, cfg.method), lg)
            accs["bridge"] = run_replicates(br, cfg.replicates, cfg.seed, observe, names).acc
            rc = BlockProcess(ReconstructionSampler(cfg.kernel, cfg.anchors, lg, cfg.method), lg)
            accs["reconstruction"] = run_replicates(rc, cfg.replicates, cfg.seed,
                                                    observe, names).acc
    elif k == "lpp-geodesic":
        accs.update(_collect_lpp(cfg))
    elif k == "simulate":
        pass
    return accs


def _law_grid(cfg):
    if cfg.law_grid is not None:
        return cfg.law_grid
    if cfg.grid.size <= 16:
        return cfg.grid
    return None


# summarize ----------------------------------------------------------------

def summarize(cfg: ExperimentConfig, accs: dict, pre: dict | None = None) -> Report:
    rep = Report(cfg.kind, cfg.name, cfg.to_dict(), dict(pre or {}))
    rep.accumulators = dict(accs)
    z_max = cfg.gates["z_max"]
    k = cfg.kind
    if k in ("identity-1d", "identity-nd"):
        anchors = _anchors_1d(cfg) if k == "identity-1d" else cfg.anchors
        acc = accs["main"]
        rep.identities = identity_reports_from_acc(cfg.kernel, acc, anchors, k,
                                                   {"grid": cfg.grid.to_dict(),
                                                    "family": cfg.kernel.family})
        rep.summary = _identity_summary(acc, len(anchors))
        rep.gates["identities"] = _z_gate(rep.identities, z_max)
        if k == "identity-1d" and cfg.refinement:
            rows = []
            for n in cfg.refinement:
                a = accs[f"refine[{n}]"]
                r = identity_reports_from_acc(cfg.kernel, a, anchors, f"{k} n={n}")[0]
                rows.append({"n": n, "lhs": r.lhs, "lhs_se": r.lhs_se, "rhs": r.rhs,
                             "rhs_se": r.rhs_se, "z": r.z, "N": r.n})
            rep.tables["refinement"] = rows
    elif k == "derivative":
        d = derivative_reports_from_acc(accs["main"], cfg.rhos, cfg.h)
        rep.identities = d.coordinate_reports + d.half_step_reports + d.step_agreement
        rep.summary = {"one_sided": d.one_sided, "bracket_width": d.bracket_width,
                       "h": cfg.h}
        rep.gates["derivative"] = _z_gate(rep.identities, z_max)
    elif k == "gradient-identity":
        gam = gamma_functions(cfg.kernel, cfg.anchors)
        g = gradient_reports_from_acc(accs["main"], gam, cfg.h, cfg.functional)
        rep.identities = g.reports
        rep.summary = {"central_difference": g.exact_gradient,
                       "anchor_variances": gam.variances.tolist()}
        rep.gates["gradient"] = _z_gate(rep.identities, z_max)
    elif k == "levy-cases":
        _summarize_levy(cfg, accs, rep)
    elif k == "bridge-check":
        _summarize_bridge(cfg, accs, rep)
    elif k == "lpp-geodesic":
        _summarize_lpp(cfg, accs, rep)
    return rep


def _identity_summary(acc, d):
    out = {"uniqueness_frequency": acc.mean_of("unique"), "n": acc.n,
           "S_mean": acc.mean_of("S"), "S_se": acc.se({"S": 1.0})}
    out["bracket_width"] = [{"coordinate": i + 1, "mean": acc.mean_of(f"width{i}"),
                             "se": acc.se({f"width{i}": 1.0})} for i in range(d)]
    return out


def _summarize_levy(cfg, accs, rep):
    rows = []
    ok = True
    for i, case in enumerate(cfg.cases):
        a = accs[f"case[{i}]"]
        n = a.n
        row = {"case": case.get("name", f"case{i}"), "n": n,
               "delta": float(case.get("delta", 2.0 * cfg.grid.spacing)),
               "uniqueness_frequency": a.mean_of("unique"),
               "argmax_at_end_frequency": a.mean_of("at_end"),
               "zero_width_frequency": a.mean_of("width_zero"),
               "L_mean": a.mean_of("L"), "L_se": a.se({"L": 1.0}),
               "tau_zero_frequency": a.mean_of("tau_zero"),
               "tau_first_step_frequency": a.mean_of("tau_step"),
               "tau_finite_frequency": a.mean_of("tau_finite"),
               "bracket_width_mean": a.mean_of("width")}
        exp = case.get("expect", {})
        checks = {}
        if "uniqueness_min" in exp:
            checks["uniqueness_min"] = row["uniqueness_frequency"] >= exp["uniqueness_min"]
        if "uniqueness_max" in exp:
            checks["uniqueness_max"] = row["uniqueness_frequency"] <= exp["uniqueness_max"]
        if exp.get("argmax_at_end"):
            checks["argmax_at_end"] = row["argmax_at_end_frequency"] == 1.0
        if exp.get("argmax_is_L"):
            checks["argmax_is_L"] = row["zero_width_frequency"] == 1.0
        if "tau_zero_max" in exp:
            checks["tau_zero_max"] = row["tau_zero_frequency"] <= exp["tau_zero_max"]
        row["checks"] = checks
        ok = ok and all(checks.values())
        rows.append(row)
    rep.summary["cases"] = rows
    rep.tables["levy_cases"] = [{k: v for k, v in r.items() if k != "checks"} for r in rows]
    rep.gates["levy_cases"] = ok
    if "reversal" in accs:
        rv = cfg.reversal
        acc = accs["reversal"]
        sign = -1.0 if rv.get("compare", "negated") == "negated" else 1.0
        idents = reversal_reports(acc, rv.get("s", [0.25, 0.5, 0.75]), sign)
        rep.identities.extend(idents)
        rep.gates["reversal"] = _z_gate(idents, cfg.gates["law_z_max"])


def reversal_reports(acc, s_values, sign=-1.0):
    """Mean of the reversed path against ``sign`` times the mean of X, and the
    two variances, at each s (paired over replicates)."""
    out = []
    label = "-X" if sign < 0 else "X"
    for i, s in enumerate(s_values):
        mx, mr = acc.mean_of(f"X{i}"), acc.mean_of(f"R{i}")
        out.append(IdentityReport.from_estimates(
            f"reversal mean s={s:g} vs {label}", acc, mean_estimate(acc, f"R{i}"),
            sign * mean_estimate(acc, f"X{i}"), {"s": s}))
        vx = Estimate(acc.mean_of(f"XX{i}") - mx * mx, {f"XX{i}": 1.0, f"X{i}": -2 * mx})
        vr = Estimate(acc.mean_of(f"RR{i}") - mr * mr, {f"RR{i}": 1.0, f"R{i}": -2 * mr})
        out.append(IdentityReport.from_estimates(f"reversal variance s={s:g}", acc, vr, vx,
                                                 {"s": s}))
    return out


def law_reports(acc, target: np.ndarray, label: str):
    P = target.shape[0]
    out = []
    for i in range(P):
        for j in range(i, P):
            mi, mj = acc.mean_of(f"X{i}"), acc.mean_of(f"X{j}")
            est = Estimate(acc.mean_of(f"P{i}_{j}") - mi * mj,
                           {f"P{i}_{j}": 1.0, f"X{i}": -mj, f"X{j}": -mi})
            if i == j:
                est = Estimate(est.value, {f"P{i}_{j}": 1.0, f"X{i}": -2 * mi})
            out.append(IdentityReport.from_estimates(f"{label}[{i},{j}]", acc, est,
                                                     Estimate(float(target[i, j])),
                                                     {"i": i, "j": j}))
    return out


def _summarize_bridge(cfg, accs, rep):
    chk = check_reconstruction_identity(cfg.kernel, cfg.anchors, cfg.grid)
    rk = ResidualKernel(cfg.kernel, cfg.anchors)
    P = cfg.grid.points
    A = anchor_array(cfg.kernel, cfg.anchors)
    anchored = float(np.abs(rk.cross(A, P)).max()) if A.shape[0] else 0.0
    rev = ResidualKernel(cfg.kernel, A[::-1]).cross(P, P)
    fwd = rk.cross(P, P)
    scale = max(chk.scale, 1e-300)
    order_gap = float(np.abs(fwd - rev).max()) / scale
    rep.summary = {"reconstruction": chk.to_dict(), "anchored_max_abs": anchored,
                   "order_insensitivity_relative": order_gap}
    rtol = cfg.gates["residual_rtol"]
    rep.gates["reconstruction_residual"] = chk.passes(rtol)
    rep.gates["anchored_to_zero"] = anchored <= 1e-12 * max(1.0, scale)
    rep.gates["order_insensitive"] = order_gap <= 1e-10
    if "bridge" in accs:
        lg = _law_grid(cfg)
        Rd = ResidualKernel(cfg.kernel, cfg.anchors).matrix(lg)
        R = kernel_cross(cfg.kernel, lg.points, lg.points)
        law = law_reports(accs["bridge"], Rd, "bridge-cov")
        recon = law_reports(accs["reconstruction"], R, "reconstruction-cov")
        rep.identities = law + recon
        zl = cfg.gates["law_z_max"]
        rep.summary["law_max_abs_z"] = max(abs(r.z) for r in law)
        rep.summary["reconstruction_max_abs_z"] = max(abs(r.z) for r in recon)
        rep.gates["conditional_law"] = _z_gate(law, zl)
        rep.gates["reconstruction_law"] = _z_gate(recon, zl)


# last-passage geodesics ------------------------------------------------------

def _lpp_setup(cfg):
    n = int(cfg.lpp.get("stages", 2))
    m = int(cfg.lpp.get("resolution", 512))
    if not 1 <= n <= 4:
        raise ConfigurationError("lpp-geodesic supports 1 <= n <= 4 stages", "lpp.stages")
    spec = KernelSpec.additive(n)
    grid = Grid.simplex(n, m)
    anchors = np.eye(n).tolist()
    return spec, grid, anchors, m


def _collect_lpp(cfg):
    spec, grid, anchors, m = _lpp_setup(cfg)
    proc = GaussianProcess(spec, grid)
    names, observe = identity_observables(proc, anchors, delta=2.0 / m)
    return {"main": run_replicates(proc, cfg.replicates, cfg.seed, observe, names).acc}


def _summarize_lpp(cfg, accs, rep):
    spec, grid, anchors, m = _lpp_setup(cfg)
    acc = accs["main"]
    n = spec.stages
    rep.identities = identity_reports_from_acc(spec, acc, anchors, "lpp-geodesic",
                                               {"stages": n, "resolution": m})
    rep.summary = _identity_summary(acc, n)
    rep.summary["uniqueness_delta"] = 2.0 / m
    rep.summary["geodesic_increments_mean"] = [acc.mean_of(f"R{i}") for i in range(n)]
    rep.gates["identities"] = _z_gate(rep.identities, cfg.gates["z_max"])
    rep.gates["uniqueness"] = rep.summary["uniqueness_frequency"] >= cfg.gates["uniqueness_min"]
    if n == 1:
        sym = IdentityReport.from_estimates("lpp-geodesic E Z vs 1/2", acc,
                                            mean_estimate(acc, "R0"), Estimate(0.5))
        rep.identities.append(sym)
    elif n == 2:
        sym = IdentityReport.from_estimates("lpp-geodesic E Z1 vs E Z2", acc,
                                            mean_estimate(acc, "R0"), mean_estimate(acc, "R1"))
        rep.identities.append(sym)
    rep.summary["symmetry_z"] = rep.identities[-1].z if n <= 2 else None


def lpp_geodesic_experiment(n: int, resolution: int, N: int, seed: int,
                            z_max: float = 4.0) -> Report:
    """Additive Brownian field on the simplex lattice: last-passage value S,
    geodesic increments Z, identity E Z_j = Cov(S, X(e^j)) per stage."""
    cfg = ExperimentConfig(kind="lpp-geodesic", name="lpp-geodesic",
                           lpp={"stages": int(n), "resolution": int(resolution)},
                           replicates=int(N), seed=int(seed))
    cfg.gates["z_max"] = z_max
    return run_config(cfg)


# simulate -------------------------------------------------------------------

def _simulate(cfg, rep):
    if cfg.levy is not None:
        path = sample_levy_path(cfg.levy, cfg.grid, SeedSpec(cfg.seed, 0))
    else:
        path = FieldSampler(cfg.kernel, cfg.grid, cfg.method).sample(SeedSpec(cfg.seed, 0))
        if cfg.drift is not None:
            path = add_drift(path, cfg.drift)
    summ = sup_and_argmax(path, cfg.tie_tol)
    rep.summary = {"argmax": summ.to_dict(), "points": int(path.grid.size),
                   "jumps": 0 if path.jumps is None else len(path.jumps)}
    rep.artifacts["path"] = path
    rep.gates["finite"] = bool(np.all(np.isfinite(path.values)))


# entry points -----------------------------------------------------------------

def run_config(cfg: ExperimentConfig) -> Report:
    t0 = time.perf_counter()
    pre = validate_preconditions(cfg)
    t1 = time.perf_counter()
    accs = collect(cfg)
    t2 = time.perf_counter()
    rep = summarize(cfg, accs, pre)
    if cfg.kind == "simulate":
        _simulate(cfg, rep)
    rep.timing = {"validate_s": t1 - t0, "simulate_s": t2 - t1,
                  "total_s": time.perf_counter() - t0}
    return rep


def run_experiment(config) -> Report:
    """Run an experiment from an ExperimentConfig, a dict or a JSON path."""
    if isinstance(config, ExperimentConfig):
        cfg = config
    elif isinstance(config, dict):
        cfg = ExperimentConfig.from_dict(config)
    else:
        cfg = ExperimentConfig.load(config)
    return run_config(cfg)


def merge_reports(reports) -> Report:
    """Pool reports of the same experiment run with different seeds."""
    reps = [r if isinstance(r, Report) else Report.from_dict(r) for r in reports]
    if not reps:
        raise ConfigurationError("nothing to merge", "reports")
    skip = ("seed", "replicates", "output", "merged_seeds")
    base = {k: v for k, v in reps[0].config.items() if k != "merged_seeds"}
    b = {k: v for k, v in base.items() if k not in skip}
    seeds = []
    for r in reps:
        c = copy.deepcopy(r.config)
        seeds.extend(c.get("merged_seeds", [c.get("seed")]))
        c = {k: v for k, v in c.items() if k not in skip}
        if c != b:
            raise ConfigurationError("reports differ in configuration beyond seed and "
                                     "replicate count", "reports")
        if set(r.accumulators) != set(reps[0].accumulators):
            raise ConfigurationError("reports track different accumulators", "reports")
    if len(set(seeds)) != len(seeds):
        raise ConfigurationError("reports share a seed; their replicates coincide", "seed")
    accs = {}
    for key in reps[0].accumulators:
        a = reps[0].accumulators[key].copy()
        for r in reps[1:]:
            a = a.merge(r.accumulators[key])
        accs[key] = a
    cfg = ExperimentConfig.from_dict(base)
    cfg.replicates = sum(int(r.config.get("replicates", 0)) for r in reps)
    rep = summarize(cfg, accs, reps[0].preconditions)
    rep.config["merged_seeds"] = seeds
    rep.timing = {"total_s": sum(r.timing.get("total_s", 0.0) for r in reps)}
    return rep
