"""Experiment configuration: JSON schema, parsing with diagnostics, defaults.

A config is a JSON object. Parsing validates it against ``CONFIG_SCHEMA``,
fills defaults and builds the domain objects; ``ExperimentConfig.to_dict``
writes the normalized form back, so parse -> serialize is idempotent.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from ..errors import ConfigurationError
from ..kernels import DriftSpec, KernelSpec
from ..levy import LevyTriplet
from ..paths import Grid
from ..perturb import Rho

KINDS = ("identity-1d", "identity-nd", "derivative", "levy-cases", "bridge-check",
         "gradient-identity", "lpp-geodesic", "simulate")

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_POINT = {"type": "array", "items": _NUM, "minItems": 1}

_KERNEL = {
    "type": "object",
    "required": ["family"],
    "properties": {
        "family": {"enum": ["BrownianMotion", "OrnsteinUhlenbeck", "FractionalBM",
                            "BrownianSheetFrontier", "LinearCov", "AdditiveBM"]},
        "horizon": {"oneOf": [_POS, {"type": "array", "items": _POS, "minItems": 1}]},
        "gamma": _POS, "sigma": _POS,
        "H": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "stages": {"type": "integer", "minimum": 1},
        "frontier": {"type": "boolean"},
    },
    "additionalProperties": False,
}

_JUMPS = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["exponential", "pareto"]},
        "mean": _POS, "shape": _POS, "cap": {"type": "number", "exclusiveMinimum": 1},
    },
    "additionalProperties": False,
}

_LEVY = {
    "type": "object",
    "properties": {
        "c": _NUM, "sigma": {"type": "number", "minimum": 0},
        "rate": {"type": "number", "minimum": 0}, "jumps": _JUMPS,
    },
    "additionalProperties": False,
}

_DRIFT = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["zero", "constant", "linear", "step", "tabulated"]},
        "value": _NUM, "slope": {"oneOf": [_NUM, {"type": "array", "items": _NUM}]},
        "at": _NUM, "height": _NUM,
        "points": {"type": "array"}, "values": {"type": "array", "items": _NUM},
        "continuity": {"enum": ["continuous", "cadlag"]},
    },
    "additionalProperties": False,
}

_GRID = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["uniform", "product", "simplex"]},
        "n": {"oneOf": [{"type": "integer", "minimum": 1},
                        {"type": "array", "items": {"type": "integer", "minimum": 1},
                         "minItems": 1}]},
        "T": {"oneOf": [_POS, {"type": "array", "items": _POS, "minItems": 1}]},
        "dim": {"type": "integer", "minimum": 1},
        "m": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}

_RHO = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["identity", "exp_combination", "power", "kernel_section", "affine"]},
        "coordinate": {"type": "integer", "minimum": 0},
        "gamma": _POS, "power": _POS, "slope": _POS, "intercept": _NUM,
        "kernel": _KERNEL, "anchor": {"oneOf": [_NUM, _POINT]}, "scale": _POS,
    },
    "additionalProperties": False,
}

_CASE = {
    "type": "object",
    "required": ["levy"],
    "properties": {
        "name": {"type": "string"},
        "levy": _LEVY,
        "expect": {
            "type": "object",
            "properties": {
                "uniqueness_min": {"type": "number", "minimum": 0, "maximum": 1},
                "uniqueness_max": {"type": "number", "minimum": 0, "maximum": 1},
                "argmax_at_end": {"type": "boolean"},
                "argmax_is_L": {"type": "boolean"},
                "tau_zero_max": {"type": "number", "minimum": 0, "maximum": 1},
            },
            "additionalProperties": False,
        },
        "delta": _POS,
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "argmaxlab experiment",
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(KINDS)},
        "name": {"type": "string"},
        "process": {
            "type": "object",
            "properties": {"kernel": _KERNEL, "drift": _DRIFT, "levy": _LEVY,
                           "method": {"enum": ["iid", "circulant", "ou", "cholesky"]}},
            "additionalProperties": False,
        },
        "grid": _GRID,
        "anchors": {"type": "array", "items": {"oneOf": [_NUM, _POINT]}},
        "perturbation": {
            "type": "object",
            "properties": {
                "rho": {"type": "array", "items": _RHO, "minItems": 1},
                "h": _POS,
                "a_values": {"type": "array", "items": _NUM},
            },
            "additionalProperties": False,
        },
        "functional": {"enum": ["supremum", "terminal", "integral"]},
        "replicates": {"type": "integer", "minimum": 2},
        "seed": {"type": "integer", "minimum": 0},
        "tie_tol": {"type": "number", "minimum": 0},
        "refinement": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "cases": {"type": "array", "items": _CASE},
        "reversal": {
            "type": "object",
            "required": ["levy"],
            "properties": {
                "levy": _LEVY,
                "s": {"type": "array", "items": {"type": "number", "minimum": 0,
                                                  "maximum": 1}},
                "replicates": {"type": "integer", "minimum": 2},
                "compare": {"enum": ["negated", "direct"]},
            },
            "additionalProperties": False,
        },
        "lpp": {
            "type": "object",
            "properties": {"stages": {"type": "integer", "minimum": 1, "maximum": 4},
                           "resolution": {"type": "integer", "minimum": 1}},
            "additionalProperties": False,
        },
        "law_grid": _GRID,
        "gates": {
            "type": "object",
            "properties": {"z_max": _POS, "residual_rtol": _POS, "law_z_max": _POS,
                           "uniqueness_min": {"type": "number", "minimum": 0,
                                              "maximum": 1}},
            "additionalProperties": False,
        },
        "output": {"type": "object", "properties": {"dir": {"type": "string"}},
                   "additionalProperties": False},
    },
    "additionalProperties": False,
}

DEFAULT_GATES = {"z_max": 4.0, "residual_rtol": 1e-10, "law_z_max": 5.0,
                 "uniqueness_min": 0.99}


def _locate_line(text: str | None, path) -> int | None:
    """Best-effort source line of the deepest named key in ``path``."""
    if not text:
        return None
    keys = [p for p in path if isinstance(p, str)]
    if not keys:
        return None
    needle = f'"{keys[-1]}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None


def _field_name(path) -> str:
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


def validate_config_dict(data, text: str | None = None, source: str = "<config>") -> None:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        msgs = []
        for e in errors:
            line = _locate_line(text, e.absolute_path)
            where = f"{source}:{line}" if line else source
            msgs.append(f"{where}: field '{_field_name(e.absolute_path)}': {e.message}")
        exc = ConfigurationError("\n".join(msgs))
        exc.field = _field_name(errors[0].absolute_path)
        raise exc


@dataclass
class ExperimentConfig:
    kind: str
    name: str = ""
    kernel: KernelSpec | None = None
    drift: DriftSpec | None = None
    levy: LevyTriplet | None = None
    method: str | None = None
    grid: Grid | None = None
    anchors: list = field(default_factory=list)
    rhos: tuple = ()
    h: float = 0.05
    a_values: tuple = ()
    functional: str = "supremum"
    replicates: int = 10000
    seed: int = 0
    tie_tol: float = 1e-12
    refinement: tuple = ()
    cases: list = field(default_factory=list)
    reversal: dict | None = None
    lpp: dict | None = None
    law_grid: Grid | None = None
    gates: dict = field(default_factory=lambda: dict(DEFAULT_GATES))
    output_dir: str | None = None

    # parsing ---------------------------------------------------------
    @classmethod
    def from_dict(cls, data: dict, text: str | None = None,
                  source: str = "<config>") -> "ExperimentConfig":
        validate_config_dict(data, text, source)
        kind = data["kind"]
        cfg = cls(kind=kind, name=data.get("name", kind))
        proc = data.get("process", {})
        if "kernel" in proc:
            cfg.kernel = KernelSpec.from_dict(proc["kernel"])
        if "drift" in proc:
            cfg.drift = DriftSpec.from_dict(proc["drift"])
        if "levy" in proc:
            cfg.levy = LevyTriplet.from_dict(proc["levy"])
        cfg.method = proc.get("method")
        if "grid" in data:
            cfg.grid = _grid_from(data["grid"])
        cfg.anchors = [a if isinstance(a, list) else [a] for a in data.get("anchors", [])]
        pert = data.get("perturbation", {})
        cfg.rhos = tuple(Rho.from_dict(r) for r in pert.get("rho", [{"kind": "identity"}]))
        cfg.h = float(pert.get("h", 0.05))
        cfg.a_values = tuple(float(a) for a in pert.get("a_values", ()))
        cfg.functional = data.get("functional", "supremum")
        cfg.replicates = int(data.get("replicates", 10000))
        cfg.seed = int(data.get("seed", 0))
        cfg.tie_tol = float(data.get("tie_tol", 1e-12))
        cfg.refinement = tuple(int(n) for n in data.get("refinement", ()))
        cfg.cases = copy.deepcopy(data.get("cases", []))
        cfg.reversal = copy.deepcopy(data.get("reversal"))
        cfg.lpp = copy.deepcopy(data.get("lpp"))
        if "law_grid" in data:
            cfg.law_grid = _grid_from(data["law_grid"])
        cfg.gates = dict(DEFAULT_GATES, **data.get("gates", {}))
        cfg.output_dir = data.get("output", {}).get("dir")
        cfg._check_kind()
        return cfg

    @classmethod
    def from_json(cls, text: str, source: str = "<config>") -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            err = ConfigurationError(f"{source}:{exc.lineno}:{exc.colno}: malformed JSON: "
                                     f"{exc.msg}")
            err.field = "<json>"
            raise err from None
        if not isinstance(data, dict):
            raise ConfigurationError(f"{source}: config must be a JSON object", "<root>")
        return cls.from_dict(data, text, source)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {p}: {exc.strerror}", "--config")
        return cls.from_json(text, str(p))

    def _check_kind(self):
        k = self.kind
        gaussian = ("identity-1d", "identity-nd", "bridge-check", "gradient-identity")
        if k in gaussian and self.kernel is None:
            raise ConfigurationError(f"experiment kind {k!r} needs process.kernel",
                                     "process.kernel")
        if k in gaussian + ("derivative", "simulate") and self.grid is None:
            raise ConfigurationError(f"experiment kind {k!r} needs a grid", "grid")
        if k in ("derivative", "simulate") and self.kernel is None and self.levy is None:
            raise ConfigurationError(f"experiment kind {k!r} needs process.kernel or "
                                     "process.levy", "process")
        if self.kernel is not None and self.levy is not None:
            raise ConfigurationError("give either process.kernel or process.levy", "process")
        if k in ("identity-nd", "bridge-check", "gradient-identity") and not self.anchors:
            raise ConfigurationError(f"experiment kind {k!r} needs anchors", "anchors")
        if k == "levy-cases" and not self.cases and self.reversal is None:
            raise ConfigurationError("levy-cases needs cases or a reversal block", "cases")
        if k == "levy-cases" and self.grid is None:
            self.grid = Grid.uniform(1024)
        if k == "lpp-geodesic" and self.lpp is None:
            self.lpp = {"stages": 2, "resolution": 512}
        if self.anchors and self.grid is not None and k != "lpp-geodesic":
            for a in self.anchors:
                try:
                    self.grid.locate(a)
                except Exception:
                    raise ConfigurationError(f"anchor {a} is not a grid point", "anchors")

    # overrides -------------------------------------------------------
    def with_overrides(self, seed=None, replicates=None, grid_n=None) -> "ExperimentConfig":
        cfg = copy.deepcopy(self)
        if seed is not None:
            cfg.seed = int(seed)
        if replicates is not None:
            if replicates < 2:
                raise ConfigurationError("--replicates must be >= 2", "replicates")
            cfg.replicates = int(replicates)
        if grid_n is not None:
            if cfg.kind == "lpp-geodesic":
                cfg.lpp = dict(cfg.lpp, resolution=int(grid_n))
            elif cfg.grid is not None:
                d = cfg.grid.to_dict()
                if d["kind"] == "uniform":
                    d["n"] = int(grid_n)
                elif d["kind"] == "product":
                    d["n"] = [int(grid_n)] * len(d["n"])
                else:
                    d["m"] = int(grid_n)
                cfg.grid = Grid.from_dict(d)
            cfg._check_kind()
        return cfg

    # serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        d = {"kind": self.kind, "name": self.name}
        proc = {}
        if self.kernel is not None:
            proc["kernel"] = self.kernel.to_dict()
        if self.drift is not None:
            proc["drift"] = self.drift.to_dict()
        if self.levy is not None:
            proc["levy"] = self.levy.to_dict()
        if self.method is not None:
            proc["method"] = self.method
        if proc:
            d["process"] = proc
        if self.grid is not None:
            d["grid"] = self.grid.to_dict()
        if self.anchors:
            d["anchors"] = [list(map(float, a)) for a in self.anchors]
        d["perturbation"] = {"rho": [r.to_dict() for r in self.rhos], "h": self.h}
        if self.a_values:
            d["perturbation"]["a_values"] = list(self.a_values)
        d.update(functional=self.functional, replicates=self.replicates, seed=self.seed,
                 tie_tol=self.tie_tol)
        if self.refinement:
            d["refinement"] = list(self.refinement)
        if self.cases:
            d["cases"] = copy.deepcopy(self.cases)
        if self.reversal is not None:
            d["reversal"] = copy.deepcopy(self.reversal)
        if self.lpp is not None:
            d["lpp"] = dict(self.lpp)
        if self.law_grid is not None:
            d["law_grid"] = self.law_grid.to_dict()
        d["gates"] = dict(self.gates)
        if self.output_dir:
            d["output"] = {"dir": self.output_dir}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _grid_from(d) -> Grid:
    try:
        if d["kind"] == "simplex" and ("dim" not in d or "m" not in d):
            raise KeyError("dim and m")
        if d["kind"] in ("uniform", "product") and "n" not in d:
            raise KeyError("n")
        if d["kind"] == "product":
            n, T = d["n"], d.get("T", 1.0)
            n = n if isinstance(n, list) else [n]
            T = T if isinstance(T, list) else [T] * len(n)
            return Grid.product(n, T)
        if d["kind"] == "uniform" and isinstance(d["n"], list):
            raise ConfigurationError("uniform grid takes a single n", "grid.n")
        return Grid.from_dict(d)
    except KeyError as exc:
        raise ConfigurationError(f"grid of kind {d['kind']!r} needs {exc.args[0]}",
                                 "grid") from None
