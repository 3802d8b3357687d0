"""Scenario files: a validated JSON description of one allocation problem.

Schema (version 1), all sections strict about unknown keys:

    {
      "schema_version": 1,
      "model": {
        "kind": "discrete",
        "atoms": [{"x": [0.0, 0.5], "prob": 0.6},
                  {"x": [0.0, -0.5], "prob": 0.4}]
      },
      "risk": {"rho": 0.0, "n": 1},
      "solver": {"max_iters": 500, "step_init": 1.0, "backtrack": 0.5,
                 "grad_tol": 1e-10, "kkt_tol": 1e-6, "restarts": 5},
      "mc": {"seed": 42, "samples": 1000000, "batch": 65536},
      "labels": {"name": "betting-p06"}
    }

Model kinds: ``discrete`` (keys: atoms), ``uniform`` (keys: x_max), and
``deterministic`` (keys: rate).  ``solver``, ``mc`` and ``labels`` are
optional; solver keys override the defaults individually.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ParseError
from .objective import McConfig, RiskSpec
from .optimize import OptimizerOptions
from .payoffs import ContinuousUniform, Deterministic, DiscreteJoint, PayoffModel

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Scenario:
    model: PayoffModel
    spec: RiskSpec
    solver: OptimizerOptions = field(default_factory=OptimizerOptions)
    mc: Optional[McConfig] = None
    labels: dict = field(default_factory=dict)


def _require_mapping(node, where: str) -> dict:
    if not isinstance(node, dict):
        raise ParseError(f"section '{where}' must be an object, got {type(node).__name__}")
    return node


def _reject_unknown(node: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(node) - allowed)
    if unknown:
        raise ParseError(f"unknown key '{unknown[0]}' in section '{where}'")


def _require(node: dict, key: str, where: str):
    if key not in node:
        raise ParseError(f"missing key '{key}' in section '{where}'")
    return node[key]


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"'{where}' must be a number, got {value!r}")
    return float(value)


def _integer(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"'{where}' must be an integer, got {value!r}")
    return value


def _parse_model(node) -> PayoffModel:
    node = _require_mapping(node, "model")
    kind = _require(node, "kind", "model")
    if kind == "discrete":
        _reject_unknown(node, {"kind", "atoms"}, "model")
        atoms = _require(node, "atoms", "model")
        if not isinstance(atoms, list) or not atoms:
            raise ParseError("'model.atoms' must be a nonempty list")
        payoffs, probs = [], []
        for i, atom in enumerate(atoms):
            atom = _require_mapping(atom, f"model.atoms[{i}]")
            _reject_unknown(atom, {"x", "prob"}, f"model.atoms[{i}]")
            x = _require(atom, "x", f"model.atoms[{i}]")
            if not isinstance(x, list) or not x:
                raise ParseError(f"'model.atoms[{i}].x' must be a nonempty list")
            payoffs.append([_number(v, f"model.atoms[{i}].x") for v in x])
            probs.append(_number(_require(atom, "prob", f"model.atoms[{i}]"), f"model.atoms[{i}].prob"))
        widths = {len(row) for row in payoffs}
        if len(widths) != 1:
            raise ParseError("all 'model.atoms[].x' vectors must have the same length")
        return DiscreteJoint(payoffs=np.array(payoffs), probs=np.array(probs))
    if kind == "uniform":
        _reject_unknown(node, {"kind", "x_max"}, "model")
        return ContinuousUniform(x_max=_number(_require(node, "x_max", "model"), "model.x_max"))
    if kind == "deterministic":
        _reject_unknown(node, {"kind", "rate"}, "model")
        return Deterministic(rate=_number(_require(node, "rate", "model"), "model.rate"))
    raise ParseError(f"unknown model kind {kind!r}; expected discrete, uniform or deterministic")


def _parse_risk(node) -> RiskSpec:
    node = _require_mapping(node, "risk")
    _reject_unknown(node, {"rho", "n"}, "risk")
    return RiskSpec(
        rho=_number(_require(node, "rho", "risk"), "risk.rho"),
        n=_integer(_require(node, "n", "risk"), "risk.n"),
    )


_SOLVER_KEYS = {
    "max_iters": _integer,
    "step_init": _number,
    "backtrack": _number,
    "grad_tol": _number,
    "kkt_tol": _number,
    "restarts": _integer,
    "restart_seed": _integer,
}


def _parse_solver(node) -> OptimizerOptions:
    node = _require_mapping(node, "solver")
    _reject_unknown(node, set(_SOLVER_KEYS), "solver")
    overrides = {
        key: parse(node[key], f"solver.{key}") for key, parse in _SOLVER_KEYS.items() if key in node
    }
    return OptimizerOptions(**overrides)


def _parse_mc(node) -> McConfig:
    node = _require_mapping(node, "mc")
    _reject_unknown(node, {"seed", "samples", "batch"}, "mc")
    kwargs = {
        "seed": _integer(_require(node, "seed", "mc"), "mc.seed"),
        "samples": _integer(_require(node, "samples", "mc"), "mc.samples"),
    }
    if "batch" in node:
        kwargs["batch"] = _integer(node["batch"], "mc.batch")
    return McConfig(**kwargs)


def _parse_labels(node) -> dict:
    node = _require_mapping(node, "labels")
    for key, value in node.items():
        if not isinstance(value, str):
            raise ParseError(f"'labels.{key}' must be a string, got {value!r}")
    return dict(node)


def parse_scenario(path) -> Scenario:
    """Load and validate a scenario file.

    Raises :class:`ParseError` for malformed structure (with line context
    for JSON syntax errors) and :class:`ValidationError` when a model or
    risk invariant is violated.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        root = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc

    root = _require_mapping(root, "<root>")
    _reject_unknown(root, {"schema_version", "model", "risk", "solver", "mc", "labels"}, "<root>")
    version = _require(root, "schema_version", "<root>")
    if version != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema_version {version!r}; expected {SCHEMA_VERSION}")

    model = _parse_model(_require(root, "model", "<root>"))
    spec = _parse_risk(_require(root, "risk", "<root>"))
    solver = _parse_solver(root["solver"]) if "solver" in root else OptimizerOptions()
    mc = _parse_mc(root["mc"]) if "mc" in root else None
    labels = _parse_labels(root["labels"]) if "labels" in root else {}
    return Scenario(model=model, spec=spec, solver=solver, mc=mc, labels=labels)
