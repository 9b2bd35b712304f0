"""Run configuration: a YAML (or JSON) document describing one study.

Example::

    seed: 7
    system:
      preset: ks3            # or riccati, or an inline definition:
      params: {c0: 0, b1: -1}
    # system:
    #   coordinates: [x1, x2, x3]
    #   hamiltonians: ["x3", "x2"]
    #   density: "1"
    #   domain: "1"           # point is inside where this is positive
    #   coefficients: {k: 2}
    #   rhs: ["...", "...", "..."]
    integrator: {method: rk4-fixed, step: 1.0e-3, t_span: [0, 1]}
    initial_conditions: [[0, 1, 0]]
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from .dynamics import IntegratorConfig
from .errors import ConfigError, NambuError
from .expr import CoefficientTable
from .fields import ScalarField, VectorField
from .nambu import HamiltonianTuple, VolumeNPStructure
from .systems import SystemPreset, get_preset


@dataclass
class RunConfig:
    system: Mapping[str, Any]
    integrator: IntegratorConfig
    initial_conditions: list[list[float]]
    seed: int = 0
    sections: dict[str, Any] = field(default_factory=dict)
    out_dir: str | None = None

    def section(self, name: str) -> dict[str, Any]:
        return dict(self.sections.get(name) or {})


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        raise ConfigError("a configuration file is required (--config)")
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        data = yaml.safe_load(text) if not str(path).endswith(".json") else json.loads(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    return config_from_mapping(data or {})


def _integrator(d: Mapping[str, Any]) -> IntegratorConfig:
    d = dict(d or {})
    kw: dict[str, Any] = {}
    if "t_span" in d:
        kw["t_span"] = tuple(float(v) for v in d.pop("t_span"))
    for key in ("method",):
        if key in d:
            kw[key] = str(d.pop(key))
    for key in ("step", "abs_tol", "rel_tol", "initial_step", "min_step", "max_step"):
        if key in d:
            kw[key] = float(d.pop(key))
    if "stride" in d:
        kw["stride"] = int(d.pop("stride"))
    if d:
        raise ConfigError(f"unknown integrator keys: {sorted(d)}")
    try:
        return IntegratorConfig(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def config_from_mapping(data: Mapping[str, Any]) -> RunConfig:
    if "system" not in data:
        raise ConfigError("config needs a 'system' entry")
    ics = data.get("initial_conditions") or []
    try:
        ics = [[float(v) for v in ic] for ic in ics]
    except (TypeError, ValueError):
        raise ConfigError("initial_conditions must be a list of numeric vectors") from None
    known = {"system", "integrator", "initial_conditions", "seed", "outputs"}
    sections = {k: v for k, v in data.items() if k not in known}
    out = (data.get("outputs") or {}).get("dir")
    return RunConfig(dict(data["system"]), _integrator(data.get("integrator") or {}), ics,
                     int(data.get("seed", 0)), sections, out)


def _inline_system(d: Mapping[str, Any]) -> SystemPreset:
    try:
        coords = [str(c) for c in d["coordinates"]]
        ham_src = [str(h) for h in d["hamiltonians"]]
    except KeyError as exc:
        raise ConfigError(f"inline system needs {exc.args[0]!r}") from None
    table = CoefficientTable.from_mapping(d.get("coefficients") or {})
    n = len(coords)
    density = ScalarField.from_expr(str(d.get("density", "1")), coords, table, name="rho")
    dom_expr = ScalarField.from_expr(str(d.get("domain", "1")), coords, table, name="domain")

    def domain(p) -> bool:
        try:
            v = dom_expr.value([float(x) for x in p], 0.0)
        except (NambuError, ArithmeticError):
            return False
        return bool(np.isfinite(v) and v > 0.0)

    structure = VolumeNPStructure(n, density, domain)
    fields = tuple(ScalarField.from_expr(s, coords, table, name=f"H{i + 1}") for i, s in enumerate(ham_src))
    try:
        H = HamiltonianTuple(fields, structure)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    aux = {f.name: f for f in fields}
    if "rhs" in d:
        rhs = VectorField.from_exprs([str(s) for s in d["rhs"]], coords, table, "rhs")
    else:
        from .nambu import hamiltonian_vector_field
        rhs = hamiltonian_vector_field(H)
    return SystemPreset(str(d.get("name", "inline")), coords, table, structure, H, rhs, aux,
                        derived_density=False)


def build_system(d: Mapping[str, Any]) -> SystemPreset:
    if "preset" in d:
        params = dict(d.get("params") or {})
        try:
            return get_preset(str(d["preset"]), **params)
        except TypeError as exc:
            raise ConfigError(f"bad preset parameters: {exc}") from None
    return _inline_system(d)
