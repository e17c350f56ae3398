"""
Scenario files: which plant, which control structure, which disturbances.

A scenario is YAML::

    name: cow_staircase
    plant: barn                  # barn | separator
    structure: cow3              # shipped fixture name or a flowsheet path
    overrides: {TC2: {kc: -10}}  # optional per-loop tuning patches
    split_delta: 1.0             # optional, separator structures
    params: {n_cows: 80}         # optional plant parameter overrides
    dt: 1.0
    t_end: 72000
    log_interval: 10
    integrator: euler            # euler | rk4
    delays: {barn.temperature: 60}
    disturbances:
      - {variable: t_out, staircase: [0, -2.5, -5], segment: 4000}
      - {variable: gas_fraction, ramp: [[1000, 0.5], [2000, 0.85]], step: 10}
      - {variable: z_s, breakpoints: [0, 1000], values: [60, 100]}

Bare names (``cow_staircase``, ``scenarios/cow_staircase``) resolve to
the scenarios shipped with the package.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml

from .blocks import ControlError
from .barn import BarnParams, BarnPlant
from .separator import SeparatorParams, SeparatorPlant
from .sim import Profile, Scenario, ramp_profile, staircase_profile
from .structures import graph_from_flowsheet, load_fixture, with_split_delta
from .topology import FlowsheetSpec, parse_flowsheet

PLANTS = {"barn": (BarnPlant, BarnParams), "separator": (SeparatorPlant, SeparatorParams)}
_KEYS = {"name", "description", "plant", "structure", "overrides", "split_delta", "params", "dt",
         "t_end", "log_interval", "integrator", "delays", "disturbances"}


class ScenarioError(ValueError):
    """Schema violation, reported as ``<file>: <field>: <message>``."""

    def __init__(self, source: str, field: str, message: str):
        self.source, self.field = source, field
        super().__init__(f"{source}: {field}: {message}")


def scenario_names() -> List[str]:
    root = resources.files("arcsim.data.scenarios")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def resolve(ref: Union[str, Path]) -> Path:
    """Find a scenario file on disk or among the shipped scenarios."""
    path = Path(ref)
    for cand in (path, path.with_suffix(".yaml")):
        if cand.is_file():
            return cand
    name = path.name[:-5] if path.name.endswith(".yaml") else path.name
    if len(path.parts) <= 2 and name in scenario_names():
        with resources.as_file(resources.files("arcsim.data.scenarios").joinpath(name + ".yaml")) as p:
            return Path(p)
    raise FileNotFoundError(f"no scenario file {str(ref)!r}")


def load_scenario(ref: Union[str, Path]) -> Scenario:
    path = resolve(ref)
    text = path.read_text(encoding="utf-8")
    return scenario_from_text(text, source=str(path), base=path.parent)


def _num(src: str, field: str, v: Any, positive: bool = False) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(src, field, f"expected a number, got {v!r}")
    if positive and not v > 0:
        raise ScenarioError(src, field, f"must be > 0, got {v}")
    return float(v)


def _structure(src: str, ref: str, base: Optional[Path]) -> FlowsheetSpec:
    try:
        p = Path(ref)
        if base is not None and not p.is_absolute():
            p = base / p
        if p.suffix in (".yaml", ".yml") and p.is_file():
            return parse_flowsheet(p.read_text(encoding="utf-8"))
        return load_fixture(ref)
    except FileNotFoundError:
        raise ScenarioError(src, "structure", f"unknown structure {ref!r}") from None


def _profile(src: str, i: int, d: Any) -> Profile:
    field = f"disturbances[{i}]"
    if not isinstance(d, dict) or "variable" not in d:
        raise ScenarioError(src, field, "needs a 'variable'")
    var = d["variable"]
    try:
        if "staircase" in d:
            seg = _num(src, field + ".segment", d.get("segment", 4000.0), positive=True)
            return staircase_profile([_num(src, field + ".staircase", v) for v in d["staircase"]], seg, var)
        if "ramp" in d:
            pts = [(_num(src, field + ".ramp", t), _num(src, field + ".ramp", v)) for t, v in d["ramp"]]
            return ramp_profile(var, pts, _num(src, field + ".step", d.get("step", 10.0), positive=True))
        if "values" in d:
            bps = d.get("breakpoints", [0.0])
            return Profile(var, [_num(src, field + ".breakpoints", b) for b in bps],
                           [_num(src, field + ".values", v) for v in d["values"]])
        if "value" in d:
            return Profile(var, [0.0], [_num(src, field + ".value", d["value"])])
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(src, field, str(exc)) from None
    raise ScenarioError(src, field, "needs one of staircase, ramp, values, value")


def scenario_from_text(text: str, source: str = "<scenario>", base: Optional[Path] = None) -> Scenario:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(source, "<file>", f"not valid YAML ({exc})") from None
    if not isinstance(data, dict):
        raise ScenarioError(source, "<file>", "top level must be a mapping")
    return scenario_from_data(data, source, base)


def scenario_from_data(data: Dict[str, Any], source: str = "<scenario>",
                       base: Optional[Path] = None) -> Scenario:
    src = source
    unknown = set(data) - _KEYS
    if unknown:
        raise ScenarioError(src, sorted(unknown)[0], "unknown field")
    for key in ("plant", "structure"):
        if key not in data:
            raise ScenarioError(src, key, "required")
    if data["plant"] not in PLANTS:
        raise ScenarioError(src, "plant", f"expected one of {sorted(PLANTS)}, got {data['plant']!r}")
    plant_cls, params_cls = PLANTS[data["plant"]]
    try:
        params = params_cls(**(data.get("params") or {}))
    except (TypeError, ValueError) as exc:
        raise ScenarioError(src, "params", str(exc)) from None

    spec = _structure(src, str(data["structure"]), base)
    if "split_delta" in data:
        spec = with_split_delta(spec, _num(src, "split_delta", data["split_delta"], positive=True))
    try:
        graph = graph_from_flowsheet(spec, data.get("overrides"))
    except (TypeError, ValueError, ControlError) as exc:
        raise ScenarioError(src, "overrides", str(exc)) from None

    profiles = [_profile(src, i, d) for i, d in enumerate(data.get("disturbances") or [])]
    delays = {str(k): _num(src, f"delays.{k}", v) for k, v in (data.get("delays") or {}).items()}
    sc = Scenario(
        plant=plant_cls(params),
        graph=graph,
        disturbances=profiles,
        delays=delays,
        dt=_num(src, "dt", data.get("dt", 1.0), positive=True),
        t_end=_num(src, "t_end", data.get("t_end", 0.0)),
        log_interval=_num(src, "log_interval", data.get("log_interval", 10.0), positive=True),
        integrator=str(data.get("integrator", "euler")),
        name=str(data.get("name", Path(source).stem)),
    )
    try:
        sc.validate()
    except ValueError as exc:
        raise ScenarioError(src, "scenario", str(exc)) from None
    return sc
