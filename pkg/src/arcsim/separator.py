"""
Surrogate gas-liquid separator: well, choke, vessel, compressor, liquid valve.

The well is quasi-static (``p_well = p_res - r_well * F``) and the choke
flow ``F = cv_choke * z * sqrt(p_well - p_sep)`` is solved for ``F`` in
closed form. The vessel has two states, gas pressure and liquid level.
Valve openings and compressor speed are in percent.

Default parameters are commissioned so that the nominal point has the
choke at 60 %, the compressor at 70 %, feed 2, well pressure 180 bar and
70 bar in the separator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Dict, List, Optional, Sequence, Tuple

from scipy.optimize import brentq

from .blocks import ControlGraph

# Plant channels exposed to controllers.
PRESSURE = "separator.pressure"
LEVEL = "separator.level"
WELL_PRESSURE = "well.pressure"
FEED = "feed.flow"
SHORT = {PRESSURE: "p", LEVEL: "L", WELL_PRESSURE: "p_well", FEED: "F"}

_F0, _Z0, _P0, _PW0 = 2.0, 60.0, 70.0, 180.0


@dataclass(frozen=True)
class SeparatorParams:
    p_res: float = 200.0  # bar
    r_well: float = 10.0  # bar per unit feed
    cv_choke: float = _F0 / (_Z0 * math.sqrt(_PW0 - _P0))
    gas_fraction: float = 0.5
    v_gas: float = 0.5  # bar/s per unit gas imbalance
    area: float = 0.5  # %/s per unit liquid imbalance
    k_comp: float = 0.5 * _F0 / 0.7  # 70 % speed at the nominal point
    cv_liq: float = 0.5 * _F0 / (50.0 * math.sqrt(_P0 - 20.0))
    p_down: float = 20.0  # bar, liquid export
    p_min_well: float = 170.0
    p_sp: float = 70.0
    delta: float = 1.0

    def __post_init__(self) -> None:
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"SeparatorParams.{f.name} must be > 0")
        if not self.gas_fraction < 1:
            raise ValueError("gas_fraction must be < 1")
        if not self.p_res > self.p_min_well > self.p_sp:
            raise ValueError("need p_res > p_min_well > p_sp")


@dataclass(frozen=True)
class SeparatorState:
    p_sep: float  # bar
    level: float  # %

    def __post_init__(self) -> None:
        if not self.p_sep > 0:
            raise ValueError("p_sep must be > 0")
        if not 0.0 <= self.level <= 100.0:
            raise ValueError("level must be in [0, 100]")


def feed_flow(z: float, p_sep: float, params: SeparatorParams = SeparatorParams(),
              p_res: Optional[float] = None) -> float:
    """Choke flow with the well pressure solved self-consistently.

    ``F^2 + a^2 r F - a^2 (p_res - p_sep) = 0`` with ``a = cv * z``.
    A reversed pressure difference gives zero flow (check valve).
    """
    p_res = params.p_res if p_res is None else p_res
    head = p_res - p_sep
    a2 = (params.cv_choke * z) ** 2
    if head <= 0 or a2 == 0:
        return 0.0
    b = a2 * params.r_well
    return 0.5 * (-b + math.sqrt(b * b + 4.0 * a2 * head))


def well_pressure(feed: float, params: SeparatorParams = SeparatorParams(),
                  p_res: Optional[float] = None) -> float:
    if feed < 0:
        raise ValueError("feed flow must be >= 0")
    p_res = params.p_res if p_res is None else p_res
    return p_res - params.r_well * feed


def comp_flow(speed: float, p_sep: float, params: SeparatorParams = SeparatorParams()) -> float:
    return params.k_comp * speed / 100.0 * math.sqrt(max(p_sep, 0.0) / params.p_sp)


def liquid_flow(z_liq: float, p_sep: float, params: SeparatorParams = SeparatorParams()) -> float:
    return params.cv_liq * z_liq * math.sqrt(max(p_sep - params.p_down, 0.0))


def _check_pct(name: str, u: float) -> None:
    if not 0.0 <= u <= 100.0:
        raise ValueError(f"{name} = {u} outside [0, 100]")


def separator_derivatives(
    state: SeparatorState,
    z_choke: float,
    comp_speed: float,
    z_liq: float,
    params: SeparatorParams = SeparatorParams(),
    gas_fraction: Optional[float] = None,
) -> Tuple[float, float]:
    """Return ``(dp_sep/dt, dlevel/dt)``."""
    for name, u in (("z_choke", z_choke), ("comp_speed", comp_speed), ("z_liq", z_liq)):
        _check_pct(name, u)
    gf = params.gas_fraction if gas_fraction is None else gas_fraction
    f = feed_flow(z_choke, state.p_sep, params)
    dp = params.v_gas * (gf * f - comp_flow(comp_speed, state.p_sep, params))
    dl = params.area * ((1.0 - gf) * f - liquid_flow(z_liq, state.p_sep, params))
    return dp, dl


@dataclass(frozen=True)
class OperatingPoint:
    p_sep: float
    level: float
    feed: float
    p_well: float
    choke: float
    compressor: float
    liquid_valve: float
    gas_in: float
    gas_out: float
    liquid_in: float
    liquid_out: float


def commission(choke: float, p_sep: float = 70.0, level: float = 50.0,
               params: SeparatorParams = SeparatorParams(),
               gas_fraction: Optional[float] = None) -> OperatingPoint:
    """Compressor speed and liquid valve that balance the vessel at ``p_sep``."""
    gf = params.gas_fraction if gas_fraction is None else gas_fraction
    f = feed_flow(choke, p_sep, params)
    speed = 100.0 * gf * f / comp_flow(100.0, p_sep, params)
    z_liq = 100.0 * (1.0 - gf) * f / liquid_flow(100.0, p_sep, params)
    if speed > 100.0 or z_liq > 100.0:
        raise ValueError(f"choke {choke}% cannot be balanced at {p_sep} bar "
                         f"(compressor {speed:.1f}%, liquid valve {z_liq:.1f}%)")
    return _point(p_sep, level, choke, speed, z_liq, params, gf)


def _point(p, level, choke, speed, z_liq, params, gf) -> OperatingPoint:
    f = feed_flow(choke, p, params)
    return OperatingPoint(
        p, level, f, well_pressure(f, params), choke, speed, z_liq,
        gf * f, comp_flow(speed, p, params), (1.0 - gf) * f, liquid_flow(z_liq, p, params),
    )


def separator_steady_pressure(choke: float, speed: float,
                              params: SeparatorParams = SeparatorParams(),
                              gas_fraction: Optional[float] = None) -> float:
    """Vessel pressure at which the gas balance closes for fixed MVs."""
    gf = params.gas_fraction if gas_fraction is None else gas_fraction

    def resid(p):
        return gf * feed_flow(choke, p, params) - comp_flow(speed, p, params)

    lo, hi = 1e-9, params.p_res
    if resid(lo) <= 0:
        return lo
    return brentq(resid, lo, hi, xtol=1e-12)


def _feeders(graph: ControlGraph, mv: str) -> Tuple[List[str], List[str]]:
    """Constants and controllers that can reach ``mv``."""
    by_label = {s.label: s for s in graph.selectors}
    consts, ctrls, todo = [], [], [graph.mv_bindings[mv]]
    while todo:
        node = todo.pop()
        if node in by_label:
            todo.extend(by_label[node].inputs)
        elif node in graph.constants:
            consts.append(node)
        else:
            ctrls.append(node)
    return consts, ctrls


class SeparatorPlant:
    """Separator in the form the simulator integrates.

    State vector is ``[p_sep, level]``; MVs are ``choke``, ``compressor``
    and ``liquid_valve``; disturbances are ``gas_fraction`` and ``p_res``.
    """

    kind = "separator"
    state_names = ("p_sep", "level")
    mv_names = ("choke", "compressor", "liquid_valve")
    disturbance_names = ("gas_fraction", "p_res")
    output_names = (PRESSURE, LEVEL, WELL_PRESSURE, FEED)
    short_names = SHORT

    def __init__(self, params: SeparatorParams = SeparatorParams()) -> None:
        self.params = params

    def default_disturbances(self) -> Dict[str, float]:
        return {"gas_fraction": self.params.gas_fraction, "p_res": self.params.p_res}

    def derivatives(self, x: Sequence[float], mv: Dict[str, float], d: Dict[str, float]) -> List[float]:
        p = self.params
        gf = d["gas_fraction"]
        f = feed_flow(mv["choke"], x[0], p, d["p_res"])
        root = math.sqrt(max(x[0], 0.0) / p.p_sp)
        gas_out = p.k_comp * mv["compressor"] / 100.0 * root
        liq_out = p.cv_liq * mv["liquid_valve"] * math.sqrt(max(x[0] - p.p_down, 0.0))
        return [p.v_gas * (gf * f - gas_out), p.area * ((1.0 - gf) * f - liq_out)]

    def outputs(self, x: Sequence[float], mv: Dict[str, float], d: Dict[str, float]) -> Dict[str, float]:
        f = feed_flow(mv["choke"], x[0], self.params, d["p_res"])
        return {
            PRESSURE: x[0],
            LEVEL: x[1],
            WELL_PRESSURE: d["p_res"] - self.params.r_well * f,
            FEED: f,
        }

    def project(self, x: List[float]) -> List[float]:
        # vessel limits: pressure stays positive, level between empty and full
        return [max(x[0], 1e-6), min(max(x[1], 0.0), 100.0)]

    def steady_state(self, mv: Dict[str, float], d: Dict[str, float]) -> List[float]:
        p = separator_steady_pressure(mv["choke"], mv["compressor"], self.params, d["gas_fraction"])
        return [p, 50.0]

    def initial_operating_point(self, graph: ControlGraph, d: Dict[str, float]):
        """Commissioned steady state for the structure's desired inputs.

        The choke starts at the smallest desired input on its chain,
        reduced if needed so the well stays at its minimum pressure
        setpoint. Pressure and level start at their controller setpoints.
        """
        p = self.params
        p0, level0 = p.p_sp, 50.0
        for name, ctrl in graph.controllers.items():
            ch, mv = graph.measurement_bindings[name], graph.controller_mv[name]
            if ch == PRESSURE and mv == "compressor":
                p0 = ctrl.setpoint
            elif ch == LEVEL:
                level0 = ctrl.setpoint
        consts, ctrls = _feeders(graph, "choke")
        z = min((graph.constants[c] for c in consts), default=_Z0)
        for name in ctrls:
            if graph.measurement_bindings[name] == WELL_PRESSURE:
                sp = graph.controllers[name].setpoint
                z = min(z, (d["p_res"] - sp) / p.r_well / (p.cv_choke * math.sqrt(sp - p0)))
        op = commission(z, p0, level0, p, d["gas_fraction"])
        mv = {"choke": op.choke, "compressor": op.compressor, "liquid_valve": op.liquid_valve}
        return [op.p_sep, op.level], mv


def mass_balance(x: Sequence[float], mv: Dict[str, float], d: Dict[str, float],
                 params: SeparatorParams = SeparatorParams()) -> Dict[str, float]:
    """Gas and liquid in/out flows at state ``x``."""
    f = feed_flow(mv["choke"], x[0], params, d.get("p_res"))
    gf = d.get("gas_fraction", params.gas_fraction)
    return {
        "gas_in": gf * f,
        "gas_out": comp_flow(mv["compressor"], x[0], params),
        "liquid_in": (1.0 - gf) * f,
        "liquid_out": liquid_flow(mv["liquid_valve"], x[0], params),
    }


def _intervals(t: Sequence[float], flags: Sequence[bool]) -> List[Tuple[float, float]]:
    out, start = [], None
    t = [float(v) for v in t]
    for ti, f in zip(t, flags):
        if f and start is None:
            start = ti
        elif not f and start is not None:
            out.append((start, ti))
            start = None
    if start is not None:
        out.append((start, t[-1]))
    return out


def drifting_intervals(result, low: str = "PC_A", high: str = "PC_B",
                       low_mv: str = "compressor", high_mv: str = "choke") -> List[Tuple[float, float]]:
    """Spans where neither split-parallel pressure controller is selected."""
    flags = [a != low and b != high for a, b in zip(result.winners[low_mv], result.winners[high_mv])]
    return _intervals(list(result.t), flags)


def overlap_intervals(result, low: str = "PC_A", high: str = "PC_B",
                      low_mv: str = "compressor", high_mv: str = "choke") -> List[Tuple[float, float]]:
    """Spans where both split-parallel controllers are selected at once."""
    flags = [a == low and b == high for a, b in zip(result.winners[low_mv], result.winners[high_mv])]
    return _intervals(list(result.t), flags)


def build_fig1(params: SeparatorParams = SeparatorParams()):
    from .structures import build_graph
    return build_graph("fig1"), SeparatorPlant(params)


def build_fig2(params: SeparatorParams = SeparatorParams()):
    from .structures import build_graph
    return build_graph("fig2"), SeparatorPlant(params)


def build_fig3(params: SeparatorParams = SeparatorParams(), delta: Optional[float] = None):
    """Bidirectional scheme; ``delta`` moves the PC_B setpoint to ``SPL + delta``."""
    from .structures import graph_from_flowsheet, load_fixture, with_split_delta
    spec = load_fixture("fig3")
    if delta is not None:
        spec = with_split_delta(spec, delta)
    return graph_from_flowsheet(spec), SeparatorPlant(params)
