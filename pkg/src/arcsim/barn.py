"""
Well-mixed barn model: CO2 balance, energy balance and fan map.

CO2 is carried internally as a volume fraction and reported in ppm.
The two balances are decoupled; with the MVs fixed each one is a linear
first-order system, so the steady state has a closed form.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, fields
from typing import Dict, List, Optional, Sequence, Tuple

PPM = 1e6

# Plant channels exposed to controllers, and their short labels.
CO2 = "barn.co2"
TEMPERATURE = "barn.temperature"
SHORT = {CO2: "c", TEMPERATURE: "T"}


@dataclass(frozen=True)
class BarnParams:
    V: float = 3000.0  # m3
    n_cows: float = 80.0
    g_co2: float = 5e-5  # m3/s per cow
    q_cow: float = 1000.0  # W per cow
    q_max: float = 15.0  # m3/s at u1 = 100 %
    q_min: float = 0.1  # m3/s at u1 = 0 %
    q_heat_max: float = 50000.0  # W
    ua: float = 2000.0  # W/K
    c_out: float = 420.0  # ppm
    rho: float = 1.2  # kg/m3
    cp: float = 1005.0  # J/(kg K)

    def __post_init__(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "n_cows":
                if v < 0:
                    raise ValueError("n_cows must be >= 0")
            elif not v > 0:
                raise ValueError(f"BarnParams.{f.name} must be > 0, got {v}")
        if not self.q_min < self.q_max:
            raise ValueError("need q_min < q_max")


@dataclass(frozen=True)
class BarnState:
    c: float  # volume fraction
    t: float  # degC

    @property
    def c_ppm(self) -> float:
        return self.c * PPM

    @classmethod
    def from_ppm(cls, c_ppm: float, t: float) -> "BarnState":
        return cls(c_ppm / PPM, t)


@dataclass(frozen=True)
class BarnInputs:
    u1: float  # fan speed, %
    u2: float  # heater, %
    t_out: float
    n_cows_override: Optional[float] = None

    def __post_init__(self) -> None:
        _check_pct("u1", self.u1)
        _check_pct("u2", self.u2)


def _check_pct(name: str, u: float) -> None:
    if not 0.0 <= u <= 100.0:
        raise ValueError(f"{name} = {u} outside [0, 100]")


def fan_flow(u1: float, params: BarnParams = BarnParams()) -> float:
    """Air flow (m3/s) for fan speed ``u1`` in percent."""
    _check_pct("u1", u1)
    return params.q_min + (params.q_max - params.q_min) * u1 / 100.0


def fan_speed(q: float, params: BarnParams = BarnParams()) -> float:
    """Inverse fan map (no range check)."""
    return 100.0 * (q - params.q_min) / (params.q_max - params.q_min)


def barn_derivatives(
    state: BarnState, inputs: BarnInputs, params: BarnParams = BarnParams()
) -> Tuple[float, float]:
    """Return ``(dc/dt, dT/dt)`` with c as a fraction (1/s, K/s)."""
    n = params.n_cows if inputs.n_cows_override is None else inputs.n_cows_override
    q = fan_flow(inputs.u1, params)
    rcp = params.rho * params.cp
    dc = (n * params.g_co2 + q * (params.c_out / PPM - state.c)) / params.V
    heat = n * params.q_cow + params.q_heat_max * inputs.u2 / 100.0
    dt = (heat - (rcp * q + params.ua) * (state.t - inputs.t_out)) / (rcp * params.V)
    return dc, dt


def barn_steady_state(
    u1: float,
    u2: float,
    t_out: float,
    params: BarnParams = BarnParams(),
    n_cows: Optional[float] = None,
) -> Tuple[float, float]:
    """Closed-form steady state ``(c_ppm, T)`` for fixed MVs."""
    _check_pct("u2", u2)
    n = params.n_cows if n_cows is None else n_cows
    q = fan_flow(u1, params)
    c = params.c_out + PPM * n * params.g_co2 / q
    t = t_out + (n * params.q_cow + params.q_heat_max * u2 / 100.0) / (
        params.rho * params.cp * q + params.ua
    )
    return c, t


class BarnPlant:
    """Barn model in the form the simulator integrates.

    State vector is ``[c_fraction, T]``; MVs are ``u1`` (fan) and ``u2``
    (heater); disturbances are ``t_out`` and ``n_cows``.
    """

    kind = "barn"
    state_names = ("c", "T")
    mv_names = ("u1", "u2")
    disturbance_names = ("t_out", "n_cows")
    output_names = (CO2, TEMPERATURE)
    short_names = SHORT

    def __init__(self, params: BarnParams = BarnParams()) -> None:
        self.params = params
        p = params
        self._rcp = p.rho * p.cp
        self._c_out = p.c_out / PPM
        self._dq = (p.q_max - p.q_min) / 100.0

    def default_disturbances(self) -> Dict[str, float]:
        return {"t_out": 0.0, "n_cows": self.params.n_cows}

    def derivatives(self, x: Sequence[float], mv: Dict[str, float], d: Dict[str, float]) -> List[float]:
        p = self.params
        q = p.q_min + self._dq * mv["u1"]
        n = d["n_cows"]
        dc = (n * p.g_co2 + q * (self._c_out - x[0])) / p.V
        heat = n * p.q_cow + p.q_heat_max * mv["u2"] / 100.0
        dT = (heat - (self._rcp * q + p.ua) * (x[1] - d["t_out"])) / (self._rcp * p.V)
        return [dc, dT]

    def outputs(self, x: Sequence[float], mv: Dict[str, float], d: Dict[str, float]) -> Dict[str, float]:
        return {CO2: x[0] * PPM, TEMPERATURE: x[1]}

    def project(self, x: List[float]) -> List[float]:
        return x

    def steady_state(self, mv: Dict[str, float], d: Dict[str, float]) -> List[float]:
        c, t = barn_steady_state(mv["u1"], mv["u2"], d["t_out"], self.params, d["n_cows"])
        return [c / PPM, t]

    def initial_operating_point(self, graph, d: Dict[str, float]):
        """Steady state the structure settles to at the initial disturbances."""
        sol = solve_active_set(d["t_out"], self.params, graph, n_cows=d["n_cows"])
        return [sol.c / PPM, sol.t], {"u1": sol.u1, "u2": sol.u2}


# ---------------------------------------------------------------------------
# Active-set steady states under a selector structure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Constraint:
    """A candidate active constraint ``variable = value``.

    ``variable`` is one of ``u1``, ``u2``, ``T``, ``c`` (ppm). ``source`` is
    the graph node that holds it (controller, constant) or ``None`` for a
    built-in MV limit.
    """

    variable: str
    value: float
    source: Optional[str] = None

    @property
    def label(self) -> str:
        return f"{self.variable}={self.value:g}"


@dataclass(frozen=True)
class ActiveSetSolution:
    t_out: float
    c: float  # ppm
    t: float
    u1: float
    u2: float
    active_pair: frozenset
    violated: Tuple[str, ...] = ()

    def as_row(self) -> Dict[str, object]:
        return {
            "t_out": self.t_out,
            "T": self.t,
            "c": self.c,
            "u1": self.u1,
            "u2": self.u2,
            "active": "+".join(sorted(self.active_pair)),
            "violated": "+".join(self.violated),
        }


class InfeasibleError(ValueError):
    """No active pair is consistent with the selector structure."""


def candidate_constraints(graph) -> List[Constraint]:
    """Constraints a barn control graph can hold at steady state."""
    cands: List[Constraint] = []
    for name, ctrl in graph.controllers.items():
        var = SHORT[graph.measurement_bindings[name]]
        cands.append(Constraint(var, ctrl.setpoint, name))
    for name, value in graph.constants.items():
        mv = _mv_fed_by(graph, name)
        cands.append(Constraint(mv, value, name))
    for mv, (lo, hi) in graph.mv_limits.items():
        cands.append(Constraint(mv, lo))
        cands.append(Constraint(mv, hi))
    return cands


def _mv_fed_by(graph, node: str) -> str:
    for s in graph.selectors:
        if node in s.inputs:
            return _mv_fed_by(graph, s.label)
    for mv, n in graph.mv_bindings.items():
        if n == node:
            return mv
    raise KeyError(node)


def _solve_pair(a: Constraint, b: Constraint, t_out: float, p: BarnParams, n: float):
    fixed = {}
    for con in (a, b):
        if con.variable in fixed:
            return None
        fixed[con.variable] = con.value
    if "c" in fixed and "u1" in fixed:
        return None
    rcp = p.rho * p.cp
    u1 = fixed.get("u1")
    u2 = fixed.get("u2")
    if "c" in fixed:
        excess = fixed["c"] - p.c_out
        if excess <= 0 or n <= 0:
            return None
        u1 = fan_speed(PPM * n * p.g_co2 / excess, p)
    if "T" in fixed:
        dT = fixed["T"] - t_out
        if u1 is not None:
            u2 = 100.0 * (dT * (rcp * fan_flow_unchecked(u1, p) + p.ua) - n * p.q_cow) / p.q_heat_max
        else:
            if dT == 0:
                return None
            q = ((n * p.q_cow + p.q_heat_max * u2 / 100.0) / dT - p.ua) / rcp
            u1 = fan_speed(q, p)
    return u1, u2


def fan_flow_unchecked(u1: float, p: BarnParams) -> float:
    return p.q_min + (p.q_max - p.q_min) * u1 / 100.0


def _steady_candidates(graph, y: Dict[str, float], u: Dict[str, float]) -> Dict[str, float]:
    """Controller candidates at a steady tracking state (unclamped form is
    ``u_mv + kc*e*tau_t/tau_i``), clamped as the controller would emit them."""
    out = {}
    for name, ctrl in graph.controllers.items():
        e = ctrl.setpoint - y[graph.measurement_bindings[name]]
        mv = graph.controller_mv[name]
        if ctrl.tracking:
            v = u[mv] + ctrl.kc * e * ctrl.tau_t / ctrl.tau_i
        else:
            v = math.copysign(math.inf, ctrl.kc * e) if e else u[mv]
        out[name] = min(max(v, ctrl.u_min), ctrl.u_max)
    return out


def solve_active_set(
    t_out: float,
    params: BarnParams = BarnParams(),
    graph=None,
    n_cows: Optional[float] = None,
    tol: float = 1e-7,
) -> ActiveSetSolution:
    """Steady state of the barn under a selector structure (default: final
    structure with five fan controllers and the split-parallel heater).

    Every pair of candidate constraints is solved in closed form; a pair is
    accepted when both MVs are in range and the selector network, fed with
    the steady tracking candidates of all controllers, reproduces the same
    MV values. Comfort bounds that end up violated are reported.
    """
    if graph is None:
        from .structures import build_cow3

        graph = build_cow3()
    n = params.n_cows if n_cows is None else n_cows
    cands = candidate_constraints(graph)
    found = []
    for a, b in itertools.combinations(cands, 2):
        sol = _solve_pair(a, b, t_out, params, n)
        if sol is None:
            continue
        u1, u2 = sol
        if not (-tol <= u1 <= 100 + tol and -tol <= u2 <= 100 + tol):
            continue
        u1 = min(max(u1, 0.0), 100.0)
        u2 = min(max(u2, 0.0), 100.0)
        c, t = barn_steady_state(u1, u2, t_out, params, n)
        y = {CO2: c, TEMPERATURE: t}
        u = {"u1": u1, "u2": u2}
        mvs, winners = graph.node_values(_steady_candidates(graph, y, u))
        if all(abs(mvs[k] - u[k]) <= 1e-6 * (1.0 + abs(u[k])) for k in u):
            found.append((a, b, c, t, u1, u2, winners))
    if not found:
        raise InfeasibleError(f"no consistent active pair at t_out={t_out}")

    # Several pairs can describe one degenerate point; prefer the pair
    # whose sources are the actual selector winners.
    def score(item):
        a, b, *_, winners = item
        return -sum(con.source is not None and con.source in winners.values() for con in (a, b))

    found.sort(key=score)
    a, b, c, t, u1, u2, _ = found[0]
    for other in found[1:]:
        if abs(other[4] - u1) > 1e-6 or abs(other[5] - u2) > 1e-6:
            raise InfeasibleError(f"multiple steady states at t_out={t_out}")
    violated = []
    for name, ctrl in graph.controllers.items():
        # Comfort bounds: a fan controller with MAX action guards an upper
        # bound, a MIN one a lower bound. Heater setpoint is not a bound.
        bound = graph.bounds.get(name)
        if bound is None:
            continue
        var = SHORT[graph.measurement_bindings[name]]
        val = t if var == "T" else c
        if bound == "upper" and val > ctrl.setpoint + 1e-6:
            violated.append(f"{var}<={ctrl.setpoint:g}")
        elif bound == "lower" and val < ctrl.setpoint - 1e-6:
            violated.append(f"{var}>={ctrl.setpoint:g}")
    return ActiveSetSolution(
        t_out=t_out,
        c=c,
        t=t,
        u1=u1,
        u2=u2,
        active_pair=frozenset({a.label, b.label}),
        violated=tuple(violated),
    )
