"""
Control blocks for advanced regulatory control (ARC).

PI controllers with tracking anti-windup, MIN/MAX/MID selectors and
split-parallel pairs, plus the :class:`ControlGraph` container that wires
them to plant measurements and manipulated variables (MVs).

Every scan follows a two-phase protocol: all controllers *propose* a
candidate output, selectors pick one candidate per MV, then every
controller *commits* with the value actually sent to the MV it feeds.
The commit step is where tracking happens, so deselected controllers stay
ready for a bumpless takeover.
"""

from __future__ import annotations

import enum
import graphlib
import math
from dataclasses import dataclass, field
from math import isfinite
from operator import itemgetter
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union


class ControlError(Exception):
    """Base class for errors raised by the control blocks."""


class OrderingError(ControlError):
    """A controller was committed without a preceding propose."""


class GraphError(ControlError):
    """A control graph is mis-wired (unresolved binding, cycle, fan-out)."""


@dataclass(slots=True)
class PiController:
    """Stateful PI controller with tracking anti-windup.

    The control law is ``u = kc * (setpoint - y) + integral``, clamped to
    ``[u_min, u_max]``. ``kc`` carries the sign of the action: a negative
    gain raises the output when the measurement is above setpoint.

    ``tau_t`` defaults to ``tau_i``. Setting ``tracking=False`` drops the
    tracking term and gives a plain (winding-up) PI controller.
    """

    kc: float
    tau_i: float
    setpoint: float
    tau_t: Optional[float] = None
    u_min: float = 0.0
    u_max: float = 100.0
    integral: float = 0.0
    name: str = "PI"
    tracking: bool = True
    last_candidate: float = field(default=math.nan)
    _proposed: bool = field(default=False, repr=False)

    def __post_init__(self) -> None:
        if self.tau_t is None:
            self.tau_t = self.tau_i
        if not self.tau_i > 0:
            raise ValueError(f"{self.name}: tau_i must be > 0, got {self.tau_i}")
        if not self.tau_t > 0:
            raise ValueError(f"{self.name}: tau_t must be > 0, got {self.tau_t}")
        if not self.u_min < self.u_max:
            raise ValueError(f"{self.name}: need u_min < u_max")

    def propose(self, y: float) -> float:
        """Return the clamped candidate output for measurement ``y``.

        The unclamped value is kept in ``last_candidate``; ``integral`` is
        not touched.
        """
        if not math.isfinite(y):
            raise ValueError(f"controller {self.name!r}: non-finite measurement {y!r}")
        u = self.kc * (self.setpoint - y) + self.integral
        self.last_candidate = u
        self._proposed = True
        if u < self.u_min:
            return self.u_min
        if u > self.u_max:
            return self.u_max
        return u

    def commit(self, u_selected: float, y: float, dt: float) -> None:
        """Advance the integral one forward-Euler step.

        ``u_selected`` is the value actually applied to the MV this
        controller feeds. The tracking term pulls the candidate towards it
        at rate ``1/tau_t``.
        """
        if not self._proposed:
            raise OrderingError(f"controller {self.name!r}: commit without propose")
        if not dt > 0:
            raise ValueError(f"controller {self.name!r}: dt must be > 0")
        self._proposed = False
        di = self.kc / self.tau_i * (self.setpoint - y) * dt
        if self.tracking:
            di += (u_selected - self.last_candidate) * dt / self.tau_t
        self.integral += di

    def initialize(self, y: float, u_selected: float) -> None:
        """Set ``integral`` to its steady tracking value.

        With measurement ``y`` held and the MV held at ``u_selected``,
        the integral is then stationary (bumpless start).
        """
        e = self.setpoint - y
        if self.tracking:
            self.integral = u_selected + self.kc * e * (self.tau_t / self.tau_i - 1.0)
        else:
            self.integral = u_selected - self.kc * e
        self.last_candidate = math.nan
        self._proposed = False


def pi_propose(ctrl: PiController, y: float) -> float:
    return ctrl.propose(y)


def pi_commit(ctrl: PiController, u_selected: float, y: float, dt: float) -> PiController:
    ctrl.commit(u_selected, y, dt)
    return ctrl


class SelectorKind(str, enum.Enum):
    MIN = "MIN"
    MAX = "MAX"
    MID = "MID"


def select(kind: Union[SelectorKind, str], candidates: Sequence[float]) -> Tuple[float, int]:
    """Pick one of ``candidates``; ties go to the lowest index.

    Returns ``(value, winner_index)``. The value is always one of the inputs.
    """
    kind = SelectorKind(kind)
    n = len(candidates)
    if kind is SelectorKind.MID:
        if n != 3:
            raise ValueError(f"MID selector needs exactly 3 inputs, got {n}")
    elif n < 2:
        raise ValueError(f"{kind.value} selector needs at least 2 inputs, got {n}")
    for v in candidates:
        if not math.isfinite(v):
            raise ValueError(f"{kind.value} selector: non-finite input {v!r}")
    if kind is SelectorKind.MIN:
        best = 0
        for i in range(1, n):
            if candidates[i] < candidates[best]:
                best = i
    elif kind is SelectorKind.MAX:
        best = 0
        for i in range(1, n):
            if candidates[i] > candidates[best]:
                best = i
    else:
        med = sorted(candidates)[1]
        best = list(candidates).index(med)
    return candidates[best], best


# Unchecked variants for the scan loop; input counts are validated when the
# graph is built and every candidate is finite by construction.
def _min_of(c: Sequence[float]) -> Tuple[float, int]:
    v = min(c)
    return v, c.index(v)


def _max_of(c: Sequence[float]) -> Tuple[float, int]:
    v = max(c)
    return v, c.index(v)


def _mid_of(c: Sequence[float]) -> Tuple[float, int]:
    v = sorted(c)[1]
    return v, c.index(v)


def _min2(c: Sequence[float]) -> Tuple[float, int]:
    a, b = c
    return (b, 1) if b < a else (a, 0)


def _max2(c: Sequence[float]) -> Tuple[float, int]:
    a, b = c
    return (b, 1) if b > a else (a, 0)


_FAST = {SelectorKind.MIN: _min_of, SelectorKind.MAX: _max_of, SelectorKind.MID: _mid_of}
_FAST2 = {SelectorKind.MIN: _min2, SelectorKind.MAX: _max2}


@dataclass
class SelectorNode:
    """A MIN, MAX or MID element; ``inputs`` name upstream nodes."""

    kind: SelectorKind
    inputs: List[str]
    label: str

    def __post_init__(self) -> None:
        self.kind = SelectorKind(self.kind)
        n = len(self.inputs)
        if self.kind is SelectorKind.MID and n != 3:
            raise GraphError(f"selector {self.label!r}: MID needs exactly 3 inputs")
        if self.kind is not SelectorKind.MID and n < 2:
            raise GraphError(f"selector {self.label!r}: {self.kind.value} needs >= 2 inputs")

    def select(self, candidates: Sequence[float]) -> Tuple[float, int]:
        return select(self.kind, candidates)


@dataclass
class SplitParallelPair:
    """Two controllers on one CV with setpoints ``SPL`` and ``SPH = SPL + delta``.

    Each controller drives its own MV; switching between them happens by
    saturation and feedback, not by a switching table.
    """

    controller_low: PiController
    controller_high: PiController
    delta: float

    def __post_init__(self) -> None:
        if not self.delta > 0:
            raise ValueError("split-parallel delta must be > 0")
        gap = self.controller_high.setpoint - self.controller_low.setpoint
        if not math.isclose(gap, self.delta, rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError(
                f"split-parallel {self.controller_low.name}/{self.controller_high.name}: "
                f"SPH - SPL = {gap} but delta = {self.delta}"
            )


class ControlGraph:
    """Controllers, constants and selectors wired to plant MVs.

    Parameters
    ----------
    controllers
        Named PI controllers.
    selectors
        Selector nodes, in any order; they are sorted topologically.
    mv_bindings
        ``{mv: node}`` where node is a selector, controller or constant.
    measurement_bindings
        ``{controller: plant channel}``.
    constants
        Desired inputs / operator setpoints, ``{name: value}``.
    mv_limits
        Built-in MV limits applied after the last selector; default
        ``(0, 100)``.
    split_parallel
        Pairs that must drive different MVs.
    bounds
        ``{controller: "upper" | "lower"}`` for controllers guarding a
        constraint rather than a setpoint; used for reporting only.
    """

    def __init__(
        self,
        controllers: Mapping[str, PiController],
        selectors: Sequence[SelectorNode],
        mv_bindings: Mapping[str, str],
        measurement_bindings: Mapping[str, str],
        constants: Optional[Mapping[str, float]] = None,
        mv_limits: Optional[Mapping[str, Tuple[float, float]]] = None,
        split_parallel: Sequence[SplitParallelPair] = (),
        bounds: Optional[Mapping[str, str]] = None,
    ) -> None:
        self.controllers: Dict[str, PiController] = dict(controllers)
        self.constants: Dict[str, float] = dict(constants or {})
        self.mv_bindings: Dict[str, str] = dict(mv_bindings)
        self.measurement_bindings: Dict[str, str] = dict(measurement_bindings)
        self.mv_limits: Dict[str, Tuple[float, float]] = {
            mv: (0.0, 100.0) for mv in self.mv_bindings
        }
        self.mv_limits.update(mv_limits or {})
        self.split_parallel = list(split_parallel)
        self.bounds: Dict[str, str] = dict(bounds or {})
        self.last_values: Dict[str, float] = {}
        for name, value in self.constants.items():
            if not math.isfinite(value):
                raise ValueError(f"constant {name!r}: non-finite value {value!r}")

        names = list(self.controllers) + list(self.constants) + [s.label for s in selectors]
        dupes = {n for n in names if names.count(n) > 1}
        if dupes:
            raise GraphError(f"duplicate node names: {sorted(dupes)}")
        by_label = {s.label: s for s in selectors}
        known = set(names)

        deps = {}
        for s in selectors:
            for src in s.inputs:
                if src not in known:
                    raise GraphError(f"selector {s.label!r}: unresolved input {src!r}")
            deps[s.label] = [src for src in s.inputs if src in by_label]
        try:
            order = list(graphlib.TopologicalSorter(deps).static_order())
        except graphlib.CycleError as exc:
            raise GraphError(f"cycle among selectors: {exc.args[1]}") from None
        self.selectors: List[SelectorNode] = [by_label[label] for label in order]

        for mv, node in self.mv_bindings.items():
            if node not in known:
                raise GraphError(f"MV {mv!r}: unresolved driving node {node!r}")
        for name in self.controllers:
            if name not in self.measurement_bindings:
                raise GraphError(f"controller {name!r}: no measurement binding")

        # Every controller/selector output feeds exactly one consumer.
        consumer: Dict[str, str] = {}
        for s in self.selectors:
            for src in s.inputs:
                if src in self.constants:
                    continue
                if src in consumer:
                    raise GraphError(f"node {src!r} feeds more than one consumer")
                consumer[src] = s.label
        for mv, node in self.mv_bindings.items():
            if node in consumer:
                raise GraphError(f"node {node!r} feeds more than one consumer")
            consumer[node] = "mv:" + mv
        self.controller_mv: Dict[str, str] = {}
        for name in self.controllers:
            node = name
            while node in consumer and not consumer[node].startswith("mv:"):
                node = consumer[node]
            if node not in consumer:
                raise GraphError(f"controller {name!r} does not reach any MV")
            self.controller_mv[name] = consumer[node][3:]

        ident = {id(c): n for n, c in self.controllers.items()}
        for pair in self.split_parallel:
            low = ident.get(id(pair.controller_low))
            high = ident.get(id(pair.controller_high))
            if low is None or high is None:
                raise GraphError("split-parallel pair references a controller outside the graph")
            if self.controller_mv[low] == self.controller_mv[high]:
                raise GraphError(f"split-parallel {low}/{high} drive the same MV")

        self._plan = [
            (name, ctrl, self.measurement_bindings[name], self.controller_mv[name])
            for name, ctrl in self.controllers.items()
        ]
        self._sel_plan = [
            ((_FAST2 if len(s.inputs) == 2 else _FAST)[SelectorKind(s.kind)],
             itemgetter(*s.inputs), s.inputs, s.label)
            for s in self.selectors
        ]
        self._leaf0 = {n: n for n in list(self.constants) + list(self.controllers)}
        self._mv_plan = [
            (mv, node, *self.mv_limits[mv]) for mv, node in self.mv_bindings.items()
        ]

    def set_constant(self, name: str, value: float) -> None:
        if name not in self.constants:
            raise GraphError(f"unknown constant {name!r}")
        if not math.isfinite(value):
            raise ValueError(f"constant {name!r}: non-finite value {value!r}")
        self.constants[name] = float(value)

    def node_values(self, candidates: Mapping[str, float]) -> Tuple[Dict[str, float], Dict[str, str]]:
        """Evaluate selectors for given controller candidates (no state change).

        Returns ``({mv: value}, {mv: winning leaf})``.
        """
        values = dict(self.constants)
        for name in self.controllers:
            values[name] = candidates[name]
        return self._resolve(values, dict(self._leaf0))

    def _resolve(self, values, leaf):
        for pick, get, inputs, label in self._sel_plan:
            v, i = pick(get(values))
            values[label] = v
            leaf[label] = leaf[inputs[i]]
        mvs = {}
        winners = {}
        for mv, node, lo, hi in self._mv_plan:
            u = values[node]
            mvs[mv] = lo if u < lo else hi if u > hi else u
            winners[mv] = leaf[node]
        return mvs, winners

    def scan(self, measurements: Mapping[str, float], dt: float) -> Tuple[Dict[str, float], Dict[str, str]]:
        """One synchronous scan: propose all, select, commit all.

        ``measurements`` maps plant channels to (possibly delayed) values.
        Returns ``({mv: value}, {mv: winning leaf node})``.
        """
        if not dt > 0:
            raise ValueError(f"dt must be > 0, got {dt}")
        values = dict(self.constants)
        leaf = dict(self._leaf0)
        errors = []
        # Same arithmetic as PiController.propose/commit, inlined: this loop
        # runs once per controller per simulation step.
        for name, ctrl, channel, _ in self._plan:
            try:
                y = measurements[channel]
            except KeyError:
                raise GraphError(f"controller {name!r}: no measurement {channel!r}") from None
            if not isfinite(y):
                ctrl.propose(y)  # raises with the controller name
            e = ctrl.setpoint - y
            u = ctrl.kc * e + ctrl.integral
            ctrl.last_candidate = u
            errors.append(e)
            values[name] = ctrl.u_min if u < ctrl.u_min else ctrl.u_max if u > ctrl.u_max else u
        mvs, winners = self._resolve(values, leaf)
        self.last_values = values
        for (_, ctrl, _, mv), e in zip(self._plan, errors):
            di = ctrl.kc / ctrl.tau_i * e * dt
            if ctrl.tracking:
                di += (mvs[mv] - ctrl.last_candidate) * dt / ctrl.tau_t
            ctrl.integral += di
            ctrl._proposed = False
        return mvs, winners

    def initialize(self, measurements: Mapping[str, float], mv_values: Mapping[str, float]) -> None:
        """Put every controller in its steady tracking state for a held plant."""
        for name, ctrl, channel, mv in self._plan:
            ctrl.initialize(measurements[channel], mv_values[mv])

    def integrals(self) -> Dict[str, float]:
        return {n: c.integral for n, c in self.controllers.items()}


def evaluate_graph(
    graph: ControlGraph, measurements: Mapping[str, float], dt: float
) -> Tuple[Dict[str, float], Dict[str, str]]:
    return graph.scan(measurements, dt)
