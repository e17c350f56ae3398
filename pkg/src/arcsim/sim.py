"""
Fixed-step closed-loop simulation.

Scan order for every step of length ``dt``:

1. apply the disturbance profiles at time ``t``;
2. sample plant outputs and pass them through the measurement delay lines;
3. run one scan of the control graph (propose, select, commit);
4. hold the MVs and integrate the plant over ``[t, t + dt]``.

Runs are deterministic: the same scenario gives bit-identical results.
"""

from __future__ import annotations

import copy
import csv
import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .blocks import ControlGraph

SEGMENT_LENGTH = 4000.0
TERMINAL_WINDOW = 1000.0
# Outdoor temperature staircase: 0 -> -40 -> 15 -> 0 in 18 segments.
COW_STAIRCASE = (0.0, -2.5, -5.0, -10.0, -20.0, -30.0, -40.0, -30.0, -20.0,
                 -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 10.0, 5.0, 0.0)


class SimulationError(RuntimeError):
    pass


class DelayLine:
    """Pure transport delay of ``n`` samples.

    Before ``n`` samples have been pushed the output is ``fill``; after
    that ``push`` returns the value pushed ``n`` calls earlier.
    """

    def __init__(self, n: int, fill: float) -> None:
        if n < 0:
            raise ValueError("delay must be >= 0 samples")
        self.n = n
        self._buf = deque([fill] * n)

    def push(self, value: float) -> float:
        if not self.n:
            return value
        self._buf.append(value)
        return self._buf.popleft()

    @classmethod
    def for_delay(cls, delay: float, dt: float, fill: float) -> "DelayLine":
        n = round(delay / dt)
        if delay < 0 or not math.isclose(n * dt, delay, rel_tol=1e-9, abs_tol=1e-9):
            raise ValueError(f"delay {delay} s is not a non-negative multiple of dt={dt}")
        return cls(n, fill)


@dataclass
class Profile:
    """Piecewise-constant signal: ``values[i]`` holds from ``breakpoints[i]``."""

    variable: str
    breakpoints: List[float]
    values: List[float]

    def __post_init__(self) -> None:
        if not self.values or len(self.values) != len(self.breakpoints):
            raise ValueError(f"profile {self.variable!r}: need one value per breakpoint")
        if any(a >= b for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValueError(f"profile {self.variable!r}: breakpoints must be strictly increasing")
        self.breakpoints = [float(b) for b in self.breakpoints]
        self.values = [float(v) for v in self.values]

    def value_at(self, t: float) -> float:
        i = np.searchsorted(self.breakpoints, t, side="right") - 1
        return self.values[max(int(i), 0)]


def staircase_profile(levels: Sequence[float], segment: float = SEGMENT_LENGTH,
                      variable: str = "t_out") -> Profile:
    """One level per ``segment`` seconds, starting at t = 0."""
    if not len(levels):
        raise ValueError("staircase needs at least one level")
    return Profile(variable, [i * segment for i in range(len(levels))], list(levels))


def ramp_profile(variable: str, points: Sequence[Tuple[float, float]], step: float = 10.0) -> Profile:
    """Piecewise-linear ``(t, value)`` points sampled every ``step`` seconds.

    Holds the first value from t = 0 and the last value after the last point.
    """
    pts = sorted((float(t), float(v)) for t, v in points)
    if not pts or step <= 0:
        raise ValueError("ramp needs at least one point and step > 0")
    bps, vals = [0.0], [pts[0][1]]
    for (t0, v0), (t1, v1) in zip(pts, pts[1:]):
        n = max(int(math.ceil((t1 - t0) / step)), 1)
        for i in range(1, n + 1):
            t = min(t0 + i * step, t1) if i < n else t1
            v = v0 + (v1 - v0) * (t - t0) / (t1 - t0) if t1 > t0 else v1
            if t <= bps[-1]:
                vals[-1] = v
            elif v != vals[-1]:
                bps.append(t)
                vals.append(v)
    return Profile(variable, bps, vals)


def cow_staircase(segment: float = SEGMENT_LENGTH) -> Profile:
    return staircase_profile(COW_STAIRCASE, segment)


@dataclass
class Scenario:
    """Everything one closed-loop run needs.

    ``graph`` is copied at the start of a run, so a scenario can be run
    repeatedly. ``initial_mv`` / ``initial_state`` override the plant's
    own initial operating point.
    """

    plant: object
    graph: ControlGraph
    disturbances: List[Profile] = field(default_factory=list)
    delays: Dict[str, float] = field(default_factory=dict)
    dt: float = 1.0
    t_end: float = 0.0
    log_interval: float = 10.0
    integrator: str = "euler"
    initial_mv: Optional[Dict[str, float]] = None
    initial_state: Optional[List[float]] = None
    name: str = "scenario"

    def validate(self) -> None:
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if self.integrator not in ("euler", "rk4"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        known = set(self.plant.disturbance_names) | set(self.graph.constants)
        for p in self.disturbances:
            if p.variable not in known:
                raise ValueError(f"profile for unknown variable {p.variable!r}")
        for ch, delay in self.delays.items():
            if ch not in self.plant.output_names:
                raise ValueError(f"delay on unknown channel {ch!r}")
            DelayLine.for_delay(delay, self.dt, 0.0)
        ratio = self.log_interval / self.dt
        if self.log_interval <= 0 or abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("log_interval must be a positive multiple of dt")


@dataclass(frozen=True)
class Event:
    t: float
    mv: str
    winner: str
    previous: Optional[str] = None
    u_before: float = math.nan
    u_after: float = math.nan
    candidate_jump: float = math.nan  # largest one-step change of old/new winner


@dataclass
class SegmentStats:
    t_start: float
    t_end: float
    disturbances: Dict[str, float]
    mean: Dict[str, float]
    ptp: Dict[str, float]
    active: Dict[str, str]

    @property
    def active_pair(self) -> frozenset:
        return frozenset(self.active.values())


@dataclass
class RunResult:
    columns: Dict[str, np.ndarray]
    events: List[Event]
    winners: Dict[str, List[str]]
    labels: Dict[str, List[str]]
    breakpoints: List[float]
    dt: float
    name: str = "scenario"

    @property
    def t(self) -> np.ndarray:
        return self.columns["t"]

    def __getitem__(self, channel: str) -> np.ndarray:
        return self.columns[channel]

    def segments(self, window: float = TERMINAL_WINDOW) -> List[SegmentStats]:
        """Terminal statistics of every constant-disturbance hold.

        Holds shorter than ``window`` (e.g. the small steps of a ramp) are
        skipped; statistics cover the final ``window`` seconds of each hold.
        """
        t = self.t
        if len(t) == 0:
            return []
        end = float(t[-1])
        points = sorted({0.0, end, *(b for b in self.breakpoints if 0 < b < end)})
        out = []
        for a, b in zip(points, points[1:] or [end]):
            if b - a < window and not (a == 0.0 and b == end):
                continue
            upto = t <= b if b == end else t < b
            last = np.nonzero(upto)[0][-1]
            sel = (t >= max(a, b - window)) & upto
            mean = {k: float(np.mean(v[sel])) for k, v in self.columns.items() if k != "t"}
            ptp = {k: float(np.ptp(v[sel])) for k, v in self.columns.items() if k != "t"}
            dist = {k: float(self.columns[k][last]) for k in self.disturbance_channels}
            active = {mv: labels[last] for mv, labels in self.labels.items()}
            out.append(SegmentStats(a, b, dist, mean, ptp, active))
        return out

    disturbance_channels: Tuple[str, ...] = ()

    def write_csv(self, path, channels: Optional[Sequence[str]] = None) -> None:
        channels = list(channels or [k for k in self.columns if k != "t"])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", *channels])
            cols = [self.columns["t"]] + [self.columns[c] for c in channels]
            for row in zip(*cols):
                w.writerow([_fmt(v) for v in row])

    def write_events(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "mv", "winner"])
            for e in self.events:
                w.writerow([_fmt(e.t), e.mv, e.winner])


def _fmt(v: float) -> str:
    return f"{v:.10g}"


def _label(graph: ControlGraph, plant, mv: str, winner: str, u: float) -> str:
    """Name the constraint that sets ``mv``: a limit, a desired input, or a CV setpoint."""
    lo, hi = graph.mv_limits[mv]
    if winner in graph.controllers:
        if u <= lo:
            return f"{mv}={lo:g}"
        if u >= hi:
            return f"{mv}={hi:g}"
        ctrl = graph.controllers[winner]
        cv = graph.measurement_bindings[winner]
        return f"{plant.short_names.get(cv, cv)}={ctrl.setpoint:g}"
    return f"{mv}={u:g}"


def _rk4(f, x, h):
    k1 = f(x)
    k2 = f([a + 0.5 * h * b for a, b in zip(x, k1)])
    k3 = f([a + 0.5 * h * b for a, b in zip(x, k2)])
    k4 = f([a + h * b for a, b in zip(x, k3)])
    return [a + h / 6.0 * (b + 2 * c + 2 * d + e) for a, b, c, d, e in zip(x, k1, k2, k3, k4)]


def step(plant, x: List[float], graph: ControlGraph, measurements: Mapping[str, float],
         d: Mapping[str, float], dt: float, integrator: str = "euler"):
    """One scan plus one integration step.

    Returns ``(x_next, mv, winners)``.
    """
    mv, winners = graph.scan(measurements, dt)
    if integrator == "euler":
        f = plant.derivatives(x, mv, d)
        x_next = [a + dt * b for a, b in zip(x, f)]
    else:
        x_next = _rk4(lambda z: plant.derivatives(z, mv, d), x, dt)
    return plant.project(x_next), mv, winners


def run(scenario: Scenario) -> RunResult:
    """Simulate ``scenario`` from ``t = 0`` to ``t_end``."""
    scenario.validate()
    sc = scenario
    plant = sc.plant
    graph = copy.deepcopy(sc.graph)
    dt = sc.dt
    n_steps = int(round(sc.t_end / dt))
    log_every = int(round(sc.log_interval / dt))

    d = dict(plant.default_disturbances())
    plant_profiles = [p for p in sc.disturbances if p.variable in plant.disturbance_names]
    const_profiles = [p for p in sc.disturbances if p.variable not in plant.disturbance_names]
    for p in plant_profiles:
        d[p.variable] = p.value_at(0.0)
    for p in const_profiles:
        graph.set_constant(p.variable, p.value_at(0.0))

    if sc.initial_mv is not None:
        mv = dict(sc.initial_mv)
        x = list(sc.initial_state) if sc.initial_state is not None else plant.steady_state(mv, d)
    else:
        x, mv = plant.initial_operating_point(graph, d)
        if sc.initial_state is not None:
            x = list(sc.initial_state)
    y = plant.outputs(x, mv, d)
    graph.initialize(y, mv)
    delays = {ch: DelayLine.for_delay(v, dt, y[ch]) for ch, v in sc.delays.items() if v > 0}

    # Breakpoint schedule: (step index, profile) pairs, applied in order.
    changes: List[Tuple[int, Profile, float]] = []
    for p in sc.disturbances:
        for b, v in zip(p.breakpoints[1:], p.values[1:]):
            changes.append((int(round(b / dt)), p, v))
    changes.sort(key=lambda c: c[0])
    ci = 0

    out_names = list(plant.output_names)
    mv_names = list(graph.mv_bindings)
    dist_names = list(plant.disturbance_names) + [p.variable for p in const_profiles]
    channels = out_names + mv_names + dist_names
    rows: List[List[float]] = []
    times: List[float] = []
    winners_log: Dict[str, List[str]] = {m: [] for m in mv_names}
    labels_log: Dict[str, List[str]] = {m: [] for m in mv_names}
    events: List[Event] = []
    prev_w: Dict[str, str] = {}
    prev_u: Dict[str, float] = {}
    prev_vals: Dict[str, float] = {}
    euler = sc.integrator == "euler"
    derivatives = plant.derivatives
    project = plant.project

    for k in range(n_steps + 1):
        t = k * dt
        while ci < len(changes) and changes[ci][0] <= k:
            _, p, v = changes[ci]
            if p.variable in d:
                d[p.variable] = v
            else:
                graph.set_constant(p.variable, v)
            ci += 1
        y = plant.outputs(x, mv, d)
        meas = y
        if delays:
            meas = dict(y)
            for ch, line in delays.items():
                meas[ch] = line.push(y[ch])
        mv, winners = graph.scan(meas, dt)
        vals = graph.last_values
        if winners != prev_w:
            for m in mv_names:
                w = winners[m]
                if prev_w.get(m) != w:
                    old = prev_w.get(m)
                    jump = 0.0
                    if old is not None:
                        jump = max(abs(vals[w] - prev_vals[w]), abs(vals[old] - prev_vals[old]))
                    events.append(Event(t, m, w, old, prev_u.get(m, math.nan), mv[m], jump))
                    prev_w[m] = w
        prev_u = mv
        prev_vals = vals
        if k % log_every == 0 or k == n_steps:
            times.append(t)
            rows.append([y[c] for c in out_names] + [mv[m] for m in mv_names]
                        + [d[c] if c in d else graph.constants[c] for c in dist_names])
            for m in mv_names:
                winners_log[m].append(winners[m])
                labels_log[m].append(_label(graph, plant, m, winners[m], mv[m]))
        if k == n_steps:
            break
        if euler:
            f = derivatives(x, mv, d)
            x = project([a + dt * b for a, b in zip(x, f)])
        else:
            x = project(_rk4(lambda z: derivatives(z, mv, d), x, dt))
        if not math.isfinite(sum(x)):  # any nan/inf component propagates
            raise SimulationError(f"{sc.name}: non-finite plant state {x} at t={t + dt:g}")

    data = np.array(rows, dtype=float).reshape(len(rows), len(channels))
    columns = {"t": np.array(times)}
    for i, c in enumerate(channels):
        columns[c] = data[:, i]
    breakpoints = sorted({b for p in sc.disturbances for b in p.breakpoints[1:]})
    result = RunResult(columns, events, winners_log, labels_log, breakpoints, dt, sc.name)
    result.disturbance_channels = tuple(dist_names)
    return result


def run_batch(scenarios: Iterable[Scenario], jobs: int = 1) -> List[RunResult]:
    """Run independent scenarios, in parallel when ``jobs > 1``."""
    scenarios = list(scenarios)
    if jobs <= 1 or len(scenarios) <= 1:
        return [run(s) for s in scenarios]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run, scenarios))
