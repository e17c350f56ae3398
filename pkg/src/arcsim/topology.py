"""
Flowsheet / control-structure descriptions and their rule checker.

A flowsheet file is YAML with these top-level keys::

    name: fig3
    units:        [{name, kind}]            # source | sink | vessel | splitter | junction
    streams:      [{name, from, to, element?, element_kind?}]
    external_mvs: [name, ...]               # MVs not sitting on a stream (heater, ...)
    loops:        [{name, cv, mv, gain, bound?, setpoint?, priority?,
                    kc?, tau_i?, tau_t?, desired?, radiation_exception?}]
    selectors:    [{mv, nominal?, stages: [{kind, inputs: [...]}]}]
    manual:       {mv: {constant: value}}   # MVs set directly by an operator
    split_parallel: [{low, high, delta}]
    tpm:          <element> | auto

A CV is written ``<place>.<quantity>``. ``level`` and ``pressure`` of a
vessel are inventories; ``pressure`` of a source or sink is a boundary
pressure; ``flow`` of a stream is a flow. Anything else is a quality.

Selector stages list loop names and desired inputs. A desired input is
either a bare number or a one-key mapping ``{name: value}``. Every stage
after the first also takes the output of the previous stage.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx
import yaml

UNIT_KINDS = ("source", "sink", "vessel", "splitter", "junction")
INVENTORY_QUANTITIES = ("level", "pressure")
RULES = ("C1", "C2", "C3", "C4", "S1", "S2", "S3")


class FlowsheetParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class Unit:
    name: str
    kind: str


@dataclass(frozen=True)
class Stream:
    name: str
    source: str
    dest: str
    element: Optional[str] = None
    element_kind: Optional[str] = None


@dataclass(frozen=True)
class Loop:
    name: str
    cv: str
    mv: str
    gain: int
    bound: Optional[str] = None
    setpoint: Optional[float] = None
    priority: int = 0
    kc: Optional[float] = None
    tau_i: Optional[float] = None
    tau_t: Optional[float] = None
    desired: bool = False
    radiation_exception: bool = False

    @property
    def place(self) -> str:
        return self.cv.rsplit(".", 1)[0]

    @property
    def quantity(self) -> str:
        return self.cv.rsplit(".", 1)[1]


@dataclass(frozen=True)
class Desired:
    """A desired-input constant fed to a selector."""

    name: str
    value: float


@dataclass(frozen=True)
class Stage:
    kind: str
    inputs: Tuple[Union[str, Desired], ...]


@dataclass(frozen=True)
class SelectorChain:
    mv: str
    stages: Tuple[Stage, ...]
    nominal: Optional[float] = None

    def loops(self) -> List[str]:
        return [i for st in self.stages for i in st.inputs if isinstance(i, str)]

    def desired(self) -> List[Desired]:
        return [i for st in self.stages for i in st.inputs if isinstance(i, Desired)]


@dataclass(frozen=True)
class SplitParallel:
    low: str
    high: str
    delta: float


@dataclass(frozen=True)
class FlowsheetSpec:
    name: str
    units: Tuple[Unit, ...]
    streams: Tuple[Stream, ...]
    loops: Tuple[Loop, ...] = ()
    selectors: Tuple[SelectorChain, ...] = ()
    manual: Tuple[Tuple[str, Desired], ...] = ()
    split_parallel: Tuple[SplitParallel, ...] = ()
    external_mvs: Tuple[str, ...] = ()
    tpm: Optional[str] = None
    description: str = ""

    # -- lookups -----------------------------------------------------------
    def unit(self, name: str) -> Unit:
        return next(u for u in self.units if u.name == name)

    def loop(self, name: str) -> Loop:
        return next(lp for lp in self.loops if lp.name == name)

    def chain(self, mv: str) -> Optional[SelectorChain]:
        return next((c for c in self.selectors if c.mv == mv), None)

    def element_stream(self, element: str) -> Optional[Stream]:
        return next((s for s in self.streams if s.element == element), None)

    @property
    def elements(self) -> List[str]:
        return [s.element for s in self.streams if s.element]

    @property
    def inventories(self) -> List[Tuple[str, str, List[str]]]:
        """``(unit, quantity, loops)`` for every controlled vessel inventory."""
        out: Dict[Tuple[str, str], List[str]] = {}
        for lp in self.loops:
            if self.is_inventory_loop(lp):
                out.setdefault((lp.place, lp.quantity), []).append(lp.name)
        return [(u, q, names) for (u, q), names in out.items()]

    def is_inventory_loop(self, lp: Loop) -> bool:
        kinds = {u.name: u.kind for u in self.units}
        return lp.quantity in INVENTORY_QUANTITIES and kinds.get(lp.place) in ("vessel", "splitter", "junction")

    def is_boundary_pressure(self, lp: Loop) -> bool:
        kinds = {u.name: u.kind for u in self.units}
        return lp.quantity == "pressure" and kinds.get(lp.place) in ("source", "sink")

    def tpm_locations(self) -> List[str]:
        """Declared TPM, or every MV whose selector chain takes a desired input."""
        if self.tpm == "auto":
            return [c.mv for c in self.selectors if c.desired() and self.element_stream(c.mv)]
        return [self.tpm] if self.tpm else []

    def graph(self) -> nx.MultiDiGraph:
        g = nx.MultiDiGraph()
        g.add_nodes_from(u.name for u in self.units)
        for s in self.streams:
            g.add_edge(s.source, s.dest, key=s.name, element=s.element)
        return g


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _mark(node: yaml.Node, path: Sequence[Union[str, int]]) -> Tuple[int, int]:
    for key in path:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == key:
                    nxt = v
                    break
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            nxt = node.value[key]
        else:
            nxt = None
        if nxt is None:
            break
        node = nxt
    return node.start_mark.line + 1, node.start_mark.column + 1


class _Reader:
    def __init__(self, root: yaml.Node):
        self.root = root

    def fail(self, message: str, *path) -> FlowsheetParseError:
        line, col = _mark(self.root, path)
        return FlowsheetParseError(message, line, col)


def _desired(item, mv: str, n: int) -> Desired:
    if isinstance(item, dict):
        ((k, v),) = item.items()
        return Desired(str(k), float(v))
    return Desired(f"{mv}_0" if n == 0 else f"{mv}_{n}", float(item))


def parse_flowsheet(text: str) -> FlowsheetSpec:
    """Parse flowsheet YAML text; errors carry line/column."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise FlowsheetParseError(
            f"syntax error: {getattr(exc, 'problem', exc)}",
            mark.line + 1 if mark else None,
            mark.column + 1 if mark else None,
        ) from None
    if root is None:
        raise FlowsheetParseError("no units", 1, 1)
    data = yaml.SafeLoader(text).get_single_data()
    r = _Reader(root)
    if not isinstance(data, dict):
        raise r.fail("top level must be a mapping")
    try:
        return _build(data, r)
    except FlowsheetParseError:
        raise
    except (TypeError, ValueError, KeyError, AttributeError) as exc:
        raise r.fail(f"malformed flowsheet: {exc}") from None


def _build(data: dict, r: _Reader) -> FlowsheetSpec:
    raw_units = data.get("units") or []
    if not raw_units:
        raise r.fail("no units", "units")
    units = []
    for i, u in enumerate(raw_units):
        if not isinstance(u, dict) or "name" not in u or "kind" not in u:
            raise r.fail("unit needs name and kind", "units", i)
        if u["kind"] not in UNIT_KINDS:
            raise r.fail(f"unknown unit kind {u['kind']!r}", "units", i, "kind")
        units.append(Unit(str(u["name"]), u["kind"]))
    _unique([u.name for u in units], r, "units")
    unit_names = {u.name for u in units}

    streams = []
    for i, s in enumerate(data.get("streams") or []):
        for end in ("name", "from", "to"):
            if end not in s:
                raise r.fail(f"stream needs {end!r}", "streams", i)
        for end in ("from", "to"):
            if s[end] not in unit_names:
                raise r.fail(f"stream {s['name']!r}: dangling reference {s[end]!r}", "streams", i, end)
        streams.append(Stream(str(s["name"]), s["from"], s["to"], s.get("element"), s.get("element_kind")))
    _unique([s.name for s in streams], r, "streams")
    externals = tuple(str(x) for x in data.get("external_mvs") or [])
    mvs = [s.element for s in streams if s.element] + list(externals)
    _unique(mvs, r, "streams")
    places = unit_names | {s.name for s in streams}

    loops = []
    for i, lp in enumerate(data.get("loops") or []):
        for key in ("name", "cv", "mv", "gain"):
            if key not in lp:
                raise r.fail(f"loop needs {key!r}", "loops", i)
        cv = str(lp["cv"])
        if "." not in cv or cv.rsplit(".", 1)[0] not in places:
            raise r.fail(f"loop {lp['name']!r}: unknown CV place in {cv!r}", "loops", i, "cv")
        if lp["mv"] not in mvs:
            raise r.fail(f"loop {lp['name']!r}: dangling MV {lp['mv']!r}", "loops", i, "mv")
        if lp.get("bound") not in (None, "upper", "lower"):
            raise r.fail(f"loop {lp['name']!r}: bound must be upper or lower", "loops", i, "bound")
        gain = lp["gain"]
        if gain not in (1, -1):
            raise r.fail(f"loop {lp['name']!r}: gain must be +1 or -1", "loops", i, "gain")
        loops.append(
            Loop(
                name=str(lp["name"]),
                cv=cv,
                mv=lp["mv"],
                gain=int(gain),
                bound=lp.get("bound"),
                setpoint=_opt_float(lp.get("setpoint")),
                priority=int(lp.get("priority", 0)),
                kc=_opt_float(lp.get("kc")),
                tau_i=_opt_float(lp.get("tau_i")),
                tau_t=_opt_float(lp.get("tau_t")),
                desired=bool(lp.get("desired", False)),
                radiation_exception=bool(lp.get("radiation_exception", False)),
            )
        )
    loop_names = [lp.name for lp in loops]
    _unique(loop_names, r, "loops")

    chains = []
    for i, ch in enumerate(data.get("selectors") or []):
        mv = ch.get("mv")
        if mv not in mvs:
            raise r.fail(f"selector chain on unknown MV {mv!r}", "selectors", i, "mv")
        stages = []
        n_const = 0
        for j, st in enumerate(ch.get("stages") or []):
            kind = str(st.get("kind", "")).upper()
            if kind not in ("MIN", "MAX", "MID"):
                raise r.fail(f"unknown selector kind {st.get('kind')!r}", "selectors", i, "stages", j, "kind")
            inputs: List[Union[str, Desired]] = []
            for k, item in enumerate(st.get("inputs") or []):
                if isinstance(item, str):
                    if item not in loop_names:
                        raise r.fail(f"selector input {item!r} is not a loop", "selectors", i, "stages", j, "inputs", k)
                    if next(lp for lp in loops if lp.name == item).mv != mv:
                        raise r.fail(f"loop {item!r} feeds chain on {mv!r} but declares another MV",
                                     "selectors", i, "stages", j, "inputs", k)
                    inputs.append(item)
                else:
                    inputs.append(_desired(item, mv, n_const))
                    n_const += 1
            n_in = len(inputs) + (1 if j > 0 else 0)
            if n_in < 1 or (j > 0 and n_in < 2) or (kind == "MID" and n_in != 3):
                raise r.fail(f"stage {j} of chain on {mv!r} has a wrong number of inputs",
                             "selectors", i, "stages", j)
            stages.append(Stage(kind, tuple(inputs)))
        if not stages:
            raise r.fail(f"selector chain on {mv!r} has no stages", "selectors", i)
        chains.append(SelectorChain(mv, tuple(stages), _opt_float(ch.get("nominal"))))
    _unique([c.mv for c in chains], r, "selectors")

    manual = []
    for mv, const in (data.get("manual") or {}).items():
        if mv not in mvs:
            raise r.fail(f"manual entry for unknown MV {mv!r}", "manual", mv)
        manual.append((mv, _desired(const, mv, 0)))

    pairs = []
    for i, sp in enumerate(data.get("split_parallel") or []):
        for key in ("low", "high"):
            if sp.get(key) not in loop_names:
                raise r.fail(f"split-parallel {key} {sp.get(key)!r} is not a loop", "split_parallel", i, key)
        pairs.append(SplitParallel(sp["low"], sp["high"], float(sp.get("delta", 0.0))))

    tpm = data.get("tpm")
    if tpm is not None and tpm != "auto" and tpm not in [s.element for s in streams if s.element]:
        raise r.fail(f"TPM {tpm!r} is not a stream element", "tpm")

    spec = FlowsheetSpec(
        name=str(data.get("name", "")),
        units=tuple(units),
        streams=tuple(streams),
        loops=tuple(loops),
        selectors=tuple(chains),
        manual=tuple(manual),
        split_parallel=tuple(pairs),
        external_mvs=externals,
        tpm=tpm,
        description=str(data.get("description", "")).strip(),
    )
    if streams and not nx.is_weakly_connected(spec.graph()):
        raise r.fail("flowsheet graph is not connected", "streams")
    return spec


def _opt_float(v) -> Optional[float]:
    return None if v is None else float(v)


def _unique(names: List[str], r: _Reader, section: str) -> None:
    seen = set()
    for i, n in enumerate(names):
        if n in seen:
            raise r.fail(f"duplicate name {n!r}", section, i)
        seen.add(n)


def load_flowsheet(path) -> FlowsheetSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_flowsheet(fh.read())


def to_data(spec: FlowsheetSpec) -> dict:
    """Plain-data form of ``spec`` (inverse of parsing)."""

    def const(d: Desired):
        return {d.name: d.value}

    def loop(lp: Loop):
        out = {"name": lp.name, "cv": lp.cv, "mv": lp.mv, "gain": lp.gain}
        for key in ("bound", "setpoint", "kc", "tau_i", "tau_t"):
            if getattr(lp, key) is not None:
                out[key] = getattr(lp, key)
        if lp.priority:
            out["priority"] = lp.priority
        if lp.desired:
            out["desired"] = True
        if lp.radiation_exception:
            out["radiation_exception"] = True
        return out

    data = {"name": spec.name}
    if spec.description:
        data["description"] = spec.description
    data["units"] = [{"name": u.name, "kind": u.kind} for u in spec.units]
    streams = []
    for s in spec.streams:
        d = {"name": s.name, "from": s.source, "to": s.dest}
        if s.element:
            d["element"] = s.element
        if s.element_kind:
            d["element_kind"] = s.element_kind
        streams.append(d)
    data["streams"] = streams
    if spec.external_mvs:
        data["external_mvs"] = list(spec.external_mvs)
    data["loops"] = [loop(lp) for lp in spec.loops]
    if spec.selectors:
        data["selectors"] = [
            {
                "mv": c.mv,
                **({"nominal": c.nominal} if c.nominal is not None else {}),
                "stages": [
                    {"kind": st.kind, "inputs": [i if isinstance(i, str) else const(i) for i in st.inputs]}
                    for st in c.stages
                ],
            }
            for c in spec.selectors
        ]
    if spec.manual:
        data["manual"] = {mv: const(d) for mv, d in spec.manual}
    if spec.split_parallel:
        data["split_parallel"] = [dataclasses.asdict(p) for p in spec.split_parallel]
    if spec.tpm is not None:
        data["tpm"] = spec.tpm
    return data


def serialize_flowsheet(spec: FlowsheetSpec) -> str:
    return yaml.safe_dump(to_data(spec), sort_keys=False, default_flow_style=None)


# ---------------------------------------------------------------------------
# Rules
# ---------------------------------------------------------------------------


class Severity(str, enum.Enum):
    PASS = "pass"
    WARNING = "warning"
    VIOLATION = "violation"


@dataclass
class RuleReport:
    rule: str
    severity: Severity
    locus: Tuple[str, ...] = ()
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.severity is not Severity.VIOLATION


def _report(rule: str, findings: List[Tuple[Severity, Iterable[str], str]], ok_message: str) -> RuleReport:
    bad = [f for f in findings if f[0] is not Severity.PASS]
    if not bad:
        notes = [m for _, _, m in findings if m]
        return RuleReport(rule, Severity.PASS, (), "; ".join(notes) or ok_message)
    worst = Severity.VIOLATION if any(f[0] is Severity.VIOLATION for f in bad) else Severity.WARNING
    locus: List[str] = []
    for _, names, _ in bad:
        locus.extend(n for n in names if n not in locus)
    return RuleReport(rule, worst, tuple(locus), "; ".join(m for _, _, m in bad))


def _flow_classes(spec: FlowsheetSpec) -> Dict[str, int]:
    """Streams joined through hold-up-free junctions carry the same flow."""
    parent = {s.name: s.name for s in spec.streams}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u in spec.units:
        if u.kind != "junction":
            continue
        ins = [s.name for s in spec.streams if s.dest == u.name]
        outs = [s.name for s in spec.streams if s.source == u.name]
        if len(ins) == 1 and len(outs) == 1:
            parent[find(ins[0])] = find(outs[0])
    roots = {}
    return {s.name: roots.setdefault(find(s.name), len(roots)) for s in spec.streams}


def check_c1(spec: FlowsheetSpec) -> RuleReport:
    """No flow may be set twice."""
    findings = []
    drivers: Dict[str, List[str]] = {}
    for lp in spec.loops:
        drivers.setdefault(lp.mv, []).append(lp.name)
    manual = {mv for mv, _ in spec.manual}
    for mv, names in drivers.items():
        chain = spec.chain(mv)
        in_chain = set(chain.loops()) if chain else set()
        loose = [n for n in names if n not in in_chain]
        if mv in manual:
            loose.append(f"manual:{mv}")
        if loose and (in_chain or len(loose) > 1):
            findings.append((Severity.VIOLATION, names, f"{mv} is set by {', '.join(names)} without a selector"))
    classes = _flow_classes(spec)
    setters: Dict[int, List[str]] = {}
    tpm = spec.tpm if spec.tpm != "auto" else None
    for s in spec.streams:
        e = s.element
        if e and (e in drivers or spec.chain(e) or e in manual or e == tpm):
            setters.setdefault(classes[s.name], []).append(e)
    for elems in setters.values():
        if len(elems) > 1:
            findings.append((Severity.VIOLATION, elems, f"one flow is set by {', '.join(elems)}"))
    return _report("C1", findings, "every flow is set at most once")


def _same_path(g: nx.MultiDiGraph, a: Stream, b: Stream) -> bool:
    if a.name == b.name:
        return True
    return (a.dest == b.source or nx.has_path(g, a.dest, b.source)
            or b.dest == a.source or nx.has_path(g, b.dest, a.source))


def check_c2(spec: FlowsheetSpec) -> RuleReport:
    """Boundary pressure control makes its MV a TPM."""
    findings = []
    g = spec.graph()
    locations = spec.tpm_locations()
    for lp in spec.loops:
        if not spec.is_boundary_pressure(lp):
            continue
        s = spec.element_stream(lp.mv)
        if s is None:
            findings.append((Severity.PASS, (), f"{lp.name} acts on external MV {lp.mv}"))
            continue
        if lp.mv in locations:
            what = "a TPM candidate" if spec.tpm == "auto" else "the TPM"
            findings.append((Severity.PASS, (), f"{lp.name}: TPM remains at {lp.mv} ({what})"))
            continue
        clash = [t for t in locations if _same_path(g, s, spec.element_stream(t))]
        if clash:
            findings.append((Severity.VIOLATION, (lp.name, lp.mv, *clash),
                             f"{lp.name} controls boundary pressure {lp.cv} and so makes {lp.mv} a TPM, "
                             f"but {', '.join(clash)} already sets throughput on the same path"))
        else:
            findings.append((Severity.PASS, (), f"{lp.name}: {lp.mv} is an implicit TPM on a separate path"))
    return _report("C2", findings, "no boundary pressure loops")


def _upstream(g, spec: FlowsheetSpec, t: Stream, unit: str) -> bool:
    return t.dest == unit or nx.has_path(g, t.dest, unit)


def _downstream(g, spec: FlowsheetSpec, t: Stream, unit: str) -> bool:
    return t.source == unit or nx.has_path(g, unit, t.source)


def check_radiation(spec: FlowsheetSpec) -> RuleReport:
    """Local inventory loops must radiate around the TPM."""
    findings = []
    g = spec.graph()
    locations = [spec.element_stream(t) for t in spec.tpm_locations()]
    for lp in spec.loops:
        if not spec.is_inventory_loop(lp):
            continue
        s = spec.element_stream(lp.mv)
        if s is None or lp.place not in (s.source, s.dest):
            continue
        others = [t for t in locations if t.name != s.name]
        if s.source == lp.place:
            ok = any(_upstream(g, spec, t, lp.place) for t in others)
            how = "in the direction of flow, but no TPM is upstream"
        else:
            ok = any(_downstream(g, spec, t, lp.place) for t in others)
            how = "against the direction of flow, but no TPM is downstream"
        if not ok:
            sev = Severity.WARNING if lp.radiation_exception else Severity.VIOLATION
            findings.append((sev, (lp.name,), f"{lp.name} ({lp.cv} -> {lp.mv}) acts {how}"))
    return _report("C3", findings, "inventory loops radiate around the TPM")


def check_c4(spec: FlowsheetSpec) -> RuleReport:
    """No inventory loop may cross the TPM."""
    findings = []
    ug = nx.Graph()
    ug.add_nodes_from(u.name for u in spec.units)
    edge_streams: Dict[frozenset, List[Stream]] = {}
    for s in spec.streams:
        ug.add_edge(s.source, s.dest)
        edge_streams.setdefault(frozenset((s.source, s.dest)), []).append(s)
    tpm_streams = {spec.element_stream(t).name for t in spec.tpm_locations()}
    for lp in spec.loops:
        if not spec.is_inventory_loop(lp):
            continue
        s = spec.element_stream(lp.mv)
        if s is None:
            continue
        paths = [nx.shortest_path(ug, lp.place, end) for end in (s.source, s.dest)]
        path = min(paths, key=len)
        crossed = []
        for a, b in zip(path, path[1:]):
            for st in edge_streams[frozenset((a, b))]:
                if st.name != s.name and st.name in tpm_streams:
                    crossed.append(st.element)
        if crossed:
            findings.append((Severity.VIOLATION, (lp.name, *crossed),
                             f"{lp.name} ({lp.cv} -> {lp.mv}) crosses the TPM at {', '.join(crossed)}"))
    return _report("C4", findings, "no inventory loop crosses the TPM")


def infer_selector_kind(bound: str, gain_sign: float) -> str:
    """MAX for a constraint satisfied by a large input, else MIN."""
    if bound not in ("upper", "lower"):
        raise ValueError(f"bound must be 'upper' or 'lower', got {bound!r}")
    if gain_sign == 0:
        raise ValueError("gain sign must be nonzero")
    large_u = (bound == "upper") == (gain_sign < 0)
    return "MAX" if large_u else "MIN"


def check_s1(spec: FlowsheetSpec) -> RuleReport:
    findings = []
    for chain in spec.selectors:
        for j, st in enumerate(chain.stages):
            if st.kind == "MID":
                continue
            for name in st.inputs:
                if not isinstance(name, str):
                    continue
                lp = spec.loop(name)
                if lp.bound is None:
                    continue
                want = infer_selector_kind(lp.bound, lp.gain)
                if want != st.kind:
                    findings.append((Severity.VIOLATION, (name, f"{chain.mv}.{j + 1}"),
                                     f"{name} ({lp.bound} bound on {lp.cv}) needs a {want}-selector "
                                     f"but sits in a {st.kind}-selector on {chain.mv}"))
    return _report("S1", findings, "selector kinds match constraint directions")


def _stage_priority(spec: FlowsheetSpec, st: Stage) -> Optional[int]:
    prios = [spec.loop(i).priority for i in st.inputs if isinstance(i, str) and spec.loop(i).bound]
    return max(prios) if prios else None


def check_s2(spec: FlowsheetSpec) -> RuleReport:
    findings = []
    for chain in spec.selectors:
        kinds = {st.kind for st in chain.stages}
        if not {"MIN", "MAX"} <= kinds:
            continue
        best: Optional[Tuple[int, int]] = None
        for j, st in enumerate(chain.stages):
            p = _stage_priority(spec, st)
            if p is None:
                continue
            if best is not None and p < best[0]:
                hi = chain.stages[best[1]]
                names = [i for i in hi.inputs if isinstance(i, str)] + [i for i in st.inputs if isinstance(i, str)]
                findings.append((Severity.VIOLATION, tuple(names),
                                 f"on {chain.mv}, stage {j + 1} ({st.kind}, priority {p}) comes after "
                                 f"stage {best[1] + 1} ({hi.kind}, priority {best[0]}); "
                                 f"higher-priority selectors belong at the end"))
            if best is None or p >= best[0]:
                best = (p, j)
    return _report("S2", findings, "selector priorities increase towards the MV")


def check_s3(spec: FlowsheetSpec, u_limits: Tuple[float, float] = (0.0, 100.0)) -> RuleReport:
    findings = []
    for chain in spec.selectors:
        first = chain.stages[0]
        has_desired = any(isinstance(i, Desired) or spec.loop(i).desired for i in first.inputs)
        if has_desired:
            continue
        builtin = u_limits[1] if first.kind == "MIN" else u_limits[0] if first.kind == "MAX" else None
        if builtin is not None and (chain.nominal is None or chain.nominal == builtin):
            findings.append((Severity.WARNING, (chain.mv,),
                             f"first selector on {chain.mv} has no desired input; the built-in "
                             f"{first.kind}-selector at u={builtin:g}% supplies it"))
        else:
            findings.append((Severity.VIOLATION, (chain.mv,),
                             f"first selector on {chain.mv} has no desired input"
                             + (f" (nominal {chain.nominal:g}%)" if chain.nominal is not None else "")))
    return _report("S3", findings, "every selector chain starts with a desired input")


def check_s2_s3(spec: FlowsheetSpec) -> Tuple[RuleReport, RuleReport]:
    return check_s2(spec), check_s3(spec)


def check_all(spec: FlowsheetSpec) -> List[RuleReport]:
    """Run every rule once, in the order C1..C4, S1..S3."""
    return [
        check_c1(spec),
        check_c2(spec),
        check_radiation(spec),
        check_c4(spec),
        check_s1(spec),
        *check_s2_s3(spec),
    ]


def tpm_candidates(spec: FlowsheetSpec) -> List[str]:
    return spec.tpm_locations()
