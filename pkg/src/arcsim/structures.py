"""Build executable control graphs from flowsheet descriptions.

The shipped fixtures (``data/fixtures/*.yaml``) describe every control
structure used in the case studies; the same file drives both the rule
checker and the simulator.
"""

from __future__ import annotations

from importlib import resources
from dataclasses import replace
from typing import Dict, List, Optional

from .blocks import ControlGraph, PiController, SelectorNode, SplitParallelPair
from .topology import Desired, FlowsheetSpec, parse_flowsheet

FIXTURES = (
    "fig1", "fig2", "fig3", "fig4",
    "cow2a", "cow2", "cow3a", "cow3",
)
MUTATIONS = {
    "C1": "mut_c1_fig1_double_flow",
    "C2": "mut_c2_fig2_boundary_pc",
    "C3": "mut_c3_fig1_tpm_moved",
    "C4": "mut_c4_fig2_crossing",
    "S1": "mut_s1_cow2_kind",
    "S2": "mut_s2_cow2_swapped",
    "S3": "mut_s3_cow2_no_desired",
}


def fixture_text(name: str) -> str:
    return resources.files("arcsim.data.fixtures").joinpath(f"{name}.yaml").read_text(encoding="utf-8")


def fixture_names() -> List[str]:
    root = resources.files("arcsim.data.fixtures")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_fixture(name: str) -> FlowsheetSpec:
    return parse_flowsheet(fixture_text(name))


def graph_from_flowsheet(spec: FlowsheetSpec, overrides: Optional[Dict[str, dict]] = None) -> ControlGraph:
    """Instantiate the PI controllers and selector chains of ``spec``.

    Every loop needs ``setpoint``, ``kc`` and ``tau_i``. ``overrides``
    patches controller fields per loop, e.g. ``{"TC2": {"kc": -2.0}}``.
    """
    overrides = overrides or {}
    controllers: Dict[str, PiController] = {}
    for lp in spec.loops:
        if lp.setpoint is None or lp.kc is None or lp.tau_i is None:
            raise ValueError(f"loop {lp.name!r} has no tuning (setpoint, kc, tau_i)")
        kw = dict(kc=lp.kc, tau_i=lp.tau_i, setpoint=lp.setpoint, tau_t=lp.tau_t, name=lp.name)
        kw.update(overrides.get(lp.name, {}))
        controllers[lp.name] = PiController(**kw)

    constants: Dict[str, float] = {}
    selectors: List[SelectorNode] = []
    mv_bindings: Dict[str, str] = {}

    def ref(item) -> str:
        if isinstance(item, Desired):
            constants[item.name] = item.value
            return item.name
        return item

    for chain in spec.selectors:
        prev: Optional[str] = None
        for j, st in enumerate(chain.stages):
            inputs = ([prev] if prev else []) + [ref(i) for i in st.inputs]
            if len(inputs) == 1:
                # lone first input: the built-in MV limit is the other one
                prev = inputs[0]
                continue
            label = f"{chain.mv}.{j + 1}"
            selectors.append(SelectorNode(st.kind, inputs, label))
            prev = label
        mv_bindings[chain.mv] = prev
    for mv, const in spec.manual:
        mv_bindings[mv] = ref(const)
    for lp in spec.loops:
        if spec.chain(lp.mv) is None:
            if lp.mv in mv_bindings:
                raise ValueError(f"MV {lp.mv!r} is driven twice without a selector")
            mv_bindings[lp.mv] = lp.name

    pairs = [
        SplitParallelPair(controllers[p.low], controllers[p.high], p.delta)
        for p in spec.split_parallel
    ]
    graph = ControlGraph(
        controllers=controllers,
        selectors=selectors,
        mv_bindings=mv_bindings,
        measurement_bindings={lp.name: lp.cv for lp in spec.loops},
        constants=constants,
        split_parallel=pairs,
        bounds={lp.name: lp.bound for lp in spec.loops if lp.bound},
    )
    return graph


def with_split_delta(spec: FlowsheetSpec, delta: float) -> FlowsheetSpec:
    """Move every split-parallel high setpoint to ``low + delta``."""
    high_sp = {}
    for sp in spec.split_parallel:
        high_sp[sp.high] = spec.loop(sp.low).setpoint + delta
    loops = tuple(replace(lp, setpoint=high_sp[lp.name]) if lp.name in high_sp else lp for lp in spec.loops)
    pairs = tuple(replace(sp, delta=delta) for sp in spec.split_parallel)
    return replace(spec, loops=loops, split_parallel=pairs)


def build_graph(name: str, overrides: Optional[Dict[str, dict]] = None) -> ControlGraph:
    return graph_from_flowsheet(load_fixture(name), overrides)


def build_cow2a() -> ControlGraph:
    return build_graph("cow2a")


def build_cow2() -> ControlGraph:
    return build_graph("cow2")


def build_cow3a() -> ControlGraph:
    return build_graph("cow3a")


def build_cow3(tc2_factor: float = 3.0) -> ControlGraph:
    """Final barn structure; ``tc2_factor`` rescales the TC2 tuning."""
    if tc2_factor == 3.0:
        return build_graph("cow3")
    return build_graph("cow3", {"TC2": {"kc": -10.0 / tc2_factor, "tau_i": 350.0 * tc2_factor}})
