"""Selector-based regulatory control: PI blocks, plant models, simulation
and structure checks for override and split-parallel schemes."""

__version__ = "0.1.0"

from .blocks import (
    ControlError,
    ControlGraph,
    GraphError,
    OrderingError,
    PiController,
    SelectorKind,
    SelectorNode,
    SplitParallelPair,
    evaluate_graph,
    pi_commit,
    pi_propose,
    select,
)
from .barn import (
    BarnParams,
    BarnPlant,
    BarnState,
    barn_derivatives,
    barn_steady_state,
    fan_flow,
    solve_active_set,
)
from .separator import (
    SeparatorParams,
    SeparatorPlant,
    SeparatorState,
    build_fig1,
    build_fig2,
    build_fig3,
    comp_flow,
    separator_derivatives,
    well_pressure,
)
from .sim import DelayLine, Profile, RunResult, Scenario, run, run_batch, staircase_profile
from .scenario import load_scenario
from .structures import build_cow2, build_cow2a, build_cow3, build_cow3a, load_fixture
from .topology import FlowsheetSpec, check_all, parse_flowsheet, tpm_candidates
from .tuning import linearize_barn, simc_pi, tuning_table
