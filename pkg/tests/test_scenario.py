import pytest

from arcsim.barn import BarnPlant
from arcsim.scenario import ScenarioError, load_scenario, resolve, scenario_from_text, scenario_names
from arcsim.separator import SeparatorPlant

BASE = """
plant: barn
structure: cow3
t_end: 100
"""


def test_shipped_scenarios_load():
    names = scenario_names()
    assert {"cow_staircase", "cow_delay_60", "cow_delay_180", "sep_bidirectional",
            "sep_min_pressure", "sep_small_delta"} <= set(names)
    for name in names:
        sc = load_scenario(name)
        assert sc.name == name


def test_resolve_forms(tmp_path):
    assert resolve("scenarios/cow_staircase").name == "cow_staircase.yaml"
    assert resolve("cow_staircase.yaml").name == "cow_staircase.yaml"
    f = tmp_path / "mine.yaml"
    f.write_text(BASE)
    assert resolve(str(tmp_path / "mine")) == f
    with pytest.raises(FileNotFoundError):
        resolve("no_such_scenario")


def test_cow_staircase_contents():
    sc = load_scenario("cow_staircase")
    assert isinstance(sc.plant, BarnPlant)
    assert sc.t_end == 72000 and sc.dt == 1
    assert len(sc.disturbances[0].values) == 18


def test_separator_scenario_contents():
    sc = load_scenario("sep_small_delta")
    assert isinstance(sc.plant, SeparatorPlant)
    assert sc.graph.controllers["PC_B"].setpoint == pytest.approx(70.05)


def test_overrides_and_params():
    sc = scenario_from_text(BASE + "overrides: {TC2: {kc: -10}}\nparams: {n_cows: 60}\n")
    assert sc.graph.controllers["TC2"].kc == -10
    assert sc.plant.params.n_cows == 60


def test_disturbance_forms():
    sc = scenario_from_text(BASE + """
disturbances:
  - {variable: t_out, breakpoints: [0, 50], values: [0, -5]}
  - {variable: n_cows, value: 70}
""")
    assert [p.variable for p in sc.disturbances] == ["t_out", "n_cows"]


@pytest.mark.parametrize("extra,field", [
    ("colour: red\n", "colour"),
    ("dt: -1\n", "dt"),
    ("dt: fast\n", "dt"),
    ("params: {cows: 3}\n", "params"),
    ("overrides: {TC2: {gain: 3}}\n", "overrides"),
    ("disturbances: [{variable: t_out}]\n", "disturbances[0]"),
    ("disturbances: [{variable: t_out, breakpoints: [0, 0], values: [1, 2]}]\n", "disturbances[0]"),
    ("disturbances: [{variable: rain, value: 1}]\n", "scenario"),
    ("delays: {barn.temperature: 1.5}\n", "scenario"),
])
def test_schema_errors_name_the_field(extra, field):
    with pytest.raises(ScenarioError) as info:
        scenario_from_text(BASE + extra, source="x.yaml")
    assert info.value.field == field
    assert str(info.value).startswith(f"x.yaml: {field}: ")


def test_missing_and_bad_top_level():
    with pytest.raises(ScenarioError, match="plant: required"):
        scenario_from_text("structure: cow3\n")
    with pytest.raises(ScenarioError, match="plant"):
        scenario_from_text("plant: boat\nstructure: cow3\n")
    with pytest.raises(ScenarioError, match="structure"):
        scenario_from_text("plant: barn\nstructure: nowhere\n")
    with pytest.raises(ScenarioError, match="mapping"):
        scenario_from_text("- 1\n")
    with pytest.raises(ScenarioError, match="YAML"):
        scenario_from_text("plant: [\n")
