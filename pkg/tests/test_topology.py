import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arcsim.structures import FIXTURES, MUTATIONS, fixture_text, load_fixture
from arcsim.topology import (
    RULES,
    FlowsheetParseError,
    Severity,
    check_all,
    check_c1,
    check_c2,
    check_c4,
    check_radiation,
    check_s3,
    infer_selector_kind,
    parse_flowsheet,
    serialize_flowsheet,
    tpm_candidates,
)

SINGLE = """
name: single
units:
  - {name: a, kind: source}
  - {name: b, kind: sink}
streams:
  - {name: s, from: a, to: b, element: v, element_kind: valve}
loops:
  - {name: FC, cv: s.flow, mv: v, gain: 1, setpoint: 1, kc: 1, tau_i: 1}
tpm: v
"""


@pytest.mark.parametrize("name", FIXTURES)
def test_figure_fixture_passes_every_rule(name):
    reports = check_all(load_fixture(name))
    assert [r.rule for r in reports] == list(RULES)
    assert all(r.severity is not Severity.VIOLATION for r in reports), [r for r in reports if not r.ok]


@pytest.mark.parametrize("rule,name", sorted(MUTATIONS.items()))
def test_mutation_fails_exactly_its_rule(rule, name):
    reports = check_all(load_fixture(name))
    failing = [r.rule for r in reports if r.severity is Severity.VIOLATION]
    assert failing == [rule]


def test_fig1_structure():
    spec = load_fixture("fig1")
    assert [u.name for u in spec.units if u.kind == "vessel"] == ["separator"]
    assert len(spec.inventories) == 2
    assert tpm_candidates(spec) == ["choke"]


def test_fig4_structure():
    spec = load_fixture("fig4")
    assert len([u for u in spec.units if u.kind == "vessel"]) == 2
    mins = [s for c in spec.selectors for s in c.stages if s.kind == "MIN"]
    assert len(mins) == 5


def test_fig3_tpm_candidates():
    assert set(tpm_candidates(load_fixture("fig3"))) == {"choke", "compressor"}


def test_c1_names_both_loops():
    r = check_c1(load_fixture(MUTATIONS["C1"]))
    assert r.severity is Severity.VIOLATION
    assert {"PC", "FC"} <= set(r.locus)


def test_c2_notes_tpm_at_feed():
    r = check_c2(load_fixture("fig2"))
    assert r.severity is Severity.PASS
    assert "choke" in r.message


def test_radiation_flags_level_loop():
    r = check_radiation(load_fixture(MUTATIONS["C3"]))
    assert r.severity is Severity.VIOLATION
    assert "LC" in r.locus


def test_single_stream_passes_trivially():
    spec = parse_flowsheet(SINGLE)
    for check in (check_c1, check_c2, check_radiation, check_c4):
        assert check(spec).severity is Severity.PASS


@pytest.mark.parametrize("bound,gain,kind", [("upper", -1, "MAX"), ("lower", -1, "MIN"),
                                              ("lower", 1, "MAX"), ("upper", 1, "MIN")])
def test_infer_selector_kind(bound, gain, kind):
    assert infer_selector_kind(bound, gain) == kind


def test_infer_selector_kind_rejects_bad_input():
    with pytest.raises(ValueError):
        infer_selector_kind("sideways", 1)
    with pytest.raises(ValueError):
        infer_selector_kind("upper", 0)


def test_s3_warning_when_builtin_limit_supplies_desired_input():
    text = fixture_text("fig3").replace("[{comp_max: 100}, PC_A]", "[PC_A]")
    r = check_s3(parse_flowsheet(text))
    assert r.severity is Severity.WARNING
    assert "built-in" in r.message


def test_s3_violation_when_nominal_is_not_a_limit():
    r = check_s3(load_fixture(MUTATIONS["S3"]))
    assert r.severity is Severity.VIOLATION


def test_c4_same_unit_loop_passes():
    assert check_c4(load_fixture("fig3")).severity is Severity.PASS


@pytest.mark.parametrize("text,needle", [
    ("", "no units"),
    ("name: x\nunits: []\n", "no units"),
    ("name: x\nunits: [\n", "syntax"),
])
def test_parse_errors(text, needle):
    with pytest.raises(FlowsheetParseError, match=needle):
        parse_flowsheet(text)


def test_parse_error_has_position():
    text = SINGLE.replace("to: b,", "to: nowhere,")
    with pytest.raises(FlowsheetParseError) as info:
        parse_flowsheet(text)
    assert info.value.line is not None and info.value.column is not None
    assert "nowhere" in str(info.value)


def test_duplicate_names_rejected():
    text = SINGLE.replace("{name: b, kind: sink}", "{name: a, kind: sink}")
    with pytest.raises(FlowsheetParseError, match="duplicate"):
        parse_flowsheet(text)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(FIXTURES + tuple(MUTATIONS.values())))
def test_round_trip(name):
    spec = load_fixture(name)
    assert parse_flowsheet(serialize_flowsheet(spec)) == spec
