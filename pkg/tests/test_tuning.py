import pytest
from hypothesis import given
from hypothesis import strategies as st

from arcsim.barn import BarnParams, barn_steady_state, solve_active_set
from arcsim.tuning import detune, linearize_barn, simc_pi, tuning_table


def _fd_gains(u1, u2, t_out, h=0.01):
    c_p, t_p = barn_steady_state(u1 + h, u2, t_out)
    c_m, t_m = barn_steady_state(u1 - h, u2, t_out)
    # one-sided at the heater limits
    lo, hi = max(u2 - h, 0.0), min(u2 + h, 100.0)
    _, t2_p = barn_steady_state(u1, hi, t_out)
    _, t2_m = barn_steady_state(u1, lo, t_out)
    return (c_p - c_m) / (2 * h), (t_p - t_m) / (2 * h), (t2_p - t2_m) / (hi - lo)


def test_nominal_gains():
    lp = linearize_barn(50, 0, 0)
    assert lp.k_c_u1 == pytest.approx(-10.456, abs=5e-4)
    assert lp.k_t_u1 == pytest.approx(-0.1165, abs=1e-4)
    assert lp.k_t_u2 == pytest.approx(0.04502, abs=1e-5)
    assert lp.tau_c_co2 == pytest.approx(397.4, abs=0.05)
    assert lp.tau_t_temp == pytest.approx(325.8, abs=0.05)


@pytest.mark.parametrize("u1,u2,t_out", [(50, 0, 0), (77.2, 0, 15), (45.6, 25.7, -5),
                                         (19.1, 99, -20), (9.7, 99, -40)])
def test_gains_match_finite_differences(u1, u2, t_out):
    lp = linearize_barn(u1, u2, t_out)
    fd = _fd_gains(u1, u2, t_out)
    for a, b in zip((lp.k_c_u1, lp.k_t_u1, lp.k_t_u2), fd):
        assert a == pytest.approx(b, rel=1e-4)


def test_no_cows_no_co2_gain():
    assert linearize_barn(50, 0, 0, n_cows=0).k_c_u1 == 0.0


def test_gain_signs():
    lp = linearize_barn(30, 40, -5)
    assert lp.k_c_u1 < 0 and lp.k_t_u1 < 0 and lp.k_t_u2 > 0
    assert lp.tau_c_co2 > 0 and lp.tau_t_temp > 0


@given(st.floats(min_value=0, max_value=100), st.floats(min_value=-40, max_value=15))
def test_heater_slope_is_operating_point_independent(u1, t_out):
    ref = linearize_barn(50, 0, 0).kprime["T,u2"]
    assert linearize_barn(u1, 50, t_out).kprime["T,u2"] == pytest.approx(ref, rel=1e-9)


def test_cold_point_scaling():
    sol = solve_active_set(-40.0)
    cold = linearize_barn(sol.u1, sol.u2, -40.0)
    nom = linearize_barn(50, 0, 0)
    assert cold.q == pytest.approx(1.55, abs=0.01)
    assert 4 <= cold.tau_c_co2 / nom.tau_c_co2 <= 6
    assert 4 <= cold.kprime["c,u1"] / nom.kprime["c,u1"] <= 6
    # the steady-state CO2 gain grows with 1/q^2, i.e. far more than 5x
    assert cold.k_c_u1 / nom.k_c_u1 > 20


def test_simc_examples():
    t = simc_pi(-0.12 / 350, 350, 350)
    assert t.kc == pytest.approx(-8.33, rel=1e-3) and t.tau_i_s == 350
    h = simc_pi(0.045 / 350, 350, 350)
    assert h.kc == pytest.approx(22.2, rel=1e-2) and h.tau_i_s == 350
    assert simc_pi(1.0, 2000, 350).tau_i_s == 1400


def test_simc_rejects_zero_slope():
    with pytest.raises(ValueError):
        simc_pi(0.0, 350, 350)
    with pytest.raises(ValueError):
        simc_pi(1.0, -1, 350)


def test_detune():
    t = detune(simc_pi(-0.12 / 350, 350, 350), 3)
    assert t.kc == pytest.approx(-8.333 / 3, rel=1e-3)
    assert t.tau_i_s == 1050 and t.scaling_factor == 3
    with pytest.raises(ValueError):
        detune(t, 0)


EXPECTED = {
    "TC1": (-10, 350, 20), "TC3": (-10, 350, 5), "TC2": (-3.33, 1050, 0),
    "CC2": (-0.1, 350, 1000), "CC1": (-0.02, 1750, 3000), "TC": (22, 350, 4),
}


def test_tuning_table_rows():
    rows = {r.name: r for r in tuning_table()}
    assert set(rows) == set(EXPECTED)
    for name, (kc, tau_i, sp) in EXPECTED.items():
        r = rows[name]
        assert (r.kc, r.tau_i, r.setpoint) == (kc, tau_i, sp), name


def test_tuning_table_keeps_unrounded_values():
    rows = {r.name: r for r in tuning_table()}
    assert rows["TC1"].simc_kc == pytest.approx(-8.33, rel=1e-2)
    assert rows["TC"].simc_kc == pytest.approx(22.2, rel=1e-2)


def test_tuning_table_matches_shipped_structure():
    from arcsim.structures import build_cow3
    g = build_cow3()
    for r in tuning_table():
        c = g.controllers[r.name]
        assert (c.kc, c.tau_i, c.setpoint) == (r.kc, r.tau_i, r.setpoint)
