"""
Linearized barn gains and SIMC PI tuning.

Gains are steady-state sensitivities at an operating point; ``kprime``
is the initial slope ``k / tau`` that the SIMC rule actually needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional

from .barn import PPM, BarnParams, barn_steady_state, fan_flow


@dataclass(frozen=True)
class LinearizedPoint:
    u1: float
    u2: float
    t_out: float
    q: float  # m3/s
    c: float  # ppm
    t: float  # degC
    tau_c_co2: float  # s
    tau_t_temp: float  # s
    k_c_u1: float  # ppm/%
    k_t_u1: float  # degC/%
    k_t_u2: float  # degC/%

    @property
    def kprime(self) -> Dict[str, float]:
        return {
            "c,u1": self.k_c_u1 / self.tau_c_co2,
            "T,u1": self.k_t_u1 / self.tau_t_temp,
            "T,u2": self.k_t_u2 / self.tau_t_temp,
        }


def linearize_barn(u1: float, u2: float, t_out: float, params: BarnParams = BarnParams(),
                   n_cows: Optional[float] = None) -> LinearizedPoint:
    p = params
    n = p.n_cows if n_cows is None else n_cows
    q = fan_flow(u1, p)
    c, t = barn_steady_state(u1, u2, t_out, p, n)
    rcp = p.rho * p.cp
    dq = (p.q_max - p.q_min) / 100.0
    loss = rcp * q + p.ua
    return LinearizedPoint(
        u1=u1, u2=u2, t_out=t_out, q=q, c=c, t=t,
        tau_c_co2=p.V / q,
        tau_t_temp=rcp * p.V / loss,
        k_c_u1=-n * p.g_co2 / q ** 2 * PPM * dq,
        k_t_u1=-(t - t_out) * rcp / loss * dq,
        k_t_u2=(p.q_heat_max / 100.0) / loss,
    )


@dataclass(frozen=True)
class SimcTuning:
    kc: float
    tau_i_s: float
    tau_c_choice: float
    scaling_factor: float = 1.0


def simc_pi(kprime: float, tau: float, tau_c_choice: float) -> SimcTuning:
    """PI settings for a first-order process without delay.

    ``kc = 1 / (kprime * tau_c)`` and ``tau_i = min(tau, 4 tau_c)``.
    """
    if kprime == 0:
        raise ValueError("initial slope kprime must be nonzero")
    if not (tau > 0 and tau_c_choice > 0):
        raise ValueError("tau and tau_c must be > 0")
    return SimcTuning(1.0 / (kprime * tau_c_choice), min(tau, 4.0 * tau_c_choice), tau_c_choice)


def detune(t: SimcTuning, factor: float) -> SimcTuning:
    """Slow a loop down for an off-nominal region where k' and tau are
    ``factor`` times larger: divide ``kc`` and multiply ``tau_i``.

    The integral time is scaled directly, not re-clipped to ``4 tau_c``.
    """
    if not factor > 0:
        raise ValueError("factor must be > 0")
    return SimcTuning(t.kc / factor, t.tau_i_s * factor, t.tau_c_choice, t.scaling_factor * factor)


@dataclass(frozen=True)
class TuningRow:
    name: str
    cv: str
    mv: str
    setpoint: float
    kc: float
    tau_i: float
    simc_kc: float  # before rounding
    factor: float
    note: str


# Rounded gains behind the simulation tunings, with tau = tau_c = 350 s.
NOMINAL_TAU = 350.0
ROUNDED_GAINS = {"c,u1": -10.5, "T,u1": -0.12, "T,u2": 0.045}


def tuning_table() -> List[TuningRow]:
    """PI settings of the six barn controllers as used in simulation.

    Each row keeps the exact SIMC value next to the value actually used:
    the temperature loops on the fan are rounded from -8.3 to -10, the
    CO2 loops from -0.095 to -0.1 and the heater from 22.2 to 22. TC2 and
    CC1 act in cold weather where the fan loops are slower, so they are
    detuned by factors 3 and 5.
    """
    tau = NOMINAL_TAU
    t_fan = simc_pi(ROUNDED_GAINS["T,u1"] / tau, tau, tau)
    c_fan = simc_pi(ROUNDED_GAINS["c,u1"] / tau, tau, tau)
    heat = simc_pi(ROUNDED_GAINS["T,u2"] / tau, tau, tau)
    rows = [
        ("TC1", "T", "u1", 20.0, -10.0, t_fan, 1.0, "max T; kc rounded up from SIMC"),
        ("TC3", "T", "u1", 5.0, -10.0, t_fan, 1.0, "min T; kc rounded up from SIMC"),
        ("TC2", "T", "u1", 0.0, -10.0, t_fan, 3.0, "min T, cold weather; detuned x3"),
        ("CC2", "c", "u1", 1000.0, -0.1, c_fan, 1.0, "max CO2"),
        ("CC1", "c", "u1", 3000.0, -0.1, c_fan, 5.0, "max CO2, cold weather; detuned x5"),
        ("TC", "T", "u2", 4.0, 22.0, heat, 1.0, "heater, split-parallel with TC3"),
    ]
    out = []
    for name, cv, mv, sp, kc_nominal, simc, factor, note in rows:
        kc = round(kc_nominal / factor, 2) if factor != 1.0 else kc_nominal
        out.append(TuningRow(name, cv, mv, sp, kc, simc.tau_i_s * factor, simc.kc, factor, note))
    return out
