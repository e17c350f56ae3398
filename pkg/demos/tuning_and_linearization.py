"""Barn gains around the nominal point and in the cold, and the PI table built from them."""

from arcsim.barn import solve_active_set
from arcsim.tuning import linearize_barn, tuning_table


def main() -> None:
    nom = linearize_barn(50.0, 0.0, 0.0)
    sol = solve_active_set(-40.0)
    cold = linearize_barn(sol.u1, sol.u2, -40.0)
    print(f"{'':>10} {'nominal':>10} {'T_out=-40':>10} {'ratio':>7}")
    for label, a, b in [
        ("q m3/s", nom.q, cold.q),
        ("tau_c s", nom.tau_c_co2, cold.tau_c_co2),
        ("tau_T s", nom.tau_t_temp, cold.tau_t_temp),
        ("k_c,u1", nom.k_c_u1, cold.k_c_u1),
        ("k'_c,u1", nom.kprime["c,u1"], cold.kprime["c,u1"]),
        ("k'_T,u2", nom.kprime["T,u2"], cold.kprime["T,u2"]),
    ]:
        print(f"{label:>10} {a:10.4g} {b:10.4g} {b / a:7.2f}")
    print()
    for r in tuning_table():
        print(f"{r.name:<4} {r.cv}->{r.mv}  SP {r.setpoint:<6g} kc {r.kc:<6g} tau_i {r.tau_i:<5g} "
              f"(SIMC kc {r.simc_kc:.3g})  {r.note}")


if __name__ == "__main__":
    main()
