"""Barn under a cold spell: outdoor temperature steps down to -40 C and back.

Runs the shipped ``cow_staircase`` scenario and prints, for every 4000 s
hold, the terminal state next to the analytic steady state and the pair
of constraints that ended up active.
"""

from arcsim.barn import CO2, TEMPERATURE, solve_active_set
from arcsim.scenario import load_scenario
from arcsim.sim import run


def main() -> None:
    res = run(load_scenario("cow_staircase"))
    print(f"{'T_out':>6} {'T':>6} {'T_ss':>6} {'c':>6} {'c_ss':>6} {'u1':>6} {'u2':>6}  active")
    for s in res.segments():
        t_out = s.disturbances["t_out"]
        sol = solve_active_set(t_out)
        m = s.mean
        print(f"{t_out:6.1f} {m[TEMPERATURE]:6.2f} {sol.t:6.2f} {m[CO2]:6.0f} {sol.c:6.0f} "
              f"{m['u1']:6.1f} {m['u2']:6.1f}  {' & '.join(sorted(s.active_pair))}")
    print("\nfan selector handovers:")
    for e in res.events:
        if e.mv == "u1" and e.previous is not None:
            print(f"  t={e.t:7.0f} s  {e.previous} -> {e.winner}")


if __name__ == "__main__":
    main()
