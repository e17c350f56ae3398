"""Gas surge on the separator: the compressor becomes the bottleneck.

With the bidirectional structure the choke selector hands the feed over
from the operator setpoint to the high-pressure controller PC_B while the
compressor is at 100 %, then hands it back when the surge passes. A second
run with a 0.05 bar setpoint gap shows both pressure controllers acting at
once.
"""

from arcsim.scenario import load_scenario
from arcsim.separator import PRESSURE, WELL_PRESSURE, drifting_intervals, overlap_intervals
from arcsim.sim import run


def main() -> None:
    res = run(load_scenario("sep_bidirectional"))
    print("selector events:")
    for e in res.events:
        print(f"  t={e.t:8.1f} s  {e.mv:<12} -> {e.winner}")
    t, p = res.t, res[PRESSURE]
    mid = (t > 5000) & (t < 6000)
    print(f"pressure during surge {p[mid].mean():.2f} bar, at end {p[-1]:.2f} bar")
    for a, b in drifting_intervals(res):
        print(f"  drifting {a:8.1f} .. {b:8.1f} s (no pressure controller selected)")

    tight = run(load_scenario("sep_small_delta"))
    print(f"delta 0.05 bar: overlap intervals {overlap_intervals(tight)}")

    well = run(load_scenario("sep_min_pressure"))
    print(f"feed opened to 100 %: well pressure min {well[WELL_PRESSURE].min():.2f} bar")


if __name__ == "__main__":
    main()
