"""Command-line front end: ``arcsim <command> ...``.

Exit codes: 0 ok, 1 rule or tolerance failure, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

from . import __version__
from .barn import BarnPlant, solve_active_set
from .blocks import ControlError
from .scenario import ScenarioError, load_scenario, scenario_names
from .sim import Profile, RunResult, Scenario, run, run_batch
from .structures import build_cow3, fixture_names, fixture_text
from .topology import FlowsheetParseError, Severity, check_all, parse_flowsheet
from .tuning import linearize_barn, tuning_table

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# Closed-loop vs analytic steady-state tolerances: T, c, u1, u2.
STEADY_TOL = {"T": 0.1, "c": 5.0, "u1": 0.5, "u2": 1.0}
TABLE_T_OUT = (15.0, 10.0, 5.0, 0.0, -2.5, -5.0, -10.0, -20.0, -30.0, -40.0)


class UsageError(Exception):
    pass


def _emit(rows: List[dict], fmt: str, out) -> None:
    if not rows:
        return
    if fmt == "csv":
        w = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return
    cols = list(rows[0])
    cells = [[_cell(r[c]) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    out.write("  ".join(c.rjust(w) for c, w in zip(cols, widths)) + "\n")
    for row in cells:
        out.write("  ".join(v.rjust(w) for v, w in zip(row, widths)) + "\n")


def _cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def summary_rows(result: RunResult) -> List[dict]:
    rows = []
    for s in result.segments():
        row = {"t_start": s.t_start, "t_end": s.t_end}
        row.update(s.disturbances)
        row.update({k: v for k, v in s.mean.items() if k not in s.disturbances})
        row["active"] = " & ".join(sorted(s.active.values()))
        rows.append(row)
    return rows


def write_outputs(result: RunResult, out_dir: Path, fmt: str) -> List[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    traj = out_dir / f"{result.name}.csv"
    events = out_dir / f"{result.name}_events.csv"
    summary = out_dir / f"{result.name}_summary.{'csv' if fmt == 'csv' else 'txt'}"
    result.write_csv(traj)
    result.write_events(events)
    with open(summary, "w", newline="") as fh:
        _emit(summary_rows(result), fmt, fh)
    return [traj, events, summary]


def _apply_globals(sc: Scenario, args) -> Scenario:
    if args.dt is not None:
        sc = replace(sc, dt=args.dt, log_interval=max(sc.log_interval, args.dt))
        ratio = sc.log_interval / sc.dt
        if abs(ratio - round(ratio)) > 1e-9:
            sc = replace(sc, log_interval=sc.dt)
    if args.t_end is not None:
        sc = replace(sc, t_end=args.t_end)
    return sc


def cmd_simulate(args) -> int:
    scenarios = []
    for ref in args.scenario:
        sc = _apply_globals(load_scenario(ref), args)
        sc.validate()
        scenarios.append(sc)
    results = run_batch(scenarios, args.jobs)
    out_dir = Path(args.out)
    for res in results:
        files = write_outputs(res, out_dir, args.format)
        print(f"{res.name}: wrote {', '.join(str(f) for f in files)}")
        if args.format == "text":
            _emit(summary_rows(res), "text", sys.stdout)
    return EXIT_OK


# ---------------------------------------------------------------------------
# steady-state
# ---------------------------------------------------------------------------


def closed_loop_check(t_out: float, t_end: float = 40000.0, dt: float = 1.0) -> dict:
    """Step from the nominal point to ``t_out`` and compare the end of the
    run with the analytic active-set solution."""
    sol = solve_active_set(t_out)
    sc = Scenario(BarnPlant(), build_cow3(), [Profile("t_out", [0.0, dt], [0.0, t_out])],
                  dt=dt, t_end=t_end, log_interval=max(10.0, dt))
    res = run(sc)
    sim = {"T": res["barn.temperature"][-1], "c": res["barn.co2"][-1],
           "u1": res["u1"][-1], "u2": res["u2"][-1]}
    ref = {"T": sol.t, "c": sol.c, "u1": sol.u1, "u2": sol.u2}
    seg = res.segments()[-1]
    ok = all(abs(sim[k] - ref[k]) <= STEADY_TOL[k] for k in STEADY_TOL) and seg.active_pair == sol.active_pair
    row = {"T_out": t_out}
    row.update({f"{k}_sim": float(v) for k, v in sim.items()})
    row.update({f"d{k}": float(sim[k] - ref[k]) for k in sim})
    row["active_sim"] = " & ".join(sorted(seg.active_pair))
    row["ok"] = ok
    return row


def cmd_steady_state(args) -> int:
    t_outs = args.t_out if args.t_out else list(TABLE_T_OUT)
    rows = []
    for t in t_outs:
        r = solve_active_set(t).as_row()
        rows.append(r)
    _emit(rows, args.format, sys.stdout)
    if not args.simulate:
        return EXIT_OK
    t_end = args.t_end if args.t_end is not None else 40000.0
    dt = args.dt if args.dt is not None else 1.0
    checks = [closed_loop_check(t, t_end, dt) for t in t_outs]
    print()
    _emit(checks, args.format, sys.stdout)
    return EXIT_OK if all(c["ok"] for c in checks) else EXIT_FAIL


# ---------------------------------------------------------------------------
# tune / linearize
# ---------------------------------------------------------------------------


def cmd_tune(args) -> int:
    rows = [
        {"controller": r.name, "cv": r.cv, "mv": r.mv, "setpoint": r.setpoint, "kc": r.kc,
         "tau_i": r.tau_i, "simc_kc": round(r.simc_kc, 4), "factor": r.factor, "note": r.note}
        for r in tuning_table()
    ]
    _emit(rows, args.format, sys.stdout)
    return EXIT_OK


def _lin_row(lp) -> dict:
    kp = lp.kprime
    return {
        "T_out": lp.t_out, "u1": lp.u1, "u2": lp.u2, "q": lp.q, "c": lp.c, "T": lp.t,
        "k_c_u1": lp.k_c_u1, "k_T_u1": lp.k_t_u1, "k_T_u2": lp.k_t_u2,
        "tau_c": lp.tau_c_co2, "tau_T": lp.tau_t_temp,
        "kp_c_u1": kp["c,u1"], "kp_T_u1": kp["T,u1"], "kp_T_u2": kp["T,u2"],
    }


def cmd_linearize(args) -> int:
    if (args.u1 is None) != (args.u2 is None):
        raise UsageError("give both --u1 and --u2, or neither")
    rows = []
    for t_out in args.t_out or [0.0]:
        if args.u1 is None:
            sol = solve_active_set(t_out)
            u1, u2 = sol.u1, sol.u2
        else:
            u1, u2 = args.u1, args.u2
        rows.append(_lin_row(linearize_barn(u1, u2, t_out)))
    nominal = _lin_row(linearize_barn(50.0, 0.0, 0.0))
    for r in rows:
        # off-nominal scaling relative to the nominal point
        r["tau_c_ratio"] = r["tau_c"] / nominal["tau_c"]
        r["kp_c_u1_ratio"] = r["kp_c_u1"] / nominal["kp_c_u1"]
    _emit(rows, args.format, sys.stdout)
    return EXIT_OK


# ---------------------------------------------------------------------------
# check-topology
# ---------------------------------------------------------------------------


def _flowsheet_text(ref: str) -> str:
    p = Path(ref)
    if p.is_file():
        return p.read_text(encoding="utf-8")
    name = p.stem if p.suffix in (".yaml", ".yml") else p.name
    if len(p.parts) <= 2 and name in fixture_names():
        return fixture_text(name)
    raise FileNotFoundError(f"no flowsheet file {ref!r}")


def cmd_check_topology(args) -> int:
    worst = EXIT_OK
    for ref in args.flowsheet:
        spec = parse_flowsheet(_flowsheet_text(ref))
        reports = check_all(spec)
        if args.format == "csv":
            _emit([{"flowsheet": spec.name, "rule": r.rule, "result": r.severity.value,
                    "locus": " ".join(r.locus), "message": r.message} for r in reports], "csv", sys.stdout)
        else:
            print(f"{spec.name}: TPM at {', '.join(spec.tpm_locations()) or 'none'}")
            for r in reports:
                where = f" [{', '.join(r.locus)}]" if r.locus else ""
                print(f"  {r.rule} {r.severity.value.upper():9s}{where} {r.message}")
        if any(r.severity is Severity.VIOLATION for r in reports):
            worst = EXIT_FAIL
    return worst


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dt", type=float, help="integration step, s")
    common.add_argument("--t-end", type=float, help="simulated time, s")
    common.add_argument("--out", default="out", help="output directory (simulate)")
    common.add_argument("--jobs", type=int, default=1, help="parallel scenario runs")
    common.add_argument("--format", choices=("csv", "text"), default="text")

    p = argparse.ArgumentParser(prog="arcsim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="run scenario files")
    s.add_argument("scenario", nargs="+", help=f"file or shipped name ({', '.join(scenario_names())})")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("steady-state", parents=[common], help="active-set steady states of the barn")
    s.add_argument("t_out", nargs="*", type=float, help="outdoor temperatures (default: table values)")
    s.add_argument("--simulate", action="store_true", help="cross-check with long closed-loop runs")
    s.set_defaults(func=cmd_steady_state)

    s = sub.add_parser("tune", parents=[common], help="PI tuning table")
    s.set_defaults(func=cmd_tune)

    s = sub.add_parser("linearize", parents=[common], help="barn gains and time constants")
    s.add_argument("--t-out", type=float, action="append", help="outdoor temperature (repeatable)")
    s.add_argument("--u1", type=float, help="fan speed, %% (default: steady state)")
    s.add_argument("--u2", type=float, help="heater, %% (default: steady state)")
    s.set_defaults(func=cmd_linearize)

    s = sub.add_parser("check-topology", parents=[common], help="check structure rules")
    s.add_argument("flowsheet", nargs="+", help=f"file or shipped name ({', '.join(fixture_names())})")
    s.set_defaults(func=cmd_check_topology)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except FlowsheetParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ScenarioError, UsageError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ControlError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
