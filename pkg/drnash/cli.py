"""
Command-line front end.

    drnash validate <scenario>
    drnash run <scenario> --out <dir> [solver flags]
    drnash verify <scenario> --out <dir>

Exit status: 0 success, 1 validation or I/O problem (or, for verify, a
profitable deviation), 2 no convergence within --max-outer.
"""
import argparse
import json
import logging
import os
import sys
from dataclasses import asdict

import numpy as np
import pandas as pd

from . import version
from .equilibrium import SolveOptions, hourly_costs, nash_gaps, run
from .pricing import PriceQuote
from .prosumer import ProsumerState, theta_matrix
from .scenario import load_scenario
from .utils import event_mask, float_to_decimal_str, round_decimal
from .validation import DomainError, ScenarioFormatError, ValidationError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NOT_CONVERGED = 2

DR_SCHEDULE_COLUMNS = ["prosumer", "hour", "dr_kw", "x_kw", "sdr", "lambda_pv", "lambda_dr", "inconvenience", "profit_pv"]
PRICES_COLUMNS = ["prosumer", "hour", "retail_rate", "pv_gen_cost", "sdr", "lambda_pv", "lambda_dr"]
SETTLEMENT_COLUMNS = ["hour", "provider_profit", "utility_cost_before", "utility_cost_after", "adjusted_load", "utility_profit"]
TRACE_COLUMNS = ["iteration", "max_dr_delta", "provider_profit", "utility_profit", "inner_sweeps", "inner_converged"]
NASH_REPORT_COLUMNS = ["prosumer", "hour", "dr_kw", "best_deviation_kw", "max_improvement"]

fmt = float_to_decimal_str


def _write_csv(rows, columns, path):
    pd.DataFrame(rows, columns=columns).to_csv(path, index=False, lineterminator="\n")


def _read_csv(path):
    # everything as text; numbers are parsed explicitly so "inf" survives
    return pd.read_csv(path, dtype=str, keep_default_na=False)


def _solve_options(args):
    return SolveOptions(
        eps_reg=args.eps_reg,
        damping=args.damping,
        eps1=args.eps1,
        eps2=args.eps2,
        eps3=args.eps3,
        max_outer=args.max_outer,
        max_inner=args.max_inner,
        inner_tol=args.inner_tol,
        deviation_grid=args.deviation_grid,
        single_sweep=args.single_sweep,
        aggregate_convergence=args.aggregate_convergence,
        coupled=not args.uncoupled,
    )


def write_artifacts(scenario, result, out_dir):
    """
    Write dr_schedule.csv, prices.csv, settlement.csv, trace.csv and
    summary.json for a solver result.
    """
    os.makedirs(out_dir, exist_ok=True)
    inc, profit_pv = hourly_costs(scenario, result.states, result.options)

    schedule = []
    prices = []
    for i, (spec, state) in enumerate(zip(scenario.prosumers, result.states)):
        retail = scenario.retail_rate_for(spec)
        for t, q in enumerate(state.quotes):
            schedule.append([
                spec.id, t, fmt(state.dr[t]), fmt(state.x[t]), fmt(q.sdr), fmt(q.lambda_pv), fmt(q.lambda_dr),
                fmt(inc[i, t]), fmt(profit_pv[i, t]),
            ])
            prices.append([spec.id, t, fmt(retail[t]), fmt(spec.pv_gen_cost[t]), fmt(q.sdr), fmt(q.lambda_pv), fmt(q.lambda_dr)])
    _write_csv(schedule, DR_SCHEDULE_COLUMNS, os.path.join(out_dir, "dr_schedule.csv"))
    _write_csv(prices, PRICES_COLUMNS, os.path.join(out_dir, "prices.csv"))

    report = result.settlement
    _write_csv([
        [t, fmt(report.provider_profit[t]), fmt(report.utility_cost_before[t]), fmt(report.utility_cost_after[t]),
         fmt(report.adjusted_load[t]), fmt(report.utility_profit[t])]
        for t in range(scenario.horizon)
    ], SETTLEMENT_COLUMNS, os.path.join(out_dir, "settlement.csv"))

    _write_csv([
        [rec.outer_index, fmt(rec.max_dr_delta), fmt(rec.total_provider_profit), fmt(rec.total_utility_profit),
         rec.inner_sweeps, "true" if rec.inner_converged else "false"]
        for rec in result.iterations[1:]
    ], TRACE_COLUMNS, os.path.join(out_dir, "trace.csv"))

    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8", newline="\n") as f:
        json.dump(summary(scenario, result), f, indent=2, sort_keys=True)
        f.write("\n")


def summary(scenario, result):
    inc, profit_pv = hourly_costs(scenario, result.states, result.options)
    mask = event_mask(scenario.horizon, scenario.event_hours)
    ranked = sorted(
        (t for t in range(scenario.horizon) if mask[t]),
        key=lambda t: (-result.settlement.utility_profit[t], t),
    )
    prosumers = {}
    for i, (spec, state) in enumerate(zip(scenario.prosumers, result.states)):
        prosumers[spec.id] = {
            "dr_kwh": round_decimal(np.sum(state.dr.values)),
            "inconvenience": round_decimal(np.sum(inc[i])),
            "profit_pv": round_decimal(np.sum(profit_pv[i])),
            "net_cost": round_decimal(np.sum(inc[i]) - np.sum(profit_pv[i])),
        }
    data = {
        "scenario": scenario.name,
        "converged": result.converged,
        "iterations": result.outer_iterations,
        "options": asdict(result.options),
        "provider_profit": round_decimal(result.settlement.total_provider_profit),
        "utility_profit": round_decimal(result.settlement.total_utility_profit),
        "prosumers": prosumers,
        "event_hours_by_utility_profit": ranked,
        "max_nash_improvement": None,
    }
    if result.nash_report is not None:
        data["max_nash_improvement"] = round_decimal(result.nash_report.max_improvement)
    return data


def states_from_artifacts(scenario, out_dir, opts):
    """
    Rebuild the final prosumer states of a run from dr_schedule.csv and
    prices.csv.
    @raise OSError: an artifact is missing
    @raise ValidationError: the artifacts do not belong to this scenario
    """
    schedule = _read_csv(os.path.join(out_dir, "dr_schedule.csv"))
    prices = _read_csv(os.path.join(out_dir, "prices.csv"))
    expected = scenario.n * scenario.horizon
    problems = []
    for name, frame in (("dr_schedule.csv", schedule), ("prices.csv", prices)):
        if len(frame) != expected:
            problems.append((name, "ROW_COUNT_MISMATCH (expected {}, found {})".format(expected, len(frame))))
    if problems:
        raise ValidationError(problems, prefix="Run artifacts do not match the scenario: ")

    dr = np.zeros((scenario.n, scenario.horizon))
    quotes = [[None] * scenario.horizon for _ in range(scenario.n)]
    try:
        for row in schedule.itertuples(index=False):
            dr[scenario.prosumer_index(row.prosumer), int(row.hour)] = float(row.dr_kw)
        for row in prices.itertuples(index=False):
            t = int(row.hour)
            quotes[scenario.prosumer_index(row.prosumer)][t] = PriceQuote(
                hour=t, sdr=float(row.sdr), lambda_pv=float(row.lambda_pv), lambda_dr=float(row.lambda_dr),
            )
    except (KeyError, IndexError, ValueError, AttributeError) as e:
        raise ValidationError([("", "UNREADABLE_ROW ({})".format(e))], prefix="Run artifacts do not match the scenario: ") from e
    if any(q is None for row in quotes for q in row):
        raise ValidationError([("prices.csv", "HOUR_MISSING")], prefix="Run artifacts do not match the scenario: ")

    theta = theta_matrix(dr, opts.eps_reg)
    return tuple(ProsumerState.from_dr(spec, dr[i], theta[i], quotes[i]) for i, spec in enumerate(scenario.prosumers))


def _options_from_summary(out_dir):
    with open(os.path.join(out_dir, "summary.json"), encoding="utf-8") as f:
        try:
            stored = json.load(f).get("options", {})
        except (ValueError, AttributeError) as e:
            raise ValidationError([("summary.json", "UNREADABLE_SUMMARY ({})".format(e))], prefix="Run artifacts do not match the scenario: ") from e
    if not isinstance(stored, dict):
        raise ValidationError([("summary.json", "OPTIONS_NOT_AN_OBJECT")], prefix="Run artifacts do not match the scenario: ")
    known = SolveOptions.__dataclass_fields__
    return SolveOptions(**{key: value for key, value in stored.items() if key in known})


def cmd_validate(args):
    scenario = load_scenario(args.scenario)
    print("OK: {} prosumer(s), horizon {}, {} event hour(s)".format(scenario.n, scenario.horizon, len(scenario.event_hours)))
    return EXIT_OK


def cmd_run(args):
    scenario = load_scenario(args.scenario)
    opts = _solve_options(args)
    result = run(scenario, opts)
    write_artifacts(scenario, result, args.out)
    if not result.converged:
        print("No convergence after {} outer iterations; artifacts written to {}".format(opts.max_outer, args.out), file=sys.stderr)
        return EXIT_NOT_CONVERGED
    print("Converged after {} outer iterations; artifacts written to {}".format(result.outer_iterations, args.out))
    return EXIT_OK


def cmd_verify(args):
    scenario = load_scenario(args.scenario)
    opts = _options_from_summary(args.out)
    states = states_from_artifacts(scenario, args.out, opts)
    report = nash_gaps(scenario, states, opts)

    rows = []
    for i, pid in enumerate(report.prosumer_ids):
        for t in range(scenario.horizon):
            rows.append([pid, t, fmt(states[i].dr[t]), fmt(report.best_deviation[i, t]), fmt(report.improvements[i, t])])
    _write_csv(rows, NASH_REPORT_COLUMNS, os.path.join(args.out, "nash_report.csv"))

    if report.max_improvement > opts.eps2:
        print("Not an equilibrium: a prosumer can save {:.6f} by deviating".format(report.max_improvement), file=sys.stderr)
        return EXIT_INVALID
    print("Nash equilibrium: max unilateral improvement {:.6f}".format(report.max_improvement))
    return EXIT_OK


def _add_solver_flags(parser):
    defaults = SolveOptions()
    parser.add_argument("--max-outer", type=int, default=defaults.max_outer)
    parser.add_argument("--max-inner", type=int, default=defaults.max_inner)
    parser.add_argument("--damping", type=float, default=defaults.damping)
    parser.add_argument("--eps1", type=float, default=defaults.eps1, help="DR convergence threshold (kW)")
    parser.add_argument("--eps2", type=float, default=defaults.eps2, help="provider profit convergence threshold ($)")
    parser.add_argument("--eps3", type=float, default=defaults.eps3, help="utility profit convergence threshold ($)")
    parser.add_argument("--eps-reg", type=float, default=defaults.eps_reg)
    parser.add_argument("--inner-tol", type=float, default=defaults.inner_tol)
    parser.add_argument("--deviation-grid", type=int, default=defaults.deviation_grid)
    parser.add_argument("--single-sweep", action="store_true", help="one inner sweep per outer iteration")
    parser.add_argument("--aggregate-convergence", action="store_true", help="compare daily profit totals")
    parser.add_argument("--uncoupled", action="store_true", help="drop the competition term from the inconvenience cost")


def build_parser():
    parser = argparse.ArgumentParser(prog="drnash", description="Demand-response equilibrium simulator")
    parser.add_argument("--version", action="version", version="%(prog)s " + version)
    parser.add_argument("-v", "--verbose", action="store_true", help="log every outer iteration")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="solve a scenario and write result tables")
    p.add_argument("scenario")
    p.add_argument("--out", required=True)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="check a finished run for profitable unilateral deviations")
    p.add_argument("scenario")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    try:
        return args.func(args)
    except ScenarioFormatError as e:
        print(str(e), file=sys.stderr)
        return EXIT_INVALID
    except ValidationError as e:
        for field, rule in e.problems:
            print("{}: {}".format(field or "scenario", rule), file=sys.stderr)
        return EXIT_INVALID
    except DomainError as e:
        print(str(e), file=sys.stderr)
        return EXIT_INVALID
    except OSError as e:
        logger.error("I/O error: %s", e)
        print("I/O error: {}".format(e), file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
