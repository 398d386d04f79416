"""Command line entry point: load a scenario file, solve, emit CSV rows.

Scenario files are TOML::

    n_consumers = 500
    re_ratio = 0.25            # or res_capacity = <kWh>, not both
    [tariffs]
    c_res = 100
    beta = 2
    gamma = 4
    [[types]]                  # type ids are the order of appearance
    day_demand = 100
    share = 0.7
    inv_risk = 1.0             # optional, default 1
    [epsilon_calibration]      # optional, overwrites inv_risk
    base_type = 0
    base_epsilon = 1.0
    policy = "pa"              # optional, "pa" or "es"

Exit codes: 0 success, 2 usage, 3 invalid input, 4 no equilibrium.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields, replace
from pathlib import Path

from .central import OptimizerConfig, solve_central
from .distalg import CapPolicy, run_distributed, write_trace
from .equilibrium import NoEquilibriumError, select_ne_profile, social_cost, solve_ne
from .model import (CalibrationError, EpsilonCalibration, Scenario, ScenarioError,
                    expected_demands, total_day_demand, validate_scenario, with_ratio,
                    with_res_capacity)

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NO_NE = 0, 2, 3, 4
MECHANISMS = ("central", "ne_worst", "ne_best", "distributed")
SELECTOR_NAMES = {"worst": "worst_cost", "best": "best_cost", "midpoint": "midpoint"}


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class SweepRow:
    re_ratio: float
    policy: str
    mechanism: str
    cost_total: float
    cost_res: float
    cost_day_grid: float
    cost_night: float
    demand_day: float
    poa: float
    ne_case: str
    steps: int | None = None
    seed: int | None = None


FIELDS = tuple(f.name for f in fields(SweepRow))


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(str(path), f"parse error: {exc}") from None

    has_cap, has_ratio = "res_capacity" in doc, "re_ratio" in doc
    if has_cap and has_ratio:
        raise ScenarioError("res_capacity/re_ratio", "give exactly one of the two, not both")
    if not (has_cap or has_ratio):
        raise ScenarioError("res_capacity/re_ratio", "missing")
    unknown = set(doc) - {"n_consumers", "tariffs", "types", "res_capacity", "re_ratio",
                          "epsilon_calibration"}
    if unknown:
        raise ScenarioError(sorted(unknown)[0], "unknown field")

    raw = {k: doc[k] for k in ("n_consumers", "tariffs") if k in doc}
    raw["types"] = [dict(row, index=k) for k, row in enumerate(doc.get("types", []))]
    raw["res_capacity"] = doc.get("res_capacity", 0.0)
    s = validate_scenario(raw)

    cal = doc.get("epsilon_calibration")
    if cal is not None:
        try:
            cal = EpsilonCalibration(int(cal["base_type"]), float(cal["base_epsilon"]),
                                     str(cal.get("policy", "pa")))
        except KeyError as exc:
            raise ScenarioError(f"epsilon_calibration.{exc.args[0]}", "missing") from None
        if cal.base_type not in s.type_ids:
            raise ScenarioError("epsilon_calibration.base_type",
                                f"no type {cal.base_type}")
        if cal.policy not in ("pa", "es"):
            raise ScenarioError("epsilon_calibration.policy", f"unknown policy {cal.policy!r}")
        s = replace(s, calibration=cal)

    if has_ratio:
        ratio = float(doc["re_ratio"])
        if not ratio >= 0:
            raise ScenarioError("re_ratio", f"must be non-negative, got {ratio}")
        return at_ratio(s, ratio)
    return _calibrated(with_res_capacity, s, s.res_capacity)


def _calibrated(fn, s: Scenario, value: float) -> Scenario:
    try:
        return fn(s, value)
    except CalibrationError:
        raise
    except ValueError as exc:
        raise ScenarioError("epsilon_calibration", str(exc)) from None


def at_ratio(s: Scenario, ratio: float) -> Scenario:
    """``s`` at RE = ratio * D_total, with calibration errors as input errors."""
    return _calibrated(with_ratio, s, ratio)


def parse_sweep(text: str) -> list[float]:
    """``start:stop:step`` with ``stop`` included."""
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise UsageError(f"--sweep-re expects start:stop:step, got {text!r}") from None
    if not step > 0 or stop < start:
        raise UsageError(f"empty sweep range {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    ratios = [round(start + i * step, 12) for i in range(count)]
    if ratios[0] <= 0 or ratios[-1] > 1.5:
        raise UsageError(f"sweep ratios must lie in (0, 1.5], got {text!r}")
    return ratios


@dataclass(frozen=True)
class SolveJob:
    scenario: Scenario
    policy: str
    mechanisms: tuple[str, ...]
    selector: str
    cap: CapPolicy
    seed: int
    n_step: int
    tol: float
    cfg: OptimizerConfig
    strict: bool  # raise on a missing equilibrium instead of skipping rows


def _row(s, policy, mechanism, profile, central_units, ne_case, steps=None, seed=None):
    cost = social_cost(s, profile, policy)
    demand, _ = expected_demands(s, profile)
    nums = (s.res_capacity / total_day_demand(s), cost.total, cost.res_cost,
            cost.day_grid_cost, cost.night_cost, demand, cost.units / central_units)
    ratio, total, res, grid, night, demand, poa = (float(v) for v in nums)
    return SweepRow(ratio, policy, mechanism, total, res, grid, night, demand, poa,
                    ne_case, steps, seed)


def solve_point(job: SolveJob) -> tuple[list[SweepRow], object]:
    """Rows for one scenario point, plus the distributed run if any."""
    s, policy = job.scenario, job.policy
    central = solve_central(s, policy, job.cfg)
    sol = solve_ne(s, policy)
    rows, run = [], None
    for mech in job.mechanisms:
        if mech == "central":
            rows.append(_row(s, policy, mech, central.profile, central.cost.units, sol.case_label))
        elif mech.startswith("ne_"):
            if not sol.has_equilibrium:
                if job.strict:
                    raise NoEquilibriumError(
                        f"{policy}: equilibrium condition fails between types {sol.offending}")
                continue
            selector = SELECTOR_NAMES[mech[3:]] if mech in ("ne_worst", "ne_best") else job.selector
            profile = select_ne_profile(sol, s, selector)
            rows.append(_row(s, policy, mech, profile, central.cost.units, sol.case_label))
        else:
            run = run_distributed(s, job.cap, job.seed, job.n_step, job.tol)
            rows.append(_row(s, policy, mech, run.final_profile, central.cost.units,
                             sol.case_label, run.steps_used, job.seed))
    return rows, run


def format_rows(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIELDS)
    for row in rows:
        w.writerow(["" if v is None else repr(v) if isinstance(v, float) else v
                    for v in astuple(row)])
    return buf.getvalue()


def parse_rows(text: str) -> list[SweepRow]:
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        out.append(SweepRow(
            float(rec["re_ratio"]), rec["policy"], rec["mechanism"],
            *(float(rec[k]) for k in FIELDS[3:9]), rec["ne_case"],
            int(rec["steps"]) if rec["steps"] else None,
            int(rec["seed"]) if rec["seed"] else None))
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="energyshare",
                                 description="Energy sharing game: equilibria, optimum, PoA.")
    sub = ap.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("solve", help="solve one scenario or sweep the RES ratio")
    sp.add_argument("scenario", help="scenario TOML file")
    sp.add_argument("--policy", choices=("pa", "es"), default="pa")
    sp.add_argument("--mechanism", choices=MECHANISMS + ("ne", "all"), default="ne_worst",
                    help="'ne' uses --selector, 'all' emits every mechanism")
    sp.add_argument("--selector", choices=tuple(SELECTOR_NAMES), default="worst")
    sp.add_argument("--cap", default="none", help="none | random | equal:<v>")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--steps", type=int, default=1000, help="step budget of the distributed run")
    sp.add_argument("--tol", type=float, default=1e-4)
    sp.add_argument("--out", help="write CSV here instead of standard output")
    sp.add_argument("--sweep-re", help="start:stop:step over RE / D_total, stop included")
    sp.add_argument("--grid", type=int, default=21, help="per-axis grid of the ES optimizer")
    sp.add_argument("--trace", help="write the distributed run's per-update trace CSV")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    return ap


def _fail(code: int, kind: str, message: str, **extra) -> int:
    print(json.dumps({"error": kind, "message": message, **extra}), file=sys.stderr)
    return code


def cmd_solve(args: argparse.Namespace) -> int:
    try:
        cap = CapPolicy.parse(args.cap)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.seed < 0 or args.steps < 1 or not args.tol > 0 or args.grid < 2 or args.jobs < 1:
        raise UsageError("--seed >= 0, --steps >= 1, --tol > 0, --grid >= 2 and --jobs >= 1")
    if args.mechanism == "all":
        # the distributed algorithm is only defined under proportional allocation
        mechanisms = MECHANISMS if args.policy == "pa" else MECHANISMS[:3]
    else:
        mechanisms = (
            f"ne_{args.selector}" if args.mechanism == "ne" else args.mechanism,)
    if "distributed" in mechanisms and args.policy != "pa":
        raise UsageError("the distributed algorithm is defined for proportional allocation only")
    ratios = parse_sweep(args.sweep_re) if args.sweep_re else None
    if args.trace and ratios:
        raise UsageError("--trace needs a single scenario point, not a sweep")

    s = load_scenario(args.scenario)
    points = [s] if ratios is None else [at_ratio(s, r) for r in ratios]
    cfg = OptimizerConfig(grid=args.grid)
    jobs = [SolveJob(p, args.policy, mechanisms, SELECTOR_NAMES[args.selector], cap, args.seed,
                     args.steps, args.tol, cfg, strict=ratios is None) for p in points]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(solve_point, jobs))
    else:
        results = [solve_point(j) for j in jobs]
    rows = [row for part, _ in results for row in part]
    skipped = [p.res_capacity / total_day_demand(p) for p, (part, _) in zip(points, results)
               if len(part) < len(mechanisms)]
    if skipped:
        print(json.dumps({"warning": "no_equilibrium", "re_ratios": skipped}), file=sys.stderr)

    text = format_rows(rows)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        sys.stdout.write(text)
    if args.trace:
        run = results[0][1]
        if run is None:
            raise UsageError("--trace needs --mechanism distributed or all")
        write_trace(run, args.trace)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return cmd_solve(args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", str(exc))
    except ScenarioError as exc:
        return _fail(EXIT_INVALID, "invalid_scenario", str(exc), field=exc.field)
    except (CalibrationError, OSError) as exc:
        return _fail(EXIT_INVALID, "invalid_scenario", str(exc))
    except NoEquilibriumError as exc:
        return _fail(EXIT_NO_NE, "no_equilibrium", str(exc))


if __name__ == "__main__":
    sys.exit(main())
