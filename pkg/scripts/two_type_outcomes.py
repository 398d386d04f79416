"""Two-type community: centralized, equilibrium and distributed outcomes.

    python scripts/two_type_outcomes.py [--seeds 20] [--out two_type.csv]
"""
import argparse
import csv
import statistics
from pathlib import Path

from energyshare.cli import load_scenario
from energyshare.distalg import CapPolicy, run_distributed
from energyshare.efficiency import compute_poa
from energyshare.equilibrium import social_cost_pa
from energyshare.model import expected_demands

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default=ROOT / "scenarios" / "two_type.toml")
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--out")
    args = ap.parse_args()

    s = load_scenario(args.scenario)
    rep = compute_poa(s, "pa")
    rows = [
        ("centralized", rep.central_cost, expected_demands(s, rep.central_profile)[0], 1.0, ""),
        ("worst NE", rep.worst_ne_cost, rep.day_demand_ne, rep.poa, ""),
        ("best NE", rep.best_ne_cost, rep.day_demand_ne, rep.best_ne_cost / rep.central_cost, ""),
    ]
    for cap in ("none", "equal:0.1", "equal:0.5", "random"):
        runs = [run_distributed(s, CapPolicy.parse(cap), seed) for seed in range(args.seeds)]
        costs = [social_cost_pa(s, r.final_profile).total for r in runs]
        demands = [expected_demands(s, r.final_profile)[0] for r in runs]
        steps = [r.steps_used for r in runs]
        cost = statistics.mean(costs)
        rows.append((f"distributed cap={cap}", cost, statistics.mean(demands),
                     cost / rep.central_cost, f"{min(steps)}-{max(steps)}"))

    print(f"{'mechanism':<26}{'cost':>14}{'day demand':>12}{'PoA':>8}  steps")
    for name, cost, demand, poa, steps in rows:
        print(f"{name:<26}{cost:>14.6g}{demand:>12.1f}{poa:>8.4f}  {steps}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["mechanism", "cost", "day_demand", "poa", "steps"])
            w.writerows(rows)


if __name__ == "__main__":
    main()
