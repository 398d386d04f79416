"""PoA against RES capacity for the five-type community.

Writes one CSV with a row per (curve, ratio): beta 2 and 2.5, a
risk-conservative population and the equal-sharing policy.

    python scripts/poa_curves.py --out poa_curves.csv
"""
import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

from energyshare.cli import load_scenario
from energyshare.efficiency import poa_curve
from energyshare.model import EpsilonCalibration

ROOT = Path(__file__).resolve().parents[1]


def curves(base):
    cal = base.calibration
    yield "pa beta=2", base, "pa"
    yield "pa beta=2.5", replace(base, tariffs=replace(base.tariffs, beta=2.5)), "pa"
    yield "pa eps0=1.5", replace(base, calibration=replace(cal, base_eps=1.5)), "pa"
    yield "es beta=2", replace(base, calibration=EpsilonCalibration(cal.base_type, cal.base_eps, "es")), "es"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default=ROOT / "scenarios" / "five_type.toml")
    ap.add_argument("--step", type=float, default=0.05)
    ap.add_argument("--out")
    args = ap.parse_args()

    base = load_scenario(args.scenario)
    count = int(round(1.25 / args.step))
    ratios = [round(args.step * k, 10) for k in range(1, count + 1)]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["curve", "re_ratio", "poa", "worst_ne_cost", "central_cost", "ne_case"])
    for name, s, policy in curves(base):
        for rep in poa_curve(s, ratios, policy):
            w.writerow([name, rep.re_ratio, repr(rep.poa), repr(rep.worst_ne_cost),
                        repr(rep.central_cost), rep.ne_case])
        print(f"done: {name}", file=sys.stderr)
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
