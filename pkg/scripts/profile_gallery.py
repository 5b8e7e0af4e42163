#!/usr/bin/env python3
"""Shoot the three canonical 1D profiles and print their classification.

Writes the plot-ready panels (ramp slope above, at, and below 1) and a JSON
report under --out.
"""

import argparse
import json

from onephase_lab.config import ExperimentConfig
from onephase_lab.experiments import run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/profile_gallery")
    ap.add_argument("--halfwidth", type=float, default=30.0)
    args = ap.parse_args()

    cfg = ExperimentConfig(experiment="figure1", out_dir=args.out, halfwidth=args.halfwidth)
    report = run(cfg)
    for name, row in report.results["panels"].items():
        defect = row["case_defect"]
        print(f"{name}: a = {row['a']:.9f}, b = {row['b']:.9f}, defect = {defect:.3e}")
    print(json.dumps(report.timings))
    print(f"panels written to {args.out}/fig_case_*.dat")


if __name__ == "__main__":
    main()
