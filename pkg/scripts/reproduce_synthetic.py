"""Run the desk-scale synthetic experiments end to end and render the figures.

    python3 scripts/reproduce_synthetic.py --output runs/synthetic
"""
import argparse
import sys
from pathlib import Path

from mmhar.cli import EXIT_OK, run_experiment
from mmhar.reporting import emit_plots

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
RUNS = (("fused", "synthetic_fused.json"), ("ratio_sweep", "synthetic_ratio_sweep.json"),
        ("zero_shot", "synthetic_zero_shot.json"))


def main():
    parser = argparse.ArgumentParser(description="synthetic baseline, ratio sweep and zero-shot runs")
    parser.add_argument("--output", default="runs/synthetic")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    out = Path(args.output)
    for name, config in RUNS:
        print(f"== {name}", flush=True)
        code = run_experiment(CONFIGS / config, seed=args.seed, output=out / name)
        if code != EXIT_OK:
            return code
    for path in emit_plots(out, out / "figures"):
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
