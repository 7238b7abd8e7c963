"""Pick the synthetic noise level before any benchmark run.

For each candidate noise_std, prints the nearest-template oracle accuracy
on the test split for both modalities and each one alone. With --train it
also trains the fused pipeline at the smallest and full training ratio, so
the chosen level keeps the low-data end of the ratio sweep learnable.

    python3 scripts/calibrate_noise.py --noise 0.25 0.35 0.5 1.0 --train
"""
import argparse

import torch

from mmhar.config import resolve_config
from mmhar.data import IMU, VIDEO
from mmhar.data.synthetic import nearest_template_accuracy
from mmhar.evaluation import FUSED
from mmhar.experiments import load_datasets, run_data_ratio_sweep, synthetic_spec


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--noise", type=float, nargs="+", default=[0.25, 0.35, 0.5, 0.75, 1.0, 1.5, 2.0])
    parser.add_argument("--train", action="store_true", help="also train fused models at ratios 0.25 and 1.0")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    torch.set_num_threads(1)

    header = f"{'noise':>6} {'oracle_both':>11} {'oracle_imu':>11} {'oracle_vid':>11}"
    if args.train:
        header += f" {'fused@0.25':>11} {'fused@1.0':>11}"
    print(header)
    for noise in args.noise:
        cfg = resolve_config({}, [f"data.synthetic.noise_std={noise}"])
        train, test = load_datasets(cfg)
        spec = synthetic_spec(cfg)
        row = f"{noise:>6.2f} " + " ".join(
            f"{nearest_template_accuracy(spec, test, m):>11.3f}" for m in ((IMU, VIDEO), (IMU,), (VIDEO,)))
        if args.train:
            reports = run_data_ratio_sweep(cfg, [0.25, 1.0], [args.seed], train, test)
            fused = {r.ratio: r.top1 for r in reports if r.condition == FUSED}
            row += f" {fused[0.25]:>11.3f} {fused[1.0]:>11.3f}"
        print(row, flush=True)


if __name__ == "__main__":
    main()
