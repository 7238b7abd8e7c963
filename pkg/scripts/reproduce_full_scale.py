"""Offline full-scale runs on UTD-MHAD and MMAct (not part of CI).

Needs the datasets under ``--data-root`` (or ``MMHAR_DATA_ROOT``) and the
Kinetics-400 S3D state dict at ``--weights``. Prints the comparison table
of both runs when done.

    python3 scripts/reproduce_full_scale.py --data-root /data --weights weights/s3d-d76dad2f.pth
"""
import argparse
import json
import sys
from pathlib import Path

from mmhar.cli import EXIT_OK, run_experiment
from mmhar.reporting import compare_runs

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def main():
    parser = argparse.ArgumentParser(description="full-scale UTD-MHAD and MMAct training")
    parser.add_argument("--data-root", required=True, help="directory holding UTD-MHAD/ and MMAct/")
    parser.add_argument("--weights", required=True, help="S3D Kinetics-400 state dict (.pth)")
    parser.add_argument("--output", default="runs/full_scale")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    out = Path(args.output)
    runs = []
    for name, config, sub in (("utd_mhad", "utd_mhad_fused.json", "UTD-MHAD"), ("mmact", "mmact_fused.json", "MMAct")):
        overrides = [f"data.root={json.dumps(str(Path(args.data_root) / sub))}",
                     f"model.video.weights_path={json.dumps(args.weights)}"]
        code = run_experiment(CONFIGS / config, overrides, args.seed, out / name)
        if code != EXIT_OK:
            return code
        runs.append(out / name)
    _, text = compare_runs(runs, out / "comparison")
    print(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
