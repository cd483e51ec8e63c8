"""Build a packing class, print its verification report, then run the detector over noise levels.

Usage: python3 scripts/packing_demo.py [--seed INT] [--trials INT]
"""

import argparse

from kronlearn.harness import ExperimentConfig, run_detector, run_packing


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--trials", type=int, default=100)
    args = ap.parse_args()

    packing = run_packing(ExperimentConfig.from_dict({"experiment": "packing", "seed": args.seed}))
    print(f"{'section':<13} {'check':<28} {'bound':>11} {'observed':>11}  status")
    for _, section, name, bound, observed, status in packing.rows:
        print(f"{section:<13} {name:<28} {bound:11.4g} {observed:11.4g}  {status}")

    det = run_detector(ExperimentConfig.from_dict(
        {"experiment": "detector", "seed": args.seed, "trials": args.trials,
         "sigma_grid": [0.01, 0.1, 0.3, 1.0, 3.0, 10.0]}))
    print(f"\n{'sigma':>7} {'error rate':>11} {'chance':>8} {'mean MSE':>10}")
    for _, sigma, _, _, rate, chance, mse in det.rows:
        print(f"{sigma:7.2f} {rate:11.3f} {chance:8.3f} {mse:10.4f}")


if __name__ == "__main__":
    main()
