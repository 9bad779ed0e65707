"""Quality-aware allocation versus whole-chip routing under different noise layouts.

    python scripts/heterogeneity.py --profiles bimodal,uniform,kingston
"""

import argparse

from qvmpool.cli import PROFILES
from qvmpool.experiments import heterogeneity_gap


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--profiles", default="bimodal,uniform,kingston")
    ap.add_argument("--seeds", default="0,1,2")
    ap.add_argument("--shots", type=int, default=1024)
    ap.add_argument("--max-width", type=int, default=4)
    args = ap.parse_args()
    seeds = tuple(int(s) for s in args.seeds.split(","))

    print(f"{'profile':<10} {'quality-aware':>13} {'baseline':>9} {'gap (pts)':>10}")
    for name in args.profiles.split(","):
        res = heterogeneity_gap(PROFILES[name], name, seeds, args.shots, args.max_width)
        print(f"{name:<10} {100 * res.quality_aware:>12.1f}% {100 * res.baseline:>8.1f}% {100 * res.gap:>+10.1f}")


if __name__ == "__main__":
    main()
