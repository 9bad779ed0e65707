"""Fidelity versus batch cap on a synthetic heavy-hex device.

    python scripts/batch_sweep.py --caps 2-18 --seeds 0,1,2 --out sweep.json
"""

import argparse
import json

from qvmpool.benchmarks import load_benchmarks
from qvmpool.calibration import build_graph, generate_heavy_hex
from qvmpool.cli import PROFILES
from qvmpool.noisesim import batch_sweep
from qvmpool.regions import discover


def int_list(text):
    if "-" in text:
        lo, hi = (int(x) for x in text.split("-"))
        return list(range(lo, hi + 1))
    return [int(x) for x in text.split(",")]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--profile", choices=sorted(PROFILES), default="kingston")
    ap.add_argument("--caps", type=int_list, default=list(range(2, 19)))
    ap.add_argument("--seeds", type=int_list, default=[0, 1, 2])
    ap.add_argument("--shots", type=int, default=1024)
    ap.add_argument("--out")
    args = ap.parse_args()

    graph = build_graph(generate_heavy_hex(7, 3, PROFILES[args.profile]))
    pool = discover(graph, 0)
    res = batch_sweep(pool, load_benchmarks(), args.caps, args.seeds, shots=args.shots, graph=graph)
    print(f"{'cap':>4} {'seed':>4} {'jobs':>4} {'mean F':>8}")
    for row in res["rows"]:
        print(f"{row['batch_cap']:>4} {row['seed']:>4} {row['jobs_used']:>4} {row['mean_fidelity']:>8.4f}")
    print(f"r(batch size, fidelity) per circuit = {res['pearson_r']:+.3f}")
    print(f"r(cap, mean fidelity)               = {res['pearson_r_cap_means']:+.3f}")
    if args.out:
        with open(args.out, "w") as f:
            json.dump(res, f, indent=1)


if __name__ == "__main__":
    main()
