"""Kill a fraction of couplers and compare region allocation with a calibration-blind compiler.

    python scripts/dead_link.py --fraction 0.05 --seed 0
"""

import argparse

from qvmpool.calibration import generate_heavy_hex
from qvmpool.cli import PROFILES
from qvmpool.experiments import dead_link_study


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--profile", choices=sorted(PROFILES), default="kingston")
    ap.add_argument("--fraction", type=float, default=0.05)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--shots", type=int, default=1024)
    args = ap.parse_args()

    snap = generate_heavy_hex(7, 3, PROFILES[args.profile])
    res = dead_link_study(snap, args.fraction, args.seed, shots=args.shots)
    print(f"dead couplers ({len(res.killed)}): {res.killed}")
    print(f"regions: {res.n_regions}, containing dead edges: {res.regions_with_dead_edges}")
    print(f"infeasible <=4-qubit circuits: {res.infeasible or 'none'}")
    print(f"dead couplers used by routed circuits: {res.dead_edges_traversed}")
    for name in res.baseline:
        print(f"{name:<14} blind F={res.baseline[name]:.3f}  allocated F={res.allocated[name]:.3f}")


if __name__ == "__main__":
    main()
