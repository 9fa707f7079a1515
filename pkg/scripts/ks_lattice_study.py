"""How often does the n = 1e4, t = 1 two-sample KS reject, and why?

Runs converge-dist over a range of seeds and tallies rejections at the 1%
level for the raw scaled counts and for the lattice-spread version (each atom
of N_t / n**exp(-t) spread uniformly over its cell). Also prints the largest
atom mass, which by itself puts a floor of half its size under the KS distance.

    python scripts/ks_lattice_study.py --seeds 20
"""

import argparse

import numpy as np

from bsml.harness import make_config, run_experiment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--first-seed", type=int, default=100)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    raw, spread, atoms = [], [], []
    for seed in range(args.first_seed, args.first_seed + args.seeds):
        cfg = make_config("converge-dist", seed=seed, n_list=[10_000], jobs=args.jobs)
        rows = {r.statistic: r for r in run_experiment(cfg).rows}
        raw.append(rows["ks_pvalue"].estimate)
        spread.append(rows["lattice_spread_ks_pvalue"].estimate)
        atoms.append(rows["lattice_atom_max"].estimate)
        print(f"seed {seed:4d}  raw p={raw[-1]:.4f}  spread p={spread[-1]:.4f}  largest atom={atoms[-1]:.4f}")
    raw, spread = np.array(raw), np.array(spread)
    crit = 1.6276 * np.sqrt(2 / 10_000)  # asymptotic 1% two-sample critical value
    print(f"raw rejects {np.sum(raw < 0.01)}/{raw.size}; spread rejects {np.sum(spread < 0.01)}/{spread.size}")
    print(f"mean largest atom {np.mean(atoms):.4f} vs 1% critical KS distance {crit:.4f}")


if __name__ == "__main__":
    main()
