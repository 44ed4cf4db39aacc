"""Low-pass contraction and high-pass expansion of neighbour feature distances.

Uses a ring lattice with Gaussian and class-block features and reports the
fraction of edges whose endpoint distance shrinks (beta > 0) or grows (beta < 0)
after one step of (alpha I + beta D^-1/2 A D^-1/2).
"""

import argparse

import numpy as np

from msgs_lab.graph import ring_lattice
from msgs_lab.spectral import pair_distance_ratios


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--nodes", type=int, default=1000)
    p.add_argument("--degree", type=int, default=4)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    rng = np.random.default_rng(args.seed)
    g = ring_lattice(args.nodes, args.degree)
    gaussian = rng.standard_normal((args.nodes, args.dim))
    blocks = np.repeat(rng.standard_normal((args.nodes // 10 + 1, args.dim)), 10, axis=0)[: args.nodes]
    blocks += 0.1 * rng.standard_normal(blocks.shape)
    for name, x in (("gaussian", gaussian), ("blocks", blocks)):
        for alpha, beta in ((1.0, 1.0), (0.5, 0.5), (1.0, -0.9), (0.5, -0.5)):
            r = pair_distance_ratios(g, x, alpha, beta)
            r = r[np.isfinite(r)]
            print(f"{name:9s} alpha={alpha:+.2f} beta={beta:+.2f} "
                  f"contract={np.mean(r < 1):.4f} expand={np.mean(r > 1):.4f} median={np.median(r):.4f}")


if __name__ == "__main__":
    main()
