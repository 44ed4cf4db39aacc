"""Learned per-edge coefficients split by intra- and inter-class edges, per scale."""

import numpy as np

from _common import base_parser, dataset, train_config, write_csv
from msgs_lab import trainer


def main():
    p = base_parser(__doc__)
    p.add_argument("--layers", type=int, default=2)
    args = p.parse_args()
    ds = dataset(args)
    rows = []
    for seed in range(args.seeds):
        res = trainer.train(ds, train_config(args, model="msgs", layers=args.layers, seed=seed))
        _, art = trainer.predict(res.params, ds)
        intra = ds.labels[art.src] == ds.labels[art.dst]
        for scale, beta in enumerate(art.edge_coeffs):
            for name, sel in (("intra", intra), ("inter", ~intra)):
                b = beta[sel]
                rows.append([seed, scale, name, len(b), f"{b.mean():.6f}", f"{np.mean(b < 0):.4f}"])
                print(*rows[-1])
    write_csv(args.out / "edge_signs.csv",
              ["seed", "scale", "edge_class", "count", "mean_beta", "negative_fraction"], rows)


if __name__ == "__main__":
    main()
