"""MSGS against its three ablated variants."""

from _common import base_parser, dataset, train_config, write_csv
from msgs_lab import trainer


def main():
    p = base_parser(__doc__)
    p.add_argument("--layers", type=int, default=10)
    args = p.parse_args()
    ds = dataset(args)
    recs = trainer.ablation_suite(ds, train_config(args, layers=args.layers), range(args.seeds), args.workers)
    rows = [[m, f"{mean:.4f}", f"{std:.4f}"] for (m, _), (mean, std) in trainer.summarize(recs).items()]
    for r in rows:
        print(*r)
    write_csv(args.out / "ablation.csv", ["variant", "acc_mean", "acc_std"], rows)


if __name__ == "__main__":
    main()
