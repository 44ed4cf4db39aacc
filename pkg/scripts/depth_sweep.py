"""Test accuracy of GCN and MSGS as the number of propagation steps grows."""

from _common import base_parser, dataset, train_config, write_csv
from msgs_lab import trainer


def main():
    p = base_parser(__doc__)
    p.add_argument("--depths", default="2,4,8,16,32")
    p.add_argument("--models", default="gcn,msgs")
    args = p.parse_args()
    ds = dataset(args)
    depths = [int(k) for k in args.depths.split(",")]
    recs = trainer.depth_sweep(ds, args.models.split(","), depths, train_config(args),
                               range(args.seeds), args.workers)
    args.out.mkdir(parents=True, exist_ok=True)
    trainer.write_metrics_csv(recs, args.out / "depth_runs.csv")
    rows = [[m, k, f"{mean:.4f}", f"{std:.4f}"] for (m, k), (mean, std) in trainer.summarize(recs).items()]
    for r in rows:
        print(*r)
    write_csv(args.out / "depth_sweep.csv", ["model", "layers", "acc_mean", "acc_std"], rows)


if __name__ == "__main__":
    main()
