"""Shared setup for the experiment scripts."""

import argparse
import csv
from pathlib import Path

from msgs_lab.datagen import SbmConfig, generate_sbm, split
from msgs_lab.trainer import TrainConfig


def base_parser(description: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--nodes", type=int, default=1000)
    p.add_argument("--p-in", type=float, default=0.004)
    p.add_argument("--p-out", type=float, default=0.016)
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--seeds", type=int, default=5, help="number of training seeds")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--hidden", type=int, default=16)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("results"))
    return p


def dataset(args, p_in=None, p_out=None):
    cfg = SbmConfig(num_nodes=args.nodes, p_in=args.p_in if p_in is None else p_in,
                    p_out=args.p_out if p_out is None else p_out, seed=args.data_seed)
    return split(generate_sbm(cfg), (0.1, 0.1, 0.8), seed=0)


def train_config(args, **kw) -> TrainConfig:
    return TrainConfig(hidden=args.hidden, epochs=args.epochs, **kw)


def write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {path}")
