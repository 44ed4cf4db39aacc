"""Stochastic-block-model datasets, file IO and stratified splits."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .graph import Graph, GraphError, build_graph, read_edge_list, write_edge_list


class DatasetError(ValueError):
    pass


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SbmConfig:
    num_nodes: int = 1000
    num_classes: int = 2
    proportions: tuple | None = None  # None -> balanced
    p_in: float = 0.01
    p_out: float = 0.04
    feature_dim: int = 16
    mu: float = 1.0
    sigma: float = 1.0
    seed: int = 0
    require_connected: bool = True
    max_attempts: int = 100

    def class_proportions(self) -> np.ndarray:
        if self.proportions is None:
            return np.full(self.num_classes, 1.0 / self.num_classes)
        return np.asarray(self.proportions, dtype=float)

    def validate(self) -> None:
        if self.num_nodes < 2 or self.num_classes < 1:
            raise DatasetError("need at least two nodes and one class")
        for name in ("p_in", "p_out"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DatasetError(f"{name}={v} outside [0, 1]")
        props = self.class_proportions()
        if len(props) != self.num_classes or np.any(props < 0) or abs(props.sum() - 1.0) > 1e-9:
            raise DatasetError(f"proportions {props.tolist()} must be {self.num_classes} non-negative values summing to 1")
        if self.feature_dim < self.num_classes:
            raise DatasetError("feature_dim must be at least num_classes (one-hot class means)")
        if self.sigma < 0:
            raise DatasetError("sigma must be non-negative")

    def class_sizes(self) -> np.ndarray:
        """Largest-remainder apportionment of ``num_nodes``."""
        raw = self.class_proportions() * self.num_nodes
        sizes = np.floor(raw).astype(int)
        order = np.argsort(-(raw - sizes), kind="stable")
        sizes[order[: self.num_nodes - sizes.sum()]] += 1
        return sizes

    def expected_edge_counts(self) -> tuple[float, float]:
        sizes = self.class_sizes().astype(float)
        intra_pairs = float(np.sum(sizes * (sizes - 1) / 2))
        total_pairs = self.num_nodes * (self.num_nodes - 1) / 2
        return self.p_in * intra_pairs, self.p_out * (total_pairs - intra_pairs)

    def expected_homophily(self) -> float:
        intra, inter = self.expected_edge_counts()
        return intra / (intra + inter) if intra + inter else float("nan")


@dataclass
class Dataset:
    graph: Graph
    features: np.ndarray
    labels: np.ndarray
    train_mask: np.ndarray = field(default=None)
    val_mask: np.ndarray = field(default=None)
    test_mask: np.ndarray = field(default=None)

    def __post_init__(self):
        n = self.graph.num_nodes
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[0] != n:
            raise DatasetError(f"features must have {n} rows, got shape {self.features.shape}")
        if self.labels.shape != (n,):
            raise DatasetError(f"need {n} labels, got {self.labels.shape[0]}")
        for name in ("train_mask", "val_mask", "test_mask"):
            m = getattr(self, name)
            setattr(self, name, np.zeros(n, bool) if m is None else np.asarray(m, bool))

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    def edge_homophily(self) -> float:
        e = self.graph.edges
        if not len(e):
            return float("nan")
        return float(np.mean(self.labels[e[:, 0]] == self.labels[e[:, 1]]))


def _sample_edges(rng, labels, p_in, p_out) -> np.ndarray:
    n = len(labels)
    chunks = []
    for i in range(n - 1):
        j = np.arange(i + 1, n)
        prob = np.where(labels[j] == labels[i], p_in, p_out)
        hit = j[rng.random(n - i - 1) < prob]
        if len(hit):
            chunks.append(np.stack([np.full(len(hit), i), hit], axis=1))
    return np.concatenate(chunks) if chunks else np.zeros((0, 2), np.int64)


def generate_sbm(config: SbmConfig) -> Dataset:
    """Sample an SBM graph with class-conditioned Gaussian features.

    Labels are a seeded permutation of the class blocks. Features are
    ``mu * onehot(class) + sigma * N(0, I)``. With ``require_connected`` the
    whole draw is repeated (up to ``max_attempts`` times) until the graph is
    connected.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    sizes = config.class_sizes()
    for _ in range(config.max_attempts):
        labels = rng.permutation(np.repeat(np.arange(config.num_classes), sizes))
        edges = _sample_edges(rng, labels, config.p_in, config.p_out)
        g = build_graph(config.num_nodes, edges)
        if not config.require_connected or g.is_connected():
            break
    else:
        raise GenerationError(
            f"no connected graph in {config.max_attempts} attempts "
            f"(p_in={config.p_in}, p_out={config.p_out})"
        )
    means = np.zeros((config.num_classes, config.feature_dim))
    means[np.arange(config.num_classes), np.arange(config.num_classes)] = config.mu
    noise = rng.standard_normal((config.num_nodes, config.feature_dim))
    features = means[labels] + config.sigma * noise
    return Dataset(g, features, labels)


# -- file formats -----------------------------------------------------------------


def save_dataset(ds: Dataset, directory, prefix: str = "") -> dict[str, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "edges": directory / f"{prefix}edges.txt",
        "features": directory / f"{prefix}features.csv",
        "labels": directory / f"{prefix}labels.csv",
    }
    write_edge_list(ds.graph, paths["edges"])
    with open(paths["features"], "w", encoding="utf-8", newline="") as fh:
        for row in ds.features:
            fh.write(",".join(f"{v:.12g}" for v in row) + "\n")
    with open(paths["labels"], "w", encoding="utf-8", newline="") as fh:
        for i, c in enumerate(ds.labels):
            fh.write(f"{i},{c}\n")
    return paths


def read_features(path) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: non-numeric feature value") from None
            if len(rows[-1]) != len(rows[0]):
                raise DatasetError(f"{path}:{lineno}: expected {len(rows[0])} columns, got {len(rows[-1])}")
    if not rows:
        raise DatasetError(f"{path}: no feature rows")
    return np.array(rows, dtype=np.float64)


def read_labels(path, num_nodes: int) -> np.ndarray:
    labels = np.full(num_nodes, -1, dtype=np.int64)
    count = 0
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row:
                continue
            try:
                node, cls = int(row[0]), int(row[1])
            except (ValueError, IndexError):
                raise DatasetError(f"{path}:{lineno}: expected 'node_id,class_id'") from None
            if not 0 <= node < num_nodes:
                raise DatasetError(f"{path}:{lineno}: node {node} outside [0, {num_nodes})")
            if cls < 0:
                raise DatasetError(f"{path}:{lineno}: negative class id")
            if labels[node] >= 0:
                raise DatasetError(f"{path}:{lineno}: duplicate label for node {node}")
            labels[node] = cls
            count += 1
    if count != num_nodes:
        raise DatasetError(f"{path}: {count} labels for {num_nodes} feature rows")
    return labels


def load_dataset(edge_path, feature_path, label_path) -> Dataset:
    """Read the three dataset files; split masks start empty."""
    features = read_features(feature_path)
    n = features.shape[0]
    try:
        graph = read_edge_list(edge_path, num_nodes=n)
    except GraphError as exc:
        raise DatasetError(str(exc)) from exc
    return Dataset(graph, features, read_labels(label_path, n))


# -- splitting ---------------------------------------------------------------------


def split(ds: Dataset, ratios=(0.1, 0.1, 0.8), seed: int = 0) -> Dataset:
    """Stratified train/val/test masks.

    Per class, ``round(ratio * n_class)`` nodes go to each bin; when the
    ratios sum to one the test bin takes the remainder. Returns a new
    Dataset sharing graph and features.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r < 0 for r in ratios) or sum(ratios) > 1 + 1e-12:
        raise DatasetError(f"ratios {ratios} must be three non-negative values summing to at most 1")
    if not all(r > 0 for r in ratios[:2]):
        raise DatasetError("train and validation ratios must be positive")
    fill_test = abs(sum(ratios) - 1.0) < 1e-12
    rng = np.random.default_rng(seed)
    n = ds.graph.num_nodes
    masks = [np.zeros(n, bool) for _ in range(3)]
    bins = sum(r > 0 for r in ratios)
    for c in np.unique(ds.labels):
        members = np.flatnonzero(ds.labels == c)
        if len(members) < bins:
            raise DatasetError(f"class {c} has {len(members)} nodes, fewer than {bins} split bins")
        members = rng.permutation(members)
        counts = [max(1, int(round(r * len(members)))) if r > 0 else 0 for r in ratios]
        if fill_test or counts[0] + counts[1] + counts[2] > len(members):
            counts[2] = len(members) - counts[0] - counts[1]
        if counts[2] < (1 if ratios[2] > 0 else 0):
            raise DatasetError(f"class {c} too small for ratios {ratios}")
        start = 0
        for m, cnt in zip(masks, counts):
            m[members[start : start + cnt]] = True
            start += cnt
    return replace(ds, train_mask=masks[0], val_mask=masks[1], test_mask=masks[2])
