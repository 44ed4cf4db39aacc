"""Undirected graphs, Laplacians and propagation matrices."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp


class GraphError(ValueError):
    """Bad graph input (index out of range, self-loop, parse failure)."""


class DegenerateGraphError(GraphError):
    """Graph is structurally unsuitable for the requested construction."""


class LaplacianKind(enum.Enum):
    COMBINATORIAL = "combinatorial"
    SYMMETRIC = "sym"
    RANDOM_WALK = "rw"


class PropagationKind(enum.Enum):
    GCN = "gcn"  # D~^-1/2 (A + I) D~^-1/2
    PLAIN = "plain"  # D^-1/2 A D^-1/2


@dataclass(frozen=True)
class Graph:
    """Simple undirected, unweighted graph.

    ``edges`` holds each undirected edge once as ``(i, j)`` with ``i < j``,
    sorted lexicographically.
    """

    num_nodes: int
    edges: np.ndarray
    adjacency: sp.csr_matrix = field(repr=False)
    degrees: np.ndarray = field(repr=False)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def directed_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Both orientations of every edge as ``(src, dst)`` index arrays.

        Ordering is by source node, then destination (CSR order).
        """
        coo = self.adjacency.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order].astype(np.int64), coo.col[order].astype(np.int64)

    def neighbors(self, i: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[i] : a.indptr[i + 1]]

    def dense_adjacency(self) -> np.ndarray:
        return self.adjacency.toarray()

    def is_connected(self) -> bool:
        if self.num_nodes == 0:
            return False
        ncomp, _ = sp.csgraph.connected_components(self.adjacency, directed=False)
        return ncomp == 1


def build_graph(num_nodes: int, edge_list, drop_self_loops: bool = False) -> Graph:
    """Build a deduplicated, symmetrised graph from a list of node pairs.

    Self-loops raise :class:`GraphError` unless ``drop_self_loops`` is set.
    """
    if num_nodes < 0:
        raise GraphError(f"num_nodes must be non-negative, got {num_nodes}")
    pairs = np.asarray(list(edge_list), dtype=np.int64).reshape(-1, 2)
    if pairs.size:
        bad = (pairs < 0) | (pairs >= num_nodes)
        if bad.any():
            row = int(np.argmax(bad.any(axis=1)))
            raise GraphError(
                f"edge {tuple(pairs[row])} has a node index outside [0, {num_nodes})"
            )
        loops = pairs[:, 0] == pairs[:, 1]
        if loops.any():
            if not drop_self_loops:
                raise GraphError(f"self-loop at node {int(pairs[loops][0, 0])}")
            pairs = pairs[~loops]
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    edges = np.unique(np.stack([lo, hi], axis=1), axis=0) if len(lo) else np.zeros((0, 2), np.int64)

    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    adj = sp.csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(num_nodes, num_nodes)
    )
    adj.sort_indices()
    degrees = np.asarray(adj.sum(axis=1)).ravel().astype(np.int64)
    return Graph(num_nodes=num_nodes, edges=edges, adjacency=adj, degrees=degrees)


def _require_no_isolated(g: Graph, what: str) -> None:
    isolated = np.flatnonzero(g.degrees == 0)
    if len(isolated):
        raise DegenerateGraphError(
            f"{what} undefined: {len(isolated)} isolated node(s), first is {isolated[0]}"
        )


def laplacian(g: Graph, kind: LaplacianKind = LaplacianKind.SYMMETRIC) -> np.ndarray:
    """Dense N x N Laplacian of the requested kind."""
    kind = LaplacianKind(kind)
    a = g.dense_adjacency()
    d = g.degrees.astype(float)
    n = g.num_nodes
    if kind is LaplacianKind.COMBINATORIAL:
        return np.diag(d) - a
    _require_no_isolated(g, f"{kind.value} Laplacian")
    if kind is LaplacianKind.SYMMETRIC:
        s = 1.0 / np.sqrt(d)
        lap = np.eye(n) - s[:, None] * a * s[None, :]
        return 0.5 * (lap + lap.T)
    return np.eye(n) - a / d[:, None]


@dataclass(frozen=True)
class PropagationMatrix:
    matrix: sp.csr_matrix
    kind: PropagationKind

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def __matmul__(self, other):
        return self.matrix @ other


def propagation_matrix(
    g: Graph, kind: PropagationKind = PropagationKind.GCN
) -> PropagationMatrix:
    kind = PropagationKind(kind)
    if kind is PropagationKind.GCN:
        a = g.adjacency + sp.identity(g.num_nodes, format="csr")
        d = g.degrees.astype(float) + 1.0
    else:
        _require_no_isolated(g, "plain normalised adjacency")
        a = g.adjacency
        d = g.degrees.astype(float)
    s = sp.diags(1.0 / np.sqrt(d))
    m = sp.csr_matrix(s @ a @ s)
    m.sort_indices()
    return PropagationMatrix(matrix=m, kind=kind)


def edge_norm(g: Graph, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """``1 / sqrt(d_src * d_dst)`` with self-loop-free degrees."""
    d = g.degrees.astype(float)
    return 1.0 / np.sqrt(d[src] * d[dst])


def read_edge_list(path, num_nodes: int | None = None) -> Graph:
    """Parse a whitespace-separated edge list; ``#`` lines are comments."""
    pairs = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphError(f"{path}:{lineno}: expected two node ids, got {line!r}")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise GraphError(f"{path}:{lineno}: non-integer node id in {line!r}") from None
    if num_nodes is None:
        num_nodes = 1 + max((max(p) for p in pairs), default=-1)
    return build_graph(num_nodes, pairs)


def write_edge_list(g: Graph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# nodes={g.num_nodes} edges={g.num_edges}\n")
        for i, j in g.edges:
            fh.write(f"{i} {j}\n")


def ring_lattice(num_nodes: int, degree: int) -> Graph:
    """Circulant d-regular graph: node i links to i +- 1 .. i +- degree/2."""
    if degree % 2 or not 2 <= degree < num_nodes:
        raise GraphError(f"ring lattice needs an even degree in [2, {num_nodes}), got {degree}")
    i = np.arange(num_nodes)
    pairs = [np.stack([i, (i + s) % num_nodes], axis=1) for s in range(1, degree // 2 + 1)]
    return build_graph(num_nodes, np.concatenate(pairs))
