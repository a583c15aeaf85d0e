"""Bernoulli bond percolation on rooted graphs under a threshold coupling."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ParameterError
from .graphs import RootedGraph
from .rng import generator, mix64, seed_word, unit_interval


_KEY_SALT = np.uint64(0xD6E8FEB86659FD93)


class EdgeCoupling:
    """Uniform label per edge, a pure function of the seed and the edge's position.

    The key of an edge is built from the word hashes of its endpoints (and
    the generator read from the smaller one), so the same edge of the
    infinite graph gets the same label in balls of any radius.
    """

    def __init__(self, seed, tag: str = "percolation", index: int = 0):
        self.seed = seed
        self.tag = tag
        self.index = index
        self._word = seed_word(seed, tag, index)

    def keys(self, g: RootedGraph) -> np.ndarray:
        u, v, c = g.edge_arrays
        h = g.word_hash
        hu, hv = h[u], h[v]
        inv = np.asarray(g.inv_col, dtype=np.int64)
        swap = hv < hu
        loop = hu == hv
        lo = np.where(swap, hv, hu)
        hi = np.where(swap, hu, hv)
        col = np.where(swap, inv[c], c)
        col = np.where(loop, np.minimum(c, inv[c]), col).astype(np.uint64)
        # absorb one field at a time; an XOR of two hashes would cancel between
        # sibling edges, whose endpoint hashes share the parent's hash
        state = mix64(lo ^ _KEY_SALT)
        state = mix64(state ^ hi)
        return mix64(state ^ col)

    def labels(self, g: RootedGraph) -> np.ndarray:
        """``U_e`` in ``[0, 1)`` for every edge of ``g.edge_arrays``."""
        return unit_interval(mix64(self.keys(g) ^ self._word))


def cluster_labels(g: RootedGraph, open_edges: np.ndarray) -> np.ndarray:
    """Component index of every vertex in the graph of open edges."""
    u, v, _ = g.edge_arrays
    n = g.vertex_count
    u, v = u[open_edges], v[open_edges]
    adj = coo_matrix((np.ones(len(u), dtype=np.int8), (u, v)), shape=(n, n))
    _, lab = connected_components(adj, directed=False)
    return lab


@dataclass
class PercolationSample:
    graph: RootedGraph
    p: float
    open_edges: np.ndarray
    _cluster: np.ndarray | None = field(default=None, repr=False)

    @property
    def cluster_id(self) -> np.ndarray:
        if self._cluster is None:
            self._cluster = cluster_labels(self.graph, self.open_edges)
        return self._cluster

    @property
    def open_count(self) -> int:
        return int(self.open_edges.sum())

    def connected(self, u: int, v: int) -> bool:
        return bool(self.cluster_id[u] == self.cluster_id[v])

    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.cluster_id)

    def size_histogram(self) -> dict[int, int]:
        sizes, counts = np.unique(self.cluster_sizes(), return_counts=True)
        return dict(zip(sizes.tolist(), counts.tolist()))

    def write_edges(self, path) -> None:
        u, v, c = self.graph.edge_arrays
        labels = self.graph.col_labels
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["u", "v", "label", "sign", "open"])
            for a, b, col, o in zip(u.tolist(), v.tolist(), c.tolist(), self.open_edges.tolist()):
                w.writerow([a, b, labels[col][0], labels[col][1], int(o)])

    def write_histogram(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["cluster_size", "count"])
            for s, n in self.size_histogram().items():
                w.writerow([s, n])


def _check_p(p):
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"percolation parameter {p} is not in [0, 1]")


def percolate(g: RootedGraph, coupling: EdgeCoupling, p: float) -> PercolationSample:
    """Open every edge whose label is at most p."""
    _check_p(p)
    return PercolationSample(g, float(p), coupling.labels(g) <= p)


def union_coupling(g: RootedGraph, p: float, q: float, seed) -> tuple[PercolationSample, PercolationSample]:
    """P ~ Bernoulli(p) and Q = P ∪ (independent Bernoulli((q - p) / (1 - p))), so Q ~ Bernoulli(q)."""
    _check_p(p)
    _check_p(q)
    if q < p:
        raise ParameterError("union coupling needs p <= q")
    if q >= 1.0:
        raise ParameterError("union coupling needs q < 1")
    first = percolate(g, EdgeCoupling(seed, "union-first"), p)
    extra = (q - p) / (1.0 - p)
    second = EdgeCoupling(seed, "union-second").labels(g) < extra
    return first, PercolationSample(g, float(q), first.open_edges | second)


@dataclass
class ClusterPredicate:
    """Membership in the root's open cluster; ``approximate`` when the ball may cut paths."""

    mask: np.ndarray
    approximate: bool

    def __call__(self, v):
        return self.mask[v]

    @property
    def size(self) -> int:
        return int(self.mask.sum())


def cluster_of_root(s: PercolationSample) -> ClusterPredicate:
    cid = s.cluster_id
    g = s.graph
    return ClusterPredicate(cid == cid[0], not (g.tree_like or g.closed))


@dataclass
class TauEstimate:
    value: float
    ci_low: float
    ci_high: float
    samples: int
    hits: int

    @property
    def ci_halfwidth(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)


def wilson_interval(hits: int, n: int, z: float = 4.0) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    phat = hits / n
    denom = 1 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def tau_estimate(g: RootedGraph, p: float, u: int, v: int, samples: int, seed, z: float = 4.0) -> TauEstimate:
    """Monte Carlo estimate of the probability that u and v are connected by open edges."""
    _check_p(p)
    if u == v:
        return TauEstimate(1.0, 1.0, 1.0, samples, samples)
    if samples < 1:
        raise ParameterError("at least one sample is required")
    hits = 0
    for i in range(samples):
        s = percolate(g, EdgeCoupling(seed, "tau", i), p)
        hits += s.connected(u, v)
    lo, hi = wilson_interval(hits, samples, z)
    return TauEstimate(hits / samples, lo, hi, samples, hits)


def independent_labels(g: RootedGraph, seed, index: int = 0) -> np.ndarray:
    """Plain i.i.d. uniforms per edge, for callers that do not need radius stability."""
    return generator(seed, "edge-labels", index).random(g.edge_count)
