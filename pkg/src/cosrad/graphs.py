"""Truncated balls of Cayley graphs, regular trees and Schreier coset graphs.

Graphs are stored as a neighbor table ``nbr`` of shape ``(N, ncols)``: column
``c`` is one generator (or generator inverse) and ``nbr[v, c]`` is the vertex
reached from ``v`` along it, or ``-1`` when that vertex lies outside the ball.
Vertices are numbered in BFS order from the root (vertex 0) with ties broken
by column order, so the vertices at distance ``r`` form the contiguous block
``level_ptr[r]:level_ptr[r + 1]``.
"""
from __future__ import annotations

import math
import re
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import (
    EmptyResultError,
    OracleUndecidableError,
    ParameterError,
    ResourceLimitError,
)
from .rng import mix64

DEFAULT_MAX_VERTICES = 50_000_000

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class GroupFamily:
    """One of the supported group families with its generating set.

    Column layout: for ``free(k)`` and ``free-abelian(d)`` column ``2i`` is
    generator ``i`` and ``2i + 1`` its inverse; for ``regular-tree(d)`` (the
    free product of ``d`` copies of Z/2) column ``i`` is the involution ``i``.
    """

    kind: str
    rank: int

    KINDS = ("free", "free-abelian", "regular-tree")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ParameterError(f"unknown group family {self.kind!r}")
        if self.rank < 1:
            raise ParameterError("family rank must be positive")

    @classmethod
    def parse(cls, text: str) -> "GroupFamily":
        m = re.fullmatch(r"\s*([a-z-]+)\s*\(\s*(\d+)\s*\)\s*", text)
        if not m:
            raise ParameterError(f"cannot parse group family {text!r}")
        kind = {"tree": "regular-tree", "Z": "free-abelian"}.get(m.group(1), m.group(1))
        return cls(kind, int(m.group(2)))

    @property
    def name(self) -> str:
        return f"{self.kind}({self.rank})"

    @property
    def ncols(self) -> int:
        return self.rank if self.kind == "regular-tree" else 2 * self.rank

    @property
    def degree(self) -> int:
        return self.ncols

    @property
    def inv_col(self) -> tuple[int, ...]:
        if self.kind == "regular-tree":
            return tuple(range(self.rank))
        return tuple(c ^ 1 for c in range(2 * self.rank))

    @property
    def col_labels(self) -> tuple[tuple[int, int], ...]:
        if self.kind == "regular-tree":
            return tuple((i, 1) for i in range(self.rank))
        return tuple((c // 2, 1 if c % 2 == 0 else -1) for c in range(2 * self.rank))

    @property
    def is_tree(self) -> bool:
        """Whether the Cayley graph is a tree (free groups and free products of Z/2)."""
        return self.kind in ("free", "regular-tree")

    def ball_volume(self, R: int) -> int:
        """Number of vertices in the ball of radius R (closed form)."""
        if R < 0:
            return 0
        if self.kind == "free-abelian":
            d = self.rank
            return sum(2**j * math.comb(d, j) * math.comb(R, j) for j in range(min(d, R) + 1))
        d = self.degree
        if d == 1:
            return 1 if R == 0 else 2
        return 1 + d * sum((d - 1) ** i for i in range(R))

    # words are tuples of column indices
    def parse_word(self, text: str) -> tuple[int, ...]:
        word = []
        for ch in text.strip():
            i = _LETTERS.find(ch.lower())
            if i < 0 or i >= self.rank:
                raise ParameterError(f"letter {ch!r} is not a generator of {self.name}")
            if self.kind == "regular-tree":
                word.append(i)
            else:
                word.append(2 * i + (1 if ch.isupper() else 0))
        return tuple(word)

    def format_word(self, word: Sequence[int]) -> str:
        if self.kind == "regular-tree":
            return "".join(_LETTERS[c] for c in word)
        return "".join(_LETTERS[c // 2].upper() if c % 2 else _LETTERS[c // 2] for c in word)


def free_reduce(word: Sequence[int], inv_col: Sequence[int]) -> tuple[int, ...]:
    out: list[int] = []
    for c in word:
        if out and out[-1] == inv_col[c]:
            out.pop()
        else:
            out.append(c)
    return tuple(out)


def invert_word(word: Sequence[int], inv_col: Sequence[int]) -> tuple[int, ...]:
    return tuple(inv_col[c] for c in reversed(word))


@dataclass(frozen=True)
class SubgroupOracle:
    """A subgroup H of a group family, decided on reduced words.

    ``kind`` is one of ``trivial``, ``whole``, ``cyclic`` (generated by a
    cyclically reduced word) or ``coset-table`` (a finite-index subgroup given
    by its action on right cosets, coset 0 being H itself; ``-1`` marks an
    undefined entry).
    """

    kind: str
    word: tuple[int, ...] = ()
    table: tuple[tuple[int, ...], ...] | None = None

    @classmethod
    def trivial(cls):
        return cls("trivial")

    @classmethod
    def whole(cls):
        return cls("whole")

    @classmethod
    def cyclic(cls, family: GroupFamily, word):
        if isinstance(word, str):
            word = family.parse_word(word)
        word = tuple(word)
        if family.kind != "free":
            raise ParameterError("cyclic subgroups are supported for free groups only")
        inv = family.inv_col
        if not word:
            return cls.trivial()
        if free_reduce(word, inv) != word or (len(word) > 1 and word[0] == inv[word[-1]]):
            raise ParameterError("cyclic subgroup generator must be cyclically reduced")
        return cls("cyclic", word=word)

    @classmethod
    def from_table(cls, table):
        return cls("coset-table", table=tuple(tuple(int(x) for x in row) for row in table))

    @classmethod
    def parse(cls, family: GroupFamily, text: str) -> "SubgroupOracle":
        text = text.strip()
        if text in ("trivial", "1", "<>"):
            return cls.trivial()
        if text in ("whole", "G"):
            return cls.whole()
        m = re.fullmatch(r"(?:cyclic:|<)([A-Za-z]+)>?", text)
        if m:
            return cls.cyclic(family, m.group(1))
        raise ParameterError(f"cannot parse subgroup {text!r}")

    @property
    def name(self) -> str:
        if self.kind == "cyclic":
            return "<" + "".join(f"{c}" for c in self.word) + ">"
        return self.kind

    def label(self, family: GroupFamily) -> str:
        if self.kind == "cyclic":
            return f"<{family.format_word(self.word)}>"
        return self.kind

    def contains(self, word: Sequence[int], family: GroupFamily) -> bool:
        inv = family.inv_col
        u = free_reduce(word, inv) if family.is_tree else tuple(word)
        if self.kind == "trivial":
            if family.kind == "free-abelian":
                return not any(_abelian_vector(u, family.rank))
            return len(u) == 0
        if self.kind == "whole":
            return True
        if self.kind == "cyclic":
            w = self.word
            if len(u) % len(w):
                return False
            m = len(u) // len(w)
            return u == w * m or u == invert_word(w, inv) * m
        return self.coset_id(word, family) == 0

    def coset_id(self, word: Sequence[int], family: GroupFamily):
        """Canonical identifier of the right coset H·word."""
        inv = family.inv_col
        if self.kind == "trivial":
            if family.kind == "free-abelian":
                return tuple(_abelian_vector(word, family.rank))
            return free_reduce(word, inv)
        if self.kind == "whole":
            return ()
        if self.kind == "cyclic":
            core = _cycle_core(self.word, family)
            node, tail = 0, []
            for c in word:
                if tail:
                    if tail[-1] == inv[c]:
                        tail.pop()
                    else:
                        tail.append(c)
                elif core[node, c] >= 0:
                    node = int(core[node, c])
                else:
                    tail.append(c)
            return (node, tuple(tail))
        node = 0
        for c in word:
            node = self.table[node][c]
            if node < 0:
                raise OracleUndecidableError("coset table is undefined along this word")
        return node


def _abelian_vector(word, rank):
    v = [0] * rank
    for c in word:
        v[c // 2] += -1 if c % 2 else 1
    return v


def _cycle_core(word, family):
    n = len(word)
    inv = family.inv_col
    core = np.full((n, family.ncols), -1, dtype=np.int64)
    for i, c in enumerate(word):
        j = (i + 1) % n
        core[i, c] = j
        core[j, inv[c]] = i
    return core


@dataclass(eq=False)
class RootedGraph:
    """A rooted graph (usually a truncated ball) with generator-labelled edges.

    Treat instances as immutable; arrays are marked read-only.
    """

    family: str
    nbr: np.ndarray
    dist: np.ndarray
    radius: int
    inv_col: tuple[int, ...]
    col_labels: tuple[tuple[int, int], ...]
    closed: bool = False
    coords: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.nbr = np.asfortranarray(self.nbr)
        for a in (self.nbr, self.dist):
            a.setflags(write=False)

    root = 0

    @property
    def vertex_count(self) -> int:
        return int(self.nbr.shape[0])

    @property
    def ncols(self) -> int:
        return int(self.nbr.shape[1])

    @property
    def degree_bound(self) -> int:
        return self.ncols

    @cached_property
    def degrees(self) -> np.ndarray:
        return (self.nbr >= 0).sum(axis=1)

    @cached_property
    def boundary(self) -> np.ndarray:
        """Vertices whose neighborhood was cut off by the truncation."""
        if self.closed:
            return np.zeros(self.vertex_count, dtype=bool)
        return self.dist == self.radius

    @cached_property
    def level_ptr(self) -> np.ndarray:
        top = int(self.dist[-1]) if self.vertex_count else 0
        return np.searchsorted(self.dist, np.arange(top + 2)).astype(np.int64)

    def level_end(self, r: int) -> int:
        """Number of vertices at distance <= r."""
        lp = self.level_ptr
        return int(lp[min(max(r, -1) + 1, len(lp) - 1)])

    @cached_property
    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Each undirected edge once, as ``(u, v, col)`` sorted by ``(u, col)``."""
        us, vs, cs = [], [], []
        ids = np.arange(self.vertex_count)
        for c in range(self.ncols):
            v = self.nbr[:, c]
            keep = (v >= 0) & ((ids < v) | ((ids == v) & (c <= self.inv_col[c])))
            us.append(ids[keep])
            vs.append(v[keep].astype(np.int64))
            cs.append(np.full(int(keep.sum()), c, dtype=np.int64))
        u, v, c = (np.concatenate(x) if x else np.zeros(0, np.int64) for x in (us, vs, cs))
        order = np.lexsort((c, u))
        return u[order], v[order], c[order]

    @property
    def edge_count(self) -> int:
        return len(self.edge_arrays[0])

    def adjacency(self, v: int) -> list[tuple[int, int, int]]:
        """``(neighbor, label, sign)`` for every edge slot of vertex v."""
        return [
            (int(self.nbr[v, c]), *self.col_labels[c])
            for c in range(self.ncols)
            if self.nbr[v, c] >= 0
        ]

    @cached_property
    def bfs_parent(self) -> tuple[np.ndarray, np.ndarray]:
        """BFS-tree parent and the parent's column leading to each vertex."""
        n = self.vertex_count
        parent = np.full(n, -1, dtype=np.int64)
        best = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
        for c in range(self.ncols):
            u = self.nbr[:, c].astype(np.int64)
            ok = u >= 0
            ok[ok] = self.dist[u[ok]] == self.dist[ok] - 1
            cand = np.where(ok, u, np.iinfo(np.int64).max)
            best = np.minimum(best, cand)
        parent[1:] = best[1:]
        pcol = np.full(n, -1, dtype=np.int64)
        # smallest column of the parent pointing at the child
        for c in reversed(range(self.ncols)):
            hit = self.nbr[parent[1:], c] == np.arange(1, n)
            pcol[1:][hit] = c
        return parent, pcol

    @cached_property
    def tree_like(self) -> bool:
        """True when the graph without loops is a forest (clusters are then path-determined)."""
        u, v, _ = self.edge_arrays
        return int((u != v).sum()) == self.vertex_count - 1

    @property
    def word_hash(self) -> np.ndarray:
        """64-bit identity of each vertex, stable across truncation radii.

        Defined recursively along the BFS tree, so it only depends on the
        vertex's position in the underlying infinite graph.
        """
        if "hash" not in self._cache:
            parent, pcol = self.bfs_parent
            h = np.zeros(self.vertex_count, dtype=np.uint64)
            h[0] = mix64(np.uint64(0x5EED))
            lp = self.level_ptr
            for r in range(1, len(lp) - 1):
                s, e = lp[r], lp[r + 1]
                h[s:e] = mix64(h[parent[s:e]] ^ mix64(pcol[s:e].astype(np.uint64) + np.uint64(1)))
            h.setflags(write=False)
            self._cache["hash"] = h
        return self._cache["hash"]

    def word(self, v: int) -> tuple[int, ...]:
        """A geodesic word from the root to v (the reduced word on Cayley balls)."""
        parent, pcol = self.bfs_parent
        out = []
        while v != 0:
            out.append(int(pcol[v]))
            v = int(parent[v])
        return tuple(reversed(out))

    def find(self, word: Sequence[int]) -> int:
        """Vertex reached from the root by reading ``word``, or -1 if it leaves the ball."""
        v = 0
        for c in word:
            v = int(self.nbr[v, c])
            if v < 0:
                return -1
        return v

    def mask(self, target) -> np.ndarray:
        return as_mask(self, target)


def as_mask(g: RootedGraph, target) -> np.ndarray:
    """Turn a vertex predicate (mask, callable, id collection, or object with ``.mask``) into a mask."""
    n = g.vertex_count
    if target is None:
        return np.ones(n, dtype=bool)
    if hasattr(target, "mask") and not callable(target):
        target = target.mask
    if isinstance(target, np.ndarray) and target.dtype == bool:
        if target.shape != (n,):
            raise ParameterError("target mask has the wrong length")
        return target
    if callable(target) and not isinstance(target, np.ndarray):
        out = np.asarray(target(np.arange(n)))
        if out.dtype != bool or out.shape != (n,):
            out = np.array([bool(target(int(v))) for v in range(n)])
        return out
    m = np.zeros(n, dtype=bool)
    idx = np.asarray(list(target), dtype=np.int64)
    m[idx] = True
    return m


# -- construction ---------------------------------------------------------------


def _check_cap(count, cap):
    if count > cap:
        raise ResourceLimitError(f"graph would have {count} vertices, above the cap of {cap}")


def _grow(core: np.ndarray, ncols: int, inv_col, R: int, cap: int):
    """BFS-grow a ball of radius R around core node 0.

    ``core`` is a small explicit graph; ``-1`` entries are free directions,
    each of which leads into a fresh hanging tree (every tree vertex has
    ``ncols - 1`` children).  Returns ``(nbr, dist, closed)``.
    """
    inv = np.asarray(inv_col, dtype=np.int64)
    allowed = np.array([[c for c in range(ncols) if c != inv[p]] for p in range(ncols)],
                       dtype=np.int64).reshape(ncols, ncols - 1)
    core_vid = {0: 0}
    parents = [np.array([-1], dtype=np.int64)]
    pcols = [np.array([-1], dtype=np.int64)]
    cores = [np.array([0], dtype=np.int64)]
    start, count = 0, 1
    sizes = [1]
    for _ in range(R):
        lv_ids = np.arange(start, count, dtype=np.int64)
        lv_core = cores[-1]
        lv_pcol = pcols[-1]
        is_tree = lv_core < 0
        t_ids = lv_ids[is_tree]
        ch_parent = np.repeat(t_ids, ncols - 1)
        ch_col = allowed[lv_pcol[is_tree]].ravel() if len(t_ids) else np.zeros(0, np.int64)
        ch_core = np.full(len(ch_parent), -1, dtype=np.int64)
        items = []
        for v, node in zip(lv_ids[~is_tree], lv_core[~is_tree]):
            for c in range(ncols):
                t = int(core[node, c])
                if t < 0:
                    items.append((v, c, -1))
                elif t not in core_vid:
                    core_vid[t] = -2  # claimed, id assigned below
                    items.append((v, c, t))
        if items:
            it = np.array(items, dtype=np.int64).reshape(-1, 3)
            ch_parent = np.concatenate([ch_parent, it[:, 0]])
            ch_col = np.concatenate([ch_col, it[:, 1]])
            ch_core = np.concatenate([ch_core, it[:, 2]])
            order = np.lexsort((ch_col, ch_parent))
            ch_parent, ch_col, ch_core = ch_parent[order], ch_col[order], ch_core[order]
        n_new = len(ch_parent)
        if n_new == 0:
            break
        _check_cap(count + n_new, cap)
        new_ids = np.arange(count, count + n_new, dtype=np.int64)
        for vid, node in zip(new_ids[ch_core >= 0], ch_core[ch_core >= 0]):
            core_vid[int(node)] = int(vid)
        parents.append(ch_parent)
        pcols.append(ch_col)
        cores.append(ch_core)
        sizes.append(n_new)
        start, count = count, count + n_new

    idx_dtype = np.int32 if count < 2**31 - 1 else np.int64
    nbr = np.full((count, ncols), -1, dtype=idx_dtype, order="F")
    dist = np.repeat(np.arange(len(sizes), dtype=np.int32), sizes)
    parent = np.concatenate(parents)
    pcol = np.concatenate(pcols)
    core_of = np.concatenate(cores)
    del parents, pcols, cores
    tree = np.flatnonzero(core_of < 0)
    for c in range(ncols):
        sel = tree[pcol[tree] == c]
        nbr[parent[sel], c] = sel
        nbr[sel, inv[c]] = parent[sel]
    core_nodes = np.flatnonzero(core_of >= 0)
    for vid in core_nodes:
        node = core_of[vid]
        for c in range(ncols):
            t = int(core[node, c])
            if t >= 0 and core_vid.get(t, -1) >= 0:
                nbr[vid, c] = core_vid[t]
    closed = bool((core >= 0).all()) and all(core_vid.get(t, -1) >= 0 for t in range(len(core)))
    return nbr, dist, closed


def _abelian_ball(d: int, R: int):
    ncols = 2 * d
    steps = []
    for c in range(ncols):
        e = [0] * d
        e[c // 2] = -1 if c % 2 else 1
        steps.append(tuple(e))
    origin = (0,) * d
    index = {origin: 0}
    order = [origin]
    dist = [0]
    q = deque([0])
    while q:
        v = q.popleft()
        if dist[v] == R:
            continue
        x = order[v]
        for s in steps:
            y = tuple(a + b for a, b in zip(x, s))
            if y not in index:
                index[y] = len(order)
                order.append(y)
                dist.append(dist[v] + 1)
                q.append(index[y])
    n = len(order)
    nbr = np.full((n, ncols), -1, dtype=np.int32, order="F")
    for v, x in enumerate(order):
        for c, s in enumerate(steps):
            y = tuple(a + b for a, b in zip(x, s))
            nbr[v, c] = index.get(y, -1)
    return nbr, np.array(dist, dtype=np.int32), np.array(order, dtype=np.int64).reshape(n, d)


def build_ball(family: GroupFamily | str, R: int, max_vertices: int = DEFAULT_MAX_VERTICES) -> RootedGraph:
    """Exact ball of radius R in the Cayley graph of ``family``.

    >>> build_ball("regular-tree(3)", 2).vertex_count
    10
    """
    if isinstance(family, str):
        family = GroupFamily.parse(family)
    if R < 0:
        raise ParameterError("radius must be nonnegative")
    _check_cap(family.ball_volume(R), max_vertices)
    if family.kind == "free-abelian":
        nbr, dist, coords = _abelian_ball(family.rank, R)
        return RootedGraph(family.name, nbr, dist, R, family.inv_col, family.col_labels, coords=coords)
    core = np.full((1, family.ncols), -1, dtype=np.int64)
    nbr, dist, _ = _grow(core, family.ncols, family.inv_col, R, max_vertices)
    return RootedGraph(family.name, nbr, dist, R, family.inv_col, family.col_labels)


def build_schreier(family: GroupFamily | str, H: SubgroupOracle, R: int,
                   max_vertices: int = DEFAULT_MAX_VERTICES) -> RootedGraph:
    """Ball of radius R around the coset H in the Schreier graph of right cosets."""
    if isinstance(family, str):
        family = GroupFamily.parse(family)
    if R < 0:
        raise ParameterError("radius must be nonnegative")
    if H.kind == "trivial":
        return build_ball(family, R, max_vertices)
    ncols = family.ncols
    if H.kind == "whole":
        core = np.zeros((1, ncols), dtype=np.int64)
    elif H.kind == "cyclic":
        core = _cycle_core(H.word, family)
    elif H.kind == "coset-table":
        core = np.asarray(H.table, dtype=np.int64)
        if core.ndim != 2 or core.shape[1] != ncols:
            raise ParameterError("coset table has the wrong shape")
        _validate_table(core, family.inv_col, R)
    else:
        raise ParameterError(f"unsupported subgroup kind {H.kind!r}")
    if family.kind == "free-abelian" and H.kind == "cyclic":
        raise ParameterError("cyclic subgroups are supported for free groups only")
    nbr, dist, closed = _grow(core, ncols, family.inv_col, R, max_vertices)
    return RootedGraph(f"{family.name}/{H.label(family)}", nbr, dist, R,
                       family.inv_col, family.col_labels, closed=closed)


def _validate_table(table, inv_col, R):
    # every entry reachable within R steps must be defined and consistent
    n = len(table)
    seen = {0: 0}
    q = deque([0])
    while q:
        v = q.popleft()
        if seen[v] >= R:
            continue
        for c, t in enumerate(table[v]):
            if t < 0 or t >= n:
                raise OracleUndecidableError(
                    f"coset table entry ({v}, {c}) is undefined within depth {R}")
            if table[t][inv_col[c]] != v:
                raise ParameterError(f"coset table is not an action: entry ({v}, {c})")
            if t not in seen:
                seen[t] = seen[v] + 1
                q.append(t)


def from_edge_list(n: int, edges: Sequence[tuple[int, int]], root: int = 0,
                   family: str = "graph") -> RootedGraph:
    """A finite simple graph, re-rooted and renumbered in BFS order.

    Edges are greedily colored so that every color class is a matching;
    colors serve as self-inverse column labels.
    """
    adj = [[] for _ in range(n)]
    for u, v in edges:
        if u == v:
            raise ParameterError("loops are not supported in plain graphs")
        adj[u].append(v)
        adj[v].append(u)
    order = [root]
    new = {root: 0}
    dist = [0]
    i = 0
    while i < len(order):
        u = order[i]
        for v in sorted(adj[u]):
            if v not in new:
                new[v] = len(order)
                order.append(v)
                dist.append(dist[i] + 1)
        i += 1
    if len(order) != n:
        raise ParameterError("graph must be connected")
    used: list[set] = [set() for _ in range(n)]
    colored = []
    for u, v in sorted((min(new[a], new[b]), max(new[a], new[b])) for a, b in edges):
        c = 0
        while c in used[u] or c in used[v]:
            c += 1
        used[u].add(c)
        used[v].add(c)
        colored.append((u, v, c))
    ncols = max((c for _, _, c in colored), default=-1) + 1
    nbr = np.full((n, max(ncols, 1)), -1, dtype=np.int32, order="F")
    for u, v, c in colored:
        nbr[u, c] = v
        nbr[v, c] = u
    ncols = nbr.shape[1]
    return RootedGraph(family, nbr, np.array(dist, dtype=np.int32), max(dist),
                       tuple(range(ncols)), tuple((c, 1) for c in range(ncols)), closed=True)


def cluster_restricted_subgraph(g: RootedGraph, keep) -> RootedGraph:
    """Induced subgraph on the kept vertices that are connected to the root, in BFS order."""
    mask = as_mask(g, keep)
    if not mask[0]:
        raise EmptyResultError("the root is not kept")
    n = g.vertex_count
    new_id = np.full(n, -1, dtype=np.int64)
    new_id[0] = 0
    frontier = np.array([0], dtype=np.int64)
    order = [frontier]
    dists = [np.zeros(1, dtype=np.int32)]
    count, r = 1, 0
    while len(frontier):
        cand = np.asarray(g.nbr[frontier, :]).ravel()
        cand = cand[cand >= 0]
        cand = cand[mask[cand] & (new_id[cand] < 0)]
        _, first = np.unique(cand, return_index=True)
        fresh = cand[np.sort(first)]
        new_id[fresh] = np.arange(count, count + len(fresh))
        count += len(fresh)
        r += 1
        frontier = fresh
        if len(fresh):
            order.append(fresh)
            dists.append(np.full(len(fresh), r, dtype=np.int32))
    old = np.concatenate(order)
    sub = np.asarray(g.nbr[old, :]).astype(np.int64)
    mapped = np.where(sub >= 0, new_id[np.maximum(sub, 0)], -1)
    out = RootedGraph(g.family, mapped.astype(np.int32), np.concatenate(dists), g.radius,
                      g.inv_col, g.col_labels, closed=g.closed,
                      coords=None if g.coords is None else g.coords[old])
    out._cache["host_ids"] = old
    out._cache["host_boundary"] = g.boundary[old]
    return out


# -- text format ------------------------------------------------------------------

_HEADER = "# cosrad graph v1"


def format_graph(g: RootedGraph) -> str:
    u, v, c = g.edge_arrays
    lines = [
        _HEADER,
        f"family {g.family}",
        f"radius {g.radius}",
        f"degree {g.degree_bound}",
        f"vertex_count {g.vertex_count}",
        f"closed {int(g.closed)}",
        "columns " + " ".join(f"{lab}:{sgn}:{inv}" for (lab, sgn), inv in zip(g.col_labels, g.inv_col)),
        "edges",
    ]
    labels = g.col_labels
    lines.extend(f"{a} {b} {labels[k][0]} {labels[k][1]}" for a, b, k in zip(u.tolist(), v.tolist(), c.tolist()))
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> RootedGraph:
    lines = text.splitlines()
    if not lines or lines[0] != _HEADER:
        raise ParameterError("not a cosrad graph file")
    head = {}
    i = 1
    while lines[i] != "edges":
        key, _, value = lines[i].partition(" ")
        head[key] = value
        i += 1
    cols = [tuple(int(x) for x in tok.split(":")) for tok in head["columns"].split()]
    col_labels = tuple((lab, sgn) for lab, sgn, _ in cols)
    inv_col = tuple(inv for _, _, inv in cols)
    col_of = {lab: k for k, lab in enumerate(col_labels)}
    n = int(head["vertex_count"])
    nbr = np.full((n, len(cols)), -1, dtype=np.int32, order="F")
    for line in lines[i + 1:]:
        if not line.strip():
            continue
        a, b, lab, sgn = (int(x) for x in line.split())
        k = col_of[(lab, sgn)]
        nbr[a, k] = b
        nbr[b, inv_col[k]] = a
    dist = _bfs_dist(nbr)
    return RootedGraph(head["family"], nbr, dist, int(head["radius"]), inv_col, col_labels,
                       closed=bool(int(head["closed"])))


def _bfs_dist(nbr):
    n = nbr.shape[0]
    dist = np.full(n, -1, dtype=np.int32)
    dist[0] = 0
    frontier = np.array([0])
    r = 0
    while len(frontier):
        cand = np.asarray(nbr[frontier, :]).ravel()
        cand = np.unique(cand[cand >= 0])
        cand = cand[dist[cand] < 0]
        r += 1
        dist[cand] = r
        frontier = cand
    if (dist < 0).any():
        raise ParameterError("graph file is not connected")
    if (np.diff(dist) < 0).any():
        raise ParameterError("graph file is not in BFS order")
    return dist


def write_graph(g: RootedGraph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_graph(g))


def read_graph(path) -> RootedGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())


def cycle_graph(n: int) -> RootedGraph:
    return from_edge_list(n, [(i, (i + 1) % n) for i in range(n)], family=f"cycle({n})")


def path_graph(n: int) -> RootedGraph:
    return from_edge_list(n, [(i, i + 1) for i in range(n - 1)], family=f"path({n})")


def random_connected_graph(n: int, extra_edges: int, rng: np.random.Generator) -> RootedGraph:
    """Random spanning tree plus ``extra_edges`` distinct random chords."""
    perm = rng.permutation(n)
    edges = set()
    for i in range(1, n):
        j = int(rng.integers(0, i))
        a, b = int(perm[i]), int(perm[j])
        edges.add((min(a, b), max(a, b)))
    target = len(edges) + min(extra_edges, n * (n - 1) // 2 - len(edges))
    while len(edges) < target:
        a, b = (int(x) for x in rng.integers(0, n, size=2))
        if a != b:
            edges.add((min(a, b), max(a, b)))
    return from_edge_list(n, sorted(edges), family=f"random({n})")


VertexPredicate = Callable[[np.ndarray], np.ndarray]
