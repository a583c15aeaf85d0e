"""Symmetric step distributions and their n-step distributions on rooted graphs."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import ParameterError
from .graphs import GroupFamily, RootedGraph, as_mask
from .parallel import parallel_map
from .rng import generator

_SUM_TOL = 1e-12


@dataclass(frozen=True)
class WalkKernel:
    """Step distribution: ``weights[c]`` on column ``c`` plus ``hold`` on the identity."""

    weights: tuple[float, ...]
    hold: float
    inv_col: tuple[int, ...]

    def __post_init__(self):
        w = self.weights
        if len(w) != len(self.inv_col):
            raise ParameterError("kernel weights and inverse map differ in length")
        if self.hold < 0 or any(x < 0 for x in w):
            raise ParameterError("kernel weights must be nonnegative")
        if abs(self.hold + math.fsum(w) - 1.0) > _SUM_TOL:
            raise ParameterError("kernel weights must sum to one")
        for c, x in enumerate(w):
            if abs(x - w[self.inv_col[c]]) > _SUM_TOL:
                raise ParameterError("kernel must give equal weight to g and its inverse")

    @classmethod
    def simple(cls, source, hold: float = 0.0) -> "WalkKernel":
        """Uniform weight on every column, with optional laziness."""
        if isinstance(source, str):
            source = GroupFamily.parse(source)
        inv = tuple(source.inv_col)
        n = len(inv)
        return cls(tuple([(1.0 - hold) / n] * n), float(hold), inv)

    @classmethod
    def from_steps(cls, family: GroupFamily, steps, hold: float = 0.0) -> "WalkKernel":
        """Build from ``{(label, sign): weight}`` or ``{letter: weight}``."""
        w = [0.0] * family.ncols
        for key, x in steps.items():
            if isinstance(key, str):
                (c,) = family.parse_word(key)
            else:
                c = family.col_labels.index(tuple(key))
            w[c] = float(x)
        return cls(tuple(w), float(hold), family.inv_col)

    @property
    def steps(self) -> list[tuple[int, float]]:
        return [(c, x) for c, x in enumerate(self.weights) if x > 0]

    @property
    def is_uniform(self) -> bool:
        return max(self.weights) - min(self.weights) <= _SUM_TOL

    def check_graph(self, g: RootedGraph) -> None:
        if tuple(g.inv_col) != tuple(self.inv_col):
            raise ParameterError("kernel columns do not match the graph's generators")


def lazify(k: WalkKernel, t: float) -> WalkKernel:
    """Mix the kernel with the identity: ``(1 - t) k + t delta_id``."""
    if not 0.0 <= t <= 1.0:
        raise ParameterError("laziness must lie in [0, 1]")
    return WalkKernel(tuple((1.0 - t) * x for x in k.weights), t + (1.0 - t) * k.hold, k.inv_col)


@dataclass
class Distribution:
    """Law of the walk after ``steps`` steps.

    ``exact`` is set when no trajectory can have reached the truncation
    boundary.  ``exact_radius`` (root starts only) is the largest distance
    from the root at which values are exact regardless: a trajectory that
    ends at distance r after t steps never went beyond (t + r) / 2.
    """

    probs: np.ndarray
    steps: int
    exact: bool
    exact_radius: float = -1

    def total(self) -> float:
        return math.fsum(self.probs)

    def as_dict(self) -> dict[int, float]:
        idx = np.flatnonzero(self.probs)
        return dict(zip(idx.tolist(), self.probs[idx].tolist()))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["vertex", "probability"])
            for v, p in self.as_dict().items():
                w.writerow([v, repr(p)])


def _pull(g: RootedGraph, k: WalkKernel, x: np.ndarray, hi: int) -> np.ndarray:
    # x has length N + 1 with x[N] == 0, so missing neighbors (-1) read zero
    y = np.zeros_like(x)
    acc = y[:hi]
    if k.hold:
        acc += k.hold * x[:hi]
    for c, w in enumerate(k.weights):
        # mass arriving at v along column c left v·c via the inverse column
        wc = k.weights[k.inv_col[c]]
        if wc:
            acc += wc * x[g.nbr[:hi, c]]
    return y


def iterate(g: RootedGraph, k: WalkKernel, start: int, n: int,
            prune: bool = False) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(t, x_t)`` for ``t = 0..n``; ``x_t`` has a trailing zero slot.

    From the root only the BFS prefix that the walk can occupy is updated.
    With ``prune`` (root starts on truncated graphs), vertices outside the
    exact region ``dist <= 2R - t`` are skipped, as their values cannot feed
    back into it.
    """
    k.check_graph(g)
    N = g.vertex_count
    x = np.zeros(N + 1)
    x[start] = 1.0
    yield 0, x
    R = g.radius
    from_root = start == 0
    for t in range(1, n + 1):
        if from_root:
            r = min(t, int(g.dist[-1]))
            if prune and not g.closed:
                r = min(r, 2 * R - t)
                if r < 0:
                    return
            hi = g.level_end(r)
        else:
            hi = N
        x = _pull(g, k, x, hi)
        yield t, x


def _exactness(g: RootedGraph, start: int, t: int) -> tuple[bool, float]:
    if g.closed:
        return True, math.inf
    d0 = int(g.dist[start])
    flag = t <= g.radius - d0
    if start == 0:
        return flag, 2 * g.radius - t
    return flag, (math.inf if flag else -1)


def evolve(g: RootedGraph, k: WalkKernel, start: int, n: int) -> Distribution:
    """Exact n-step distribution of the walk from ``start`` (mass leaving the ball is dropped)."""
    if n < 0:
        raise ParameterError("number of steps must be nonnegative")
    x = None
    for _, x in iterate(g, k, start, n):
        pass
    exact, radius = _exactness(g, start, n)
    return Distribution(x[:-1].copy(), n, exact, radius)


def hit_probability(dist: Distribution, target, graph: RootedGraph | None = None) -> float:
    """Mass of ``dist`` on the target set, summed with compensation."""
    if graph is not None:
        mask = as_mask(graph, target)
    elif hasattr(target, "mask"):
        mask = target.mask
    else:
        mask = np.asarray(target, dtype=bool)
    return math.fsum(dist.probs[mask])


# -- Monte Carlo ------------------------------------------------------------------

BLOCK = 4096


@dataclass
class WalkBatch:
    endpoints: np.ndarray
    valid: np.ndarray

    @property
    def invalid_fraction(self) -> float:
        return float(1.0 - self.valid.mean()) if len(self.valid) else 0.0

    def frequency(self, target_mask: np.ndarray) -> float:
        return float(target_mask[self.endpoints].mean())


def _walk_block(args):
    g, k, start, n, seed, b, size = args
    rng = generator(seed, "walk-block", b)
    probs = np.array([k.hold, *k.weights])
    probs = probs / probs.sum()
    moves = rng.choice(len(probs), size=(n, BLOCK), p=probs)[:, :size]
    pos = np.full(size, start, dtype=np.int64)
    valid = np.ones(size, dtype=bool)
    for t in range(n):
        m = moves[t]
        step = m > 0
        col = np.maximum(m - 1, 0)
        nxt = np.asarray(g.nbr[pos, col]).astype(np.int64)
        out = step & (nxt < 0)
        valid &= ~out
        pos = np.where(step & (nxt >= 0), nxt, pos)
    return pos, valid


def sample_walks(g: RootedGraph, k: WalkKernel, start: int, n: int, count: int, seed,
                 workers: int = 1) -> WalkBatch:
    """``count`` independent trajectories; trajectory i uses block ``i // BLOCK`` of the seed's stream.

    Trajectories that try to leave the ball stay put and are flagged invalid.
    """
    k.check_graph(g)
    nblocks = -(-count // BLOCK)
    jobs = [(g, k, start, n, seed, b, min(BLOCK, count - b * BLOCK)) for b in range(nblocks)]
    parts = parallel_map(_walk_block, jobs, workers)
    if not parts:
        return WalkBatch(np.zeros(0, np.int64), np.zeros(0, bool))
    return WalkBatch(np.concatenate([p for p, _ in parts]), np.concatenate([v for _, v in parts]))


def sample_walk(g: RootedGraph, k: WalkKernel, start: int, n: int, seed, index: int = 0) -> tuple[int, bool]:
    """Endpoint of trajectory ``index`` of the batch sampler, and whether it stayed in the ball."""
    b, i = divmod(index, BLOCK)
    pos, valid = _walk_block((g, k, start, n, seed, b, i + 1))
    return int(pos[i]), bool(valid[i])
