"""Quenched and annealed co-spectral radii, Schreier spectral radii, and their checks."""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import estimates
from .errors import NonConvergenceError, ParameterError, TruncationError
from .graphs import (
    DEFAULT_MAX_VERTICES,
    GroupFamily,
    RootedGraph,
    SubgroupOracle,
    as_mask,
    build_ball,
    build_schreier,
)
from .parallel import parallel_map
from .percolation import EdgeCoupling, cluster_labels
from .rng import generator
from .walks import WalkKernel, _pull, iterate, lazify

EXTRAPOLATION_SLACK = 1e-2
POWER_TOL = 1e-8


def _sequence_exact(g: RootedGraph, start: int, t: int, target_radius) -> bool:
    if g.closed:
        return True
    if t <= g.radius - int(g.dist[start]):
        return True
    return start == 0 and target_radius is not None and t <= 2 * g.radius - target_radius


def subgroup_mask(g: RootedGraph, family: GroupFamily | str, H: SubgroupOracle) -> np.ndarray:
    """Vertices of a Cayley ball lying in H, found by reading each BFS word in the coset graph."""
    if isinstance(family, str):
        family = GroupFamily.parse(family)
    if H.kind == "trivial":
        m = np.zeros(g.vertex_count, dtype=bool)
        m[0] = True
        return m
    if H.kind == "whole":
        return np.ones(g.vertex_count, dtype=bool)
    cosets = build_schreier(family, H, g.radius)
    parent, pcol = g.bfs_parent
    coset = np.zeros(g.vertex_count, dtype=np.int64)
    lp = g.level_ptr
    for r in range(1, len(lp) - 1):
        s, e = lp[r], lp[r + 1]
        coset[s:e] = cosets.nbr[coset[parent[s:e]], pcol[s:e]]
    return coset == 0


def hit_sequence(g: RootedGraph, k: WalkKernel, target, n_max: int, start: int = 0,
                 target_radius: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``p_{2n}(start, target)`` for ``n = 1..n_max`` with per-n exactness flags.

    ``target_radius`` declares that every target vertex of the infinite graph
    lies within that distance of the root; it extends exactness from
    ``2n <= R`` to ``2n <= 2R - target_radius``.
    """
    idx = np.flatnonzero(as_mask(g, target))
    seq = np.zeros(n_max)
    exact = np.zeros(n_max, dtype=bool)
    prune = start == 0 and target_radius is not None
    for t, x in iterate(g, k, start, 2 * n_max, prune=prune):
        if t and t % 2 == 0:
            seq[t // 2 - 1] = math.fsum(x[idx])
            exact[t // 2 - 1] = _sequence_exact(g, start, t, target_radius)
    return seq, exact


def quenched_exponent(g: RootedGraph, k: WalkKernel, target, n_max: int, *, start: int = 0,
                      target_radius: int | None = None, strict: bool = False) -> estimates.ExponentEstimate:
    """Rate of ``p_{2n}(start, target)^(1/2n)`` from exact dynamic programming on the ball."""
    if n_max < 1:
        raise ParameterError("n_max must be at least 1")
    seq, exact = hit_sequence(g, k, target, n_max, start, target_radius)
    notes = []
    if not exact.all():
        first = int(np.argmin(exact)) + 1
        if strict:
            raise TruncationError(
                f"p_2n is not exact for n >= {first} on a ball of radius {g.radius}")
        notes.append(f"truncated: values for n >= {first} are lower bounds")
    notes.append(f"extrapolation slack {EXTRAPOLATION_SLACK} (no known convergence rate)")
    return estimates.from_sequence(np.arange(1, n_max + 1), seq, 2, True, bool(exact.all()), notes)


def local_exponent(g: RootedGraph, k: WalkKernel, S_target, E, n_max: int, *,
                   target_radius: int | None = None, strict: bool = False) -> estimates.ExponentEstimate:
    """Rate of the probability that the walk is in ``S_target ∩ E`` at even times."""
    mask = as_mask(g, S_target) & as_mask(g, E)
    est = quenched_exponent(g, k, mask, n_max, target_radius=target_radius, strict=strict)
    if not any(est.sequence):
        warnings.warn("hit probability is zero at every computed time; reporting 0", RuntimeWarning)
        est.value = est.ratio = est.root = 0.0
    return est


# -- annealed exponents over Bernoulli clusters ----------------------------------

def radial_law(d: int, hold: float, m: int) -> np.ndarray:
    """``P(|X_t| = r)`` for the uniform walk on the d-regular tree, ``t, r = 0..m``."""
    out = np.zeros((m + 1, m + 1))
    out[0, 0] = 1.0
    move = 1.0 - hold
    for t in range(m):
        x, y = out[t], out[t + 1]
        y += hold * x
        y[1] += move * x[0]
        y[2:] += move * (d - 1) / d * x[1:-1]
        y[:-1] += move / d * x[1:]
    return out


def _tree_generation_counts(d: int, p_grid: np.ndarray, depth: int, rng) -> np.ndarray:
    """Cluster sphere sizes ``Z_r(p)`` for ``r = 0..depth``, coupled across the sorted ``p_grid``.

    Each vertex carries the largest edge label on its path to the root;
    bucket ``j`` holds vertices whose label lies in ``(p_(j-1), p_j]`` and
    bucket ``K`` those outside every cluster of the grid.
    """
    K = len(p_grid)
    q = np.clip(np.diff(np.concatenate(([0.0], p_grid, [1.0]))), 0.0, None)
    q /= q.sum()
    counts = np.zeros((depth + 1, K), dtype=np.int64)
    level = np.zeros(K + 1, dtype=np.int64)
    level[0] = 1  # the root is in every cluster
    counts[0] = 1
    for r in range(1, depth + 1):
        branching = d if r == 1 else d - 1
        # draws[j, b]: children of bucket-j parents whose own edge label is in bucket b
        draws = rng.multinomial(level * branching, q)
        level = np.triu(draws).sum(axis=0) + np.tril(draws, -1).sum(axis=1)
        level[K] = 0  # outside every cluster, never needed again
        counts[r] = np.cumsum(level[:K])
    return counts


def _tree_sample(args):
    d, hold, p_grid, n_max, seed, i, law_even = args
    rng = generator(seed, "tree-cluster", i)
    depth = 2 * n_max
    Z = _tree_generation_counts(d, p_grid, depth, rng)
    sphere = np.array([1.0] + [d * (d - 1.0) ** (r - 1) for r in range(1, depth + 1)])
    density = Z / sphere[:, None]  # (depth+1, K)
    return law_even @ density  # (n_max, K)


def _generic_sample(args):
    g, p_grid, seed, i, walk_even = args
    coupling = EdgeCoupling(seed, "annealed", i)
    labels = coupling.labels(g)
    out = np.empty((walk_even.shape[0], len(p_grid)))
    for j, p in enumerate(p_grid):
        cid = cluster_labels(g, labels <= p)
        mask = cid == cid[0]
        out[:, j] = walk_even[:, mask].sum(axis=1)
    return out


@dataclass
class AnnealedSamples:
    """Per-sample exact sequences ``p_{2n}(o, C_p)``; shape ``(K, samples, n_max)``."""

    p_grid: np.ndarray
    values: np.ndarray
    ambient: np.ndarray
    exact: bool
    approximate_clusters: bool
    method: str


def annealed_samples(family: GroupFamily | str, k: WalkKernel, p_grid, n_max: int, samples: int,
                     seed, *, R: int | None = None, workers: int = 1, method: str = "auto",
                     max_vertices: int = DEFAULT_MAX_VERTICES) -> AnnealedSamples:
    """Sample root-cluster hit sequences for every p of the grid under one monotone coupling.

    ``method='radial'`` (tree families, uniform kernel) samples the cluster's
    sphere sizes as a coupled branching process and uses the radial law of
    the walk, which is exact for the infinite tree; ``method='ball'``
    percolates an explicit ball of radius R (default ``2 n_max``).
    """
    if isinstance(family, str):
        family = GroupFamily.parse(family)
    if samples < 1:
        raise ParameterError("at least one sample is required")
    p_grid = np.asarray(p_grid, dtype=float)
    order = np.argsort(p_grid, kind="stable")
    sorted_p = p_grid[order]
    if sorted_p[0] < 0 or sorted_p[-1] > 1:
        raise ParameterError("percolation parameters must lie in [0, 1]")
    if method == "auto":
        method = "radial" if family.is_tree and k.is_uniform else "ball"
    if method == "radial":
        if not (family.is_tree and k.is_uniform):
            raise ParameterError("the radial sampler needs a tree family and a uniform kernel")
        d = family.degree
        law = radial_law(d, k.hold, 2 * n_max)[2::2]
        jobs = [(d, k.hold, sorted_p, n_max, seed, i, law) for i in range(samples)]
        vals = np.stack(parallel_map(_tree_sample, jobs, workers))
        ambient = law[:, 0]
        exact, approx = True, False
    elif method == "ball":
        R = 2 * n_max if R is None else R
        g = build_ball(family, R, max_vertices)
        walk_even = np.stack([x[:-1].copy() for t, x in iterate(g, k, 0, 2 * n_max) if t and t % 2 == 0])
        jobs = [(g, sorted_p, seed, i, walk_even) for i in range(samples)]
        vals = np.stack(parallel_map(_generic_sample, jobs, workers))
        ambient = walk_even[:, 0]
        exact, approx = 2 * n_max <= R, not g.tree_like
    else:
        raise ParameterError(f"unknown method {method!r}")
    # (samples, n_max, K) -> (K, samples, n_max), back in the caller's order
    vals = np.transpose(vals, (2, 0, 1))
    unsorted = np.empty_like(vals)
    unsorted[order] = vals
    return AnnealedSamples(p_grid, unsorted, ambient, exact, approx, method)


def annealed_estimate(batch: AnnealedSamples, index: int) -> estimates.ExponentEstimate:
    n = np.arange(1, batch.values.shape[2] + 1)
    notes = []
    if batch.approximate_clusters:
        notes.append("clusters truncated by the ball (under-approximation)")
    if not batch.exact:
        notes.append("walk distribution truncated")
    vals = batch.values[index]
    if np.ptp(vals, axis=0).max() == 0:
        return estimates.from_sequence(n, vals[0], 2, True, batch.exact, notes)
    return estimates.from_samples(n, vals, 2, True, batch.exact, notes=notes)


def annealed_exponent(family: GroupFamily | str, k: WalkKernel, p: float, n_max: int, samples: int,
                      seed, **kw) -> estimates.ExponentEstimate:
    """Rate of ``E[p_{2n}(o, C)]^(1/2n)`` for the root cluster C of Bernoulli(p) percolation."""
    batch = annealed_samples(family, k, [p], n_max, samples, seed, **kw)
    return annealed_estimate(batch, 0)


# -- spectral radius by power iteration ------------------------------------------

@dataclass
class SpectralRadiusResult:
    value: float
    iterations: int
    residual: float

    def to_dict(self):
        return asdict(self)


def schreier_spectral_radius(g: RootedGraph, k: WalkKernel, iters: int = 20000,
                             tol: float = POWER_TOL) -> SpectralRadiusResult:
    """Norm of the Markov operator on the ball with zero boundary values.

    Iterates ``x <- P x`` from the all-ones vector and tracks ``|P x| / |x|``,
    which also converges when ``-value`` is an eigenvalue (bipartite graphs).
    The result is a lower bound for the infinite graph's spectral radius.
    """
    k.check_graph(g)
    N = g.vertex_count
    x = np.ones(N + 1)
    x[N] = 0.0
    x /= np.linalg.norm(x)
    prev = math.nan
    for it in range(1, iters + 1):
        y = _pull(g, k, x, N)
        lam = float(np.linalg.norm(y))
        if lam == 0.0:
            return SpectralRadiusResult(0.0, it, 0.0)
        residual = abs(lam - prev)
        if residual < tol:
            return SpectralRadiusResult(lam, it, residual)
        prev = lam
        x = y / lam
    raise NonConvergenceError(f"power iteration did not reach {tol} in {iters} iterations")


# -- checks ------------------------------------------------------------------------

@dataclass
class LazinessRow:
    t: float
    rho_t: float
    rho: float
    difference: float
    bound: float
    ok: bool


@dataclass
class LazinessReport:
    rows: list = field(default_factory=list)
    slack: float = 0.02

    @property
    def violations(self):
        return [r.t for r in self.rows if not r.ok]

    @property
    def ok(self):
        return not self.violations

    def to_dict(self):
        return {"slack": self.slack, "ok": self.ok, "violations": self.violations,
                "rows": [asdict(r) for r in self.rows]}


def laziness_bound_check(g: RootedGraph, k: WalkKernel, target, t_grid, n_max: int, *,
                         slack: float = 2 * EXTRAPOLATION_SLACK,
                         target_radius: int | None = None) -> LazinessReport:
    """Compare exponents of the lazy kernels ``(1-t)k + t delta`` with the base one."""
    base = quenched_exponent(g, k, target, n_max, target_radius=target_radius).value
    report = LazinessReport(slack=slack)
    for t in t_grid:
        if not 0.0 <= t <= 1.0:
            raise ParameterError("laziness must lie in [0, 1]")
        if t == 0.0:
            v = base
        else:
            v = quenched_exponent(g, lazify(k, t), target, n_max, target_radius=target_radius).value
        diff = abs(v - base)
        bound = t * (1.0 + base) + slack
        report.rows.append(LazinessRow(float(t), v, base, diff, bound, diff <= bound))
    return report


@dataclass
class SemicontinuityReport:
    ambient: float
    values: dict
    tol: float
    ok: bool

    def to_dict(self):
        return asdict(self)


def semicontinuity_check(family: GroupFamily | str, m_grid, R: int, kernel: WalkKernel | None = None,
                         tol: float = 0.02, letter: str = "a") -> SemicontinuityReport:
    """Spectral radii of ``Γ/<letter^m>`` against the trivial-subgroup limit at the same radius."""
    if isinstance(family, str):
        family = GroupFamily.parse(family)
    m_grid = list(m_grid)
    if any(b <= a for a, b in zip(m_grid, m_grid[1:])):
        raise ParameterError("m_grid must be increasing")
    kernel = kernel or WalkKernel.simple(family)
    ambient = schreier_spectral_radius(build_ball(family, R), kernel).value
    values = {}
    for m in m_grid:
        H = SubgroupOracle.cyclic(family, letter * m)
        values[m] = schreier_spectral_radius(build_schreier(family, H, R), kernel).value
    tail = m_grid[len(m_grid) // 2:]
    ok = min(values[m] for m in tail) >= ambient - tol
    return SemicontinuityReport(ambient, values, tol, bool(ok))
