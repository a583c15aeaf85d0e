"""Walk counts from a root and the adjacency operator norm of finite graphs."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import NonConvergenceError, ParameterError
from .estimates import ExponentEstimate
from .graphs import RootedGraph


@dataclass
class WalkCountSequence:
    """``log_w[n] = log w_n(root)``; ``exact`` when no walk of length n_max reaches the cut."""

    log_w: np.ndarray
    n_max: int
    exact: bool
    degree_bound: int

    def to_csv(self, path, estimate: ExponentEstimate | None = None) -> None:
        est = estimate or walk_growth_rate(self)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "log_w", "ratio_est", "root_est"])
            for n in range(self.n_max + 1):
                w.writerow([n, repr(float(self.log_w[n])), _cell(est.ratio_seq, n), _cell(est.root_seq, n)])


def _cell(seq, n):
    x = seq[n] if n < len(seq) else None
    return "" if x is None else repr(float(x))


def _adjacency_pull(g: RootedGraph, x: np.ndarray) -> np.ndarray:
    # x carries a trailing zero slot for missing neighbors
    y = np.zeros_like(x)
    for c in range(g.ncols):
        y[:-1] += x[g.nbr[:, c]]
    return y


def count_walks(g: RootedGraph, n_max: int) -> WalkCountSequence:
    """Number of length-n walks from the root, for ``n = 0..n_max``, in log space.

    Each loop slot counts as one step, so a d-regular labelled graph has ``d^n`` walks.
    """
    if n_max < 0:
        raise ParameterError("n_max must be nonnegative")
    N = g.vertex_count
    x = np.zeros(N + 1)
    x[0] = 1.0
    log_w = np.zeros(n_max + 1)
    shift = 0.0
    for n in range(1, n_max + 1):
        x = _adjacency_pull(g, x)
        top = x.max()
        if top == 0.0:
            log_w[n:] = -math.inf
            break
        x /= top
        shift += math.log(top)
        log_w[n] = shift + math.log(math.fsum(x))
    exact = g.closed or n_max <= g.radius
    return WalkCountSequence(log_w, n_max, bool(exact), g.degree_bound)


def walk_growth_rate(seq: WalkCountSequence) -> ExponentEstimate:
    """``lim (1/n) log w_n``: two-step ratio (robust to bipartite parity) and root estimates."""
    if seq.n_max < 4:
        raise ParameterError("growth rate needs n_max >= 4")
    lw = seq.log_w
    n = np.arange(seq.n_max + 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        root = np.where(n > 0, lw / np.maximum(n, 1), np.nan)
        ratio = np.full(len(lw), np.nan)
        ratio[2:] = (lw[2:] - lw[:-2]) / 2.0
    notes = [] if seq.exact else ["truncated: counts are lower bounds"]
    if not np.isfinite(lw[-1]):
        # only the empty walk exists; report 0 rather than log 0
        value = r = rt = 0.0
        notes.append("root has no walks of positive length; growth reported as 0")
    else:
        value = r = float(ratio[-1])
        rt = float(root[-1])
    return ExponentEstimate(
        value=value, ratio=r, root=rt, n_range=(0, seq.n_max), method="ratio", accelerated=False,
        exact=seq.exact, n=n.tolist(), sequence=lw.tolist(),
        root_seq=[None if not np.isfinite(v) else float(v) for v in root],
        ratio_seq=[None if not np.isfinite(v) else float(v) for v in ratio],
        notes=notes,
    )


def adjacency_matrix(g: RootedGraph) -> np.ndarray:
    """Dense adjacency counting every column slot (loops count once per slot)."""
    N = g.vertex_count
    A = np.zeros((N, N))
    for c in range(g.ncols):
        v = g.nbr[:, c]
        ok = v >= 0
        np.add.at(A, (np.flatnonzero(ok), v[ok]), 1.0)
    return A


def finite_urg_operator_norm(g: RootedGraph, iters: int = 100000, tol: float = 1e-13) -> float:
    """Top adjacency eigenvalue of a finite connected graph by power iteration.

    Uses ``|A x| / |x|`` so that a ``-λ`` eigenvalue of a bipartite graph
    does not stall the iteration, and starts from the degree vector, which
    is never orthogonal to the Perron vector.
    """
    if not g.closed:
        raise ParameterError("operator norm needs a finite (closed) graph")
    N = g.vertex_count
    x = np.append(g.degrees.astype(float) + 1.0, 0.0)
    x /= np.linalg.norm(x)
    prev = math.nan
    for _ in range(iters):
        y = _adjacency_pull(g, x)
        # A^2 has the Perron value squared with no sign ambiguity
        z = _adjacency_pull(g, y)
        lam2 = float(np.linalg.norm(z))
        if lam2 == 0.0:
            return 0.0
        if abs(lam2 - prev) <= tol * lam2:
            return math.sqrt(lam2)
        prev = lam2
        x = z / lam2
    raise NonConvergenceError(f"power iteration on {N} vertices did not converge in {iters} steps")
