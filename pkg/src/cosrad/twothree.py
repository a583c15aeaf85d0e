"""Exact checks of the 2-3 submultiplicativity machinery on finite weighted relations.

A finite relation is a set of N points with a partition R, a refinement S
and positive weights pi.  Kernels are dense N x N matrices supported on R;
integrals against the base measure use the uniform probability on points.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import ParameterError, ReversibilityError

REL_TOL = 1e-9
REVERSIBILITY_TOL = 1e-12


@dataclass
class FiniteRelation:
    r_class: np.ndarray
    s_class: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        self.r_class = np.asarray(self.r_class, dtype=np.int64)
        self.s_class = np.asarray(self.s_class, dtype=np.int64)
        self.pi = np.asarray(self.pi, dtype=float)
        n = len(self.pi)
        if self.r_class.shape != (n,) or self.s_class.shape != (n,):
            raise ParameterError("class arrays and weights differ in length")
        if n == 0:
            raise ParameterError("a relation needs at least one point")
        if not np.all(self.pi > 0) or not np.all(np.isfinite(self.pi)):
            raise ParameterError("weights must be positive and finite")
        # S refines R: every S-class sits inside one R-class
        pairs = np.unique(np.stack([self.s_class, self.r_class]), axis=1)
        if len(np.unique(pairs[0])) != pairs.shape[1]:
            raise ParameterError("S-classes must refine R-classes")

    @property
    def size(self) -> int:
        return len(self.pi)

    @property
    def same_r(self) -> np.ndarray:
        return self.r_class[:, None] == self.r_class[None, :]

    @property
    def same_s(self) -> np.ndarray:
        return self.s_class[:, None] == self.s_class[None, :]

    def integral(self, f: np.ndarray) -> float:
        """``∫ f dμ`` for the uniform probability measure on points."""
        return math.fsum(np.asarray(f, dtype=float)) / self.size

    def format(self) -> str:
        lines = ["# point_id r_class s_class pi_weight"]
        for i, (r, s, w) in enumerate(zip(self.r_class, self.s_class, self.pi)):
            lines.append(f"{i} {int(r)} {int(s)} {float(w)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "FiniteRelation":
        rows = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ParameterError(f"line {lineno}: expected 'point_id r_class s_class pi_weight'")
            rows.append((int(parts[0]), int(parts[1]), int(parts[2]), float(parts[3])))
        rows.sort()
        if [r[0] for r in rows] != list(range(len(rows))):
            raise ParameterError("point ids must be 0..N-1")
        _, r, s, w = zip(*rows) if rows else ((), (), (), ())
        return cls(np.array(r), np.array(s), np.array(w))


def check_reversible(rel: FiniteRelation, P: np.ndarray, tol: float = REVERSIBILITY_TOL) -> None:
    P = np.asarray(P, dtype=float)
    n = rel.size
    if P.shape != (n, n):
        raise ParameterError("transition matrix has the wrong shape")
    if np.any(P < 0) or np.max(np.abs(P.sum(axis=1) - 1.0)) > tol:
        raise ParameterError("transition matrix must be row-stochastic")
    if np.any(P[~rel.same_r] != 0):
        raise ParameterError("transitions must stay inside R-classes")
    flow = rel.pi[:, None] * P
    bad = np.abs(flow - flow.T)
    scale = np.maximum(np.abs(flow), np.abs(flow.T)).max()
    if bad.max() > tol * max(scale, 1.0):
        x, y = np.unravel_index(np.argmax(bad), bad.shape)
        raise ReversibilityError(f"pi(x)P(x,y) != pi(y)P(y,x) at ({x}, {y}), gap {bad.max():.3e}")


@dataclass
class KernelSequence:
    """``f[k-1]`` is the kernel ``f_k``; ``generator`` is the one-step matrix it came from (if any)."""

    f: list
    generator: np.ndarray | None = None
    mode: str = "endpoint"

    @property
    def k_max(self) -> int:
        return len(self.f)

    def __getitem__(self, k: int) -> np.ndarray:
        if not 1 <= k <= self.k_max:
            raise ParameterError(f"kernel f_{k} not computed (k_max = {self.k_max})")
        return self.f[k - 1]

    def totals(self, k: int) -> np.ndarray:
        """``f̃_k(x) = Σ_y f_k(x, y)``."""
        return self[k].sum(axis=1)

    def copy(self) -> "KernelSequence":
        return KernelSequence([m.copy() for m in self.f], self.generator, self.mode)

    def write_csv(self, k: int, path) -> None:
        np.savetxt(path, self[k], delimiter=",", fmt="%.17g")


def build_kernels_from_walk(rel: FiniteRelation, P: np.ndarray, k_max: int,
                            mode: str = "endpoint") -> KernelSequence:
    """Kernels ``f_k`` built from a pi-reversible transition matrix.

    ``endpoint``: ``f_k(x,y) = P^(2k)(x,y) 1_S(x,y)``, the walk is free and only
    its endpoint must lie in the S-class of the start.
    ``confined``: ``f_k = (P 1_S)^(2k)``, the walk never leaves the S-class.
    """
    check_reversible(rel, P)
    if k_max < 1:
        raise ParameterError("k_max must be at least 1")
    S = rel.same_s
    if mode == "endpoint":
        G = np.asarray(P, dtype=float)
    elif mode == "confined":
        G = np.where(S, P, 0.0)
    else:
        raise ParameterError(f"unknown kernel mode {mode!r}")
    G2 = G @ G
    out, M = [], np.eye(rel.size)
    for _ in range(k_max):
        M = M @ G2
        out.append(np.where(S, M, 0.0))
    return KernelSequence(out, G, mode)


def limit_totals(rel: FiniteRelation, ks: KernelSequence) -> np.ndarray:
    """``f̃(x) = lim f̃_k(x)^(1/k)`` for walk-built kernels, by a dense eigensolver.

    It is the squared top eigenvalue of the generator on the connected
    component of x (symmetrized by pi so that ``eigh`` applies).
    """
    if ks.generator is None:
        raise ParameterError("limit totals need walk-built kernels")
    G = ks.generator
    ncomp, comp = connected_components(G != 0, directed=False)
    out = np.empty(rel.size)
    sq = np.sqrt(rel.pi)
    for c in range(ncomp):
        idx = np.flatnonzero(comp == c)
        block = G[np.ix_(idx, idx)]
        sym = sq[idx, None] * block / sq[None, idx]
        sym = 0.5 * (sym + sym.T)
        lam = np.linalg.eigvalsh(sym)
        out[idx] = max(abs(lam[0]), abs(lam[-1])) ** 2
    return out


# -- reports ---------------------------------------------------------------------

@dataclass
class Check:
    name: str
    ok: bool
    worst: float = 0.0
    witness: list = field(default_factory=list)
    detail: str = ""


@dataclass
class Report:
    checks: list = field(default_factory=list)
    values: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks if c.ok is not None)

    def get(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "checks": [asdict(c) for c in self.checks], "values": self.values}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _rel_excess(lhs, rhs):
    """Relative amount by which ``lhs`` exceeds ``rhs`` (0 when ``lhs <= rhs``)."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    scale = np.maximum(np.abs(rhs), np.abs(lhs))
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(scale > 0, (lhs - rhs) / scale, 0.0)
    return np.maximum(r, 0.0)


def check_hypotheses(rel: FiniteRelation, ks: KernelSequence, tol: float = REL_TOL) -> Report:
    """Hypotheses (a) symmetry and sign, (b) convolution bound, (c) finite positive totals, (d) growth witness."""
    if ks.k_max < 3:
        raise ParameterError("hypothesis checks need k_max >= 3")
    rep = Report()
    pi = rel.pi
    R = rel.same_r
    # (a)
    worst, wit = 0.0, []
    for k in range(1, ks.k_max + 1):
        f = ks[k]
        neg = f.min()
        if neg < 0:
            x, y = np.unravel_index(np.argmin(f), f.shape)
            worst, wit = max(worst, float(-neg)), [k, int(x), int(y)]
            continue
        if np.any(f[~R] != 0):
            x, y = np.argwhere((f != 0) & ~R)[0]
            worst, wit = max(worst, math.inf), [k, int(x), int(y)]
            continue
        flow = pi[:, None] * f
        diff = np.abs(flow - flow.T) / max(np.abs(flow).max(), 1e-300)
        if diff.max() > tol:
            x, y = np.unravel_index(np.argmax(diff), diff.shape)
            if diff.max() > worst:
                worst, wit = float(diff.max()), [k, int(x), int(y)]
    rep.checks.append(Check("a_symmetric", worst == 0.0, worst, wit,
                            "witness (k, x, y)" if wit else ""))
    # (b)
    totals = [None] + [ks.totals(k) for k in range(1, ks.k_max + 1)]
    worst, wit = 0.0, []
    for l in range(1, ks.k_max):
        for k in range(1, ks.k_max - l + 1):
            lhs = ks[l] @ totals[k]
            ex = _rel_excess(lhs, totals[l + k])
            if ex.max() > worst:
                worst, wit = float(ex.max()), [l, k, int(np.argmax(ex))]
    rep.checks.append(Check("b_convolution", worst <= tol, worst, wit, "witness (l, k, x)" if wit else ""))
    # (c)
    bad = [(k, int(x)) for k in range(1, ks.k_max + 1)
           for x in np.flatnonzero(~(np.isfinite(totals[k]) & (totals[k] > 0)))]
    rep.checks.append(Check("c_positive_finite", not bad, float(len(bad)), list(bad[:1])))
    # (d): best witness D(x) = min over available (l, k) of (f̃_{l+k} / f̃_k)^(1/l)
    if bad:
        rep.checks.append(Check("d_growth_witness", None, detail="inconclusive: (c) fails"))
    else:
        D = np.full(rel.size, np.inf)
        for l in range(1, ks.k_max):
            for k in range(1, ks.k_max - l + 1):
                D = np.minimum(D, (totals[l + k] / totals[k]) ** (1.0 / l))
        found = bool(np.all(D > 0))
        rep.values["D"] = D.tolist()
        if ks.generator is not None:
            hold2 = np.diag(ks.generator @ ks.generator)
            rep.values["two_step_hold"] = hold2.tolist()
            rep.values["hold_is_witness"] = bool(np.all(hold2 <= D * (1 + tol)))
        rep.checks.append(Check("d_growth_witness", True if found else None, float(D.min()),
                                [int(np.argmin(D))], "" if found else "inconclusive: no positive witness"))
    return rep


def phi_psi(rel: FiniteRelation, ks: KernelSequence, k: int) -> tuple[np.ndarray, np.ndarray]:
    f = ks[k]
    t = f.sum(axis=1)
    if np.any(t <= 0):
        raise ZeroDivisionError(f"f̃_{k} vanishes at point {int(np.argmin(t))}")
    phi = f @ (1.0 / t)
    inner = f @ t
    psi = t * (f @ (1.0 / inner))
    return phi, psi


def check_23_inequalities(rel: FiniteRelation, ks: KernelSequence, k: int, tol: float = REL_TOL) -> Report:
    """``f̃_k² <= φ_k f̃_2k`` and ``f̃_k³ <= ψ_k f̃_3k`` pointwise, plus the mass-transport identities."""
    if 3 * k > ks.k_max:
        raise ParameterError(f"need k_max >= {3 * k}")
    phi, psi = phi_psi(rel, ks, k)
    t1, t2, t3 = ks.totals(k), ks.totals(2 * k), ks.totals(3 * k)
    rep = Report()
    for name, lhs, rhs in (("square", t1 ** 2, phi * t2), ("cube", t1 ** 3, psi * t3)):
        ex = _rel_excess(lhs, rhs)
        rep.checks.append(Check(f"{name}_inequality", float(ex.max()) <= tol, float(ex.max()),
                                [int(np.argmax(ex))] if ex.max() > tol else []))
    base = rel.integral(rel.pi)
    for name, g in (("phi", phi), ("psi", psi)):
        val = rel.integral(rel.pi * g)
        err = abs(val - base) / base
        rep.checks.append(Check(f"{name}_mass_transport", err <= tol, err))
        rep.values[f"integral_pi_{name}"] = val
    rep.values["integral_pi"] = base
    return rep


def mass_transport_gap(rel: FiniteRelation, F: np.ndarray) -> float:
    """Relative gap between ``Σ_x Σ_y F(x,y)`` and ``Σ_x Σ_y F(y,x)`` over R-related pairs."""
    F = np.where(rel.same_r, F, 0.0)
    a = math.fsum(F.ravel())
    b = math.fsum(F.T.ravel())
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def check_conclusions(rel: FiniteRelation, ks: KernelSequence, f_limit: np.ndarray | None = None,
                      tol: float = REL_TOL, gap_from: int = 4) -> Report:
    """Conclusion (i) for every computed k and the approach of (ii) to ``max f̃``."""
    f_limit = limit_totals(rel, ks) if f_limit is None else np.asarray(f_limit, dtype=float)
    rep = Report()
    base = rel.integral(rel.pi)
    worst, wit = 0.0, []
    roots = []
    for k in range(1, ks.k_max + 1):
        t = ks.totals(k)
        lhs = rel.integral(rel.pi * t / f_limit ** k)
        ex = float(_rel_excess(lhs, base))
        if ex > worst:
            worst, wit = ex, [k]
        roots.append(rel.integral(rel.pi * t) ** (1.0 / k))
    rep.checks.append(Check("average_monotonicity", worst <= tol, worst, wit))
    top = float(f_limit.max())
    gaps = [abs(r - top) for r in roots]
    tail = gaps[gap_from - 1:]
    rises = [k + gap_from for k, (a, b) in enumerate(zip(tail, tail[1:])) if b > a * (1 + tol) + 1e-15]
    rep.checks.append(Check("sup_approach", not rises, float(gaps[-1]), rises,
                            f"gap to max f̃ decreasing for k >= {gap_from}"))
    rep.values.update({"f_limit_max": top, "root_sequence": roots, "gaps": gaps})
    return rep


def full_report(rel: FiniteRelation, ks: KernelSequence) -> Report:
    rep = Report()
    for part in (check_hypotheses(rel, ks),
                 *(check_23_inequalities(rel, ks, k) for k in range(1, ks.k_max // 3 + 1)),
                 check_conclusions(rel, ks)):
        for c in part.checks:
            if any(c.name == d.name for d in rep.checks):
                old = rep.get(c.name)
                if c.ok is False or (c.worst > old.worst and old.ok is not False):
                    rep.checks[rep.checks.index(old)] = c
            else:
                rep.checks.append(c)
    return rep


# -- instance generators ------------------------------------------------------------

def random_instance(rng: np.random.Generator, n: int, n_r: int | None = None, n_s: int | None = None,
                    extra: float = 1.0) -> tuple[FiniteRelation, np.ndarray]:
    """A random relation with a lazy reversible walk on each R-class.

    Each R-class carries a random connected graph with random conductances;
    every point holds at least half its conductance, so the walk is lazy and
    its transition matrix is positive semidefinite.  Weights are rescaled to
    mean one.
    """
    if n < 1:
        raise ParameterError("need at least one point")
    n_r = n_r or int(rng.integers(1, max(2, n // 10) + 1))
    n_r = min(n_r, n)
    r = np.sort(np.concatenate([np.arange(n_r), rng.integers(0, n_r, n - n_r)]))
    s = np.empty(n, dtype=np.int64)
    C = np.zeros((n, n))
    next_s = 0
    for c in range(n_r):
        idx = np.flatnonzero(r == c)
        m = len(idx)
        k_s = n_s or int(rng.integers(1, m + 1))
        k_s = min(k_s, m)
        labels = np.concatenate([np.arange(k_s), rng.integers(0, k_s, m - k_s)])
        rng.shuffle(labels)
        s[idx] = next_s + labels
        next_s += k_s
        for j in range(1, m):  # random tree
            i = int(rng.integers(0, j))
            w = rng.uniform(0.1, 1.0)
            C[idx[i], idx[j]] += w
            C[idx[j], idx[i]] += w
        for _ in range(int(extra * m)):
            a, b = rng.integers(0, m, 2)
            if a != b:
                w = rng.uniform(0.1, 1.0)
                C[idx[a], idx[b]] += w
                C[idx[b], idx[a]] += w
    off = C.sum(axis=1)
    hold = off * (1.0 + rng.uniform(0.0, 1.0, n))
    hold[off == 0] = 1.0
    np.fill_diagonal(C, hold)
    w = C.sum(axis=1)
    P = C / w[:, None]
    pi = w / w.mean()
    return FiniteRelation(r, s, pi), P


def demo_instance() -> tuple[FiniteRelation, np.ndarray]:
    """Two R-classes (a 4-cycle and a path of 3) with nontrivial S-classes."""
    edges = [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6)]
    C = np.zeros((7, 7))
    for a, b in edges:
        C[a, b] = C[b, a] = 1.0
    np.fill_diagonal(C, C.sum(axis=1))
    w = C.sum(axis=1)
    rel = FiniteRelation([0, 0, 0, 0, 1, 1, 1], [0, 0, 1, 1, 2, 3, 3], w / w.mean())
    return rel, C / w[:, None]


def inject_negative(ks: KernelSequence, rng: np.random.Generator) -> tuple[KernelSequence, tuple[int, int]]:
    """Copy with one diagonal entry of a random kernel made negative."""
    out = ks.copy()
    k = int(rng.integers(1, ks.k_max + 1))
    x = int(rng.integers(0, ks[1].shape[0]))
    out.f[k - 1][x, x] = -abs(out.f[k - 1][x, x]) - 1e-3
    return out, (k, x)


def shrink_second(rel: FiniteRelation, ks: KernelSequence) -> KernelSequence:
    """Copy with ``f_2`` scaled below the square inequality at k = 1 (so (b) fails too)."""
    phi, _ = phi_psi(rel, ks, 1)
    t1, t2 = ks.totals(1), ks.totals(2)
    c = 0.5 * float(np.min(t1 ** 2 / (phi * t2)))
    out = ks.copy()
    out.f[1] = out.f[1] * c
    return out
