"""Reference computations written independently of the package code.

They favour plain loops and exhaustive enumeration over speed.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from fractions import Fraction

import numpy as np

LETTERS = "abcdefghijklmnopqrstuvwxyz"


def radial_return(d: int, m_max: int, hold: float = 0.0) -> list[float]:
    """P(X_m = root) for the lazy simple walk on the d-regular tree, m = 0..m_max.

    Birth-death chain on the distance with a dict of level masses.
    """
    law = {0: 1.0}
    out = [1.0]
    for _ in range(m_max):
        nxt: dict[int, float] = {}
        for r, mass in law.items():
            if hold:
                nxt[r] = nxt.get(r, 0.0) + hold * mass
            move = (1.0 - hold) * mass
            if r == 0:
                nxt[1] = nxt.get(1, 0.0) + move
            else:
                nxt[r + 1] = nxt.get(r + 1, 0.0) + move * (d - 1) / d
                nxt[r - 1] = nxt.get(r - 1, 0.0) + move / d
        law = nxt
        out.append(law.get(0, 0.0))
    return out


def radial_distance_law(d: int, m: int) -> dict[int, Fraction]:
    """Exact law of the distance after m steps of the simple walk on the d-regular tree."""
    law = {0: Fraction(1)}
    for _ in range(m):
        nxt: dict[int, Fraction] = {}
        for r, mass in law.items():
            if r == 0:
                nxt[1] = nxt.get(1, 0) + mass
            else:
                nxt[r + 1] = nxt.get(r + 1, 0) + mass * Fraction(d - 1, d)
                nxt[r - 1] = nxt.get(r - 1, 0) + mass * Fraction(1, d)
        law = nxt
    return law


def annealed_tree(d: int, p: float, n_max: int) -> list[float]:
    """E p_2n(o, C_p) on the d-regular tree = sum_r P(|X_2n| = r) p^r (unique paths)."""
    out = []
    for n in range(1, n_max + 1):
        law = radial_distance_law(d, 2 * n)
        out.append(math.fsum(float(m) * p ** r for r, m in law.items()))
    return out


def free_words(k: int, R: int) -> list[str]:
    """All reduced words of length <= R in the free group on k letters (uppercase = inverse)."""
    alphabet = [c for i in range(k) for c in (LETTERS[i], LETTERS[i].upper())]
    words = [""]
    frontier = [""]
    for _ in range(R):
        nxt = []
        for w in frontier:
            for c in alphabet:
                if w and w[-1] == c.swapcase():
                    continue
                nxt.append(w + c)
        words += nxt
        frontier = nxt
    return words


def reduce_word(w: str) -> str:
    out = []
    for c in w:
        if out and out[-1] == c.swapcase():
            out.pop()
        else:
            out.append(c)
    return "".join(out)


def free_walk_law(k: int, n: int) -> dict[str, float]:
    """Law of the simple walk on F_k after n steps by enumerating all (2k)^n step strings."""
    alphabet = [c for i in range(k) for c in (LETTERS[i], LETTERS[i].upper())]
    law: dict[str, float] = {}
    w = 1.0 / (2 * k) ** n
    for steps in itertools.product(alphabet, repeat=n):
        end = reduce_word("".join(steps))
        law[end] = law.get(end, 0.0) + w
    return law


def lattice_ball(d: int, R: int):
    """Vertices (tuples) and nearest-neighbour edges of the l1 ball of radius R in Z^d."""
    verts = [v for v in itertools.product(range(-R, R + 1), repeat=d) if sum(map(abs, v)) <= R]
    vset = set(verts)
    edges = []
    for v in verts:
        for i in range(d):
            w = list(v)
            w[i] += 1
            w = tuple(w)
            if w in vset:
                edges.append((v, w))
    return verts, edges


def components(n: int, edges) -> list[int]:
    """Component representative per vertex by breadth-first search."""
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    comp = [-1] * n
    for s in range(n):
        if comp[s] >= 0:
            continue
        comp[s] = s
        q = deque([s])
        while q:
            u = q.popleft()
            for v in adj[u]:
                if comp[v] < 0:
                    comp[v] = s
                    q.append(v)
    return comp


def exhaustive_tau(verts, edges, p: float, u, v) -> float:
    """Probability that u and v are joined by open edges, summing over all 2^|E| states."""
    idx = {x: i for i, x in enumerate(verts)}
    e = [(idx[a], idx[b]) for a, b in edges]
    total = 0.0
    m = len(e)
    for mask in range(1 << m):
        open_edges = [e[i] for i in range(m) if mask >> i & 1]
        k = len(open_edges)
        comp = components(len(verts), open_edges)
        if comp[idx[u]] == comp[idx[v]]:
            total += p ** k * (1 - p) ** (m - k)
    return total


def dirichlet_matrix(g, weights, hold=0.0) -> np.ndarray:
    """Dense Markov matrix of the walk restricted to the ball (mass leaving is killed)."""
    n = g.vertex_count
    P = np.zeros((n, n))
    for v in range(n):
        P[v, v] += hold
        for c, w in enumerate(weights):
            u = int(g.nbr[v, c])
            if u >= 0:
                P[v, u] += w
    return P


def four_step_paths(P: np.ndarray, x: int, y: int) -> float:
    """Sum over all paths x -> z1 -> z2 -> z3 -> y of the step products."""
    n = P.shape[0]
    total = 0.0
    for z1 in range(n):
        a = P[x, z1]
        if a == 0:
            continue
        for z2 in range(n):
            b = a * P[z1, z2]
            if b == 0:
                continue
            for z3 in range(n):
                total += b * P[z2, z3] * P[z3, y]
    return total
