import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cosrad.errors import ParameterError
from cosrad.graphs import build_ball, random_connected_graph
from cosrad.percolation import (
    EdgeCoupling,
    cluster_labels,
    cluster_of_root,
    percolate,
    tau_estimate,
    union_coupling,
    wilson_interval,
)

from oracles import components, exhaustive_tau, lattice_ball


def _same_partition(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return all(len(set(b[a == x])) == 1 for x in np.unique(a)) and len(np.unique(a)) == len(np.unique(b))


@given(st.integers(2, 30), st.integers(0, 30), st.integers(0, 2**31), st.floats(0.0, 1.0))
def test_clusters_match_bfs(n, extra, seed, p):
    g = random_connected_graph(n, extra, np.random.default_rng(seed))
    labels = EdgeCoupling(seed).labels(g)
    open_ = labels <= p
    u, v, _ = g.edge_arrays
    ref = components(n, list(zip(u[open_].tolist(), v[open_].tolist())))
    assert _same_partition(cluster_labels(g, open_), ref)


@given(st.integers(0, 2**31), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_threshold_coupling_is_monotone(seed, p, q):
    p, q = min(p, q), max(p, q)
    g = build_ball("free-abelian(2)", 4)
    c = EdgeCoupling(seed)
    P, Q = percolate(g, c, p), percolate(g, c, q)
    assert not np.any(P.open_edges & ~Q.open_edges)
    # clusters only merge as p grows
    cp, cq = P.cluster_id, Q.cluster_id
    for x in np.unique(cp):
        assert len(set(cq[cp == x])) == 1


def test_labels_stable_across_radii():
    c = EdgeCoupling(11)
    for fam in ("free(2)", "free-abelian(2)", "regular-tree(3)"):
        small, big = build_ball(fam, 3), build_ball(fam, 5)
        ls = dict(zip(c.keys(small).tolist(), c.labels(small).tolist()))
        lb = dict(zip(c.keys(big).tolist(), c.labels(big).tolist()))
        assert len(ls) == small.edge_count and len(lb) == big.edge_count
        assert all(lb[k] == v for k, v in ls.items())


def test_union_coupling_contains_and_validates():
    g = build_ball("free-abelian(2)", 6)
    P, Q = union_coupling(g, 0.3, 0.6, seed=5)
    assert not np.any(P.open_edges & ~Q.open_edges)
    with pytest.raises(ParameterError):
        union_coupling(g, 0.6, 0.3, seed=5)
    with pytest.raises(ParameterError):
        union_coupling(g, 0.3, 1.0, seed=5)
    with pytest.raises(ParameterError):
        percolate(g, EdgeCoupling(1), 1.2)


def test_edge_marginal():
    g = build_ball("free-abelian(2)", 60)
    p = 0.37
    s = percolate(g, EdgeCoupling(3), p)
    m = g.edge_count
    se = np.sqrt(p * (1 - p) / m)
    assert abs(s.open_count / m - p) <= 4 * se


@pytest.mark.parametrize("p", [0.3, 0.5, 0.8])
def test_tau_against_exhaustive_enumeration(p):
    verts, edges = lattice_ball(2, 2)
    exact = exhaustive_tau(verts, edges, p, (0, 0), (1, 1))
    g = build_ball("free-abelian(2)", 2)
    target = g.find(g_word := (0, 2))  # a then b
    assert tuple(g.coords[target]) == (1, 1)
    est = tau_estimate(g, p, 0, target, 4000, seed=21)
    assert est.ci_low <= exact <= est.ci_high
    assert tau_estimate(g, p, 3, 3, 10, seed=1).value == 1.0


def test_root_cluster_flags():
    tree = percolate(build_ball("regular-tree(3)", 4), EdgeCoupling(2), 0.6)
    assert not cluster_of_root(tree).approximate
    lat = percolate(build_ball("free-abelian(2)", 4), EdgeCoupling(2), 0.6)
    c = cluster_of_root(lat)
    assert c.approximate and c(0) and c.size >= 1


def test_wilson_interval_edges():
    assert wilson_interval(0, 0) == (0.0, 1.0)
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and 0 < hi < 0.2
    lo, hi = wilson_interval(100, 100)
    assert hi == 1.0


def test_writers(tmp_path):
    s = percolate(build_ball("free(2)", 2), EdgeCoupling(4), 0.5)
    s.write_edges(tmp_path / "e.csv")
    s.write_histogram(tmp_path / "h.csv")
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines[0] == "u,v,label,sign,open" and len(lines) == s.graph.edge_count + 1
    hist = s.size_histogram()
    assert sum(size * count for size, count in hist.items()) == s.graph.vertex_count


def test_extreme_parameters():
    g = build_ball("free-abelian(2)", 3)
    c = EdgeCoupling(1)
    s0, s1 = percolate(g, c, 0.0), percolate(g, c, 1.0)
    assert s0.open_count == 0 and len(np.unique(s0.cluster_id)) == g.vertex_count
    assert s1.open_count == g.edge_count and len(np.unique(s1.cluster_id)) == 1
    assert cluster_of_root(s0).size == 1 and cluster_of_root(s1).size == g.vertex_count


def test_union_coupling_special_cases():
    g = build_ball("free-abelian(2)", 10)
    P, Q = union_coupling(g, 0.4, 0.4, seed=3)
    assert np.array_equal(P.open_edges, Q.open_edges)
    P, Q = union_coupling(g, 0.0, 0.3, seed=3)
    assert P.open_count == 0 and Q.open_count > 0


def test_union_marginal_half_to_three_quarters():
    g = build_ball("free-abelian(2)", 160)
    _, Q = union_coupling(g, 0.5, 0.75, seed=8)
    m = g.edge_count
    assert m >= 100_000
    assert abs(Q.open_count / m - 0.75) <= 4 * np.sqrt(0.75 * 0.25 / m)


def test_tree_cluster_is_path_product():
    g = build_ball("regular-tree(3)", 4)
    u, v, _ = g.edge_arrays
    parent, _ = g.bfs_parent
    edge_of = {(int(a), int(b)): i for i, (a, b) in enumerate(zip(u, v))}
    for seed in range(20):
        s = percolate(g, EdgeCoupling(seed), 0.6)
        c = cluster_of_root(s)
        for x in range(g.vertex_count):
            ok, y = True, x
            while y:
                p = int(parent[y])
                ok &= bool(s.open_edges[edge_of[(min(p, y), max(p, y))]])
                y = p
            assert bool(c(x)) == ok


def test_tree_tau_two_steps():
    g = build_ball("regular-tree(4)", 3)
    target = int(np.flatnonzero(g.dist == 2)[0])
    est = tau_estimate(g, 0.5, 0, target, 5000, seed=4)
    assert abs(est.value - 0.25) <= 4 * np.sqrt(0.25 * 0.75 / 5000)


def test_cluster_labels_on_a_large_ball_match_bfs():
    g = build_ball("free-abelian(2)", 60)  # 7321 vertices
    s = percolate(g, EdgeCoupling(12), 0.5)
    u, v, _ = g.edge_arrays
    ref = components(g.vertex_count, list(zip(u[s.open_edges].tolist(), v[s.open_edges].tolist())))
    assert _same_partition(s.cluster_id, ref)
