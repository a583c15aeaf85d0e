import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cosrad.errors import OracleUndecidableError, ParameterError, ResourceLimitError
from cosrad.graphs import (
    GroupFamily,
    SubgroupOracle,
    build_ball,
    build_schreier,
    cluster_restricted_subgraph,
    cycle_graph,
    format_graph,
    from_edge_list,
    parse_graph,
    path_graph,
    random_connected_graph,
)

from oracles import free_words, lattice_ball

families = st.sampled_from(["free(1)", "free(2)", "free(3)", "regular-tree(3)", "regular-tree(4)",
                            "free-abelian(1)", "free-abelian(2)", "free-abelian(3)"])


def test_parse_family_aliases():
    assert GroupFamily.parse("tree(4)") == GroupFamily("regular-tree", 4)
    assert GroupFamily.parse(" free ( 2 ) ").name == "free(2)"
    with pytest.raises(ParameterError):
        GroupFamily.parse("surface(2)")
    with pytest.raises(ParameterError):
        GroupFamily("free", 0)


@given(families, st.integers(0, 5))
def test_ball_volume_and_levels(name, R):
    fam = GroupFamily.parse(name)
    g = build_ball(fam, R)
    assert g.vertex_count == fam.ball_volume(R)
    assert np.all(np.diff(g.dist) >= 0)
    assert g.dist[0] == 0 and int(g.dist.max()) == R
    # neighbors differ in distance by exactly one on these bipartite Cayley graphs
    for c in range(g.ncols):
        v = np.asarray(g.nbr[:, c])
        ok = v >= 0
        assert np.all(np.abs(g.dist[v[ok]] - g.dist[ok]) == 1)
        # inverse column undoes the step
        back = np.asarray(g.nbr[v[ok], fam.inv_col[c]])
        assert np.array_equal(back, np.flatnonzero(ok))
    # only the outermost sphere has missing neighbors
    assert np.all(g.degrees[g.dist < R] == fam.degree)


@given(st.integers(1, 3), st.integers(0, 4))
def test_free_ball_matches_word_enumeration(k, R):
    fam = GroupFamily("free", k)
    g = build_ball(fam, R)
    words = free_words(k, R)
    assert g.vertex_count == len(words)
    seen = {fam.format_word(g.word(v)) for v in range(g.vertex_count)}
    assert seen == set(words)
    for w in words[:50]:
        v = g.find(fam.parse_word(w))
        assert v >= 0 and fam.format_word(g.word(v)) == w


@pytest.mark.parametrize("d,R", [(1, 4), (2, 3), (3, 2)])
def test_abelian_ball_matches_lattice(d, R):
    g = build_ball(GroupFamily("free-abelian", d), R)
    verts, edges = lattice_ball(d, R)
    assert g.vertex_count == len(verts)
    assert g.edge_count == len(edges)
    assert {tuple(c) for c in g.coords.tolist()} == set(verts)


def test_word_hash_stable_across_radii():
    small, big = build_ball("free(2)", 3), build_ball("free(2)", 5)
    hs = small.word_hash
    hb = big.word_hash[: small.vertex_count]
    assert np.array_equal(hs, hb)
    assert len(np.unique(big.word_hash)) == big.vertex_count


def test_ball_cap():
    with pytest.raises(ResourceLimitError):
        build_ball("free(3)", 10, max_vertices=1000)


def test_schreier_cyclic_quotient():
    fam = GroupFamily("free", 2)
    H = SubgroupOracle.cyclic(fam, "a")
    g = build_schreier(fam, H, 4)
    # the coset H has a loop on a and A; every other vertex is tree-like
    assert g.nbr[0, 0] == 0 and g.nbr[0, 1] == 0
    assert g.vertex_count == 1 + 2 * sum(3 ** i for i in range(4))


def test_schreier_finite_index_closes():
    fam = GroupFamily("free", 1)
    # Z / 3Z as a coset table: a -> +1, A -> -1
    table = [[1, 2], [2, 0], [0, 1]]
    g = build_schreier(fam, SubgroupOracle.from_table(table), 5)
    assert g.closed and g.vertex_count == 3
    with pytest.raises(OracleUndecidableError):
        build_schreier(fam, SubgroupOracle.from_table([[1, -1], [-1, 0]]), 3)


@given(st.lists(st.sampled_from("aAbB"), max_size=8))
def test_cyclic_membership_against_reduction(letters):
    fam = GroupFamily("free", 2)
    H = SubgroupOracle.cyclic(fam, "ab")
    w = fam.parse_word("".join(letters))
    from oracles import reduce_word
    red = reduce_word("".join(letters))
    expect = red == "ab" * (len(red) // 2) or red == "BA" * (len(red) // 2)
    assert H.contains(w, fam) == expect


def test_subgroup_parse():
    fam = GroupFamily("free", 2)
    assert SubgroupOracle.parse(fam, "<a>") == SubgroupOracle.cyclic(fam, "a")
    assert SubgroupOracle.parse(fam, "cyclic:ab").word == fam.parse_word("ab")
    assert SubgroupOracle.parse(fam, "trivial").kind == "trivial"
    with pytest.raises(ParameterError):
        SubgroupOracle.cyclic(fam, "aA")


def test_plain_graphs():
    g = cycle_graph(5)
    assert g.closed and g.vertex_count == 5 and g.edge_count == 5
    assert list(g.dist) == [0, 1, 1, 2, 2]
    p = path_graph(4)
    assert p.edge_count == 3 and int(p.dist.max()) == 3
    with pytest.raises(ParameterError):
        from_edge_list(3, [(0, 1)])
    with pytest.raises(ParameterError):
        from_edge_list(2, [(0, 0), (0, 1)])


@given(st.integers(2, 40), st.integers(0, 40), st.integers(0, 2**32 - 1))
def test_random_graph_connected_and_simple(n, extra, seed):
    g = random_connected_graph(n, extra, np.random.default_rng(seed))
    assert g.vertex_count == n
    u, v, _ = g.edge_arrays
    assert np.all(u != v)
    assert len(set(zip(u.tolist(), v.tolist()))) == len(u)
    assert len(u) == min(n - 1 + extra, n * (n - 1) // 2)
    # greedy coloring gives a proper edge coloring
    for c in range(g.ncols):
        col = np.asarray(g.nbr[:, c])
        ok = col >= 0
        assert np.array_equal(np.asarray(g.nbr[col[ok], c]), np.flatnonzero(ok))


@given(families, st.integers(0, 3))
def test_graph_text_round_trip(name, R):
    g = build_ball(name, R)
    h = parse_graph(format_graph(g))
    assert h.family == g.family and h.radius == g.radius
    assert np.array_equal(np.asarray(h.nbr), np.asarray(g.nbr))
    assert np.array_equal(h.dist, g.dist)


def test_schreier_round_trip_keeps_loops():
    fam = GroupFamily("free", 2)
    g = build_schreier(fam, SubgroupOracle.cyclic(fam, "a"), 3)
    h = parse_graph(format_graph(g))
    assert np.array_equal(np.asarray(h.nbr), np.asarray(g.nbr))


def test_cluster_restricted_subgraph():
    g = build_ball("free-abelian(1)", 4)  # path -4..4, root 0
    keep = np.abs(g.coords[:, 0]) <= 2
    sub = cluster_restricted_subgraph(g, keep)
    assert sub.vertex_count == 5
    assert sorted(g.coords[sub._cache["host_ids"], 0].tolist()) == [-2, -1, 0, 1, 2]


def test_whole_and_trivial_quotients():
    fam = GroupFamily("free", 2)
    whole = build_schreier(fam, SubgroupOracle.whole(), 3)
    assert whole.vertex_count == 1 and whole.closed
    assert np.all(np.asarray(whole.nbr) == 0) and whole.ncols == 4
    triv = build_schreier(fam, SubgroupOracle.trivial(), 4)
    ball = build_ball(fam, 4)
    assert np.array_equal(np.asarray(triv.nbr), np.asarray(ball.nbr))


def test_cyclic_quotient_vertex_count_by_coset_enumeration():
    from oracles import free_words, reduce_word

    fam = GroupFamily("free", 2)
    H = SubgroupOracle.cyclic(fam, "a")
    for R in (1, 2, 3):
        g = build_schreier(fam, H, R)
        # right cosets H w: w and a^m w coincide, so strip leading a/A letters
        cosets = {reduce_word(w).lstrip("aA") for w in free_words(2, R)}
        assert g.vertex_count == len(cosets)
    g = build_schreier(fam, H, 2)
    assert int(g.nbr[0, 0]) == 0 and int(g.nbr[0, 2]) != 0 and int(g.nbr[0, 3]) != 0


@given(st.lists(st.sampled_from("aAbB"), max_size=6), st.lists(st.sampled_from("aAbB"), max_size=6))
def test_subgroup_predicate_closed_and_cosets_constant(u, v):
    fam = GroupFamily("free", 2)
    H = SubgroupOracle.cyclic(fam, "ab")
    wu, wv = fam.parse_word("".join(u)), fam.parse_word("".join(v))
    inv = fam.inv_col
    if H.contains(wu, fam) and H.contains(wv, fam):
        assert H.contains(wu + wv, fam)
        assert H.contains(tuple(inv[c] for c in reversed(wu)), fam)
    # h * w lies in the coset of w for h in H
    h = fam.parse_word("ab") * 2
    assert H.coset_id(h + wv, fam) == H.coset_id(wv, fam)


def test_cluster_restriction_trivial_cases():
    from cosrad.percolation import EdgeCoupling, percolate

    g = build_ball("free(2)", 3)
    same = cluster_restricted_subgraph(g, np.ones(g.vertex_count, bool))
    assert np.array_equal(np.asarray(same.nbr), np.asarray(g.nbr))
    alone = cluster_restricted_subgraph(g, [0])
    assert alone.vertex_count == 1 and np.all(np.asarray(alone.nbr) == -1)
    s = percolate(g, EdgeCoupling(3), 0.6)
    keep = s.cluster_id == s.cluster_id[0]
    sub = cluster_restricted_subgraph(g, keep)
    assert sub.vertex_count == int(keep.sum())
