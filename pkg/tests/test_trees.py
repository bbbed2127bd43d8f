import itertools
import math

import pytest
from hypothesis import given, settings, strategies as st

from opres.trees import (
    UNIT,
    PlanarTree,
    aut_generators,
    aut_leaf_perms,
    aut_order,
    build_tree,
    contract_edges,
    corolla,
    enumerate_planar,
    graft,
    graft_edge_info,
    iso_classes,
    iso_leaf_maps,
    remove_unary,
    tree_to_json,
)


# -- oracles -----------------------------------------------------------


def count_isos_brute(t1: PlanarTree, t2: PlanarTree) -> int:
    """Number of root-preserving isomorphisms t1 -> t2 by direct backtracking.

    Independent of aut_order: no canonical keys, no factorial formula, just
    recursive matching of child sequences.
    """
    if t1.children is None and t2.children is None:
        return 1
    if t1.children is None or t2.children is None:
        return 0
    if len(t1.children) != len(t2.children):
        return 0
    m = len(t1.children)
    total = 0
    for assignment in itertools.permutations(range(m)):
        prod = 1
        for j in range(m):
            prod *= count_isos_brute(t1.children[j], t2.children[assignment[j]])
            if prod == 0:
                break
        total += prod
    return total


def planar_presentations(t: PlanarTree) -> set[tuple]:
    """Encodings of every planar tree isomorphic to t, by recursive child shuffles."""
    if t.children is None:
        return {t.encoding}
    child_sets = [planar_presentations(c) for c in t.children]
    out: set[tuple] = set()
    for combo in itertools.product(*child_sets):
        for order in itertools.permutations(combo):
            out.add((1,) + tuple(order))
    return out


def small_trees(max_arity: int = 5) -> list[PlanarTree]:
    out = []
    for n in range(2, max_arity + 1):
        out.extend(enumerate_planar(n, min_valence=2))
    return out


tree_strategy = st.sampled_from(small_trees(5))


# -- basic structure ---------------------------------------------------


def test_unit_tree():
    assert UNIT.arity == 1
    assert UNIT.vertex_count == 0
    assert UNIT.edge_count == 0
    assert UNIT.notation() == "|"
    assert UNIT.is_unit


def test_stump():
    t = build_tree("()")
    assert t.arity == 0
    assert t.vertex_count == 1
    assert t.edge_count == 0


def test_parse_roundtrip():
    for text in ["|", "()", "(| |)", "((| |) |)", "(| (()) |)"]:
        assert build_tree(text).notation() == text


def test_parse_rejects_garbage():
    with pytest.raises(ValueError):
        build_tree("(| |")
    with pytest.raises(ValueError):
        build_tree("")
    with pytest.raises(ValueError):
        build_tree("(| |) |")


def test_arity_additive():
    t = build_tree("((| |) (| | |))")
    assert t.arity == 5
    assert t.vertex_count == 3
    assert t.edge_count == 2


def test_edges_index_convention():
    # edge i must be the parent edge of DFS vertex i + 1
    t = build_tree("((| (| |)) | ((| |) |))")
    edges = t.edges()
    assert len(edges) == t.edge_count
    for i, (parent, child) in enumerate(edges):
        assert child == i + 1
        assert parent < child


def test_edges_example():
    t = build_tree("(((| |) |) |)")
    assert t.edges() == [(0, 1), (1, 2)]
    t2 = build_tree("((| |) (| |))")
    assert t2.edges() == [(0, 1), (0, 2)]


def test_tree_json():
    t = build_tree("((| |) |)")
    assert tree_to_json(t) == {"arity": 3, "tree": "((| |) |)", "edges": [[0, 1]]}


# -- enumeration -------------------------------------------------------


def test_enumerate_reduced_counts():
    # reduced planar trees by arity follow the super-Catalan sequence
    expected = {1: 1, 2: 1, 3: 3, 4: 11, 5: 45}
    for n, count in expected.items():
        assert len(enumerate_planar(n, min_valence=2)) == count


def test_enumerate_arity4_edge_histogram():
    hist: dict[int, int] = {}
    for t in enumerate_planar(4, min_valence=2):
        hist[t.edge_count] = hist.get(t.edge_count, 0) + 1
    assert hist == {0: 1, 1: 5, 2: 5}


def test_enumerate_arity5_edge_histogram():
    # hand count: 1 corolla; 9 two-vertex trees (2+3+4 child positions);
    # 21 three-vertex (16 path shapes + 5 sibling shapes); 14 binary (Catalan)
    hist: dict[int, int] = {}
    for t in enumerate_planar(5, min_valence=2):
        hist[t.edge_count] = hist.get(t.edge_count, 0) + 1
    assert hist == {0: 1, 1: 9, 2: 21, 3: 14}


def test_enumerate_no_duplicates():
    for n in range(1, 6):
        ts = enumerate_planar(n, min_valence=2)
        assert len(set(t.encoding for t in ts)) == len(ts)


def test_enumerate_respects_bounds():
    for t in enumerate_planar(4, max_edges=1, min_valence=2):
        assert t.edge_count <= 1
    for t in enumerate_planar(4, min_valence=2):
        assert all(v >= 2 for v in t.valences())


def test_enumerate_unbounded_needs_reduced():
    with pytest.raises(ValueError):
        enumerate_planar(3, max_edges=None, min_valence=1)


def test_enumerate_with_unary_and_caps():
    # with unary vertices allowed the edge cap keeps things finite
    ts = enumerate_planar(1, max_edges=2, min_valence=1)
    # |, (|), ((|)), and nothing else: a lone leaf under up to 3 unary vertices
    # capped at 2 internal edges means at most 3 vertices in a chain
    assert sorted(t.notation() for t in ts) == ["(((|)))", "((|))", "(|)", "|"]


def test_enumerate_arity0_with_stumps():
    ts = enumerate_planar(0, max_edges=1, min_valence=0)
    # (), (()) are the arity-0 trees with at most one internal edge
    assert sorted(t.notation() for t in ts) == ["(())", "()"]


# -- canonical forms and isomorphism ------------------------------------


def test_canonical_is_sorted():
    # unit children encode below vertex children, so they come first
    t = build_tree("((| |) |)")
    assert t.canonical().notation() == "(| (| |))"
    assert build_tree("(| (| |))").canonical().notation() == "(| (| |))"


@given(tree_strategy)
def test_canonical_idempotent(t):
    c = t.canonical()
    assert c.canonical() == c


@given(tree_strategy)
def test_canonical_in_presentation_set(t):
    pres = planar_presentations(t)
    assert t.canonical_key in pres
    assert t.canonical_key == min(pres)


def test_iso_classes_arity4():
    classes = iso_classes(4, min_valence=2)
    assert sum(c.planar_count for c in classes) == 11
    by_edges: dict[int, int] = {}
    for c in classes:
        by_edges[c.tree.edge_count] = by_edges.get(c.tree.edge_count, 0) + 1
    # 1 corolla class, 2 two-vertex classes, 2 binary classes
    assert by_edges == {0: 1, 1: 2, 2: 2}


@given(tree_strategy)
@settings(max_examples=60)
def test_planar_count_times_aut_is_valence_product(t):
    pres = planar_presentations(t)
    expected = 1
    for v in t.valences():
        expected *= math.factorial(v)
    assert len(pres) * aut_order(t) == expected


# -- automorphisms ------------------------------------------------------


def test_aut_order_examples():
    assert aut_order(UNIT) == 1
    assert aut_order(corolla(2)) == 2
    assert aut_order(corolla(3)) == 6
    assert aut_order(build_tree("((| |) (| |))")) == 8
    assert aut_order(build_tree("((| |) |)")) == 2
    assert aut_order(build_tree("(() ())")) == 2


@given(tree_strategy)
@settings(max_examples=60)
def test_aut_order_matches_brute_force(t):
    assert aut_order(t) == count_isos_brute(t, t)


@given(tree_strategy)
@settings(max_examples=40)
def test_aut_leaf_perms_faithful_on_reduced(t):
    # no stumps, so the leaf action is faithful
    perms = aut_leaf_perms(t)
    assert len(perms) == aut_order(t)
    assert tuple(range(t.arity)) in perms


def test_aut_leaf_perms_not_faithful_with_stumps():
    t = build_tree("(() ())")
    assert aut_order(t) == 2
    assert aut_leaf_perms(t) == [()]


@given(tree_strategy)
@settings(max_examples=30)
def test_aut_leaf_perms_closed_under_composition(t):
    perms = set(aut_leaf_perms(t))
    sample = sorted(perms)[:6]
    for p in sample:
        for q in sample:
            assert tuple(q[p[i]] for i in range(len(p))) in perms


def test_iso_leaf_maps_between_presentations():
    t1 = build_tree("(| (| |))")
    t2 = build_tree("((| |) |)")
    maps = iso_leaf_maps(t1, t2)
    assert len(maps) == 2
    # leaf 0 of t1 (the bare leaf) must land on leaf 2 of t2
    assert all(m[0] == 2 for m in maps)
    assert iso_leaf_maps(t1, corolla(3)) == []


def test_generators_generate():
    for text in ["((| |) (| |))", "(| | (| |))", "((| |) (| |) (| |))"]:
        t = build_tree(text).canonical()
        gens = [g.leaf_perm for g in aut_generators(t)]
        n = t.arity
        group = {tuple(range(n))}
        frontier = list(group)
        while frontier:
            new = []
            for p in frontier:
                for g in gens:
                    q = tuple(g[p[i]] for i in range(n))
                    if q not in group:
                        group.add(q)
                        new.append(q)
            frontier = new
        assert len(group) == aut_order(t)


# -- grafting ------------------------------------------------------------


def test_graft_examples():
    t2 = corolla(2)
    assert graft(t2, 1, t2).notation() == "((| |) |)"
    assert graft(t2, 2, t2).notation() == "(| (| |))"
    assert graft(t2, 1, UNIT) == t2
    assert graft(UNIT, 1, t2) == t2


def test_graft_position_range():
    with pytest.raises(ValueError):
        graft(corolla(2), 0, UNIT)
    with pytest.raises(ValueError):
        graft(corolla(2), 3, UNIT)


@given(tree_strategy, tree_strategy, st.integers(1, 5))
@settings(max_examples=80)
def test_graft_arity(t, s, raw_pos):
    pos = 1 + (raw_pos - 1) % t.arity
    assert graft(t, pos, s).arity == t.arity + s.arity - 1


def test_graft_edge_info_new_edge():
    t = build_tree("((| |) |)")
    s = corolla(2)
    info = graft_edge_info(t, 3, s)
    assert info["tree"].notation() == "((| |) (| |))"
    assert info["new_edge"] == 1
    assert info["edge_map_host"] == {0: 0}
    assert info["edge_map_graft"] == {}


def test_graft_edge_info_shifts_host_edges():
    t = build_tree("(| (| |))")
    s = build_tree("((| |) |)")
    info = graft_edge_info(t, 1, s)
    # s occupies DFS positions 1..2, pushing t's old vertex 1 to index 3
    assert info["new_edge"] == 0
    assert info["edge_map_graft"] == {0: 1}
    assert info["edge_map_host"] == {0: 2}
    assert info["tree"].notation() == "(((| |) |) (| |))"


@given(tree_strategy, tree_strategy, st.integers(1, 5))
@settings(max_examples=60)
def test_graft_edge_info_consistent(t, s, raw_pos):
    pos = 1 + (raw_pos - 1) % t.arity
    info = graft_edge_info(t, pos, s)
    result = info["tree"]
    assert result == graft(t, pos, s)
    mapped = set(info["edge_map_host"].values()) | set(info["edge_map_graft"].values())
    if info["new_edge"] is not None:
        mapped.add(info["new_edge"])
    assert mapped == set(range(result.edge_count))


# -- contraction and unary removal ---------------------------------------


def test_contract_single_edge():
    t = build_tree("((| |) |)")
    out, vmap = contract_edges(t, {0})
    assert out == corolla(3)
    assert vmap == {0: 0, 1: 0}


def test_contract_preserves_planar_order():
    t = build_tree("(| (| |) |)")
    out, _ = contract_edges(t, {0})
    assert out == corolla(4)


def test_contract_nested():
    t = build_tree("(((| |) |) |)")
    out, vmap = contract_edges(t, {1})
    assert out.notation() == "((| | |) |)"
    assert vmap == {0: 0, 1: 1, 2: 1}
    out2, vmap2 = contract_edges(t, {0, 1})
    assert out2 == corolla(4)
    assert vmap2 == {0: 0, 1: 0, 2: 0}


def test_contract_edge_range():
    with pytest.raises(ValueError):
        contract_edges(corolla(2), {0})


@given(tree_strategy, st.data())
@settings(max_examples=80)
def test_contract_arity_and_counts(t, data):
    if t.edge_count == 0:
        subset: set[int] = set()
    else:
        subset = set(
            data.draw(st.lists(st.integers(0, t.edge_count - 1), unique=True))
        )
    out, vmap = contract_edges(t, subset)
    assert out.arity == t.arity
    assert out.vertex_count == t.vertex_count - len(subset)
    assert set(vmap) == set(range(t.vertex_count))


def test_remove_unary_midtree():
    t = build_tree("((| (|)) |)")
    # vertex 2 is the unary one
    assert t.valences() == [2, 2, 1]
    assert remove_unary(t, {2}).notation() == "((| |) |)"


def test_remove_unary_root():
    t = build_tree("((| |))")
    assert remove_unary(t, {0}) == corolla(2)


def test_remove_unary_leaf_slot():
    t = build_tree("(| (|))")
    assert remove_unary(t, {1}) == corolla(2)


def test_remove_unary_whole_chain():
    t = build_tree("((()))")
    # arity 0 chain: root unary, middle unary, stump
    assert t.valences() == [1, 1, 0]
    assert remove_unary(t, {0, 1}) == build_tree("()")
    t2 = build_tree("((|))")
    assert remove_unary(t2, {0, 1}) == UNIT


def test_remove_unary_validates():
    with pytest.raises(ValueError):
        remove_unary(corolla(2), {0})
    with pytest.raises(ValueError):
        remove_unary(build_tree("(|)"), {5})
