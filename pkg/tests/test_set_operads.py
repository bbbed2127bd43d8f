import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

import opres.set_operads as so
from opres import perms
from opres.segments import (
    FiniteSegment,
    SegmentMap,
    chain_segment,
    codiagonal,
    diamond,
    diamond_collapse,
    segment_check,
    segment_map_check,
)
from opres.set_operads import (
    AssOperad,
    ComOperad,
    FreePointedOperad,
    GodementTower,
    InfiniteEnumerationError,
    TableOperad,
    WSetElement,
    WSetOperad,
    W_UNIT,
    build_node,
    canon_node,
    compare_free,
    compare_godement_w,
    confluence_experiment,
    element_from_data,
    element_to_json,
    enumerate_w_elements,
    free_pointed,
    godement_simplicial_check,
    is_normal_form,
    node_leaves,
    normalize,
    operad_from_json,
    operad_to_json,
    random_raw_instance,
    reachable_normal_forms,
    rewrite_steps,
    validate_operad,
    w_act,
    w_compose,
    w_diamond_compare,
    w_eval,
    w_segment_apply,
)
from opres.trees import PlanarTree, corolla, enumerate_planar

ASS = AssOperad()
COM = ComOperad()
L = PlanarTree(None)


# -- independent orbit oracle --------------------------------------------------
#
# The orbit partition of decorated presentations under adjacent sibling
# swaps (label twisted by the transposition), computed by plain graph
# search.  No sorting, no canonical forms: an independent count of the
# equivalence classes that enumerate_w_elements claims to list.


def swap_moves(P, node):
    label, items = node
    k = len(items)
    out = []
    for j in range(k - 1):
        tau = list(range(k))
        tau[j], tau[j + 1] = tau[j + 1], tau[j]
        swapped = items[:j] + (items[j + 1], items[j]) + items[j + 2 :]
        out.append((P.act(k, label, tuple(tau)), swapped))
    for j, it in enumerate(items):
        if it[0] == "edge":
            for sub in swap_moves(P, it[2]):
                out.append((label, items[:j] + (("edge", it[1], sub),) + items[j + 1 :]))
    return out


def all_presentations(P, H, arity, min_valence=2):
    lengths_pool = [ln for ln in range(H.size) if ln != H.zero]
    states = set()
    for T in enumerate_planar(arity, None, min_valence):
        if T.children is None:
            continue
        pools = [P.elements(v) for v in T.valences()]
        if any(not p for p in pools):
            continue
        for labels in itertools.product(*pools):
            for lens in itertools.product(lengths_pool, repeat=T.edge_count):
                for leaves in itertools.permutations(range(arity)):
                    states.add(build_node(T, labels, lens, leaves))
    return states


def orbit_count(P, states):
    seen = set()
    count = 0
    for s in states:
        if s in seen:
            continue
        count += 1
        stack = [s]
        seen.add(s)
        while stack:
            cur = stack.pop()
            for nxt in swap_moves(P, cur):
                assert nxt in states, "swap move left the presentation set"
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
    return count


def test_orbit_oracle_free_on_ass():
    # frozen counts from the oracle: free pointed operad on the Ass collection
    expected = {2: 2, 3: 18}
    for n, want in expected.items():
        states = all_presentations(ASS, chain_segment(1), n)
        assert orbit_count(ASS, states) == want
        canons = {canon_node(ASS, s) for s in states}
        assert len(canons) == want
        listed = enumerate_w_elements(ASS, chain_segment(1), n)
        assert {e.node for e in listed if e.node is not None} == canons
        assert len(listed) == want + (1 if n == 1 else 0)


def test_orbit_oracle_chain2():
    states = all_presentations(ASS, chain_segment(2), 3)
    assert orbit_count(ASS, states) == 30
    assert len(enumerate_w_elements(ASS, chain_segment(2), 3)) == 30


def test_canon_constant_on_swap_neighbors():
    states = all_presentations(ASS, chain_segment(2), 3)
    for s in itertools.islice(states, 40):
        c = canon_node(ASS, s)
        for nxt in swap_moves(ASS, s):
            assert canon_node(ASS, nxt) == c


# -- the word operad and table operads ----------------------------------------


def test_ass_axioms():
    assert validate_operad(ASS, 4) == []


def test_com_axioms():
    assert validate_operad(COM, 4) == []


def test_ass_word_semantics():
    # (a0 a1) composed in slot 1 with (b0 b1): a0 (b0 b1) read off as 123
    assert ASS.compose(2, 0, (0, 1), 2, (0, 1)) == (0, 1, 2)
    assert ASS.compose(2, 1, (1, 0), 2, (0, 1)) == (1, 2, 0)
    assert ASS.name_of(3, (1, 2, 0)) == "231"
    # x.sigma feeds input sigma(p) to slot p
    assert ASS.act(3, (0, 1, 2), (2, 0, 1)) == (2, 0, 1)
    assert ASS.act(2, (0, 1), (1, 0)) == (1, 0)


def test_json_round_trip():
    data = operad_to_json(ASS, 3)
    Q = operad_from_json(data)
    assert validate_operad(Q, 3) == []
    for n in range(1, 4):
        assert Q.elements(n) == tuple(ASS.name_of(n, x) for x in ASS.elements(n))
    assert Q.compose(2, 0, "12", 2, "21") == ASS.name_of(3, ASS.compose(2, 0, (0, 1), 2, (1, 0)))


def test_table_operad_detects_corruption():
    data = operad_to_json(ASS, 3)
    data["compose"]["12 o1 12"] = "321"
    Q = operad_from_json(data)
    assert validate_operad(Q, 3) != []


def test_table_operad_rejects_duplicate_names():
    with pytest.raises(ValueError):
        TableOperad({1: ["e"], 2: ["e"]}, "e", {}, {})


def test_missing_table_entry_raises():
    Q = operad_from_json(operad_to_json(ASS, 2))
    with pytest.raises(KeyError):
        Q.compose(2, 0, "12", 2, "12")  # arity 3 results were never tabulated


# -- canonical forms -----------------------------------------------------------


def test_presentation_invariance_explicit():
    # swapping the two children of a corolla twists the label
    a = element_from_data(ASS, corolla(2), [(0, 1)], [], (1, 0))
    b = element_from_data(ASS, corolla(2), [(1, 0)], [], (0, 1))
    assert a == b
    assert w_eval(ASS, a) == (1, 0)


def test_canon_idempotent():
    rng = random.Random(3)
    H = chain_segment(2)
    for _ in range(50):
        tree, labels, lengths, leaves = random_raw_instance(rng, ASS, H, rng.randint(1, 4), 3)
        node = build_node(tree, labels, lengths, leaves)
        c = canon_node(ASS, node)
        assert canon_node(ASS, c) == c


@given(st.integers(0, 10**9))
@settings(max_examples=80)
def test_canon_invariant_under_swap_walks(seed):
    rng = random.Random(seed)
    H = chain_segment(2)
    tree, labels, lengths, leaves = random_raw_instance(rng, ASS, H, rng.randint(1, 4), 4)
    node = build_node(tree, labels, lengths, leaves)
    c = canon_node(ASS, node)
    cur = node
    for _ in range(6):
        moves = swap_moves(ASS, cur)
        if not moves:
            break
        cur = rng.choice(moves)
        assert canon_node(ASS, cur) == c


class _TwistCollection:
    """Tiny collection with a nullary element and a free S_2 orbit in
    arity 2, to exercise tie-breaking between identical leafless
    subtrees."""

    def elements(self, n):
        return {0: ("c",), 1: ("e",), 2: ("m", "w")}.get(n, ())

    @property
    def unit(self):
        return "e"

    def act(self, n, x, sigma):
        if n == 2 and sigma == (1, 0):
            return {"m": "w", "w": "m"}[x]
        return x

    def name_of(self, n, x):
        return x


def test_tie_between_identical_stumps():
    T = _TwistCollection()
    stump = ("c", ())
    for lab in ("m", "w"):
        node = (lab, (("edge", 1, stump), ("edge", 1, stump)))
        assert canon_node(T, node) == ("m", (("edge", 1, stump), ("edge", 1, stump)))
    elems = enumerate_w_elements(T, chain_segment(1), 0, vertex_cap=3)
    assert len(elems) == 2  # the stump itself and one m/w orbit over two stumps


def test_uncapped_enumeration_guard():
    T = _TwistCollection()
    with pytest.raises(InfiniteEnumerationError):
        enumerate_w_elements(T, chain_segment(1), 2)


# -- rewriting ----------------------------------------------------------------


def two_level_tree():
    # root(2) with an inner binary vertex on its first input
    return PlanarTree((PlanarTree((L, L)), L))


def unary_sandwich_tree():
    # root(2) -> [unary vertex -> binary vertex, leaf]
    return PlanarTree((PlanarTree((PlanarTree((L, L)),)), L))


def test_contract_rule():
    H = chain_segment(2)
    got = normalize(ASS, H, two_level_tree(), [(0, 1), (0, 1)], [0], (0, 1, 2))
    assert got == element_from_data(ASS, corolla(3), [(0, 1, 2)], [], (0, 1, 2))


def test_drop_rule():
    H = chain_segment(2)
    tree = PlanarTree((PlanarTree((L,)), L))
    got = normalize(ASS, H, tree, [(0, 1), (0,)], [2], (0, 1))
    assert got == element_from_data(ASS, corolla(2), [(0, 1)], [], (0, 1))


def test_promote_and_collapse_rules():
    H = chain_segment(2)
    tree = PlanarTree((corolla(2),))
    got = normalize(ASS, H, tree, [(0,), (1, 0)], [1], (0, 1))
    assert got == element_from_data(ASS, corolla(2), [(1, 0)], [], (0, 1))
    bare = PlanarTree((L,))
    assert normalize(ASS, H, bare, [(0,)], [], (0,)) == W_UNIT


def noncommutative_segment():
    # {0, x, y, 1} with x v y = x and y v x = y (left projection band)
    join = (
        (0, 1, 2, 3),
        (1, 1, 1, 3),
        (2, 2, 2, 3),
        (3, 3, 3, 3),
    )
    return FiniteSegment(("0", "x", "y", "1"), 0, 3, join)


def test_noncommutative_segment_is_valid():
    assert segment_check(noncommutative_segment()) == []


def test_join_rule_takes_upper_length_first():
    H = noncommutative_segment()
    got = normalize(ASS, H, unary_sandwich_tree(), [(0, 1), (0,), (0, 1)], [1, 2], (0, 1, 2))
    want = element_from_data(ASS, two_level_tree(), [(0, 1), (0, 1)], [1], (0, 1, 2))
    assert got == want  # x v y = x, the length nearer the root wins


def test_point_segment_collapses_to_base():
    W = WSetOperad(chain_segment(0), ASS)
    for n in range(1, 4):
        elems = W.elements(n)
        assert len(elems) == len(ASS.elements(n))
        assert sorted(w_eval(ASS, e) for e in elems) == sorted(ASS.elements(n))
        for e in elems:
            assert e.vertex_count() <= 1


def test_enumerated_elements_are_normal():
    H = chain_segment(2)
    for n in range(1, 4):
        for e in enumerate_w_elements(ASS, H, n):
            assert is_normal_form(ASS, H, e)


def test_rewrite_steps_empty_on_unit_state():
    assert rewrite_steps(ASS, chain_segment(2), ("unit", 0)) == []


@given(st.integers(0, 10**9))
@settings(max_examples=80)
def test_normalization_preserves_evaluation(seed):
    rng = random.Random(seed)
    H = chain_segment(2)
    arity = rng.randint(1, 4)
    tree, labels, lengths, leaves = random_raw_instance(rng, ASS, H, arity, 4)
    node = build_node(tree, labels, lengths, leaves)
    raw_val = so._eval_raw(ASS, node)
    nf = normalize(ASS, H, tree, labels, lengths, leaves)
    assert nf.arity == arity
    assert w_eval(ASS, nf) == raw_val


def test_all_orders_confluent_smoke():
    rep = confluence_experiment(ASS, chain_segment(2), 250, seed=5, extra_vertices=4)
    assert rep["status"] == "confluent"
    rep = confluence_experiment(COM, diamond(chain_segment(1)), 250, seed=6, extra_vertices=4)
    assert rep["status"] == "confluent"


def test_reachable_normal_forms_singleton():
    rng = random.Random(12)
    H = chain_segment(2)
    for _ in range(30):
        tree, labels, lengths, leaves = random_raw_instance(rng, ASS, H, rng.randint(1, 3), 3)
        node = build_node(tree, labels, lengths, leaves)
        normals = reachable_normal_forms(ASS, H, ("node", node))
        assert normals is not None and len(normals) == 1


# -- the weighted construction is an operad ------------------------------------


def test_w_operad_axioms_chain2():
    assert validate_operad(WSetOperad(chain_segment(2), ASS), 3) == []


def test_w_operad_axioms_diamond():
    assert validate_operad(WSetOperad(diamond(chain_segment(1)), ASS), 3) == []


def test_free_pointed_operad_axioms():
    assert validate_operad(FreePointedOperad(so._CollectionOfOperad(ASS)), 3) == []


def test_compose_unit_shortcuts():
    H = chain_segment(2)
    x = enumerate_w_elements(ASS, H, 3)[7]
    assert w_compose(ASS, H, W_UNIT, 0, x) == x
    for i in range(3):
        assert w_compose(ASS, H, x, i, W_UNIT) == x


def test_new_edge_gets_absorbing_length():
    H = chain_segment(2)
    m = element_from_data(ASS, corolla(2), [(0, 1)], [], (0, 1))
    z = w_compose(ASS, H, m, 0, m)
    assert z == element_from_data(ASS, two_level_tree(), [(0, 1), (0, 1)], [H.one], (0, 1, 2))


def test_eval_is_operad_map():
    H = chain_segment(2)
    e2 = enumerate_w_elements(ASS, H, 2)
    for x in e2:
        for y in e2:
            for i in range(2):
                lhs = w_eval(ASS, w_compose(ASS, H, x, i, y))
                rhs = ASS.compose(2, i, w_eval(ASS, x), 2, w_eval(ASS, y))
                assert lhs == rhs
    for x in enumerate_w_elements(ASS, H, 3):
        for sigma in perms.all_perms(3):
            assert w_eval(ASS, w_act(ASS, x, sigma)) == ASS.act(3, w_eval(ASS, x), sigma)


def test_segment_apply_is_functorial_and_operadic():
    H2, H1 = chain_segment(2), chain_segment(1)
    f = SegmentMap(H2, H1, (0, 1, 1))
    g = codiagonal()
    gf = SegmentMap(H2, chain_segment(0), (0, 0, 0))
    assert segment_map_check(f) == []
    for x in enumerate_w_elements(ASS, H2, 3):
        assert w_segment_apply(ASS, g, w_segment_apply(ASS, f, x)) == w_segment_apply(ASS, gf, x)
    e2 = enumerate_w_elements(ASS, H2, 2)
    for x in e2:
        for y in e2:
            for i in range(2):
                lhs = w_segment_apply(ASS, f, w_compose(ASS, H2, x, i, y))
                rhs = w_compose(ASS, H1, w_segment_apply(ASS, f, x), i, w_segment_apply(ASS, f, y))
                assert lhs == rhs


def test_element_json_shape():
    H = chain_segment(2)
    assert element_to_json(ASS, W_UNIT) == {"tree": "|", "lengths": [], "labels": [], "leaves": [0]}
    W = WSetOperad(H, ASS)
    names = [W.name_of(3, e) for e in W.elements(3)]
    assert len(set(names)) == len(names)
    data = element_to_json(ASS, W.elements(3)[5])
    assert set(data) == {"tree", "lengths", "labels", "leaves"}
    assert sorted(data["leaves"]) == [0, 1, 2]


# -- free pointed operads -------------------------------------------------------


def test_free_on_com_collection():
    assert len(free_pointed(so._CollectionOfOperad(COM), 3)) == 4


def test_compare_free_ass():
    rep = compare_free(ASS, 3)
    assert rep["status"] == "iso"
    assert rep["sizes"] == {1: 1, 2: 2, 3: 18}


def test_compare_free_com():
    rep = compare_free(COM, 3)
    assert rep["status"] == "iso"
    assert rep["sizes"] == {1: 1, 2: 1, 3: 4}


class _FatUnaryCollection:
    def elements(self, n):
        return {1: ("e", "u")}.get(n, ())

    @property
    def unit(self):
        return "e"

    def act(self, n, x, sigma):
        return x

    def name_of(self, n, x):
        return x


def test_unary_chains_need_cap():
    F = FreePointedOperad(_FatUnaryCollection())
    with pytest.raises(InfiniteEnumerationError):
        F.elements(1)
    F3 = FreePointedOperad(_FatUnaryCollection(), vertex_cap=3)
    assert len(F3.elements(1)) == 4  # unit plus u-chains of one, two, three vertices


# -- cotriple tower -------------------------------------------------------------


def test_godement_sizes():
    tower = GodementTower(ASS)
    for k in range(4):
        assert len(tower.elements(k, 1)) == 1
        assert len(tower.elements(k, 2)) == 2
        assert len(tower.elements(k, 3)) == 18 + 12 * k


def test_godement_simplicial_identities():
    assert godement_simplicial_check(ASS, 2, 3) == []


def test_godement_augmentation_lands_in_base():
    tower = GodementTower(ASS)
    for x in tower.elements(2, 3):
        assert tower.augment(2, x) in ASS.elements(3)


def test_compare_godement_w():
    sizes = {0: 18, 1: 30, 2: 42}
    for k in range(3):
        rep = compare_godement_w(ASS, k, 3)
        assert rep["status"] == "iso", rep["witness"]
        assert rep["sizes"][3] == sizes[k]
        assert rep["sizes"][2] == 2


# -- diamond comparison ----------------------------------------------------------


def test_diamond_compare_two_point_chain():
    rep = w_diamond_compare(chain_segment(1), ASS, 3, 4)
    assert rep["status"] == "iso", rep["witness"]
    assert rep["sizes"] == {1: 1, 2: 2, 3: 30}


def test_diamond_compare_point_reduces_to_free():
    rep = w_diamond_compare(chain_segment(0), ASS, 3, 4)
    assert rep["status"] == "iso", rep["witness"]
    assert rep["sizes"] == {1: 1, 2: 2, 3: 18}


def test_diamond_collapse_is_surjective():
    H = chain_segment(1)
    D = diamond(H)
    f = diamond_collapse(H)
    WD = WSetOperad(D, ASS, 4)
    WH = WSetOperad(H, ASS, 4)
    image = {w_segment_apply(ASS, f, x) for x in WD.elements(2)}
    assert image == set(WH.elements(2))
