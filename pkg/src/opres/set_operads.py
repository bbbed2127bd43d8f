"""Finite set-valued symmetric operads and the segment-weighted tree
construction on them.

An element of the weighted construction over a segment H is a planar tree
whose vertices carry operad elements (matching valences), whose internal
edges carry H-elements, and whose leaves are routed to global inputs by a
bijection.  Two decorated trees are equal when a tree isomorphism carries
one onto the other, transporting vertex labels along the induced slot
permutations.  Equality is decided through a canonical representative.

Normal forms: no edge carries the neutral length (such edges contract,
composing the two vertex labels) and no vertex carries the operad unit
(such vertices are deleted, joining or discarding the adjacent lengths).
Composition grafts trees and gives the new edge the absorbing length.

The same machinery specializes to the free pointed operad on a collection
(lengths forced to the absorbing element of the two-element chain) and
iterates to the cotriple tower of the free/forgetful adjunction, whose
level k is compared here against the construction weighted by the segment
of monotone maps [k] -> [1].
"""
from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass

from . import perms
from .segments import (
    FiniteSegment,
    SegmentMap,
    chain_segment,
    codiagonal,
    delta1_degeneracy,
    delta1_face,
    delta1_level,
    diamond,
    diamond_collapse,
)
from .trees import PlanarTree, corolla, iso_classes


# -- concrete operads --------------------------------------------------------


@dataclass(frozen=True)
class AssOperad:
    """Words: the element (w_0,...,w_{n-1}) multiplies its inputs in the
    order a_{w_0} a_{w_1} ...; composition substitutes a block and the
    right action relabels letters."""

    max_arity: int = 8
    symmetric: bool = True

    def arities(self):
        return range(1, self.max_arity + 1)

    def elements(self, n: int) -> tuple:
        if not (1 <= n <= self.max_arity):
            return ()
        return tuple(itertools.permutations(range(n)))

    @property
    def unit(self):
        return (0,)

    def compose(self, n, i, x, m, y):
        out = []
        for letter in x:
            if letter < i:
                out.append(letter)
            elif letter == i:
                out.extend(i + t for t in y)
            else:
                out.append(letter + m - 1)
        return tuple(out)

    def act(self, n, x, sigma):
        return tuple(sigma[t] for t in x)

    def name_of(self, n, x) -> str:
        if n <= 9:
            return "".join(str(t + 1) for t in x)
        return ",".join(str(t + 1) for t in x)


@dataclass(frozen=True)
class ComOperad:
    max_arity: int = 8
    symmetric: bool = True

    def arities(self):
        return range(1, self.max_arity + 1)

    def elements(self, n: int) -> tuple:
        if not (1 <= n <= self.max_arity):
            return ()
        return ("*",)

    @property
    def unit(self):
        return "*"

    def compose(self, n, i, x, m, y):
        return "*"

    def act(self, n, x, sigma):
        return "*"

    def name_of(self, n, x) -> str:
        return "*"


class TableOperad:
    """Operad given by explicit tables; element names are global."""

    symmetric = True

    def __init__(self, elements_by_arity: dict, unit_name: str, compose_table: dict, action_table: dict):
        self.by_arity = {int(n): tuple(v) for n, v in elements_by_arity.items()}
        self.unit_name = unit_name
        self.compose_table = compose_table
        self.action_table = action_table
        self.arity_of = {}
        for n, elems in self.by_arity.items():
            for e in elems:
                if e in self.arity_of:
                    raise ValueError(f"element name {e!r} not globally unique")
                self.arity_of[e] = n
        if self.arity_of.get(unit_name) != 1:
            raise ValueError("unit must be a declared arity-1 element")

    def arities(self):
        return sorted(self.by_arity)

    def elements(self, n: int) -> tuple:
        return self.by_arity.get(n, ())

    @property
    def unit(self):
        return self.unit_name

    def compose(self, n, i, x, m, y):
        if x == self.unit_name:
            return y
        if y == self.unit_name:
            return x
        key = (x, i, y)
        if key not in self.compose_table:
            raise KeyError(f"composition {x} o{i + 1} {y} missing from table")
        return self.compose_table[key]

    def act(self, n, x, sigma):
        if sigma == perms.identity(n):
            return x
        key = (x, sigma)
        if key not in self.action_table:
            raise KeyError(f"action of {sigma} on {x} missing from table")
        return self.action_table[key]

    def name_of(self, n, x) -> str:
        return x


def operad_from_json(data: dict) -> TableOperad:
    if not data.get("symmetric", True):
        raise ValueError("set-level operads here are symmetric")
    elements = {int(k): list(v) for k, v in data["arities"].items()}
    compose_table = {}
    for key, result in data.get("compose", {}).items():
        x, mid, y = key.split(" ")
        if not mid.startswith("o"):
            raise ValueError(f"bad composition key {key!r}")
        compose_table[(x, int(mid[1:]) - 1, y)] = result
    action_table = {}
    for key, result in data.get("actions", {}).items():
        x, star, sig = key.split(" ")
        if star != "*":
            raise ValueError(f"bad action key {key!r}")
        sigma = tuple(int(s) - 1 for s in sig.split(","))
        action_table[(x, sigma)] = result
    return TableOperad(elements, data["unit"], compose_table, action_table)


def operad_to_json(P, max_arity: int) -> dict:
    arities = {}
    for n in range(1, max_arity + 1):
        elems = P.elements(n)
        if elems:
            arities[str(n)] = [P.name_of(n, x) for x in elems]
    compose = {}
    for n in range(1, max_arity + 1):
        for m in range(1, max_arity + 1):
            if n + m - 1 > max_arity:
                continue
            for x in P.elements(n):
                for i in range(n):
                    for y in P.elements(m):
                        z = P.compose(n, i, x, m, y)
                        compose[f"{P.name_of(n, x)} o{i + 1} {P.name_of(m, y)}"] = P.name_of(n + m - 1, z)
    actions = {}
    for n in range(1, max_arity + 1):
        for x in P.elements(n):
            for sigma in perms.all_perms(n):
                if sigma == perms.identity(n):
                    continue
                key = f"{P.name_of(n, x)} * {','.join(str(s + 1) for s in sigma)}"
                actions[key] = P.name_of(n, P.act(n, x, sigma))
    return {
        "symmetric": True,
        "arities": arities,
        "unit": P.name_of(1, P.unit),
        "compose": compose,
        "actions": actions,
    }


def get_builtin_operad(name: str, max_arity: int = 8):
    if name == "ass":
        return AssOperad(max_arity)
    if name == "com":
        return ComOperad(max_arity)
    raise ValueError(f"unknown builtin operad {name!r}")


def validate_operad(P, arity_bound: int) -> list[str]:
    """Exhaustive axiom check up to the arity bound: unit laws, nested and
    disjoint associativity, right action laws, and both equivariance laws."""
    bad: list[str] = []
    rng = range(1, arity_bound + 1)
    e = P.unit
    if e not in P.elements(1):
        return ["unit is not an arity-1 element"]
    for n in rng:
        for x in P.elements(n):
            for i in range(n):
                if P.compose(n, i, x, 1, e) != x:
                    bad.append(f"right unit law fails at arity {n}, slot {i}")
            if P.compose(1, 0, e, n, x) != x:
                bad.append(f"left unit law fails at arity {n}")
            if P.act(n, x, perms.identity(n)) != x:
                bad.append(f"identity action fails at arity {n}")
    for n in rng:
        if n > 4:
            continue
        for x in P.elements(n):
            for s in perms.all_perms(n):
                for t in perms.all_perms(n):
                    if P.act(n, P.act(n, x, s), t) != P.act(n, x, perms.perm_then(s, t)):
                        bad.append(f"action composition fails at arity {n}")
    for n in rng:
        for m in rng:
            for l in rng:
                if n + m + l - 2 > arity_bound:
                    continue
                for x in P.elements(n):
                    for y in P.elements(m):
                        for z in P.elements(l):
                            for i in range(n):
                                for j in range(m):
                                    lhs = P.compose(n + m - 1, i + j, P.compose(n, i, x, m, y), l, z)
                                    rhs = P.compose(n, i, x, m + l - 1, P.compose(m, j, y, l, z))
                                    if lhs != rhs:
                                        bad.append(
                                            f"nested associativity fails at arities ({n},{m},{l}) slots ({i},{j})"
                                        )
                                for j2 in range(i + 1, n):
                                    lhs = P.compose(n + m - 1, j2 + m - 1, P.compose(n, i, x, m, y), l, z)
                                    rhs = P.compose(n + l - 1, i, P.compose(n, j2, x, l, z), m, y)
                                    if lhs != rhs:
                                        bad.append(
                                            f"disjoint associativity fails at arities ({n},{m},{l}) slots ({i},{j2})"
                                        )
    for n in rng:
        if n > 3:
            continue
        for m in rng:
            if n + m - 1 > arity_bound or m > 3:
                continue
            for x in P.elements(n):
                for y in P.elements(m):
                    for s in perms.all_perms(n):
                        for j in range(n):
                            lhs = P.compose(n, s[j], P.act(n, x, s), m, y)
                            rhs = P.act(n + m - 1, P.compose(n, j, x, m, y), perms.blow(s, j, m))
                            if lhs != rhs:
                                bad.append(f"outer equivariance fails at arities ({n},{m})")
                    for rho in perms.all_perms(m):
                        for i in range(n):
                            lhs = P.compose(n, i, x, m, P.act(m, y, rho))
                            rhs = P.act(n + m - 1, P.compose(n, i, x, m, y), perms.embed(rho, i, n))
                            if lhs != rhs:
                                bad.append(f"inner equivariance fails at arities ({n},{m})")
    return bad


# -- decorated tree elements --------------------------------------------------
#
# node = (label, items); item = ("leaf", g) or ("edge", length_index, node)


@dataclass(frozen=True)
class WSetElement:
    arity: int
    node: tuple | None  # None encodes the unit element (bare leaf tree)

    def is_unit(self) -> bool:
        return self.node is None

    def vertex_count(self) -> int:
        return 0 if self.node is None else _node_vertices(self.node)

    def edge_count(self) -> int:
        return 0 if self.node is None else _node_vertices(self.node) - 1


W_UNIT = WSetElement(1, None)


def _node_vertices(node) -> int:
    total = 1
    for it in node[1]:
        if it[0] == "edge":
            total += _node_vertices(it[2])
    return total


def node_tree(node) -> PlanarTree:
    kids = []
    for it in node[1]:
        if it[0] == "leaf":
            kids.append(PlanarTree(None))
        else:
            kids.append(node_tree(it[2]))
    return PlanarTree(tuple(kids))


def node_labels(node) -> tuple:
    out = [node[0]]
    for it in node[1]:
        if it[0] == "edge":
            out.extend(node_labels(it[2]))
    return tuple(out)


def node_lengths(node) -> tuple:
    out = []
    for it in node[1]:
        if it[0] == "edge":
            out.append(it[1])
            out.extend(node_lengths(it[2]))
    return tuple(out)


def node_leaves(node) -> tuple:
    out = []
    for it in node[1]:
        if it[0] == "leaf":
            out.append(it[1])
        else:
            out.extend(node_leaves(it[2]))
    return tuple(out)


def build_node(tree: PlanarTree, labels, lengths, leaves) -> tuple | None:
    """Assemble a node from flat data: labels per DFS vertex, lengths per
    edge index (edge i sits above DFS vertex i + 1), leaves per planar
    leaf position."""
    if tree.children is None:
        if tuple(leaves) != (0,):
            raise ValueError("bare leaf tree must route its leaf to input 0")
        return None
    labels = list(labels)
    lengths = list(lengths)
    leaves = list(leaves)
    if len(labels) != tree.vertex_count:
        raise ValueError("label count mismatch")
    if len(lengths) != tree.edge_count:
        raise ValueError("length count mismatch")
    if sorted(leaves) != list(range(tree.arity)):
        raise ValueError("leaves must be a bijection onto the inputs")
    state = {"v": 0, "leaf": 0}

    def walk(t: PlanarTree):
        my = state["v"]
        state["v"] += 1
        items = []
        for c in t.children:
            if c.children is None:
                items.append(("leaf", leaves[state["leaf"]]))
                state["leaf"] += 1
            else:
                child_idx = state["v"]
                sub = walk(c)
                items.append(("edge", lengths[child_idx - 1], sub))
        return (labels[my], tuple(items))

    return walk(tree)


# canonical forms ----------------------------------------------------------


def _bare_encoding(node) -> tuple:
    enc: list = [1]
    for it in node[1]:
        if it[0] == "leaf":
            enc.append((0,))
        else:
            enc.append(_bare_encoding(it[2]))
    return tuple(enc)


def _label_key(P, valence: int, label):
    return P.elements(valence).index(label)


def decorated_key(P, node) -> tuple:
    return (
        _label_key(P, len(node[1]), node[0]),
        tuple(_item_key(P, it) for it in node[1]),
    )


def _item_key(P, item) -> tuple:
    if item[0] == "leaf":
        return ((0,), 0, item[1])
    # bare shape leads so that sorting by this key keeps the planar tree
    # canonical in the undecorated sense; decorations only break shape ties
    return (_bare_encoding(item[2]), item[1], decorated_key(P, item[2]))


def canon_node(P, node) -> tuple:
    """Canonical orbit representative: children sorted by decorated keys
    with the vertex label transported along (placing old child sigma(j)
    at new slot j twists the label by the inverse of sigma); key ties,
    which only identical leafless subtrees can produce, are resolved by
    minimizing the label over the Young subgroup of the tie blocks."""
    label, items = node
    k = len(items)
    new_items = []
    for it in items:
        if it[0] == "leaf":
            new_items.append(it)
        else:
            new_items.append(("edge", it[1], canon_node(P, it[2])))
    keys = [_item_key(P, it) for it in new_items]
    order = sorted(range(k), key=lambda j: keys[j])
    sigma = tuple(order)
    sorted_items = tuple(new_items[j] for j in sigma)
    new_label = P.act(k, label, perms.invert(sigma))
    sorted_keys = [keys[j] for j in sigma]
    runs = []
    start = 0
    for j in range(1, k + 1):
        if j == k or sorted_keys[j] != sorted_keys[start]:
            if j - start > 1:
                runs.append((start, j - start))
            start = j
    if runs:
        best = new_label
        best_key = _label_key(P, k, best)
        for taus in itertools.product(*(perms.all_perms(ln) for _, ln in runs)):
            tau = list(range(k))
            for (st, ln), block in zip(runs, taus):
                for t in range(ln):
                    tau[st + t] = st + block[t]
            cand = P.act(k, new_label, tuple(tau))
            ck = _label_key(P, k, cand)
            if ck < best_key:
                best, best_key = cand, ck
        new_label = best
    return (new_label, sorted_items)


def element_from_data(P, tree: PlanarTree, labels, lengths, leaves=None) -> WSetElement:
    """Canonical element from presentation data, without rewriting."""
    if leaves is None:
        leaves = tuple(range(tree.arity))
    node = build_node(tree, labels, lengths, leaves)
    if node is None:
        return W_UNIT
    return WSetElement(tree.arity, canon_node(P, node))


# rewriting ------------------------------------------------------------------
#
# state = ("node", node) or ("unit", g): the bare leaf routed to input g


def rewrite_steps(P, H: FiniteSegment, state) -> list[tuple[str, tuple]]:
    """All single rewrite steps from a state, innermost-leftmost first.

    contract: an edge of neutral length composes its two vertex labels.
    join: a unit vertex between two edges joins the lengths, upper first.
    drop: a unit vertex above a leaf disappears with its edge length.
    promote: a unit root vertex disappears, its child length dropped.
    collapse: the unit root above a bare leaf is the unit element.
    """
    if state[0] == "unit":
        return []
    root = state[1]
    out: list[tuple[str, tuple]] = []
    unit = P.unit
    zero = H.zero

    def visit(node, rebuild):
        label, items = node
        for j, it in enumerate(items):
            if it[0] != "edge":
                continue
            ln, child = it[1], it[2]

            def rebuild_child(new_child, j=j, label=label, items=items, ln=ln, rebuild=rebuild):
                its = items[:j] + (("edge", ln, new_child),) + items[j + 1 :]
                return rebuild((label, its))

            visit(child, rebuild_child)
            c_label, c_items = child
            if ln == zero:
                merged = P.compose(len(items), j, label, len(c_items), c_label)
                its = items[:j] + c_items + items[j + 1 :]
                out.append(("contract", ("node", rebuild((merged, its)))))
            if c_label == unit and len(c_items) == 1:
                sub = c_items[0]
                if sub[0] == "edge":
                    its = items[:j] + (("edge", H.j(ln, sub[1]), sub[2]),) + items[j + 1 :]
                    out.append(("join", ("node", rebuild((label, its)))))
                else:
                    its = items[:j] + (sub,) + items[j + 1 :]
                    out.append(("drop", ("node", rebuild((label, its)))))

    visit(root, lambda nd: nd)
    r_label, r_items = root
    if r_label == unit and len(r_items) == 1:
        sub = r_items[0]
        if sub[0] == "edge":
            out.append(("promote", ("node", sub[2])))
        else:
            out.append(("collapse", ("unit", sub[1])))
    return out


def normalize_state(P, H: FiniteSegment, state) -> tuple:
    while True:
        steps = rewrite_steps(P, H, state)
        if not steps:
            return state
        state = steps[0][1]


def normalize(P, H: FiniteSegment, tree: PlanarTree, labels, lengths, leaves=None) -> WSetElement:
    """Normal form of a raw decorated tree, as a canonical element."""
    if leaves is None:
        leaves = tuple(range(tree.arity))
    node = build_node(tree, labels, lengths, leaves)
    if node is None:
        return W_UNIT
    state = normalize_state(P, H, ("node", node))
    if state[0] == "unit":
        return W_UNIT
    return WSetElement(tree.arity, canon_node(P, state[1]))


def is_normal_form(P, H: FiniteSegment, elem: WSetElement) -> bool:
    if elem.node is None:
        return True
    return not rewrite_steps(P, H, ("node", elem.node))


# operations on elements -------------------------------------------------------


def w_act(P, elem: WSetElement, sigma) -> WSetElement:
    if elem.node is None:
        return elem

    def relabel(node):
        label, items = node
        out = []
        for it in items:
            if it[0] == "leaf":
                out.append(("leaf", sigma[it[1]]))
            else:
                out.append(("edge", it[1], relabel(it[2])))
        return (label, tuple(out))

    return WSetElement(elem.arity, canon_node(P, relabel(elem.node)))


def w_compose(P, H: FiniteSegment, x: WSetElement, i: int, y: WSetElement) -> WSetElement:
    """Grafting composition; the new edge carries the absorbing length."""
    n, m = x.arity, y.arity
    if not (0 <= i < n):
        raise ValueError("slot out of range")
    if x.node is None:
        return y
    if y.node is None:
        return x

    def shift_y(node):
        label, items = node
        out = []
        for it in items:
            if it[0] == "leaf":
                out.append(("leaf", i + it[1]))
            else:
                out.append(("edge", it[1], shift_y(it[2])))
        return (label, tuple(out))

    y_node = shift_y(y.node)

    def plug(node):
        label, items = node
        out = []
        for it in items:
            if it[0] == "leaf":
                g = it[1]
                if g == i:
                    out.append(("edge", H.one, y_node))
                else:
                    out.append(("leaf", g if g < i else g + m - 1))
            else:
                out.append(("edge", it[1], plug(it[2])))
        return (label, tuple(out))

    state = normalize_state(P, H, ("node", plug(x.node)))
    if state[0] == "unit":
        return W_UNIT
    return WSetElement(n + m - 1, canon_node(P, state[1]))


def _eval_raw(Q, node):
    """Compose the labels of a raw node in the operad Q, planar slots
    right to left, then route the inputs by the leaf bijection."""

    def ev(nd):
        label, items = nd
        val = label
        n_val = len(items)
        for j in range(len(items) - 1, -1, -1):
            it = items[j]
            if it[0] == "edge":
                child_val, child_ar = ev(it[2])
                val = Q.compose(n_val, j, val, child_ar, child_val)
                n_val += child_ar - 1
        return val, n_val

    val, n = ev(node)
    return Q.act(n, val, node_leaves(node))


def w_eval(P, elem: WSetElement):
    """Augmentation: forget lengths, compose the labels, route inputs."""
    if elem.node is None:
        return P.unit
    return _eval_raw(P, elem.node)


def w_segment_apply(P, f: SegmentMap, elem: WSetElement) -> WSetElement:
    """Relabel edge lengths along a segment map, then renormalize."""
    if elem.node is None:
        return elem

    def relen(node):
        label, items = node
        out = []
        for it in items:
            if it[0] == "leaf":
                out.append(it)
            else:
                out.append(("edge", f.table[it[1]], relen(it[2])))
        return (label, tuple(out))

    state = normalize_state(P, f.target, ("node", relen(elem.node)))
    if state[0] == "unit":
        return W_UNIT
    return WSetElement(elem.arity, canon_node(P, state[1]))


def element_to_json(P, elem: WSetElement) -> dict:
    if elem.node is None:
        return {"tree": "|", "lengths": [], "labels": [], "leaves": [0]}
    t = node_tree(elem.node)
    labels = node_labels(elem.node)
    valences = t.valences()
    return {
        "tree": t.notation(),
        "lengths": list(node_lengths(elem.node)),
        "labels": [
            P.name_of(v, lab) if hasattr(P, "name_of") else str(lab)
            for v, lab in zip(valences, labels)
        ],
        "leaves": list(node_leaves(elem.node)),
    }


# enumeration --------------------------------------------------------------


class InfiniteEnumerationError(ValueError):
    pass


def _base_point(K):
    return K.unit if hasattr(K, "unit") else K.base


def _collection_profile(K) -> tuple[bool, bool]:
    base = _base_point(K)
    nullary = bool(K.elements(0))
    extra_unary = any(x != base for x in K.elements(1))
    return nullary, extra_unary


def _eligible_labels(K, valence: int):
    base = _base_point(K)
    if valence == 1:
        return tuple(x for x in K.elements(1) if x != base)
    return K.elements(valence)


def enumerate_w_elements(P, H: FiniteSegment, arity: int, vertex_cap: int | None = None) -> list[WSetElement]:
    """All normal forms of one arity, optionally capped by vertex count.
    Uncapped enumeration requires empty arity 0 and nothing but the unit
    in arity 1, otherwise every arity is infinite."""
    nullary, extra_unary = _collection_profile(P)
    if vertex_cap is None and (nullary or extra_unary):
        raise InfiniteEnumerationError(
            "unbounded enumeration needs empty arity 0 and only the unit in arity 1; pass a vertex cap"
        )
    min_val = 0 if nullary else (1 if extra_unary else 2)
    max_edges = None if vertex_cap is None else max(vertex_cap - 1, 0)
    lengths_pool = [ln for ln in range(H.size) if ln != H.zero]
    out: set[WSetElement] = set()
    if arity == 1:
        out.add(W_UNIT)
    for cls in iso_classes(arity, max_edges, min_val):
        T = cls.tree
        if T.children is None:
            continue
        if vertex_cap is not None and T.vertex_count > vertex_cap:
            continue
        valences = T.valences()
        label_pools = [_eligible_labels(P, v) for v in valences]
        if any(not pool for pool in label_pools):
            continue
        for labels in itertools.product(*label_pools):
            for lens in itertools.product(lengths_pool, repeat=T.edge_count):
                for leaves in itertools.permutations(range(arity)):
                    node = build_node(T, labels, lens, leaves)
                    out.add(WSetElement(arity, canon_node(P, node)))
    return sorted(out, key=lambda e: element_sort_key(P, e))


def element_sort_key(P, e: WSetElement):
    if e.node is None:
        return (0,)
    return (1, _node_vertices(e.node), _bare_encoding(e.node), decorated_key(P, e.node))


class WSetOperad:
    """The weighted-tree operad over a segment; element lists cached."""

    symmetric = True

    def __init__(self, H: FiniteSegment, P, vertex_cap: int | None = None):
        self.H = H
        self.P = P
        self.vertex_cap = vertex_cap
        self._cache: dict[int, tuple] = {}

    @property
    def truncated(self) -> bool:
        return self.vertex_cap is not None

    def elements(self, n: int):
        if n not in self._cache:
            self._cache[n] = tuple(enumerate_w_elements(self.P, self.H, n, self.vertex_cap))
        return self._cache[n]

    @property
    def unit(self):
        return W_UNIT

    def compose(self, n, i, x, m, y):
        return w_compose(self.P, self.H, x, i, y)

    def act(self, n, x, sigma):
        return w_act(self.P, x, sigma)

    def augment(self, x: WSetElement):
        return w_eval(self.P, x)

    def filtration(self, x: WSetElement) -> int:
        return x.edge_count()

    def name_of(self, n, x) -> str:
        return json.dumps(element_to_json(self.P, x), sort_keys=True, separators=(",", ":"))


class _CollectionOfOperad:
    """Forgetful view of an operad: elements, base point, action."""

    def __init__(self, P):
        self.P = P
        self.base = P.unit

    def elements(self, n: int):
        return self.P.elements(n)

    def act(self, n, x, sigma):
        return self.P.act(n, x, sigma)

    def name_of(self, n, x):
        return self.P.name_of(n, x) if hasattr(self.P, "name_of") else str(x)


class _NoComposeWrapper:
    """Collection dressed as an operad for the shared tree machinery;
    label composition must never actually be needed, since lengths in a
    free construction stay absorbing."""

    symmetric = True

    def __init__(self, K):
        self.K = K
        self.unit = _base_point(K)

    def elements(self, n: int):
        return self.K.elements(n)

    def act(self, n, x, sigma):
        return self.K.act(n, x, sigma)

    def compose(self, n, i, x, m, y):
        raise RuntimeError("free construction must not compose collection labels")

    def name_of(self, n, x):
        return self.K.name_of(n, x) if hasattr(self.K, "name_of") else str(x)


class FreePointedOperad:
    """Free pointed operad on a collection: weighted trees over the
    two-element chain with every length absorbing."""

    symmetric = True

    def __init__(self, K, vertex_cap: int | None = None):
        self.K = K
        self.H = chain_segment(1)
        self.wrapper = _NoComposeWrapper(K)
        self.vertex_cap = vertex_cap
        self._cache: dict[int, tuple] = {}

    def elements(self, n: int):
        if n not in self._cache:
            self._cache[n] = tuple(enumerate_w_elements(self.wrapper, self.H, n, self.vertex_cap))
        return self._cache[n]

    @property
    def unit(self):
        return W_UNIT

    def compose(self, n, i, x, m, y):
        return w_compose(self.wrapper, self.H, x, i, y)

    def act(self, n, x, sigma):
        return w_act(self.wrapper, x, sigma)

    def name_of(self, n, x) -> str:
        return json.dumps(element_to_json(self.wrapper, x), sort_keys=True, separators=(",", ":"))


def free_pointed(K, arity: int, vertex_cap: int | None = None) -> list[WSetElement]:
    return list(FreePointedOperad(K, vertex_cap).elements(arity))


# comparisons ----------------------------------------------------------------


def compare_free(P, arity: int, vertex_cap: int | None = None) -> dict:
    """The construction over the two-element chain against the free
    pointed operad on the underlying collection: the element sets agree,
    compositions agree, and folding the chain onto the point realizes the
    counit (evaluation in P)."""
    W = WSetOperad(chain_segment(1), P, vertex_cap)
    F = FreePointedOperad(_CollectionOfOperad(P), vertex_cap)
    fold = codiagonal()
    report: dict = {"status": "iso", "witness": None, "sizes": {}}
    for n in range(1, arity + 1):
        ws = W.elements(n)
        fs = F.elements(n)
        report["sizes"][n] = len(ws)
        if list(ws) != list(fs):
            report["status"] = "fail"
            report["witness"] = f"element lists differ at arity {n}"
            return report
        for x in ws:
            folded = w_segment_apply(P, fold, x)
            if w_eval(P, folded) != w_eval(P, x):
                report["status"] = "fail"
                report["witness"] = f"counit mismatch at arity {n}: {element_to_json(P, x)}"
                return report
    for n1 in range(1, arity + 1):
        for n2 in range(1, arity + 1):
            if n1 + n2 - 1 > arity:
                continue
            for x in W.elements(n1):
                for y in W.elements(n2):
                    for i in range(n1):
                        if W.compose(n1, i, x, n2, y) != F.compose(n1, i, x, n2, y):
                            report["status"] = "fail"
                            report["witness"] = f"composition mismatch at arities ({n1},{n2}) slot {i}"
                            return report
    return report


class _CollectionOfOperadLike:
    """Forgetful view of anything with elements/act/unit."""

    def __init__(self, Q):
        self.Q = Q
        self.base = Q.unit

    def elements(self, n: int):
        return self.Q.elements(n)

    def act(self, n, x, sigma):
        return self.Q.act(n, x, sigma)

    def name_of(self, n, x):
        return self.Q.name_of(n, x) if hasattr(self.Q, "name_of") else str(x)


def _outer_wrapper(level_operad) -> _NoComposeWrapper:
    return _NoComposeWrapper(_CollectionOfOperadLike(level_operad))


def _outer_compose(level_operad, x: WSetElement, i: int, y: WSetElement) -> WSetElement:
    return w_compose(_outer_wrapper(level_operad), chain_segment(1), x, i, y)


def unflatten_diamond(P, H: FiniteSegment, elem: WSetElement, label_universe=None) -> WSetElement:
    """Cut every edge carrying the adjoined top length of diamond(H); the
    pieces become vertex labels of an outer tree, i.e. an element of the
    free pointed operad on the H-construction."""
    top = H.size  # index of the adjoined absorbing element in diamond(H)
    if elem.node is None:
        return W_UNIT
    if label_universe is None:
        label_universe = WSetOperad(H, P)

    def walk(node):
        """Return (piece, outer_items): the component containing this
        vertex, its leaves placeholders in planar order, and the outer
        items hanging under the component in the same planar order."""
        label, items = node
        piece_items = []
        outer_items = []
        for it in items:
            if it[0] == "leaf":
                piece_items.append(("leaf", None))
                outer_items.append(("leaf", it[1]))
            elif it[1] == top:
                inner_piece, inner_outer = walk(it[2])
                piece_items.append(("leaf", None))
                outer_items.append(("edge", 1, (_finish_piece(P, inner_piece), tuple(inner_outer))))
            else:
                inner_piece, inner_outer = walk(it[2])
                piece_items.append(("edge", it[1], inner_piece))
                outer_items.extend(inner_outer)
        return (label, tuple(piece_items)), outer_items

    root_piece, root_outer = walk(elem.node)
    outer_node = (_finish_piece(P, root_piece), tuple(root_outer))
    wrapper = _outer_wrapper(label_universe)
    return WSetElement(elem.arity, canon_node(wrapper, outer_node))


def _finish_piece(P, piece) -> WSetElement:
    """Number the placeholder leaves of a cut-out component in planar
    order and canonicalize it as an H-construction element."""
    counter = itertools.count()

    def fix(nd):
        label, items = nd
        out = []
        for it in items:
            if it[0] == "leaf":
                out.append(("leaf", next(counter)))
            else:
                out.append(("edge", it[1], fix(it[2])))
        return (label, tuple(out))

    fixed = fix(piece)
    arity = len(node_leaves(fixed))
    return WSetElement(arity, canon_node(P, fixed))


def flatten_diamond(P, H: FiniteSegment, elem: WSetElement) -> WSetElement:
    """Inverse of unflatten_diamond: splice the label trees in, giving the
    outer edges the adjoined top length."""
    D = diamond(H)
    top = H.size
    if elem.node is None:
        return W_UNIT

    def splice(node):
        label, items = node  # label: an H-construction element
        outer_parts = []
        for it in items:
            if it[0] == "leaf":
                outer_parts.append(("leaf", it[1]))
            else:
                outer_parts.append(("edge", top, splice(it[2])))
        if label.node is None:
            (only,) = outer_parts
            if only[0] == "leaf":
                raise ValueError("unit label over a bare leaf cannot be spliced")
            return only[2]

        def fix(nd):
            lab, its = nd
            out = []
            for it in its:
                if it[0] == "leaf":
                    # the label routes its planar leaf to a global index,
                    # which names the outer slot receiving the subtree
                    out.append(outer_parts[it[1]])
                else:
                    out.append(("edge", it[1], fix(it[2])))
            return (lab, tuple(out))

        return fix(label.node)

    state = normalize_state(P, D, ("node", splice(elem.node)))
    if state[0] == "unit":
        return W_UNIT
    return WSetElement(elem.arity, canon_node(P, state[1]))


class _CollectionOfWeighted:
    """The H-construction as a label collection for outer trees."""

    def __init__(self, WH: WSetOperad):
        self.WH = WH
        self.base = W_UNIT

    def elements(self, n: int):
        return self.WH.elements(n)

    def act(self, n, x, sigma):
        return self.WH.act(n, x, sigma)

    def name_of(self, n, x):
        return self.WH.name_of(n, x)


def _total_label_vertices(e: WSetElement) -> int:
    if e.node is None:
        return 0
    return sum(lab.vertex_count() for lab in node_labels(e.node))


def w_diamond_compare(H: FiniteSegment, P, arity: int, vertex_cap: int) -> dict:
    """Compare the construction over diamond(H) with the free pointed
    operad on the H-construction.  Vertex counts correspond exactly under
    the flattening (each outer label contributes its own vertices), so a
    single shared cap bounds both sides."""
    D = diamond(H)
    WD = WSetOperad(D, P, vertex_cap)
    WH = WSetOperad(H, P, vertex_cap)
    outer = FreePointedOperad(_CollectionOfWeighted(WH), vertex_cap)
    collapse = diamond_collapse(H)

    report: dict = {"status": "iso", "witness": None, "sizes": {}}
    for n in range(1, arity + 1):
        lhs = WD.elements(n)
        report["sizes"][n] = len(lhs)
        rhs = [e for e in outer.elements(n) if _total_label_vertices(e) <= vertex_cap]
        image = set()
        for x in lhs:
            u = unflatten_diamond(P, H, x, WH)
            if u in image:
                report["status"] = "fail"
                report["witness"] = f"unflattening not injective at arity {n}"
                return report
            image.add(u)
            if flatten_diamond(P, H, u) != x:
                report["status"] = "fail"
                report["witness"] = f"round trip fails at arity {n}: {element_to_json(P, x)}"
                return report
        if image != set(rhs):
            missing = len(set(rhs) - image)
            extra = len(image - set(rhs))
            report["status"] = "fail"
            report["witness"] = f"arity {n}: {missing} free elements unmatched, {extra} images unexpected"
            return report
        for x in lhs:
            via_segment = w_segment_apply(P, collapse, x)
            if x.is_unit():
                via_counit = W_UNIT
            else:
                via_counit = _eval_raw(WH, unflatten_diamond(P, H, x, WH).node)
            if via_segment != via_counit:
                report["status"] = "fail"
                report["witness"] = f"collapse square fails at arity {n}: {element_to_json(P, x)}"
                return report
    for n1 in range(1, arity + 1):
        for n2 in range(1, arity + 1):
            if n1 + n2 - 1 > arity:
                continue
            for x in WD.elements(n1):
                for y in WD.elements(n2):
                    if x.vertex_count() + y.vertex_count() > vertex_cap:
                        continue
                    for i in range(n1):
                        lhs_c = unflatten_diamond(P, H, w_compose(P, D, x, i, y), WH)
                        rhs_c = _outer_compose(WH, unflatten_diamond(P, H, x, WH), i, unflatten_diamond(P, H, y, WH))
                        if lhs_c != rhs_c:
                            report["status"] = "fail"
                            report["witness"] = f"grafting mismatch at arities ({n1},{n2}) slot {i}"
                            return report
    return report


# the cotriple tower ---------------------------------------------------------


class GodementTower:
    """Iterated free pointed operad on the forgetful collection: level k
    holds trees nested k + 1 layers deep over the base operad."""

    def __init__(self, P):
        self.P = P
        self._levels: dict[int, FreePointedOperad] = {}

    def level(self, k: int) -> FreePointedOperad:
        if k < 0:
            raise ValueError("levels start at 0")
        if k not in self._levels:
            if k == 0:
                below = _CollectionOfOperad(self.P)
            else:
                below = _CollectionOfOperadLike(self.level(k - 1))
            self._levels[k] = FreePointedOperad(below)
        return self._levels[k]

    def elements(self, k: int, n: int):
        return self.level(k).elements(n)

    def compose(self, k: int, x: WSetElement, i: int, y: WSetElement) -> WSetElement:
        return self.level(k).compose(x.arity, i, x, y.arity, y)

    def act(self, k: int, x: WSetElement, sigma) -> WSetElement:
        return self.level(k).act(x.arity, x, sigma)

    def face(self, k: int, i: int, x: WSetElement):
        """Face i at level k evaluates one layer: the outermost for i = k,
        deeper layers by relabeling; for k = 0 this is the evaluation in
        the base operad (the augmentation)."""
        if not (0 <= i <= k):
            raise ValueError("face index out of range")
        if k == 0:
            return w_eval(self.P, x)
        if i == k:
            if x.is_unit():
                return W_UNIT
            return _eval_raw(self.level(k - 1), x.node)
        return self._relabel(x, self.level(k - 1), lambda lab, val: self.face(k - 1, i, lab))

    def degeneracy(self, k: int, i: int, x: WSetElement) -> WSetElement:
        """Degeneracy i at level k wraps the labels of one layer into
        one-vertex trees (the unit of the adjunction)."""
        if not (0 <= i <= k):
            raise ValueError("degeneracy index out of range")
        if i == k:
            return self._relabel(x, self.level(k + 1), lambda lab, val: self.wrap(k, lab, val))
        return self._relabel(x, self.level(k + 1), lambda lab, val: self.degeneracy(k - 1, i, lab))

    def wrap(self, k: int, lab, valence: int) -> WSetElement:
        """One-vertex level-k tree labeled by a level-(k-1) element (a
        base element when k = 0)."""
        node = (lab, tuple(("leaf", g) for g in range(valence)))
        return WSetElement(valence, canon_node(self.level(k).wrapper, node))

    def _relabel(self, x: WSetElement, target_level: FreePointedOperad, fn) -> WSetElement:
        """Apply fn(label, valence) to every outer-tree label, then
        renormalize in the target level (a face can in principle turn a
        label into the unit below, which must then be deleted)."""
        if x.node is None:
            return W_UNIT

        def go(node):
            label, items = node
            out = []
            for it in items:
                if it[0] == "leaf":
                    out.append(it)
                else:
                    out.append(("edge", it[1], go(it[2])))
            return (fn(label, len(items)), tuple(out))

        state = normalize_state(target_level.wrapper, chain_segment(1), ("node", go(x.node)))
        if state[0] == "unit":
            return W_UNIT
        return WSetElement(x.arity, canon_node(target_level.wrapper, state[1]))

    def augment(self, k: int, x: WSetElement):
        """The composite of zeroth faces all the way into the base."""
        for level in range(k, 0, -1):
            x = self.face(level, 0, x)
        return self.face(0, 0, x)


def godement_simplicial_check(P, max_level: int, max_arity: int) -> list[str]:
    """Elementwise simplicial identities for the cotriple tower."""
    tower = GodementTower(P)
    bad: list[str] = []
    for k in range(max_level + 1):
        for n in range(1, max_arity + 1):
            for x in tower.elements(k, n):
                if k >= 2:
                    for j in range(k + 1):
                        for i in range(j):
                            lhs = tower.face(k - 1, i, tower.face(k, j, x))
                            rhs = tower.face(k - 1, j - 1, tower.face(k, i, x))
                            if lhs != rhs:
                                bad.append(f"dd identity fails at level {k}, pair ({i},{j}), arity {n}")
                for j in range(k + 1):
                    for i in range(j + 1):
                        lhs = tower.degeneracy(k + 1, i, tower.degeneracy(k, j, x))
                        rhs = tower.degeneracy(k + 1, j + 1, tower.degeneracy(k, i, x))
                        if lhs != rhs:
                            bad.append(f"ss identity fails at level {k}, pair ({i},{j}), arity {n}")
                for j in range(k + 1):
                    sx = tower.degeneracy(k, j, x)
                    for i in range(k + 2):
                        out = tower.face(k + 1, i, sx)
                        if i == j or i == j + 1:
                            expect = x
                        elif i < j:
                            expect = tower.degeneracy(k - 1, j - 1, tower.face(k, i, x))
                        else:
                            expect = tower.degeneracy(k - 1, j, tower.face(k, i - 1, x))
                        if out != expect:
                            bad.append(f"ds identity fails at level {k}, pair ({i},{j}), arity {n}")
                if k == 1:
                    if w_eval(P, tower.face(1, 1, x)) != tower.face(0, 0, tower.face(1, 0, x)):
                        bad.append(f"augmentation coequalizer fails at arity {n}")
    return bad


def flatten_godement(tower: GodementTower, k: int, x: WSetElement, W_by_level: dict | None = None) -> WSetElement:
    """Level-k tower elements as weighted trees over the segment of
    monotone maps [k] -> [1]: the outermost layer's edges take the top
    length, deeper layers keep their (index-shared) lengths."""
    if W_by_level is None:
        W_by_level = {}
    if x.node is None:
        return W_UNIT
    if k == 0:
        return x
    if k not in W_by_level:
        W_by_level[k] = WSetOperad(delta1_level(k), tower.P)
    Wk = W_by_level[k]

    def go(node):
        label, items = node
        out = []
        for it in items:
            if it[0] == "leaf":
                out.append(it)
            else:
                out.append(("edge", it[1], go(it[2])))
        # flattened level-(k-1) elements read unchanged over the larger
        # segment: length indices 0..k are shared
        return (flatten_godement(tower, k - 1, label, W_by_level), tuple(out))

    return _eval_raw(Wk, go(x.node))


def compare_godement_w(P, k: int, max_arity: int) -> dict:
    """Compare tower level k with the weighted construction over the
    segment of monotone maps [k] -> [1]: bijection, composition, faces
    (tower face i matches segment face k - i: both merge the adjacent
    lengths i and i + 1), degeneracies with the same index reversal, and
    the augmentation."""
    tower = GodementTower(P)
    W_by_level = {j: WSetOperad(delta1_level(j), P) for j in range(k + 2)}
    report: dict = {"status": "iso", "witness": None, "sizes": {}}

    def flat(j, x):
        return flatten_godement(tower, j, x, W_by_level)

    for n in range(1, max_arity + 1):
        g_elems = tower.elements(k, n)
        w_elems = W_by_level[k].elements(n)
        report["sizes"][n] = len(w_elems)
        flats = [flat(k, x) for x in g_elems]
        if len(set(flats)) != len(flats):
            report["status"] = "fail"
            report["witness"] = f"flattening not injective at arity {n}"
            return report
        if set(flats) != set(w_elems):
            report["status"] = "fail"
            report["witness"] = f"flattening not onto at arity {n}: {len(g_elems)} vs {len(w_elems)}"
            return report
    for n1 in range(1, max_arity + 1):
        for n2 in range(1, max_arity + 1):
            if n1 + n2 - 1 > max_arity:
                continue
            for x in tower.elements(k, n1):
                for y in tower.elements(k, n2):
                    for i in range(n1):
                        lhs = flat(k, tower.compose(k, x, i, y))
                        rhs = w_compose(P, delta1_level(k), flat(k, x), i, flat(k, y))
                        if lhs != rhs:
                            report["status"] = "fail"
                            report["witness"] = f"composition mismatch at arities ({n1},{n2}) slot {i}"
                            return report
    for n in range(1, max_arity + 1):
        for x in tower.elements(k, n):
            fx = flat(k, x)
            if k >= 1:
                for i in range(k + 1):
                    lhs = flat(k - 1, tower.face(k, i, x))
                    rhs = w_segment_apply(P, delta1_face(k, k - i), fx)
                    if lhs != rhs:
                        report["status"] = "fail"
                        report["witness"] = f"face {i} mismatch at level {k}, arity {n}"
                        return report
            for i in range(k + 1):
                lhs = flat(k + 1, tower.degeneracy(k, i, x))
                rhs = w_segment_apply(P, delta1_degeneracy(k, k - i), fx)
                if lhs != rhs:
                    report["status"] = "fail"
                    report["witness"] = f"degeneracy {i} mismatch at level {k}, arity {n}"
                    return report
            if tower.augment(k, x) != w_eval(P, fx):
                report["status"] = "fail"
                report["witness"] = f"augmentation mismatch at level {k}, arity {n}"
                return report
    return report


# randomized confluence experiments --------------------------------------------


def _random_composition(rng: random.Random, total: int, parts: int) -> list[int]:
    """Split total leaves among parts child slots, each at least one."""
    if parts == 1:
        return [total]
    cuts = sorted(rng.sample(range(1, total), parts - 1))
    out = []
    prev = 0
    for c in cuts + [total]:
        out.append(c - prev)
        prev = c
    return out


def _random_subtree(rng: random.Random, n: int, budget: int) -> PlanarTree:
    if n == 1 and (budget <= 0 or rng.random() < 0.4):
        return PlanarTree(None)
    if budget <= 0:
        return corolla(n)
    val = rng.randint(1, min(n, 3))
    parts = _random_composition(rng, n, val)
    kids = []
    spend = budget - 1
    for p in parts:
        use = rng.randint(0, max(spend, 0))
        sub = _random_subtree(rng, p, use)
        spend -= sub.vertex_count
        kids.append(sub)
    return PlanarTree(tuple(kids))


def random_raw_instance(rng: random.Random, P, H: FiniteSegment, arity: int, extra_vertices: int):
    """Random decorated tree: unit labels and neutral lengths included, so
    every rewrite rule gets exercised.  Needs nonempty label pools at all
    small arities (and no nullary part)."""
    tree = _random_subtree(rng, arity, extra_vertices)
    if tree.children is None:
        tree = corolla(1)
    labels = [rng.choice(list(P.elements(v))) for v in tree.valences()]
    lengths = [rng.randrange(H.size) for _ in range(tree.edge_count)]
    leaves = list(range(arity))
    rng.shuffle(leaves)
    return tree, labels, lengths, tuple(leaves)


def reachable_normal_forms(P, H: FiniteSegment, state, state_cap: int = 4000):
    """All normal forms reachable by rewriting in any order, canonicalized;
    None when the explored state space exceeds the cap."""
    seen = {state}
    stack = [state]
    normals = set()
    while stack:
        cur = stack.pop()
        steps = rewrite_steps(P, H, cur)
        if not steps:
            if cur[0] == "unit":
                normals.add(W_UNIT)
            else:
                normals.add(WSetElement(len(node_leaves(cur[1])), canon_node(P, cur[1])))
            continue
        for _, nxt in steps:
            if nxt not in seen:
                if len(seen) >= state_cap:
                    return None
                seen.add(nxt)
                stack.append(nxt)
    return normals


def confluence_experiment(P, H: FiniteSegment, count: int, seed: int, max_arity: int = 4,
                          extra_vertices: int = 3, state_cap: int = 4000) -> dict:
    """Randomized confluence check: every rewrite order of every sampled
    instance reaches the same canonical normal form.  Falls back to fifty
    random maximal rewrite sequences when a state space exceeds the cap."""
    rng = random.Random(seed)
    failures = []
    sampled_fallbacks = 0
    for trial in range(count):
        arity = rng.randint(1, max_arity)
        tree, labels, lengths, leaves = random_raw_instance(rng, P, H, arity, extra_vertices)
        node = build_node(tree, labels, lengths, leaves)
        if node is None:
            continue
        state = ("node", node)
        normals = reachable_normal_forms(P, H, state, state_cap)
        if normals is None:
            sampled_fallbacks += 1
            normals = set()
            for _ in range(50):
                cur = state
                while True:
                    steps = rewrite_steps(P, H, cur)
                    if not steps:
                        break
                    cur = rng.choice(steps)[1]
                if cur[0] == "unit":
                    normals.add(W_UNIT)
                else:
                    normals.add(WSetElement(len(node_leaves(cur[1])), canon_node(P, cur[1])))
        if len(normals) != 1:
            failures.append(
                {
                    "trial": trial,
                    "tree": tree.notation(),
                    "labels": [str(lab) for lab in labels],
                    "lengths": list(lengths),
                    "leaves": list(leaves),
                    "normal_forms": len(normals),
                }
            )
    return {
        "instances": count,
        "failures": failures,
        "sampled_fallbacks": sampled_fallbacks,
        "status": "confluent" if not failures else "fail",
    }
