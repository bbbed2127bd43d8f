"""Planar rooted trees with leaves.

A tree is either the unit tree (a bare edge, no vertices, arity 1) or a
root vertex with an ordered tuple of child trees.  A vertex with no
children is a stump (arity 0).  The arity of a tree is its number of
leaves; the unit tree has arity 1.

Internal edges connect two vertices.  Every non-root vertex determines
exactly one internal edge (the one below it), so a tree with V vertices
has max(V - 1, 0) internal edges.  Vertices are indexed in depth-first
pre-order (root = 0, children left to right); internal edge i is the
edge above vertex i + 1.  All edge/vertex indices in this package use
that convention.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache


@dataclass(frozen=True)
class PlanarTree:
    # children is None for the unit tree; a tuple (possibly empty) for a vertex.
    children: tuple["PlanarTree", ...] | None = None

    @property
    def is_unit(self) -> bool:
        return self.children is None

    @cached_property
    def arity(self) -> int:
        if self.children is None:
            return 1
        return sum(c.arity for c in self.children)

    @cached_property
    def vertex_count(self) -> int:
        if self.children is None:
            return 0
        return 1 + sum(c.vertex_count for c in self.children)

    @property
    def edge_count(self) -> int:
        return max(self.vertex_count - 1, 0)

    @cached_property
    def encoding(self) -> tuple:
        """Nested-tuple encoding; total order on encodings orders trees."""
        if self.children is None:
            return (0,)
        return (1,) + tuple(c.encoding for c in self.children)

    @cached_property
    def canonical_key(self) -> tuple:
        return self.canonical().encoding

    def canonical(self) -> "PlanarTree":
        """Minimal-encoding planar representative of the isomorphism class.

        Computed bottom-up: children are canonicalized, then sorted by
        encoding.  Sorting children realizes an isomorphism, so the result
        is the least planar presentation of the non-planar tree.
        """
        if self.children is None:
            return self
        kids = sorted((c.canonical() for c in self.children), key=lambda t: t.encoding)
        return PlanarTree(tuple(kids))

    def notation(self) -> str:
        if self.children is None:
            return "|"
        return "(" + " ".join(c.notation() for c in self.children) + ")"

    def __repr__(self) -> str:  # pragma: no cover
        return f"PlanarTree[{self.notation()}]"

    # -- indexed views -------------------------------------------------

    def subtrees_preorder(self) -> list["PlanarTree"]:
        """All vertex subtrees in DFS pre-order (unit trees excluded)."""
        out: list[PlanarTree] = []

        def walk(t: PlanarTree) -> None:
            if t.children is None:
                return
            out.append(t)
            for c in t.children:
                walk(c)

        walk(self)
        return out

    def valences(self) -> list[int]:
        """Valence (number of input slots) of each vertex, DFS pre-order."""
        return [len(t.children) for t in self.subtrees_preorder()]

    def edges(self) -> list[tuple[int, int]]:
        """Internal edges as (parent_vertex, child_vertex) DFS index pairs.

        Edge i is the parent edge of vertex i + 1, so the list is simply
        ordered by child vertex.
        """
        pairs: list[tuple[int, int]] = []
        counter = itertools.count()

        def walk(t: PlanarTree, my_idx: int) -> None:
            for c in t.children:
                if c.children is not None:
                    idx = next(counter)
                    pairs.append((my_idx, idx))
                    walk(c, idx)

        if self.children is not None:
            next(counter)  # root takes index 0
            walk(self, 0)
        return pairs

    def leaf_count_check(self) -> int:
        return self.arity


UNIT = PlanarTree(None)


def corolla(n: int) -> PlanarTree:
    return PlanarTree((UNIT,) * n)


def build_tree(text: str) -> PlanarTree:
    """Parse nested-list notation: '|' unit, '(c1 c2 ... ck)' a vertex, '()' a stump."""
    pos = 0
    s = text.replace("(", " ( ").replace(")", " ) ").split()

    def parse(i: int) -> tuple[PlanarTree, int]:
        tok = s[i]
        if tok == "|":
            return UNIT, i + 1
        if tok != "(":
            raise ValueError(f"unexpected token {tok!r} in tree notation {text!r}")
        kids = []
        i += 1
        while i < len(s) and s[i] != ")":
            child, i = parse(i)
            kids.append(child)
        if i >= len(s):
            raise ValueError(f"unbalanced parentheses in tree notation {text!r}")
        return PlanarTree(tuple(kids)), i + 1

    if not s:
        raise ValueError("empty tree notation")
    tree, pos = parse(0)
    if pos != len(s):
        raise ValueError(f"trailing tokens in tree notation {text!r}")
    return tree


def tree_to_json(t: PlanarTree) -> dict:
    return {"arity": t.arity, "tree": t.notation(), "edges": [list(e) for e in t.edges()]}


# -- enumeration -------------------------------------------------------


def enumerate_planar(arity: int, max_edges: int | None = None, min_valence: int = 0) -> list[PlanarTree]:
    """All planar trees with the given arity, at most max_edges internal
    edges and every vertex valence >= min_valence, in a deterministic order.

    max_edges=None means no edge bound; that is only finite when
    min_valence >= 2 (then a tree with n leaves has at most n - 1 vertices).
    """
    if arity < 0:
        raise ValueError("arity must be >= 0")
    if max_edges is None:
        if min_valence < 2:
            raise ValueError("unbounded enumeration requires min_valence >= 2")
        max_edges = max(arity - 2, 0)
    return list(_enum(arity, max_edges, min_valence))


@lru_cache(maxsize=None)
def _enum(n: int, k: int, v: int) -> tuple[PlanarTree, ...]:
    out: list[PlanarTree] = []
    if n == 1:
        out.append(UNIT)
    # root valence m; children use one edge each unless they are unit trees
    max_valence = n + k  # each arity-0 child costs an edge
    for m in range(max(v, 0), max_valence + 1):
        if m == 0:
            if n == 0:
                out.append(PlanarTree(()))
            continue
        for kids in _children_tuples(n, k, v, m):
            out.append(PlanarTree(kids))
    return tuple(out)


def _children_tuples(n: int, k: int, v: int, m: int) -> list[tuple[PlanarTree, ...]]:
    """All m-tuples of child trees with total arity n within edge budget k."""
    results: list[tuple[PlanarTree, ...]] = []

    def rec(slots_left: int, arity_left: int, budget: int, acc: list[PlanarTree]) -> None:
        if slots_left == 0:
            if arity_left == 0:
                results.append(tuple(acc))
            return
        if arity_left < 0:
            return
        for a in range(arity_left + 1):
            # a child of arity a; unit child only when a == 1
            if a == 1:
                acc.append(UNIT)
                rec(slots_left - 1, arity_left - 1, budget, acc)
                acc.pop()
            if budget >= 1:
                for child in _enum(a, budget - 1, v):
                    if child.is_unit:
                        continue
                    if child.edge_count + 1 > budget:
                        continue
                    acc.append(child)
                    rec(slots_left - 1, arity_left - a, budget - 1 - child.edge_count, acc)
                    acc.pop()

    rec(m, n, k, [])
    return results


# -- automorphisms -----------------------------------------------------


def aut_order(t: PlanarTree) -> int:
    """Order of the automorphism group of the underlying non-planar tree.

    Children are grouped into isomorphism classes; with k_i children in
    class i having representative T_i, the group is the semidirect
    product of prod Aut(T_i)^{k_i} with prod Sym(k_i).
    """
    if t.children is None:
        return 1
    blocks: dict[tuple, list[PlanarTree]] = {}
    for c in t.children:
        blocks.setdefault(c.canonical_key, []).append(c)
    order = 1
    for key, members in blocks.items():
        order *= aut_order(members[0]) ** len(members) * _factorial(len(members))
    return order


def _factorial(k: int) -> int:
    out = 1
    for i in range(2, k + 1):
        out *= i
    return out


@dataclass(frozen=True)
class AutGenerator:
    # adjacent swap of two equal children at some vertex; on a canonical
    # representative these generate the whole automorphism group
    kind: str
    description: str
    leaf_perm: tuple[int, ...]


def iso_leaf_maps(t1: PlanarTree, t2: PlanarTree) -> list[tuple[int, ...]]:
    """Leaf permutations of all isomorphisms t1 -> t2.

    Entry p of a returned tuple is the leaf position in t2 that leaf p of
    t1 is sent to.  Empty list when the trees are not isomorphic.
    """
    if t1.canonical_key != t2.canonical_key:
        return []
    if t1.children is None:
        return [(0,)]
    kids1, kids2 = t1.children, t2.children
    m = len(kids1)
    offs1 = _leaf_offsets(kids1)
    offs2 = _leaf_offsets(kids2)
    keys1 = [c.canonical_key for c in kids1]
    keys2 = [c.canonical_key for c in kids2]
    out: list[tuple[int, ...]] = []

    # match children of t1 to children of t2 within isomorphism classes
    def assign(j: int, used: list[bool], target: list[int]) -> None:
        if j == m:
            child_maps = [iso_leaf_maps(kids1[i], kids2[target[i]]) for i in range(m)]
            for combo in itertools.product(*child_maps):
                perm = [0] * t1.arity
                for i in range(m):
                    for p_local, q_local in enumerate(combo[i]):
                        perm[offs1[i] + p_local] = offs2[target[i]] + q_local
                out.append(tuple(perm))
            return
        for i2 in range(m):
            if not used[i2] and keys2[i2] == keys1[j]:
                used[i2] = True
                target.append(i2)
                assign(j + 1, used, target)
                target.pop()
                used[i2] = False

    assign(0, [False] * m, [])
    return out


def _leaf_offsets(kids: tuple[PlanarTree, ...]) -> list[int]:
    offs = []
    acc = 0
    for c in kids:
        offs.append(acc)
        acc += c.arity
    return offs


def aut_leaf_perms(t: PlanarTree) -> list[tuple[int, ...]]:
    """The automorphism group of t as a set of leaf permutations."""
    if t.arity == 0:
        # leafless trees act trivially on the empty leaf set
        return [()]
    return sorted(set(iso_leaf_maps(t, t)))


def aut_generators(t: PlanarTree) -> list[AutGenerator]:
    """Generators realizing the semidirect decomposition at each vertex."""
    gens: list[AutGenerator] = []

    def walk(s: PlanarTree, path: tuple[int, ...], leaf_off: int) -> None:
        if s.children is None:
            return
        offs = _leaf_offsets(s.children)
        # block generators: adjacent transpositions of isomorphic siblings
        for j in range(len(s.children) - 1):
            a, b = s.children[j], s.children[j + 1]
            if a.canonical_key == b.canonical_key:
                perm = list(range(t.arity))
                wa = a.arity
                wb = b.arity
                base = leaf_off + offs[j]
                for p in range(wa):
                    perm[base + p] = base + wb + p
                for p in range(wb):
                    perm[base + wa + p] = base + p
                gens.append(
                    AutGenerator(
                        "block",
                        f"swap children {j} and {j + 1} at vertex {path}",
                        tuple(perm),
                    )
                )
        for j, c in enumerate(s.children):
            walk(c, path + (j,), leaf_off + offs[j])

    walk(t, (), 0)
    return gens


@dataclass(frozen=True)
class TreeClass:
    tree: PlanarTree  # canonical representative
    aut_order: int
    planar_count: int
    generators: tuple[AutGenerator, ...]


def iso_classes(arity: int, max_edges: int | None = None, min_valence: int = 0) -> list[TreeClass]:
    """Isomorphism classes of enumerate_planar output, canonical reps first."""
    groups: dict[tuple, list[PlanarTree]] = {}
    for t in enumerate_planar(arity, max_edges, min_valence):
        groups.setdefault(t.canonical_key, []).append(t)
    classes = []
    for key in sorted(groups):
        members = groups[key]
        rep = members[0].canonical()
        classes.append(
            TreeClass(
                tree=rep,
                aut_order=aut_order(rep),
                planar_count=len(members),
                generators=tuple(aut_generators(rep)),
            )
        )
    return classes


# -- grafting and quotients --------------------------------------------


def graft(t: PlanarTree, pos: int, s: PlanarTree) -> PlanarTree:
    """Substitute s into leaf number pos (1-based, planar order) of t."""
    if not (1 <= pos <= t.arity):
        raise ValueError(f"leaf position {pos} out of range for arity {t.arity}")
    tree, _ = _graft_rec(t, pos - 1, s)
    return tree


def _graft_rec(t: PlanarTree, pos0: int, s: PlanarTree) -> tuple[PlanarTree, bool]:
    if t.children is None:
        return s, True
    acc = 0
    kids = list(t.children)
    for j, c in enumerate(kids):
        if acc <= pos0 < acc + c.arity:
            new_child, done = _graft_rec(c, pos0 - acc, s)
            kids[j] = new_child
            return PlanarTree(tuple(kids)), done
        acc += c.arity
    raise AssertionError("unreachable: leaf position not found")


def graft_edge_info(t: PlanarTree, pos: int, s: PlanarTree) -> dict:
    """Graft plus the edge correspondence.

    Returns dict with keys: tree, new_edge (result edge index or None),
    edge_map_host (old edge index -> new), edge_map_graft.
    Uses the fact that edge i sits above vertex i + 1 in DFS order.
    """
    result = graft(t, pos, s)
    if t.is_unit:
        return {
            "tree": result,
            "new_edge": None,
            "edge_map_host": {},
            "edge_map_graft": {i: i for i in range(s.edge_count)},
        }
    if s.is_unit:
        return {
            "tree": result,
            "new_edge": None,
            "edge_map_host": {i: i for i in range(t.edge_count)},
            "edge_map_graft": {},
        }
    # vertices of the result: t's vertices with s's block spliced in at the
    # DFS position its root receives
    host_map, s_root_new = _vertex_positions_after_graft(t, pos - 1, s.vertex_count)
    edge_map_host = {}
    for old_child in range(1, t.vertex_count):
        edge_map_host[old_child - 1] = host_map[old_child] - 1
    edge_map_graft = {}
    for old_child in range(1, s.vertex_count):
        edge_map_graft[old_child - 1] = s_root_new + old_child - 1
    return {
        "tree": result,
        "new_edge": s_root_new - 1,
        "edge_map_host": edge_map_host,
        "edge_map_graft": edge_map_graft,
    }


def _vertex_positions_after_graft(t: PlanarTree, pos0: int, s_count: int) -> tuple[dict[int, int], int]:
    """DFS index bookkeeping for grafting an s_count-vertex block at leaf pos0.

    Returns (map old host DFS index -> new index, new index of the graft root).
    """
    host_map: dict[int, int] = {}
    counter = {"old": 0, "new": 0, "leaf": 0, "graft_root": -1}

    def walk(u: PlanarTree) -> None:
        host_map[counter["old"]] = counter["new"]
        counter["old"] += 1
        counter["new"] += 1
        for c in u.children:
            if c.children is None:
                if counter["leaf"] == pos0:
                    counter["graft_root"] = counter["new"]
                    counter["new"] += s_count
                counter["leaf"] += 1
            else:
                walk(c)

    walk(t)
    return host_map, counter["graft_root"]


def contract_edges(t: PlanarTree, edge_indices: set[int] | frozenset[int] | list[int]) -> tuple[PlanarTree, dict[int, int]]:
    """Contract a set of internal edges; returns (quotient tree, vertex map).

    The vertex map sends each old vertex DFS index to the DFS index of the
    vertex it lands on in the quotient.  Contracting the parent edge of
    vertex w merges w into its parent, splicing w's child slots into the
    parent's slot list at w's position.
    """
    edge_set = set(edge_indices)
    for e in edge_set:
        if not (0 <= e < t.edge_count):
            raise ValueError(f"edge index {e} out of range")
    if t.children is None:
        return t, {}

    # mutable form: vertex = [old_index, [slot, ...]], slot = ("leaf",) | vertex
    counter = itertools.count()

    def to_mut(u: PlanarTree):
        idx = next(counter)
        slots = []
        for c in u.children:
            if c.children is None:
                slots.append(("leaf",))
            else:
                slots.append(to_mut(c))
        return [idx, slots]

    root = to_mut(t)
    merged_into: dict[int, int] = {}

    def contract(u) -> None:
        # process children first so deep contractions happen before shallow
        new_slots = []
        for slot in u[1]:
            if slot == ("leaf",):
                new_slots.append(slot)
                continue
            contract(slot)
            child_edge = slot[0] - 1
            if child_edge in edge_set:
                merged_into[slot[0]] = u[0]
                new_slots.extend(slot[1])
            else:
                new_slots.append(slot)
        u[1] = new_slots

    contract(root)

    def resolve(v: int) -> int:
        while v in merged_into:
            v = merged_into[v]
        return v

    new_index: dict[int, int] = {}
    counter2 = itertools.count()

    def rebuild(u) -> PlanarTree:
        new_index[u[0]] = next(counter2)
        kids = []
        for slot in u[1]:
            if slot == ("leaf",):
                kids.append(UNIT)
            else:
                kids.append(rebuild(slot))
        return PlanarTree(tuple(kids))

    out = rebuild(root)
    vmap = {v: new_index[resolve(v)] for v in range(t.vertex_count)}
    return out, vmap


def remove_unary(t: PlanarTree, vertex_indices: set[int] | list[int]) -> PlanarTree:
    """Delete the given unary vertices, splicing their single slot upward.

    Arity is preserved.  Deleting the root promotes its child; deleting a
    vertex whose slot is a leaf turns the parent slot into a leaf.
    """
    todel = set(vertex_indices)
    vals = t.valences()
    for v in todel:
        if not (0 <= v < t.vertex_count):
            raise ValueError(f"vertex index {v} out of range")
        if vals[v] != 1:
            raise ValueError(f"vertex {v} has valence {vals[v]}, not unary")
    counter = itertools.count()

    def walk(u: PlanarTree) -> PlanarTree:
        idx = next(counter)
        rebuilt = []
        for c in u.children:
            if c.children is None:
                rebuilt.append(UNIT)
            else:
                rebuilt.append(walk(c))
        if idx in todel:
            return rebuilt[0]
        return PlanarTree(tuple(rebuilt))

    return walk(t)
