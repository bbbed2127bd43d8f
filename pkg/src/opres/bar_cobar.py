"""Bar and cobar transforms of reduced chain operads.

The bar side expands an operad into labeled trees, one extra degree per
vertex, with a differential that contracts edges and composes labels.
The cobar side rebuilds an operad complex out of trees whose vertices
carry bar elements, shifted one degree down, with a differential that
splits them apart again.  The composite resolves the operad; this module
also matches it against the cylinder resolution of chain_operads by an
explicit basis bijection and a diagonal sign rescaling, so the two sign
disciplines never have to agree literally, only up to signs.
"""

import itertools
from dataclasses import dataclass

from . import perms
from .chain_core import ZZ, ChainComplex, ChainMap, mat_from_columns
from .chain_operads import _min_leaf_tuples, _pseudo_of, _tree_auts, w_augmentation, w_pseudo
from .set_operads import (
    InfiniteEnumerationError,
    build_node,
    node_labels,
    node_leaves,
    node_lengths,
    node_tree,
)
from .trees import PlanarTree, enumerate_planar, iso_classes

_UIDS = itertools.count()


# -- tagged trees ------------------------------------------------------------
#
# Both levels share one tagged shape: (uid, label, parity, items) with
# items ("leaf", g) or ("edge", child).  At the inner level labels are
# operad element names with parity shifted up one; at the outer level
# labels are whole bar elements with parity shifted down one.  Words are
# the vertices in depth-first preorder, and every sign is a Koszul count
# over those words.


def _t_word(nd):
    out = [(nd[0], nd[2])]
    for it in nd[3]:
        if it[0] == "edge":
            out.extend(_t_word(it[1]))
    return out


def _t_leaves(nd):
    out = []
    for it in nd[3]:
        if it[0] == "leaf":
            out.append(it[1])
        else:
            out.extend(_t_leaves(it[1]))
    return out


def _t_tree(nd) -> PlanarTree:
    kids = []
    for it in nd[3]:
        if it[0] == "leaf":
            kids.append(PlanarTree(None))
        else:
            kids.append(_t_tree(it[1]))
    return PlanarTree(tuple(kids))


def _t_edge_list(nd):
    out = []

    def rec(t):
        for slot, it in enumerate(t[3]):
            if it[0] == "edge":
                out.append((t, slot, it[1]))
                rec(it[1])

    rec(nd)
    return out


def _t_vertices(nd):
    yield nd
    for it in nd[3]:
        if it[0] == "edge":
            yield from _t_vertices(it[1])


def _t_graft_replace(nd, uid, new):
    if nd[0] == uid:
        return new
    out = []
    for it in nd[3]:
        if it[0] == "edge":
            out.append(("edge", _t_graft_replace(it[1], uid, new)))
        else:
            out.append(it)
    return (nd[0], nd[1], nd[2], tuple(out))


def _t_replace_edge(nd, puid, slot, newitem):
    uid, label, par, items = nd
    if uid == puid:
        return (uid, label, par, items[:slot] + (newitem,) + items[slot + 1 :])
    out = []
    for it in items:
        if it[0] == "edge":
            out.append(("edge", _t_replace_edge(it[1], puid, slot, newitem)))
        else:
            out.append(it)
    return (uid, label, par, tuple(out))


def _koszul(old, new):
    """Sign of reordering the odd letters of one word into another."""
    order = {u: i for i, (u, p) in enumerate(old) if p}
    seq = [order[u] for u, p in new if p]
    inv = sum(
        1 for a in range(len(seq)) for b in range(a + 1, len(seq)) if seq[a] > seq[b]
    )
    return -1 if inv & 1 else 1


def _bare_titem(it):
    if it[0] == "leaf":
        return (0,)
    return _bare_tnode(it[1])


def _bare_tnode(nd):
    return (1,) + tuple(_bare_titem(it) for it in nd[3])


def _t_sort(act, nd):
    uid, label, par, items = nd
    coeff = 1
    done = []
    for it in items:
        if it[0] == "edge":
            c, sub = _t_sort(act, it[1])
            coeff *= c
            done.append(("edge", sub))
        else:
            done.append(it)
    sigma = tuple(sorted(range(len(done)), key=lambda j: _bare_titem(done[j])))
    if sigma != perms.identity(len(done)):
        c, label = act(len(done), label, perms.invert(sigma))
        coeff *= c
        done = [done[j] for j in sigma]
    return coeff, (uid, label, par, tuple(done))


def _t_apply_aut(act, nd, aut):
    uid, label, par, items = nd
    sigma, kids = aut
    coeff = 1
    out = []
    for j in range(len(items)):
        it = items[sigma[j]]
        if it[0] == "edge":
            c, sub = _t_apply_aut(act, it[1], kids[j])
            coeff *= c
            out.append(("edge", sub))
        else:
            out.append(it)
    if sigma != perms.identity(len(items)):
        c, label = act(len(items), label, perms.invert(sigma))
        coeff *= c
    return coeff, (uid, label, par, tuple(out))


def _canon_engine(act, tagged):
    """Sort the shape, then pick the automorphism image with the least
    leaf routing; the total sign collects label twists and word Koszuls."""
    c1, t1 = _t_sort(act, tagged)
    sign = c1 * _koszul(_t_word(tagged), _t_word(t1))
    w1 = _t_word(t1)
    best = None
    for aut in _tree_auts(_t_tree(t1)):
        c2, t2 = _t_apply_aut(act, t1, aut)
        lam = tuple(_t_leaves(t2))
        if best is None or lam < best[0]:
            best = (lam, c2, t2)
    _, c2, t2 = best
    return sign * c2 * _koszul(w1, _t_word(t2)), t2


# -- the inner level ---------------------------------------------------------


@dataclass(frozen=True)
class BarElement:
    """One bar basis element: a labeled tree with every vertex one
    degree up, and a leaf routing."""

    arity: int
    node: tuple
    degree: int

    def tree(self) -> PlanarTree:
        return node_tree(self.node)

    def labels(self) -> tuple:
        return node_labels(self.node)

    def leaves(self) -> tuple:
        return node_leaves(self.node)


def _bar_degree(P, node) -> int:
    label, items = node
    deg = P.degree_of(len(items), label) + 1
    for it in items:
        if it[0] == "edge":
            deg += _bar_degree(P, it[2])
    return deg


def _mk_bar(P, node) -> BarElement:
    return BarElement(len(node_leaves(node)), node, _bar_degree(P, node))


def _btag(P, node):
    label, items = node
    out = []
    for it in items:
        if it[0] == "leaf":
            out.append(it)
        else:
            out.append(("edge", _btag(P, it[2])))
    par = (P.degree_of(len(items), label) + 1) & 1
    return (next(_UIDS), label, par, tuple(out))


def _buntag(nd):
    out = []
    for it in nd[3]:
        if it[0] == "leaf":
            out.append(it)
        else:
            out.append(("edge", 0, _buntag(it[1])))
    return (nd[1], tuple(out))


def _bar_act_adapter(P):
    def act(k, name, sigma):
        name2, c = P.signed_act(k, name, sigma)
        return c, name2

    return act


def _bar_canon(P, node):
    if not P.symmetric:
        return 1, node
    sign, t = _canon_engine(_bar_act_adapter(P), _btag(P, node))
    return sign, _buntag(t)


def _map_leaves(node, table):
    label, items = node
    out = []
    for it in items:
        if it[0] == "leaf":
            out.append(("leaf", table[it[1]]))
        else:
            out.append(("edge", 0, _map_leaves(it[2], table)))
    return (label, tuple(out))


def _bar_d(P, x: BarElement) -> dict:
    """Inner differential plus one contraction per edge.

    The label part carries the usual shift sign; a contraction consumes
    the child letter next to its parent, prefix counted inclusively."""
    nd = _btag(P, x.node)
    w0 = _t_word(nd)
    pos = {u: i for i, (u, _) in enumerate(w0)}
    acc: dict[BarElement, int] = {}

    def add(node, c):
        if not c:
            return
        sign, canon = _bar_canon(P, node)
        key = BarElement(x.arity, canon, x.degree - 1)
        acc[key] = acc.get(key, 0) + c * sign

    def replace_label(t, uid, name, par):
        if t[0] == uid:
            return (uid, name, par, t[3])
        out = []
        for it in t[3]:
            if it[0] == "edge":
                out.append(("edge", replace_label(it[1], uid, name, par)))
            else:
                out.append(it)
        return (t[0], t[1], t[2], tuple(out))

    for v in list(_t_vertices(nd)):
        uid, name, par, items = v
        pre = sum(p for _, p in w0[: pos[uid]]) & 1
        s = -1 if pre else 1
        for zname, c in P.d(len(items), name).items():
            nd2 = replace_label(nd, uid, zname, (par + 1) & 1)
            add(_buntag(nd2), -s * c)

    for parent, slot, child in _t_edge_list(nd):
        puid, pname, ppar, pitems = parent
        cuid, cname, cpar, citems = child
        ia, ib = pos[puid], pos[cuid]
        pre = sum(p for _, p in w0[: ia + 1]) & 1
        between = sum(p for _, p in w0[ia + 1 : ib]) & 1
        s = (-1 if pre else 1) * (-1 if (cpar and between) else 1)
        mpar = (ppar + cpar + 1) & 1
        mid = [(u, mpar if u == puid else p) for u, p in w0 if u != cuid]
        for zname, c in P.compose(len(pitems), slot, pname, len(citems), cname).items():
            merged = (puid, zname, mpar, pitems[:slot] + citems + pitems[slot + 1 :])
            nd2 = _t_graft_replace(nd, puid, merged)
            add(_buntag(nd2), s * c * _koszul(mid, _t_word(nd2)))
    return {k: v for k, v in acc.items() if v}


def _assemble(elems, dfun, describe) -> ChainComplex:
    by_deg: dict[int, list] = {}
    for x in elems:
        by_deg.setdefault(x.degree, []).append(x)
    basis = {k: tuple(v) for k, v in sorted(by_deg.items())}
    index = {k: {x: i for i, x in enumerate(v)} for k, v in basis.items()}
    mats = {}
    for k, xs in basis.items():
        below = index.get(k - 1, {})
        cols = []
        for x in xs:
            col = {}
            for y, c in dfun(x).items():
                if y not in below:
                    raise RuntimeError(f"boundary left the basis in {describe}")
                col[below[y]] = c
            cols.append(col)
        mats[k] = mat_from_columns(len(basis.get(k - 1, ())), cols, ZZ)
    return ChainComplex(ZZ, basis, mats, check=True)


class CooperadComplex:
    """Tree expansion of the bar transform: per arity a chain complex,
    plus the cocomposition structure the cobar side consumes."""

    def __init__(self, P, max_arity: int, vertex_cap: int | None = None):
        pseudo = _pseudo_of(P)
        if pseudo.basis(0):
            raise ValueError("the bar transform needs an operad with empty arity 0")
        if pseudo.basis(1) and vertex_cap is None:
            raise InfiniteEnumerationError(
                "unary labels allow arbitrarily tall trees; give a vertex cap"
            )
        self.operad = pseudo
        self.max_arity = max_arity
        self.vertex_cap = vertex_cap
        self._basis: dict[int, tuple] = {}
        self._pieces: dict[int, ChainComplex] = {}

    def basis(self, k: int) -> tuple:
        if k not in self._basis:
            self._basis[k] = self._enumerate(k)
        return self._basis[k]

    def _enumerate(self, k: int) -> tuple:
        P = self.operad
        if k < 1 or (self.vertex_cap is not None and self.vertex_cap < 1):
            return ()
        cap = self.vertex_cap - 1 if self.vertex_cap is not None else max(k - 2, 0)
        min_val = 1 if P.basis(1) else 2
        if P.symmetric:
            shapes = [
                (cls.tree, _min_leaf_tuples(cls.tree))
                for cls in iso_classes(k, cap, min_val)
            ]
        else:
            shapes = [(t, [tuple(range(k))]) for t in enumerate_planar(k, cap, min_val)]
        out = []
        for tree, lams in shapes:
            if tree.children is None:
                continue
            pools = [P.basis(v) for v in tree.valences()]
            if not all(pools):
                continue
            for labels in itertools.product(*pools):
                names = tuple(nm for nm, _ in labels)
                deg = sum(d for _, d in labels) + tree.vertex_count
                for lam in lams:
                    node = build_node(tree, names, (0,) * tree.edge_count, lam)
                    out.append(BarElement(k, node, deg))
        return tuple(out)

    def piece(self, k: int) -> ChainComplex:
        if k not in self._pieces:
            C = _assemble(self.basis(k), lambda x: self.d(x), "the bar expansion")
            C.meta = {
                "arity": k,
                "vertex_cap": self.vertex_cap,
                "operad": self.operad.name,
                "construction": "bar",
            }
            self._pieces[k] = C
        return self._pieces[k]

    def d(self, x: BarElement) -> dict:
        return _bar_d(self.operad, x)

    def act(self, x: BarElement, sigma):
        """Right action on a bar element: reroute the leaves, recanonize."""
        sigma = tuple(sigma)
        if sigma == perms.identity(x.arity):
            return 1, x
        if not self.operad.symmetric:
            raise ValueError("non-symmetric bar element acted on by a permutation")

        def relabel(node):
            label, items = node
            out = []
            for it in items:
                if it[0] == "leaf":
                    out.append(("leaf", sigma[it[1]]))
                else:
                    out.append(("edge", 0, relabel(it[2])))
            return (label, tuple(out))

        s, node = _bar_canon(self.operad, relabel(x.node))
        return s, BarElement(x.arity, node, x.degree)

    def splits(self, x: BarElement) -> list:
        """Quadratic cocomposition, upper factor first.

        One term per edge: (sign, upper, slot, lower, routing) where the
        routing is the leaf tuple of the standard two-vertex composite
        rebuilding the original element."""
        P = self.operad
        nd = _btag(P, x.node)
        w0 = _t_word(nd)
        out = []
        for parent, slot, child in _t_edge_list(nd):
            block = {u for u, _ in _t_word(child)}
            last = max(i for i, (u, _) in enumerate(w0) if u in block)
            block_par = sum(p for u, p in w0 if u in block) & 1
            tail_par = sum(p for _, p in w0[last + 1 :]) & 1
            ksign = -1 if (block_par and tail_par) else 1
            S = sorted(_t_leaves(child))
            lower_raw = _map_leaves(_buntag(child), {v: j for j, v in enumerate(S)})
            sl, lower_node = _bar_canon(P, lower_raw)
            low = _mk_bar(P, lower_node)
            upper_t = _t_replace_edge(nd, parent[0], slot, ("leaf", S[0]))
            U = sorted(_t_leaves(upper_t))
            su, upper_node = _bar_canon(
                P, _map_leaves(_buntag(upper_t), {v: j for j, v in enumerate(U)})
            )
            up = _mk_bar(P, upper_node)
            i = U.index(S[0])
            lam2 = tuple(U[:i] + S + U[i + 1 :])
            out.append((ksign * sl * su, up, i, low, lam2))
        return out


def bar(P, arity: int, vertex_cap: int | None = None) -> CooperadComplex:
    """Expand a reduced operad into its tree cooperad, vertices one
    degree up, edge contraction as the extra differential."""
    return CooperadComplex(P, arity, vertex_cap)


# -- twisting cochains -------------------------------------------------------


@dataclass
class TwistingCochain:
    """Degree -1 collection map from bar elements to operad elements."""

    cooperad: CooperadComplex
    values: dict

    def value(self, x: BarElement) -> dict:
        return self.values.get(x, {})


def bar_counit(C: CooperadComplex) -> TwistingCochain:
    """Projection onto the single-vertex trees."""
    vals = {}
    for k in range(1, C.max_arity + 1):
        for x in C.basis(k):
            if x.tree().edge_count == 0:
                vals[x] = {x.labels()[0]: 1}
    return TwistingCochain(C, vals)


def check_twisting(tau: TwistingCochain) -> list[str]:
    """Exact comparison of the boundary of tau with its cup square."""
    C = tau.cooperad
    P = C.operad
    bad: list[str] = []
    for k in range(1, C.max_arity + 1):
        deg_of = {nm: d for nm, d in P.basis(k)}
        for x in C.basis(k):
            for nm in tau.value(x):
                if deg_of.get(nm) != x.degree - 1:
                    bad.append(
                        f"arity {k} degree {x.degree}: value {nm} is not one degree down"
                    )
        for x in C.basis(k):
            lhs: dict = {}
            for nm, c in tau.value(x).items():
                for z, c2 in P.d(k, nm).items():
                    lhs[z] = lhs.get(z, 0) + c * c2
            for y, c in C.d(x).items():
                for z, c2 in tau.value(y).items():
                    lhs[z] = lhs.get(z, 0) + c * c2
            rhs: dict = {}
            for sgn, up, i, low, lam2 in C.splits(x):
                tk = -1 if up.degree & 1 else 1
                for p, cp in tau.value(up).items():
                    for q, cq in tau.value(low).items():
                        for z, c3 in P.compose(up.arity, i, p, low.arity, q).items():
                            for w, c4 in P.act(k, z, lam2).items():
                                rhs[w] = rhs.get(w, 0) + sgn * tk * cp * cq * c3 * c4
            lhs = {z: c for z, c in lhs.items() if c}
            rhs = {z: c for z, c in rhs.items() if c}
            if lhs != rhs:
                bad.append(
                    f"arity {k} degree {x.degree}: boundary and cup square differ"
                )
    return bad


# -- the outer level ---------------------------------------------------------


@dataclass(frozen=True)
class CobarElement:
    """Tree of bar elements: an outer tree, one bar label per vertex,
    everything one degree down."""

    arity: int
    node: tuple
    degree: int


def _otag(nd):
    label, items = nd
    out = []
    for it in items:
        if it[0] == "leaf":
            out.append(it)
        else:
            out.append(("edge", _otag(it[1])))
    return (next(_UIDS), label, (label.degree + 1) & 1, tuple(out))


def _ountag(nd):
    out = []
    for it in nd[3]:
        if it[0] == "leaf":
            out.append(it)
        else:
            out.append(("edge", _ountag(it[1])))
    return (nd[1], tuple(out))


def _cobar_act_adapter(C):
    def act(k, label, sigma):
        return C.act(label, sigma)

    return act


def _cobar_canon(C, node):
    if not C.operad.symmetric:
        return 1, node
    sign, t = _canon_engine(_cobar_act_adapter(C), _otag(node))
    return sign, _ountag(t)


def _build_outer(tree: PlanarTree, labels, lam):
    labels = list(labels)
    lam = list(lam)

    def rec(t):
        label = labels.pop(0)
        items = []
        for c in t.children:
            if c.children is None:
                items.append(("leaf", lam.pop(0)))
            else:
                items.append(("edge", rec(c)))
        return (label, tuple(items))

    return rec(tree)


def _cobar_elements(C: CooperadComplex, arity: int, cap: int | None) -> tuple:
    unary = bool(C.basis(1))
    if unary and cap is None:
        raise InfiniteEnumerationError(
            "unary bar labels allow arbitrarily large trees; give a cap"
        )
    if arity < 1 or (cap is not None and cap < 1):
        return ()
    max_edges = cap - 1 if cap is not None else max(arity - 2, 0)
    min_val = 1 if unary else 2
    P = C.operad
    if P.symmetric:
        shapes = [
            (cls.tree, _min_leaf_tuples(cls.tree))
            for cls in iso_classes(arity, max_edges, min_val)
        ]
    else:
        shapes = [(t, [tuple(range(arity))]) for t in enumerate_planar(arity, max_edges, min_val)]
    out = []
    for tree, lams in shapes:
        if tree.children is None:
            continue
        pools = [
            tuple((lb, lb.tree().vertex_count) for lb in C.basis(v))
            for v in tree.valences()
        ]
        if not all(pools):
            continue
        r = len(pools)
        chosen: list = []

        # depth-first over label choices; every remaining vertex costs
        # at least one unit of the cap, so dead branches prune early
        def rec(j, used):
            if j == r:
                labels = tuple(chosen)
                deg = sum(lb.degree - 1 for lb in labels)
                for lam in lams:
                    out.append(CobarElement(arity, _build_outer(tree, labels, lam), deg))
                return
            rem = r - j - 1
            for lb, vc in pools[j]:
                if cap is not None and used + vc + rem > cap:
                    continue
                chosen.append(lb)
                rec(j + 1, used + vc)
                chosen.pop()

        rec(0, 0)
    return tuple(out)


def _cobar_d(C: CooperadComplex, X: CobarElement) -> dict:
    """Shifted bar differential on each label plus one splitting per
    label edge, prefix counted exclusively."""
    nd = _otag(X.node)
    w0 = _t_word(nd)
    pos = {u: i for i, (u, _) in enumerate(w0)}
    acc: dict[CobarElement, int] = {}

    def add(node, c):
        if not c:
            return
        s, canon = _cobar_canon(C, node)
        key = CobarElement(X.arity, canon, X.degree - 1)
        acc[key] = acc.get(key, 0) + c * s

    for v in list(_t_vertices(nd)):
        uid, label, par, items = v
        pre = sum(p for _, p in w0[: pos[uid]]) & 1
        s = -1 if pre else 1
        for y, c in C.d(label).items():
            nd2 = _t_graft_replace(nd, uid, (uid, y, (y.degree + 1) & 1, items))
            add(_ountag(nd2), -s * c)
        for sgn, up, slot, low, lam2 in C.splits(label):
            tk = -1 if up.degree & 1 else 1
            m = low.arity
            low_uid = next(_UIDS)
            low_par = (low.degree + 1) & 1
            up_par = (up.degree + 1) & 1
            upper_items = []
            for j in range(up.arity):
                if j == slot:
                    lower_items = tuple(items[lam2[slot + u]] for u in range(m))
                    upper_items.append(("edge", (low_uid, low, low_par, lower_items)))
                elif j < slot:
                    upper_items.append(items[lam2[j]])
                else:
                    upper_items.append(items[lam2[j + m - 1]])
            nd2 = _t_graft_replace(nd, uid, (uid, up, up_par, tuple(upper_items)))
            natural = []
            for u, p in w0:
                if u == uid:
                    natural.append((uid, up_par))
                    natural.append((low_uid, low_par))
                else:
                    natural.append((u, p))
            add(_ountag(nd2), s * sgn * tk * _koszul(natural, _t_word(nd2)))
    return {k: v for k, v in acc.items() if v}


def cobar(C: CooperadComplex, arity: int, cap: int | None = None) -> ChainComplex:
    """One arity piece of the operad rebuilt from the tree cooperad.

    The cap bounds the total vertex count across all labels of one
    element; it must not exceed what the cooperad was expanded with."""
    if arity > C.max_arity:
        raise ValueError("cooperad not expanded far enough for this arity")
    if cap is None and C.vertex_cap is not None:
        raise ValueError("capped cooperad cannot support an uncapped expansion")
    if cap is not None and C.vertex_cap is not None and C.vertex_cap < cap:
        raise ValueError("cooperad vertex cap is smaller than the requested cap")
    X = _assemble(_cobar_elements(C, arity, cap), lambda x: _cobar_d(C, x), "the cobar expansion")
    X.meta = {
        "arity": arity,
        "cap": cap,
        "operad": C.operad.name,
        "construction": "cobar",
    }
    return X


# -- the counit down to the operad -------------------------------------------


def _flat_eval(P, flat, n: int) -> dict:
    """Operadic value of a tree of operad labels with a leaf routing."""

    def tag(ndd):
        label, items = ndd
        out = []
        for it in items:
            out.append(it if it[0] == "leaf" else ("edge", tag(it[1])))
        return (next(_UIDS), label, P.degree_of(len(items), label) & 1, tuple(out))

    work = [(1, tag(flat))]
    done: dict[str, int] = {}
    while work:
        c, nd = work.pop()
        edges = _t_edge_list(nd)
        if not edges:
            lam = tuple(_t_leaves(nd))
            for w, c2 in P.act(n, nd[1], lam).items():
                done[w] = done.get(w, 0) + c * c2
            continue
        parent, slot, child = edges[0]
        puid, pname, ppar, pitems = parent
        cuid, cname, cpar, citems = child
        w0 = _t_word(nd)
        pos = {u: i for i, (u, _) in enumerate(w0)}
        between = sum(p for _, p in w0[pos[puid] + 1 : pos[cuid]]) & 1
        move = -1 if (cpar and between) else 1
        mpar = (ppar + cpar) & 1
        mid = [(u, mpar if u == puid else p) for u, p in w0 if u != cuid]
        for zname, c2 in P.compose(len(pitems), slot, pname, len(citems), cname).items():
            merged = (puid, zname, mpar, pitems[:slot] + citems + pitems[slot + 1 :])
            nd2 = _t_graft_replace(nd, puid, merged)
            work.append((c * move * c2 * _koszul(mid, _t_word(nd2)), nd2))
    return {k: v for k, v in done.items() if v}


def _counit_value(C: CooperadComplex, X: CobarElement) -> dict:
    """Project every label to its single vertex, then compose."""
    P = C.operad

    def to_flat(nd):
        label, items = nd
        if label.tree().edge_count != 0:
            return None
        out = []
        for it in items:
            if it[0] == "leaf":
                out.append(it)
            else:
                sub = to_flat(it[1])
                if sub is None:
                    return None
                out.append(("edge", sub))
        return (label.labels()[0], tuple(out))

    flat = to_flat(X.node)
    if flat is None:
        return {}
    return _flat_eval(P, flat, X.arity)


def cobar_bar_counit(P, arity: int, cap: int | None = None, C=None, CB=None) -> ChainMap:
    """The chain map from the cobar-of-bar piece onto the operad piece."""
    pseudo = _pseudo_of(P)
    if C is None:
        C = bar(pseudo, arity, cap)
    if CB is None:
        CB = cobar(C, arity, cap)
    D = pseudo.complex(arity)
    mats = {}
    for k in CB.degrees():
        cols = []
        for X in CB.basis_of(k):
            cols.append({D.index(k, nm): c for nm, c in _counit_value(C, X).items()})
        mats[k] = mat_from_columns(D.dim(k), cols, ZZ)
    return ChainMap(CB, D, 0, mats)


# -- comparison with the cylinder --------------------------------------------


def _w_key(x) -> str:
    if x.node is None:
        return "|"
    marked = ",".join(str(i) for i, f in enumerate(node_lengths(x.node)) if f)
    labs = ",".join(node_labels(x.node))
    lvs = ",".join(map(str, node_leaves(x.node)))
    return f"{node_tree(x.node).notation()} g[{marked}] l[{labs}] c[{lvs}]"


def _bar_key(b: BarElement) -> str:
    labs = ",".join(b.labels())
    lvs = ",".join(map(str, b.leaves()))
    return f"{b.tree().notation()} l[{labs}] c[{lvs}]"


def _cobar_key(X: CobarElement) -> str:
    def rec(nd):
        label, items = nd
        parts = []
        for it in items:
            parts.append(str(it[1]) if it[0] == "leaf" else rec(it[1]))
        return "<" + _bar_key(label) + " : " + " ".join(parts) + ">"

    return rec(X.node)


def _w_to_cobar(P, C: CooperadComplex, x) -> CobarElement:
    """Read a cylinder element as a tree of trees: marked components
    become bar labels, unmarked edges become outer edges.  Unsigned;
    the rescaling search owns all signs."""

    def comp(flat):
        ctr = itertools.count()
        outer_items: list = []

        def walk(ndd):
            label, items = ndd
            out = []
            for it in items:
                if it[0] == "leaf":
                    out.append(("leaf", next(ctr)))
                    outer_items.append(("leaf", it[1]))
                elif it[1] == 1:
                    out.append(("edge", 0, walk(it[2])))
                else:
                    out.append(("leaf", next(ctr)))
                    outer_items.append(("edge", comp(it[2])))
            return (label, tuple(out))

        inner = walk(flat)
        _, canon = _bar_canon(P, inner)
        return (_mk_bar(P, canon), tuple(outer_items))

    _, onode = _cobar_canon(C, comp(x.node))
    return CobarElement(x.arity, onode, x.degree)


@dataclass
class ComparisonReport:
    status: str
    witness: str | None
    bijection: list
    rescaling: dict
    arity: int
    edge_cap: int | None
    components: int = 0

    def to_json(self) -> dict:
        return {
            "bijection": self.bijection,
            "rescaling": self.rescaling,
            "status": self.status,
            "witness": self.witness,
        }


def compare_w_barcobar(P, arity: int, edge_cap: int | None = None) -> ComparisonReport:
    """Match the cylinder piece with the cobar-of-bar piece.

    An edge cap of c on the cylinder side corresponds to capping the
    total vertex count across the inner trees at c + 1; both sides are
    built under that correspondence.  The report carries the degreewise
    basis bijection, a diagonal sign rescaling equating the two
    differentials, and the compatibility of the two augmentations."""
    pseudo = _pseudo_of(P)
    W = w_pseudo(pseudo, arity, edge_cap)
    vcap = None if edge_cap is None else edge_cap + 1
    C = bar(pseudo, arity, vcap)
    CB = cobar(C, arity, vcap)

    def fail(msg):
        return ComparisonReport("fail", msg, [], {}, arity, edge_cap)

    degs = sorted(set(W.degrees()) | set(CB.degrees()))
    for k in degs:
        if W.dim(k) != CB.dim(k):
            return fail(f"rank mismatch in degree {k}: {W.dim(k)} vs {CB.dim(k)}")
    phi = {}
    bij = []
    for k in degs:
        seen = set()
        for x in W.basis_of(k):
            y = _w_to_cobar(pseudo, C, x)
            try:
                CB.index(k, y)
            except KeyError:
                return fail(f"image of {_w_key(x)} is not a basis element")
            if y in seen:
                return fail(f"two degree {k} elements share the image {_cobar_key(y)}")
            seen.add(y)
            phi[x] = y
            bij.append([_w_key(x), _cobar_key(y)])

    cons = []
    for k in degs:
        if W.dim(k) == 0 or W.dim(k - 1) == 0:
            continue
        A = W.diff(k)
        B = CB.diff(k)
        ys = W.basis_of(k - 1)
        for j, x in enumerate(W.basis_of(k)):
            cola = A.column(j)
            colb = dict(B.column(CB.index(k, phi[x])))
            ta = {CB.index(k - 1, phi[ys[r]]): v for r, v in cola.items()}
            if set(ta) != set(colb):
                return fail(f"differential support differs at {_w_key(x)}")
            for r, v in ta.items():
                if abs(v) != abs(colb[r]):
                    return fail(f"differential magnitude differs at {_w_key(x)}")
            for r, v in cola.items():
                req = 1 if (v > 0) == (colb[CB.index(k - 1, phi[ys[r]])] > 0) else -1
                cons.append((x, ys[r], req))

    gamma = w_augmentation(pseudo, arity, edge_cap, W=W)
    counit = cobar_bar_counit(pseudo, arity, vcap, C=C, CB=CB)
    forced = {}
    for k in degs:
        if W.dim(k) == 0:
            continue
        gm = gamma.mat(k)
        cm = counit.mat(k)
        for j, x in enumerate(W.basis_of(k)):
            colg = gm.column(j)
            colc = dict(cm.column(CB.index(k, phi[x])))
            if set(colg) != set(colc):
                return fail(f"augmentation support differs at {_w_key(x)}")
            ratios = set()
            for r, v in colg.items():
                if abs(v) != abs(colc[r]):
                    return fail(f"augmentation magnitude differs at {_w_key(x)}")
                ratios.add(1 if (v > 0) == (colc[r] > 0) else -1)
            if len(ratios) > 1:
                return fail(f"augmentation rows conflict at {_w_key(x)}")
            if ratios:
                forced[x] = ratios.pop()

    adj: dict = {}
    for x, y, req in cons:
        adj.setdefault(x, []).append((y, req))
        adj.setdefault(y, []).append((x, req))
    nodes = [x for k in degs for x in W.basis_of(k)]
    eps: dict = {}
    ncomp = 0
    for root in nodes:
        if root in eps:
            continue
        ncomp += 1
        eps[root] = 1
        members = [root]
        stack = [root]
        while stack:
            a = stack.pop()
            for b, req in adj.get(a, ()):
                want = eps[a] * req
                if b in eps:
                    if eps[b] != want:
                        return fail(f"no diagonal rescaling: cycle conflict at {_w_key(b)}")
                else:
                    eps[b] = want
                    members.append(b)
                    stack.append(b)
        votes = {forced[a] * eps[a] for a in members if a in forced}
        if len(votes) > 1:
            return fail("augmentation constraints conflict inside one component")
        if votes == {-1}:
            for a in members:
                eps[a] = -eps[a]
    for x, y, req in cons:
        if eps[x] * eps[y] != req:
            return fail("rescaling verification failed")
    for x, v in forced.items():
        if eps[x] != v:
            return fail("augmentation incompatible with the rescaling")
    return ComparisonReport(
        "iso",
        None,
        bij,
        {_w_key(x): eps[x] for x in nodes},
        arity,
        edge_cap,
        ncomp,
    )
