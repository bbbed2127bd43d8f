"""Exact linear algebra for chain complexes over Z, Q, and prime fields.

Graded modules carry explicit ordered bases; differentials are sparse
matrices with exact entries (python int, Fraction, or int mod p).  The
differential d[k] maps degree k to degree k - 1 and is stored as a matrix
whose columns are images of the degree-k basis vectors.

Integer homology goes through a Smith normal form that re-multiplies
U*A*V and compares with its own diagonal on every call, so a wrong
factorization can never be silently consumed downstream.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction


# -- rings ----------------------------------------------------------------


@dataclass(frozen=True)
class Ring:
    tag: str  # "Z", "Q", or "Fp"
    p: int = 0

    def __post_init__(self):
        if self.tag not in ("Z", "Q", "Fp"):
            raise ValueError(f"unknown ring tag {self.tag!r}")
        if self.tag == "Fp":
            if self.p < 2 or any(self.p % q == 0 for q in range(2, int(self.p**0.5) + 1)):
                raise ValueError(f"{self.p} is not prime")

    def normalize(self, v):
        if self.tag == "Z":
            return int(v)
        if self.tag == "Q":
            return Fraction(v)
        return int(v) % self.p

    def zero(self):
        return self.normalize(0)

    def one(self):
        return self.normalize(1)

    def add(self, a, b):
        return self.normalize(a + b)

    def mul(self, a, b):
        return self.normalize(a * b)

    def neg(self, a):
        return self.normalize(-a)

    def is_zero(self, a) -> bool:
        return self.normalize(a) == self.zero()

    def parse(self, s: str):
        if self.tag == "Q":
            return Fraction(s)
        return self.normalize(int(s))

    def show(self, v) -> str:
        return str(v)

    def name(self) -> str:
        return f"F{self.p}" if self.tag == "Fp" else self.tag


ZZ = Ring("Z")
QQ = Ring("Q")


def ring_from_name(name: str) -> Ring:
    if name == "Z":
        return ZZ
    if name == "Q":
        return QQ
    if name.startswith("F"):
        return Ring("Fp", int(name[1:]))
    raise ValueError(f"unknown ring {name!r}")


# -- sparse matrices -------------------------------------------------------


class SparseMat:
    """Sparse matrix over a ring; data maps (row, col) to a nonzero entry."""

    __slots__ = ("rows", "cols", "data")

    def __init__(self, rows: int, cols: int, data: dict | None = None):
        self.rows = rows
        self.cols = cols
        self.data = data or {}

    @staticmethod
    def identity(n: int, ring: Ring) -> "SparseMat":
        return SparseMat(n, n, {(i, i): ring.one() for i in range(n)})

    def get(self, i: int, j: int):
        return self.data.get((i, j), 0)

    def add_entry(self, ring: Ring, i: int, j: int, v) -> None:
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"entry ({i},{j}) outside {self.rows}x{self.cols}")
        new = ring.add(self.data.get((i, j), ring.zero()), v)
        if ring.is_zero(new):
            self.data.pop((i, j), None)
        else:
            self.data[(i, j)] = new

    def mul(self, other: "SparseMat", ring: Ring) -> "SparseMat":
        if self.cols != other.rows:
            raise ValueError("shape mismatch in matrix product")
        by_row: dict[int, list] = {}
        for (i, k), v in self.data.items():
            by_row.setdefault(i, []).append((k, v))
        out = SparseMat(self.rows, other.cols)
        by_k: dict[int, list] = {}
        for (k, j), w in other.data.items():
            by_k.setdefault(k, []).append((j, w))
        for i, row in by_row.items():
            acc: dict[int, object] = {}
            for k, v in row:
                for j, w in by_k.get(k, ()):
                    acc[j] = acc.get(j, ring.zero()) + v * w
            for j, val in acc.items():
                val = ring.normalize(val)
                if not ring.is_zero(val):
                    out.data[(i, j)] = val
        return out

    def add(self, other: "SparseMat", ring: Ring) -> "SparseMat":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch in matrix sum")
        out = SparseMat(self.rows, self.cols, dict(self.data))
        for (i, j), v in other.data.items():
            out.add_entry(ring, i, j, v)
        return out

    def scale(self, c, ring: Ring) -> "SparseMat":
        out = SparseMat(self.rows, self.cols)
        for (i, j), v in self.data.items():
            w = ring.mul(v, c)
            if not ring.is_zero(w):
                out.data[(i, j)] = w
        return out

    def is_zero(self) -> bool:
        return not self.data

    def entries(self) -> list[tuple[int, int, object]]:
        return [(i, j, v) for (i, j), v in sorted(self.data.items())]

    def column(self, j: int) -> dict[int, object]:
        return {i: v for (i, jj), v in self.data.items() if jj == j}

    def to_dense(self) -> list[list]:
        out = [[0] * self.cols for _ in range(self.rows)]
        for (i, j), v in self.data.items():
            out[i][j] = v
        return out

    def equals(self, other: "SparseMat", ring: Ring) -> bool:
        if (self.rows, self.cols) != (other.rows, other.cols):
            return False
        keys = set(self.data) | set(other.data)
        zero = ring.zero()
        return all(
            ring.normalize(self.data.get(k, zero)) == ring.normalize(other.data.get(k, zero))
            for k in keys
        )

    def __repr__(self):  # pragma: no cover
        return f"SparseMat({self.rows}x{self.cols}, {len(self.data)} entries)"


def mat_from_columns(rows: int, columns: list[dict[int, object]], ring: Ring) -> SparseMat:
    out = SparseMat(rows, len(columns))
    for j, col in enumerate(columns):
        for i, v in col.items():
            v = ring.normalize(v)
            if not ring.is_zero(v):
                out.data[(i, j)] = v
    return out


# -- graded modules and complexes ------------------------------------------


@dataclass(frozen=True)
class GradedModule:
    basis: dict  # degree -> tuple of labels

    def __post_init__(self):
        for deg, labels in self.basis.items():
            if len(set(labels)) != len(labels):
                raise ValueError(f"duplicate labels in degree {deg}")

    def dim(self, degree: int) -> int:
        return len(self.basis.get(degree, ()))

    def degrees(self) -> list[int]:
        return sorted(d for d, b in self.basis.items() if b)

    def index(self, degree: int, label) -> int:
        return self.basis[degree].index(label)


class ChainComplex:
    """Chain complex with chosen bases; d[k]: degree k -> degree k-1.

    d squares to zero; this is checked at construction unless deferred.
    """

    def __init__(self, ring: Ring, basis: dict, d: dict, check: bool = True):
        self.ring = ring
        self.module = GradedModule({k: tuple(v) for k, v in basis.items()})
        self.d: dict[int, SparseMat] = {}
        for k, mat in d.items():
            expect = (self.module.dim(k - 1), self.module.dim(k))
            if (mat.rows, mat.cols) != expect:
                raise ValueError(
                    f"d[{k}] has shape {(mat.rows, mat.cols)}, expected {expect}"
                )
            if mat.data:
                self.d[k] = mat
        self._index_cache: dict[int, dict] = {}
        if check:
            report = verify_d_squared(self)
            if report:
                raise ValueError("d^2 != 0: " + report[0])

    def dim(self, degree: int) -> int:
        return self.module.dim(degree)

    def degrees(self) -> list[int]:
        return self.module.degrees()

    def basis_of(self, degree: int) -> tuple:
        return self.module.basis.get(degree, ())

    def index(self, degree: int, label) -> int:
        cache = self._index_cache.get(degree)
        if cache is None:
            cache = {lab: i for i, lab in enumerate(self.basis_of(degree))}
            self._index_cache[degree] = cache
        return cache[label]

    def diff(self, degree: int) -> SparseMat:
        mat = self.d.get(degree)
        if mat is None:
            return SparseMat(self.dim(degree - 1), self.dim(degree))
        return mat

    def total_dim(self) -> int:
        return sum(self.dim(k) for k in self.degrees())


def verify_d_squared(C: ChainComplex) -> list[str]:
    bad = []
    for k in list(C.d):
        prod = C.diff(k - 1).mul(C.diff(k), C.ring)
        if not prod.is_zero():
            i, j, v = prod.entries()[0]
            bad.append(f"(d[{k - 1}] d[{k}])[{i},{j}] = {C.ring.show(v)}")
    return bad


@dataclass
class ChainMap:
    """Map of complexes of a fixed degree offset r: f_k: C_k -> D_{k+r},
    commuting with differentials up to the sign (-1)^r."""

    source: ChainComplex
    target: ChainComplex
    offset: int
    mats: dict = field(default_factory=dict)  # degree k -> SparseMat

    def mat(self, degree: int) -> SparseMat:
        m = self.mats.get(degree)
        if m is None:
            return SparseMat(self.target.dim(degree + self.offset), self.source.dim(degree))
        return m


def verify_chain_map(f: ChainMap) -> list[str]:
    bad = []
    ring = f.source.ring
    if f.target.ring != ring:
        return ["ring mismatch"]
    degrees = set(f.source.degrees()) | set(f.mats)
    sign = ring.normalize(-1 if f.offset % 2 else 1)
    for k in sorted(degrees):
        m = f.mat(k)
        expect = (f.target.dim(k + f.offset), f.source.dim(k))
        if (m.rows, m.cols) != expect:
            bad.append(f"degree {k}: shape {(m.rows, m.cols)} != {expect}")
            continue
        left = f.target.diff(k + f.offset).mul(m, ring)
        right = f.mat(k - 1).mul(f.source.diff(k), ring).scale(sign, ring)
        if not left.equals(right, ring):
            diffm = left.add(right.scale(ring.normalize(-1), ring), ring)
            i, j, v = diffm.entries()[0]
            bad.append(f"degree {k}: violation at ({i},{j}) = {ring.show(v)}")
    return bad


def compose_chain_maps(f: ChainMap, g: ChainMap) -> ChainMap:
    """g after f."""
    if f.target is not g.source:
        raise ValueError("chain maps not composable")
    mats = {}
    for k in f.source.degrees():
        mats[k] = g.mat(k + f.offset).mul(f.mat(k), f.source.ring)
    return ChainMap(f.source, g.target, f.offset + g.offset, mats)


def identity_chain_map(C: ChainComplex) -> ChainMap:
    mats = {k: SparseMat.identity(C.dim(k), C.ring) for k in C.degrees()}
    return ChainMap(C, C, 0, mats)


# -- constructions -----------------------------------------------------------


def shift_complex(C: ChainComplex, r: int) -> ChainComplex:
    """Degree shift: new degree i holds the old degree i - r; the
    differential picks up the sign (-1)^r."""
    basis = {k + r: labels for k, labels in C.module.basis.items()}
    sign = C.ring.normalize(-1 if r % 2 else 1)
    d = {k + r: mat.scale(sign, C.ring) for k, mat in C.d.items()}
    return ChainComplex(C.ring, basis, d, check=False)


def tensor_complexes(C: ChainComplex, D: ChainComplex) -> ChainComplex:
    """Tensor product with the Koszul rule d(c x d) = dc x d + (-1)^|c| c x dd.

    Basis labels are pairs (c_label, d_label); within a total degree the
    pairs are ordered by increasing C-degree, then C-index, then D-index.
    """
    if C.ring != D.ring:
        raise ValueError("ring mismatch in tensor product")
    ring = C.ring
    basis: dict[int, list] = {}
    info: dict[int, list] = {}  # degree -> [(a, jc, b, jd)] parallel to basis
    # labels may repeat across degrees, so positions are located by
    # (bidegree, index) rather than by label
    locate: dict[tuple[int, int, int, int], tuple[int, int]] = {}
    c_degs = C.degrees()
    d_degs = D.degrees()
    for a in c_degs:
        for b in d_degs:
            n = a + b
            lst = basis.setdefault(n, [])
            meta = info.setdefault(n, [])
            for jc, c_lab in enumerate(C.basis_of(a)):
                for jd, d_lab in enumerate(D.basis_of(b)):
                    locate[(a, jc, b, jd)] = (n, len(lst))
                    lst.append((c_lab, d_lab))
                    meta.append((a, jc, b, jd))
    d_mats: dict[int, SparseMat] = {}
    for n, labels in basis.items():
        rows = len(basis.get(n - 1, []))
        mat = SparseMat(rows, len(labels))
        for j, (a, jc, b, jd) in enumerate(info[n]):
            for i, v in C.diff(a).column(jc).items():
                _, row = locate[(a - 1, i, b, jd)]
                mat.add_entry(ring, row, j, v)
            sgn = ring.normalize(-1 if a % 2 else 1)
            for i, v in D.diff(b).column(jd).items():
                _, row = locate[(a, jc, b - 1, i)]
                mat.add_entry(ring, row, j, ring.mul(sgn, v))
        if mat.data:
            d_mats[n] = mat
    return ChainComplex(ring, basis, d_mats, check=False)


# -- koszul helpers -----------------------------------------------------------


def koszul_sign_permute(perm: tuple[int, ...], degrees: tuple[int, ...]) -> int:
    """Sign for reordering graded symbols: symbol at old position t moves
    to new position perm[t]; each transposition of odd-degree symbols
    contributes -1."""
    sign = 1
    n = len(perm)
    for s in range(n):
        for t in range(s + 1, n):
            if perm[s] > perm[t] and degrees[s] % 2 and degrees[t] % 2:
                sign = -sign
    return sign


def koszul_sign_block_move(deg_moved: int, degs_jumped: int) -> int:
    """Sign for moving one symbol of degree deg_moved past a block of total
    degree degs_jumped."""
    return -1 if (deg_moved % 2) and (degs_jumped % 2) else 1


# -- smith normal form ---------------------------------------------------------


def smith_normal_form(A: list[list[int]]) -> tuple[list[list[int]], list[list[int]], list[list[int]]]:
    """Return (U, D, V) with U*A*V = D diagonal, invariant factors in a
    divisibility chain.  U and V are products of elementary unimodular
    operations.  The factorization is re-multiplied and compared exactly
    before returning; an inconsistency raises.
    """
    m = len(A)
    n = len(A[0]) if m else 0
    D = [list(map(int, row)) for row in A]
    if any(len(row) != n for row in D):
        raise ValueError("ragged matrix")
    U = [[int(i == j) for j in range(m)] for i in range(m)]
    V = [[int(i == j) for j in range(n)] for i in range(n)]

    def row_sub(dst: int, src: int, q: int) -> None:
        if q:
            D[dst] = [a - q * b for a, b in zip(D[dst], D[src])]
            U[dst] = [a - q * b for a, b in zip(U[dst], U[src])]

    def col_sub(dst: int, src: int, q: int) -> None:
        if q:
            for row in D:
                row[dst] -= q * row[src]
            for row in V:
                row[dst] -= q * row[src]

    def row_swap(a: int, b: int) -> None:
        if a != b:
            D[a], D[b] = D[b], D[a]
            U[a], U[b] = U[b], U[a]

    def col_swap(a: int, b: int) -> None:
        if a != b:
            for row in D:
                row[a], row[b] = row[b], row[a]
            for row in V:
                row[a], row[b] = row[b], row[a]

    t = 0
    while t < min(m, n):
        # minimal nonzero pivot in the remaining block
        pivot = None
        best = None
        for i in range(t, m):
            for j in range(t, n):
                v = abs(D[i][j])
                if v and (best is None or v < best):
                    best = v
                    pivot = (i, j)
        if pivot is None:
            break
        row_swap(t, pivot[0])
        col_swap(t, pivot[1])
        while True:
            # clear the column below the pivot
            dirty = False
            for i in range(t + 1, m):
                if D[i][t]:
                    q = D[i][t] // D[t][t]
                    row_sub(i, t, q)
                    if D[i][t]:
                        row_swap(t, i)  # remainder is smaller, promote it
                        dirty = True
            if dirty:
                continue
            for j in range(t + 1, n):
                if D[t][j]:
                    q = D[t][j] // D[t][t]
                    col_sub(j, t, q)
                    if D[t][j]:
                        col_swap(t, j)
                        dirty = True
            if dirty:
                continue
            # divisibility of the remaining block by the pivot
            offender = None
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if D[i][j] % D[t][t]:
                        offender = i
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            D[t] = [a + b for a, b in zip(D[t], D[offender])]
            U[t] = [a + b for a, b in zip(U[t], U[offender])]
        if D[t][t] < 0:
            D[t] = [-a for a in D[t]]
            U[t] = [-a for a in U[t]]
        t += 1

    # self-check: exact re-multiplication
    UA = [[sum(U[i][k] * A[k][j] for k in range(m)) for j in range(n)] for i in range(m)]
    UAV = [[sum(UA[i][k] * V[k][j] for k in range(n)) for j in range(n)] for i in range(m)]
    if UAV != D:
        raise ArithmeticError("smith normal form self-check failed")
    for i in range(min(m, n) - 1):
        a, b = D[i][i], D[i + 1][i + 1]
        if b and (a == 0 or b % a):
            raise ArithmeticError("invariant factors not in a divisibility chain")
    return U, D, V


def invariant_factors(A: list[list[int]]) -> list[int]:
    _, D, _ = smith_normal_form(A)
    out = []
    for i in range(min(len(D), len(D[0]) if D else 0)):
        if D[i][i]:
            out.append(D[i][i])
    return out


def rank_over_field(A: list[list], ring: Ring) -> int:
    """Gaussian elimination rank; exact over Q and Fp (Z ranks via Q)."""
    if not A or not A[0]:
        return 0
    m, n = len(A), len(A[0])
    if ring.tag == "Fp":
        M = [[v % ring.p for v in row] for row in A]
    else:
        M = [[Fraction(v) for v in row] for row in A]
    rank = 0
    row = 0
    for col in range(n):
        piv = None
        for i in range(row, m):
            if M[i][col]:
                piv = i
                break
        if piv is None:
            continue
        M[row], M[piv] = M[piv], M[row]
        inv = pow(int(M[row][col]), -1, ring.p) if ring.tag == "Fp" else 1 / M[row][col]
        for i in range(row + 1, m):
            if M[i][col]:
                factor = (M[i][col] * inv) % ring.p if ring.tag == "Fp" else M[i][col] * inv
                if ring.tag == "Fp":
                    M[i] = [(a - factor * b) % ring.p for a, b in zip(M[i], M[row])]
                else:
                    M[i] = [a - factor * b for a, b in zip(M[i], M[row])]
        rank += 1
        row += 1
        if row == m:
            break
    return rank


# -- homology -------------------------------------------------------------------


@dataclass(frozen=True)
class HomologyReport:
    ring_name: str
    by_degree: dict  # degree -> (free_rank, tuple of torsion factors > 1)

    def free_rank(self, degree: int) -> int:
        return self.by_degree.get(degree, (0, ()))[0]

    def torsion(self, degree: int) -> tuple:
        return self.by_degree.get(degree, (0, ()))[1]

    def nonzero_degrees(self) -> list[int]:
        return sorted(
            deg for deg, (r, tor) in self.by_degree.items() if r or tor
        )


def homology(C: ChainComplex) -> HomologyReport:
    report = verify_d_squared(C)
    if report:
        raise ValueError("cannot take homology, d^2 != 0: " + report[0])
    ring = C.ring
    degs = C.degrees()
    if not degs:
        return HomologyReport(ring.name(), {})
    lo, hi = min(degs), max(degs)
    out = {}
    for k in range(lo, hi + 1):
        dim = C.dim(k)
        if dim == 0:
            continue
        dk = C.diff(k).to_dense()
        dk1 = C.diff(k + 1).to_dense()
        if ring.tag == "Z":
            rk = rank_over_field(dk, QQ) if dk and dk[0] else 0
            facs = invariant_factors(dk1) if dk1 and dk1[0] else []
            rk1 = len(facs)
            torsion = tuple(f for f in facs if f not in (0, 1))
            free = dim - rk - rk1
            out[k] = (free, torsion)
        else:
            rk = rank_over_field(dk, ring) if dk and dk[0] else 0
            rk1 = rank_over_field(dk1, ring) if dk1 and dk1[0] else 0
            out[k] = (dim - rk - rk1, ())
    return HomologyReport(ring.name(), out)


# -- serialization ----------------------------------------------------------------


def complex_to_json(C: ChainComplex, label_str=str) -> dict:
    basis = {
        str(k): [label_str(lab) for lab in C.basis_of(k)] for k in C.degrees()
    }
    d = {}
    for k in sorted(C.d):
        d[str(k)] = [[i, j, C.ring.show(v)] for i, j, v in C.d[k].entries()]
    return {"ring": C.ring.name(), "basis": basis, "d": d}


def complex_from_json(data: dict) -> ChainComplex:
    ring = ring_from_name(data["ring"])
    basis = {int(k): tuple(v) for k, v in data["basis"].items()}
    d = {}
    for k, triples in data.get("d", {}).items():
        k = int(k)
        mat = SparseMat(len(basis.get(k - 1, ())), len(basis.get(k, ())))
        for i, j, entry in triples:
            mat.add_entry(ring, int(i), int(j), ring.parse(entry))
        d[k] = mat
    return ChainComplex(ring, basis, d)
