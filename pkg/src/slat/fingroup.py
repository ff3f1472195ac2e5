"""Exact operator spans over finite abelian groups.

Every subgroup carries counting measure, so L^2 of a subgroup is just C^n and
every operator is a matrix. A span is stored as an orthonormal basis (in the
Frobenius inner product) of matrices of a fixed shape, and two spans are
compared by numerical rank of the stacked vectorizations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .semilattice import Semilattice

RANK_TOL = 1e-9
# products with more entries than this are sampled instead of enumerated
EXACT_PRODUCT_LIMIT = 8_000_000
SKETCH_SEED = 20240611


class SpanMismatch(AssertionError):
    """Two constructions of the same span disagree."""


class FinAbGroup:
    """Product of cyclic groups Z_n1 x ... x Z_nk; elements in lexicographic order."""

    def __init__(self, cyclic_orders: Sequence[int]):
        orders = tuple(int(n) for n in cyclic_orders)
        if not orders or any(n < 1 for n in orders):
            raise ValueError(f"bad cyclic orders {cyclic_orders!r}")
        self.cyclic_orders = orders
        self.elements = list(itertools.product(*(range(n) for n in orders)))
        self.index = {e: i for i, e in enumerate(self.elements)}
        arr = np.array(self.elements, dtype=int).reshape(len(self.elements), len(orders))
        mod = np.array(orders)
        s = (arr[:, None, :] + arr[None, :, :]) % mod
        d = (arr[:, None, :] - arr[None, :, :]) % mod
        radix = np.cumprod((1,) + orders[:0:-1])[::-1]
        self.add_table = s @ radix
        self.sub_table = d @ radix
        self.neg = ((-arr) % mod) @ radix
        self._subgroups = None

    @property
    def order(self) -> int:
        return len(self.elements)

    def __eq__(self, other):
        return isinstance(other, FinAbGroup) and self.cyclic_orders == other.cyclic_orders

    def __hash__(self):
        return hash(self.cyclic_orders)

    def __repr__(self):
        return "x".join(f"Z{n}" for n in self.cyclic_orders)

    def zero(self) -> int:
        return 0

    def subgroup(self, generators: Iterable[Sequence[int]]) -> "Subgroup":
        """Subgroup generated by the given elements (tuples of residues)."""
        gens = []
        for g in generators:
            g = tuple(int(c) % n for c, n in zip(g, self.cyclic_orders))
            if len(g) != len(self.cyclic_orders):
                raise ValueError(f"generator {g} has wrong length")
            gens.append(self.index[g])
        return Subgroup(self, self._closure({0}, gens))

    def _closure(self, start: set, gens: Iterable[int]) -> frozenset:
        members = set(start) | {0}
        frontier = list(members)
        gens = list(gens)
        for g in gens:
            if g not in members:
                members.add(g)
                frontier.append(g)
        while frontier:
            a = frontier.pop()
            for g in list(members):
                c = int(self.add_table[a, g])
                if c not in members:
                    members.add(c)
                    frontier.append(c)
        return frozenset(members)

    def trivial(self) -> "Subgroup":
        return Subgroup(self, frozenset({0}))

    def whole(self) -> "Subgroup":
        return Subgroup(self, frozenset(range(self.order)))

    def all_subgroups(self) -> list["Subgroup"]:
        """Every subgroup, sorted by (order, members)."""
        if self._subgroups is None:
            found = {Subgroup(self, self._closure({0}, [g])) for g in range(self.order)}
            while True:
                new = {a + b for a in found for b in found} - found
                if not new:
                    break
                found |= new
            self._subgroups = sorted(found, key=lambda h: (h.order, h.members))
        return list(self._subgroups)


@dataclass(frozen=True)
class Subgroup:
    parent: FinAbGroup
    members_set: frozenset

    @classmethod
    def _trusted(cls, parent: FinAbGroup, members: frozenset) -> "Subgroup":
        """Skip the closure scan for sets already known to be subgroups."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "parent", parent)
        object.__setattr__(obj, "members_set", members)
        return obj

    def __post_init__(self):
        p = self.parent
        m = self.members_set
        if 0 not in m:
            raise ValueError("subgroup must contain the identity")
        for a in m:
            if int(p.neg[a]) not in m:
                raise ValueError("subgroup not closed under negation")
            for b in m:
                if int(p.add_table[a, b]) not in m:
                    raise ValueError("subgroup not closed under addition")

    @cached_property
    def members(self) -> tuple[int, ...]:
        return tuple(sorted(self.members_set))

    @cached_property
    def position(self) -> dict[int, int]:
        return {g: i for i, g in enumerate(self.members)}

    @property
    def order(self) -> int:
        return len(self.members_set)

    def elements(self) -> list[tuple]:
        return [self.parent.elements[g] for g in self.members]

    def _same_parent(self, other: "Subgroup"):
        if self.parent != other.parent:
            raise ValueError("subgroups of different groups")

    def __le__(self, other: "Subgroup") -> bool:
        self._same_parent(other)
        return self.members_set <= other.members_set

    def __lt__(self, other: "Subgroup") -> bool:
        return self <= other and self != other

    def __and__(self, other: "Subgroup") -> "Subgroup":
        self._same_parent(other)
        return Subgroup._trusted(self.parent, self.members_set & other.members_set)

    def __add__(self, other: "Subgroup") -> "Subgroup":
        return group_sum(self, other)

    def __hash__(self):
        return hash((self.parent, self.members_set))

    def __eq__(self, other):
        return (isinstance(other, Subgroup) and self.parent == other.parent
                and self.members_set == other.members_set)

    def __repr__(self):
        return f"Subgroup({self.parent!r}, order={self.order}, {self.elements()})"

    def label(self) -> str:
        gens = self.elements()
        if len(gens) > 6:
            return f"<order {self.order}: {gens[1]},...>"
        return "{" + ",".join("".join(map(str, e)) for e in gens) + "}"

    def coset_labels(self, sub: "Subgroup") -> np.ndarray:
        """For each member a of self, an integer naming the coset a + (self & sub)."""
        inner = (self & sub).members
        add = self.parent.add_table
        rep = {}
        labels = np.empty(self.order, dtype=int)
        for i, a in enumerate(self.members):
            key = min(int(add[a, t]) for t in inner)
            labels[i] = rep.setdefault(key, len(rep))
        return labels


def group_sum(x: Subgroup, y: Subgroup) -> Subgroup:
    x._same_parent(y)
    p = x.parent
    sums = {int(p.add_table[a, b]) for a in x.members for b in y.members}
    return Subgroup._trusted(p, frozenset(sums))


# spans


@dataclass(frozen=True)
class OperatorSpan:
    """Orthonormal basis, shape (rank, m, n), of a space of m x n matrices.

    ``rows`` and ``cols`` optionally name the spaces the matrices map between.
    """

    basis: np.ndarray
    shape: tuple[int, int]
    rows: object = None
    cols: object = None

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def vectors(self) -> np.ndarray:
        m, n = self.shape
        return self.basis.reshape(self.dim, m * n)

    def adjoint(self) -> "OperatorSpan":
        b = np.conj(np.swapaxes(self.basis, 1, 2))
        return OperatorSpan(np.ascontiguousarray(b), (self.shape[1], self.shape[0]),
                            self.cols, self.rows)

    def contains_matrix(self, mat: np.ndarray, tol: float = 1e-8) -> bool:
        v = np.asarray(mat).reshape(-1)
        nv = np.linalg.norm(v)
        if nv == 0:
            return True
        coef = np.conj(self.vectors) @ v
        return np.linalg.norm(v - self.vectors.T @ coef) <= tol * nv


def orthonormal_rows(vecs: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the row space; rank counts singular values > tol * max."""
    vecs = np.asarray(vecs)
    if vecs.shape[0] == 0:
        return vecs[:0]
    norms = np.linalg.norm(vecs, axis=1)
    if norms.max() == 0:
        return vecs[:0]
    # rows with pairwise disjoint supports are already orthogonal
    nz = vecs != 0
    if nz.sum(axis=0).max() <= 1:
        keep = norms > tol * norms.max()
        return vecs[keep] / norms[keep, None]
    _, s, vh = np.linalg.svd(vecs, full_matrices=False)
    r = int(np.sum(s > tol * s[0]))
    return vh[:r]


def span_of(mats: Iterable[np.ndarray], shape: tuple[int, int] | None = None,
            rows=None, cols=None) -> OperatorSpan:
    mats = [np.asarray(m) for m in mats]
    if shape is None:
        if not mats:
            raise ValueError("empty span needs an explicit shape")
        shape = mats[0].shape
    m, n = shape
    for a in mats:
        if a.shape != (m, n):
            raise ValueError(f"matrix of shape {a.shape} in a span of shape {shape}")
    dtype = np.result_type(np.float64, *mats) if mats else np.float64
    stacked = np.array(mats, dtype=dtype).reshape(len(mats), m * n)
    q = orthonormal_rows(stacked)
    return OperatorSpan(q.reshape(q.shape[0], m, n), (m, n), rows, cols)


def span_union(*spans: OperatorSpan) -> OperatorSpan:
    shape = spans[0].shape
    for s in spans:
        if s.shape != shape:
            raise ValueError(f"shape mismatch {s.shape} vs {shape}")
    stacked = np.concatenate([s.vectors for s in spans], axis=0)
    q = orthonormal_rows(stacked)
    return OperatorSpan(q.reshape(q.shape[0], *shape), shape, spans[0].rows, spans[0].cols)


def span_mul(a: OperatorSpan, b: OperatorSpan) -> OperatorSpan:
    """Span of all products A @ B with A in a, B in b.

    Small cases enumerate every pairwise product of basis elements. Larger
    ones multiply random combinations instead: products of generic elements
    span the same space with probability one, since the image of a bilinear
    map is spanned by the image of any Zariski-dense set of pairs.
    """
    m, k = a.shape
    k2, n = b.shape
    if k != k2:
        raise ValueError(f"cannot multiply spans of shapes {a.shape} and {b.shape}")
    if a.dim == 0 or b.dim == 0:
        dtype = np.result_type(a.basis, b.basis)
        return OperatorSpan(np.zeros((0, m, n), dtype=dtype), (m, n), a.rows, b.cols)
    if a.dim * b.dim * m * n <= EXACT_PRODUCT_LIMIT:
        prods = np.einsum("imk,jkn->ijmn", a.basis, b.basis, optimize=True)
        vecs = prods.reshape(a.dim * b.dim, m * n)
    else:
        vecs = _sketch_products(a, b)
    q = orthonormal_rows(vecs)
    return OperatorSpan(q.reshape(q.shape[0], m, n), (m, n), a.rows, b.cols)


def _sketch_products(a: OperatorSpan, b: OperatorSpan) -> np.ndarray:
    m, _ = a.shape
    _, n = b.shape
    rng = np.random.default_rng(SKETCH_SEED)
    samples = min(a.dim * b.dim, m * n) + 16
    complex_ = np.iscomplexobj(a.basis) or np.iscomplexobj(b.basis)

    def coeffs(r):
        c = rng.standard_normal((samples, r))
        if complex_:
            c = c + 1j * rng.standard_normal((samples, r))
        return c

    out = []
    chunk = max(1, min(samples, 4_000_000 // max(1, m * n)))
    ca, cb = coeffs(a.dim), coeffs(b.dim)
    for s0 in range(0, samples, chunk):
        sa = np.tensordot(ca[s0:s0 + chunk], a.basis, axes=(1, 0))
        sb = np.tensordot(cb[s0:s0 + chunk], b.basis, axes=(1, 0))
        out.append(np.matmul(sa, sb).reshape(-1, m * n))
    return np.concatenate(out, axis=0)


@dataclass
class SpanComparison:
    equal: bool
    rank_a: int
    rank_b: int
    rank_union: int

    @property
    def ranks(self) -> tuple[int, int, int]:
        return (self.rank_a, self.rank_b, self.rank_union)

    def __bool__(self):
        return self.equal


def _union_rank(a: OperatorSpan, b: OperatorSpan) -> int:
    if a.dim == 0:
        return b.dim
    if b.dim == 0:
        return a.dim
    va, vb = a.vectors, b.vectors
    resid = vb - (vb @ np.conj(va).T) @ va
    if not np.any(resid):
        return a.dim
    s = np.linalg.svd(resid, compute_uv=False)
    return a.dim + int(np.sum(s > RANK_TOL))


def span_eq(a: OperatorSpan, b: OperatorSpan) -> SpanComparison:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    u = _union_rank(a, b)
    return SpanComparison(a.dim == b.dim == u, a.dim, b.dim, u)


def span_contains(big: OperatorSpan, small: OperatorSpan) -> SpanComparison:
    """Whether small is a subspace of big; equal flag means containment here."""
    if big.shape != small.shape:
        raise ValueError(f"shape mismatch {big.shape} vs {small.shape}")
    u = _union_rank(big, small)
    return SpanComparison(u == big.dim, big.dim, small.dim, u)


# kernels and the basic spans


@dataclass(frozen=True)
class KernelOp:
    rows: Subgroup
    cols: Subgroup
    entries: np.ndarray

    def adjoint(self) -> "KernelOp":
        return KernelOp(self.cols, self.rows, np.conj(self.entries.T))

    def __matmul__(self, other: "KernelOp") -> "KernelOp":
        return KernelOp(self.rows, other.cols, self.entries @ other.entries)


def _as_group_function(phi, g: FinAbGroup) -> np.ndarray:
    if callable(phi):
        return np.array([phi(e) for e in g.elements])
    arr = np.asarray(phi)
    if arr.shape != (g.order,):
        raise ValueError(f"function on {g!r} needs {g.order} values")
    return arr


def txy(phi, x: Subgroup, y: Subgroup) -> KernelOp:
    """Kernel operator L^2(y) -> L^2(x) with entries phi(a - b)."""
    x._same_parent(y)
    f = _as_group_function(phi, x.parent)
    diff = x.parent.sub_table[np.ix_(x.members, y.members)]
    return KernelOp(x, y, f[diff])


def _delta(g: FinAbGroup, at: int) -> np.ndarray:
    d = np.zeros(g.order)
    d[at] = 1.0
    return d


def span_TXY(x: Subgroup, y: Subgroup) -> OperatorSpan:
    diff = x.parent.sub_table[np.ix_(x.members, y.members)]
    gens = group_sum(x, y).members
    mats = [(diff == g).astype(float) for g in gens]
    return span_of(mats, (x.order, y.order), x, y)


def span_CXY_funcs(x: Subgroup, y: Subgroup) -> OperatorSpan:
    """Diagonal operators on L^2(x) constant on cosets of x & y."""
    labels = x.coset_labels(y)
    mats = [np.diag((labels == c).astype(float)) for c in range(labels.max() + 1)]
    return span_of(mats, (x.order, x.order), x, x)


def _check_sub(small: Subgroup, big: Subgroup, what: str):
    if not small <= big:
        raise ValueError(f"{what}: {small.label()} is not contained in {big.label()}")


def _crossed_by_products(x: Subgroup, y: Subgroup) -> OperatorSpan:
    labels = x.coset_labels(y)
    diff = x.parent.sub_table[np.ix_(x.members, x.members)]
    mats = []
    for c in range(labels.max() + 1):
        rowmask = (labels == c)[:, None]
        for g in x.members:
            mats.append(((diff == g) & rowmask).astype(float))
    return span_of(mats, (x.order, x.order), x, x)


def _crossed_by_orbits(x: Subgroup, y: Subgroup) -> OperatorSpan:
    """Kernels on x * x invariant under the diagonal shift (a, b) -> (a + t, b + t), t in y."""
    add = x.parent.add_table
    pos = x.position
    n = x.order
    orbit = -np.ones((n, n), dtype=int)
    count = 0
    for i, j in itertools.product(range(n), repeat=2):
        if orbit[i, j] >= 0:
            continue
        a, b = x.members[i], x.members[j]
        for t in y.members:
            orbit[pos[int(add[a, t])], pos[int(add[b, t])]] = count
        count += 1
    mats = [(orbit == k).astype(float) for k in range(count)]
    return span_of(mats, (n, n), x, x)


def span_crossed(x: Subgroup, y: Subgroup) -> OperatorSpan:
    """Crossed product of y-periodic functions on x with convolutions on x.

    Built as products (coset indicator) x (translation) and independently as
    the kernels invariant under the diagonal y action; the two must agree.
    """
    _check_sub(y, x, "crossed product")
    prod = _crossed_by_products(x, y)
    orb = _crossed_by_orbits(x, y)
    cmp = span_eq(prod, orb)
    if not cmp:
        raise SpanMismatch(f"crossed product constructions disagree, ranks {cmp.ranks}")
    return prod


def span_CXYZ(x: Subgroup, y: Subgroup, z: Subgroup) -> OperatorSpan:
    """Graded component of the x-y kernels with grade z (z inside x & y).

    Right construction T_xy * C_y(z), checked against the left one C_x(z) * T_xy.
    """
    _check_sub(z, x & y, "graded component")
    diff = x.parent.sub_table[np.ix_(x.members, y.members)]
    gens = group_sum(x, y).members
    ylab = y.coset_labels(z)
    xlab = x.coset_labels(z)
    right, left = [], []
    for g in gens:
        t = diff == g
        for c in range(ylab.max() + 1):
            right.append((t & (ylab == c)[None, :]).astype(float))
        for c in range(xlab.max() + 1):
            left.append((t & (xlab == c)[:, None]).astype(float))
    rs = span_of(right, (x.order, y.order), x, y)
    ls = span_of(left, (x.order, y.order), x, y)
    cmp = span_eq(rs, ls)
    if not cmp:
        raise SpanMismatch(f"left and right graded components disagree, ranks {cmp.ranks}")
    return rs


def span_CXYZ_orbits(x: Subgroup, y: Subgroup, z: Subgroup) -> OperatorSpan:
    """Kernels on x * y constant on orbits of the diagonal z action. Test oracle."""
    _check_sub(z, x & y, "graded component")
    add = x.parent.add_table
    px, py = x.position, y.position
    orbit = -np.ones((x.order, y.order), dtype=int)
    count = 0
    for i, j in itertools.product(range(x.order), range(y.order)):
        if orbit[i, j] >= 0:
            continue
        a, b = x.members[i], y.members[j]
        for t in z.members:
            orbit[px[int(add[a, t])], py[int(add[b, t])]] = count
        count += 1
    return span_of([(orbit == k).astype(float) for k in range(count)], (x.order, y.order), x, y)


def find_splitting(x: Subgroup, y: Subgroup) -> Subgroup | None:
    """A complement c of y in x (x = c + y, c & y = 0), or None."""
    if not y <= x:
        return None
    want = x.order // y.order
    for c in x.parent.all_subgroups():
        if c.order == want and c <= x and (c & y).order == 1:
            return c
    return None


def field_op(theta, x: Subgroup, y: Subgroup, splitting: Subgroup) -> KernelOp:
    """Creation map u -> theta (x) u from L^2(y) to L^2(x) = L^2(splitting) (x) L^2(y)."""
    if not (splitting <= x and y <= x and (splitting & y).order == 1
            and splitting.order * y.order == x.order):
        raise ValueError(f"{splitting.label()} does not split {x.label()} over {y.label()}")
    theta = np.asarray(theta)
    if theta.shape != (splitting.order,):
        raise ValueError(f"theta needs {splitting.order} values")
    add = x.parent.add_table
    pos = x.position
    mat = np.zeros((x.order, y.order), dtype=np.result_type(theta, np.float64))
    for k, c in enumerate(splitting.members):
        for j, b in enumerate(y.members):
            mat[pos[int(add[c, b])], j] = theta[k]
    return KernelOp(x, y, mat)


def span_Phi(x: Subgroup, y: Subgroup, splitting: Subgroup) -> OperatorSpan:
    mats = [field_op(_unit(splitting.order, k), x, y, splitting).entries
            for k in range(splitting.order)]
    return span_of(mats, (x.order, y.order), x, y)


def _unit(n, k):
    e = np.zeros(n)
    e[k] = 1.0
    return e


# closure under products and adjoints


def generated_algebra(seeds: Sequence[np.ndarray], max_rounds: int = 50) -> OperatorSpan:
    seeds = [np.asarray(s) for s in seeds]
    n = seeds[0].shape[0]
    cur = span_of(seeds + [np.conj(s.T) for s in seeds], (n, n))
    for _ in range(max_rounds):
        nxt = span_union(cur, span_mul(cur, cur), cur.adjoint())
        if nxt.dim == cur.dim:
            return nxt
        cur = nxt
    raise RuntimeError("generated algebra did not stabilize")


# assembled algebra over a semilattice of subgroups


@dataclass
class AssembledAlgebra:
    lattice: Semilattice
    binding: dict[str, Subgroup]
    order: list[str]
    offsets: dict[str, int]
    blocks: dict[tuple[str, str], OperatorSpan]
    components: dict[str, OperatorSpan]
    total: OperatorSpan

    @property
    def size(self) -> int:
        return sum(self.binding[x].order for x in self.order)

    def embed(self, x: str, y: str, mat: np.ndarray) -> np.ndarray:
        out = np.zeros((self.size, self.size), dtype=np.result_type(mat, np.float64))
        i, j = self.offsets[x], self.offsets[y]
        out[i:i + mat.shape[0], j:j + mat.shape[1]] = mat
        return out

    def block_view(self, mat: np.ndarray, x: str, y: str) -> np.ndarray:
        i, j = self.offsets[x], self.offsets[y]
        return mat[i:i + self.binding[x].order, j:j + self.binding[y].order]


def check_binding(s: Semilattice, binding: dict[str, Subgroup]):
    for x in s.elements:
        if x not in binding:
            raise ValueError(f"element {x} is not bound to a subgroup")
    for a, b in itertools.product(s.elements, repeat=2):
        if binding[s.meet(a, b)] != binding[a] & binding[b]:
            raise ValueError(f"meet({a}, {b}) = {s.meet(a, b)} but the subgroups intersect differently")


def assemble_C(s: Semilattice, binding: dict[str, Subgroup]) -> AssembledAlgebra:
    check_binding(s, binding)
    order = list(s.elements)
    offsets, pos = {}, 0
    for x in order:
        offsets[x] = pos
        pos += binding[x].order
    size = pos

    def embed(x, y, basis):
        out = np.zeros((basis.shape[0], size, size), dtype=basis.dtype)
        i, j = offsets[x], offsets[y]
        out[:, i:i + basis.shape[1], j:j + basis.shape[2]] = basis
        return out

    blocks = {}
    comp_parts = {z: [] for z in order}
    for x, y in itertools.product(order, repeat=2):
        parts = []
        for z in order:
            if s.leq(z, x) and s.leq(z, y):
                sp = span_CXYZ(binding[x], binding[y], binding[z])
                parts.append(sp)
                comp_parts[z].append(embed(x, y, sp.basis))
        blocks[(x, y)] = span_union(*parts)
    all_parts = [embed(x, y, sp.basis) for (x, y), sp in blocks.items()]
    total = span_of(list(np.concatenate(all_parts)), (size, size))
    components = {z: span_of(list(np.concatenate(p)), (size, size)) for z, p in comp_parts.items()}
    return AssembledAlgebra(s, dict(binding), order, offsets, blocks, components, total)


def product_law(alg: AssembledAlgebra) -> list[tuple[str, str, SpanComparison]]:
    """C(E) C(F) inside C(E meet F) for every pair of grades."""
    s = alg.lattice
    out = []
    for e, f in itertools.product(alg.order, repeat=2):
        prod = span_mul(alg.components[e], alg.components[f])
        out.append((e, f, span_contains(alg.components[s.meet(e, f)], prod)))
    return out


def grading_overlap(alg: AssembledAlgebra) -> dict:
    """Sum of component dimensions against the dimension of their sum.

    On finite groups the components overlap (a coarser grade is contained in
    a finer one), so the excess is expected to be positive; it is reported.
    """
    dims = {z: sp.dim for z, sp in alg.components.items()}
    return {"component_dims": dims, "sum_of_dims": sum(dims.values()),
            "dim_of_sum": alg.total.dim, "excess": sum(dims.values()) - alg.total.dim}


# Pauli-Fierz generation check


def character(g: FinAbGroup, k: int) -> np.ndarray:
    """Character e^{2 pi i <k, a>} of the group as a vector over its elements."""
    ks = np.array(g.elements[k], dtype=float)
    arr = np.array(g.elements, dtype=float).reshape(g.order, -1)
    phase = (arr * ks / np.array(g.cyclic_orders)).sum(axis=1)
    return np.exp(2j * np.pi * phase)


def group_laplacian(x: Subgroup) -> np.ndarray:
    """sum over generators t of (2 - shift_t - shift_-t), a convolution on x.

    Generators are the unit vectors of the parent intersected with x plus a
    minimal generating set found greedily, so the operator only depends on x.
    """
    gens = _generators(x)
    add = x.parent.add_table
    neg = x.parent.neg
    pos = x.position
    n = x.order
    lap = np.zeros((n, n))
    for t in gens:
        for i, a in enumerate(x.members):
            lap[i, i] += 2.0
            lap[pos[int(add[a, t])], i] -= 1.0
            lap[pos[int(add[a, int(neg[t])])], i] -= 1.0
    return lap


def _generators(x: Subgroup) -> list[int]:
    gens, cur = [], x.parent.trivial()
    for a in x.members:
        if a not in cur.members_set:
            gens.append(a)
            cur = Subgroup._trusted(x.parent, x.parent._closure(cur.members_set, [a]))
    return gens


@dataclass
class GenerationResult:
    generated: OperatorSpan
    assembled: AssembledAlgebra
    comparison: SpanComparison
    field_pairs: list[tuple[str, str]]
    skipped_pairs: list[tuple[str, str]] = field(default_factory=list)
    n_seeds: int = 0


def pauli_fierz_generation(s: Semilattice, binding: dict[str, Subgroup],
                           couplings=(0.0, 1.0, -1.0)) -> GenerationResult:
    """Algebra generated by resolvents (i - K_k - c phi)^-1, compared with the assembled span.

    K_k is the block-diagonal kinetic operator, each block a scaled group
    Laplacian conjugated by a character of the parent group (momentum shift k).
    phi runs over symmetric field operators a*(e_j) + a(e_j) for every
    comparable pair with a complement; pairs without one carry no field.
    """
    alg = assemble_C(s, binding)
    g = next(iter(binding.values())).parent
    n = alg.size
    order = alg.order
    # distinct scales keep blocks with the same subgroup order distinguishable
    scales = {x: 1.0 + 0.37 * i for i, x in enumerate(order)}

    pairs, skipped = [], []
    fields = []
    for x, y in itertools.product(order, repeat=2):
        if x == y or not s.lt(y, x):
            continue
        split = find_splitting(binding[x], binding[y])
        if split is None:
            skipped.append((x, y))
            continue
        pairs.append((x, y))
        for k in range(split.order):
            a = field_op(_unit(split.order, k), binding[x], binding[y], split).entries
            f = alg.embed(x, y, a)
            fields.append(f + f.T)

    seeds = []
    for k in range(g.order):
        chi = character(g, k)
        kin = np.zeros((n, n), dtype=complex)
        for x in order:
            sub = binding[x]
            v = np.diag(chi[list(sub.members)])
            h = scales[x] * group_laplacian(sub)
            i = alg.offsets[x]
            kin[i:i + sub.order, i:i + sub.order] = np.conj(v.T) @ h @ v
        phis = fields if fields else [np.zeros((n, n))]
        for phi in phis:
            for c in couplings:
                if c == 0.0 and phi is not phis[0]:
                    continue
                seeds.append(np.linalg.inv(1j * np.eye(n) - kin - c * phi))
    gen = generated_algebra(seeds)
    return GenerationResult(gen, alg, span_eq(gen, alg.total), pairs, skipped, len(seeds))
