"""Discretized many-body Hamiltonians over a semilattice of coordinate subspaces.

Each element X of the lattice is a set of coordinate axes; H(X) is sampled on
the product grid over those axes, flattened in C order over the sorted axes.
The empty subspace gives the one-dimensional vacuum sector. Operators are
kept in sparse form (scipy.sparse) since product grids grow quickly.

An interaction component I(Z) acting between H(Y) and H(X), Z inside X and Y,
is 1_Z (x) M with M a matrix from the grid of Y/Z to the grid of X/Z. Blocks
are built in the (Z, rest) coordinate order and permuted back to sorted order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .semilattice import Semilattice

FACTOR_TOL = 1e-12


class ModelError(ValueError):
    pass


class NotNonRelativistic(ModelError):
    """An interaction does not factor through the requested subspace."""


@dataclass(frozen=True)
class GridSpec:
    n: int
    half_length: float

    def __post_init__(self):
        if self.n < 9 or self.n % 2 == 0:
            raise ModelError(f"grid needs an odd number of points >= 9, got {self.n}")
        if not self.half_length > 0:
            raise ModelError(f"half_length must be positive, got {self.half_length}")

    @property
    def h(self) -> float:
        return 2.0 * self.half_length / (self.n - 1)

    @cached_property
    def points(self) -> np.ndarray:
        return np.linspace(-self.half_length, self.half_length, self.n)

    def size(self, k: int) -> int:
        return self.n ** k

    def coords(self, k: int) -> np.ndarray:
        """Grid coordinates of a k-dimensional product grid, shape (n**k, k)."""
        if k == 0:
            return np.zeros((1, 0))
        mesh = np.meshgrid(*([self.points] * k), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


# one-dimensional building blocks


def _laplacian_1d(g: GridSpec, scheme: str) -> sp.csr_matrix:
    n, h = g.n, g.h
    if scheme == "fd":
        main = np.full(n, 2.0)
        off = np.full(n - 1, -1.0)
        return sp.diags([off, main, off], [-1, 0, 1], format="csr") / h**2
    if scheme == "spectral":
        # periodic grid with the same spacing; |k|^2 in Fourier space
        k = 2 * np.pi * np.fft.fftfreq(n, d=h)
        f = np.fft.fft(np.eye(n), axis=0)
        mat = (np.conj(f.T) @ np.diag(k**2) @ f).real / n
        return sp.csr_matrix((mat + mat.T) / 2)
    raise ModelError(f"unknown scheme {scheme!r}")


def _kron_sum(one_d: sp.spmatrix, k: int, n: int) -> sp.csr_matrix:
    if k == 0:
        return sp.csr_matrix((1, 1))
    total = None
    for i in range(k):
        term = sp.kron(sp.kron(sp.identity(n ** i), one_d), sp.identity(n ** (k - i - 1)))
        total = term if total is None else total + term
    return sp.csr_matrix(total)


def build_laplacian(axes, g: GridSpec, scheme: str = "fd") -> sp.csr_matrix:
    """Positive Laplacian on the grid of the given axes; 1x1 zero for no axes."""
    return _kron_sum(_laplacian_1d(g, scheme), len(tuple(axes)), g.n)


def _dilation_1d(g: GridSpec) -> sp.csr_matrix:
    n, h = g.n, g.h
    grad = sp.diags([np.full(n - 1, -1.0), np.full(n - 1, 1.0)], [-1, 1]) / (2 * h)
    q = sp.diags(g.points)
    return sp.csr_matrix((q @ grad - grad.T @ q) / 4j)


def dilation_generator(axes, g: GridSpec) -> sp.csr_matrix:
    """Symmetrized generator of dilations, (x d/dx + 1/2) / 2i per axis, summed."""
    k = len(tuple(axes))
    if k == 0:
        return sp.csr_matrix((1, 1), dtype=complex)
    return _kron_sum(_dilation_1d(g), k, g.n).astype(complex)


def axis_permutation(axes: tuple[int, ...], first: tuple[int, ...], n: int) -> np.ndarray:
    """perm[i] = sorted-order index of the point whose (first, rest)-order index is i."""
    axes = tuple(axes)
    pos_first = [axes.index(a) for a in first]
    rest = [i for i in range(len(axes)) if axes[i] not in first]
    k = len(axes)
    if k == 0:
        return np.zeros(1, dtype=int)
    idx = np.arange(n ** k).reshape((n,) * k)
    return idx.transpose(pos_first + rest).ravel()


def permute_block(mat: sp.spmatrix, prow: np.ndarray, pcol: np.ndarray) -> sp.csr_matrix:
    """Given mat in permuted order, return it in sorted order: out[prow[i], pcol[j]] = mat[i, j]."""
    coo = sp.coo_matrix(mat)
    return sp.csr_matrix((coo.data, (prow[coo.row], pcol[coo.col])), shape=mat.shape)


def unpermute_block(mat: sp.spmatrix, prow: np.ndarray, pcol: np.ndarray) -> sp.csr_matrix:
    """Inverse of permute_block: sorted order in, permuted order out."""
    return sp.csr_matrix(sp.csr_matrix(mat)[prow][:, pcol])


# model description


@dataclass
class PotentialSpec:
    kind: str
    params: dict
    target: tuple[str, str, str]


@dataclass
class CouplingSpec:
    pair: tuple[str, str]
    theta: np.ndarray | None = None
    constant: float | None = None


@dataclass
class EuclidModel:
    ambient_dim: int
    grid: GridSpec
    subspaces: dict[str, tuple[int, ...]]
    scheme: str = "fd"
    potentials: list[PotentialSpec] = field(default_factory=list)
    couplings: list[CouplingSpec] = field(default_factory=list)
    meet_table: dict | None = None

    def __post_init__(self):
        if self.scheme not in ("fd", "spectral"):
            raise ModelError(f"unknown scheme {self.scheme!r}")
        self.subspaces = {k: tuple(sorted(v)) for k, v in self.subspaces.items()}
        for k, axes in self.subspaces.items():
            for a in axes:
                if not 1 <= a <= self.ambient_dim:
                    raise ModelError(f"subspace {k}: axis {a} outside 1..{self.ambient_dim}")
        self.lattice = Semilattice.from_sets(self.subspaces)
        if self.meet_table is not None:
            given = Semilattice(self.lattice.dims, self.meet_table)
            if given != self.lattice:
                raise ModelError("meet table does not match axis-set intersections")

    def dim(self, x: str) -> int:
        return self.grid.size(len(self.subspaces[x]))

    def quotient_model(self, x: str) -> "EuclidModel":
        """The model on {E/x}: axes of x dropped, every kept term divided by x.

        Used as an independent route to the subsystem Hamiltonian.
        """
        s = self.lattice
        q, name = s.quotient_map(x)
        xa = set(self.subspaces[x])
        subs = {name[e]: tuple(a for a in self.subspaces[e] if a not in xa) for e in name}
        pots = []
        for p in self.potentials:
            X, Y, Z = p.target
            if s.leq(x, Z):
                pots.append(PotentialSpec(p.kind, p.params, (name[X], name[Y], name[Z])))
        coups = []
        for c in self.couplings:
            X, Y = c.pair
            if s.leq(x, Y):
                coups.append(CouplingSpec((name[X], name[Y]), c.theta, c.constant))
        out = EuclidModel(self.ambient_dim, self.grid, subs, self.scheme, pots, coups)
        return out


@dataclass
class BlockOperator:
    """Symmetric operator on the direct sum of H(X), X in the lattice.

    ``kinetic`` holds the diagonal kinetic blocks and ``components[Z]`` the
    blocks of the interaction part with grade Z; the full operator is their
    sum. Blocks live in sorted-axis order of each subspace.
    """

    lattice: Semilattice
    axes: dict[str, tuple[int, ...]]
    grid: GridSpec
    scheme: str
    kinetic: dict[str, sp.csr_matrix]
    components: dict[str, dict[tuple[str, str], sp.csr_matrix]]

    @property
    def order(self) -> list[str]:
        return list(self.lattice.elements)

    @property
    def dims(self) -> dict[str, int]:
        return {x: self.grid.size(len(self.axes[x])) for x in self.order}

    @property
    def offsets(self) -> dict[str, int]:
        out, pos = {}, 0
        for x in self.order:
            out[x] = pos
            pos += self.dims[x]
        return out

    @property
    def size(self) -> int:
        return sum(self.dims.values())

    def block(self, x: str, y: str) -> sp.csr_matrix:
        d = self.dims
        out = sp.csr_matrix((d[x], d[y]), dtype=self.dtype)
        if x == y:
            out = out + self.kinetic[x]
        for blocks in self.components.values():
            if (x, y) in blocks:
                out = out + blocks[(x, y)]
        return sp.csr_matrix(out)

    @property
    def blocks(self) -> dict[tuple[str, str], sp.csr_matrix]:
        out = {}
        for x in self.order:
            out[(x, x)] = self.block(x, x)
        for blocks in self.components.values():
            for key in blocks:
                if key not in out:
                    out[key] = self.block(*key)
        return out

    @property
    def dtype(self):
        mats = list(self.kinetic.values()) + [m for b in self.components.values() for m in b.values()]
        return np.result_type(np.float64, *[m.dtype for m in mats])

    def _assemble(self, parts) -> sp.csr_matrix:
        off = self.offsets
        rows, cols, vals = [], [], []
        for (x, y), m in parts:
            coo = sp.coo_matrix(m)
            rows.append(coo.row + off[x])
            cols.append(coo.col + off[y])
            vals.append(coo.data)
        n = self.size
        if not rows:
            return sp.csr_matrix((n, n))
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(n, n))

    def to_sparse(self) -> sp.csr_matrix:
        parts = [((x, x), k) for x, k in self.kinetic.items()]
        for blocks in self.components.values():
            parts.extend(blocks.items())
        return self._assemble(parts)

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def kinetic_sparse(self) -> sp.csr_matrix:
        return self._assemble([((x, x), k) for x, k in self.kinetic.items()])

    def interaction_sparse(self) -> sp.csr_matrix:
        parts = []
        for blocks in self.components.values():
            parts.extend(blocks.items())
        return self._assemble(parts)

    def dilation_sparse(self) -> sp.csr_matrix:
        if self.scheme != "fd":
            raise ModelError("the dilation generator is built for the finite-difference scheme only")
        return self._assemble([((x, x), dilation_generator(self.axes[x], self.grid))
                               for x in self.order])

    def hermitian_defect(self) -> float:
        a = self.to_sparse()
        d = a - a.conj().T
        return float(np.abs(d.data).max()) if d.nnz else 0.0


# assembly


def _shape(kind: str, params: dict, coords: np.ndarray, center) -> np.ndarray:
    """Unit-amplitude profile of a named family on the given points."""
    k = coords.shape[1]
    c = np.broadcast_to(np.asarray(center, dtype=float), (k,))
    r2 = ((coords - c) ** 2).sum(axis=1)
    if kind == "gaussian-well":
        w = float(params["width"])
        return np.exp(-r2 / (2 * w * w))
    if kind == "compact-bump":
        rad = float(params["radius"])
        return np.clip(1 - r2 / rad**2, 0, None) ** 2
    raise ModelError(f"unknown potential kind {kind!r}")


def _amplitude(kind: str, params: dict) -> float:
    if kind == "gaussian-well":
        return -float(params["depth"])
    return float(params.get("height", 1.0))


def interaction_matrix(pot: PotentialSpec, model: EuclidModel) -> sp.csr_matrix:
    """The matrix M of the component: grid of Y/Z -> grid of X/Z.

    On a diagonal block this is multiplication by the profile. Between two
    sectors it is the separable kernel amp * f(x) f(y), weighted by the cell
    volumes so it approximates the integral operator.
    """
    X, Y, Z = pot.target
    ax, ay, az = (set(model.subspaces[t]) for t in (X, Y, Z))
    if not az <= (ax & ay):
        raise ModelError(f"interaction target {pot.target}: {Z} is not inside {X} and {Y}")
    g = model.grid
    kx, ky = len(ax - az), len(ay - az)
    weight = g.h ** ((kx + ky) / 2)
    if pot.kind == "tabulated":
        mat = np.asarray(pot.params["samples"], dtype=float)
        if X == Y and mat.ndim == 1:
            if mat.shape != (g.size(kx),):
                raise ModelError(f"tabulated potential needs {g.size(kx)} samples")
            return sp.diags(mat, format="csr")
        if mat.shape != (g.size(kx), g.size(ky)):
            raise ModelError(f"tabulated kernel needs shape {(g.size(kx), g.size(ky))}")
        return sp.csr_matrix(mat * weight)
    amp = _amplitude(pot.kind, pot.params)
    if X == Y:
        prof = _shape(pot.kind, pot.params, g.coords(kx), pot.params.get("center", 0.0))
        return sp.diags(amp * prof, format="csr")
    fx = _shape(pot.kind, pot.params, g.coords(kx), pot.params.get("center_rows", 0.0))
    fy = _shape(pot.kind, pot.params, g.coords(ky), pot.params.get("center_cols", 0.0))
    return sp.csr_matrix(amp * np.outer(fx, fy) * weight)


def coupling_matrix(c: CouplingSpec, model: EuclidModel) -> tuple[str, sp.csr_matrix]:
    """(grade, M) for a field coupling: a column theta for X over Y, a scalar for X = Y."""
    X, Y = c.pair
    ax, ay = set(model.subspaces[X]), set(model.subspaces[Y])
    if not ay <= ax:
        raise ModelError(f"coupling pair {c.pair}: {Y} is not inside {X}")
    if X == Y:
        if c.constant is None:
            raise ModelError(f"coupling pair {c.pair}: a diagonal coupling is a constant shift")
        return Y, sp.csr_matrix(np.array([[float(c.constant)]]))
    k = len(ax - ay)
    theta = np.asarray(c.theta, dtype=complex if np.iscomplexobj(c.theta) else float).ravel()
    if theta.shape != (model.grid.size(k),):
        raise ModelError(f"coupling {c.pair}: theta needs {model.grid.size(k)} samples")
    return Y, sp.csr_matrix(theta.reshape(-1, 1) * model.grid.h ** (k / 2))


def embed_component(model_axes: dict, g: GridSpec, x: str, y: str, z: str,
                    m: sp.spmatrix) -> sp.csr_matrix:
    """Block (x, y) of 1_z (x) m, in sorted-axis order."""
    ax, ay, az = model_axes[x], model_axes[y], model_axes[z]
    nz = g.size(len(az))
    full = sp.kron(sp.identity(nz, format="csr"), m, format="csr")
    px = axis_permutation(ax, az, g.n)
    py = axis_permutation(ay, az, g.n)
    return permute_block(full, px, py)


def gaussian_theta(model: EuclidModel, pair, amplitude=1.0, width=1.0, center=0.0) -> np.ndarray:
    X, Y = pair
    k = len(set(model.subspaces[X]) - set(model.subspaces[Y]))
    c = model.grid.coords(k)
    return amplitude * np.exp(-((c - center) ** 2).sum(axis=1) / (2 * width**2))


def build_kinetic(model: EuclidModel) -> dict[str, sp.csr_matrix]:
    return {x: build_laplacian(model.subspaces[x], model.grid, model.scheme)
            for x in model.lattice.elements}


def _add(blocks: dict, key, m):
    blocks[key] = m if key not in blocks else sp.csr_matrix(blocks[key] + m)


def assemble(model: EuclidModel) -> BlockOperator:
    """H = K + sum over grades of I(Z); adjoint blocks are generated here."""
    comps: dict[str, dict] = {}
    for p in model.potentials:
        X, Y, Z = p.target
        if X != Y and X > Y:
            raise ModelError(f"interaction {p.target}: configure the pair in sorted order")
        m = interaction_matrix(p, model)
        blk = embed_component(model.subspaces, model.grid, X, Y, Z, m)
        c = comps.setdefault(Z, {})
        if X == Y:
            _add(c, (X, X), sp.csr_matrix((blk + blk.conj().T) / 2))
        else:
            _add(c, (X, Y), blk)
            _add(c, (Y, X), sp.csr_matrix(blk.conj().T))
    for cp in model.couplings:
        X, Y = cp.pair
        z, m = coupling_matrix(cp, model)
        blk = embed_component(model.subspaces, model.grid, X, Y, z, m)
        c = comps.setdefault(z, {})
        _add(c, (X, Y), blk)
        if X != Y:
            _add(c, (Y, X), sp.csr_matrix(blk.conj().T))
    op = BlockOperator(model.lattice, dict(model.subspaces), model.grid, model.scheme,
                       build_kinetic(model), comps)
    defect = op.hermitian_defect()
    if defect > 1e-12:
        raise AssertionError(f"assembled operator is not Hermitian (defect {defect:.3e})")
    return op


# projections onto filters and subsystems


def project_geq(h: BlockOperator, x: str) -> BlockOperator:
    """Keep the blocks above x and only the components whose grade is above x."""
    s = h.lattice
    f = s.filter_geq(x)
    keep = set(f.elements)
    comps = {z: dict(b) for z, b in h.components.items() if z in keep}
    return BlockOperator(f, {e: h.axes[e] for e in keep}, h.grid, h.scheme,
                         {e: h.kinetic[e] for e in keep}, comps)


def _split_off(mat: sp.spmatrix, nx: int, rows: int, cols: int):
    """mat (in (x, rest) order) = 1_x (x) B + residual; returns B and the residual norm.

    B is copied from the first diagonal block rather than averaged, so an
    exactly factorized matrix gives a zero residual without rounding.
    """
    csr = sp.csr_matrix(mat)
    b = sp.csr_matrix(csr[:rows, :cols])
    resid = csr - sp.kron(sp.identity(nx), b, format="csr")
    norm = float(np.sqrt((np.abs(resid.data) ** 2).sum())) if resid.nnz else 0.0
    return b, norm


def subsystem(h: BlockOperator, x: str, tol: float = FACTOR_TOL) -> BlockOperator:
    """The operator on the quotient {E/x} whose tensor sum with Delta_x is the projection above x."""
    s = h.lattice
    q, name = s.quotient_map(x)
    if x == s.least:
        return h
    g = h.grid
    xa = h.axes[x]
    nx = g.size(len(xa))
    lap_x = build_laplacian(xa, g, h.scheme)
    new_axes = {name[e]: tuple(a for a in h.axes[e] if a not in xa) for e in name}
    size = {e: g.size(len(new_axes[name[e]])) for e in name}
    perm = {e: axis_permutation(h.axes[e], xa, g.n) for e in name}

    kinetic = {}
    for e in name:
        k = unpermute_block(h.kinetic[e], perm[e], perm[e])
        k = k - sp.kron(lap_x, sp.identity(size[e]), format="csr")
        b, err = _split_off(k, nx, size[e], size[e])
        if err > tol:
            raise NotNonRelativistic(f"kinetic block {e} does not split over {x} (residual {err:.2e})")
        kinetic[name[e]] = b
    comps = {}
    for z, blocks in h.components.items():
        if not s.leq(x, z):
            continue
        out = {}
        for (e, f), m in blocks.items():
            mm = unpermute_block(m, perm[e], perm[f])
            b, err = _split_off(mm, nx, size[e], size[f])
            if err > tol:
                raise NotNonRelativistic(
                    f"component {z} block ({e}, {f}) is not 1 (x) B over {x} (residual {err:.2e})")
            out[(name[e], name[f])] = b
        comps[name[z]] = out
    return BlockOperator(q, new_axes, g, h.scheme, kinetic, comps)


def factorization_residual(h: BlockOperator, x: str) -> float:
    """Norm of (projection above x) - (Delta_x (x) 1 + 1 (x) H_{S/x}).

    Compared term by term (kinetic blocks, then each graded component) and
    summed, which bounds the norm of the difference of the totals without
    the rounding noise of summing the terms in two different orders.
    """
    p = project_geq(h, x)
    sub = subsystem(h, x)
    _, name = h.lattice.quotient_map(x)
    g = h.grid
    xa = h.axes[x]
    lap_x = build_laplacian(xa, g, h.scheme)
    nx = lap_x.shape[0]
    perm = {e: axis_permutation(h.axes[e], xa, g.n) for e in name}

    def fro(m):
        m = sp.csr_matrix(m)
        return float(np.sqrt((np.abs(m.data) ** 2).sum())) if m.nnz else 0.0

    total = 0.0
    for e in name:
        ne = sub.kinetic[name[e]].shape[0]
        rhs = sp.kron(lap_x, sp.identity(ne)) + sp.kron(sp.identity(nx), sub.kinetic[name[e]])
        total += fro(p.kinetic[e] - permute_block(rhs, perm[e], perm[e]))
    for z, blocks in p.components.items():
        sblocks = sub.components.get(name[z], {})
        keys = set(blocks) | {(e, f) for e in name for f in name if (name[e], name[f]) in sblocks}
        for e, f in keys:
            left = blocks.get((e, f))
            right = sblocks.get((name[e], name[f]))
            shape = (g.size(len(h.axes[e])), g.size(len(h.axes[f])))
            rhs = (permute_block(sp.kron(sp.identity(nx), right), perm[e], perm[f])
                   if right is not None else sp.csr_matrix(shape))
            total += fro((left if left is not None else sp.csr_matrix(shape)) - rhs)
    return total


def check_vacuum_top(h: BlockOperator, tol: float = FACTOR_TOL) -> float:
    """Value of H on the top quotient, which must vanish for a many-body model."""
    top = h.lattice.top
    if top is None:
        return 0.0
    sub = subsystem(h, top)
    val = abs(sub.to_dense()[0, 0]) if sub.size == 1 else math.inf
    if val > tol:
        raise NotNonRelativistic(f"operator on the top quotient is {val:.3e}, not zero")
    return val


def relative_bound(h: BlockOperator, a: float = 1.0, iters: int = 30, seed: int = 0) -> dict:
    """Power-iteration estimate of ||I(Z) (K + i a)^-1|| for every grade Z."""
    import scipy.sparse.linalg as sla
    k = h.kinetic_sparse().astype(complex)
    lu = sla.splu(sp.csc_matrix(k + 1j * a * sp.identity(k.shape[0])))
    rng = np.random.default_rng(seed)
    out = {}
    for z, blocks in h.components.items():
        iz = BlockOperator(h.lattice, h.axes, h.grid, h.scheme,
                           {x: sp.csr_matrix(m.shape) for x, m in h.kinetic.items()},
                           {z: blocks}).to_sparse().astype(complex)
        v = rng.standard_normal(k.shape[0]) + 0j
        v /= np.linalg.norm(v)
        est = 0.0
        for _ in range(iters):
            w = iz @ lu.solve(v)
            # (I R)^* = R^* I^*; K is real symmetric so R^* y = conj(R conj(y))
            u = np.conj(lu.solve(np.conj(iz.conj().T @ w)))
            nu = np.linalg.norm(u)
            if nu == 0:
                break
            est = math.sqrt(nu)
            v = u / nu
        out[z] = est
    return out
