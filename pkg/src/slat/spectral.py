"""Eigenvalues, thresholds and commutator checks for assembled block operators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from . import thresholds as th
from .euclid import BlockOperator, build_laplacian, subsystem
from .thresholds import INF, ClosedPointSet, RhoProfile

DENSE_CAP = 4000


class SpectralError(RuntimeError):
    pass


def eig_sym(m, check: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors of a Hermitian matrix."""
    m = np.asarray(m.toarray() if sp.issparse(m) else m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"square matrix expected, got shape {m.shape}")
    scale = max(1.0, float(np.abs(m).max())) if m.size else 1.0
    if np.abs(m - m.conj().T).max(initial=0.0) > 1e-10 * scale:
        raise SpectralError("matrix is not Hermitian")
    w, v = np.linalg.eigh(m)
    if check and m.size:
        norm = max(abs(w[0]), abs(w[-1]), 1e-300)
        resid = np.linalg.norm(m @ v - v * w, axis=0)
        if resid.max() > 1e-8 * norm:
            raise SpectralError(f"eigenpair residual {resid.max():.3e} too large")
    return w, v


def _matrix(op) -> sp.csr_matrix | np.ndarray:
    if isinstance(op, BlockOperator):
        return op.to_sparse()
    return op


def _gershgorin_lower(a: sp.csr_matrix) -> float:
    a = sp.csr_matrix(a)
    diag = a.diagonal().real
    absrow = np.asarray(abs(a).sum(axis=1)).ravel()
    return float((diag - (absrow - np.abs(diag))).min())


def lowest_eigs(op, k: int, vectors: bool = False):
    """The k smallest eigenvalues (and vectors), dense below DENSE_CAP, shift-invert Lanczos above."""
    a = _matrix(op)
    n = a.shape[0]
    k = min(k, n)
    if n <= DENSE_CAP:
        w, v = eig_sym(a.toarray() if sp.issparse(a) else a, check=False)
        return (w[:k], v[:, :k]) if vectors else w[:k]
    k = min(k, n - 2)
    sigma = _gershgorin_lower(a) - 1.0
    w, v = sla.eigsh(sp.csc_matrix(a), k=k, sigma=sigma, which="LM")
    order = np.argsort(w)
    return (w[order], v[:, order]) if vectors else w[order]


def eigs_below(op, bound: float) -> np.ndarray:
    """All eigenvalues strictly below bound."""
    a = _matrix(op)
    n = a.shape[0]
    if n <= DENSE_CAP:
        w = lowest_eigs(a, n)
        return w[w < bound]
    k = 16
    while True:
        w = lowest_eigs(a, k)
        if w[-1] >= bound or k >= n - 2:
            return w[w < bound]
        k *= 2


def min_eig(op) -> float:
    return float(lowest_eigs(op, 1)[0])


class Analysis:
    """Caches subsystem operators and their spectra for one Hamiltonian.

    Quotients of quotients are never formed: (S/X)/(Y/X) is S/Y, so every
    quantity of H_{S/X} is read off the subsystems H_{S/Y} with Y above X.
    """

    def __init__(self, h: BlockOperator):
        self.h = h
        self.s = h.lattice
        self._sub = {}
        self._bottom = {}

    def sub(self, x: str) -> BlockOperator:
        if x not in self._sub:
            self._sub[x] = subsystem(self.h, x)
        return self._sub[x]

    def bottom(self, x: str) -> float:
        if x not in self._bottom:
            self._bottom[x] = min_eig(self.sub(x))
        return self._bottom[x]

    def tau(self, x: str) -> tuple[float, dict[str, float]]:
        """Onset for H_{S/x}: min over covers Y of x of the bottom of H_{S/Y}."""
        per = {y: self.bottom(y) for y in self.s.covers(x)}
        return (min(per.values()) if per else INF), per


@dataclass
class HVZReport:
    tau: float
    per_atom: dict[str, float]
    kinetic_floor: dict[str, float] = field(default_factory=dict)

    def to_json(self):
        return {"tau_hvz": self.tau, "per_atom": dict(sorted(self.per_atom.items())),
                "kinetic_floor": dict(sorted(self.kinetic_floor.items()))}


def hvz_tau(h: BlockOperator, analysis: Analysis | None = None) -> HVZReport:
    """min over atoms X of the bottom of H_{S/X}.

    ``kinetic_floor`` records min eig(Delta_X) per atom: on a bounded grid the
    bottom of the projection above X exceeds tau by this amount, which tends
    to zero as the box grows.
    """
    an = analysis or Analysis(h)
    s = h.lattice
    if s.least is None:
        raise SpectralError("lattice needs a least element")
    tau, per = an.tau(s.least)
    floors = {x: min_eig(build_laplacian(h.axes[x], h.grid, h.scheme)) for x in per}
    return HVZReport(tau, per, floors)


@dataclass
class ThresholdReport:
    points: ClosedPointSet
    ev_map: dict[str, ClosedPointSet]
    onsets: dict[str, float]
    flagged: dict[str, list[float]]
    eps: float

    def to_json(self):
        return {
            "eps": self.eps,
            "thresholds": list(self.points.points),
            "ev": {k: list(v.points) for k, v in sorted(self.ev_map.items())},
            "onsets": {k: v for k, v in sorted(self.onsets.items())},
            "flagged_near_onset": {k: v for k, v in sorted(self.flagged.items()) if v},
        }


def threshold_set_numeric(h: BlockOperator, eps: float, analysis: Analysis | None = None) -> ThresholdReport:
    """Union over X > O of the isolated eigenvalues of H_{S/X}.

    For X with covers these are the eigenvalues below (onset of H_{S/X}) - eps;
    those in [onset - eps, onset) are flagged and dropped. For a maximal X the
    quotient is the vacuum alone and its single eigenvalue is kept.
    """
    an = analysis or Analysis(h)
    s = h.lattice
    ev, onsets, flagged = {}, {}, {}
    for x in s.elements:
        if x == s.least:
            continue
        t, _ = an.tau(x)
        onsets[x] = t
        if t == INF:
            ev[x] = ClosedPointSet(lowest_eigs(an.sub(x), an.sub(x).size))
            flagged[x] = []
            continue
        w = eigs_below(an.sub(x), t)
        ev[x] = ClosedPointSet(w[w < t - eps])
        flagged[x] = [float(v) for v in w[w >= t - eps]]
    pts = th.threshold_union(s, ev)
    return ThresholdReport(pts, ev, onsets, flagged, eps)


@dataclass
class RhoComparison:
    direct: RhoProfile
    recursive: RhoProfile
    discrepancy: float


def rho_discrepancy(a: np.ndarray, b: np.ndarray) -> float:
    fa, fb = np.isfinite(a), np.isfinite(b)
    if np.any(fa != fb) or np.any(a[~fa] != b[~fb]):
        return INF
    return float(np.abs(a[fa] - b[fb]).max(initial=0.0))


def rho_hat_numeric(h: BlockOperator, lambdas, eps: float,
                    report: ThresholdReport | None = None) -> RhoComparison:
    rep = report or threshold_set_numeric(h, eps)
    direct = th.profile_direct(rep.points, lambdas)
    rec = th.profile_recursive(h.lattice, rep.ev_map, lambdas)
    d = rho_discrepancy(direct.values, rec.values)
    if d > 1e-9:
        raise SpectralError(f"direct and recursive profiles disagree by {d}")
    return RhoComparison(direct, rec, d)


# commutators with the dilation generator


def commutator(h: BlockOperator, mode: str = "kinetic") -> np.ndarray:
    """Dense i[H, D] for a finite-difference model.

    mode "matrix" is the literal matrix commutator i(HD - DH). mode "kinetic"
    uses the continuum identity [Delta, iD] = Delta for the kinetic part and
    the matrix commutator for the interactions only.
    """
    d = h.dilation_sparse().toarray()
    if mode == "matrix":
        a = h.to_dense()
        c = 1j * (a @ d - d @ a)
    elif mode == "kinetic":
        i = h.interaction_sparse().toarray()
        c = h.kinetic_sparse().toarray() + 1j * (i @ d - d @ i)
    else:
        raise ValueError(f"unknown commutator mode {mode!r}")
    return (c + c.conj().T) / 2


def _interior_probe(h: BlockOperator, lam: float) -> tuple[str, np.ndarray] | None:
    """Normalized Gaussian packet at energy about lam in the largest sector."""
    x = max(h.order, key=lambda e: (len(h.axes[e]), e))
    k = len(h.axes[x])
    if k == 0:
        return None
    g = h.grid
    c = g.coords(k)
    w = g.half_length / 8
    u = np.exp(-(c**2).sum(axis=1) / (2 * w * w)) * np.exp(1j * math.sqrt(max(lam, 0.0)) * c[:, 0])
    return x, u / np.linalg.norm(u)


def boundary_error(h: BlockOperator, lam: float) -> float:
    """|<u, i[Delta, D] u> - <u, Delta u>| on an interior probe state u."""
    probe = _interior_probe(h, lam)
    if probe is None:
        return 0.0
    x, u = probe
    from .euclid import dilation_generator
    lap = build_laplacian(h.axes[x], h.grid, h.scheme)
    d = dilation_generator(h.axes[x], h.grid)
    lu, du = lap @ u, d @ u
    comm = 1j * (np.vdot(u, lap @ du) - np.vdot(u, d @ lu))
    return float(abs(comm - np.vdot(u, lu)))


@dataclass
class MourreReport:
    lam: float
    delta: float
    subspace_dim: int
    min_compressed: float | None
    min_compressed_matrix: float | None
    rho_hat_at_lambda: float
    margin: float
    boundary_error: float
    commutator: str
    status: str
    window: list[float] = field(default_factory=list)
    thresholds: list[float] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_json(self):
        return {
            "lambda": self.lam, "delta": self.delta, "subspace_dim": self.subspace_dim,
            "min_compressed": self.min_compressed,
            "min_compressed_matrix_commutator": self.min_compressed_matrix,
            "rho_hat_at_lambda": self.rho_hat_at_lambda,
            "margin": self.margin, "boundary_error": self.boundary_error,
            "commutator": self.commutator, "status": self.status,
            "window_eigenvalues": self.window, "thresholds": self.thresholds,
        }


def mourre_check(h: BlockOperator, lam: float, delta: float, eps: float = 1e-6,
                 mode: str = "kinetic", margin: float | None = None,
                 report: ThresholdReport | None = None) -> MourreReport:
    """Lowest eigenvalue of the commutator compressed to the spectral window [lam - delta, lam + delta].

    Compared against rho_hat(lam) - margin; the default margin is a quarter
    of |rho_hat| plus the boundary error of the discrete commutator.
    """
    if h.size > DENSE_CAP:
        raise SpectralError(f"dimension {h.size} exceeds the dense limit {DENSE_CAP}")
    rep = report or threshold_set_numeric(h, eps)
    rho = th.rho_hat_from_thresholds(rep.points, lam)
    w, v = eig_sym(h.to_dense())
    sel = (w >= lam - delta) & (w <= lam + delta)
    vw = v[:, sel]
    berr = boundary_error(h, lam)
    marg = margin if margin is not None else (0.25 * abs(rho) if math.isfinite(rho) else 0.0) + berr
    pts = [float(t) for t in rep.points]
    base = dict(lam=lam, delta=delta, subspace_dim=int(sel.sum()), rho_hat_at_lambda=rho,
                margin=marg, boundary_error=berr, commutator=mode,
                window=[float(x) for x in w[sel]], thresholds=pts)
    if not sel.any():
        return MourreReport(min_compressed=None, min_compressed_matrix=None, status="window-empty", **base)
    mins = {}
    for md in {mode, "matrix"}:
        c = vw.conj().T @ commutator(h, md) @ vw
        mins[md] = float(np.linalg.eigvalsh((c + c.conj().T) / 2)[0])
    if any(abs(t - lam) <= delta for t in pts):
        status = "straddles-threshold"
    elif not math.isfinite(rho):
        status = "below-thresholds"
    else:
        status = "pass" if mins[mode] >= rho - marg else "fail"
    return MourreReport(min_compressed=mins[mode], min_compressed_matrix=mins["matrix"],
                        status=status, **base)


@dataclass
class VirialEntry:
    eigenvalue: float
    value: float
    relative: float
    boundary_mass: float
    status: str

    def to_json(self):
        return self.__dict__.copy()


def boundary_mass(h: BlockOperator, psi: np.ndarray, band: float = 0.1) -> float:
    """Weight of psi on grid points within band * L of the box edge."""
    off = h.offsets
    g = h.grid
    edge = g.half_length * (1 - band)
    total = 0.0
    for x in h.order:
        k = len(h.axes[x])
        if k == 0:
            continue
        part = psi[off[x]:off[x] + g.size(k)]
        outer = (np.abs(g.coords(k)) > edge).any(axis=1)
        total += float((np.abs(part[outer]) ** 2).sum())
    return total


def virial_check(h: BlockOperator, cutoff: float = 1e-6, tol: float = 1e-3,
                 mode: str = "matrix", below: float | None = None) -> list[VirialEntry]:
    """|<psi, i[H, D] psi>| for eigenvectors below the onset (or ``below``)."""
    if h.size > DENSE_CAP:
        raise SpectralError(f"dimension {h.size} exceeds the dense limit {DENSE_CAP}")
    bound = hvz_tau(h).tau if below is None else below
    w, v = eig_sym(h.to_dense())
    c = commutator(h, mode)
    norm_h = max(abs(w[0]), abs(w[-1]))
    dw = np.linalg.eigvalsh(h.dilation_sparse().toarray())
    norm_d = max(abs(dw[0]), abs(dw[-1]))
    out = []
    for i in np.nonzero(w < bound)[0]:
        psi = v[:, i]
        bm = boundary_mass(h, psi)
        val = float(abs(np.vdot(psi, c @ psi)))
        rel = float(val / (norm_h * norm_d))
        if bm > cutoff:
            status = "skipped-boundary"
        else:
            status = "ok" if rel <= tol else "fail"
        out.append(VirialEntry(float(w[i]), val, rel, bm, status))
    return out


@dataclass
class RefinementGate:
    coarse: dict[str, list[float]]
    fine: dict[str, list[float]]
    drift: dict[str, float]
    residual: float
    passed: bool

    def to_json(self):
        return self.__dict__.copy()


def refinement_gate(coarse: BlockOperator, fine: BlockOperator, count: int = 3,
                    limit: float = 0.01) -> RefinementGate:
    """Lowest eigenvalues of each atom's subsystem on two grids.

    ``drift`` is the largest relative change per atom; ``residual`` the
    largest absolute change, which sets the default eps.
    """
    s = coarse.lattice
    a1, a2 = Analysis(coarse), Analysis(fine)
    lo, hi, drift, resid = {}, {}, {}, 0.0
    for x in s.atoms():
        e1 = lowest_eigs(a1.sub(x), count)
        e2 = lowest_eigs(a2.sub(x), count)
        lo[x], hi[x] = [float(v) for v in e1], [float(v) for v in e2]
        drift[x] = float(np.max(np.abs(e2 - e1) / np.maximum(np.abs(e1), 1e-300)))
        resid = max(resid, float(np.max(np.abs(e2 - e1))))
    passed = all(d < limit for d in drift.values())
    return RefinementGate(lo, hi, drift, resid, passed)


@dataclass
class SpectralReport:
    eigenvalues: dict[str, list[float]]
    hvz: HVZReport
    thresholds: ThresholdReport
    bound_states: list[float]

    def to_json(self):
        return {"eigenvalues": dict(sorted(self.eigenvalues.items())),
                "hvz": self.hvz.to_json(), "thresholds": self.thresholds.to_json(),
                "bound_states": self.bound_states, "bound_state_count": len(self.bound_states)}


def spectral_report(h: BlockOperator, eps: float, count: int = 10) -> SpectralReport:
    an = Analysis(h)
    eigs = {}
    for x in h.order:
        sub = an.sub(x)
        eigs[x] = [float(v) for v in lowest_eigs(sub, count)]
    hv = hvz_tau(h, an)
    thr = threshold_set_numeric(h, eps, an)
    bs = [float(v) for v in eigs_below(h, hv.tau - eps)] if math.isfinite(hv.tau) else eigs[h.lattice.least]
    return SpectralReport(eigs, hv, thr, bs)
