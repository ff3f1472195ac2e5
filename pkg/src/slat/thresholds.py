"""Threshold bookkeeping: last-point-below functions and the Mourre-constant recursion.

Extended reals are plain floats, with ``math.inf`` and ``-math.inf`` for the
infinite values. Python float arithmetic already saturates the way we need:
``lam - (-inf) == inf`` and ``min`` treats ``inf`` as absorbing only when
every branch is infinite.
"""

from __future__ import annotations

import bisect
import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Mapping

import numpy as np

from .semilattice import Semilattice

INF = math.inf
ExtReal = float
POINT_TOL = 1e-12


@dataclass(frozen=True)
class ClosedPointSet:
    """Finite sorted set of reals; points closer than 1e-12 are merged."""

    points: tuple[float, ...] = ()

    def __init__(self, points: Iterable[float] = ()):
        pts = sorted(float(p) for p in points)
        if any(not math.isfinite(p) for p in pts):
            raise ValueError("point sets hold finite reals only")
        out: list[float] = []
        for p in pts:
            if not out or p - out[-1] > POINT_TOL:
                out.append(p)
        object.__setattr__(self, "points", tuple(out))

    def __contains__(self, x) -> bool:
        i = bisect.bisect_left(self.points, x)
        return i < len(self.points) and self.points[i] == x

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def union(self, other: "ClosedPointSet") -> "ClosedPointSet":
        return ClosedPointSet(self.points + other.points)

    def below(self, lam: float) -> tuple[float, ...]:
        return self.points[: bisect.bisect_right(self.points, lam)]


def n_eval(a: ClosedPointSet, lam: float) -> ExtReal:
    """Largest point of ``a`` that is <= lam, or -inf."""
    i = bisect.bisect_right(a.points, lam)
    return a.points[i - 1] if i else -INF


def n_union(a: ClosedPointSet, b: ClosedPointSet, lam: float) -> ExtReal:
    value = max(n_eval(a, lam), n_eval(b, lam))
    direct = n_eval(a.union(b), lam)
    assert value == direct, (value, direct)
    return value


def m_sup(a: ClosedPointSet, b: ClosedPointSet, lam: float) -> ExtReal:
    """sup over mu <= lam of M(mu), where M(mu) = mu on b and n_eval(a, mu) off b.

    n_eval(a, .) is nondecreasing, so off b the sup is reached at lam (or, if lam
    is in b, dominated by M(lam) = lam). On b the candidates are b's points <= lam.
    """
    candidates = [n_eval(a, lam)]
    candidates.extend(b.below(lam))
    value = max(candidates)
    direct = n_eval(a.union(b), lam)
    assert value == direct, (value, direct)
    return value


def rho_of_laplacian(lam: float) -> ExtReal:
    return INF if lam < 0 else float(lam)


def rho_geq(rho_sub: Callable[[float], float], lam: float, grid: Iterable[float]) -> ExtReal:
    """lam - sup_{mu <= lam} (mu - rho_sub(mu)), the sup taken over grid points <= lam and lam."""
    pts = [float(m) for m in grid]
    if not pts:
        raise ValueError("rho_geq needs a nonempty grid")
    sup = -INF
    for mu in pts + [lam]:
        if mu <= lam:
            sup = max(sup, mu - rho_sub(mu))
    return lam - sup


def rho_hat_from_thresholds(tau: ClosedPointSet, lam: float) -> ExtReal:
    return lam - n_eval(tau, lam)


def threshold_union(s: Semilattice, ev_map: Mapping[str, ClosedPointSet]) -> ClosedPointSet:
    out = ClosedPointSet()
    for x in s.elements:
        if x == s.least:
            continue
        if x not in ev_map:
            raise ValueError(f"ev_map has no entry for {x}")
        out = out.union(ev_map[x])
    return out


def rho_hat_recursive(s: Semilattice, ev_map: Mapping[str, ClosedPointSet], lam: float) -> ExtReal:
    """Best Mourre constant obtained by recursing over quotient lattices.

    For a lattice rooted at r the value is the min over covers X of r of
    ``rho_geq(rho_X, lam)``, where rho_X is the full (not hat) constant of
    the quotient at X: zero at its eigenvalues when the hat value there is
    positive, the hat value otherwise. A root with no covers gives +inf.
    Elements of S/X are identified with elements of S above X.
    """
    return _RhoRecursion(s, ev_map).rho_hat(s.least, lam)


class _RhoRecursion:
    def __init__(self, s: Semilattice, ev_map: Mapping[str, ClosedPointSet]):
        if s.least is None:
            raise ValueError("lattice needs a least element")
        for x in s.elements:
            if x != s.least and x not in ev_map:
                raise ValueError(f"ev_map has no entry for {x}")
        self.s = s
        self.ev = dict(ev_map)
        self.covers = {x: s.covers(x) for x in s.elements}
        # points of every ev set above X: where sups over mu can be attained
        self.grid = {}
        for x in s.elements:
            pts = ClosedPointSet()
            for y in s.elements:
                if y != s.least and s.leq(x, y):
                    pts = pts.union(self.ev[y])
            self.grid[x] = pts.points
        self.rho_hat = lru_cache(maxsize=None)(self._rho_hat)
        self.rho = lru_cache(maxsize=None)(self._rho)

    def _rho_hat(self, root: str, lam: float) -> float:
        best = INF
        for x in self.covers[root]:
            grid = self.grid[x] or (lam,)
            val = rho_geq(lambda mu, x=x: self.rho(x, mu), lam, grid)
            best = min(best, val)
        return best

    def _rho(self, x: str, mu: float) -> float:
        hat = self.rho_hat(x, mu)
        if mu in self.ev[x] and hat > 0:
            return 0.0
        return hat


@dataclass
class RhoProfile:
    lambdas: np.ndarray
    values: np.ndarray
    source: str = "direct"
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda", "value"])
        for lam, v in zip(self.lambdas, self.values):
            w.writerow([repr(float(lam)), fmt_ext(v)])
        return buf.getvalue()

    def to_dat(self) -> str:
        """Two whitespace-separated columns, readable by gnuplot."""
        return "".join(f"{float(l)!r} {fmt_ext(v)}\n" for l, v in zip(self.lambdas, self.values))


def fmt_ext(v: float) -> str:
    if v == INF:
        return "inf"
    if v == -INF:
        return "-inf"
    return repr(float(v))


def profile_direct(tau: ClosedPointSet, lambdas) -> RhoProfile:
    lams = np.asarray(lambdas, dtype=float)
    vals = np.array([rho_hat_from_thresholds(tau, float(l)) for l in lams])
    return RhoProfile(lams, vals, "direct")


def profile_recursive(s: Semilattice, ev_map, lambdas) -> RhoProfile:
    lams = np.asarray(lambdas, dtype=float)
    rec = _RhoRecursion(s, ev_map)
    vals = np.array([rec.rho_hat(s.least, float(l)) for l in lams])
    return RhoProfile(lams, vals, "recursive")
