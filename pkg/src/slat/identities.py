"""Span identities between kernel spaces, checked over all subgroup tuples of a group."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from .fingroup import (FinAbGroup, OperatorSpan, Subgroup, find_splitting, span_CXY_funcs,
                       span_CXYZ, span_crossed, span_eq, span_mul, span_Phi, span_TXY,
                       SpanComparison)


@dataclass
class CheckResult:
    identity: str
    subgroups: tuple[str, ...]
    ranks: tuple[int, int, int]
    passed: bool

    def to_json(self):
        return {"identity": self.identity, "subgroups": list(self.subgroups),
                "ranks": list(self.ranks), "passed": self.passed}


def _result(name, groups, cmp: SpanComparison) -> CheckResult:
    return CheckResult(name, tuple(g.label() for g in groups), cmp.ranks, cmp.equal)


def check_hyz(x: Subgroup, y: Subgroup) -> list[CheckResult]:
    t = span_TXY(x, y)
    ts = t.adjoint()
    xy = x & y
    return [
        _result("hyz-right", (x, y), span_eq(span_mul(ts, t), span_crossed(y, xy))),
        _result("hyz-left", (x, y), span_eq(span_mul(t, ts), span_crossed(x, xy))),
    ]


def check_hyz1(x: Subgroup, y: Subgroup) -> list[CheckResult]:
    t = span_TXY(x, y)
    return [_result("hyz1", (x, y), span_eq(span_mul(span_mul(t, t.adjoint()), t), t))]


def check_factor(x: Subgroup, y: Subgroup, z: Subgroup) -> list[CheckResult]:
    """T_xz T_zy = T_xy, asserted only when z contains x & y."""
    if not (x & y) <= z:
        return []
    lhs = span_mul(span_TXY(x, z), span_TXY(z, y))
    return [_result("factor", (x, y, z), span_eq(lhs, span_TXY(x, y)))]


def check_product(x: Subgroup, y: Subgroup, z: Subgroup) -> list[CheckResult]:
    lhs = span_mul(span_TXY(x, z), span_TXY(z, y))
    txy = span_TXY(x, y)
    xyz = x & y & z
    rhs = {
        "product-right-yz": span_mul(txy, span_CXY_funcs(y, y & z)),
        "product-left-xz": span_mul(span_CXY_funcs(x, x & z), txy),
        "product-right-xyz": span_mul(txy, span_CXY_funcs(y, xyz)),
        "product-left-xyz": span_mul(span_CXY_funcs(x, xyz), txy),
    }
    return [_result(name, (x, y, z), span_eq(lhs, r)) for name, r in rhs.items()]


def check_xyzef(x, y, z, e, f) -> list[CheckResult]:
    lhs = span_mul(span_CXYZ(x, z, e), span_CXYZ(z, y, f))
    return [_result("xyzef", (x, y, z, e, f), span_eq(lhs, span_CXYZ(x, y, e & f)))]


def check_nxyz(x, y, z) -> list[CheckResult]:
    c = span_CXYZ(x, y, z)
    return [_result("nxyz", (x, y, z), span_eq(span_mul(c.adjoint(), c), span_crossed(y, z)))]


def check_morita(w, x, y, z) -> list[CheckResult]:
    """On the lattice of subgroups between w and x: C_yx C_zx^* = C_yz."""
    m = span_CXYZ(y, x, w)
    n = span_CXYZ(z, x, w)
    return [_result("morita", (w, x, y, z), span_eq(span_mul(m, n.adjoint()), span_CXYZ(y, z, w)))]


def check_tensor_dim(x, y, z) -> list[CheckResult]:
    """Dimension |z| |x/z| |y/z| of the graded component when z splits off both sides."""
    if find_splitting(x, z) is None or find_splitting(y, z) is None:
        return []
    d = span_CXYZ(x, y, z).dim
    expect = z.order * (x.order // z.order) * (y.order // z.order)
    return [CheckResult("tensor-dim", (x.label(), y.label(), z.label()), (d, expect, d), d == expect)]


def check_phi(x, y) -> list[CheckResult]:
    if not y <= x:
        return []
    split = find_splitting(x, y)
    if split is None:
        return []
    phi = span_Phi(x, y, split)
    t = span_TXY(x, y)
    return [
        _result("phi-left", (x, y), span_eq(span_mul(span_TXY(x, x), phi), t)),
        _result("phi-right", (x, y), span_eq(span_mul(phi, span_TXY(y, y)), t)),
    ]


PAIR_CHECKS = {"hyz": check_hyz, "hyz1": check_hyz1, "phi": check_phi}
TRIPLE_CHECKS = {"factor": check_factor, "product": check_product, "nxyz": check_nxyz,
                 "tensor-dim": check_tensor_dim}


def tuples_for(name: str, subs: list[Subgroup]):
    n = len(subs)
    le = [[a.members_set <= b.members_set for b in subs] for a in subs]
    rng = range(n)

    def below(i, j):
        # indices of listed subgroups inside subs[i] & subs[j]
        m = subs[i].members_set & subs[j].members_set
        return [k for k in rng if subs[k].members_set <= m]

    if name in PAIR_CHECKS:
        out = list(itertools.product(rng, repeat=2))
    elif name in ("nxyz", "tensor-dim"):
        out = [(x, y, z) for x, y in itertools.product(rng, repeat=2) for z in below(x, y)]
    elif name in TRIPLE_CHECKS:
        out = list(itertools.product(rng, repeat=3))
    elif name == "xyzef":
        out = []
        for x, y, z in itertools.product(rng, repeat=3):
            fs = below(y, z)
            out.extend((x, y, z, e, f) for e in below(x, z) for f in fs)
    elif name == "morita":
        out = []
        for w, x in itertools.product(rng, repeat=2):
            if le[w][x]:
                mid = [v for v in rng if le[w][v] and le[v][x]]
                out.extend((w, x, y, z) for y, z in itertools.product(mid, repeat=2))
    else:
        raise KeyError(name)
    return [tuple(subs[i] for i in t) for t in out]


ALL_CHECKS = ["hyz", "hyz1", "factor", "product", "xyzef", "morita", "nxyz", "tensor-dim", "phi"]
CHECK_FN = {**PAIR_CHECKS, **TRIPLE_CHECKS, "xyzef": check_xyzef, "morita": check_morita}


@dataclass
class SuiteReport:
    group: str
    results: list[CheckResult] = field(default_factory=list)
    counts: dict[str, list[int]] = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def failures(self) -> list[CheckResult]:
        return [r for r in self.results if not r.passed]

    def to_json(self, include_results: bool = True):
        doc = {"group": self.group, "passed": self.passed,
               "counts": {k: {"checked": v[0], "passed": v[1]} for k, v in sorted(self.counts.items())},
               "failures": [r.to_json() for r in self.failures()]}
        if include_results:
            doc["results"] = [r.to_json() for r in self.results]
        return doc


def run_suite(group: FinAbGroup, subgroups: list[Subgroup] | None = None,
              checks: list[str] | None = None, sample: int | None = None,
              seed: int = 0) -> SuiteReport:
    """Run the named checks on every admissible tuple of subgroups.

    With ``sample`` set, each check runs on that many tuples drawn without
    replacement by a seeded generator (used for the larger groups).
    """
    subs = subgroups if subgroups is not None else group.all_subgroups()
    rng = np.random.default_rng(seed)
    rep = SuiteReport(repr(group))
    t0 = time.perf_counter()
    for name in checks or ALL_CHECKS:
        tups = tuples_for(name, subs)
        if sample is not None and len(tups) > sample:
            idx = sorted(rng.choice(len(tups), size=sample, replace=False))
            tups = [tups[i] for i in idx]
        got = []
        for tup in tups:
            got.extend(CHECK_FN[name](*tup))
        rep.results.extend(got)
        rep.counts[name] = [len(got), sum(r.passed for r in got)]
    rep.seconds = time.perf_counter() - t0
    return rep


def check_pair(name: str, a: OperatorSpan, b: OperatorSpan, labels=()) -> CheckResult:
    """Compare two precomputed spans; used for fixtures and negative controls."""
    cmp = span_eq(a, b)
    return CheckResult(name, tuple(labels), cmp.ranks, cmp.equal)
