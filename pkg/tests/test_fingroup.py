import itertools

import numpy as np
import pytest
import sympy

from slat import fingroup as fg
from slat.fingroup import (FinAbGroup, assemble_C, field_op, find_splitting, grading_overlap,
                           pauli_fierz_generation, product_law, span_crossed, span_CXYZ,
                           span_CXYZ_orbits, span_eq, span_mul, span_of, span_TXY, txy)
from slat.identities import ALL_CHECKS, check_pair, run_suite, tuples_for
from slat.semilattice import Semilattice


def brute_subgroups(g: FinAbGroup):
    """Every subset closed under addition and containing 0."""
    out = set()
    elems = range(g.order)
    for size in range(1, g.order + 1):
        if g.order % size:
            continue
        for combo in itertools.combinations(elems, size):
            s = set(combo)
            if g.zero() in s and all(int(g.add_table[a, b]) in s for a in s for b in s):
                out.add(frozenset(s))
    return out


@pytest.mark.parametrize("orders, count", [([2], 2), ([4], 3), ([6], 4), ([2, 2], 5)])
def test_subgroup_enumeration_matches_brute_force(orders, count):
    g = FinAbGroup(orders)
    found = {s.members_set for s in g.all_subgroups()}
    assert found == brute_subgroups(g)
    assert len(found) == count


@pytest.mark.parametrize("orders, count", [([2, 4], 8), ([3, 3], 6), ([6, 6], 30)])
def test_subgroup_counts(orders, count):
    assert len(FinAbGroup(orders).all_subgroups()) == count


def test_subgroup_lattice_operations():
    g = FinAbGroup([4])
    two = g.subgroup([[2]])
    assert two.order == 2
    assert two <= g.whole() and g.trivial() <= two
    assert (two & g.whole()) == two
    assert (two + g.whole()) == g.whole()
    assert two.coset_labels(g.trivial()).tolist() == [0, 1]


def test_txy_entries():
    g = FinAbGroup([4])
    x, y = g.whole(), g.subgroup([[2]])
    k = txy(lambda e: e[0] + 1, x, y)
    # entry (a, b) is phi(a - b), phi(e) = e + 1
    expect = np.array([[((a - b) % 4) + 1 for b in (0, 2)] for a in range(4)])
    assert np.array_equal(k.entries, expect)
    assert np.array_equal((k.adjoint() @ k).entries, k.entries.T @ k.entries)


@pytest.mark.parametrize("orders", [[4], [6], [2, 2], [2, 4], [3, 3]])
def test_span_dimensions_by_counting(orders):
    g = FinAbGroup(orders)
    subs = g.all_subgroups()
    for x, y in itertools.product(subs, repeat=2):
        diffs = {int(g.sub_table[a, b]) for a in x.members for b in y.members}
        assert span_TXY(x, y).dim == len(diffs)
        z = x & y
        assert span_CXYZ(x, y, z).dim == x.order * y.order // z.order
        if y <= x:
            assert span_crossed(x, y).dim == x.order ** 2 // y.order


@pytest.mark.parametrize("orders", [[4], [2, 2], [6]])
def test_graded_component_matches_orbit_oracle(orders):
    g = FinAbGroup(orders)
    subs = g.all_subgroups()
    for x, y in itertools.product(subs, repeat=2):
        for z in subs:
            if z <= (x & y):
                assert span_eq(span_CXYZ(x, y, z), span_CXYZ_orbits(x, y, z)).equal


def test_product_rank_against_exact_rank():
    g = FinAbGroup([4])
    subs = g.all_subgroups()
    for x, y in itertools.product(subs, repeat=2):
        t = span_TXY(x, y)
        got = span_mul(t.adjoint(), t).dim
        mats = [sympy.Matrix(np.rint(a.T @ b).astype(int))
                for a in _indicators(x, y) for b in _indicators(x, y)]
        stacked = sympy.Matrix([list(m) for m in mats])
        assert got == stacked.rank()


def _indicators(x, y):
    diff = x.parent.sub_table[np.ix_(x.members, y.members)]
    return [(diff == v).astype(int) for v in np.unique(diff)]


def test_sketched_products_agree_with_enumeration(monkeypatch):
    g = FinAbGroup([2, 4])
    x, y = g.whole(), g.subgroup([[1, 0]])
    t = span_TXY(x, y)
    exact = span_mul(t, t.adjoint())
    monkeypatch.setattr(fg, "EXACT_PRODUCT_LIMIT", 0)
    sketched = span_mul(t, t.adjoint())
    assert span_eq(exact, sketched).equal


def test_span_eq_detects_strict_inclusion():
    e = np.eye(3)
    a = span_of([np.outer(e[0], e[0]), np.outer(e[1], e[1])])
    b = span_of([np.outer(e[0], e[0])])
    cmp = span_eq(a, b)
    assert not cmp.equal
    assert cmp.ranks == (2, 1, 2)


def test_corrupted_span_fails_with_rank_triple():
    g = FinAbGroup([4])
    x, y = g.whole(), g.subgroup([[2]])
    t = span_TXY(x, y)
    good = span_mul(t, t.adjoint())
    target = span_crossed(x, y)
    assert check_pair("hyz-left", good, target).passed
    corrupted = fg.OperatorSpan(target.basis[:-1], target.shape)
    res = check_pair("hyz-left", good, corrupted, ("Z4", "<2>"))
    assert not res.passed
    assert res.ranks == (8, 7, 8)


def test_splitting_and_field_operator():
    g = FinAbGroup([2, 2])
    x, y = g.whole(), g.subgroup([[1, 0]])
    c = find_splitting(x, y)
    assert c is not None and c.order == 2 and (c & y).order == 1
    phi = field_op([1.0, 2.0], x, y, c).entries
    assert phi.shape == (4, 2)
    assert np.array_equal(np.sort(phi.sum(axis=1)), [1.0, 1.0, 2.0, 2.0])
    z4 = FinAbGroup([4])
    assert find_splitting(z4.whole(), z4.subgroup([[2]])) is None
    with pytest.raises(ValueError):
        field_op([1.0, 1.0], z4.whole(), z4.subgroup([[2]]), z4.subgroup([[2]]))


@pytest.mark.parametrize("orders", [[2], [3], [4], [2, 2]])
def test_identity_suite_small_groups(orders):
    rep = run_suite(FinAbGroup(orders))
    assert rep.passed, rep.failures()[:3]
    assert set(rep.counts) == set(ALL_CHECKS)


def test_tuples_respect_containment():
    g = FinAbGroup([4])
    subs = g.all_subgroups()
    for x, y, z in tuples_for("nxyz", subs):
        assert z <= (x & y)
    for w, x, y, z in tuples_for("morita", subs):
        assert w <= y <= x and w <= z <= x


def z4_chain():
    g = FinAbGroup([4])
    binding = {"O": g.trivial(), "Y": g.subgroup([[2]]), "X": g.whole()}
    return Semilattice.from_sets({k: v.members_set for k, v in binding.items()}), binding


def test_product_law_and_overlap():
    s, binding = z4_chain()
    alg = assemble_C(s, binding)
    assert all(c.equal for _, _, c in product_law(alg))
    ov = grading_overlap(alg)
    assert ov["component_dims"] == {"O": 49, "X": 4, "Y": 18}
    assert ov["dim_of_sum"] == 49
    assert ov["excess"] == 22


def test_generation_on_two_subgroups_of_klein_group():
    g = FinAbGroup([2, 2])
    binding = {"A": g.subgroup([[1, 0]]), "G": g.whole()}
    s = Semilattice.from_sets({k: v.members_set for k, v in binding.items()})
    res = pauli_fierz_generation(s, binding)
    assert res.field_pairs == [("G", "A")]
    assert res.comparison.equal
    assert res.generated.dim == res.assembled.total.dim == 18


def test_generation_without_fields_stays_block_diagonal():
    g = FinAbGroup([4])
    binding = {"Y": g.subgroup([[2]]), "X": g.whole()}
    s = Semilattice.from_sets({k: v.members_set for k, v in binding.items()})
    res = pauli_fierz_generation(s, binding)
    assert res.field_pairs == [] and res.skipped_pairs == [("X", "Y")]
    # every seed is a convolution on each block, so the algebra is commutative: 4 + 2
    assert res.generated.dim == 6
    assert not res.comparison.equal
