"""Finite meet-semilattices given by an explicit meet table.

Elements are string ids carrying an integer dimension label. The order is
recovered from the table: ``a <= b`` iff ``meet(a, b) == a``.
"""

from __future__ import annotations

from itertools import product
from typing import Iterable, Mapping


class SemilatticeError(ValueError):
    """Raised when a table is not a meet-semilattice or an id is unknown."""


class Semilattice:
    """Immutable finite meet-semilattice.

    Parameters
    ----------
    dims : mapping id -> nonnegative int
    meet : mapping (a, b) -> id, total over all ordered pairs
    origin : optional mapping id -> id used by quotients to remember which
        element of the parent lattice each element came from
    """

    def __init__(self, dims: Mapping[str, int], meet: Mapping[tuple[str, str], str],
                 origin: Mapping[str, str] | None = None):
        self._ids = tuple(sorted(dims))
        self._dims = {k: int(dims[k]) for k in self._ids}
        self._meet = {}
        for a, b in product(self._ids, repeat=2):
            if (a, b) not in meet:
                raise SemilatticeError(f"meet table missing entry ({a}, {b})")
            m = meet[(a, b)]
            if m not in self._dims:
                raise SemilatticeError(f"meet({a}, {b}) = {m} is not an element")
            self._meet[(a, b)] = m
        self.origin = dict(origin) if origin else {k: k for k in self._ids}
        self._check()
        self._least = self._find_least()

    def _check(self):
        ids, m = self._ids, self._meet
        for a in ids:
            if self._dims[a] < 0:
                raise SemilatticeError(f"negative dimension for {a}")
            if m[(a, a)] != a:
                raise SemilatticeError(f"meet not idempotent at ({a}, {a})")
        for a, b in product(ids, repeat=2):
            if m[(a, b)] != m[(b, a)]:
                raise SemilatticeError(f"meet not commutative at ({a}, {b})")
        for a, b, c in product(ids, repeat=3):
            if m[(a, m[(b, c)])] != m[(m[(a, b)], c)]:
                raise SemilatticeError(f"meet not associative at ({a}, {b}, {c})")
        for a, b in product(ids, repeat=2):
            if m[(a, b)] == a and self._dims[a] > self._dims[b]:
                raise SemilatticeError(f"dimension not monotone: {a} <= {b}")

    def _find_least(self):
        for a in self._ids:
            if all(self._meet[(a, x)] == a for x in self._ids):
                return a
        return None

    # construction helpers

    @classmethod
    def from_sets(cls, sets: Mapping[str, Iterable]) -> "Semilattice":
        """Lattice of subsets ordered by inclusion; dims are set sizes.

        The family must be closed under intersection.
        """
        fs = {k: frozenset(v) for k, v in sets.items()}
        back = {}
        for k, v in fs.items():
            if v in back:
                raise SemilatticeError(f"elements {back[v]} and {k} are the same set")
            back[v] = k
        meet = {}
        for a, b in product(fs, repeat=2):
            inter = fs[a] & fs[b]
            if inter not in back:
                raise SemilatticeError(
                    f"intersection of {a} and {b} is {sorted(inter)}, not an element")
            meet[(a, b)] = back[inter]
        return cls({k: len(v) for k, v in fs.items()}, meet)

    @classmethod
    def chain(cls, ids: list[str], dims: list[int] | None = None) -> "Semilattice":
        """Totally ordered lattice ids[0] < ids[1] < ..."""
        dims = list(range(len(ids))) if dims is None else dims
        rank = {x: i for i, x in enumerate(ids)}
        meet = {(a, b): (a if rank[a] <= rank[b] else b) for a, b in product(ids, repeat=2)}
        return cls(dict(zip(ids, dims)), meet)

    # basic queries

    @property
    def elements(self) -> tuple[str, ...]:
        return self._ids

    @property
    def least(self) -> str | None:
        return self._least

    @property
    def top(self) -> str | None:
        """Largest element, if there is one."""
        for a in self._ids:
            if all(self._meet[(x, a)] == x for x in self._ids):
                return a
        return None

    def dim(self, a: str) -> int:
        self._require(a)
        return self._dims[a]

    @property
    def dims(self) -> dict[str, int]:
        return dict(self._dims)

    def __contains__(self, a) -> bool:
        return a in self._dims

    def __len__(self) -> int:
        return len(self._ids)

    def __iter__(self):
        return iter(self._ids)

    def __repr__(self):
        return f"Semilattice({list(self._ids)})"

    def __eq__(self, other):
        if not isinstance(other, Semilattice):
            return NotImplemented
        return self._dims == other._dims and self._meet == other._meet

    def __hash__(self):
        return hash((self._ids, tuple(sorted(self._meet.items()))))

    def _require(self, *ids):
        for a in ids:
            if a not in self._dims:
                raise SemilatticeError(f"unknown element {a!r}")

    def meet(self, a: str, b: str) -> str:
        self._require(a, b)
        return self._meet[(a, b)]

    def leq(self, a: str, b: str) -> bool:
        return self.meet(a, b) == a

    def lt(self, a: str, b: str) -> bool:
        return a != b and self.leq(a, b)

    def meet_table(self) -> dict[tuple[str, str], str]:
        return dict(self._meet)

    # order-theoretic operations

    def atoms(self) -> list[str]:
        if self._least is None:
            raise SemilatticeError("atoms need a least element")
        return self.covers(self._least)

    def covers(self, x: str) -> list[str]:
        """Minimal elements strictly above x."""
        self._require(x)
        above = [y for y in self._ids if self.lt(x, y)]
        return [y for y in above if not any(self.lt(z, y) for z in above)]

    def _sub(self, keep: list[str]) -> "Semilattice":
        meet = {(a, b): self._meet[(a, b)] for a, b in product(keep, repeat=2)}
        return Semilattice({k: self._dims[k] for k in keep}, meet,
                           {k: self.origin[k] for k in keep})

    def filter_geq(self, x: str) -> "Semilattice":
        self._require(x)
        return self._sub([y for y in self._ids if self.leq(x, y)])

    def ideal_leq(self, x: str) -> "Semilattice":
        self._require(x)
        return self._sub([y for y in self._ids if self.leq(y, x)])

    def quotient(self, x: str) -> "Semilattice":
        """The lattice {E/x : E >= x} with dim(E/x) = dim(E) - dim(x).

        The image of x is named "O" and other images "E/x"; dividing by the
        least element keeps the names. ``origin`` sends each new id back to
        the corresponding element of the root lattice.
        """
        return self.quotient_map(x)[0]

    def quotient_map(self, x: str) -> tuple["Semilattice", dict[str, str]]:
        """Quotient together with the renaming {E: name of E/x}."""
        self._require(x)
        up = [y for y in self._ids if self.leq(x, y)]
        if x == self._least:
            name = {y: y for y in up}
        else:
            name = {y: ("O" if y == x else f"{y}/{x}") for y in up}
        meet = {(name[a], name[b]): name[self._meet[(a, b)]] for a, b in product(up, repeat=2)}
        dims = {name[y]: self._dims[y] - self._dims[x] for y in up}
        return Semilattice(dims, meet, {name[y]: self.origin[y] for y in up}), name

    def to_json(self) -> dict:
        return {
            "elements": {k: self._dims[k] for k in self._ids},
            "meet": [[a, b, self._meet[(a, b)]] for a, b in product(self._ids, repeat=2)],
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "Semilattice":
        meet = {}
        for row in doc["meet"]:
            a, b, c = row
            meet[(a, b)] = c
        return cls(doc["elements"], meet)
