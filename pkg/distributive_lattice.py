# distributive_lattice.py
"""
Finite posets, finite lattices and the meet-irreducible duality for finite
distributive lattices.

Convention for ``materialize``: the lattice built from a poset P has the
up-closed subsets of P as elements, ordered by reverse inclusion. The
principal filter of x is then the meet-irreducible element matching x, the
bottom is P itself and the top is the empty filter.
"""
from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from networkx.algorithms.isomorphism import DiGraphMatcher
from pydantic import BaseModel, Field

import tuning_knobs as cfg
from algebra_core import FiniteAlgebra, _guard, _require

log = logging.getLogger(__name__)


def _frozen_bool(arr: Any) -> np.ndarray:
    out = np.array(arr, dtype=bool)
    out.flags.writeable = False
    return out


def _frozen_int(arr: Any) -> np.ndarray:
    out = np.array(arr, dtype=np.int64)
    out.flags.writeable = False
    return out


def _covers_from_leq(leq: np.ndarray) -> np.ndarray:
    lt = leq & ~np.eye(len(leq), dtype=bool)
    lt_int = lt.astype(np.int64)
    return lt & ~((lt_int @ lt_int) > 0)


def _order_violations(elements: Sequence[str], leq: np.ndarray) -> List[str]:
    out: List[str] = []
    if not leq.diagonal().all():
        out.append("relation is not reflexive")
    both = leq & leq.T & ~np.eye(len(leq), dtype=bool)
    for i, j in np.argwhere(both):
        if i < j:
            out.append(f"not antisymmetric: {elements[i]} <= {elements[j]} <= {elements[i]}")
    li = leq.astype(np.int64)
    if (((li @ li) > 0) & ~leq).any():
        out.append("relation is not transitive")
    return out


# ----------------------------
# Posets
# ----------------------------
@dataclass(frozen=True, eq=False)
class Poset:
    elements: Tuple[str, ...]
    leq: np.ndarray

    @classmethod
    def from_relation(cls, elements: Sequence[str], pairs: Iterable[Tuple[str, str]]) -> "Poset":
        """Reflexive-transitive closure of a generating relation (lo, hi)."""
        elements = tuple(elements)
        _require(len(set(elements)) == len(elements), f"duplicate poset labels in {list(elements)}")
        index = {e: i for i, e in enumerate(elements)}
        g = nx.DiGraph()
        g.add_nodes_from(range(len(elements)))
        for lo, hi in pairs:
            _require(lo in index and hi in index, f"order pair ({lo}, {hi}) names an unknown element")
            g.add_edge(index[lo], index[hi])
        closure = nx.transitive_closure(g, reflexive=True)
        leq = np.zeros((len(elements), len(elements)), dtype=bool)
        for i, j in closure.edges():
            leq[i, j] = True
        np.fill_diagonal(leq, True)
        violations = _order_violations(elements, leq)
        _require(not violations, "; ".join(violations))
        return cls(elements, _frozen_bool(leq))

    @classmethod
    def from_matrix(cls, elements: Sequence[str], leq: Any) -> "Poset":
        arr = np.array(leq, dtype=bool)
        _require(arr.shape == (len(elements), len(elements)), "order matrix does not match the element list")
        violations = _order_violations(tuple(elements), arr)
        _require(not violations, "; ".join(violations))
        return cls(tuple(elements), _frozen_bool(arr))

    @property
    def size(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def index(self, label: Union[str, int]) -> int:
        if isinstance(label, (int, np.integer)):
            _require(0 <= int(label) < self.size, f"poset index {label} out of range")
            return int(label)
        _require(label in self.elements, f"unknown poset element {label!r}")
        return self.elements.index(label)

    @cached_property
    def lt(self) -> np.ndarray:
        return _frozen_bool(self.leq & ~np.eye(self.size, dtype=bool))

    @cached_property
    def covers(self) -> np.ndarray:
        return _frozen_bool(_covers_from_leq(np.asarray(self.leq)))

    def upset(self, i: int) -> Tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.leq[i]))

    def downset(self, i: int) -> Tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.leq[:, i]))

    def upper_covers(self, i: int) -> Tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.covers[i]))

    def lower_covers(self, i: int) -> Tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.covers[:, i]))

    def maximal(self) -> Tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(~self.lt.any(axis=1)))

    def minimal(self) -> Tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(~self.lt.any(axis=0)))

    def is_chain(self, subset: Iterable[int]) -> bool:
        idx = list(subset)
        block = self.leq[np.ix_(idx, idx)]
        return bool((block | block.T).all())

    def is_antichain(self, subset: Iterable[int]) -> bool:
        idx = list(subset)
        return not self.lt[np.ix_(idx, idx)].any()

    def hasse_graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(self.size))
        g.add_edges_from((int(i), int(j)) for i, j in np.argwhere(self.covers))
        return g

    def topological_order(self) -> Tuple[int, ...]:
        """Linear extension, smallest available index first."""
        return tuple(nx.lexicographical_topological_sort(self.hasse_graph()))

    def subposet(self, subset: Sequence[int]) -> "Poset":
        idx = list(subset)
        return Poset(tuple(self.elements[i] for i in idx), _frozen_bool(self.leq[np.ix_(idx, idx)]))

    def dual(self) -> "Poset":
        return Poset(self.elements, _frozen_bool(self.leq.T))

    def cover_pairs(self) -> List[Tuple[str, str]]:
        return [(self.elements[i], self.elements[j]) for i, j in np.argwhere(self.covers)]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Poset):
            return NotImplemented
        return self.elements == other.elements and np.array_equal(self.leq, other.leq)

    def __hash__(self) -> int:
        return hash((self.elements, self.leq.tobytes()))

    def __repr__(self) -> str:
        return f"Poset({list(self.elements)}, covers={self.cover_pairs()})"


class PosetFile(BaseModel):
    elements: List[str]
    leq: List[Tuple[str, str]] = Field(default_factory=list)


def poset_from_file(spec: Union[dict, PosetFile]) -> Poset:
    if not isinstance(spec, PosetFile):
        spec = PosetFile.model_validate(spec)
    return Poset.from_relation(spec.elements, spec.leq)


def load_poset(path: Union[str, Path]) -> Poset:
    return poset_from_file(json.loads(Path(path).read_text()))


def poset_to_json(P: Poset) -> Dict[str, Any]:
    return {"elements": list(P.elements), "leq": [list(p) for p in P.cover_pairs()]}


def poset_isomorphic(P: Poset, Q: Poset) -> bool:
    if P.size != Q.size or int(P.leq.sum()) != int(Q.leq.sum()):
        return False
    return DiGraphMatcher(P.hasse_graph(), Q.hasse_graph()).is_isomorphic()


# ----------------------------
# Lattices
# ----------------------------
@dataclass(frozen=True, eq=False)
class FiniteLattice:
    elements: Tuple[str, ...]
    leq: np.ndarray
    meet: np.ndarray
    join: np.ndarray

    @classmethod
    def from_leq(cls, elements: Sequence[str], leq: Any) -> "FiniteLattice":
        arr = np.array(leq, dtype=bool)
        n = len(elements)
        violations = _order_violations(tuple(elements), arr)
        _require(not violations, "; ".join(violations))
        meet = np.zeros((n, n), dtype=np.int64)
        join = np.zeros((n, n), dtype=np.int64)
        for i in range(n):
            for j in range(i, n):
                lower = arr[:, i] & arr[:, j]
                glb = np.flatnonzero(lower & arr[lower].all(axis=0))
                upper = arr[i, :] & arr[j, :]
                lub = np.flatnonzero(upper & arr[:, upper].all(axis=1))
                _require(
                    len(glb) == 1 and len(lub) == 1,
                    f"not a lattice: {elements[i]} and {elements[j]} lack a unique meet or join",
                )
                meet[i, j] = meet[j, i] = glb[0]
                join[i, j] = join[j, i] = lub[0]
        return cls(tuple(elements), _frozen_bool(arr), _frozen_int(meet), _frozen_int(join))

    @classmethod
    def from_algebra(cls, A: FiniteAlgebra) -> "FiniteLattice":
        meet, join = A.op("meet"), A.op("join")
        _require(meet.arity == 2 and join.arity == 2, f"{A.name}: meet and join must be binary")
        idx = np.arange(A.size)
        leq = meet.table == idx[:, None]
        _require(
            np.array_equal(leq, join.table == idx[None, :]),
            f"{A.name}: meet and join tables induce different orders",
        )
        L = cls.from_leq(A.elements, leq)
        _require(
            np.array_equal(L.meet, meet.table) and np.array_equal(L.join, join.table),
            f"{A.name}: meet/join tables are inconsistent with the induced order",
        )
        return L

    @property
    def size(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def bottom(self) -> int:
        return int(np.flatnonzero(self.leq.all(axis=1))[0])

    @property
    def top(self) -> int:
        return int(np.flatnonzero(self.leq.all(axis=0))[0])

    @cached_property
    def covers(self) -> np.ndarray:
        return _frozen_bool(_covers_from_leq(np.asarray(self.leq)))

    def upper_covers(self, i: int) -> Tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.covers[i]))

    def cover_pairs(self) -> List[Tuple[int, int]]:
        return [(int(i), int(j)) for i, j in np.argwhere(self.covers)]

    def meet_irreducibles(self) -> Tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.covers.sum(axis=1) == 1))

    def is_chain(self) -> bool:
        return bool((self.leq | self.leq.T).all())

    def upset_sublattice(self, i: int) -> "FiniteLattice":
        """The interval from element i to the top."""
        idx = np.flatnonzero(self.leq[i])
        pos = np.full(self.size, -1, dtype=np.int64)
        pos[idx] = np.arange(len(idx))
        grid = np.ix_(idx, idx)
        return FiniteLattice(
            tuple(self.elements[j] for j in idx),
            _frozen_bool(self.leq[grid]),
            _frozen_int(pos[self.meet[grid]]),
            _frozen_int(pos[self.join[grid]]),
        )

    def hasse_graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(self.size))
        g.add_edges_from(self.cover_pairs())
        return g

    def as_poset(self) -> Poset:
        return Poset(self.elements, self.leq)

    def __repr__(self) -> str:
        return f"FiniteLattice(n={self.size})"


@dataclass(frozen=True, eq=False)
class FinDistLattice:
    mi_poset: Poset
    lattice: FiniteLattice
    filters: Tuple[FrozenSet[int], ...]

    def embedding(self, x: int) -> int:
        """Lattice index of the principal filter of poset element x."""
        return self.filters.index(frozenset(self.mi_poset.upset(x)))


LatticeLike = Union[FiniteLattice, FinDistLattice, FiniteAlgebra, Any]


def as_lattice(L: LatticeLike) -> FiniteLattice:
    if isinstance(L, FiniteLattice):
        return L
    if isinstance(L, FiniteAlgebra):
        return FiniteLattice.from_algebra(L)
    inner = getattr(L, "lattice", None)
    _require(isinstance(inner, FiniteLattice), f"not a lattice: {L!r}")
    return inner


def lattice_tables_from_order(
    elements: Sequence[str], pairs: Iterable[Tuple[str, str]]
) -> Tuple[np.ndarray, np.ndarray]:
    L = FiniteLattice.from_leq(elements, Poset.from_relation(elements, pairs).leq)
    return np.array(L.meet), np.array(L.join)


def materialize(P: Poset, guard: Optional[int] = None) -> FinDistLattice:
    limit = cfg.MAX_LATTICE_SIZE if guard is None else guard
    lt = np.asarray(P.lt)
    seen = {frozenset()}
    queue: deque = deque([frozenset()])
    while queue:
        up = queue.popleft()
        for x in range(P.size):
            if x in up:
                continue
            # x may join once everything strictly above it is present
            if all(y in up for y in np.flatnonzero(lt[x])):
                bigger = up | {x}
                if bigger not in seen:
                    seen.add(bigger)
                    _guard(len(seen) <= limit, f"lattice of order filters exceeds guard {limit}")
                    queue.append(bigger)
    filters = sorted(seen, key=lambda s: (-len(s), sorted(s)))
    position = {f: i for i, f in enumerate(filters)}
    n = len(filters)
    leq = np.zeros((n, n), dtype=bool)
    meet = np.zeros((n, n), dtype=np.int64)
    join = np.zeros((n, n), dtype=np.int64)
    for i, a in enumerate(filters):
        for j, b in enumerate(filters):
            leq[i, j] = a >= b
            meet[i, j] = position[a | b]
            join[i, j] = position[a & b]
    labels = tuple("{" + ",".join(P.elements[x] for x in sorted(f)) + "}" for f in filters)
    log.debug("materialized %d-element poset into %d filters", P.size, n)
    lattice = FiniteLattice(labels, _frozen_bool(leq), _frozen_int(meet), _frozen_int(join))
    return FinDistLattice(P, lattice, tuple(filters))


def meet_irreducibles_of(L: LatticeLike) -> Poset:
    lat = as_lattice(L)
    return lat.as_poset().subposet(lat.meet_irreducibles())


def is_distributive(L: LatticeLike) -> Optional[Tuple[int, int, int]]:
    """None when distributive, else the first (x, y, z) with x∧(y∨z) ≠ (x∧y)∨(x∧z)."""
    lat = as_lattice(L)
    meet, join = np.asarray(lat.meet), np.asarray(lat.join)
    for x in range(lat.size):
        mx = meet[x]
        lhs = mx[join]
        rhs = join[mx[:, None], mx[None, :]]
        bad = np.argwhere(lhs != rhs)
        if len(bad):
            y, z = bad[0]
            return x, int(y), int(z)
    return None


def lattice_isomorphic(L1: LatticeLike, L2: LatticeLike) -> bool:
    a, b = as_lattice(L1), as_lattice(L2)
    if a.size != b.size or len(a.cover_pairs()) != len(b.cover_pairs()):
        return False
    if is_distributive(a) is None and is_distributive(b) is None:
        return poset_isomorphic(meet_irreducibles_of(a), meet_irreducibles_of(b))
    return DiGraphMatcher(a.hasse_graph(), b.hasse_graph()).is_isomorphic()


# ----------------------------
# Shape predicates
# ----------------------------
@dataclass(frozen=True)
class DoubleStarReport:
    holds: bool
    N: Tuple[str, ...]
    D: Tuple[str, ...]
    reason: Optional[str] = None


def check_doublestar(P: Poset) -> DoubleStarReport:
    D = P.maximal()
    N = tuple(i for i in range(P.size) if i not in D)
    labels_N = tuple(P.elements[i] for i in N)
    labels_D = tuple(P.elements[i] for i in D)
    if not P.is_antichain(N):
        lo, hi = next((P.elements[i], P.elements[j]) for i, j in np.argwhere(P.lt) if i in N and j in N)
        return DoubleStarReport(False, labels_N, labels_D, f"non-maximal elements {lo} < {hi} are comparable")
    for n in N:
        above = [P.elements[d] for d in D if P.lt[n, d]]
        if len(above) != 2:
            return DoubleStarReport(
                False, labels_N, labels_D, f"{P.elements[n]} lies below {len(above)} maximal elements {above}"
            )
    return DoubleStarReport(True, labels_N, labels_D)


def upset_chain_height(P: Poset) -> Optional[int]:
    """Largest |↑x| when every up-set is a chain (0 for the empty poset), else None."""
    height = 0
    for x in range(P.size):
        up = P.upset(x)
        if not P.is_chain(up):
            return None
        height = max(height, len(up))
    return height


def check_chain_condition(P: Poset, n: int) -> bool:
    height = upset_chain_height(P)
    return height is not None and height <= n


# the five-element lattice with one atom below two coatoms
V_POSET = Poset.from_relation(("n", "d", "e"), [("n", "d"), ("n", "e")])
V_LATTICE = materialize(V_POSET).lattice
