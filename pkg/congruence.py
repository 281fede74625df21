# congruence.py
from __future__ import annotations

import logging
import re
from collections import deque
from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

import tuning_knobs as cfg
from algebra_core import (
    FiniteAlgebra,
    Homomorphism,
    _guard,
    _require,
    quotient,
)
from distributive_lattice import (
    FiniteLattice,
    V_LATTICE,
    is_distributive,
    lattice_isomorphic,
)

log = logging.getLogger(__name__)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True

    def classes(self) -> List[int]:
        return [self.find(i) for i in range(len(self.parent))]


def _blocks_from_classes(classes: Sequence[int]) -> Tuple[Tuple[int, ...], ...]:
    grouped: Dict[int, List[int]] = {}
    for i, c in enumerate(classes):
        grouped.setdefault(int(c), []).append(i)
    return tuple(sorted(tuple(b) for b in grouped.values()))


@dataclass(frozen=True, eq=False)
class Congruence:
    algebra: FiniteAlgebra
    blocks: Tuple[Tuple[int, ...], ...]

    @classmethod
    def from_classes(cls, A: FiniteAlgebra, classes: Sequence[int]) -> "Congruence":
        _require(len(classes) == A.size, f"{A.name}: class vector has wrong length")
        return cls(A, _blocks_from_classes(classes))

    @classmethod
    def from_blocks(cls, A: FiniteAlgebra, blocks: Iterable[Iterable[int]]) -> "Congruence":
        classes = [-1] * A.size
        for b, block in enumerate(blocks):
            for e in block:
                _require(0 <= e < A.size, f"{A.name}: element index {e} out of range")
                _require(classes[e] == -1, f"{A.name}: element {A.elements[e]} appears in two blocks")
                classes[e] = b
        for e, c in enumerate(classes):
            if c == -1:
                classes[e] = len(classes) + e
        return cls.from_classes(A, classes)

    @classmethod
    def identity(cls, A: FiniteAlgebra) -> "Congruence":
        return cls(A, tuple((i,) for i in range(A.size)))

    @classmethod
    def total(cls, A: FiniteAlgebra) -> "Congruence":
        return cls(A, (tuple(range(A.size)),) if A.size else ())

    @cached_property
    def classes(self) -> np.ndarray:
        """Block number of every element (blocks in canonical order)."""
        out = np.zeros(self.algebra.size, dtype=np.int64)
        for b, block in enumerate(self.blocks):
            out[list(block)] = b
        out.flags.writeable = False
        return out

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    @property
    def is_identity(self) -> bool:
        return self.num_blocks == self.algebra.size

    @property
    def is_total(self) -> bool:
        return self.num_blocks <= 1

    def related(self, a: int, b: int) -> bool:
        return bool(self.classes[a] == self.classes[b])

    def leq(self, other: "Congruence") -> bool:
        """Refinement: every block of self lies inside a block of other."""
        return all(len(set(other.classes[list(b)].tolist())) == 1 for b in self.blocks)

    def meet(self, other: "Congruence") -> "Congruence":
        codes = self.classes * (other.num_blocks + 1) + other.classes
        return Congruence.from_classes(self.algebra, codes.tolist())

    def join(self, other: "Congruence") -> "Congruence":
        uf = _UnionFind(self.algebra.size)
        for theta in (self, other):
            for block in theta.blocks:
                for e in block[1:]:
                    uf.union(block[0], e)
        return Congruence.from_classes(self.algebra, uf.classes())

    def is_compatible(self) -> bool:
        """Exhaustive check against every operation table."""
        cls = self.classes
        reps = [block[0] for block in self.blocks]
        for op in self.algebra.operations:
            if op.arity == 0:
                continue
            grid = np.ix_(*([np.asarray(reps)] * op.arity))
            q = cls[op.table[grid]]
            if not np.array_equal(cls[op.table], q[np.ix_(*([cls] * op.arity))]):
                return False
        return True

    def pairs(self) -> FrozenSet[Tuple[int, int]]:
        return frozenset((a, b) for block in self.blocks for a in block for b in block)

    def to_text(self) -> str:
        return "".join("(" + " ".join(self.algebra.elements[e] for e in block) + ")" for block in self.blocks)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Congruence):
            return NotImplemented
        return self.blocks == other.blocks and self.algebra == other.algebra

    def __hash__(self) -> int:
        return hash(self.blocks)

    def __repr__(self) -> str:
        return f"Congruence({self.algebra.name}: {self.to_text()})"


_BLOCK = re.compile(r"\(([^()]*)\)")


def parse_congruence(A: FiniteAlgebra, text: str) -> Congruence:
    """Parse the block form ``(0 x y z)(u v w)(t)(1)``; omitted elements stay singletons."""
    stripped = _BLOCK.sub("", text).strip()
    _require(not stripped, f"unparseable congruence text near {stripped!r}")
    blocks = [A.indices(m.group(1).split()) for m in _BLOCK.finditer(text)]
    theta = Congruence.from_blocks(A, blocks)
    _require(theta.is_compatible(), f"{theta.to_text()} is not a congruence of {A.name}")
    return theta


def kernel(h: Homomorphism) -> Congruence:
    return Congruence.from_classes(h.source, list(h.mapping))


def principal_congruence(A: FiniteAlgebra, a: int, b: int) -> Congruence:
    """Least congruence collapsing a and b, by closing merged pairs under unary translations."""
    uf = _UnionFind(A.size)
    pending: deque = deque()
    if uf.union(a, b):
        pending.append((a, b))
    ops = [op for op in A.operations if op.arity > 0]
    while pending:
        x, y = pending.popleft()
        for op in ops:
            for pos in range(op.arity):
                left = np.take(op.table, x, axis=pos).ravel().tolist()
                right = np.take(op.table, y, axis=pos).ravel().tolist()
                for s, t in zip(left, right):
                    if uf.union(s, t):
                        pending.append((s, t))
    return Congruence.from_classes(A, uf.classes())


@dataclass(frozen=True, eq=False)
class ConLattice:
    algebra: FiniteAlgebra
    congruences: Tuple[Congruence, ...]
    lattice: FiniteLattice

    @property
    def size(self) -> int:
        return len(self.congruences)

    def __len__(self) -> int:
        return len(self.congruences)

    @property
    def bottom(self) -> Congruence:
        return self.congruences[0]

    @property
    def top(self) -> Congruence:
        return self.congruences[-1]

    @cached_property
    def _position(self) -> Dict[Congruence, int]:
        return {theta: i for i, theta in enumerate(self.congruences)}

    def index(self, theta: Congruence) -> int:
        _require(theta in self._position, f"{theta.to_text()} is not a congruence of {self.algebra.name}")
        return self._position[theta]

    def meet(self, a: Congruence, b: Congruence) -> Congruence:
        return self.congruences[self.lattice.meet[self.index(a), self.index(b)]]

    def join(self, a: Congruence, b: Congruence) -> Congruence:
        return self.congruences[self.lattice.join[self.index(a), self.index(b)]]

    def covers(self) -> List[Tuple[Congruence, Congruence]]:
        return [(self.congruences[i], self.congruences[j]) for i, j in self.lattice.cover_pairs()]

    def upper_covers(self, theta: Congruence) -> Tuple[Congruence, ...]:
        return tuple(self.congruences[j] for j in self.lattice.upper_covers(self.index(theta)))


@lru_cache(maxsize=256)
def _congruence_lattice(A: FiniteAlgebra, limit: int) -> ConLattice:
    n = A.size
    principals = []
    seen = set()
    for a in range(n):
        for b in range(a + 1, n):
            theta = principal_congruence(A, a, b)
            if theta not in seen:
                seen.add(theta)
                principals.append(theta)
    found = {Congruence.identity(A)} | seen
    _guard(len(found) <= limit, f"{A.name}: more than {limit} congruences")
    queue = deque(found)
    while queue:
        theta = queue.popleft()
        for pi in principals:
            joined = theta.join(pi)
            if joined not in found:
                found.add(joined)
                _guard(len(found) <= limit, f"{A.name}: more than {limit} congruences")
                queue.append(joined)

    ordered = tuple(sorted(found, key=lambda c: (-c.num_blocks, c.blocks)))
    m = len(ordered)
    leq = np.zeros((m, m), dtype=bool)
    for i, x in enumerate(ordered):
        for j, y in enumerate(ordered):
            leq[i, j] = x.leq(y)
    lattice = FiniteLattice.from_leq(tuple(c.to_text() for c in ordered), leq)
    log.debug("%s: %d principal, %d total congruences", A.name, len(principals), m)
    return ConLattice(A, ordered, lattice)


def congruence_lattice(A: FiniteAlgebra, guard: Optional[int] = None) -> ConLattice:
    """All congruences, identity first and total last, ordered by refinement."""
    limit = cfg.MAX_CONGRUENCES if guard is None else guard
    return _congruence_lattice(A, limit)


def monolith(A: FiniteAlgebra) -> Optional[Congruence]:
    _require(A.size >= 2, f"{A.name}: monolith needs at least two elements")
    L = congruence_lattice(A)
    atoms = L.upper_covers(L.bottom)
    return atoms[0] if len(atoms) == 1 else None


class SIClass(str, Enum):
    SIMPLE = "simple"
    SUBDIRECTLY_IRREDUCIBLE = "subdirectly-irreducible-not-simple"
    NOT_SI = "not-SI"


def classify(A: FiniteAlgebra) -> SIClass:
    _require(A.size >= 2, f"{A.name}: classification needs at least two elements")
    if len(congruence_lattice(A)) == 2:
        return SIClass.SIMPLE
    return SIClass.SUBDIRECTLY_IRREDUCIBLE if monolith(A) is not None else SIClass.NOT_SI


def meet_irreducible_congruences(L: ConLattice) -> Tuple[Congruence, ...]:
    return tuple(L.congruences[i] for i in L.lattice.meet_irreducibles())


def upset_isomorphic_to_quotient_con(A: FiniteAlgebra, theta: Congruence) -> bool:
    L = congruence_lattice(A)
    up = L.lattice.upset_sublattice(L.index(theta))
    Q, _ = quotient(A, theta)
    return lattice_isomorphic(up, congruence_lattice(Q).lattice)


def shape_tag(L) -> str:
    """Short report label for a lattice: V, chain-k, boolean-k, distributive or non-distributive."""
    lat = L.lattice if hasattr(L, "lattice") else L
    if lat.is_chain():
        return f"chain-{lat.size}"
    if is_distributive(lat) is not None:
        return "non-distributive"
    if lattice_isomorphic(lat, V_LATTICE):
        return "V"
    mi = lat.meet_irreducibles()
    if 2 ** len(mi) == lat.size:
        return f"boolean-{len(mi)}"
    return "distributive"
