# algebra_core.py
"""
Finite algebras as operation tables.

Elements are indexed 0..n-1 internally and carry labels only at the I/O
boundary. An operation of arity k is a read-only numpy array of shape (n,)*k
(row-major, so ``table.ravel()`` is the flattened n**k table); constants are
arity-0 operations with a 0-d table.
"""
from __future__ import annotations

import itertools
import json
import logging
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import (
    TYPE_CHECKING,
    Any,
    Callable,
    Dict,
    FrozenSet,
    Iterable,
    List,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np
from pydantic import BaseModel, Field, ValidationError

import tuning_knobs as cfg

if TYPE_CHECKING:
    from congruence import Congruence

log = logging.getLogger(__name__)


# ----------------------------
# Errors
# ----------------------------
class PreconditionError(ValueError):
    """An input violates the documented precondition of an operation."""


class GuardExceeded(RuntimeError):
    """A configured size or search guard would be exceeded."""


class RealizationError(RuntimeError):
    """A constructed object failed its own verification."""


class InvalidAlgebra(PreconditionError):
    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise PreconditionError(msg)


def _guard(cond: bool, msg: str) -> None:
    if not cond:
        raise GuardExceeded(msg)


def _frozen(arr: Any) -> np.ndarray:
    out = np.array(arr, dtype=np.int64)
    out.flags.writeable = False
    return out


def _grid(index: Sequence[int], arity: int):
    return np.ix_(*([np.asarray(index, dtype=np.int64)] * arity))


# ----------------------------
# Domain types
# ----------------------------
@dataclass(frozen=True, eq=False)
class Operation:
    name: str
    arity: int
    table: np.ndarray

    def __call__(self, *args: int) -> int:
        return int(self.table[tuple(args)])

    @property
    def flat(self) -> Tuple[int, ...]:
        return tuple(int(v) for v in self.table.ravel())


@dataclass(frozen=True, eq=False)
class FiniteAlgebra:
    name: str
    elements: Tuple[str, ...]
    operations: Tuple[Operation, ...]

    @classmethod
    def build(
        cls,
        name: str,
        elements: Sequence[str],
        operations: Sequence[Tuple[str, int, Any]],
        allow_empty: bool = False,
    ) -> "FiniteAlgebra":
        """Build from (name, arity, index table) triples, checking closure."""
        n = len(elements)
        violations: List[str] = []
        if n < 1 and not allow_empty:
            violations.append("an algebra needs at least one element")
        if len(set(elements)) != n:
            dupes = sorted({e for e in elements if list(elements).count(e) > 1})
            violations.append(f"duplicate element labels: {dupes}")
        ops: List[Operation] = []
        for op_name, arity, table in operations:
            arr = np.array(table, dtype=np.int64)
            if arr.shape != (n,) * arity:
                violations.append(
                    f"operation {op_name!r}: table shape {arr.shape} does not match arity {arity} over {n} elements"
                )
                continue
            if arr.size and (arr.min() < 0 or arr.max() >= n):
                violations.append(f"operation {op_name!r}: table entry out of range 0..{n - 1}")
                continue
            ops.append(Operation(op_name, arity, _frozen(arr)))
        names = [o[0] for o in operations]
        if len(set(names)) != len(names):
            violations.append(f"duplicate operation names: {names}")
        if violations:
            raise InvalidAlgebra(violations)
        return cls(name, tuple(elements), tuple(ops))

    @property
    def size(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    @cached_property
    def _label_index(self) -> Dict[str, int]:
        return {label: i for i, label in enumerate(self.elements)}

    def index(self, label: Union[str, int]) -> int:
        if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
            _require(0 <= int(label) < self.size, f"{self.name}: element index {label} out of range")
            return int(label)
        _require(label in self._label_index, f"{self.name}: unknown element label {label!r}")
        return self._label_index[label]

    def indices(self, labels: Iterable[Union[str, int]]) -> Tuple[int, ...]:
        return tuple(self.index(x) for x in labels)

    def labels(self, indices: Iterable[int]) -> Tuple[str, ...]:
        return tuple(self.elements[i] for i in indices)

    @property
    def signature(self) -> Tuple[Tuple[str, int], ...]:
        return tuple((o.name, o.arity) for o in self.operations)

    def op(self, name: str) -> Operation:
        for o in self.operations:
            if o.name == name:
                return o
        raise PreconditionError(f"{self.name}: no operation named {name!r}")

    @cached_property
    def encoding(self) -> Tuple[Any, ...]:
        """Canonical table encoding (labels excluded)."""
        return (self.size,) + tuple((o.name, o.arity, o.flat) for o in self.operations)

    def renamed(self, name: str) -> "FiniteAlgebra":
        return FiniteAlgebra(name, self.elements, self.operations)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteAlgebra):
            return NotImplemented
        return self.elements == other.elements and self.encoding == other.encoding

    def __hash__(self) -> int:
        return hash((self.elements, self.encoding))

    def __repr__(self) -> str:
        return f"FiniteAlgebra({self.name!r}, n={self.size}, signature={self.signature})"


@dataclass(frozen=True, eq=False)
class Homomorphism:
    source: FiniteAlgebra
    target: FiniteAlgebra
    mapping: Tuple[int, ...]

    def __call__(self, i: int) -> int:
        return self.mapping[i]

    @cached_property
    def array(self) -> np.ndarray:
        return _frozen(self.mapping)

    def is_surjective(self) -> bool:
        return len(set(self.mapping)) == self.target.size

    def is_injective(self) -> bool:
        return len(set(self.mapping)) == len(self.mapping)

    def then(self, after: "Homomorphism") -> "Homomorphism":
        """The composite ``after ∘ self``."""
        _require(
            self.target == after.source,
            f"cannot compose {self.source.name}->{self.target.name} with {after.source.name}->{after.target.name}",
        )
        return Homomorphism(self.source, after.target, tuple(after.mapping[v] for v in self.mapping))

    def as_labels(self) -> Dict[str, str]:
        return {self.source.elements[i]: self.target.elements[v] for i, v in enumerate(self.mapping)}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Homomorphism):
            return NotImplemented
        return (self.mapping, self.source, self.target) == (other.mapping, other.source, other.target)

    def __hash__(self) -> int:
        return hash(self.mapping)

    def __repr__(self) -> str:
        return f"Homomorphism({self.source.name} -> {self.target.name}, {self.mapping})"


def identity_hom(A: FiniteAlgebra) -> Homomorphism:
    return Homomorphism(A, A, tuple(range(A.size)))


def same_signature(A: FiniteAlgebra, B: FiniteAlgebra) -> bool:
    return A.signature == B.signature


def is_homomorphism(h: Homomorphism) -> bool:
    """Exhaustive commutation check over every argument tuple."""
    A, B = h.source, h.target
    if not same_signature(A, B) or len(h.mapping) != A.size:
        return False
    m = h.array
    if m.size and (m.min() < 0 or m.max() >= B.size):
        return False
    for op_a, op_b in zip(A.operations, B.operations):
        if op_a.arity == 0:
            if int(m[int(op_a.table)]) != int(op_b.table):
                return False
            continue
        lhs = m[op_a.table]
        rhs = op_b.table[_grid(m, op_a.arity)]
        if not np.array_equal(lhs, rhs):
            return False
    return True


# ----------------------------
# File format
# ----------------------------
class OperationSpec(BaseModel):
    name: str
    arity: int = Field(ge=0)
    table: Any


class AlgebraFile(BaseModel):
    name: str
    elements: List[str]
    operations: List[OperationSpec] = Field(default_factory=list)
    # lattice shortcut: a generating order relation; meet/join are synthesized
    order: Optional[List[Tuple[str, str]]] = None
    congruence_distributive: bool = False


def _decode_table(spec: OperationSpec, label_index: Dict[str, int], n: int) -> Tuple[np.ndarray, List[str]]:
    errors: List[str] = []
    out = np.zeros((n,) * spec.arity, dtype=np.int64)

    def resolve(entry: Any, where: Tuple[int, ...]) -> int:
        if isinstance(entry, bool):
            errors.append(f"operation {spec.name!r}: malformed entry {entry!r} at {where}")
            return 0
        if isinstance(entry, int):
            if 0 <= entry < n:
                return entry
            errors.append(f"operation {spec.name!r}: index {entry} at {where} out of range for {n} elements")
            return 0
        if isinstance(entry, str):
            if entry in label_index:
                return label_index[entry]
            errors.append(f"operation {spec.name!r}: unknown element label {entry!r} at {where}")
            return 0
        errors.append(f"operation {spec.name!r}: malformed entry {entry!r} at {where}")
        return 0

    def walk(node: Any, prefix: Tuple[int, ...]) -> None:
        if len(prefix) == spec.arity:
            out[prefix] = resolve(node, prefix)
            return
        if not isinstance(node, list) or len(node) != n:
            got = f"a list of {len(node)}" if isinstance(node, list) else type(node).__name__
            errors.append(
                f"operation {spec.name!r}: malformed table dimensions at depth {len(prefix)} {prefix}: "
                f"expected a list of {n}, got {got}"
            )
            return
        for i, child in enumerate(node):
            walk(child, prefix + (i,))

    walk(spec.table, ())
    return out, errors


def _parse_algebra(raw: Union[dict, AlgebraFile]) -> Tuple[Optional[FiniteAlgebra], List[str]]:
    if isinstance(raw, AlgebraFile):
        spec = raw
    else:
        try:
            spec = AlgebraFile.model_validate(raw)
        except ValidationError as e:
            return None, [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()]

    violations: List[str] = []
    n = len(spec.elements)
    if n < 1:
        violations.append("an algebra needs at least one element")
    seen = set()
    for label in spec.elements:
        if label in seen:
            violations.append(f"duplicate element label {label!r}")
        seen.add(label)
    if violations:
        return None, violations

    label_index = {label: i for i, label in enumerate(spec.elements)}
    ops: List[Tuple[str, int, Any]] = []

    if spec.order is not None:
        from distributive_lattice import lattice_tables_from_order

        try:
            meet, join = lattice_tables_from_order(spec.elements, spec.order)
            ops.extend([("meet", 2, meet), ("join", 2, join)])
        except PreconditionError as e:
            violations.append(f"order: {e}")

    for op_spec in spec.operations:
        table, errors = _decode_table(op_spec, label_index, n)
        violations.extend(errors)
        ops.append((op_spec.name, op_spec.arity, table))

    names = [o[0] for o in ops]
    for name in sorted({x for x in names if names.count(x) > 1}):
        violations.append(f"duplicate operation name {name!r}")
    if violations:
        return None, violations
    return FiniteAlgebra.build(spec.name, spec.elements, ops), []


def algebra_violations(raw: Union[dict, AlgebraFile]) -> List[str]:
    return _parse_algebra(raw)[1]


def validate_algebra(raw: Union[dict, AlgebraFile]) -> FiniteAlgebra:
    algebra, violations = _parse_algebra(raw)
    if violations:
        raise InvalidAlgebra(violations)
    return algebra


def read_algebra_file(path: Union[str, Path]) -> AlgebraFile:
    return AlgebraFile.model_validate(json.loads(Path(path).read_text()))


def load_algebra(path: Union[str, Path]) -> FiniteAlgebra:
    return validate_algebra(read_algebra_file(path))


def algebra_to_json(A: FiniteAlgebra) -> Dict[str, Any]:
    labels = np.array(A.elements, dtype=object)
    return {
        "name": A.name,
        "elements": list(A.elements),
        "operations": [
            {
                "name": o.name,
                "arity": o.arity,
                "table": A.elements[int(o.table)] if o.arity == 0 else labels[o.table].tolist(),
            }
            for o in A.operations
        ],
    }


def dump_algebra(A: FiniteAlgebra, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(algebra_to_json(A), indent=cfg.JSON_INDENT) + "\n")


# ----------------------------
# Subalgebras
# ----------------------------
def _closure(A: FiniteAlgebra, seed: Iterable[int]) -> FrozenSet[int]:
    current = set(int(s) for s in seed)
    while True:
        produced = set()
        members = sorted(current)
        for op in A.operations:
            if op.arity == 0:
                produced.add(int(op.table))
            elif members:
                produced.update(np.unique(op.table[_grid(members, op.arity)]).tolist())
        produced -= current
        if not produced:
            return frozenset(current)
        current |= produced


def subalgebra_generated(A: FiniteAlgebra, seed: Iterable[Union[int, str]]) -> Tuple[int, ...]:
    seed_idx = A.indices(seed)
    _require(
        bool(seed_idx) or any(o.arity == 0 for o in A.operations),
        f"{A.name}: empty seed generates nothing in a signature without constants",
    )
    return tuple(sorted(_closure(A, seed_idx)))


def is_closed(A: FiniteAlgebra, subset: Iterable[int]) -> bool:
    s = frozenset(subset)
    return bool(s) and _closure(A, s) == s


def all_subalgebras(A: FiniteAlgebra, guard: Optional[int] = None) -> List[Tuple[int, ...]]:
    """Every nonempty closed subset, smallest first, then lexicographic."""
    limit = cfg.MAX_SUBALGEBRA_UNIVERSE if guard is None else guard
    _guard(A.size <= limit, f"{A.name}: subalgebra search over {A.size} elements exceeds guard {limit}")

    base = _closure(A, ())
    found = set()
    queue: deque = deque()
    starts = [base] if base else []
    starts += [_closure(A, base | {e}) for e in range(A.size)]
    for s in starts:
        if s not in found:
            found.add(s)
            queue.append(s)
    while queue:
        s = queue.popleft()
        for e in range(A.size):
            if e in s:
                continue
            t = _closure(A, s | {e})
            if t not in found:
                found.add(t)
                queue.append(t)
    log.debug("%s: %d subalgebras", A.name, len(found))
    return sorted((tuple(sorted(s)) for s in found), key=lambda s: (len(s), s))


def subalgebra(A: FiniteAlgebra, subset: Iterable[Union[int, str]]) -> Tuple[FiniteAlgebra, Homomorphism]:
    members = sorted(set(A.indices(subset)))
    _require(is_closed(A, members), f"{A.name}: {A.labels(members)} is not closed under the operations")
    position = np.full(A.size, -1, dtype=np.int64)
    position[members] = np.arange(len(members))
    ops = []
    for o in A.operations:
        if o.arity == 0:
            ops.append((o.name, 0, position[int(o.table)]))
        else:
            ops.append((o.name, o.arity, position[o.table[_grid(members, o.arity)]]))
    labels = A.labels(members)
    sub = FiniteAlgebra.build(f"{A.name}[{','.join(labels)}]", labels, ops)
    return sub, Homomorphism(sub, A, tuple(members))


def generators(A: FiniteAlgebra) -> Tuple[int, ...]:
    """A greedy generating sequence: each element not yet generated is added."""
    gens: List[int] = []
    span = _closure(A, ())
    for e in range(A.size):
        if e not in span:
            gens.append(e)
            span = _closure(A, span | {e})
    return tuple(gens)


# ----------------------------
# Quotients and products
# ----------------------------
def quotient(A: FiniteAlgebra, theta: "Congruence") -> Tuple[FiniteAlgebra, Homomorphism]:
    _require(theta.algebra == A, f"congruence belongs to {theta.algebra.name}, not {A.name}")
    cls = theta.classes
    reps = [block[0] for block in theta.blocks]
    ops = []
    for o in A.operations:
        if o.arity == 0:
            ops.append((o.name, 0, cls[int(o.table)]))
            continue
        q = cls[o.table[_grid(reps, o.arity)]]
        _require(
            np.array_equal(cls[o.table], q[_grid(cls, o.arity)]),
            f"{theta.to_text()} is not compatible with operation {o.name!r} of {A.name}",
        )
        ops.append((o.name, o.arity, q))
    labels = A.labels(reps)
    name = A.name if theta.is_identity else f"{A.name}/{theta.to_text()}"
    Q = FiniteAlgebra.build(name, labels, ops)
    return Q, Homomorphism(A, Q, tuple(int(c) for c in cls))


def direct_product(algebras: Sequence[FiniteAlgebra], guard: Optional[int] = None) -> FiniteAlgebra:
    _require(len(algebras) > 0, "direct product of an empty list")
    first = algebras[0]
    for other in algebras[1:]:
        _require(
            same_signature(first, other),
            f"signature mismatch: {first.name} {first.signature} vs {other.name} {other.signature}",
        )
    sizes = tuple(a.size for a in algebras)
    total = int(np.prod(sizes))
    limit = cfg.MAX_PRODUCT_SIZE if guard is None else guard
    _guard(total <= limit, f"direct product of size {total} exceeds guard {limit}")

    coords = np.array(list(itertools.product(*[range(s) for s in sizes])), dtype=np.int64).reshape(total, len(sizes))
    labels = [
        "(" + ",".join(a.elements[c] for a, c in zip(algebras, row)) + ")" for row in coords.tolist()
    ]
    ops = []
    for j, (op_name, arity) in enumerate(first.signature):
        if arity == 0:
            parts = tuple(int(a.operations[j].table) for a in algebras)
            ops.append((op_name, 0, int(np.ravel_multi_index(parts, sizes))))
            continue
        parts = tuple(
            a.operations[j].table[_grid(coords[:, i], arity)] for i, a in enumerate(algebras)
        )
        ops.append((op_name, arity, np.ravel_multi_index(parts, sizes)))
    name = " x ".join(a.name for a in algebras)
    return FiniteAlgebra.build(name, labels, ops)


# ----------------------------
# Homomorphism search
# ----------------------------
def _extend(A: FiniteAlgebra, B: FiniteAlgebra, h: np.ndarray, injective: bool) -> bool:
    """Propagate the partial map h over the subalgebra its domain generates.

    Mutates h; returns False on a conflict.
    """
    used = set(int(v) for v in h[h >= 0])
    while True:
        known = np.flatnonzero(h >= 0)
        changed = False
        for op_a, op_b in zip(A.operations, B.operations):
            if op_a.arity == 0:
                src, dst = [int(op_a.table)], [int(op_b.table)]
            elif known.size:
                src = op_a.table[_grid(known, op_a.arity)].ravel().tolist()
                dst = op_b.table[_grid(h[known], op_a.arity)].ravel().tolist()
            else:
                continue
            for v, w in zip(src, dst):
                cur = h[v]
                if cur < 0:
                    if injective and w in used:
                        return False
                    h[v] = w
                    used.add(w)
                    changed = True
                elif cur != w:
                    return False
        if not changed:
            return True


def _search_homs(
    A: FiniteAlgebra,
    B: FiniteAlgebra,
    candidates: Callable[[int], Sequence[int]],
    *,
    injective: bool,
    first_only: bool,
) -> List[Tuple[int, ...]]:
    gens = generators(A)
    space = 1
    for g in gens:
        space *= max(1, len(candidates(g)))
    _guard(
        space <= cfg.MAX_HOM_CANDIDATES,
        f"homomorphism search {A.name} -> {B.name} has {space} generator assignments (guard {cfg.MAX_HOM_CANDIDATES})",
    )
    start = np.full(A.size, -1, dtype=np.int64)
    if not _extend(A, B, start, injective):
        return []

    results: List[Tuple[int, ...]] = []

    def branch(h: np.ndarray, depth: int) -> None:
        if first_only and results:
            return
        if depth == len(gens):
            results.append(tuple(int(v) for v in h))
            return
        g = gens[depth]
        if h[g] >= 0:
            branch(h, depth + 1)
            return
        for w in candidates(g):
            trial = h.copy()
            trial[g] = w
            if injective and w in h:
                continue
            if _extend(A, B, trial, injective):
                branch(trial, depth + 1)

    branch(start, 0)
    return results


def enumerate_homs(A: FiniteAlgebra, B: FiniteAlgebra, surjective_only: bool = False) -> List[Homomorphism]:
    _require(same_signature(A, B), f"signature mismatch: {A.name} {A.signature} vs {B.name} {B.signature}")
    every = list(range(B.size))
    found = _search_homs(A, B, lambda g: every, injective=False, first_only=False)
    if surjective_only:
        found = [m for m in found if len(set(m)) == B.size]
    log.debug("%s -> %s: %d homomorphisms (surjective_only=%s)", A.name, B.name, len(found), surjective_only)
    return [Homomorphism(A, B, m) for m in sorted(found)]


def _profiles(A: FiniteAlgebra) -> List[Tuple[int, ...]]:
    """Per-element invariants: in-degree in each table and idempotence."""
    n = A.size
    cols = []
    diag_index = np.arange(n)
    for o in A.operations:
        cols.append(np.bincount(o.table.ravel(), minlength=n))
        if o.arity:
            cols.append((o.table[tuple([diag_index] * o.arity)] == diag_index).astype(np.int64))
    return [tuple(int(c[i]) for c in cols) for i in range(n)]


def are_isomorphic(A: FiniteAlgebra, B: FiniteAlgebra) -> Optional[Homomorphism]:
    if A.size != B.size or not same_signature(A, B):
        return None
    pa, pb = _profiles(A), _profiles(B)
    if sorted(pa) != sorted(pb):
        return None
    by_profile: Dict[Tuple[int, ...], List[int]] = {}
    for j, p in enumerate(pb):
        by_profile.setdefault(p, []).append(j)
    found = _search_homs(A, B, lambda g: by_profile[pa[g]], injective=True, first_only=True)
    if not found:
        return None
    return Homomorphism(A, B, found[0])
