# compatibility.py
"""
Binary relations E on a finite set B and linearly ordered families of
functions X -> B whose pairwise images are exactly E.

A family f_1 < ... < f_k is E-compatible when (f_i, f_j)[X] = E for all
i < j; it is strongly E-compatible when in addition no f_i is constant on the
classes of the intersection of the other kernels.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

import tuning_knobs as cfg
from algebra_core import Homomorphism, RealizationError, _guard, _require

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ERelation:
    base: Tuple[str, ...]
    pairs: FrozenSet[Tuple[int, int]]

    @classmethod
    def from_labels(cls, base: Sequence[str], pairs: Iterable[Tuple[str, str]]) -> "ERelation":
        base = tuple(base)
        _require(len(set(base)) == len(base), f"duplicate base labels in {list(base)}")
        index = {b: i for i, b in enumerate(base)}
        out = set()
        for a, b in pairs:
            _require(a in index and b in index, f"relation pair ({a}, {b}) is not over the base {list(base)}")
            out.add((index[a], index[b]))
        return cls(base, frozenset(out))

    @property
    def size(self) -> int:
        return len(self.base)

    @cached_property
    def matrix(self) -> np.ndarray:
        m = np.zeros((self.size, self.size), dtype=bool)
        for a, b in self.pairs:
            m[a, b] = True
        m.flags.writeable = False
        return m

    def sorted_pairs(self) -> List[Tuple[int, int]]:
        return sorted(self.pairs)

    def label_pairs(self) -> List[Tuple[str, str]]:
        return [(self.base[a], self.base[b]) for a, b in self.sorted_pairs()]

    def is_reflexive(self) -> bool:
        return bool(self.matrix.diagonal().all())

    def has_off_diagonal(self) -> bool:
        return any(a != b for a, b in self.pairs)

    def __contains__(self, pair: Tuple[int, int]) -> bool:
        return pair in self.pairs

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ERelation):
            return NotImplemented
        return self.base == other.base and self.pairs == other.pairs

    def __hash__(self) -> int:
        return hash((self.base, self.pairs))

    def __repr__(self) -> str:
        return "ERelation{" + ", ".join(f"({a},{b})" for a, b in self.label_pairs()) + "}"


def relation_of_pair(h0: Homomorphism, h1: Homomorphism) -> ERelation:
    _require(h0.source == h1.source, f"source mismatch: {h0.source.name} vs {h1.source.name}")
    _require(
        h0.target.elements == h1.target.elements,
        f"target carriers differ: {h0.target.name} vs {h1.target.name}",
    )
    return ERelation(h0.target.elements, frozenset(zip(h0.mapping, h1.mapping)))


# ----------------------------
# The xyz condition
# ----------------------------
@dataclass(frozen=True)
class XYZReport:
    status: str  # holds | fails | inapplicable
    witnesses: Dict[Tuple[int, int], Tuple[int, int, int]] = field(default_factory=dict)
    failing: Optional[Tuple[int, int]] = None

    @property
    def holds(self) -> bool:
        return self.status == "holds"


def _xyz_witness(M: np.ndarray, a: int, b: int) -> Optional[Tuple[int, int, int]]:
    refl = M.diagonal()
    xs = np.flatnonzero(refl & M[:, a] & M[:, b])
    ys = np.flatnonzero(refl & M[a, :] & M[:, b])
    zs = np.flatnonzero(refl & M[a, :] & M[b, :])
    for x in xs:
        for y in ys:
            if not M[x, y]:
                continue
            ok = zs[M[x, zs] & M[y, zs]]
            if len(ok):
                return int(x), int(y), int(ok[0])
    return None


def check_xyz(E: ERelation) -> XYZReport:
    """For every (a,b) in E look for x, y, z with (x,x),(y,y),(z,z),(x,y),(x,z),(y,z),
    (x,a),(x,b),(a,y),(y,b),(a,z),(b,z) all in E; least triple in index order."""
    if not E.has_off_diagonal():
        return XYZReport("inapplicable")
    M = np.asarray(E.matrix)
    witnesses: Dict[Tuple[int, int], Tuple[int, int, int]] = {}
    for a, b in E.sorted_pairs():
        w = _xyz_witness(M, a, b)
        if w is None:
            log.debug("xyz condition fails at (%s, %s)", E.base[a], E.base[b])
            return XYZReport("fails", witnesses, (a, b))
        witnesses[(a, b)] = w
    return XYZReport("holds", witnesses)


# ----------------------------
# Families
# ----------------------------
@dataclass(frozen=True, eq=False)
class CompatibleFamily:
    domain: Tuple[str, ...]
    base: Tuple[str, ...]
    functions: np.ndarray  # shape (k, |domain|), values index into base

    @property
    def size(self) -> int:
        return int(self.functions.shape[0])

    def __len__(self) -> int:
        return self.size

    def function(self, i: int) -> Tuple[int, ...]:
        return tuple(int(v) for v in self.functions[i])


def _half(v: int) -> str:
    return str(v // 2) if v % 2 == 0 else f"{v}/2"


def build_family(E: ERelation, k: int, guard: Optional[int] = None) -> CompatibleFamily:
    """Strongly E-compatible family of k functions on X = E x {(i,j) : i < j in H}.

    H = {1/2, 1, 3/2, ..., k, k+1/2} is stored doubled as 1..2k+1; function m
    sits at the doubled position 2m and reads x, a, y, b or z depending on
    whether 2m is below i, equal to i, strictly between, equal to j, or above j.
    """
    _require(k >= 1, f"family size must be positive, got {k}")
    report = check_xyz(E)
    _require(report.holds, f"xyz condition {report.status} for {E!r}" + (
        f" at ({E.base[report.failing[0]]},{E.base[report.failing[1]]})" if report.failing else ""
    ))
    top = 2 * k + 1
    U = [(i, j) for i in range(1, top + 1) for j in range(i + 1, top + 1)]
    limit = cfg.MAX_FAMILY_DOMAIN if guard is None else guard
    _guard(len(E.pairs) * len(U) <= limit, f"family domain {len(E.pairs) * len(U)} exceeds guard {limit}")

    rows = [(a, b, i, j) for a, b in E.sorted_pairs() for i, j in U]
    cols = np.array(rows, dtype=np.int64).reshape(-1, 4)
    a, b, i, j = cols.T
    wit = np.array([report.witnesses[(int(p), int(q))] for p, q in zip(a, b)], dtype=np.int64).reshape(-1, 3)
    x, y, z = wit.T

    functions = np.empty((k, len(rows)), dtype=np.int64)
    for m in range(1, k + 1):
        pos = 2 * m
        functions[m - 1] = np.select([pos < i, pos == i, pos < j, pos == j], [x, a, y, b], default=z)
    functions.flags.writeable = False

    domain = tuple(f"({E.base[p]},{E.base[q]},{_half(s)},{_half(t)})" for p, q, s, t in rows)
    family = CompatibleFamily(domain, E.base, functions)
    check = verify_compatible(family, E, strong=True)
    if not check.ok:
        raise RealizationError(f"constructed family failed verification: {check.counterexample}")
    log.debug("built family of %d functions on %d points", k, len(rows))
    return family


@dataclass(frozen=True)
class CompatibilityReport:
    ok: bool
    counterexample: Optional[str] = None


def verify_compatible(F: CompatibleFamily, E: ERelation, strong: bool = False) -> CompatibilityReport:
    _require(F.base == E.base, "family and relation are over different base sets")
    nb = len(E.base)
    wanted = {a * nb + b for a, b in E.pairs}
    fns = np.asarray(F.functions)
    for i in range(F.size):
        for j in range(i + 1, F.size):
            image = set(np.unique(fns[i] * nb + fns[j]).tolist())
            if image != wanted:
                missing = sorted(wanted - image)
                extra = sorted(image - wanted)
                if missing:
                    a, b = divmod(missing[0], nb)
                    return CompatibilityReport(False, f"(f{i + 1}, f{j + 1}) misses ({E.base[a]},{E.base[b]})")
                a, b = divmod(extra[0], nb)
                return CompatibilityReport(False, f"(f{i + 1}, f{j + 1}) hits ({E.base[a]},{E.base[b]}) outside E")
    if strong:
        for i in range(F.size):
            others = np.delete(fns, i, axis=0)
            if others.shape[0]:
                _, groups = np.unique(others.T, axis=0, return_inverse=True)
                groups = np.asarray(groups).ravel()
            else:
                groups = np.zeros(fns.shape[1], dtype=np.int64)
            # f_i must split some class of the intersected kernels
            split = len(np.unique(groups * nb + fns[i])) > len(np.unique(groups))
            if not split:
                return CompatibilityReport(
                    False, f"kernel of f{i + 1} contains the intersection of the other kernels"
                )
    return CompatibilityReport(True)


# ----------------------------
# Files
# ----------------------------
class RelationFile(BaseModel):
    base: List[str]
    pairs: List[Tuple[str, str]] = Field(default_factory=list)


class FamilyFile(BaseModel):
    base: List[str]
    domain: List[str]
    functions: List[List[str]]


def relation_from_file(spec: Union[dict, RelationFile]) -> ERelation:
    if not isinstance(spec, RelationFile):
        spec = RelationFile.model_validate(spec)
    return ERelation.from_labels(spec.base, spec.pairs)


def load_relation(path: Union[str, Path]) -> ERelation:
    return relation_from_file(json.loads(Path(path).read_text()))


def relation_to_json(E: ERelation) -> Dict[str, Any]:
    return {"base": list(E.base), "pairs": [list(p) for p in E.label_pairs()]}


def family_to_json(F: CompatibleFamily) -> Dict[str, Any]:
    base = np.array(F.base, dtype=object)
    return {
        "base": list(F.base),
        "domain": list(F.domain),
        "functions": [base[row].tolist() for row in np.asarray(F.functions)],
    }


def load_family(path: Union[str, Path]) -> CompatibleFamily:
    spec = FamilyFile.model_validate(json.loads(Path(path).read_text()))
    index = {b: i for i, b in enumerate(spec.base)}
    rows = []
    for n, row in enumerate(spec.functions):
        _require(len(row) == len(spec.domain), f"function {n + 1} has {len(row)} values for {len(spec.domain)} points")
        _require(all(v in index for v in row), f"function {n + 1} takes a value outside the base")
        rows.append([index[v] for v in row])
    functions = np.array(rows, dtype=np.int64).reshape(len(rows), len(spec.domain))
    functions.flags.writeable = False
    return CompatibleFamily(tuple(spec.domain), tuple(spec.base), functions)
