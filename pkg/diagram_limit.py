# diagram_limit.py
"""
Ordered diagrams of finite algebras and their limits.

A diagram assigns an algebra A_p to each point p of a finite poset and a
homomorphism f_pq : A_p -> A_q to each p <= q. Its limit is the subalgebra of
the product made of the tuples with a_q = f_pq(a_p) whenever p <= q. Limit
coordinates follow the poset's topological order, and limit elements are
listed lexicographically in that order.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import TYPE_CHECKING, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

import tuning_knobs as cfg
from algebra_core import (
    AlgebraFile,
    FiniteAlgebra,
    Homomorphism,
    RealizationError,
    _guard,
    _require,
    identity_hom,
    is_homomorphism,
    quotient,
    read_algebra_file,
    same_signature,
    validate_algebra,
)
from compatibility import CompatibleFamily, verify_compatible
from congruence import Congruence, congruence_lattice, kernel, meet_irreducible_congruences
from distributive_lattice import Poset, PosetFile, check_doublestar, poset_from_file, upset_chain_height

if TYPE_CHECKING:
    from variety_analysis import WitnessPair

log = logging.getLogger(__name__)


# ----------------------------
# Diagrams
# ----------------------------
@dataclass(frozen=True, eq=False)
class Diagram:
    index_poset: Poset
    algebras: Tuple[FiniteAlgebra, ...]
    maps: Dict[Tuple[int, int], Homomorphism]

    @classmethod
    def build(
        cls,
        P: Poset,
        algebras: Mapping[Union[str, int], FiniteAlgebra],
        maps: Mapping[Tuple[Union[str, int], Union[str, int]], Homomorphism],
    ) -> "Diagram":
        """Identity maps and composites along covers are filled in; every cover needs a map."""
        _require(P.size > 0, "a diagram needs a nonempty index poset")
        by_index: Dict[int, FiniteAlgebra] = {P.index(k): A for k, A in algebras.items()}
        missing = [P.elements[p] for p in range(P.size) if p not in by_index]
        _require(not missing, f"no algebra given for {missing}")
        algs = tuple(by_index[p] for p in range(P.size))
        for A in algs[1:]:
            _require(same_signature(algs[0], A), f"signature mismatch: {algs[0].name} vs {A.name}")

        full: Dict[Tuple[int, int], Homomorphism] = {(p, p): identity_hom(algs[p]) for p in range(P.size)}
        for (p_raw, q_raw), h in maps.items():
            p, q = P.index(p_raw), P.index(q_raw)
            where = f"{P.elements[p]} -> {P.elements[q]}"
            _require(bool(P.leq[p, q]), f"map {where} does not follow the order")
            _require(h.source == algs[p] and h.target == algs[q], f"map {where} has the wrong source or target")
            _require(is_homomorphism(h), f"map {where} is not a homomorphism")
            full[(p, q)] = h

        for r in P.topological_order():
            lower = P.lower_covers(r)
            for q in lower:
                _require((q, r) in full, f"missing map for the cover {P.elements[q]} < {P.elements[r]}")
            for p in range(P.size):
                if (p, r) in full or not P.lt[p, r]:
                    continue
                q = next(q for q in lower if P.leq[p, q])
                full[(p, r)] = full[(p, q)].then(full[(q, r)])

        D = cls(P, algs, full)
        problems = functoriality_violations(D)
        _require(not problems, "diagram is not functorial: " + "; ".join(problems[:3]))
        return D

    @property
    def size(self) -> int:
        return self.index_poset.size

    def algebra(self, p: Union[str, int]) -> FiniteAlgebra:
        return self.algebras[self.index_poset.index(p)]

    def map(self, p: Union[str, int], q: Union[str, int]) -> Homomorphism:
        key = (self.index_poset.index(p), self.index_poset.index(q))
        _require(key in self.maps, f"no map {self.index_poset.elements[key[0]]} -> {self.index_poset.elements[key[1]]}")
        return self.maps[key]


def functoriality_violations(D: Diagram) -> List[str]:
    P = D.index_poset
    labels = P.elements
    out: List[str] = []
    for p in range(P.size):
        ident = D.maps.get((p, p))
        if ident is None or ident.mapping != tuple(range(D.algebras[p].size)):
            out.append(f"map {labels[p]} -> {labels[p]} is not the identity")
    for p in range(P.size):
        for q in P.upset(p):
            if (p, q) not in D.maps:
                out.append(f"missing map {labels[p]} -> {labels[q]}")
                continue
            for r in P.upset(q):
                if (q, r) not in D.maps or (p, r) not in D.maps:
                    continue
                if D.maps[(p, q)].then(D.maps[(q, r)]).mapping != D.maps[(p, r)].mapping:
                    out.append(f"{labels[q]}->{labels[r]} after {labels[p]}->{labels[q]} differs from {labels[p]}->{labels[r]}")
    return out


# ----------------------------
# Limits
# ----------------------------
@dataclass(frozen=True, eq=False)
class Limit:
    diagram: Diagram
    algebra: FiniteAlgebra
    order: Tuple[int, ...]
    tuples: np.ndarray  # (|limit|, |P|), columns in `order`

    @property
    def size(self) -> int:
        return self.algebra.size

    @cached_property
    def _column(self) -> Dict[int, int]:
        return {p: c for c, p in enumerate(self.order)}

    def coordinate(self, p: Union[str, int]) -> np.ndarray:
        return self.tuples[:, self._column[self.diagram.index_poset.index(p)]]

    def projection(self, p: Union[str, int]) -> Homomorphism:
        target = self.diagram.algebra(p)
        return Homomorphism(self.algebra, target, tuple(int(v) for v in self.coordinate(p)))

    @property
    def projections(self) -> Dict[str, Homomorphism]:
        return {label: self.projection(label) for label in self.diagram.index_poset.elements}

    def family(self, coords: Sequence[Union[str, int]]) -> CompatibleFamily:
        """Projections onto the given points, in the given order, as a function family."""
        _require(len(coords) > 0, "family needs at least one coordinate")
        base = self.diagram.algebra(coords[0]).elements
        for p in coords:
            _require(self.diagram.algebra(p).elements == base, f"coordinate {p} is over a different carrier")
        functions = np.stack([self.coordinate(p) for p in coords]).astype(np.int64)
        functions.flags.writeable = False
        return CompatibleFamily(self.algebra.elements, base, functions)


def limit(D: Diagram, guard: Optional[int] = None) -> Limit:
    size_limit = cfg.MAX_LIMIT_SIZE if guard is None else guard
    P = D.index_poset
    order = P.topological_order()
    below = {r: [p for p in order if P.lt[p, r]] for r in order}
    found: List[Tuple[int, ...]] = []
    value: Dict[int, int] = {}

    def assign(depth: int) -> None:
        if depth == len(order):
            found.append(tuple(value[p] for p in order))
            _guard(len(found) <= size_limit, f"limit has more than {size_limit} elements")
            return
        r = order[depth]
        if below[r]:
            forced = {D.maps[(p, r)].mapping[value[p]] for p in below[r]}
            if len(forced) != 1:
                return
            candidates = list(forced)
        else:
            candidates = range(D.algebras[r].size)
        for v in candidates:
            value[r] = v
            assign(depth + 1)
        value.pop(r, None)

    assign(0)
    tuples = np.array(found, dtype=np.int64).reshape(len(found), len(order))
    tuples.flags.writeable = False
    A = _limit_algebra(D, order, tuples)
    log.debug("limit over %d points has %d elements", P.size, len(found))
    return Limit(D, A, order, tuples)


def _limit_algebra(D: Diagram, order: Tuple[int, ...], tuples: np.ndarray) -> FiniteAlgebra:
    algs = [D.algebras[p] for p in order]
    sizes = tuple(A.size for A in algs)
    m = len(tuples)
    codes = np.ravel_multi_index(tuple(tuples.T), sizes) if m else np.zeros(0, dtype=np.int64)
    labels = ["(" + ",".join(A.elements[v] for A, v in zip(algs, row)) + ")" for row in tuples.tolist()]
    ops = []
    for j, (name, arity) in enumerate(algs[0].signature):
        if arity == 0:
            parts = tuple(int(A.operations[j].table) for A in algs)
            code = np.ravel_multi_index(parts, sizes)
            ops.append((name, 0, int(np.searchsorted(codes, code))))
            continue
        parts = tuple(
            A.operations[j].table[np.ix_(*([tuples[:, c]] * arity))] for c, A in enumerate(algs)
        )
        result = np.searchsorted(codes, np.ravel_multi_index(parts, sizes))
        ops.append((name, arity, result))
    return FiniteAlgebra.build(f"lim({D.index_poset.size} points)", labels, ops, allow_empty=True)


# ----------------------------
# Hypothesis checks
# ----------------------------
@dataclass(frozen=True)
class AdmissibilityReport:
    cond_i: bool
    cond_ii: bool
    missing_values: List[Tuple[str, str]] = field(default_factory=list)  # (p, u) not hit
    inseparable: List[Tuple[str, str]] = field(default_factory=list)  # (p, q), p not <= q

    @property
    def ok(self) -> bool:
        return self.cond_i and self.cond_ii


def check_admissible(L: Limit) -> AdmissibilityReport:
    """(i) every projection is onto; (ii) for p not below q, some pair agrees at p and differs at q."""
    D = L.diagram
    P = D.index_poset
    missing: List[Tuple[str, str]] = []
    for p in range(P.size):
        hit = set(L.coordinate(p).tolist())
        for u in range(D.algebras[p].size):
            if u not in hit:
                missing.append((P.elements[p], D.algebras[p].elements[u]))
    inseparable: List[Tuple[str, str]] = []
    for p in range(P.size):
        for q in range(P.size):
            if P.leq[p, q]:
                continue
            cp, cq = L.coordinate(p), L.coordinate(q)
            pairs = len(np.unique(cp * (D.algebras[q].size + 1) + cq))
            if pairs == len(np.unique(cp)):
                inseparable.append((P.elements[p], P.elements[q]))
    return AdmissibilityReport(not missing, not inseparable, missing, inseparable)


@dataclass(frozen=True)
class StarEntry:
    point: str
    missing: List[str]
    extra: List[str]

    @property
    def ok(self) -> bool:
        return not self.missing and not self.extra


@dataclass(frozen=True)
class StarReport:
    entries: List[StarEntry]

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries)

    def failures(self) -> List[StarEntry]:
        return [e for e in self.entries if not e.ok]


def check_star(D: Diagram) -> StarReport:
    """Kernels of the maps leaving p must be exactly the meet-irreducible congruences of A_p."""
    P = D.index_poset
    entries = []
    for p in range(P.size):
        kernels = {kernel(D.maps[(p, q)]) for q in P.upset(p)}
        irreducible = set(meet_irreducible_congruences(congruence_lattice(D.algebras[p])))
        entries.append(
            StarEntry(
                P.elements[p],
                sorted(t.to_text() for t in irreducible - kernels),
                sorted(t.to_text() for t in kernels - irreducible),
            )
        )
    return StarReport(entries)


# ----------------------------
# Realizations
# ----------------------------
@dataclass(frozen=True)
class Realization:
    algebra: FiniteAlgebra
    limit: Optional[Limit] = None
    admissibility: Optional[AdmissibilityReport] = None
    star: Optional[StarReport] = None


def _verified(D: Diagram, guard: Optional[int]) -> Realization:
    L = limit(D, guard)
    adm = check_admissible(L)
    if not adm.cond_i:
        raise RealizationError(f"admissibility (i) fails: projection misses {adm.missing_values[0]}")
    if not adm.cond_ii:
        raise RealizationError(f"admissibility (ii) fails for {adm.inseparable[0]}")
    star = check_star(D)
    if not star.ok:
        bad = star.failures()[0]
        raise RealizationError(f"star condition (*) fails at {bad.point}: missing {bad.missing}, extra {bad.extra}")
    return Realization(L.algebra, L, adm, star)


def _one_element(C: FiniteAlgebra) -> Realization:
    Q, _ = quotient(C, Congruence.total(C))
    return Realization(Q.renamed(f"{C.name}/total"))


def _chain_quotients(C: FiniteAlgebra) -> Tuple[List[FiniteAlgebra], List[Homomorphism]]:
    L = congruence_lattice(C)
    _require(L.lattice.is_chain(), f"Con({C.name}) is not a chain")
    alphas = list(reversed(L.congruences))  # alpha_0 = total ... alpha_n = identity
    quotients, projections = [], []
    for alpha in alphas:
        Q, proj = quotient(C, alpha)
        quotients.append(Q)
        projections.append(proj)
    return quotients, projections


def build_chain_diagram(C: FiniteAlgebra, P: Poset) -> Diagram:
    quotients, projections = _chain_quotients(C)
    n = len(quotients) - 1
    height = upset_chain_height(P)
    _require(
        height is not None and height <= n,
        f"chain condition fails: every up-set must be a chain with at most {n} elements",
    )

    def g(i: int, j: int) -> Homomorphism:
        reps = [C.index(label) for label in quotients[i].elements]
        return Homomorphism(quotients[i], quotients[j], tuple(projections[j].mapping[r] for r in reps))

    rank = {p: len(P.upset(p)) for p in range(P.size)}
    algebras = {p: quotients[rank[p]] for p in range(P.size)}
    maps = {(p, q): g(rank[p], rank[q]) for p in range(P.size) for q in P.upper_covers(p)}
    return Diagram.build(P, algebras, maps)


def realize_chain(C: FiniteAlgebra, P: Poset, guard: Optional[int] = None) -> Realization:
    if P.size == 0:
        _chain_quotients(C)
        return _one_element(C)
    return _verified(build_chain_diagram(C, P), guard)


def _d_ranking(P: Poset, D: Sequence[str], d_order: Optional[Sequence[str]]) -> Dict[int, int]:
    if d_order is None:
        ordered = sorted(D, key=P.index)
    else:
        _require(sorted(d_order) == sorted(D), f"--d-order {list(d_order)} is not a permutation of {list(D)}")
        ordered = list(d_order)
    return {P.index(d): r for r, d in enumerate(ordered)}


def build_vshape_diagram(
    witness: "WitnessPair", P: Poset, d_order: Optional[Sequence[str]] = None
) -> Diagram:
    report = check_doublestar(P)
    _require(report.holds, f"double-star condition (**) fails: {report.reason}")
    _require(witness.same_target, "witness homomorphisms have different targets")
    rank = _d_ranking(P, report.D, d_order)
    algebras: Dict[int, FiniteAlgebra] = {}
    maps: Dict[Tuple[int, int], Homomorphism] = {}
    for d in rank:
        algebras[d] = witness.B
    for n_label in report.N:
        n = P.index(n_label)
        algebras[n] = witness.C
        lo, hi = sorted((d for d in rank if P.lt[n, d]), key=rank.get)
        maps[(n, lo)] = witness.h0
        maps[(n, hi)] = witness.h1
    return Diagram.build(P, algebras, maps)


def realize_vshape(
    witness: "WitnessPair",
    family: CompatibleFamily,
    P: Poset,
    d_order: Optional[Sequence[str]] = None,
    guard: Optional[int] = None,
) -> Realization:
    report = check_doublestar(P)
    _require(report.holds, f"double-star condition (**) fails: {report.reason}")
    if P.size == 0:
        return _one_element(witness.C)
    _require(witness.E is not None, "witness has no relation E (targets differ)")
    _require(
        family.size == len(report.D),
        f"family has {family.size} functions but the poset has {len(report.D)} maximal elements",
    )
    check = verify_compatible(family, witness.E, strong=True)
    _require(check.ok, f"family is not strongly E-compatible: {check.counterexample}")
    return _verified(build_vshape_diagram(witness, P, d_order), guard)


# ----------------------------
# Files
# ----------------------------
class MapSpec(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    source: str = Field(alias="from")
    target: str = Field(alias="to")
    map: List[Union[str, int]]


class DiagramFile(BaseModel):
    poset: PosetFile
    algebras: Dict[str, Union[str, AlgebraFile]]
    maps: List[MapSpec] = Field(default_factory=list)


def diagram_from_file(spec: Union[dict, DiagramFile], root: Union[str, Path] = ".") -> Diagram:
    if not isinstance(spec, DiagramFile):
        spec = DiagramFile.model_validate(spec)
    P = poset_from_file(spec.poset)
    algebras: Dict[str, FiniteAlgebra] = {}
    for label, ref in spec.algebras.items():
        if isinstance(ref, str):
            algebras[label] = validate_algebra(read_algebra_file(Path(root) / ref))
        else:
            algebras[label] = validate_algebra(ref)
    maps = {}
    for m in spec.maps:
        _require(m.source in algebras and m.target in algebras, f"map {m.source} -> {m.target} names an unknown point")
        src, dst = algebras[m.source], algebras[m.target]
        _require(len(m.map) == src.size, f"map {m.source} -> {m.target} lists {len(m.map)} values for {src.size} elements")
        maps[(m.source, m.target)] = Homomorphism(src, dst, dst.indices(m.map))
    return Diagram.build(P, algebras, maps)


def load_diagram(path: Union[str, Path]) -> Diagram:
    path = Path(path)
    return diagram_from_file(json.loads(path.read_text()), root=path.parent)
