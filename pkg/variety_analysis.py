# variety_analysis.py
"""
Subdirectly irreducible members of a finitely generated congruence
distributive variety, and the FD-maximality decision for V-varieties.

Every SI member of the variety generated by a finite algebra G is a quotient
of a subalgebra of G; the census walks subalgebras and quotients them by
their meet-irreducible congruences.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from algebra_core import (
    FiniteAlgebra,
    Homomorphism,
    PreconditionError,
    _require,
    all_subalgebras,
    are_isomorphic,
    direct_product,
    enumerate_homs,
    quotient,
    subalgebra,
)
from compatibility import ERelation, XYZReport, check_xyz, relation_of_pair
from congruence import congruence_lattice, kernel, meet_irreducible_congruences
from distributive_lattice import (
    V_LATTICE,
    FiniteLattice,
    as_lattice,
    is_distributive,
    lattice_isomorphic,
)

log = logging.getLogger(__name__)


class NotAVVariety(PreconditionError):
    """Some SI member is neither simple nor has the five-element V as congruence lattice."""


@dataclass(frozen=True)
class SIInventory:
    generator: FiniteAlgebra
    simples: Tuple[FiniteAlgebra, ...]
    v_algebras: Tuple[FiniteAlgebra, ...]
    others: Tuple[FiniteAlgebra, ...]

    @property
    def members(self) -> Tuple[FiniteAlgebra, ...]:
        return self.simples + self.v_algebras + self.others


def _key(A: FiniteAlgebra):
    return (A.size, A.encoding, A.elements)


def _numbered(group: List[FiniteAlgebra], prefix: str) -> List[FiniteAlgebra]:
    named = []
    for i, A in enumerate(group, start=1):
        named.append(A.renamed(f"{prefix}#{i}"))
        log.debug("%s#%d is %s", prefix, i, A.name)
    return named


def enumerate_si(generator: FiniteAlgebra, check_distributive: bool = True) -> SIInventory:
    """SI members of the variety generated by ``generator``, one per isomorphism type.

    With ``check_distributive`` every subalgebra's congruence lattice is tested for
    distributivity, a necessary condition for congruence distributivity.
    """
    found: List[FiniteAlgebra] = []
    for members in all_subalgebras(generator):
        if len(members) < 2:
            continue
        S, _ = subalgebra(generator, members)
        con = congruence_lattice(S)
        if check_distributive:
            bad = is_distributive(con.lattice)
            _require(
                bad is None,
                f"Con({S.name}) is not distributive, so the variety is not congruence distributive",
            )
        for theta in meet_irreducible_congruences(con):
            Q, _ = quotient(S, theta)
            for i, known in enumerate(found):
                if known.size == Q.size and are_isomorphic(known, Q) is not None:
                    if _key(Q) < _key(known):
                        found[i] = Q
                    break
            else:
                found.append(Q)

    simples, v_algebras, others = [], [], []
    for Q in sorted(found, key=_key):
        con = congruence_lattice(Q)
        if len(con) == 2:
            simples.append(Q)
        elif lattice_isomorphic(con.lattice, V_LATTICE):
            v_algebras.append(Q)
        else:
            others.append(Q)
    simples = _numbered(simples, "B")
    v_algebras = _numbered(v_algebras, "C")
    others = _numbered(others, "T")
    log.info(
        "%s: %d simple, %d V-shaped, %d other SI members",
        generator.name, len(simples), len(v_algebras), len(others),
    )
    return SIInventory(generator, tuple(simples), tuple(v_algebras), tuple(others))


def enumerate_si_many(generators: Sequence[FiniteAlgebra], check_distributive: bool = True) -> SIInventory:
    _require(len(generators) > 0, "no generators given")
    G = generators[0] if len(generators) == 1 else direct_product(generators)
    return enumerate_si(G, check_distributive=check_distributive)


def is_v_variety(inv: SIInventory) -> bool:
    return not inv.others


@dataclass(frozen=True)
class WitnessPair:
    C: FiniteAlgebra
    h0: Homomorphism
    h1: Homomorphism
    E: Optional[ERelation]

    @property
    def B(self) -> FiniteAlgebra:
        return self.h0.target

    @property
    def B1(self) -> FiniteAlgebra:
        return self.h1.target

    @property
    def same_target(self) -> bool:
        return self.h0.target == self.h1.target


def _require_v_variety(inv: SIInventory) -> None:
    if inv.others:
        names = ", ".join(A.name for A in inv.others)
        raise NotAVVariety(f"not a V-variety: SI members neither simple nor V-shaped: {names}")


def enumerate_Q(inv: SIInventory) -> List[WitnessPair]:
    """Ordered pairs of surjections from each V-shaped member onto simples, kernels distinct."""
    _require_v_variety(inv)
    pairs: List[WitnessPair] = []
    for C in inv.v_algebras:
        homs = [h for B in inv.simples for h in enumerate_homs(C, B, surjective_only=True)]
        kernels = [kernel(h) for h in homs]
        for i, h0 in enumerate(homs):
            for j, h1 in enumerate(homs):
                if kernels[i] == kernels[j]:
                    continue
                E = relation_of_pair(h0, h1) if h0.target == h1.target else None
                pairs.append(WitnessPair(C, h0, h1, E))
    log.debug("%d witness pairs", len(pairs))
    return pairs


def _in_reference_labels(
    B: FiniteAlgebra, pair: Tuple[int, int], references: Sequence[FiniteAlgebra]
) -> Tuple[FiniteAlgebra, Tuple[int, int]]:
    for R in references:
        iso = are_isomorphic(B, R)
        if iso is not None:
            return R, (iso(pair[0]), iso(pair[1]))
    return B, pair


@dataclass(frozen=True)
class Verdict:
    maximal: bool
    witness: Optional[WitnessPair]
    reason: str
    inventory: SIInventory
    pair_reports: List[Tuple[WitnessPair, Optional[XYZReport]]] = field(default_factory=list)


def decide_fdmax(
    generator: FiniteAlgebra,
    check_distributive: bool = True,
    references: Sequence[FiniteAlgebra] = (),
) -> Verdict:
    """FD-maximality of the V-variety generated by ``generator``.

    A failing pair is reported in the labels of the first of ``references``
    isomorphic to its simple target, when there is one.
    """
    inv = enumerate_si(generator, check_distributive=check_distributive)
    _require_v_variety(inv)
    if not inv.v_algebras:
        return Verdict(
            True,
            None,
            "every SI member is simple; the chain condition with n = 1 realizes every Boolean lattice",
            inv,
        )
    reports: List[Tuple[WitnessPair, Optional[XYZReport]]] = []
    for wp in enumerate_Q(inv):
        if not wp.same_target:
            reports.append((wp, None))
            continue
        xyz = check_xyz(wp.E)
        reports.append((wp, xyz))
        if xyz.holds:
            reason = (
                f"{wp.C.name} maps onto {wp.B.name} by two homomorphisms with distinct kernels "
                "and the xyz condition holds"
            )
            return Verdict(True, wp, reason, inv, reports)

    checked = [(wp, r) for wp, r in reports if r is not None]
    if not checked:
        reason = "no V-shaped SI member has two homomorphisms onto a common simple algebra"
    else:
        wp, r = checked[0]
        target, (a, b) = _in_reference_labels(wp.B, r.failing, references)
        reason = (
            f"xyz condition fails for every pair; e.g. {wp.C.name} -> {target.name} "
            f"has no witness for ({target.elements[a]},{target.elements[b]})"
        )
    return Verdict(False, None, reason, inv, reports)


@dataclass(frozen=True)
class ChainVerdict:
    applicable: bool
    maximal: bool
    n: int
    longest: Optional[FiniteAlgebra]
    reason: str
    inventory: Optional[SIInventory] = None


def decide_chain_fdmax(generator: FiniteAlgebra, check_distributive: bool = True) -> ChainVerdict:
    """When every SI member has a chain congruence lattice the variety is FD-maximal;
    the realizable lattices are those whose up-sets of meet-irreducibles are chains
    of length at most n, the longest such chain."""
    inv = enumerate_si(generator, check_distributive=check_distributive)
    longest: Optional[FiniteAlgebra] = None
    n = 0
    for A in inv.members:
        con = congruence_lattice(A)
        if not con.lattice.is_chain():
            return ChainVerdict(False, False, 0, None, f"Con({A.name}) is not a chain", inv)
        if len(con) - 1 > n:
            n, longest = len(con) - 1, A
    return ChainVerdict(
        True, True, n, longest, f"every SI member has a chain congruence lattice of length at most {n}", inv
    )


def check_local_condition(L, inv: SIInventory) -> List[str]:
    """Meet-irreducibles x of L whose interval above x matches no member's congruence lattice."""
    lat: FiniteLattice = as_lattice(L)
    cons = [congruence_lattice(T).lattice for T in inv.members]
    failures = []
    for x in lat.meet_irreducibles():
        up = lat.upset_sublattice(x)
        if not any(lattice_isomorphic(up, c) for c in cons):
            failures.append(lat.elements[x])
    return failures
