import pytest

from algebra_core import GuardExceeded, Homomorphism, PreconditionError, are_isomorphic, identity_hom, quotient
from compatibility import build_family, verify_compatible
from congruence import Congruence, congruence_lattice, shape_tag
from diagram_limit import (
    Diagram,
    RealizationError,
    _verified,
    build_chain_diagram,
    build_vshape_diagram,
    check_admissible,
    check_star,
    functoriality_violations,
    limit,
    load_diagram,
    realize_chain,
    realize_vshape,
)
from distributive_lattice import Poset, check_chain_condition, lattice_isomorphic, materialize
from oracles import brute_limit_tuples, natural_posets
from variety_analysis import decide_fdmax


@pytest.fixture
def n5_witness(n5):
    return decide_fdmax(n5).witness


def trivial(A):
    Q, _ = quotient(A, Congruence.total(A))
    return Q


def same_tuples(L):
    return [tuple(row) for row in L.tuples.tolist()] == brute_limit_tuples(L.diagram, L.order)


def test_limit_of_the_n5_diagram(fixtures_dir, n5):
    D = load_diagram(fixtures_dir / "diagram_n5_vee.json")
    L = limit(D)
    assert L.size == 5
    assert are_isomorphic(L.algebra, n5) is not None
    assert same_tuples(L)
    assert check_admissible(L).ok
    assert check_star(D).ok
    assert set(L.projections) == {"n", "d", "e"}


def test_limit_guard(fixtures_dir):
    D = load_diagram(fixtures_dir / "diagram_n5_vee.json")
    with pytest.raises(GuardExceeded):
        limit(D, guard=3)


def test_single_point_limit_is_the_algebra(vee_c):
    P = Poset.from_relation(["p"], [])
    L = limit(Diagram.build(P, {"p": vee_c}, {}))
    assert are_isomorphic(L.algebra, vee_c) is not None
    assert L.projection("p").is_injective()


def test_antichain_limit_is_the_product(two):
    P = Poset.from_relation(["p", "q"], [])
    L = limit(Diagram.build(P, {"p": two, "q": two}, {}))
    assert L.size == 4
    assert same_tuples(L)
    assert shape_tag(congruence_lattice(L.algebra)) == "boolean-2"


def test_star_failure_names_the_missing_kernel(n5, two):
    h0 = Homomorphism(n5, two, (0, 0, 1, 0, 1))
    P = Poset.from_relation(["n", "d", "e"], [("n", "d"), ("n", "e")])
    D = Diagram.build(P, {"n": n5, "d": two, "e": two}, {("n", "d"): h0, ("n", "e"): h0})
    report = check_star(D)
    assert not report.ok
    (bad,) = report.failures()
    assert bad.point == "n"
    assert bad.missing == ["(0 b)(a c 1)"]
    with pytest.raises(RealizationError):
        _verified(D, None)


def test_admissibility_fails_when_a_point_cannot_be_separated(two):
    P = Poset.from_relation(["p", "q"], [])
    D = Diagram.build(P, {"p": two, "q": trivial(two)}, {})
    report = check_admissible(limit(D))
    assert report.cond_i
    assert not report.cond_ii
    assert ("p", "q") in report.inseparable
    with pytest.raises(RealizationError, match=r"admissibility \(ii\) fails"):
        _verified(D, None)


def test_admissibility_fails_when_a_projection_misses_values(two):
    P = Poset.from_relation(["p", "q"], [("p", "q")])
    const = Homomorphism(two, two, (0, 0))
    D = Diagram.build(P, {"p": two, "q": two}, {("p", "q"): const})
    report = check_admissible(limit(D))
    assert not report.cond_i
    assert report.missing_values == [("q", "1")]


def test_diagram_build_fills_composites(stone, poset):
    D = build_chain_diagram(stone, poset("chain2"))
    assert (0, 1) in D.maps and (0, 0) in D.maps
    assert functoriality_violations(D) == []


def test_functoriality_violations(two):
    P = Poset.from_relation(["a", "b", "c"], [("a", "b"), ("b", "c")])
    ident = identity_hom(two)
    const = Homomorphism(two, two, (0, 0))
    maps = {(0, 0): ident, (1, 1): ident, (2, 2): ident, (0, 1): ident, (1, 2): ident, (0, 2): const}
    D = Diagram(P, (two, two, two), maps)
    problems = functoriality_violations(D)
    assert problems == ["b->c after a->b differs from a->c"]
    with pytest.raises(PreconditionError, match="not functorial"):
        Diagram.build(P, {"a": two, "b": two, "c": two}, {("a", "b"): ident, ("b", "c"): ident, ("a", "c"): const})


def test_diagram_build_requires_cover_maps(two):
    P = Poset.from_relation(["a", "b"], [("a", "b")])
    with pytest.raises(PreconditionError, match="missing map"):
        Diagram.build(P, {"a": two, "b": two}, {})


def test_diagram_build_rejects_maps_against_the_order(two):
    P = Poset.from_relation(["a", "b"], [("a", "b")])
    ident = identity_hom(two)
    with pytest.raises(PreconditionError, match="does not follow the order"):
        Diagram.build(P, {"a": two, "b": two}, {("a", "b"): ident, ("b", "a"): ident})


def test_realize_chain(stone, two, poset):
    R = realize_chain(stone, poset("antichain2"))
    assert R.algebra.size == 4
    assert shape_tag(congruence_lattice(R.algebra)) == "boolean-2"

    R = realize_chain(stone, poset("chain2"))
    assert are_isomorphic(R.algebra, stone) is not None

    R = realize_chain(two, poset("antichain3"))
    assert R.algebra.size == 8
    assert shape_tag(congruence_lattice(R.algebra)) == "boolean-3"


def test_realize_chain_rejects_long_chains(stone, poset):
    with pytest.raises(PreconditionError, match="chain condition fails"):
        realize_chain(stone, poset("chain3"))


def test_realize_chain_empty_poset(stone):
    R = realize_chain(stone, Poset.from_relation([], []))
    assert R.algebra.size == 1


def test_chain_realizations_of_small_posets(stone):
    for leq in natural_posets(4):
        P = Poset.from_matrix([f"p{i}" for i in range(len(leq))], leq)
        if not check_chain_condition(P, 2):
            continue
        R = realize_chain(stone, P, guard=128)
        assert lattice_isomorphic(congruence_lattice(R.algebra).lattice, materialize(P))
        if R.limit is not None:
            assert same_tuples(R.limit)


def test_realize_vshape_gives_n5_back(n5, n5_witness, poset):
    P = poset("v")
    R = realize_vshape(n5_witness, build_family(n5_witness.E, 2), P)
    assert are_isomorphic(R.algebra, n5) is not None
    assert R.admissibility.ok and R.star.ok


@pytest.mark.parametrize(
    "name,size", [("antichain2", 4), ("antichain3", 8), ("k3", 16), ("path4", 29), ("twin", 25)]
)
def test_realize_vshape_matches_filter_lattice(n5_witness, poset, name, size):
    P = poset(name)
    k = len(P.maximal())
    R = realize_vshape(n5_witness, build_family(n5_witness.E, k), P)
    assert R.algebra.size == size
    assert lattice_isomorphic(congruence_lattice(R.algebra).lattice, materialize(P))
    assert same_tuples(R.limit)


def test_projections_onto_maximal_points_form_a_compatible_family(n5_witness, poset):
    P = poset("k3")
    R = realize_vshape(n5_witness, build_family(n5_witness.E, 3), P)
    F = R.limit.family(["d1", "d2", "d3"])
    assert F.size == 3
    assert verify_compatible(F, n5_witness.E).ok


def test_realize_vshape_respects_d_order(n5_witness, poset):
    P = poset("k3")
    family = build_family(n5_witness.E, 3)
    R = realize_vshape(n5_witness, family, P, d_order=["d3", "d1", "d2"])
    assert lattice_isomorphic(congruence_lattice(R.algebra).lattice, materialize(P))
    with pytest.raises(PreconditionError, match="not a permutation"):
        build_vshape_diagram(n5_witness, P, d_order=["d1", "d2"])


def test_realize_vshape_preconditions(n5_witness, poset):
    with pytest.raises(PreconditionError, match="double-star"):
        realize_vshape(n5_witness, build_family(n5_witness.E, 3), poset("bad_triple"))
    with pytest.raises(PreconditionError, match="maximal elements"):
        realize_vshape(n5_witness, build_family(n5_witness.E, 2), poset("k3"))


def test_realize_vshape_empty_poset(n5_witness):
    R = realize_vshape(n5_witness, build_family(n5_witness.E, 1), Poset.from_relation([], []))
    assert R.algebra.size == 1
    assert R.limit is None


def test_vshape_diagram_uses_the_witness(n5_witness, poset):
    D = build_vshape_diagram(n5_witness, poset("v"))
    assert D.algebra("n") == n5_witness.C
    assert D.map("n", "d") == n5_witness.h0
    assert D.map("n", "e") == n5_witness.h1
