import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from algebra_core import (
    FiniteAlgebra,
    GuardExceeded,
    Homomorphism,
    InvalidAlgebra,
    PreconditionError,
    algebra_to_json,
    algebra_violations,
    all_subalgebras,
    are_isomorphic,
    direct_product,
    dump_algebra,
    enumerate_homs,
    generators,
    identity_hom,
    is_closed,
    is_homomorphism,
    load_algebra,
    quotient,
    subalgebra,
    subalgebra_generated,
    validate_algebra,
)
from congruence import Congruence, parse_congruence


def permuted(A, perm):
    """Copy of A with element i renamed to position perm[i]."""
    perm = np.asarray(perm)
    inv = np.argsort(perm)
    ops = []
    for o in A.operations:
        if o.arity == 0:
            ops.append((o.name, 0, perm[int(o.table)]))
        else:
            ops.append((o.name, o.arity, perm[o.table[np.ix_(*([inv] * o.arity))]]))
    return FiniteAlgebra.build(A.name + "'", [A.elements[i] for i in inv], ops)


@st.composite
def unary_algebras(draw, max_size=5):
    n = draw(st.integers(min_value=1, max_value=max_size))
    k = draw(st.integers(min_value=1, max_value=2))
    ops = [
        (f"f{j}", 1, draw(st.lists(st.integers(0, n - 1), min_size=n, max_size=n)))
        for j in range(k)
    ]
    return FiniteAlgebra.build("R", [str(i) for i in range(n)], ops)


def test_lattice_shortcut_synthesizes_meet_and_join(n5):
    assert n5.signature == (("meet", 2), ("join", 2))
    a, b, c = n5.indices("abc")
    assert n5.op("join")(a, b) == n5.index("1")
    assert n5.op("meet")(c, b) == n5.index("0")
    assert n5.op("meet")(a, c) == a


def test_declared_operations_follow_lattice_operations(vee_c):
    assert [name for name, _ in vee_c.signature] == ["meet", "join", "f", "g"]
    f = vee_c.op("f")
    assert vee_c.elements[f(vee_c.index("x"))] == "y"


def test_violations_are_collected():
    raw = {
        "name": "bad",
        "elements": ["0", "1", "1"],
        "operations": [],
    }
    assert any("duplicate element label" in v for v in algebra_violations(raw))

    raw = {
        "name": "bad",
        "elements": ["0", "1"],
        "operations": [
            {"name": "f", "arity": 1, "table": ["0", "q"]},
            {"name": "g", "arity": 1, "table": [0, 7]},
            {"name": "h", "arity": 2, "table": [["0", "1"]]},
        ],
    }
    violations = algebra_violations(raw)
    assert any("unknown element label 'q'" in v for v in violations)
    assert any("out of range" in v for v in violations)
    assert any("malformed table dimensions" in v for v in violations)
    with pytest.raises(InvalidAlgebra) as info:
        validate_algebra(raw)
    assert info.value.violations == violations


def test_order_that_is_not_a_lattice_is_reported():
    raw = {"name": "vee", "elements": ["0", "p", "q"], "order": [["0", "p"], ["0", "q"]]}
    assert any(v.startswith("order:") for v in algebra_violations(raw))


def test_schema_errors_become_violations():
    assert algebra_violations({"elements": ["0"]})


def test_integer_entries_are_accepted():
    A = validate_algebra(
        {"name": "cyc", "elements": ["p", "q", "r"], "operations": [{"name": "s", "arity": 1, "table": [1, 2, 0]}]}
    )
    assert A.op("s").flat == (1, 2, 0)


def test_constants_are_zero_arity_operations(stone):
    assert stone.op("zero").arity == 0
    assert stone.elements[int(stone.op("one").table)] == "1"


def test_constants_serialize_as_bare_labels(stone):
    ops = {op["name"]: op for op in algebra_to_json(stone)["operations"]}
    assert ops["zero"]["table"] == "0"
    assert ops["one"]["table"] == "1"
    assert ops["neg"]["table"] == ["1", "0", "0"]
    product = algebra_to_json(direct_product([stone, stone]))
    assert {op["name"]: op["table"] for op in product["operations"]}["one"] == "(1,1)"


def test_json_round_trip_is_canonical(tmp_path, vee_c, stone):
    for A in (vee_c, stone):
        path = tmp_path / f"{A.name}.json"
        dump_algebra(A, path)
        again = load_algebra(path)
        assert again == A
        assert algebra_to_json(again) == json.loads(path.read_text())


def test_generated_subalgebras_match_hand_closure(vee_c):
    labels = lambda idx: set(vee_c.labels(idx))
    assert labels(subalgebra_generated(vee_c, ["0", "1"])) == {"0", "1"}
    assert labels(subalgebra_generated(vee_c, ["0", "z", "1"])) == {"0", "1", "z"}
    assert labels(subalgebra_generated(vee_c, ["x"])) == {"0", "x", "y", "z"}
    assert labels(subalgebra_generated(vee_c, ["t"])) == {"1", "t", "w", "z"}


def test_empty_seed_needs_constants(n5, stone):
    with pytest.raises(PreconditionError):
        subalgebra_generated(n5, [])
    assert set(stone.labels(subalgebra_generated(stone, []))) == {"0", "1"}


def test_subalgebra_census_of_the_v_shaped_algebra(vee_c):
    subs = all_subalgebras(vee_c)
    big = {frozenset(vee_c.labels(s)) for s in subs if len(s) > 2}
    everything = set(vee_c.elements)
    expected = {
        frozenset({"0", "1", "z"}),
        frozenset({"0", "x", "y", "z"}),
        frozenset({"1", "t", "w", "z"}),
        frozenset({"0", "1", "x", "y", "z"}),
        frozenset({"0", "1", "t", "w", "z"}),
        frozenset(everything - {"u", "v"}),
        frozenset(everything - {"u"}),
        frozenset(everything - {"v"}),
        frozenset(everything),
    }
    assert big == expected

    two, _ = subalgebra(vee_c, ["0", "1"])
    for s in subs:
        if len(s) == 2:
            S, _ = subalgebra(vee_c, s)
            assert are_isomorphic(S, two) is not None


def test_subalgebras_are_sorted_by_size(vee_c):
    subs = all_subalgebras(vee_c)
    assert subs == sorted(subs, key=lambda s: (len(s), s))


def test_subalgebra_guard(vee_c):
    with pytest.raises(GuardExceeded):
        all_subalgebras(vee_c, guard=4)


def test_subalgebra_rejects_open_subsets(vee_c):
    with pytest.raises(PreconditionError):
        subalgebra(vee_c, ["u", "v"])


def test_subalgebra_returns_inclusion(vee_c):
    S, inc = subalgebra(vee_c, ["0", "x", "y", "z"])
    assert S.size == 4
    assert is_homomorphism(inc)
    assert inc.is_injective()


def test_quotient_by_alpha_is_the_simple_algebra(vee_c, simple_b):
    alpha = parse_congruence(vee_c, "(0 x y z)(u v w)(t)(1)")
    Q, proj = quotient(vee_c, alpha)
    assert Q.elements == ("0", "u", "t", "1")
    assert is_homomorphism(proj)
    assert proj.is_surjective()
    assert are_isomorphic(Q, simple_b) is not None


def test_quotient_by_identity_keeps_name(n5):
    Q, _ = quotient(n5, Congruence.identity(n5))
    assert Q.name == n5.name
    assert Q == n5


def test_quotient_rejects_non_congruence(n5):
    bad = Congruence.from_blocks(n5, [n5.indices(["0", "1"])])
    with pytest.raises(PreconditionError):
        quotient(n5, bad)


def test_homomorphisms_from_n5_onto_two(n5, two):
    onto = enumerate_homs(n5, two, surjective_only=True)
    assert {h.mapping for h in onto} == {(0, 0, 1, 0, 1), (0, 1, 0, 1, 1)}
    every = enumerate_homs(n5, two)
    assert len(every) == 4
    assert all(is_homomorphism(h) for h in every)


def test_homomorphism_search_rejects_signature_mismatch(n5, stone):
    with pytest.raises(PreconditionError):
        enumerate_homs(n5, stone)


def test_composition_with_identity(n5, two):
    h = enumerate_homs(n5, two, surjective_only=True)[0]
    assert identity_hom(n5).then(h) == h
    assert h.then(identity_hom(two)) == h


def test_is_homomorphism_detects_bad_maps(n5, two):
    assert not is_homomorphism(Homomorphism(n5, two, (1, 0, 0, 0, 0)))


@given(perm=st.permutations(list(range(9))))
def test_isomorphism_finds_relabelled_copies(perm):
    from conftest import FIXTURES

    C = load_algebra(FIXTURES / "vee_algebra_c.json")
    D = permuted(C, perm)
    iso = are_isomorphic(C, D)
    assert iso is not None
    assert is_homomorphism(iso)
    assert iso.is_injective() and iso.is_surjective()


def test_non_isomorphic_quotients(n5f):
    ker_h0 = parse_congruence(n5f, "(0 a c)(b 1)")
    ker_h1 = parse_congruence(n5f, "(0 b)(a c 1)")
    Q0, _ = quotient(n5f, ker_h0)
    Q1, _ = quotient(n5f, ker_h1)
    assert are_isomorphic(Q0, Q1) is None


def test_direct_product(two):
    sq = direct_product([two, two])
    assert sq.size == 4
    assert sq.elements == ("(0,0)", "(0,1)", "(1,0)", "(1,1)")
    meet = sq.op("meet")
    assert meet(1, 2) == 0


def test_direct_product_guard(vee_c):
    with pytest.raises(GuardExceeded):
        direct_product([vee_c, vee_c, vee_c], guard=100)


def test_direct_product_signature_mismatch(n5, stone):
    with pytest.raises(PreconditionError):
        direct_product([n5, stone])


@given(A=unary_algebras())
def test_generators_generate(A):
    gens = generators(A)
    assert subalgebra_generated(A, gens) == tuple(range(A.size))


@given(A=unary_algebras(), data=st.data())
def test_closure_properties(A, data):
    seed = data.draw(st.sets(st.integers(0, A.size - 1), min_size=1))
    closed = subalgebra_generated(A, seed)
    assert set(seed) <= set(closed)
    assert is_closed(A, closed)
    assert subalgebra_generated(A, closed) == closed
    subs = all_subalgebras(A)
    assert closed in subs
    assert all(is_closed(A, s) for s in subs)
