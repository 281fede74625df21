import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import compatibility
from algebra_core import (
    GuardExceeded,
    Homomorphism,
    PreconditionError,
    RealizationError,
    enumerate_homs,
    is_homomorphism,
)
from compatibility import (
    CompatibilityReport,
    CompatibleFamily,
    ERelation,
    build_family,
    check_xyz,
    family_to_json,
    load_family,
    load_relation,
    relation_of_pair,
    relation_to_json,
    relation_from_file,
    verify_compatible,
)
from oracles import compatible_family_exists


def reflexive_relations(size):
    base = tuple(str(i) for i in range(size))
    off = [(a, b) for a in range(size) for b in range(size) if a != b]
    diagonal = {(a, a) for a in range(size)}
    for mask in range(1, 1 << len(off)):
        pairs = diagonal | {p for bit, p in enumerate(off) if mask >> bit & 1}
        yield ERelation(base, frozenset(pairs))


@st.composite
def reflexive_with_off_diagonal(draw):
    size = draw(st.integers(min_value=2, max_value=4))
    off = [(a, b) for a in range(size) for b in range(size) if a != b]
    chosen = draw(st.sets(st.sampled_from(off), min_size=1))
    pairs = {(a, a) for a in range(size)} | chosen
    return ERelation(tuple(str(i) for i in range(size)), frozenset(pairs))


def test_relation_of_n5_pair_is_full(n5, two):
    h0, h1 = enumerate_homs(n5, two, surjective_only=True)
    E = relation_of_pair(h0, h1)
    assert E.label_pairs() == [("0", "0"), ("0", "1"), ("1", "0"), ("1", "1")]
    assert relation_of_pair(h0, h0).label_pairs() == [("0", "0"), ("1", "1")]


def test_relation_of_the_v_shaped_pair(vee_c, simple_b, fixtures_dir):
    to_b = lambda assignment: Homomorphism(
        vee_c, simple_b, tuple(simple_b.index(assignment[e]) for e in vee_c.elements)
    )
    h0 = to_b({"0": "0", "x": "0", "y": "0", "z": "0", "u": "a", "v": "a", "w": "a", "t": "b", "1": "1"})
    h1 = to_b({"0": "0", "x": "a", "y": "b", "u": "b", "v": "b", "z": "1", "w": "1", "t": "1", "1": "1"})
    assert is_homomorphism(h0) and is_homomorphism(h1)
    E = relation_of_pair(h0, h1)
    assert E == load_relation(fixtures_dir / "relation_vee_c.json")
    assert E.is_reflexive() is False
    assert E.has_off_diagonal()


def test_xyz_on_fixture_relations(fixtures_dir):
    full = check_xyz(load_relation(fixtures_dir / "relation_full2.json"))
    assert full.holds
    assert set(full.witnesses) == {(0, 0), (0, 1), (1, 0), (1, 1)}

    vee = load_relation(fixtures_dir / "relation_vee_c.json")
    report = check_xyz(vee)
    assert report.status == "fails"
    assert tuple(vee.base[i] for i in report.failing) == ("a", "b")

    assert check_xyz(load_relation(fixtures_dir / "relation_diagonal.json")).status == "inapplicable"


def test_xyz_witnesses_satisfy_the_condition():
    for E in reflexive_relations(3):
        report = check_xyz(E)
        for (a, b), (x, y, z) in report.witnesses.items():
            needed = [(x, x), (y, y), (z, z), (x, y), (x, z), (y, z), (x, a), (x, b), (a, y), (y, b), (a, z), (b, z)]
            assert all(p in E for p in needed)


@given(E=reflexive_with_off_diagonal())
def test_xyz_holds_for_reflexive_relations(E):
    assert check_xyz(E).holds


def test_xyz_holds_for_every_reflexive_relation_on_four_points():
    assert all(check_xyz(E).holds for E in reflexive_relations(4))


@pytest.mark.parametrize("size", [2, 3])
def test_xyz_agrees_with_exhaustive_family_search(size):
    base = tuple(str(i) for i in range(size))
    cells = [(a, b) for a in range(size) for b in range(size)]
    for mask in range(1, 1 << len(cells)):
        pairs = frozenset(c for bit, c in enumerate(cells) if mask >> bit & 1)
        E = ERelation(base, pairs)
        if not E.has_off_diagonal():
            continue
        assert check_xyz(E).holds == compatible_family_exists(np.asarray(E.matrix), 3 * size + 5), E


def test_build_family_full_relation(fixtures_dir):
    E = load_relation(fixtures_dir / "relation_full2.json")
    F = build_family(E, 2)
    assert len(F.domain) == 40
    assert F.domain[0] == "(0,0,1/2,1)"
    assert verify_compatible(F, E, strong=True).ok
    assert build_family(E, 1).size == 1


def test_family_point_pairs_separate_one_function(fixtures_dir):
    E = load_relation(fixtures_dir / "relation_full2.json")
    F = build_family(E, 3)
    left = F.domain.index("(0,1,3/2,2)")
    right = F.domain.index("(0,1,2,5/2)")
    differs = [F.function(m)[left] != F.function(m)[right] for m in range(3)]
    assert differs == [False, True, False]


def test_build_family_refuses_failing_relations(fixtures_dir):
    with pytest.raises(PreconditionError, match="xyz condition fails"):
        build_family(load_relation(fixtures_dir / "relation_vee_c.json"), 2)
    with pytest.raises(PreconditionError):
        build_family(load_relation(fixtures_dir / "relation_full2.json"), 0)


def test_build_family_guard(fixtures_dir):
    with pytest.raises(GuardExceeded):
        build_family(load_relation(fixtures_dir / "relation_full2.json"), 5, guard=100)


@given(E=reflexive_with_off_diagonal(), k=st.integers(min_value=1, max_value=6))
def test_built_families_are_strongly_compatible(E, k):
    F = build_family(E, k)
    assert F.size == k
    assert verify_compatible(F, E, strong=True).ok


def test_verify_reports_counterexamples(fixtures_dir):
    E = load_relation(fixtures_dir / "relation_full2.json")
    F = build_family(E, 2)
    twice = CompatibleFamily(F.domain, F.base, np.stack([F.functions[0], F.functions[0]]))
    report = verify_compatible(twice, E)
    assert not report.ok
    assert "misses" in report.counterexample

    diag = load_relation(fixtures_dir / "relation_diagonal.json")
    assert "outside E" in verify_compatible(F, diag).counterexample


def test_weak_but_not_strong_compatibility(fixtures_dir):
    E = load_relation(fixtures_dir / "relation_full2.json")
    f1 = np.array([0, 0, 1, 1])
    f2 = np.array([0, 1, 0, 1])
    three = CompatibleFamily(("p", "q", "r", "s"), E.base, np.stack([f1, f2, f1 ^ f2]))
    assert verify_compatible(three, E).ok
    strong = verify_compatible(three, E, strong=True)
    assert not strong.ok
    assert strong.counterexample.startswith("kernel of f1")


def test_family_json_round_trip(tmp_path, fixtures_dir):
    E = load_relation(fixtures_dir / "relation_vee_c.json")
    full = load_relation(fixtures_dir / "relation_full2.json")
    assert relation_from_file(relation_to_json(E)) == E

    F = build_family(full, 3)
    path = tmp_path / "family.json"
    path.write_text(json.dumps(family_to_json(F)))
    again = load_family(path)
    assert again.domain == F.domain
    assert np.array_equal(again.functions, F.functions)
    assert verify_compatible(again, full, strong=True).ok


def test_relation_rejects_unknown_labels():
    with pytest.raises(PreconditionError):
        ERelation.from_labels(["0", "1"], [("0", "2")])


def test_pairs_are_sorted():
    E = ERelation.from_labels(["p", "q"], [("q", "p"), ("p", "q")])
    assert E.label_pairs() == [("p", "q"), ("q", "p")]
    assert list(itertools.chain.from_iterable(E.sorted_pairs())) == [0, 1, 1, 0]


def test_build_family_reports_a_failed_self_check(fixtures_dir, monkeypatch):
    monkeypatch.setattr(compatibility, "verify_compatible", lambda F, E, strong=False: CompatibilityReport(False, "forced"))
    with pytest.raises(RealizationError, match="failed verification: forced"):
        build_family(load_relation(fixtures_dir / "relation_full2.json"), 2)
