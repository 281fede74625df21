from pathlib import Path

import pytest
from hypothesis import settings

from algebra_core import load_algebra
from distributive_lattice import load_poset

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

settings.register_profile("conlat", deadline=None, max_examples=60)
settings.load_profile("conlat")


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def algebra():
    return lambda name: load_algebra(FIXTURES / f"{name}.json")


@pytest.fixture
def poset():
    return lambda name: load_poset(FIXTURES / f"poset_{name}.json")


@pytest.fixture
def n5():
    return load_algebra(FIXTURES / "n5.json")


@pytest.fixture
def two():
    return load_algebra(FIXTURES / "two.json")


@pytest.fixture
def stone():
    return load_algebra(FIXTURES / "stone.json")


@pytest.fixture
def vee_c():
    return load_algebra(FIXTURES / "vee_algebra_c.json")


@pytest.fixture
def simple_b():
    return load_algebra(FIXTURES / "simple_b.json")


@pytest.fixture
def n5f():
    return load_algebra(FIXTURES / "n5_enriched.json")
