import random
from pathlib import Path

import pytest

from radixjoin.boolean import EncodingSpec, booleanise_query
from radixjoin.relmodel import Atom, ConjunctiveQuery, Database

CORPUS = Path(__file__).resolve().parent.parent / "demos" / "corpus"

# lines recorded by test_acceptance, echoed in the terminal summary
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


TRIANGLE = ConjunctiveQuery(
    ["a", "b", "c"], [Atom("R", ["a", "b"]), Atom("S", ["b", "c"]), Atom("T", ["a", "c"])])


@pytest.fixture
def triangle():
    return TRIANGLE


@pytest.fixture
def tri_db():
    """One-bit triangle instance with exactly two answers."""
    return Database.from_dict({
        "R": [(0, 0), (1, 0), (1, 1)],
        "S": [(0, 1), (1, 0)],
        "T": [(0, 1), (1, 0)],
    })


@pytest.fixture
def tri_bq(tri_db):
    return booleanise_query(TRIANGLE, EncodingSpec.for_universe(tri_db.universe_size))


@pytest.fixture
def rng():
    return random.Random(12345)


def corpus_dirs():
    return sorted(p for p in CORPUS.iterdir() if p.is_dir())
