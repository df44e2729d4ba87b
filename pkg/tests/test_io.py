import io
import random

import pytest
from hypothesis import given, settings, strategies as st

from radixjoin.analysis import random_instance
from radixjoin.baseline import brute_force_join
from radixjoin.boolean import EncodingSpec
from radixjoin.io import (
    DataError,
    QuerySyntaxError,
    bind_query,
    database_from_raw,
    format_query,
    load_database,
    parse_query,
    parse_tsv,
    read_bundle,
    write_bundle,
)
from radixjoin.relmodel import Const, InequalityConstraint, QueryError, Var


def test_parse_triangle(triangle):
    q = parse_query("Q(a,b,c) :- R(a,b), S(b,c), T(a,c).")
    assert q == triangle


def test_parse_constants_constraints_and_comments():
    q = parse_query('# leading comment\nAns(x) :- R(x, 3, "b c"),\n  x <= 5, x != "q".')
    assert q.name == "Ans"
    assert q.atoms[0].args == (Var("x"), Const(3), Const("b c"))
    assert list(q.constraints) == [InequalityConstraint("x", "<=", 5),
                                   InequalityConstraint("x", "!=", "q")]


@pytest.mark.parametrize("text, line, col", [
    ("Q(x) :- R(x)", 1, 13),
    ("Q(x) :- R(x,)", 1, 13),
    ("Q(x)\n  R(x).", 2, 3),
    ("Q(x) :- R(x), x < y.", 1, 19),
    ("Q(x) :- R(x) S(x).", 1, 14),
])
def test_syntax_errors_carry_position(text, line, col):
    with pytest.raises(QuerySyntaxError) as err:
        parse_query(text)
    assert (err.value.line, err.value.col) == (line, col)
    assert str(err.value).startswith(f"{line}:{col}:")


def test_semantic_errors():
    with pytest.raises(QueryError):
        parse_query("Q(x, y) :- R(x).")


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_query_round_trip(seed):
    q = random_instance(random.Random(seed)).query
    again = parse_query(format_query(q))
    assert format_query(again) == format_query(q)
    assert list(again.atoms) == list(q.atoms)
    assert list(again.constraints) == list(q.constraints)


def test_tsv_integer_relation():
    db = database_from_raw([parse_tsv(["R\tA\tB", "0\t1"])])
    assert db.universe_size == 2
    assert EncodingSpec.for_universe(db.universe_size).width == 1
    assert db.relations["R"].tuples == {(0, 1)}


def test_tsv_empty_section():
    db = database_from_raw([parse_tsv(["R\tA\tB"]), parse_tsv(["S\tA", "3"])])
    assert len(db.relations["R"]) == 0 and db.relations["R"].arity == 2


def test_tsv_strings_are_dictionary_encoded():
    db = database_from_raw([parse_tsv(["P\tX", "pear", "apple", "fig"])])
    assert db.universe_size == 3
    assert EncodingSpec.for_universe(db.universe_size).width == 2
    assert db.dictionary == ("apple", "fig", "pear")
    assert db.decode_value(2) == "pear"


@pytest.mark.parametrize("lines, msg", [
    (["R\tA\tB", "0\t1\t2"], "ragged"),
    (["R\tA", "1", "x"], "mixes"),
    ([], "header"),
    (["R"], "header"),
])
def test_tsv_errors(lines, msg):
    with pytest.raises(DataError, match=msg):
        database_from_raw([parse_tsv(lines)])


def test_duplicate_relation_and_universe_override():
    with pytest.raises(DataError):
        database_from_raw([parse_tsv(["R\tA", "1"]), parse_tsv(["R\tA", "2"])])
    assert database_from_raw([parse_tsv(["R\tA", "1"])], universe_size=9).universe_size == 9
    with pytest.raises(DataError):
        database_from_raw([parse_tsv(["R\tA", "5"])], universe_size=2)


def test_load_directory(tmp_path):
    (tmp_path / "R.tsv").write_text("R\tA\tB\n0\t1\n1\t0\n")
    (tmp_path / "S.tsv").write_text("S\tA\n1\n")
    db = load_database([tmp_path])
    assert set(db.relations) == {"R", "S"}
    with pytest.raises(DataError):
        load_database([tmp_path / "missing.tsv"])


def test_bind_strings_and_constraints():
    db = database_from_raw([parse_tsv(["E\tS\tT", "ann\tbob", "bob\tcat", "cat\tdan"])])
    q, bdb = bind_query(parse_query('Q(x, y) :- E(x, y), x >= "b".'), db)
    got = {tuple(bdb.decode_value(v) for v in t) for t in brute_force_join(q, bdb)}
    assert got == {("bob", "cat"), ("cat", "dan")}
    # a literal missing from the data still orders correctly
    q, bdb = bind_query(parse_query('Q(x, y) :- E(x, y), x < "bz".'), db)
    got = {tuple(bdb.decode_value(v) for v in t) for t in brute_force_join(q, bdb)}
    assert got == {("ann", "bob"), ("bob", "cat")}
    q, bdb = bind_query(parse_query('Q(y) :- E("zed", y).'), db)
    assert brute_force_join(q, bdb) == set()
    assert bdb.universe_size == 5


def test_bind_integer_mode():
    db = database_from_raw([parse_tsv(["R\tA", "1", "2"])])
    with pytest.raises(QueryError):
        bind_query(parse_query('Q(x) :- R(x), x = "a".'), db)
    q, bdb = bind_query(parse_query("Q(x) :- R(x), R(40)."), db)
    assert bdb.universe_size == 41 and brute_force_join(q, bdb) == set()


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_bundle_round_trip(seed):
    inst = random_instance(random.Random(seed))
    buf = io.StringIO()
    write_bundle(inst.query, inst.db, buf)
    q, db = read_bundle(buf.getvalue())
    assert format_query(q) == format_query(inst.query)
    assert db.universe_size == inst.db.universe_size
    assert {n: r.tuples for n, r in db.relations.items()} == \
        {n: r.tuples for n, r in inst.db.relations.items()}


def test_bundle_errors():
    with pytest.raises(DataError):
        read_bundle("%relation\nR\tA\n1\n")
    with pytest.raises(DataError):
        read_bundle("%query\nQ(x) :- R(x).\n%bogus\n")
    with pytest.raises(DataError):
        read_bundle("%query\nQ(x) :- R(x).\n%universe many\n")
