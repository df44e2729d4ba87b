import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from radixjoin.analysis import (
    SUBQUERY_LIMIT,
    FractionalCover,
    GuardError,
    agm_bound,
    fit_scaling_exponent,
    fractional_cover_number,
    fractional_edge_cover,
    gen_agm_grid,
    gen_bernoulli_relation,
    gen_pathological_pairs,
    project_cover,
    subquery_answer,
    subquery_profile,
    subquery_size_oracle,
    verify_instance_bound,
)
from radixjoin.boolean import BoolVar, EncodingSpec, booleanise_query
from radixjoin.engine import grtj
from radixjoin.planner import interleaved_variable_order
from radixjoin.relmodel import Atom, ConjunctiveQuery, Database, Hypergraph, build_hypergraph

A0, B0, C0 = BoolVar("a", 0), BoolVar("b", 0), BoolVar("c", 0)


@pytest.mark.parametrize("I, size", [([], 1), ([A0], 2), ([A0, B0], 3), ([A0, C0], 2),
                                     ([A0, B0, C0], 2)])
def test_oracle_on_one_bit_triangle(tri_bq, tri_db, I, size):
    assert subquery_size_oracle(tri_bq, tri_db, I) == size


def test_oracle_answer_tuples(tri_bq, tri_db):
    assert subquery_answer(tri_bq, tri_db, [A0, B0]) == {(0, 0), (1, 0), (1, 1)}
    assert subquery_answer(tri_bq, tri_db, [B0, A0]) == {(0, 0), (0, 1), (1, 1)}
    assert subquery_answer(tri_bq, tri_db, [A0, B0, C0]) == {(0, 0, 1), (1, 1, 0)}


def test_oracle_empty_atom_and_repeat(triangle):
    db = Database.from_dict({"R": [], "S": [(0, 1)], "T": [(0, 1)]}, arities={"R": 2})
    bq = booleanise_query(triangle, EncodingSpec.for_universe(2))
    assert subquery_answer(bq, db, [A0]) == set()
    q = ConjunctiveQuery(["x"], [Atom("R", ["x", "x"])])
    db = Database.from_dict({"R": [(0, 1)]})
    bq = booleanise_query(q, EncodingSpec.for_universe(2))
    assert subquery_answer(bq, db, [BoolVar("x", 0)]) == set()


def test_oracle_guards(tri_bq, tri_db):
    with pytest.raises(ValueError):
        subquery_answer(tri_bq, tri_db, [A0, A0])
    with pytest.raises(ValueError):
        subquery_answer(tri_bq, tri_db, [BoolVar("z", 0)])
    q = ConjunctiveQuery(["x"], [Atom("R", ["x"])])
    db = Database.from_dict({"R": [(1,)]}, universe_size=1 << 25)
    bq = booleanise_query(q, EncodingSpec.for_universe(db.universe_size))
    bits = [BoolVar("x", j) for j in range(SUBQUERY_LIMIT + 1)]
    with pytest.raises(GuardError):
        subquery_answer(bq, db, bits)


def _profile_and_stats(bq, db, alpha):
    order = interleaved_variable_order(bq.variables, bq.width, alpha)
    groups = [[v] for v in order]
    _, stats = grtj(bq, db, order)
    return subquery_profile(bq, db, groups), stats, [1] * len(groups)


@pytest.mark.parametrize("alpha, nodes", [([0, 1, 2], [1, 2, 3, 2]), ([0, 2, 1], [1, 2, 2, 2])])
def test_verify_bound_one_bit_triangle(tri_bq, tri_db, alpha, nodes):
    prof, stats, sizes = _profile_and_stats(tri_bq, tri_db, alpha)
    report = verify_instance_bound(stats, prof, sizes)
    assert report.ok, report.first_mismatch
    assert report.checks["subquery_sizes"] == nodes
    assert list(stats.nodes_per_level) == nodes


def test_verify_bound_empty_database(triangle):
    db = Database.from_dict({"R": [], "S": [], "T": []}, universe_size=2,
                            arities={"R": 2, "S": 2, "T": 2})
    bq = booleanise_query(triangle, EncodingSpec.for_universe(2))
    prof, stats, sizes = _profile_and_stats(bq, db, None)
    report = verify_instance_bound(stats, prof, sizes)
    assert report.ok and report.checks["subquery_sizes"] == [1, 0, 0, 0]


def test_verify_bound_reports_mismatch(tri_bq, tri_db):
    prof, stats, sizes = _profile_and_stats(tri_bq, tri_db, [0, 1, 2])
    other, _, _ = _profile_and_stats(tri_bq, tri_db, [0, 2, 1])
    report = verify_instance_bound(stats, other, sizes)
    assert not report.ok and report.first_mismatch.startswith("level 2")
    with pytest.raises(ValueError):
        verify_instance_bound(stats, prof, sizes[:2])
    bad = verify_instance_bound(stats, prof, sizes, probe_factors=[0, 0, 0])
    assert not bad.ok and "probes" in bad.first_mismatch


def test_cover_triangle_and_paths(triangle):
    assert fractional_cover_number(triangle) == Fraction(3, 2)
    path = ConjunctiveQuery(["x", "y", "z"], [Atom("R", ["x", "y"]), Atom("S", ["y", "z"])])
    assert fractional_cover_number(path) == 2
    star = ConjunctiveQuery(["x", "y", "z"], [Atom("R", ["x", "y", "z"]), Atom("S", ["x"])])
    assert fractional_cover_number(star) == 1


def test_cover_errors():
    with pytest.raises(ValueError):
        fractional_edge_cover(Hypergraph(frozenset("xy"), (frozenset("x"),)))
    big = Hypergraph(frozenset(range(13)), tuple(frozenset([i]) for i in range(13)))
    with pytest.raises(GuardError):
        fractional_edge_cover(big)


@st.composite
def hypergraphs(draw):
    n = draw(st.integers(1, 6))
    m = draw(st.integers(1, 6))
    edges = [frozenset(draw(st.sets(st.integers(0, n - 1), min_size=1, max_size=n)))
             for _ in range(m)]
    for v in range(n):
        if not any(v in e for e in edges):
            edges.append(frozenset([v]))
    return Hypergraph(frozenset(range(n)), tuple(edges[:8]))


@settings(max_examples=60, deadline=None)
@given(hypergraphs())
def test_cover_matches_linprog(h):
    if any(not any(v in e for e in h.edges) for v in h.vertices):
        return
    cover = fractional_edge_cover(h)
    assert cover.covers(h)
    a = np.array([[-1.0 if v in e else 0.0 for e in h.edges] for v in sorted(h.vertices)])
    res = linprog(np.ones(len(h.edges)), A_ub=a, b_ub=-np.ones(len(a)), bounds=(0, None))
    assert res.status == 0
    assert abs(float(cover.total) - res.fun) < 1e-7


@settings(max_examples=40, deadline=None)
@given(hypergraphs(), st.data())
def test_projected_cover_covers_induced(h, data):
    if any(not any(v in e for e in h.edges) for v in h.vertices):
        return
    subset = data.draw(st.sets(st.sampled_from(sorted(h.vertices))))
    proj = project_cover(fractional_edge_cover(h), h, subset)
    assert proj.covers(h.induced(subset))
    assert proj.total <= fractional_edge_cover(h).total


def test_cover_covers_check():
    h = build_hypergraph(ConjunctiveQuery(["x"], [Atom("R", ["x"])]))
    assert not FractionalCover((Fraction(-1),), Fraction(-1)).covers(h)
    assert not FractionalCover((Fraction(1, 2),), Fraction(1, 2)).covers(h)


@pytest.mark.parametrize("side", [1, 4, 8])
def test_grid_generator(side):
    inst = gen_agm_grid(side)
    assert inst.db.universe_size == side
    assert all(len(r) == side * side for r in inst.db.relations.values())
    assert inst.meta["expected_output"] == side ** 3
    assert agm_bound(inst.query, inst.db) == pytest.approx(side ** 3)


def test_pairs_generator():
    inst = gen_pathological_pairs(3)
    assert sorted(inst.db.relations["R"].tuples) == [(0, 1), (2, 3), (4, 5)]
    assert inst.db.universe_size == 6
    with pytest.raises(ValueError):
        gen_pathological_pairs(0)


def test_bernoulli_generator():
    inst = gen_bernoulli_relation(500, r=3, s=2, seed=7, width=8)
    rows = inst.db.relations["R"].tuples
    assert len(rows) == 500
    assert all(0 <= v < 256 for t in rows for v in t)
    assert list(inst.query.head_vars) == ["y0"]
    assert inst.meta["expected_exponent"] == pytest.approx(1 / 3)
    again = gen_bernoulli_relation(500, r=3, s=2, seed=7, width=8)
    assert again.db.relations["R"].tuples == rows
    with pytest.raises(ValueError):
        gen_bernoulli_relation(10, r=2, s=3)


def test_fit_exponent():
    pts = [(n, 5 * n ** 0.5) for n in (100, 1000, 10000, 100000)]
    assert fit_scaling_exponent(pts) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        fit_scaling_exponent(pts[:3])
    # a tiny first point is dropped as noise
    noisy = [(10, 1)] + [(n, n) for n in (100, 1000, 10000)]
    assert fit_scaling_exponent(noisy) == pytest.approx(1.0)


@pytest.mark.parametrize("s, lo, hi", [(0, 0.9, 1.1), (2, -0.1, 0.1)])
def test_partial_match_extremes(s, lo, hi):
    from radixjoin.engine import rtj
    series = []
    for n in (256, 1024, 4096, 16384):
        inst = gen_bernoulli_relation(n, r=2, s=s, seed=3, width=16)
        bq = booleanise_query(inst.query, EncodingSpec.for_universe(inst.db.universe_size))
        _, stats = rtj(bq, inst.db)
        series.append((n, max(stats.internal_nodes, 1)))
    slope = fit_scaling_exponent(series, noise_floor=0)
    assert lo <= slope <= hi
