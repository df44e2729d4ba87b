"""Independent oracles for subquery sizes, instance bounds and AGM exponents,
plus the instance generators used in experiments."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .bittrie import AttributeBitOrder
from .boolean import BooleanQuery, BoolVar
from .relmodel import (
    Atom,
    ConjunctiveQuery,
    Const,
    Database,
    Hypergraph,
    InequalityConstraint,
    OPS,
    Var,
    build_hypergraph,
)

SUBQUERY_LIMIT = 24
LP_LIMIT = 12


class GuardError(ValueError):
    """An exact computation was asked for beyond its size guard."""


# ---------------------------------------------------------------------------
# subqueries


def _checked_positions(bq: BooleanQuery, atom_index: int, in_i: set,
                       order: Optional[AttributeBitOrder]) -> list:
    """``(attribute, bit, term)`` triples an atom can test once ``I`` is bound.

    Without an index order every constant or bound position counts. With
    one, only the longest prefix of the order made of such positions does,
    mirroring a trie that can only be read from the root.
    """
    atom = bq.atoms[atom_index]
    if order is None:
        positions = [(a, j) for a in range(atom.arity) for j in range(bq.width)]
    else:
        positions = list(order.positions)
    out = []
    for a, j in positions:
        t = bq.term_at(atom_index, a, j)
        if isinstance(t, BoolVar) and t not in in_i:
            if order is None:
                continue
            break
        out.append((a, j, t))
    return out


def subquery_answer(bq: BooleanQuery, db: Database, I: Sequence[BoolVar],
                    position_orders: Optional[Sequence[AttributeBitOrder]] = None) -> set:
    """The subquery ``Q_I`` as a set of bit tuples ordered like ``I``.

    Every assignment in ``{0,1}^I`` is tested against each atom's relation
    projected onto the Boolean variables of ``I`` it mentions, and against
    every range constraint (checked by enumerating the values that satisfy
    it). Nothing here touches tries or the search engine.
    """
    I = [BoolVar(*v) for v in I]
    if len(set(I)) != len(I):
        raise ValueError("I lists a Boolean variable twice")
    if len(I) > SUBQUERY_LIMIT:
        raise GuardError(f"|I| = {len(I)} exceeds the enumeration guard {SUBQUERY_LIMIT}")
    known = set(bq.bool_vars)
    for v in I:
        if v not in known:
            raise ValueError(f"{v} is not a Boolean variable of the query")
    k = len(I)
    slot = {v: i for i, v in enumerate(I)}
    # candidate c gives variable I[i] the bit (c >> (k-1-i)) & 1
    cand = np.arange(1 << k, dtype=np.int64)
    alive = np.ones(1 << k, dtype=bool)
    in_i = set(I)
    for ai, atom in enumerate(bq.atoms):
        order = None if position_orders is None else position_orders[ai]
        checked = _checked_positions(bq, ai, in_i, order)
        rows = db.relations[atom.predicate].as_array()
        ok = np.ones(len(rows), dtype=bool)
        code = np.zeros(len(rows), dtype=np.int64)
        first_bit: dict = {}
        mask = 0
        for a, j, t in checked:
            bit = (rows[:, a] >> bq.spec.shift(j)) & 1 if len(rows) else np.zeros(0, np.int64)
            if isinstance(t, BoolVar):
                if t in first_bit:
                    ok &= bit == first_bit[t]
                else:
                    first_bit[t] = bit
                    s = k - 1 - slot[t]
                    code |= bit << s
                    mask |= 1 << s
            else:
                ok &= bit == t
        allowed = np.unique(code[ok])
        alive &= np.isin(cand & mask, allowed)
    for var, pruner in bq.pruners.items():
        values = np.arange(1 << bq.width, dtype=np.int64)
        sat = np.ones(len(values), dtype=bool)
        for c in pruner.constraints:
            sat &= np.array([c.holds(int(v)) for v in values], dtype=bool)
        code = np.zeros(len(values), dtype=np.int64)
        mask = 0
        for j in range(bq.width):
            bv = BoolVar(var, j)
            if bv in slot:
                s = k - 1 - slot[bv]
                code |= ((values >> bq.spec.shift(j)) & 1) << s
                mask |= 1 << s
        alive &= np.isin(cand & mask, np.unique(code[sat]))
    out = set()
    for c in cand[alive].tolist():
        out.add(tuple((c >> (k - 1 - i)) & 1 for i in range(k)))
    return out


def subquery_size_oracle(bq: BooleanQuery, db: Database, I: Sequence[BoolVar],
                         position_orders: Optional[Sequence[AttributeBitOrder]] = None) -> int:
    return len(subquery_answer(bq, db, I, position_orders))


@dataclass(frozen=True)
class SubquerySizeProfile:
    """``|Q_{I_1}|, ..., |Q_{I_k}|`` for a growing sequence of prefixes."""

    prefixes: tuple  # tuple of tuples of BoolVar
    sizes: tuple

    def __len__(self) -> int:
        return len(self.sizes)

    def __iter__(self):
        return iter(self.sizes)

    def __getitem__(self, j: int) -> int:
        return self.sizes[j]


def plan_prefixes(groups: Sequence[Sequence[BoolVar]]) -> list:
    out, acc = [], []
    for g in groups:
        acc = acc + list(g)
        out.append(tuple(acc))
    return out


def subquery_profile(bq: BooleanQuery, db: Database, groups: Sequence[Sequence[BoolVar]],
                     position_orders: Optional[Sequence[AttributeBitOrder]] = None,
                     answers: bool = False):
    """Profile over the prefixes ``I_j`` = union of the first ``j`` groups.

    With ``answers=True`` the subquery answers themselves are returned too.
    """
    prefixes = plan_prefixes(groups)
    sets = [subquery_answer(bq, db, I, position_orders) for I in prefixes]
    prof = SubquerySizeProfile(tuple(prefixes), tuple(len(s) for s in sets))
    return (prof, sets) if answers else prof


@dataclass
class BoundReport:
    ok: bool
    checks: dict = field(default_factory=dict)
    first_mismatch: Optional[str] = None

    def to_dict(self) -> dict:
        return {"ok": self.ok, "first_mismatch": self.first_mismatch, **self.checks}


def plan_probe_factors(plan) -> list:
    """Per level, the trie positions all atoms together read for one candidate."""
    return [sum(len(s.levels[g]) for s in plan.schedules) for g in range(plan.k)]


def verify_instance_bound(stats, profile: SubquerySizeProfile, group_sizes: Sequence[int],
                          probe_factors: Optional[Sequence[int]] = None) -> BoundReport:
    """Compare a search's per-level counts with the oracle profile.

    Checks, in order: level ``j`` holds exactly ``|Q_{I_j}|`` nodes; level
    ``j`` tested ``2**k_{j+1}`` candidates per node; and, when
    ``probe_factors`` is given, trie probes stay within that many per
    candidate at each level.
    """
    nodes = list(stats.nodes_per_level)
    cands = list(stats.candidates_tested_per_level)
    k = len(group_sizes)
    if len(profile) != k or len(nodes) != k + 1 or len(cands) != k:
        raise ValueError(
            f"dimension mismatch: {len(nodes)} node levels, {len(cands)} candidate levels, "
            f"{len(profile)} profile entries, {k} groups")
    report = BoundReport(True)
    expected_nodes = [1] + list(profile.sizes)
    for j in range(1, k + 1):
        if nodes[j] != expected_nodes[j]:
            report.ok = False
            report.first_mismatch = (f"level {j}: {nodes[j]} nodes, subquery size "
                                     f"{expected_nodes[j]}")
            break
    # level 0 is always the single root
    expected_cands = [(1 << group_sizes[j]) * expected_nodes[j] for j in range(k)]
    if report.ok and cands != expected_cands:
        j = next(i for i in range(k) if cands[i] != expected_cands[i])
        report.ok = False
        report.first_mismatch = (f"level {j}: {cands[j]} candidates tested, expected "
                                 f"{expected_cands[j]}")
    probe_bound = None
    if probe_factors is not None:
        probe_bound = sum(c * f for c, f in zip(expected_cands, probe_factors))
        if report.ok and stats.probes > probe_bound:
            report.ok = False
            report.first_mismatch = f"{stats.probes} trie probes exceed the bound {probe_bound}"
    report.checks = {
        "nodes_per_level": nodes,
        "subquery_sizes": expected_nodes,
        "candidates_tested_per_level": cands,
        "candidate_bound": sum(expected_cands),
        "probes": stats.probes,
        "probe_bound": probe_bound,
    }
    return report


# ---------------------------------------------------------------------------
# fractional edge cover


@dataclass(frozen=True)
class FractionalCover:
    weights: tuple  # Fraction per edge, in hypergraph edge order
    total: Fraction

    def covers(self, h: Hypergraph) -> bool:
        if any(w < 0 for w in self.weights):
            return False
        return all(
            sum((w for w, e in zip(self.weights, h.edges) if v in e), Fraction(0)) >= 1
            for v in h.vertices
        )


def _solve_exact(a: list, b: list) -> Optional[list]:
    """Gauss-Jordan over Fractions; ``None`` if the square system is singular."""
    n = len(a)
    m = [list(map(Fraction, row)) + [Fraction(rhs)] for row, rhs in zip(a, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return None
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        m[col] = [x / p for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]


def fractional_edge_cover(h: Hypergraph) -> FractionalCover:
    """Minimum fractional edge cover, exactly, by enumerating basic solutions.

    A vertex of the cover polytope has some support ``T`` of edges and a set
    ``S`` of ``|T|`` vertices whose constraints are tight, with ``A[S, T]``
    nonsingular. Every such system is solved in rationals; feasible
    solutions are compared and the cheapest kept.
    """
    vertices = sorted(h.vertices, key=str)
    edges = list(h.edges)
    if len(vertices) > LP_LIMIT or len(edges) > LP_LIMIT:
        raise GuardError(f"fractional edge cover is limited to {LP_LIMIT} vertices and edges")
    if not vertices:
        return FractionalCover(tuple(Fraction(0) for _ in edges), Fraction(0))
    uncovered = [v for v in vertices if not any(v in e for e in edges)]
    if uncovered:
        raise ValueError(f"vertex {uncovered[0]} lies in no edge; no cover exists")
    inc = [[1 if v in e else 0 for e in edges] for v in vertices]
    best: Optional[FractionalCover] = None
    for size in range(1, len(edges) + 1):
        for T in itertools.combinations(range(len(edges)), size):
            if not all(any(inc[v][e] for e in T) for v in range(len(vertices))):
                continue
            cols = np.array([[inc[v][e] for e in T] for v in range(len(vertices))], dtype=float)
            if np.linalg.matrix_rank(cols) < size:
                continue
            for S in itertools.combinations(range(len(vertices)), size):
                sub = cols[list(S)]
                if abs(np.linalg.det(sub)) < 1e-9:
                    continue
                sol = _solve_exact([[inc[v][e] for e in T] for v in S], [1] * size)
                if sol is None or any(x < 0 for x in sol):
                    continue
                w = [Fraction(0)] * len(edges)
                for e, x in zip(T, sol):
                    w[e] = x
                cover = FractionalCover(tuple(w), sum(w, Fraction(0)))
                if cover.covers(h) and (best is None or cover.total < best.total):
                    best = cover
    assert best is not None
    return best


def fractional_cover_number(q: ConjunctiveQuery) -> Fraction:
    return fractional_edge_cover(build_hypergraph(q)).total


def project_cover(cover: FractionalCover, h: Hypergraph, subset) -> FractionalCover:
    """Keep every edge's weight on its intersection with ``subset``.

    The result covers ``h.induced(subset)`` whenever ``cover`` covers ``h``.
    """
    sub = frozenset(subset)
    weights = tuple(w if e & sub else Fraction(0) for w, e in zip(cover.weights, h.edges))
    return FractionalCover(weights, sum(weights, Fraction(0)))


# ---------------------------------------------------------------------------
# generators


@dataclass
class GeneratedInstance:
    db: Database
    query: ConjunctiveQuery
    meta: dict = field(default_factory=dict)


TRIANGLE = ConjunctiveQuery(
    ["a", "b", "c"], [Atom("R", ["a", "b"]), Atom("S", ["b", "c"]), Atom("T", ["a", "c"])],
    name="Q")


def gen_agm_grid(q_side: int) -> GeneratedInstance:
    """R = S = T = the full ``q_side`` x ``q_side`` grid under the triangle query."""
    if q_side < 1:
        raise ValueError("q_side must be at least 1")
    grid = [(i, j) for i in range(q_side) for j in range(q_side)]
    db = Database.from_dict({"R": grid, "S": grid, "T": grid}, universe_size=q_side)
    return GeneratedInstance(db, TRIANGLE, {
        "N": q_side * q_side, "expected_output": q_side ** 3, "expected_exponent": 1.5})


def gen_pathological_pairs(count: int) -> GeneratedInstance:
    """R = {(2i, 2i+1)} under Q(x) :- R(x, x); the answer is empty."""
    if count < 1:
        raise ValueError("count must be at least 1")
    rows = [(2 * i, 2 * i + 1) for i in range(count)]
    db = Database.from_dict({"R": rows}, universe_size=2 * count)
    q = ConjunctiveQuery(["x"], [Atom("R", ["x", "x"])], name="Q")
    return GeneratedInstance(db, q, {"N": count, "expected_output": 0})


def gen_bernoulli_relation(N: int, r: int = 2, s: int = 1, seed: int = 0,
                           width: int = 32) -> GeneratedInstance:
    """``N`` distinct uniform tuples over ``[0, 2**width)^r`` and a partial-match query.

    The first ``s`` positions of the query atom are fixed to uniform random
    constants, the rest are free variables.
    """
    if not 0 <= s <= r or r < 1:
        raise ValueError("need 0 <= s <= r and r >= 1")
    if N > (1 << (width * r)):
        raise ValueError("N exceeds the number of distinct tuples")
    rng = np.random.default_rng(seed)
    rows = np.empty((0, r), dtype=np.int64)
    while len(rows) < N:
        extra = rng.integers(0, 1 << width, size=(N - len(rows), r), dtype=np.int64)
        rows = np.unique(np.concatenate([rows, extra]), axis=0)
    rows = rows[rng.permutation(len(rows))[:N]]
    consts = rng.integers(0, 1 << width, size=s).tolist()
    free = [f"y{i}" for i in range(r - s)]
    args = [Const(int(c)) for c in consts] + [Var(v) for v in free]
    db = Database.from_dict({"R": [tuple(t) for t in rows.tolist()]},
                            universe_size=1 << width, arities={"R": r})
    q = ConjunctiveQuery(free, [Atom("R", args)], name="PM")
    return GeneratedInstance(db, q, {
        "N": N, "r": r, "s": s, "seed": seed, "width": width,
        "expected_exponent": 1 - s / r})


def fit_scaling_exponent(series: Sequence[tuple], noise_floor: float = 32) -> float:
    """Least-squares slope of ``log(cost)`` against ``log(N)``.

    The smallest size is dropped when its cost is under ``noise_floor``.
    """
    pts = sorted((float(n), float(c)) for n, c in series)
    if len(pts) < 4:
        raise ValueError("need at least 4 (N, cost) points to fit an exponent")
    if pts[0][1] < noise_floor:
        pts = pts[1:]
    if any(c <= 0 for _, c in pts):
        raise ValueError("costs must be positive to fit on a log scale")
    x = np.log([n for n, _ in pts])
    y = np.log([c for _, c in pts])
    return float(np.polyfit(x, y, 1)[0])


def random_instance(rng: random.Random, max_vars: int = 4, max_atoms: int = 4,
                    max_universe: int = 8, max_tuples: int = 64,
                    p_const: float = 0.15, p_repeat: float = 0.15,
                    p_constraint: float = 0.3) -> GeneratedInstance:
    """A small random database and query exercising every query feature.

    Atoms may carry constants and repeated variables, may repeat verbatim,
    and several atoms may share one relation; some variables get range
    constraints.
    """
    U = rng.randint(2, max_universe)
    n = rng.randint(1, max_vars)
    variables = [f"v{i}" for i in range(n)]
    m = rng.randint(1, max_atoms)
    rel_names = [f"R{i}" for i in range(rng.randint(1, m))]
    arities = {name: rng.randint(1, 3) for name in rel_names}
    atoms = []
    for _ in range(m):
        if atoms and rng.random() < 0.1:
            atoms.append(rng.choice(atoms))
            continue
        name = rng.choice(rel_names)
        args: list = []
        for _ in range(arities[name]):
            used = [a for a in args if isinstance(a, str)]
            roll = rng.random()
            if roll < p_const:
                args.append(Const(rng.randrange(U)))
            elif used and roll < p_const + p_repeat:
                args.append(rng.choice(used))
            else:
                args.append(rng.choice(variables))
        atoms.append(Atom(name, args))
    mentioned = {v for a in atoms for v in a.variables}
    for v in variables:
        if v not in mentioned:
            # every variable must occur in the body
            name = rng.choice(rel_names)
            args = [v] + [rng.choice(variables) for _ in range(arities[name] - 1)]
            atoms.append(Atom(name, args))
    constraints = []
    while rng.random() < p_constraint and len(constraints) < 3:
        constraints.append(InequalityConstraint(
            rng.choice(variables), rng.choice(OPS), rng.randint(0, U)))
    data = {}
    for name, r in arities.items():
        space = U ** r
        size = rng.randint(0, min(max_tuples, space))
        picks = rng.sample(range(space), size)
        data[name] = [tuple((x // U ** i) % U for i in range(r)) for x in picks]
    db = Database.from_dict(data, universe_size=U, arities=arities)
    q = ConjunctiveQuery(variables, atoms, constraints, name="Q")
    return GeneratedInstance(db, q, {"universe_size": U})


def agm_bound(q: ConjunctiveQuery, db: Database) -> float:
    """``N ** rho*`` with ``N`` the largest relation in the query."""
    N = max((len(db.relations[a.predicate]) for a in q.atoms), default=0)
    return float(N) ** float(fractional_cover_number(q)) if N else 0.0


__all__ = [
    "GuardError", "subquery_answer", "subquery_size_oracle", "SubquerySizeProfile",
    "plan_prefixes", "subquery_profile", "plan_probe_factors", "BoundReport", "verify_instance_bound",
    "FractionalCover", "fractional_edge_cover", "fractional_cover_number", "project_cover",
    "GeneratedInstance", "TRIANGLE", "gen_agm_grid", "gen_pathological_pairs",
    "gen_bernoulli_relation", "fit_scaling_exponent", "random_instance", "agm_bound",
]
