"""Radix triejoin execution.

Both entry points run the same bitwise backtracking search over binary tries:

* :func:`grtj` binds one Boolean variable per level and reads a trie built
  for each atom in an order consistent with the variable order.
* :func:`rtj` binds one plan group per level and reads the single
  interleaved trie of each relation, shared by every atom over it.

Each search node tries all ``2**k`` assignments of the next group (ascending
binary value, first variable most significant) and keeps those for which
every atom's trie still has a path and every range constraint can still be
met.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from .bittrie import AttributeBitOrder, BitTrie, build_trie
from .boolean import BooleanQuery, BoolVar, EncodingSpec
from .planner import (
    ConfigurationError,
    ExpansionPlan,
    VariableOrder,
    attach_schedules,
    default_index_orders,
    order_consistent_index,
    plan_for_query,
    resolve_index_orders,
    singleton_plan,
    validate_plan,
)
from .relmodel import Database

__all__ = [
    "IndexCatalog", "RecursionStats", "SearchState", "Executor",
    "grtj", "rtj", "run_plan", "decode_results",
]


class IndexCatalog:
    """Lazily built tries keyed by relation and attribute bit order."""

    def __init__(self, db: Database, spec: EncodingSpec):
        spec.check(db.universe_size - 1)
        self.db = db
        self.spec = spec
        self._tries: dict = {}
        self.built = 0

    def trie(self, name: str, order: AttributeBitOrder) -> BitTrie:
        key = (name, order.positions)
        t = self._tries.get(key)
        if t is None:
            if name not in self.db.relations:
                raise ConfigurationError(f"no relation named {name}")
            t = build_trie(self.db.relations[name], order, self.spec)
            self._tries[key] = t
            self.built += 1
        return t

    def __len__(self) -> int:
        return len(self._tries)


@dataclass
class RecursionStats:
    nodes_per_level: list
    candidates_tested_per_level: list
    solutions: int = 0
    probes: int = 0  # child lookups attempted
    descents: int = 0  # child lookups that found a node
    wall_time: float = 0.0
    indexes_used: int = 0
    level_sets: Optional[list] = None

    @classmethod
    def empty(cls, k: int, record_levels: bool = False) -> "RecursionStats":
        return cls([0] * (k + 1), [0] * k,
                   level_sets=[set() for _ in range(k + 1)] if record_levels else None)

    @property
    def total_nodes(self) -> int:
        return sum(self.nodes_per_level)

    @property
    def total_candidates(self) -> int:
        return sum(self.candidates_tested_per_level)

    @property
    def internal_nodes(self) -> int:
        return sum(self.nodes_per_level[:-1])

    def merge(self, other: "RecursionStats") -> None:
        for i, v in enumerate(other.nodes_per_level):
            self.nodes_per_level[i] += v
        for i, v in enumerate(other.candidates_tested_per_level):
            self.candidates_tested_per_level[i] += v
        self.solutions += other.solutions
        self.probes += other.probes
        self.descents += other.descents
        if self.level_sets is not None and other.level_sets is not None:
            for mine, theirs in zip(self.level_sets, other.level_sets):
                mine |= theirs

    def to_dict(self) -> dict:
        return {
            "nodes_per_level": list(self.nodes_per_level),
            "candidates_tested_per_level": list(self.candidates_tested_per_level),
            "candidates": self.total_candidates,
            "solutions": self.solutions,
            "probes": self.probes,
            "descents": self.descents,
            "wall_time": self.wall_time,
            "indexes_used": self.indexes_used,
        }


@dataclass(frozen=True)
class SearchState:
    """One node of the recursion tree.

    ``bits`` holds the bound Boolean variables in plan order; ``cursors``
    holds one trie node id per atom, already advanced past every position
    whose variables are bound.
    """

    level: int
    cursors: tuple
    bits: tuple


def decode_results(bit_tuples: Iterable[Sequence[int]], spec: EncodingSpec,
                   layout: Sequence[BoolVar], variables: Sequence[str]) -> set:
    """Regroup complete bit assignments (ordered as ``layout``) into value tuples."""
    slot = {v: i for i, v in enumerate(variables)}
    refs = [(slot[bv.var], spec.significance(bv.bit)) for bv in layout]
    out = set()
    for bits in bit_tuples:
        vals = [0] * len(variables)
        for (i, sig), b in zip(refs, bits):
            if b:
                vals[i] |= sig
        out.add(tuple(vals))
    return out


TraceSink = Callable[[str], None]


class Executor:
    """A plan compiled against concrete tries, ready to search."""

    def __init__(self, bq: BooleanQuery, plan: ExpansionPlan, tries: Sequence[BitTrie]):
        if not plan.schedules:
            raise ConfigurationError("plan has no descent schedules attached")
        if len(tries) != bq.m:
            raise ConfigurationError("need one trie per atom")
        for s, t in zip(plan.schedules, tries):
            if t.order != s.order:
                raise ConfigurationError(f"trie for {s.atom} does not match its scheduled order")
        self.bq = bq
        self.plan = plan
        self.tries = list(tries)
        self.layout = [v for g in plan.groups for v in g]
        flat = {v: i for i, v in enumerate(self.layout)}
        self.base = []
        pos = 0
        for g in plan.groups:
            self.base.append(pos)
            pos += len(g)
        self.sizes = [len(g) for g in plan.groups]
        k = plan.k

        # per level: [(atom, children pair, [(source, index)])]; source 0 fixed bit,
        # 1 bit bound at an earlier level, 2 bit of the current candidate
        self.steps: list = [[] for _ in range(k)]
        for a, (sched, trie) in enumerate(zip(plan.schedules, self.tries)):
            for g, positions in enumerate(sched.levels):
                if not positions:
                    continue
                ops = []
                for q in positions:
                    t = sched.terms[q]
                    if isinstance(t, BoolVar):
                        f = flat[t]
                        ops.append((1, f) if f < self.base[g] else (2, f - self.base[g]))
                    else:
                        ops.append((0, t))
                self.steps[g].append((a, trie.children, ops))

        # per level: [(pruner, [(source, index, significance)])] for constrained
        # variables that receive bits at that level (all of them at level 0)
        self.checks: list = [[] for _ in range(k)]
        spec = bq.spec
        for var, pruner in bq.pruners.items():
            for g in range(k):
                if g and not any(v.var == var for v in plan.groups[g]):
                    continue
                refs = []
                for h in range(g + 1):
                    for v in plan.groups[h]:
                        if v.var == var:
                            f = flat[v]
                            src = (1, f) if h < g else (2, f - self.base[g])
                            refs.append(src + (spec.significance(v.bit),))
                self.checks[g].append((pruner, refs))
        self._unsat = any(not p.can_extend(0, 0) for p in bq.pruners.values())

    # -- search -----------------------------------------------------------

    def root_state(self) -> Optional[SearchState]:
        """Root with prefix constants pre-descended; ``None`` if some atom is already empty."""
        cursors = []
        for sched, trie in zip(self.plan.schedules, self.tries):
            if trie.size == 0:
                return None
            c = 0
            for q in sched.pre:
                c = trie.children[sched.terms[q]][c]
                if c < 0:
                    return None
            cursors.append(c)
        if self._unsat:
            return None
        return SearchState(0, tuple(cursors), ())

    def basic_solve(self, state: SearchState, stats: Optional[RecursionStats] = None) -> list:
        """All surviving assignments of the next group, as ``(bits, child_state)`` pairs."""
        g = state.level
        size = self.sizes[g]
        steps = self.steps[g]
        checks = self.checks[g]
        bits = state.bits
        out = []
        probes = descents = 0
        for cand in range(1 << size):
            cbits = tuple((cand >> (size - 1 - i)) & 1 for i in range(size))
            cursors = list(state.cursors)
            ok = True
            for a, children, ops in steps:
                c = cursors[a]
                for src, x in ops:
                    b = x if src == 0 else (bits[x] if src == 1 else cbits[x])
                    probes += 1
                    c = children[b][c]
                    if c < 0:
                        ok = False
                        break
                    descents += 1
                if not ok:
                    break
                cursors[a] = c
            if ok:
                for pruner, refs in checks:
                    mask = val = 0
                    for src, x, sig in refs:
                        mask |= sig
                        if (bits[x] if src == 1 else cbits[x]):
                            val |= sig
                    if not pruner.can_extend(mask, val):
                        ok = False
                        break
            if ok:
                out.append((cbits, SearchState(g + 1, tuple(cursors), bits + cbits)))
        if stats is not None:
            stats.candidates_tested_per_level[g] += 1 << size
            stats.probes += probes
            stats.descents += descents
        return out

    def _explore(self, start: list, stats: RecursionStats, trace: Optional[TraceSink]) -> list:
        k = self.plan.k
        found = []
        stack = list(reversed(start))
        levels = stats.level_sets
        while stack:
            st = stack.pop()
            stats.nodes_per_level[st.level] += 1
            if levels is not None:
                levels[st.level].add(st.bits)
            if st.level == k:
                found.append(st.bits)
                if trace:
                    trace(f"level={st.level}\tprefix={_bitstr(st.bits)}\tsolution")
                continue
            kids = self.basic_solve(st, stats)
            if trace:
                surv = " ".join(_bitstr(c) for c, _ in kids)
                trace(f"level={st.level}\tprefix={_bitstr(st.bits)}\tsurvivors=[{surv}]")
            for _, child in reversed(kids):
                stack.append(child)
        return found

    def run(self, record_levels: bool = False, trace: Optional[TraceSink] = None,
            jobs: int = 1) -> tuple:
        k = self.plan.k
        stats = RecursionStats.empty(k, record_levels)
        t0 = time.perf_counter()
        root = self.root_state()
        found: list = []
        if root is None:
            stats.nodes_per_level[0] = 1
            if levels := stats.level_sets:
                levels[0].add(())
            if k:
                stats.candidates_tested_per_level[0] = 1 << self.sizes[0]
            if trace:
                trace("level=0\tprefix=\tsurvivors=[]")
        elif jobs <= 1 or k == 0:
            found = self._explore([root], stats, trace)
        else:
            # the root is expanded here; its subtrees go to independent workers
            stats.nodes_per_level[0] = 1
            if stats.level_sets is not None:
                stats.level_sets[0].add(())
            kids = [c for _, c in self.basic_solve(root, stats)]
            chunks = [kids[i::jobs] for i in range(jobs)]

            def work(chunk):
                local = RecursionStats.empty(k, record_levels)
                return local, self._explore(chunk, local, None)

            with ThreadPoolExecutor(max_workers=jobs) as pool:
                for local, part in pool.map(work, chunks):
                    stats.merge(local)
                    found.extend(part)
        results = decode_results(found, self.bq.spec, self.layout, self.bq.variables)
        stats.solutions = len(found)
        stats.wall_time = time.perf_counter() - t0
        stats.indexes_used = len({id(t) for t in self.tries})
        return results, stats


def _bitstr(bits: Sequence[int]) -> str:
    return "".join(str(b) for b in bits)


def _catalog(db: Union[Database, IndexCatalog], spec: EncodingSpec) -> IndexCatalog:
    if isinstance(db, IndexCatalog):
        if db.spec != spec:
            raise ConfigurationError("index catalog was built for a different encoding")
        return db
    return IndexCatalog(db, spec)


def run_plan(bq: BooleanQuery, catalog: IndexCatalog, plan: ExpansionPlan, index_orders,
             record_levels: bool = False, trace: Optional[TraceSink] = None, jobs: int = 1):
    orders = resolve_index_orders(bq, index_orders)
    bq.source.validate_against(catalog.db)
    if not plan.schedules:
        plan = attach_schedules(bq, plan, orders)
    tries = [catalog.trie(atom.predicate, order) for atom, order in zip(bq.atoms, orders)]
    return Executor(bq, plan, tries).run(record_levels, trace, jobs)


def grtj(bq: BooleanQuery, db: Union[Database, IndexCatalog], order: VariableOrder,
         record_levels: bool = False, trace: Optional[TraceSink] = None, jobs: int = 1):
    """Generic radix triejoin: one Boolean variable per level.

    Every atom gets a trie whose attribute order follows ``order``; tries are
    built on demand (and cached when a catalog is passed in).
    """
    order = VariableOrder(order)
    if set(order) != set(bq.bool_vars) or len(order) != len(bq.bool_vars):
        raise ConfigurationError("variable order must list every Boolean variable once")
    catalog = _catalog(db, bq.spec)
    orders = [order_consistent_index(bq, i, order) for i in range(bq.m)]
    plan = attach_schedules(bq, singleton_plan(order), orders)
    return run_plan(bq, catalog, plan, orders, record_levels, trace, jobs)


def rtj(bq: BooleanQuery, db: Union[Database, IndexCatalog], plan: Optional[ExpansionPlan] = None,
        index_orders: Optional[Mapping[str, AttributeBitOrder]] = None,
        alpha: Optional[Sequence[int]] = None, record_levels: bool = False,
        trace: Optional[TraceSink] = None, jobs: int = 1):
    """Radix triejoin over one interleaved trie per relation.

    Without an explicit ``plan`` the SCC expansion plan for the index orders
    is used. A supplied plan is checked against the indexes first.
    """
    catalog = _catalog(db, bq.spec)
    if index_orders is None:
        index_orders = default_index_orders(bq)
    orders = resolve_index_orders(bq, index_orders)
    if plan is None:
        plan = plan_for_query(bq, orders, alpha)
    else:
        validate_plan(bq, plan, orders)
        plan = attach_schedules(bq, plan, orders)
    return run_plan(bq, catalog, plan, orders, record_levels, trace, jobs)
