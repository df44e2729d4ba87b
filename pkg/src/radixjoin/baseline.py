"""Reference join algorithms used as oracles and for comparisons."""

from __future__ import annotations

import itertools
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Optional, Sequence

from .relmodel import (
    Atom,
    ConjunctiveQuery,
    Const,
    Database,
    ground_atom,
    normalize_query,
)

BRUTE_FORCE_LIMIT = 1 << 24


class SizeError(ValueError):
    """The requested enumeration is too large."""


def brute_force_join(q: ConjunctiveQuery, db: Database, limit: int = BRUTE_FORCE_LIMIT) -> set:
    """Answer ``q`` by testing every assignment in ``U ** n``."""
    q.validate_against(db)
    variables = list(q.head_vars)
    space = db.universe_size ** len(variables)
    if space > limit:
        raise SizeError(f"brute force would enumerate {space} assignments (limit {limit})")
    atoms = [(a, db.relations[a.predicate].tuples) for a in q.atoms]
    out = set()
    for values in itertools.product(range(db.universe_size), repeat=len(variables)):
        assignment = dict(zip(variables, values))
        if all(ground_atom(a, assignment) in tuples for a, tuples in atoms) and \
                all(c.holds(assignment[c.var]) for c in q.constraints):
            out.add(values)
    return out


# ---------------------------------------------------------------------------
# leapfrog


@dataclass
class ProbeStats:
    seeks: int = 0
    bindings: int = 0

    def to_dict(self) -> dict:
        return {"seeks": self.seeks, "bindings": self.bindings}


class _ListIter:
    """Cursor over distinct sorted keys ``col[lo:hi]``."""

    __slots__ = ("col", "pos", "hi", "stats")

    def __init__(self, col: Sequence[int], lo: int, hi: int, stats: ProbeStats):
        self.col, self.pos, self.hi, self.stats = col, lo, hi, stats

    @property
    def at_end(self) -> bool:
        return self.pos >= self.hi

    def key(self) -> int:
        return self.col[self.pos]

    def next(self) -> None:
        self.pos = bisect_right(self.col, self.col[self.pos], self.pos, self.hi)

    def seek(self, x: int) -> None:
        self.stats.seeks += 1
        self.pos = bisect_left(self.col, x, self.pos, self.hi)


def _leapfrog(iters: list) -> list:
    """Common keys of ``iters`` (each positioned at its first key)."""
    if not iters or any(it.at_end for it in iters):
        return []
    iters = sorted(iters, key=lambda it: it.key())
    k = len(iters)
    p = 0
    xmax = iters[-1].key()
    out = []
    while True:
        it = iters[p]
        x = it.key()
        if x == xmax:
            out.append(x)
            it.next()
        else:
            it.seek(xmax)
        if it.at_end:
            return out
        xmax = it.key()
        p = (p + 1) % k


def leapfrog_unary(lists: Sequence[Sequence[int]]) -> list:
    """Intersection of strictly ascending lists by leapfrogging."""
    for lst in lists:
        if any(a >= b for a, b in zip(lst, lst[1:])):
            raise ValueError("leapfrog_unary needs strictly ascending lists")
    stats = ProbeStats()
    return _leapfrog([_ListIter(list(lst), 0, len(lst), stats) for lst in lists])


@dataclass(frozen=True)
class SortedIndex:
    """A relation's tuples as sorted columns, attributes permuted into ``attr_order``."""

    name: str
    attr_order: tuple
    columns: tuple

    @classmethod
    def build(cls, name: str, rows, attr_order: Sequence[int]) -> "SortedIndex":
        perm = sorted({tuple(r[a] for a in attr_order) for r in rows})
        cols = tuple(list(c) for c in zip(*perm)) if perm else tuple([] for _ in attr_order)
        return cls(name, tuple(attr_order), cols)

    def __len__(self) -> int:
        return len(self.columns[0]) if self.columns else 0


def _rewrite_for_lftj(q: ConjunctiveQuery, var_order: Sequence[str]):
    """Give every atom distinct variables.

    A repeated variable ``x`` becomes a fresh copy tied to ``x`` by a virtual
    identity relation; a constant ``c`` becomes a fresh variable restricted
    by a virtual one-row relation ``{c}``. Constant variables go first in the
    order, copies right after their original.
    """
    atoms = []
    copies = {}  # fresh -> original
    consts = {}  # fresh -> value
    after: dict = {v: [] for v in var_order}
    for ai, atom in enumerate(q.atoms):
        args = []
        seen = set()
        for pos, t in enumerate(atom.args):
            if isinstance(t, Const):
                fresh = f"#{ai}.{pos}"
                consts[fresh] = t.value
                args.append(fresh)
            elif t.name in seen:
                fresh = f"{t.name}#{ai}.{pos}"
                copies[fresh] = t.name
                after[t.name].append(fresh)
                args.append(fresh)
            else:
                seen.add(t.name)
                args.append(t.name)
        atoms.append((atom.predicate, args))
    order = list(consts)
    for v in var_order:
        order.append(v)
        order.extend(after[v])
    return atoms, order, copies, consts


def lftj(q: ConjunctiveQuery, db: Database, var_order: Optional[Sequence[str]] = None):
    """Leapfrog triejoin over sorted-array indexes built for ``var_order``."""
    q = normalize_query(q)
    q.validate_against(db)
    var_order = list(q.head_vars if var_order is None else var_order)
    if sorted(var_order) != sorted(q.head_vars):
        raise ValueError("var_order must be a permutation of the query variables")
    atoms, order, copies, consts = _rewrite_for_lftj(q, var_order)
    rank = {v: i for i, v in enumerate(order)}
    indexes = []
    for pred, args in atoms:
        attr_order = sorted(range(len(args)), key=lambda p: rank[args[p]])
        idx = SortedIndex.build(pred, db.relations[pred].tuples, attr_order)
        indexes.append((idx, [args[p] for p in attr_order]))
    constraints: dict = {}
    for c in q.constraints:
        constraints.setdefault(c.var, []).append(c)

    stats = ProbeStats()
    out = set()
    binding: dict = {}
    # ranges[i] = (depth, lo, hi) of atom i's index under the current binding
    ranges = [(0, 0, len(idx)) for idx, _ in indexes]

    def search(d: int) -> None:
        if d == len(order):
            out.add(tuple(binding[v] for v in q.head_vars))
            return
        v = order[d]
        iters = []
        parts = []
        for i, (idx, vs) in enumerate(indexes):
            depth, lo, hi = ranges[i]
            if depth < len(vs) and vs[depth] == v:
                iters.append(_ListIter(idx.columns[depth], lo, hi, stats))
                parts.append(i)
        if v in copies:
            iters.append(_ListIter([binding[copies[v]]], 0, 1, stats))
        if v in consts:
            iters.append(_ListIter([consts[v]], 0, 1, stats))
        for x in _leapfrog(iters):
            stats.bindings += 1
            if not all(c.holds(x) for c in constraints.get(v, ())):
                continue
            saved = [ranges[i] for i in parts]
            for i in parts:
                depth, lo, hi = ranges[i]
                col = indexes[i][0].columns[depth]
                ranges[i] = (depth + 1, bisect_left(col, x, lo, hi), bisect_right(col, x, lo, hi))
            binding[v] = x
            search(d + 1)
            del binding[v]
            for i, r in zip(parts, saved):
                ranges[i] = r

    if all(len(idx) for idx, _ in indexes):
        search(0)
    return out, stats


# ---------------------------------------------------------------------------
# pairwise


def _atom_bindings(atom: Atom, tuples) -> tuple:
    """Distinct variables of ``atom`` and the value rows they take in ``tuples``."""
    vars_ = atom.variables
    rows = set()
    for t in tuples:
        assignment: dict = {}
        ok = True
        for term, val in zip(atom.args, t):
            if isinstance(term, Const):
                ok = term.value == val
            elif assignment.setdefault(term.name, val) != val:
                ok = False
            if not ok:
                break
        if ok:
            rows.add(tuple(assignment[v] for v in vars_))
    return vars_, rows


def pairwise_hash_join(q: ConjunctiveQuery, db: Database,
                       left_deep_plan: Optional[Sequence[int]] = None) -> set:
    """Left-deep sequence of binary hash joins, then constraint filtering."""
    q.validate_against(db)
    plan = list(range(len(q.atoms))) if left_deep_plan is None else list(left_deep_plan)
    if sorted(plan) != list(range(len(q.atoms))):
        raise ValueError("left_deep_plan must order every atom exactly once")
    acc_vars, acc = _atom_bindings(q.atoms[plan[0]], db.relations[q.atoms[plan[0]].predicate].tuples)
    acc_vars = list(acc_vars)
    for ai in plan[1:]:
        atom = q.atoms[ai]
        rvars, rrows = _atom_bindings(atom, db.relations[atom.predicate].tuples)
        shared = [v for v in rvars if v in acc_vars]
        lkey = [acc_vars.index(v) for v in shared]
        rkey = [rvars.index(v) for v in shared]
        rest = [i for i, v in enumerate(rvars) if v not in acc_vars]
        table: dict = {}
        for row in rrows:
            table.setdefault(tuple(row[i] for i in rkey), []).append(tuple(row[i] for i in rest))
        acc = {
            left + extra
            for left in acc
            for extra in table.get(tuple(left[i] for i in lkey), ())
        }
        acc_vars += [rvars[i] for i in rest]
    pick = [acc_vars.index(v) for v in q.head_vars]
    out = set()
    for row in acc:
        t = tuple(row[i] for i in pick)
        if all(c.holds(t[q.head_vars.index(c.var)]) for c in q.constraints):
            out.add(t)
    return out
