"""Variable orders and expansion plans.

An expansion plan is an ordered partition of the Boolean variables; the join
binds one group per recursion level. Plans are derived from the attribute
orders of the indexes: every index forces the variables it reads to be bound
in its own order, and variables caught in a cycle of such requirements are
bound together (they form a strongly connected component).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Union

from .bittrie import AttributeBitOrder, attribute_label, interleaved_attribute_order
from .boolean import BooleanQuery, BoolVar


class ConfigurationError(ValueError):
    """Indexes, orders and plans do not fit the query they are used with."""


@dataclass(frozen=True)
class VariableOrder:
    vars: tuple

    def __init__(self, vars: Iterable[BoolVar]):
        object.__setattr__(self, "vars", tuple(BoolVar(*v) for v in vars))
        if len(set(self.vars)) != len(self.vars):
            raise ValueError("variable order repeats a variable")

    def __iter__(self):
        return iter(self.vars)

    def __len__(self) -> int:
        return len(self.vars)

    def __str__(self) -> str:
        return " < ".join(str(v) for v in self.vars)


def interleaved_variable_order(variables: Sequence[str], w: int,
                               alpha: Optional[Sequence[int]] = None) -> VariableOrder:
    """Bit 0 of every variable (in ``alpha`` order), then bit 1, and so on."""
    n = len(variables)
    alpha = list(range(n)) if alpha is None else list(alpha)
    if sorted(alpha) != list(range(n)):
        raise ValueError(f"alpha must be a permutation of 0..{n - 1}")
    return VariableOrder(BoolVar(variables[i], j) for j in range(w) for i in alpha)


@dataclass(frozen=True)
class PrecedenceGraph:
    vertices: tuple  # BoolVar, canonical order
    edges: frozenset  # (BoolVar, BoolVar)

    def successors(self) -> dict:
        rank = {v: i for i, v in enumerate(self.vertices)}
        out = {v: [] for v in self.vertices}
        for u, v in sorted(self.edges, key=lambda e: (rank[e[0]], rank[e[1]])):
            out[u].append(v)
        return out


@dataclass(frozen=True)
class AtomSchedule:
    """Trie positions one atom consumes: at plan time, then per plan level."""

    atom: str
    order: AttributeBitOrder
    terms: tuple  # per trie position: BoolVar or fixed bit
    pre: tuple  # positions whose terms are all constants, consumed before level 0
    levels: tuple  # tuple of position tuples, one per group


@dataclass(frozen=True)
class ExpansionPlan:
    groups: tuple  # tuple of tuples of BoolVar
    schedules: tuple = ()  # AtomSchedule per atom, filled in by attach_schedules

    @property
    def k(self) -> int:
        return len(self.groups)

    @property
    def p(self) -> int:
        return max((len(g) for g in self.groups), default=0)

    def group_index(self) -> dict:
        return {v: i for i, g in enumerate(self.groups) for v in g}

    def dump(self) -> dict:
        out = {
            "groups": [[str(v) for v in g] for g in self.groups],
            "k": self.k,
            "p": self.p,
        }
        if self.schedules:
            out["schedules"] = [
                {
                    "atom": s.atom,
                    "index": str(s.order),
                    "pre": [_pos_label(s.order, q) for q in s.pre],
                    "levels": [[_pos_label(s.order, q) for q in lvl] for lvl in s.levels],
                }
                for s in self.schedules
            ]
        return out

    def __str__(self) -> str:
        return " < ".join("{" + ", ".join(str(v) for v in g) + "}" for g in self.groups)


def _pos_label(order: AttributeBitOrder, q: int) -> str:
    a, j = order.positions[q]
    return f"{attribute_label(a)}_{j}"


def atom_terms(bq: BooleanQuery, atom_index: int, order: AttributeBitOrder) -> tuple:
    atom = bq.atoms[atom_index]
    if order.arity != atom.arity or order.width != bq.width:
        raise ConfigurationError(
            f"index order for {atom.predicate} has arity {order.arity}/width {order.width}, "
            f"expected {atom.arity}/{bq.width}")
    return tuple(bq.term_at(atom_index, a, j) for a, j in order.positions)


def _atom_label(bq: BooleanQuery, i: int) -> str:
    a = bq.atoms[i]
    return f"{a.predicate}({','.join(str(t) for t in a.args)})"


def _chain_edges(terms: Sequence) -> list:
    """Edges between successive variable positions of one index.

    Constants are skipped so that a constant between two variables still
    orders them; repeated variables give self-loops, which are dropped.
    """
    vars_ = [t for t in terms if isinstance(t, BoolVar)]
    return [(u, v) for u, v in zip(vars_, vars_[1:]) if u != v]


def resolve_index_orders(bq: BooleanQuery, index_orders) -> list:
    """Per-atom attribute orders from a relation-keyed map or a per-atom list."""
    if isinstance(index_orders, Mapping):
        out = []
        for atom in bq.atoms:
            if atom.predicate not in index_orders:
                raise ConfigurationError(f"no index order for relation {atom.predicate}")
            out.append(index_orders[atom.predicate])
        return out
    out = list(index_orders)
    if len(out) != bq.m:
        raise ConfigurationError("need exactly one index order per atom")
    return out


def induced_constraints(bq: BooleanQuery, index_orders) -> PrecedenceGraph:
    orders = resolve_index_orders(bq, index_orders)
    edges = set()
    for i, order in enumerate(orders):
        edges.update(_chain_edges(atom_terms(bq, i, order)))
    return PrecedenceGraph(tuple(bq.bool_vars), frozenset(edges))


def _tarjan(vertices: Sequence, succ: Mapping) -> list:
    """Strongly connected components, iteratively (no recursion limit)."""
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    comps: list = []
    counter = 0
    for root in vertices:
        if root in index:
            continue
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for u in it:
                if u not in index:
                    index[u] = low[u] = counter
                    counter += 1
                    stack.append(u)
                    on_stack.add(u)
                    work.append((u, iter(succ[u])))
                    advanced = True
                    break
                if u in on_stack:
                    low[v] = min(low[v], index[u])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    u = stack.pop()
                    on_stack.discard(u)
                    comp.append(u)
                    if u == v:
                        break
                comps.append(comp)
    return comps


def scc_expansion_order(g: PrecedenceGraph, canonical: Optional[Sequence[BoolVar]] = None
                        ) -> ExpansionPlan:
    """Group the SCCs of ``g`` and order them topologically.

    Among components that are ready at the same time, the one holding the
    earliest variable of ``canonical`` (default: ``g.vertices``) goes first.
    """
    canonical = list(g.vertices if canonical is None else canonical)
    rank = {v: i for i, v in enumerate(canonical)}
    succ = g.successors()
    comps = _tarjan(g.vertices, succ)
    comp_of = {v: ci for ci, comp in enumerate(comps) for v in comp}
    indeg = [0] * len(comps)
    out_edges: list = [set() for _ in comps]
    for u, v in g.edges:
        cu, cv = comp_of[u], comp_of[v]
        if cu != cv and cv not in out_edges[cu]:
            out_edges[cu].add(cv)
            indeg[cv] += 1
    key = [min(rank[v] for v in comp) for comp in comps]
    ready = [(key[c], c) for c in range(len(comps)) if indeg[c] == 0]
    heapq.heapify(ready)
    groups = []
    while ready:
        _, c = heapq.heappop(ready)
        groups.append(tuple(sorted(comps[c], key=rank.__getitem__)))
        for d in out_edges[c]:
            indeg[d] -= 1
            if indeg[d] == 0:
                heapq.heappush(ready, (key[d], d))
    return ExpansionPlan(tuple(groups))


def attach_schedules(bq: BooleanQuery, plan: ExpansionPlan, index_orders) -> ExpansionPlan:
    """Work out which trie positions each atom descends through at each level.

    An atom can only descend through a position once every earlier position
    of its index is bound, so a position is consumed at the latest level of
    any variable up to and including it.
    """
    orders = resolve_index_orders(bq, index_orders)
    gidx = plan.group_index()
    missing = set(bq.bool_vars) - set(gidx)
    extra = set(gidx) - set(bq.bool_vars)
    if missing or extra or sum(len(g) for g in plan.groups) != len(gidx):
        raise ConfigurationError("plan groups must partition the query's Boolean variables")
    if any(not g for g in plan.groups):
        raise ConfigurationError("plan groups must be nonempty")
    schedules = []
    for i, order in enumerate(orders):
        terms = atom_terms(bq, i, order)
        pre = []
        levels: list = [[] for _ in plan.groups]
        reach = -1
        for q, t in enumerate(terms):
            if isinstance(t, BoolVar):
                reach = max(reach, gidx[t])
            (pre if reach < 0 else levels[reach]).append(q)
        schedules.append(AtomSchedule(_atom_label(bq, i), order, terms, tuple(pre),
                                      tuple(tuple(lv) for lv in levels)))
    return ExpansionPlan(plan.groups, tuple(schedules))


def validate_plan(bq: BooleanQuery, plan: ExpansionPlan, index_orders) -> None:
    """Raise unless every index is read strictly along its own prefix order."""
    orders = resolve_index_orders(bq, index_orders)
    gidx = plan.group_index()
    if set(gidx) != set(bq.bool_vars):
        raise ConfigurationError("plan groups must partition the query's Boolean variables")
    for i, order in enumerate(orders):
        for u, v in _chain_edges(atom_terms(bq, i, order)):
            if gidx[u] > gidx[v]:
                raise ConfigurationError(
                    f"plan binds {v} before {u}, but index {order} of "
                    f"{_atom_label(bq, i)} needs {u} first")


def plan_for_query(bq: BooleanQuery, index_orders, alpha: Optional[Sequence[int]] = None
                   ) -> ExpansionPlan:
    """Finest expansion plan that reads every index along a prefix."""
    orders = resolve_index_orders(bq, index_orders)
    for order in orders:
        if not order.prefix_consistent:
            raise ConfigurationError(
                f"index order {order} does not read each attribute's bits in increasing order")
    g = induced_constraints(bq, orders)
    canonical = interleaved_variable_order(bq.variables, bq.width, alpha)
    plan = scc_expansion_order(g, canonical.vars)
    return attach_schedules(bq, plan, orders)


def layer_plan(bq: BooleanQuery, alpha: Optional[Sequence[int]] = None) -> ExpansionPlan:
    """One group per bit layer: every variable's bit j is expanded together."""
    order = interleaved_variable_order(bq.variables, bq.width, alpha).vars
    n = bq.n
    return ExpansionPlan(tuple(tuple(order[j * n:(j + 1) * n]) for j in range(bq.width)))


def singleton_plan(order: VariableOrder) -> ExpansionPlan:
    return ExpansionPlan(tuple((v,) for v in order))


def default_index_orders(bq: BooleanQuery, betas: Optional[Mapping[str, Sequence[int]]] = None
                         ) -> dict:
    """One interleaved attribute order per relation (identity unless ``betas`` says otherwise)."""
    betas = betas or {}
    out = {}
    for atom in bq.atoms:
        if atom.predicate not in out:
            out[atom.predicate] = interleaved_attribute_order(
                atom.arity, bq.width, betas.get(atom.predicate))
    return out


def order_consistent_index(bq: BooleanQuery, atom_index: int, order: VariableOrder
                           ) -> AttributeBitOrder:
    """Attribute order for one atom that follows a Boolean variable order.

    Constant positions come first so they are resolved before the search
    starts; variable positions follow in the rank of their variable, ties
    (a repeated variable) in attribute order.
    """
    atom = bq.atoms[atom_index]
    rank = {v: i for i, v in enumerate(order)}
    keyed = []
    for a in range(atom.arity):
        for j in range(bq.width):
            t = bq.term_at(atom_index, a, j)
            if isinstance(t, BoolVar):
                if t not in rank:
                    raise ConfigurationError(f"variable order does not mention {t}")
                keyed.append((rank[t], a, j))
            else:
                keyed.append((-1, a, j))
    keyed.sort()
    return AttributeBitOrder(atom.arity, bq.width, tuple((a, j) for _, a, j in keyed))
