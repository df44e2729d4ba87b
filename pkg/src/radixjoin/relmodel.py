"""Relations, databases and full conjunctive queries.

Values are non-negative integers drawn from ``range(universe_size)``. String
data is dictionary-encoded to such integers when it is loaded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

import numpy as np


class QueryError(ValueError):
    """A query is malformed or does not fit the database it is run against."""


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    value: int

    def __str__(self) -> str:
        return str(self.value)


Term = Union[Var, Const]

OPS = ("<=", "<", ">=", ">", "=", "!=")


@dataclass(frozen=True)
class Relation:
    name: str
    arity: int
    tuples: frozenset

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError(f"relation {self.name}: arity must be positive")
        for t in self.tuples:
            if len(t) != self.arity:
                raise ValueError(f"relation {self.name}: tuple {t} has wrong arity")

    @classmethod
    def from_tuples(cls, name: str, arity: int, tuples: Iterable) -> "Relation":
        # set semantics: duplicates collapse here
        return cls(name, arity, frozenset(tuple(int(v) for v in t) for t in tuples))

    def __len__(self) -> int:
        return len(self.tuples)

    def as_array(self) -> np.ndarray:
        """Tuples as an ``(len, arity)`` int64 array in sorted order."""
        if not self.tuples:
            return np.zeros((0, self.arity), dtype=np.int64)
        return np.array(sorted(self.tuples), dtype=np.int64).reshape(-1, self.arity)


@dataclass(frozen=True)
class Database:
    relations: Mapping[str, Relation]
    universe_size: int
    dictionary: Optional[tuple] = None  # value id -> original string

    def __post_init__(self):
        if self.universe_size < 1:
            raise ValueError("universe_size must be positive")
        for rel in self.relations.values():
            for t in rel.tuples:
                for v in t:
                    if v < 0 or v >= self.universe_size:
                        raise ValueError(
                            f"relation {rel.name}: value {v} outside universe "
                            f"[0, {self.universe_size})")
        if self.dictionary is not None and len(set(self.dictionary)) != len(self.dictionary):
            raise ValueError("dictionary is not a bijection")

    @classmethod
    def from_dict(cls, data: Mapping[str, Iterable], universe_size: Optional[int] = None,
                  arities: Optional[Mapping[str, int]] = None) -> "Database":
        """Build a database from ``{name: iterable of tuples}``.

        ``universe_size`` defaults to one more than the largest value.
        Arity of an empty relation must be given through ``arities``.
        """
        rels = {}
        top = 0
        for name, tuples in data.items():
            tuples = [tuple(t) for t in tuples]
            if tuples:
                arity = len(tuples[0])
            elif arities and name in arities:
                arity = arities[name]
            else:
                raise ValueError(f"cannot infer arity of empty relation {name}")
            rel = Relation.from_tuples(name, arity, tuples)
            rels[name] = rel
            for t in rel.tuples:
                top = max(top, max(t) + 1)
        if universe_size is None:
            universe_size = max(top, 1)
        return cls(rels, universe_size)

    @property
    def N(self) -> int:
        return max((len(r) for r in self.relations.values()), default=0)

    def __getitem__(self, name: str) -> Relation:
        return self.relations[name]

    def decode_value(self, v: int):
        if self.dictionary is None:
            return v
        return self.dictionary[v]


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: tuple

    def __init__(self, predicate: str, args: Iterable):
        object.__setattr__(self, "predicate", predicate)
        object.__setattr__(self, "args", tuple(_as_term(a) for a in args))

    @property
    def variables(self) -> list[str]:
        """Distinct variable names in argument order."""
        seen = []
        for a in self.args:
            if isinstance(a, Var) and a.name not in seen:
                seen.append(a.name)
        return seen

    def __str__(self) -> str:
        return f"{self.predicate}({','.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class InequalityConstraint:
    var: str
    op: str
    bound: int

    def __post_init__(self):
        if self.op not in OPS:
            raise QueryError(f"unknown comparison operator {self.op!r}")
        # string bounds only live between parsing and dictionary binding
        if isinstance(self.bound, int) and self.bound < 0:
            raise QueryError("constraint bound must be a non-negative value")

    def holds(self, v: int) -> bool:
        b = self.bound
        return {
            "<=": v <= b, "<": v < b, ">=": v >= b,
            ">": v > b, "=": v == b, "!=": v != b,
        }[self.op]

    def __str__(self) -> str:
        return f"{self.var} {self.op} {self.bound}"


@dataclass(frozen=True)
class ConjunctiveQuery:
    head_vars: tuple
    atoms: tuple
    constraints: tuple = ()
    name: str = "Q"

    def __init__(self, head_vars: Iterable[str], atoms: Iterable[Atom],
                 constraints: Iterable[InequalityConstraint] = (), name: str = "Q"):
        object.__setattr__(self, "head_vars", tuple(head_vars))
        object.__setattr__(self, "atoms", tuple(atoms))
        object.__setattr__(self, "constraints", tuple(constraints))
        object.__setattr__(self, "name", name)
        self._check()

    def _check(self):
        if not self.atoms:
            raise QueryError("a query needs at least one atom")
        body = set(self.variables)
        if len(set(self.head_vars)) != len(self.head_vars):
            raise QueryError("head variables must be distinct")
        if set(self.head_vars) != body:
            missing = body - set(self.head_vars)
            extra = set(self.head_vars) - body
            if extra:
                raise QueryError(f"head variables {sorted(extra)} do not occur in the body")
            raise QueryError(
                f"projection is not supported; head must list all variables "
                f"(missing {sorted(missing)})")
        for c in self.constraints:
            if c.var not in body:
                raise QueryError(f"constraint variable {c.var} does not occur in any atom")

    @property
    def variables(self) -> list[str]:
        """Distinct body variables in first-occurrence order."""
        seen: list[str] = []
        for atom in self.atoms:
            for v in atom.variables:
                if v not in seen:
                    seen.append(v)
        return seen

    def validate_against(self, db: Database) -> None:
        for atom in self.atoms:
            if atom.predicate not in db.relations:
                raise QueryError(f"unknown predicate {atom.predicate}")
            arity = db.relations[atom.predicate].arity
            if len(atom.args) != arity:
                raise QueryError(
                    f"atom {atom} has {len(atom.args)} arguments, "
                    f"relation {atom.predicate} has arity {arity}")

    def __str__(self) -> str:
        parts = [str(a) for a in self.atoms] + [str(c) for c in self.constraints]
        return f"{self.name}({','.join(self.head_vars)}) :- {', '.join(parts)}."


@dataclass(frozen=True)
class Hypergraph:
    vertices: frozenset
    edges: tuple  # one frozenset per atom, duplicates kept

    def induced(self, subset: Iterable) -> "Hypergraph":
        """Subhypergraph on ``subset``: every edge is intersected with it."""
        sub = frozenset(subset)
        return Hypergraph(sub, tuple(e & sub for e in self.edges))


def _as_term(a) -> Term:
    if isinstance(a, (Var, Const)):
        return a
    if isinstance(a, str):
        return Var(a)
    if isinstance(a, (int, np.integer)):
        return Const(int(a))
    raise TypeError(f"cannot use {a!r} as a term")


def build_hypergraph(q: ConjunctiveQuery) -> Hypergraph:
    edges = tuple(frozenset(a.variables) for a in q.atoms)
    return Hypergraph(frozenset(q.variables), edges)


def normalize_query(q: ConjunctiveQuery) -> ConjunctiveQuery:
    """Drop syntactically identical atoms and constraints, keeping first occurrences."""
    atoms = list(dict.fromkeys(q.atoms))
    constraints = list(dict.fromkeys(q.constraints))
    return ConjunctiveQuery(q.head_vars, atoms, constraints, name=q.name)


def semijoin_check(rel: Relation, binding: Mapping[int, int]) -> bool:
    """True iff some tuple of ``rel`` agrees with ``binding`` (position -> value)."""
    if not binding:
        return len(rel.tuples) > 0
    items = list(binding.items())
    return any(all(t[p] == v for p, v in items) for t in rel.tuples)


def atom_matches(atom: Atom, t: tuple, assignment: Mapping[str, int]) -> bool:
    """Whether database tuple ``t`` is consistent with ``atom`` under a total assignment."""
    for term, v in zip(atom.args, t):
        if isinstance(term, Const):
            if term.value != v:
                return False
        elif assignment[term.name] != v:
            return False
    return True


def ground_atom(atom: Atom, assignment: Mapping[str, int]) -> tuple:
    return tuple(a.value if isinstance(a, Const) else assignment[a.name] for a in atom.args)
