"""Binary encoding of universe values and Booleanisation of relations and queries."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Optional, Union

from .relmodel import Const, ConjunctiveQuery, InequalityConstraint, Relation, Var


class DomainOverflowError(ValueError):
    """A value does not fit into the configured encoding width."""


class BitOrder(enum.Enum):
    LSB_AT_0 = "lsb"
    MSB_AT_0 = "msb"


def compute_width(universe_size: int) -> int:
    if universe_size < 1:
        raise ValueError("universe_size must be at least 1")
    return max(1, (universe_size - 1).bit_length())


@dataclass(frozen=True)
class EncodingSpec:
    width: int
    convention: BitOrder = BitOrder.LSB_AT_0

    def __post_init__(self):
        if self.width < 1:
            raise ValueError("width must be positive")
        if isinstance(self.convention, str):
            object.__setattr__(self, "convention", BitOrder(self.convention))

    @classmethod
    def for_universe(cls, universe_size: int, convention=BitOrder.LSB_AT_0,
                     width: Optional[int] = None) -> "EncodingSpec":
        need = compute_width(universe_size)
        if width is None:
            width = need
        elif width < need:
            raise DomainOverflowError(
                f"width {width} cannot encode a universe of {universe_size} values")
        return cls(width, BitOrder(convention))

    def shift(self, j: int) -> int:
        """Power of two carried by bit index ``j``."""
        if self.convention is BitOrder.LSB_AT_0:
            return j
        return self.width - 1 - j

    def significance(self, j: int) -> int:
        return 1 << self.shift(j)

    def check(self, v: int) -> None:
        if v < 0 or v >> self.width:
            raise DomainOverflowError(f"value {v} does not fit in {self.width} bits")


BitString = tuple  # of 0/1 ints, length == width


def encode(v: int, spec: EncodingSpec) -> BitString:
    spec.check(v)
    return tuple((v >> spec.shift(j)) & 1 for j in range(spec.width))


def decode(bits: Iterable[int], spec: EncodingSpec) -> int:
    bits = tuple(bits)
    if len(bits) != spec.width:
        raise ValueError(f"expected {spec.width} bits, got {len(bits)}")
    return sum(b << spec.shift(j) for j, b in enumerate(bits))


def booleanise_relation(rel: Relation, spec: EncodingSpec) -> set:
    """Attribute-major bit tuples: all bits of attribute 1, then attribute 2, ..."""
    out = set()
    for t in rel.tuples:
        row: tuple = ()
        for v in t:
            row += encode(v, spec)
        out.add(row)
    return out


class BoolVar(NamedTuple):
    var: str
    bit: int

    def __str__(self) -> str:
        return f"{self.var}_{self.bit}"


def parse_boolvar(text: str) -> BoolVar:
    name, sep, bit = text.rpartition("_")
    if not sep or not name or not bit.isdigit():
        raise ValueError(f"not a Boolean variable name: {text!r} (expected e.g. x_0)")
    return BoolVar(name, int(bit))


# ---------------------------------------------------------------------------
# inequality pruning


def _fixed_to_mask(fixed_bits: Mapping[int, int], spec: EncodingSpec) -> tuple[int, int]:
    mask = val = 0
    for j, b in fixed_bits.items():
        if not 0 <= j < spec.width:
            raise ValueError(f"bit index {j} out of range for width {spec.width}")
        s = spec.significance(j)
        mask |= s
        if b:
            val |= s
    return mask, val


def range_can_extend(fixed_bits: Mapping[int, int], c: InequalityConstraint,
                     spec: EncodingSpec) -> bool:
    """Can the unfixed bits be completed so that the value satisfies ``c``?

    Decided from the two extreme completions: every free bit 0 gives the
    smallest value, every free bit 1 the largest.
    """
    mask, val = _fixed_to_mask(fixed_bits, spec)
    full = (1 << spec.width) - 1
    lo, hi = val, val | (full & ~mask)
    b = c.bound
    if c.op == "<=":
        return lo <= b
    if c.op == "<":
        return lo < b
    if c.op == ">=":
        return hi >= b
    if c.op == ">":
        return hi > b
    if c.op == "=":
        return b <= full and (b & mask) == val
    # "!=": only a fully fixed value equal to the bound is excluded
    return not (mask == full and val == b)


def smallest_completion(mask: int, val: int, width: int, at_least: int) -> Optional[int]:
    """Smallest ``x >= at_least`` below ``2**width`` with ``x & mask == val``."""
    if at_least >> width:
        return None
    if at_least & mask == val:
        return at_least
    for b in range(width):
        bit = 1 << b
        if at_least & bit:
            continue
        if mask & bit and not val & bit:
            continue
        if ((at_least ^ val) & mask) >> (b + 1):
            continue
        high = (at_least >> (b + 1)) << (b + 1)
        return high | bit | (val & (bit - 1))
    return None


@dataclass
class RangePruner:
    """All constraints on one variable folded into ``[lo, hi]`` minus excluded points."""

    var: str
    spec: EncodingSpec
    constraints: tuple = ()
    lo: int = 0
    hi: int = field(default=-1)
    excluded: frozenset = frozenset()

    @classmethod
    def from_constraints(cls, var: str, constraints: Iterable[InequalityConstraint],
                         spec: EncodingSpec) -> "RangePruner":
        constraints = tuple(constraints)
        lo, hi = 0, (1 << spec.width) - 1
        excluded = set()
        for c in constraints:
            b = c.bound
            if c.op == "<=":
                hi = min(hi, b)
            elif c.op == "<":
                hi = min(hi, b - 1)
            elif c.op == ">=":
                lo = max(lo, b)
            elif c.op == ">":
                lo = max(lo, b + 1)
            elif c.op == "=":
                lo, hi = max(lo, b), min(hi, b)
            else:
                excluded.add(b)
        return cls(var, spec, constraints, lo, hi, frozenset(excluded))

    def can_extend(self, mask: int, val: int) -> bool:
        x = smallest_completion(mask, val, self.spec.width, self.lo)
        while x is not None and x <= self.hi and x in self.excluded:
            x = smallest_completion(mask, val, self.spec.width, x + 1)
        return x is not None and x <= self.hi

    def can_extend_bits(self, fixed_bits: Mapping[int, int]) -> bool:
        return self.can_extend(*_fixed_to_mask(fixed_bits, self.spec))

    def forced_bits(self) -> dict[int, int]:
        """Bit indices whose value is implied on their own by the constraints."""
        forced = {}
        for j in range(self.spec.width):
            can0 = self.can_extend_bits({j: 0})
            can1 = self.can_extend_bits({j: 1})
            if can0 != can1:
                forced[j] = 0 if can0 else 1
        return forced


# ---------------------------------------------------------------------------
# queries


@dataclass(frozen=True)
class BoolAtom:
    predicate: str
    args: tuple  # original Var/Const terms

    @property
    def arity(self) -> int:
        return len(self.args)


@dataclass(frozen=True)
class BooleanQuery:
    """A conjunctive query whose variables range over single bits.

    Every original variable ``x`` stands for ``spec.width`` Boolean variables
    ``x_0 .. x_{w-1}``; constants in atoms become fixed bits.
    """

    source: ConjunctiveQuery
    spec: EncodingSpec
    variables: tuple  # original variable names, head order
    atoms: tuple  # BoolAtom
    pruners: Mapping[str, RangePruner]

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def m(self) -> int:
        return len(self.atoms)

    @property
    def width(self) -> int:
        return self.spec.width

    @property
    def bool_vars(self) -> list[BoolVar]:
        """All Boolean variables, bit layer by bit layer."""
        return [BoolVar(x, j) for j in range(self.width) for x in self.variables]

    def term_at(self, atom_index: int, position: int, bit: int) -> Union[BoolVar, int]:
        """Boolean variable (or fixed bit value) at one Booleanised attribute."""
        term = self.atoms[atom_index].args[position]
        if isinstance(term, Var):
            return BoolVar(term.name, bit)
        return (term.value >> self.spec.shift(bit)) & 1

    def atom_bool_vars(self, atom_index: int) -> list[BoolVar]:
        atom = self.atoms[atom_index]
        out = []
        for j in range(self.width):
            for a in atom.args:
                if isinstance(a, Var):
                    bv = BoolVar(a.name, j)
                    if bv not in out:
                        out.append(bv)
        return out


def booleanise_query(q: ConjunctiveQuery, spec: EncodingSpec) -> BooleanQuery:
    atoms = []
    for atom in q.atoms:
        for a in atom.args:
            if isinstance(a, Const):
                spec.check(a.value)
        atoms.append(BoolAtom(atom.predicate, atom.args))
    by_var: dict[str, list] = {}
    for c in q.constraints:
        by_var.setdefault(c.var, []).append(c)
    pruners = {v: RangePruner.from_constraints(v, cs, spec) for v, cs in by_var.items()}
    return BooleanQuery(q, spec, tuple(q.head_vars), tuple(atoms), pruners)
