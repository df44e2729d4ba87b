"""Query text, TSV relation files and the single-stream bundle format.

Query grammar::

    query      := head ":-" body "."
    head       := Name "(" ident {"," ident} ")"
    body       := item {"," item}
    item       := Name "(" term {"," term} ")"  |  ident op literal
    term       := ident | integer | string
    op         := "<=" | "<" | ">=" | ">" | "=" | "!="

``#`` starts a comment that runs to the end of the line. Strings use
double or single quotes with backslash escapes.

A bundle carries a query and its data in one text stream::

    %query
    Q(x) :- R(x,x).
    %universe 6          (optional)
    %relation
    R<TAB>A<TAB>B
    0<TAB>1
"""

from __future__ import annotations

import ast
import json
import re
from bisect import bisect_left
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, TextIO, Union

from .relmodel import (
    Atom,
    ConjunctiveQuery,
    Const,
    Database,
    InequalityConstraint,
    QueryError,
    Relation,
    Var,
)


class QuerySyntaxError(QueryError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line, self.col = line, col


class DataError(ValueError):
    """A relation file is malformed."""


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<turnstile>:-)
  | (?P<op><=|>=|!=|<|>|=)
  | (?P<punct>[(),.])
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<str>"(?:[^"\\\n]|\\.)*"|'(?:[^'\\\n]|\\.)*')
""", re.VERBOSE)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        col = pos - line_start + 1
        if not m:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), line, col))
        nl = m.group().count("\n")
        if nl:
            line += nl
            line_start = m.start() + m.group().rindex("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self, offset: int = 0) -> _Tok:
        return self.toks[min(self.i + offset, len(self.toks) - 1)]

    def fail(self, what: str, tok: Optional[_Tok] = None):
        tok = tok or self.peek()
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise QuerySyntaxError(f"expected {what}, found {found}", tok.line, tok.col)

    def take(self, kind: str, text: Optional[str] = None, what: Optional[str] = None) -> _Tok:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            self.fail(what or (repr(text) if text else kind))
        self.i += 1
        return tok

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def term(self):
        tok = self.peek()
        if tok.kind == "ident":
            self.i += 1
            return Var(tok.text)
        if tok.kind == "int":
            self.i += 1
            return Const(int(tok.text))
        if tok.kind == "str":
            self.i += 1
            return Const(ast.literal_eval(tok.text))
        self.fail("a variable, integer or quoted string")

    def query(self) -> ConjunctiveQuery:
        head_tok = self.take("ident", what="query name")
        self.take("punct", "(")
        head = [self.take("ident", what="head variable").text]
        while self.at("punct", ","):
            self.i += 1
            head.append(self.take("ident", what="head variable").text)
        self.take("punct", ")")
        self.take("turnstile", what="':-'")
        atoms, constraints = [], []
        while True:
            name = self.take("ident", what="atom or constraint").text
            if self.at("punct", "("):
                self.i += 1
                args = [self.term()]
                while self.at("punct", ","):
                    self.i += 1
                    args.append(self.term())
                self.take("punct", ")")
                atoms.append(Atom(name, args))
            elif self.at("op"):
                op = self.take("op").text
                lit = self.term()
                if isinstance(lit, Var):
                    raise QuerySyntaxError(
                        "constraints compare a variable with a literal, not another variable",
                        self.peek(-1).line, self.peek(-1).col)
                constraints.append(InequalityConstraint(name, op, lit.value))
            else:
                self.fail("'(' or a comparison operator")
            if self.at("punct", ","):
                self.i += 1
                continue
            self.take("punct", ".", what="',' or '.'")
            break
        if not self.at("eof"):
            self.fail("end of input")
        try:
            return ConjunctiveQuery(head, atoms, constraints, name=head_tok.text)
        except QueryError as e:
            raise QuerySyntaxError(str(e), head_tok.line, head_tok.col) from None


def parse_query(text: str) -> ConjunctiveQuery:
    """Parse one rule. String constants stay strings until :func:`bind_query`."""
    return _Parser(text).query()


def _fmt_value(v) -> str:
    return json.dumps(v) if isinstance(v, str) else str(v)


def format_query(q: ConjunctiveQuery) -> str:
    """Text that :func:`parse_query` maps back to an equal query."""
    atoms = [
        f"{a.predicate}({','.join(t.name if isinstance(t, Var) else _fmt_value(t.value) for t in a.args)})"
        for a in q.atoms
    ]
    cons = [f"{c.var} {c.op} {_fmt_value(c.bound)}" for c in q.constraints]
    return f"{q.name}({','.join(q.head_vars)}) :- {', '.join(atoms + cons)}."


def _encode_constraint(c: InequalityConstraint, dictionary: Sequence[str]) -> list:
    """Rewrite a comparison with a string literal into one on dictionary codes.

    The dictionary is sorted, so codes order like the strings they stand for.
    """
    lit = str(c.bound)
    pos = bisect_left(dictionary, lit)
    present = pos < len(dictionary) and dictionary[pos] == lit
    if present:
        return [InequalityConstraint(c.var, c.op, pos)]
    if c.op in ("<=", "<"):
        bound = ("<", pos)
    elif c.op in (">=", ">"):
        bound = (">=", pos)
    elif c.op == "=":
        bound = ("<", 0)  # never holds
    else:
        return []
    return [InequalityConstraint(c.var, *bound)]


def bind_query(q: ConjunctiveQuery, db: Database) -> tuple:
    """Map literals to database codes; returns ``(query, database)``.

    A constant that occurs nowhere in the data gets a code past the end of
    the universe, so atoms using it simply match nothing.
    """
    q.validate_against(db)
    if db.dictionary is None:
        for a in q.atoms:
            for t in a.args:
                if isinstance(t, Const) and isinstance(t.value, str):
                    raise QueryError(f"string constant {t.value!r} used on integer data")
        for c in q.constraints:
            if isinstance(c.bound, str):
                raise QueryError(f"string literal {c.bound!r} used on integer data")
        # a constant beyond the data widens the universe so it stays encodable
        top = max((t.value for a in q.atoms for t in a.args if isinstance(t, Const)), default=-1)
        if top >= db.universe_size:
            db = Database(db.relations, top + 1)
        return q, db
    dictionary = list(db.dictionary)
    code = {s: i for i, s in enumerate(dictionary)}
    extra: list = []

    def encode(v) -> int:
        s = str(v)
        if s not in code:
            code[s] = len(dictionary) + len(extra)
            extra.append(s)
        return code[s]

    atoms = [Atom(a.predicate, [t if isinstance(t, Var) else Const(encode(t.value))
                                for t in a.args]) for a in q.atoms]
    constraints = [e for c in q.constraints for e in _encode_constraint(c, dictionary)]
    if extra:
        db = Database(db.relations, db.universe_size + len(extra), tuple(dictionary + extra))
    return ConjunctiveQuery(q.head_vars, atoms, constraints, name=q.name), db


# ---------------------------------------------------------------------------
# TSV


_INT = re.compile(r"\d+")


@dataclass
class RawRelation:
    name: str
    columns: list
    rows: list  # of lists of str
    source: str = ""


def parse_tsv(lines: Iterable[str], source: str = "<tsv>") -> RawRelation:
    header = None
    rows = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        fields = line.split("\t")
        if header is None:
            if len(fields) < 2 or not fields[0]:
                raise DataError(f"{source}:{lineno}: header must be name<TAB>col1<TAB>...")
            header = fields
            continue
        if len(fields) != len(header) - 1:
            raise DataError(f"{source}:{lineno}: ragged row with {len(fields)} fields, "
                            f"expected {len(header) - 1}")
        rows.append(fields)
    if header is None:
        raise DataError(f"{source}: missing header line")
    return RawRelation(header[0], header[1:], rows, source)


def _column_kinds(raw: RawRelation) -> list:
    kinds = []
    for c, col in enumerate(raw.columns):
        vals = [r[c] for r in raw.rows]
        ints = [bool(_INT.fullmatch(v)) for v in vals]
        if all(ints):
            kinds.append("int")
        elif not any(ints):
            kinds.append("str")
        else:
            bad = ints.index(not ints[0]) + 2
            raise DataError(f"{raw.source}: column {col} mixes integers and strings "
                            f"(row {bad})")
    return kinds


def database_from_raw(raws: Sequence[RawRelation], universe_size: Optional[int] = None
                      ) -> Database:
    """Integers are used as they are unless some column holds strings, in which
    case every value is dictionary-encoded through one sorted dictionary."""
    seen = set()
    for r in raws:
        if r.name in seen:
            raise DataError(f"relation {r.name} is defined twice")
        seen.add(r.name)
    kinds = [_column_kinds(r) for r in raws]
    if all(k == "int" for ks in kinds for k in ks):
        data = {r.name: [tuple(int(v) for v in row) for row in r.rows] for r in raws}
        arities = {r.name: len(r.columns) for r in raws}
        db = Database.from_dict(data, arities=arities)
        if universe_size is not None:
            if universe_size < db.universe_size:
                raise DataError(f"universe size {universe_size} is smaller than the data needs")
            db = Database(db.relations, universe_size)
        return db
    dictionary = sorted({v for r in raws for row in r.rows for v in row})
    code = {s: i for i, s in enumerate(dictionary)}
    rels = {
        r.name: Relation.from_tuples(r.name, len(r.columns), [[code[v] for v in row] for row in r.rows])
        for r in raws
    }
    return Database(rels, max(1, len(dictionary)), tuple(dictionary))


def load_database(paths: Sequence[Union[str, Path]], universe_size: Optional[int] = None
                  ) -> Database:
    """Read TSV files, or every ``*.tsv`` file of a directory."""
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            files.extend(sorted(p.glob("*.tsv")))
        elif p.exists():
            files.append(p)
        else:
            raise DataError(f"{p}: no such file or directory")
    if not files:
        raise DataError("no relation files given")
    raws = []
    for f in files:
        with open(f, encoding="utf-8") as fh:
            raws.append(parse_tsv(fh, str(f)))
    return database_from_raw(raws, universe_size)


def format_relation(rel: Relation, db: Database) -> str:
    cols = "\t".join(chr(ord("A") + i) if i < 26 else f"A{i}" for i in range(rel.arity))
    lines = [f"{rel.name}\t{cols}"]
    for t in sorted(rel.tuples):
        lines.append("\t".join(str(db.decode_value(v)) for v in t))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# bundles


def write_bundle(q: ConjunctiveQuery, db: Database, fh: TextIO) -> None:
    fh.write("%query\n")
    fh.write(format_query(q) + "\n")
    if db.dictionary is None:
        fh.write(f"%universe {db.universe_size}\n")
    for rel in db.relations.values():
        fh.write("%relation\n")
        fh.write(format_relation(rel, db))


def read_bundle(text: str) -> tuple:
    """Parse a bundle into ``(query, database)``."""
    section = None
    query_lines: list = []
    rel_blocks: list = []
    universe = None
    for lineno, line in enumerate(text.splitlines(), 1):
        if line.startswith("%"):
            word, _, rest = line[1:].partition(" ")
            if word == "query":
                section = "query"
            elif word == "relation":
                section = "relation"
                rel_blocks.append((lineno, []))
            elif word == "universe":
                try:
                    universe = int(rest)
                except ValueError:
                    raise DataError(f"bundle line {lineno}: bad universe size {rest!r}") from None
            else:
                raise DataError(f"bundle line {lineno}: unknown directive %{word}")
            continue
        if section == "query":
            query_lines.append(line)
        elif section == "relation":
            rel_blocks[-1][1].append(line)
        elif line.strip():
            raise DataError(f"bundle line {lineno}: data before any %query or %relation")
    if not query_lines:
        raise DataError("bundle has no %query section")
    q = parse_query("\n".join(query_lines))
    raws = [parse_tsv(lines, f"bundle line {start}") for start, lines in rel_blocks]
    return q, database_from_raw(raws, universe)
