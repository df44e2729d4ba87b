"""Binary tries over a relation's Booleanised, interleaved bit positions.

A trie is stored level by level: nodes get consecutive ids in breadth-first
order and two child arrays map ``(node, bit)`` to a child id or ``-1``.
Nodes never change after construction.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Iterator, Optional, Sequence

import numpy as np

from .boolean import BitOrder, EncodingSpec
from .relmodel import Relation


def attribute_label(i: int) -> str:
    return chr(ord("A") + i) if i < 26 else f"A{i}"


@dataclass(frozen=True)
class AttributeBitOrder:
    """The order in which a trie consumes ``(attribute, bit index)`` positions."""

    arity: int
    width: int
    positions: tuple  # of (attribute, bit) pairs

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple((int(a), int(b)) for a, b in self.positions))
        want = {(a, b) for a in range(self.arity) for b in range(self.width)}
        if len(self.positions) != len(want) or set(self.positions) != want:
            raise ValueError("attribute bit order must list every (attribute, bit) once")

    def __len__(self) -> int:
        return len(self.positions)

    def __iter__(self):
        return iter(self.positions)

    @property
    def prefix_consistent(self) -> bool:
        """Every attribute's bits appear in increasing bit-index order."""
        last = [-1] * self.arity
        for a, b in self.positions:
            if b < last[a]:
                return False
            last[a] = b
        return True

    def __str__(self) -> str:
        return " < ".join(f"{attribute_label(a)}_{b}" for a, b in self.positions)


def interleaved_attribute_order(r: int, w: int, beta: Optional[Sequence[int]] = None
                                ) -> AttributeBitOrder:
    """Cycle through the attributes (permuted by ``beta``) once per bit index."""
    beta = list(range(r)) if beta is None else list(beta)
    if sorted(beta) != list(range(r)):
        raise ValueError(f"beta must be a permutation of 0..{r - 1}")
    return AttributeBitOrder(r, w, tuple((a, j) for j in range(w) for a in beta))


@dataclass(frozen=True)
class TrieCursor:
    trie: "BitTrie"
    node: int
    depth: int


class BitTrie:
    """Immutable binary trie of one relation under one attribute bit order."""

    def __init__(self, order: AttributeBitOrder, spec: EncodingSpec, child0: np.ndarray,
                 child1: np.ndarray, count: np.ndarray, level_offsets: np.ndarray,
                 name: str = ""):
        self.order = order
        self.spec = spec
        self.name = name
        self.child0 = child0
        self.child1 = child1
        self.count = count
        self.level_offsets = level_offsets
        # plain lists: scalar indexing is several times faster than on arrays
        self.children = (child0.tolist(), child1.tolist())

    @property
    def depth(self) -> int:
        return len(self.order)

    @property
    def num_nodes(self) -> int:
        return len(self.count)

    @property
    def size(self) -> int:
        return int(self.count[0])

    def __len__(self) -> int:
        return self.size

    @property
    def root(self) -> TrieCursor:
        return TrieCursor(self, 0, 0)

    def descend(self, cur: TrieCursor, bit: int) -> Optional[TrieCursor]:
        if cur.depth >= self.depth:
            raise ValueError("cannot descend below leaf depth")
        child = self.children[bit][cur.node]
        if child < 0:
            return None
        return TrieCursor(self, child, cur.depth + 1)

    def count_below(self, cur: Optional[TrieCursor]) -> int:
        if cur is None:
            return 0
        return int(self.count[cur.node])

    def contains_bits(self, bits: Sequence[int]) -> bool:
        cur: Optional[TrieCursor] = self.root
        if self.size == 0:
            return False
        for b in bits:
            cur = self.descend(cur, b)
            if cur is None:
                return False
        return True

    def iter_paths(self) -> Iterator[tuple]:
        """Root-to-leaf bit strings in lexicographic order."""
        if self.size == 0:
            return
        c0, c1 = self.children
        stack = [(0, ())]
        L = self.depth
        while stack:
            node, path = stack.pop()
            if len(path) == L:
                yield path
                continue
            if c1[node] >= 0:
                stack.append((c1[node], path + (1,)))
            if c0[node] >= 0:
                stack.append((c0[node], path + (0,)))

    def decode_path(self, path: Sequence[int]) -> tuple:
        vals = [0] * self.order.arity
        for (a, j), b in zip(self.order.positions, path):
            if b:
                vals[a] |= self.spec.significance(j)
        return tuple(vals)

    def tuples(self) -> set:
        return {self.decode_path(p) for p in self.iter_paths()}

    def __repr__(self) -> str:
        return (f"BitTrie({self.name or '?'}, tuples={self.size}, nodes={self.num_nodes}, "
                f"order={self.order})")


def relation_bits(rel_array: np.ndarray, order: AttributeBitOrder, spec: EncodingSpec) -> np.ndarray:
    """Bit matrix with one column per trie position, rows in the relation's order."""
    n = rel_array.shape[0]
    out = np.empty((n, len(order)), dtype=np.uint8)
    for p, (a, j) in enumerate(order.positions):
        out[:, p] = (rel_array[:, a] >> spec.shift(j)) & 1
    return out


def trie_from_bits(bits: np.ndarray, order: AttributeBitOrder, spec: EncodingSpec,
                   name: str = "") -> BitTrie:
    L = len(order)
    if bits.shape[0]:
        bits = np.unique(bits, axis=0)
    n = bits.shape[0]
    if n == 0:
        neg = np.full(1, -1, dtype=np.int64)
        return BitTrie(order, spec, neg, neg.copy(), np.zeros(1, dtype=np.int64),
                       np.array([0, 1], dtype=np.int64), name)
    if n > 1:
        differs = bits[1:] != bits[:-1]
        # first differing column between neighbouring rows; unique rows always differ
        first = np.argmax(differs, axis=1)
    else:
        first = np.zeros(0, dtype=np.int64)
    rows = np.arange(1, n)
    starts = []
    for d in range(L + 1):
        starts.append(np.concatenate(([0], rows[first < d])))
    sizes = np.array([len(s) for s in starts], dtype=np.int64)
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    total = int(offsets[-1])
    child0 = np.full(total, -1, dtype=np.int64)
    child1 = np.full(total, -1, dtype=np.int64)
    count = np.empty(total, dtype=np.int64)
    for d in range(L + 1):
        s = starts[d]
        ends = np.append(s[1:], n)
        count[offsets[d]:offsets[d + 1]] = ends - s
        if d == L:
            break
        t = starts[d + 1]
        parent = np.searchsorted(s, t, side="right") - 1
        bit = bits[t, d]
        ids = offsets[d + 1] + np.arange(len(t))
        sel = bit == 0
        child0[offsets[d] + parent[sel]] = ids[sel]
        child1[offsets[d] + parent[~sel]] = ids[~sel]
    return BitTrie(order, spec, child0, child1, count, offsets, name)


def build_trie(rel: Relation, order: AttributeBitOrder, spec: EncodingSpec) -> BitTrie:
    if order.arity != rel.arity or order.width != spec.width:
        raise ValueError(
            f"order is for arity {order.arity}/width {order.width}, relation {rel.name} "
            f"has arity {rel.arity} and the encoding width is {spec.width}")
    arr = rel.as_array()
    for v in (arr.max(initial=0), arr.min(initial=0)):
        spec.check(int(v))
    return trie_from_bits(relation_bits(arr, order, spec), order, spec, rel.name)


# ---------------------------------------------------------------------------
# serialisation

MAGIC = b"RTJT"
VERSION = 1


def dump_trie(trie: BitTrie, fh: BinaryIO) -> None:
    """Write header, order and a preorder stream of 2-bit child masks."""
    order = trie.order
    conv = 0 if trie.spec.convention is BitOrder.LSB_AT_0 else 1
    fh.write(MAGIC)
    fh.write(struct.pack("<BHHBI", VERSION, order.arity, order.width, conv, len(order)))
    for a, j in order.positions:
        fh.write(struct.pack("<HH", a, j))
    c0, c1 = trie.children
    masks = []
    if trie.size:
        stack = [0]
        while stack:
            node = stack.pop()
            masks.append((c0[node] >= 0) | ((c1[node] >= 0) << 1))
            if c1[node] >= 0:
                stack.append(c1[node])
            if c0[node] >= 0:
                stack.append(c0[node])
    fh.write(struct.pack("<Q", len(masks)))
    stream = np.zeros(2 * len(masks), dtype=np.uint8)
    m = np.array(masks, dtype=np.uint8)
    stream[0::2] = m & 1
    stream[1::2] = m >> 1
    fh.write(np.packbits(stream).tobytes())


def load_trie(fh: BinaryIO, name: str = "") -> BitTrie:
    if fh.read(4) != MAGIC:
        raise ValueError("not a serialised bit trie")
    version, arity, width, conv, L = struct.unpack("<BHHBI", fh.read(10))
    if version != VERSION:
        raise ValueError(f"unsupported trie format version {version}")
    positions = [struct.unpack("<HH", fh.read(4)) for _ in range(L)]
    order = AttributeBitOrder(arity, width, tuple(positions))
    spec = EncodingSpec(width, BitOrder.LSB_AT_0 if conv == 0 else BitOrder.MSB_AT_0)
    (num,) = struct.unpack("<Q", fh.read(8))
    raw = np.frombuffer(fh.read((2 * num + 7) // 8), dtype=np.uint8)
    stream = np.unpackbits(raw)[: 2 * num]
    has0 = stream[0::2].tolist()
    has1 = stream[1::2].tolist()
    paths = []
    # replay the preorder walk: each stack entry is the path of a node still to be read
    stack = [()] if num else []
    k = 0
    while stack:
        path = stack.pop()
        h0, h1 = has0[k], has1[k]
        k += 1
        if len(path) == L:
            paths.append(path)
            continue
        if h1:
            stack.append(path + (1,))
        if h0:
            stack.append(path + (0,))
    bits = np.array(paths, dtype=np.uint8).reshape(-1, L)
    return trie_from_bits(bits, order, spec, name)


def trie_to_bytes(trie: BitTrie) -> bytes:
    buf = io.BytesIO()
    dump_trie(trie, buf)
    return buf.getvalue()


def trie_from_bytes(data: bytes) -> BitTrie:
    return load_trie(io.BytesIO(data))
