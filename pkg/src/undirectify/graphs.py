"""Labeled simple graphs and digraphs on ``[n] = {1, ..., n}``.

Unordered pairs ``{v, w}`` with ``v < w`` are indexed lexicographically, so
``(1,2) -> 0, (1,3) -> 1, ..., (n-1,n) -> C(n,2)-1``.  A graph is the bitmask
over that index.  A digraph stores one base-4 digit per unordered pair
(0 = none, 1 = ``v -> w``, 2 = ``w -> v``, 3 = both), i.e. bit ``2p`` is the
forward arc and bit ``2p+1`` the backward arc of pair ``p``.  The ordered-pair
index of ``(v, w)`` is therefore ``2p`` if ``v < w`` else ``2p+1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Iterator

import numpy as np

from .errors import SizeCapError, SpecError

N_MAX_GRAPHS = 6
N_MAX_DIGRAPHS = 5


def n_pairs(n: int) -> int:
    return n * (n - 1) // 2


class PairIndex:
    """Bijection between vertex pairs and contiguous indices for fixed ``n``."""

    def __init__(self, n: int):
        if n < 1:
            raise SpecError(f"vertex count must be positive, got {n}")
        self.n = n
        self.pairs: tuple[tuple[int, int], ...] = tuple(combinations(range(1, n + 1), 2))
        self._index = {p: i for i, p in enumerate(self.pairs)}

    def __len__(self) -> int:
        return len(self.pairs)

    def index(self, v: int, w: int) -> int:
        if v == w:
            raise SpecError(f"self-loop ({v},{w}) is not allowed")
        key = (v, w) if v < w else (w, v)
        try:
            return self._index[key]
        except KeyError:
            raise SpecError(f"pair {{{v},{w}}} outside [1,{self.n}]") from None

    def pair(self, i: int) -> tuple[int, int]:
        return self.pairs[i]

    def ordered_index(self, v: int, w: int) -> int:
        return 2 * self.index(v, w) + (0 if v < w else 1)

    def ordered_pair(self, j: int) -> tuple[int, int]:
        v, w = self.pairs[j // 2]
        return (v, w) if j % 2 == 0 else (w, v)

    @property
    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        """0-based endpoint arrays ``(lo, hi)`` in pair order."""
        return _endpoints(self.n)


@lru_cache(maxsize=None)
def pair_index(n: int) -> PairIndex:
    return PairIndex(n)


@lru_cache(maxsize=None)
def _endpoints(n: int) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = np.triu_indices(n, k=1)
    lo.setflags(write=False)
    hi.setflags(write=False)
    return lo, hi


def _check_vertices(n: int, pairs: Iterable[tuple[int, int]], what: str) -> None:
    for v, w in pairs:
        if v == w:
            raise SpecError(f"self-loop ({v},{w}) in {what}")
        if not (1 <= v <= n and 1 <= w <= n):
            raise SpecError(f"{what} ({v},{w}) outside [1,{n}]")


@dataclass(frozen=True)
class Graph:
    n: int
    edges: frozenset

    def __post_init__(self):
        if self.n < 1:
            raise SpecError(f"vertex count must be positive, got {self.n}")
        norm = frozenset((min(v, w), max(v, w)) for v, w in self.edges)
        _check_vertices(self.n, norm, "edge")
        object.__setattr__(self, "edges", norm)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable) -> "Graph":
        return cls(n, frozenset(tuple(e) for e in edges))

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n, frozenset())

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls(n, frozenset(pair_index(n).pairs))

    @property
    def code(self) -> int:
        idx = pair_index(self.n)
        return sum(1 << idx.index(v, w) for v, w in self.edges)

    @classmethod
    def from_code(cls, n: int, code: int) -> "Graph":
        idx = pair_index(n)
        if code < 0 or code >> len(idx):
            raise SpecError(f"graph code {code:#x} out of range for n={n}")
        return cls(n, frozenset(idx.pairs[p] for p in range(len(idx)) if code >> p & 1))

    def __len__(self) -> int:
        return len(self.edges)

    def degrees(self) -> list[int]:
        deg = [0] * (self.n + 1)
        for v, w in self.edges:
            deg[v] += 1
            deg[w] += 1
        return deg[1:]

    def neighbours(self) -> dict[int, set[int]]:
        nb: dict[int, set[int]] = {v: set() for v in range(1, self.n + 1)}
        for v, w in self.edges:
            nb[v].add(w)
            nb[w].add(v)
        return nb

    def issubgraph(self, other: "Graph") -> bool:
        return self.n == other.n and self.edges <= other.edges

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in sorted(self.edges)]}


@dataclass(frozen=True)
class Digraph:
    n: int
    arcs: frozenset

    def __post_init__(self):
        if self.n < 1:
            raise SpecError(f"vertex count must be positive, got {self.n}")
        norm = frozenset((v, w) for v, w in self.arcs)
        _check_vertices(self.n, norm, "arc")
        object.__setattr__(self, "arcs", norm)

    @classmethod
    def from_arcs(cls, n: int, arcs: Iterable) -> "Digraph":
        return cls(n, frozenset(tuple(a) for a in arcs))

    @classmethod
    def empty(cls, n: int) -> "Digraph":
        return cls(n, frozenset())

    @classmethod
    def complete(cls, n: int) -> "Digraph":
        return cls(n, frozenset((v, w) for v in range(1, n + 1) for w in range(1, n + 1) if v != w))

    @property
    def code(self) -> int:
        idx = pair_index(self.n)
        return sum(1 << idx.ordered_index(v, w) for v, w in self.arcs)

    @classmethod
    def from_code(cls, n: int, code: int) -> "Digraph":
        idx = pair_index(n)
        if code < 0 or code >> (2 * len(idx)):
            raise SpecError(f"digraph code {code:#x} out of range for n={n}")
        return cls(n, frozenset(idx.ordered_pair(j) for j in range(2 * len(idx)) if code >> j & 1))

    def __len__(self) -> int:
        return len(self.arcs)

    def issubgraph(self, other: "Digraph") -> bool:
        return self.n == other.n and self.arcs <= other.arcs

    def to_json(self) -> dict:
        return {"n": self.n, "arcs": [list(a) for a in sorted(self.arcs)]}


def forgetful_map(d: Digraph) -> Graph:
    """Drop arc directions: ``{v,w}`` is an edge iff ``(v,w)`` or ``(w,v)`` is an arc."""
    return Graph(d.n, frozenset((min(v, w), max(v, w)) for v, w in d.arcs))


def forget_code(code: int, n: int) -> int:
    """Forgetful map on canonical codes (digraph code -> graph code)."""
    g = 0
    for p in range(n_pairs(n)):
        if code >> (2 * p) & 3:
            g |= 1 << p
    return g


def forget_codes(codes: np.ndarray, n: int) -> np.ndarray:
    """Vectorised :func:`forget_code` for integer code arrays (``n <= 8``)."""
    codes = np.asarray(codes, dtype=np.int64)
    g = np.zeros_like(codes)
    for p in range(n_pairs(n)):
        g |= (((codes >> (2 * p)) & 3) != 0).astype(np.int64) << p
    return g


def forgetful_preimage_size(g: Graph) -> int:
    # each occupied location is ->, <- or <->; empty locations stay empty
    return 3 ** len(g.edges)


def _check_cap(n: int, cap: int, count_desc: str) -> None:
    if n < 1:
        raise SpecError(f"vertex count must be positive, got {n}")
    if n > cap:
        raise SizeCapError(f"refusing to enumerate {count_desc} for n={n} (cap n_max={cap})")


def enumerate_graphs(n: int, n_max: int = N_MAX_GRAPHS) -> Iterator[Graph]:
    c = n_pairs(n)
    _check_cap(n, n_max, f"2^{c} = {2 ** c} graphs")
    for code in range(1 << c):
        yield Graph.from_code(n, code)


def enumerate_digraphs(n: int, n_max: int = N_MAX_DIGRAPHS) -> Iterator[Digraph]:
    c = n_pairs(n)
    _check_cap(n, n_max, f"4^{c} = {4 ** c} digraphs")
    for code in range(1 << (2 * c)):
        yield Digraph.from_code(n, code)


def perturb_graph(g: Graph, add: Iterable = (), remove: Iterable = ()) -> Graph:
    add_set = frozenset((min(v, w), max(v, w)) for v, w in add)
    rem_set = frozenset((min(v, w), max(v, w)) for v, w in remove)
    _check_vertices(g.n, add_set | rem_set, "pair")
    if add_set & g.edges:
        raise SpecError(f"cannot add existing edges {sorted(add_set & g.edges)}")
    if not rem_set <= g.edges:
        raise SpecError(f"cannot remove absent edges {sorted(rem_set - g.edges)}")
    return Graph(g.n, (g.edges | add_set) - rem_set)


def bits_to_codes(bits: np.ndarray) -> list[int] | np.ndarray:
    """Pack a ``(R, k)`` 0/1 array into integer codes (bit ``j`` = column ``j``)."""
    bits = np.asarray(bits, dtype=bool)
    k = bits.shape[1]
    if k <= 62:
        weights = np.left_shift(np.int64(1), np.arange(k, dtype=np.int64))
        return bits.astype(np.int64) @ weights
    packed = np.packbits(bits, axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


def code_bits(code: int, k: int) -> np.ndarray:
    return np.array([(code >> j) & 1 for j in range(k)], dtype=bool)


# --- JSON -----------------------------------------------------------------


def format_code(code: int) -> str:
    return f"0x{code:x}"


def parse_code(text: str) -> int:
    s = text.strip().lower()
    return int(s[2:] if s.startswith("0x") else s, 16)


def graph_from_json(obj) -> Graph:
    if isinstance(obj, str):
        obj = json.loads(obj)
    try:
        n = int(obj["n"])
        if "code" in obj:
            return Graph.from_code(n, parse_code(obj["code"]))
        return Graph.from_edges(n, (tuple(e) for e in obj["edges"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"malformed graph JSON: {exc}") from None


def digraph_from_json(obj) -> Digraph:
    if isinstance(obj, str):
        obj = json.loads(obj)
    try:
        n = int(obj["n"])
        if "code" in obj:
            return Digraph.from_code(n, parse_code(obj["code"]))
        return Digraph.from_arcs(n, (tuple(a) for a in obj["arcs"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"malformed digraph JSON: {exc}") from None
