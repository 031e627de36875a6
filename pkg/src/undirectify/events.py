"""Graph events with declared monotonicity, and their lift to digraphs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import SpecError
from .graphs import Digraph, Graph, forget_codes, forgetful_map, n_pairs, N_MAX_GRAPHS

MONOTONICITY = ("increasing", "decreasing", "none")


@dataclass(frozen=True)
class EventSpec:
    name: str
    predicate: Callable = field(compare=False)
    monotonicity: str = "none"
    domain: str = "graph"

    def __post_init__(self):
        if self.monotonicity not in MONOTONICITY:
            raise SpecError(f"monotonicity must be one of {MONOTONICITY}, got {self.monotonicity!r}")
        if self.domain not in ("graph", "digraph"):
            raise SpecError(f"event domain must be graph or digraph, got {self.domain!r}")

    def __call__(self, x) -> bool:
        return bool(self.predicate(x))

    def table(self, n: int) -> np.ndarray:
        """Truth value for every graph code on ``n`` vertices (graph-domain events)."""
        if self.domain != "graph":
            raise SpecError("truth tables are indexed by graph codes; lift evaluation goes via forget_codes")
        return _truth_table(self, n)

    def evaluate_codes(self, n: int, codes: np.ndarray, kind: str) -> np.ndarray:
        """Vectorised evaluation over canonical codes of the given kind."""
        base = self.base if self.domain == "digraph" else self
        tab = base.table(n)
        codes = np.asarray(codes, dtype=np.int64)
        if kind == "digraph":
            codes = forget_codes(codes, n)
        elif self.domain == "digraph":
            raise SpecError(f"digraph event {self.name!r} cannot be evaluated on graphs")
        return tab[codes]

    @property
    def base(self) -> "EventSpec":
        b = getattr(self.predicate, "base_event", None)
        if b is None:
            raise SpecError(f"event {self.name!r} is not a lifted event")
        return b


_TABLES: dict[tuple[int, int], tuple[Callable, np.ndarray]] = {}


def _truth_table(ev: EventSpec, n: int) -> np.ndarray:
    # keyed on the predicate object, which the cache keeps alive
    hit = _TABLES.get((id(ev.predicate), n))
    if hit is not None:
        return hit[1]
    if n > N_MAX_GRAPHS:
        raise SpecError(f"truth table for n={n} exceeds n_max={N_MAX_GRAPHS}")
    size = 1 << n_pairs(n)
    tab = np.fromiter((ev.predicate(Graph.from_code(n, c)) for c in range(size)), dtype=bool, count=size)
    tab.setflags(write=False)
    _TABLES[(id(ev.predicate), n)] = (ev.predicate, tab)
    return tab


class _Lifted:
    def __init__(self, base_event: EventSpec):
        self.base_event = base_event

    def __call__(self, d: Digraph) -> bool:
        return self.base_event.predicate(forgetful_map(d))


def lift_event(q: EventSpec) -> EventSpec:
    """The digraph event ``U^{-1}(Q)``; monotonicity carries over."""
    if q.domain != "graph":
        raise SpecError(f"event {q.name!r} is already a digraph event")
    return EventSpec(f"lift({q.name})", _Lifted(q), q.monotonicity, domain="digraph")


# --- built-in events --------------------------------------------------------


def _has_triangle(g: Graph) -> bool:
    nb = g.neighbours()
    return any(nb[v] & nb[w] for v, w in g.edges)


def _connected(g: Graph) -> bool:
    nb = g.neighbours()
    seen = {1}
    stack = [1]
    while stack:
        v = stack.pop()
        for w in nb[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == g.n


def edge_count_at_least(k: int) -> EventSpec:
    return EventSpec(f"edge-count-ge-{k}", lambda g: len(g.edges) >= k, "increasing")


def max_degree_at_least(k: int) -> EventSpec:
    return EventSpec(f"max-degree-ge-{k}", lambda g: max(g.degrees(), default=0) >= k, "increasing")


ALWAYS_TRUE = EventSpec("always-true", lambda g: True, "increasing")
HAS_EDGE = EventSpec("has-edge", lambda g: len(g.edges) >= 1, "increasing")
EDGE_COUNT_GE_2 = edge_count_at_least(2)
TRIANGLE = EventSpec("triangle", _has_triangle, "increasing")
CONNECTED = EventSpec("connected", _connected, "increasing")
MAX_DEGREE_GE_3 = max_degree_at_least(3)
TRIANGLE_FREE = EventSpec("triangle-free", lambda g: not _has_triangle(g), "decreasing")
EVEN_EDGE_COUNT = EventSpec("even-edge-count", lambda g: len(g.edges) % 2 == 0, "none")

BUILTIN_EVENTS: dict[str, EventSpec] = {
    e.name: e
    for e in (
        ALWAYS_TRUE,
        HAS_EDGE,
        EDGE_COUNT_GE_2,
        TRIANGLE,
        CONNECTED,
        MAX_DEGREE_GE_3,
        TRIANGLE_FREE,
        EVEN_EDGE_COUNT,
    )
}

# not part of the eight built-ins, but handy in probes
IS_EMPTY = EventSpec("is-empty", lambda g: len(g.edges) == 0, "decreasing")


def get_event(name: str) -> EventSpec:
    if name in BUILTIN_EVENTS:
        return BUILTIN_EVENTS[name]
    if name == IS_EMPTY.name:
        return IS_EMPTY
    for prefix, factory in (("edge-count-ge-", edge_count_at_least), ("max-degree-ge-", max_degree_at_least)):
        if name.startswith(prefix) and name[len(prefix):].isdigit():
            return factory(int(name[len(prefix):]))
    raise SpecError(f"unknown event {name!r}; built-ins: {', '.join(BUILTIN_EVENTS)}")
