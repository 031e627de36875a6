"""Exact pushforward, total variation, witness events and small-n oracles."""

from __future__ import annotations

import math
from itertools import permutations

import numpy as np

from .distribution import MASS_TOL, GraphDistribution
from .errors import SizeCapError, SpecError
from .events import EventSpec
from .graphs import forget_codes, n_pairs

ORACLE_TERM_CAP = 10_000_000
ORACLE_N_MAX = 4
ORACLE_M_MAX = 4


def phi_pushforward(d: GraphDistribution) -> GraphDistribution:
    """Aggregate digraph mass over each forgetful preimage."""
    if d.kind != "digraph":
        raise SpecError("phi_pushforward expects a digraph distribution")
    codes = forget_codes(np.arange(len(d.pmf), dtype=np.int64), d.n)
    pmf = np.bincount(codes, weights=d.pmf, minlength=1 << n_pairs(d.n))
    return GraphDistribution(d.n, "graph", pmf, dict(d.meta))


def _same_space(a: GraphDistribution, b: GraphDistribution) -> None:
    if a.kind != b.kind or a.n != b.n:
        raise SpecError(f"cannot compare a {a.kind} on n={a.n} with a {b.kind} on n={b.n}")


def tv_distance(a: GraphDistribution, b: GraphDistribution) -> float:
    _same_space(a, b)
    return 0.5 * math.fsum(np.abs(a.pmf - b.pmf))


def witness_events(a: GraphDistribution, b: GraphDistribution) -> tuple[frozenset, frozenset, float]:
    """``Q+ = {x : a(x) > b(x)}``, ``Q- = {x : a(x) < b(x)}`` and the gap on ``Q+``."""
    _same_space(a, b)
    plus = np.flatnonzero(a.pmf > b.pmf)
    minus = np.flatnonzero(a.pmf < b.pmf)
    gap = abs(math.fsum(a.pmf[plus]) - math.fsum(b.pmf[plus]))
    return frozenset(int(c) for c in plus), frozenset(int(c) for c in minus), gap


def event_probability(dist: GraphDistribution, q: EventSpec) -> float:
    if q.domain == "digraph" and dist.kind != "digraph":
        raise SpecError(f"digraph event {q.name!r} cannot be evaluated on a graph distribution")
    if q.domain == "graph" and dist.kind != "graph":
        raise SpecError(f"graph event {q.name!r} needs lifting before use on a digraph distribution")
    mask = q.evaluate_codes(dist.n, np.arange(len(dist.pmf)), dist.kind)
    return math.fsum(dist.pmf[mask])


def gilbert_distribution(n: int, p: float, kind: str = "graph") -> GraphDistribution:
    """Closed-form Gilbert pmf: ``p^|E| (1-p)^(k-|E|)``."""
    k = n_pairs(n) * (2 if kind == "digraph" else 1)
    sizes = np.array([bin(c).count("1") for c in range(1 << k)])
    return GraphDistribution(n, kind, p ** sizes * (1.0 - p) ** (k - sizes))


def esrg_exact_distribution_oracle(weights, n: int, m: int, kind: str = "graph") -> GraphDistribution:
    """Order-sum oracle for selection models.

    ``weights`` are masses per location (unordered pairs for graphs, ordered
    pair index for digraphs).  Every ordered insertion sequence of ``m``
    distinct positive-mass locations contributes the product of sequentially
    renormalized masses.
    """
    if n > ORACLE_N_MAX or m > ORACLE_M_MAX:
        raise SizeCapError(f"order-sum oracle limited to n<={ORACLE_N_MAX}, m<={ORACLE_M_MAX}")
    w = np.asarray(weights, dtype=float)
    k = n_pairs(n) * (2 if kind == "digraph" else 1)
    if w.shape != (k,):
        raise SpecError(f"expected {k} location weights, got shape {w.shape}")
    positive = [j for j in range(k) if w[j] > 0]
    if m > len(positive):
        raise SpecError(f"m={m} exceeds the {len(positive)} positive-mass locations")
    terms = math.perm(len(positive), m)
    if terms > ORACLE_TERM_CAP:
        raise SizeCapError(f"order sum has {terms} terms (cap {ORACLE_TERM_CAP})")
    total = math.fsum(w)
    pmf = np.zeros(1 << k)
    for seq in permutations(positive, m):
        pr, used = 1.0, 0.0
        for j in seq:
            pr *= w[j] / (total - used)
            used += w[j]
        pmf[sum(1 << j for j in seq)] += pr
    return GraphDistribution(n, kind, pmf, {"oracle": "order-sum"})


def check_mass(d: GraphDistribution, tol: float = MASS_TOL) -> None:
    d.check_normalized(tol)
