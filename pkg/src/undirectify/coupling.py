"""Location couplings between directed and undirected models.

Three coupled samplers, each returning both sides together with the coupling
errors ``xi1`` (edge locations carrying no arc) and ``xi2`` (arc locations
carrying no edge):

* exact IAG/IEG: the graph is the forgetful image of the digraph, so both
  error counts vanish;
* approximate IAG/IEG: a three-outcome indicator per pair makes the graph an
  ``IEG(pi°)`` sample that contains the forgetful image;
* ASRG/ESRG: arcs are placed one at a time and the graph follows rules I-III.

The error process ``Psi_s`` of the selection coupling and its
drift-compensated transform ``M_s`` live here too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import DegenerateCoupling, SamplerDiagnosticError, SpecError
from .graphs import Digraph, Graph, bits_to_codes, forget_codes, n_pairs
from .models import REJECTION_CAP, Realization, selection_realization
from .report import VerdictReport, verdict

RULE_I, RULE_II, RULE_III = 1, 2, 3
# digraph codes fit in int64 up to n = 8
CODE_N_MAX = 8


@dataclass(frozen=True)
class CoupledSample:
    graph: Graph
    digraph: Digraph
    xi1: int
    xi2: int
    psi_trajectory: tuple = ()
    rule_counts: dict = field(default_factory=dict)
    rules: tuple = ()

    def recount(self) -> tuple[int, int]:
        """Coupling errors recomputed from the two structures alone."""
        locations = {(min(v, w), max(v, w)) for v, w in self.digraph.arcs}
        return len(self.graph.edges - locations), len(locations - self.graph.edges)

    def to_json(self) -> dict:
        out = {"graph": self.graph.to_json(), "digraph": self.digraph.to_json(), "xi1": self.xi1, "xi2": self.xi2}
        if self.psi_trajectory:
            out["psi_trajectory"] = list(self.psi_trajectory)
            out["rule_counts"] = {k: int(v) for k, v in self.rule_counts.items()}
        return out


def xi_counts(graph_codes, digraph_codes, n: int) -> tuple[np.ndarray, np.ndarray]:
    """``(xi1, xi2)`` per replicate from canonical codes."""
    if n > CODE_N_MAX:
        pairs = [(int(g), _forget_int(int(d), n)) for g, d in zip(graph_codes, digraph_codes)]
        return (np.array([bin(g & ~u).count("1") for g, u in pairs], dtype=np.int64),
                np.array([bin(u & ~g).count("1") for g, u in pairs], dtype=np.int64))
    g = np.asarray(graph_codes, dtype=np.int64)
    u = forget_codes(digraph_codes, n)
    return _popcount(g & ~u), _popcount(u & ~g)


def _popcount(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.uint64)
    return np.unpackbits(x.view(np.uint8).reshape(*x.shape, 8), axis=-1).sum(axis=-1).astype(np.int64)


# --- independent-indicator couplings ------------------------------------------


def _need_iag(real: Realization) -> None:
    if real.cls != "IAG":
        raise SpecError(f"coupling expects an IAG realization, got {real.cls}")


@dataclass(frozen=True)
class IndicatorBatch:
    """Columns per replicate; arc bits use the ordered pair index."""

    arc_bits: np.ndarray
    edge_bits: np.ndarray
    n: int

    @property
    def xi1(self) -> np.ndarray:
        loc = self.arc_bits[:, 0::2] | self.arc_bits[:, 1::2]
        return (self.edge_bits & ~loc).sum(axis=1)

    @property
    def xi2(self) -> np.ndarray:
        loc = self.arc_bits[:, 0::2] | self.arc_bits[:, 1::2]
        return (loc & ~self.edge_bits).sum(axis=1)

    def digraph_codes(self):
        return bits_to_codes(self.arc_bits)

    def graph_codes(self):
        return bits_to_codes(self.edge_bits)

    def sample(self, k: int) -> CoupledSample:
        d = Digraph.from_code(self.n, int(self.digraph_codes()[k]))
        g = Graph.from_code(self.n, int(self.graph_codes()[k]))
        return CoupledSample(g, d, int(self.xi1[k]), int(self.xi2[k]))


def couple_iag_ieg_exact_batch(real: Realization, seeds) -> IndicatorBatch:
    """Arc indicators from the IAG uniforms; edge iff at least one arc."""
    _need_iag(real)
    seeds = np.atleast_1d(np.asarray(seeds, dtype=np.uint64))
    arcs = rng.uniforms(seeds, 2 * n_pairs(real.n)) < real.ordered_probs()
    edges = arcs[:, 0::2] | arcs[:, 1::2]
    return IndicatorBatch(arcs, edges, real.n)


def couple_iag_ieg_exact(real: Realization, seed: int) -> CoupledSample:
    return couple_iag_ieg_exact_batch(real, [seed]).sample(0)


def approx_extra_probability(real: Realization) -> np.ndarray:
    """Per pair, ``P(I° = 1 | I' = 0) = pi_f pi_b / ((1 - pi_f)(1 - pi_b))``.

    Raises when ``pi° = pi_f + pi_b`` exceeds 1 somewhere.
    """
    _need_iag(real)
    probs = real.ordered_probs()
    fwd, bwd = probs[0::2], probs[1::2]
    total = fwd + bwd
    if (total > 1.0).any():
        p = int(np.argmax(total))
        from .graphs import pair_index

        v, w = pair_index(real.n).pair(p)
        raise SpecError(
            f"pi°({v},{w}) = {total[p]!r} exceeds 1; the approximate coupling needs pi(v,w) + pi(w,v) <= 1"
        )
    denom = (1.0 - fwd) * (1.0 - bwd)
    with np.errstate(divide="ignore", invalid="ignore"):
        extra = np.where(denom > 0, fwd * bwd / denom, 0.0)
    return np.minimum(extra, 1.0)


def couple_iag_ieg_approx_batch(real: Realization, seeds) -> IndicatorBatch:
    """Three-outcome coupling: ``(I°, I')`` is (0,0), (1,0) or (1,1).

    ``I'`` is the exact coupling's edge (same arc uniforms as IAG sampling);
    when ``I' = 0`` a third uniform per pair switches ``I°`` on with the
    conditional probability that makes ``P(I° = 1, I' = 0) = pi_f pi_b``.
    """
    extra = approx_extra_probability(real)
    seeds = np.atleast_1d(np.asarray(seeds, dtype=np.uint64))
    c = n_pairs(real.n)
    u = rng.uniforms(seeds, 3 * c)
    arcs = u[:, : 2 * c] < real.ordered_probs()
    located = arcs[:, 0::2] | arcs[:, 1::2]
    edges = located | (u[:, 2 * c :] < extra)
    return IndicatorBatch(arcs, edges, real.n)


def couple_iag_ieg_approx(real: Realization, seed: int) -> CoupledSample:
    return couple_iag_ieg_approx_batch(real, [seed]).sample(0)


# --- selection coupling -------------------------------------------------------


class _IndexStream:
    """Draws location indices from several cdfs off one uniform stream."""

    BLOCK = 64

    def __init__(self, seed: int):
        self._g = rng.generator(seed)
        self._buf = np.empty(0)
        self._pos = 0

    def uniform(self) -> float:
        if self._pos >= len(self._buf):
            self._buf = self._g.random(self.BLOCK)
            self._pos = 0
        self._pos += 1
        return self._buf[self._pos - 1]

    def draw_fresh(self, cdf: np.ndarray, last: int, taken, what: str) -> int:
        for _ in range(REJECTION_CAP):
            j = int(np.searchsorted(cdf, self.uniform(), side="right"))
            if j >= len(cdf):
                j = last
            if not taken >> j & 1:
                return j
        raise SamplerDiagnosticError(f"rejection loop for a new {what} exceeded {REJECTION_CAP} draws")


@dataclass(frozen=True)
class SelectionBatch:
    """Per-replicate results of the ASRG/ESRG coupling.

    ``rules[k, s-1]`` is the rule applied at step ``s`` (0 where a degenerate
    replicate stopped); ``psi`` has ``m + 1`` columns.  Degenerate replicates
    keep their partial trace and are excluded by :meth:`ok`.
    """

    n: int
    m: int
    graph_codes: np.ndarray
    digraph_codes: np.ndarray
    psi: np.ndarray
    rules: np.ndarray
    degenerate: np.ndarray
    psi_recount: np.ndarray

    @property
    def ok(self) -> np.ndarray:
        return ~self.degenerate

    @property
    def rule_counts(self) -> np.ndarray:
        return np.stack([(self.rules == r).sum(axis=1) for r in (RULE_I, RULE_II, RULE_III)], axis=1)

    def xi(self) -> tuple[np.ndarray, np.ndarray]:
        return xi_counts(self.graph_codes, self.digraph_codes, self.n)

    def sample(self, k: int) -> CoupledSample:
        xi1, xi2 = self.xi()
        counts = self.rule_counts[k]
        return CoupledSample(
            Graph.from_code(self.n, int(self.graph_codes[k])),
            Digraph.from_code(self.n, int(self.digraph_codes[k])),
            int(xi1[k]),
            int(xi2[k]),
            tuple(int(x) for x in self.psi[k]),
            {"I": int(counts[0]), "II": int(counts[1]), "III": int(counts[2])},
            tuple(int(x) for x in self.rules[k]),
        )


def _asrg_realization(real: Realization) -> Realization:
    if real.cls != "ASRG":
        raise SpecError(f"coupling expects an ASRG realization, got {real.cls}")
    # only the arc side is checked up front; a graph side that runs out of
    # fresh edges surfaces as DegenerateCoupling at the step where it happens
    selection_realization("ASRG", real.mass, real.m, real.v_n)
    return real


def _run_selection(m: int, arc_cdf, arc_last, edge_cdf, edge_last, edge_support: int, seed: int):
    """One replicate; returns ``(graph, digraph, psi, rules)`` or raises."""
    s = _IndexStream(seed)
    arcs = 0
    edges = 0
    psi = [0]
    rules = []
    for step in range(1, m + 1):
        j = s.draw_fresh(arc_cdf, arc_last, arcs, "arc")
        arcs |= 1 << j
        p = j >> 1
        if arcs >> (j ^ 1) & 1:
            rule = RULE_III
        elif edges >> p & 1:
            rule = RULE_I
        else:
            rule = RULE_II
        psi.append(psi[-1] + (rule == RULE_III))
        rules.append(rule)
        if rule == RULE_II:
            edges |= 1 << p
        else:
            if edges & edge_support == edge_support:
                name = "I" if rule == RULE_I else "III"
                raise DegenerateCoupling(
                    f"rule {name} at step {step} found no fresh edge of positive mass", step, psi, _tally(rules)
                )
            edges |= 1 << s.draw_fresh(edge_cdf, edge_last, edges, "edge")
    return edges, arcs, psi, rules


def _tally(rules) -> dict:
    return {"I": rules.count(RULE_I), "II": rules.count(RULE_II), "III": rules.count(RULE_III)}


def _cdf(weights: np.ndarray) -> tuple[np.ndarray, int, int]:
    cdf = np.cumsum(weights)
    cdf = cdf / cdf[-1]
    positive = np.flatnonzero(weights > 0)
    return cdf, int(positive[-1]), sum(1 << int(j) for j in positive)


def couple_asrg_esrg_batch(real: Realization, seeds) -> SelectionBatch:
    """Run the rules I-III coupling once per seed on a fixed realization.

    Per step an arc is drawn from ``mu`` among absent arcs (the ASRG
    procedure).  Then the graph side applies:

    * III, the reverse arc is present: one more error, and a fresh edge is
      drawn from ``mu°`` among absent edges;
    * I, the edge already exists without an arc: the error there is resolved
      and a fresh edge is drawn, so ``Psi`` is unchanged;
    * II, otherwise: the edge at the arc's location is added.
    """
    real = _asrg_realization(real)
    n, m = real.n, real.m
    arc_cdf, arc_last, _ = _cdf(real.mass.ordered_masses())
    edge_cdf, edge_last, support = _cdf(real.mass.pair_masses())
    seeds = np.atleast_1d(np.asarray(seeds, dtype=np.uint64))
    r = len(seeds)
    gcodes = np.zeros(r, dtype=object if n > CODE_N_MAX else np.int64)
    dcodes = np.zeros(r, dtype=object if n > CODE_N_MAX else np.int64)
    psi = np.zeros((r, m + 1), dtype=np.int64)
    rules = np.zeros((r, m), dtype=np.int8)
    degenerate = np.zeros(r, dtype=bool)
    for k, seed in enumerate(seeds):
        try:
            g, d, trace, applied = _run_selection(m, arc_cdf, arc_last, edge_cdf, edge_last, support, int(seed))
        except DegenerateCoupling as exc:
            degenerate[k] = True
            psi[k, : len(exc.psi)] = exc.psi
            continue
        gcodes[k], dcodes[k] = g, d
        psi[k] = trace
        rules[k] = applied
    recount = np.where(degenerate, -1, xi_counts(gcodes, dcodes, n)[0])
    return SelectionBatch(n, m, gcodes, dcodes, psi, rules, degenerate, recount)


def _forget_int(code: int, n: int) -> int:
    g = 0
    for p in range(n_pairs(n)):
        if code >> (2 * p) & 3:
            g |= 1 << p
    return g


def couple_asrg_esrg(real: Realization, seed: int) -> CoupledSample:
    """Single replicate; raises :class:`DegenerateCoupling` when stuck.

    Double-entry check: the tracked ``Psi_m`` must equal the recounted
    ``xi1`` and ``xi2`` must be zero.
    """
    real = _asrg_realization(real)
    arc_cdf, arc_last, _ = _cdf(real.mass.ordered_masses())
    edge_cdf, edge_last, support = _cdf(real.mass.pair_masses())
    g, d, psi, rules = _run_selection(real.m, arc_cdf, arc_last, edge_cdf, edge_last, support, int(seed))
    out = CoupledSample(Graph.from_code(real.n, g), Digraph.from_code(real.n, d), 0, 0, tuple(psi), _tally(rules),
                        tuple(rules))
    xi1, xi2 = out.recount()
    if xi1 != psi[-1] or xi2 != 0:
        raise AssertionError(f"coupling bookkeeping broken: Psi_m={psi[-1]}, recount xi1={xi1}, xi2={xi2}")
    return CoupledSample(out.graph, out.digraph, xi1, xi2, out.psi_trajectory, out.rule_counts, out.rules)


# --- error process ------------------------------------------------------------


@dataclass(frozen=True)
class MartingaleTrace:
    mu_up: float
    a: tuple
    b: tuple
    m_values: tuple
    psi: tuple

    def recompute(self) -> np.ndarray:
        """``M_s`` via the recursion ``C_s = b_s C_{s-1} + a_s``, ``B_s = b_s B_{s-1}``."""
        out = [0.0]
        c, big_b = 0.0, 1.0
        for s in range(1, len(self.psi)):
            c = self.b[s - 1] * c + self.a[s - 1]
            big_b *= self.b[s - 1]
            out.append((self.psi[s] - c) / big_b)
        return np.array(out)

    def consistent(self, tol: float = 1e-9) -> bool:
        return bool(np.allclose(self.recompute(), self.m_values, rtol=0, atol=tol))


def martingale_coefficients(m: int, mu_up: float) -> tuple[np.ndarray, np.ndarray]:
    """``a_i = i/(1/mu - i)`` and ``b_i = 1 - 2/(1/mu - i)`` for ``i = 1..m``."""
    if not 0 < mu_up <= 1:
        raise SpecError(f"mu_up must lie in (0, 1], got {mu_up!r}")
    f = 1.0 / mu_up
    if m >= f:
        raise SpecError(f"m={m} must be below 1/mu_up={f!r}; the transform is singular there")
    i = np.arange(1, m + 1, dtype=float)
    a = i / (f - i)
    b = 1.0 - 2.0 / (f - i)
    if (b <= 0).any():
        raise SpecError(f"b_i vanishes or changes sign for m={m}, 1/mu_up={f!r}; need m < 1/mu_up - 2")
    return a, b


def martingale_values(psi: np.ndarray, mu_up: float) -> np.ndarray:
    """Closed form ``M_s = (Psi_s - sum_i prod_{j>i} b_j a_i) / prod_{i<=s} b_i`` row-wise."""
    psi = np.asarray(psi, dtype=float)
    m = psi.shape[-1] - 1
    a, b = martingale_coefficients(m, mu_up)
    out = np.zeros_like(psi)
    for s in range(1, m + 1):
        comp = math.fsum(math.prod(b[i:s]) * a[i - 1] for i in range(1, s + 1))
        out[..., s] = (psi[..., s] - comp) / math.prod(b[:s])
    return out


def martingale_transform(psi, mu_up: float) -> MartingaleTrace:
    psi = tuple(int(x) for x in psi)
    if not psi or psi[0] != 0:
        raise SpecError("a Psi trajectory starts at Psi_0 = 0")
    a, b = martingale_coefficients(len(psi) - 1, mu_up)
    values = martingale_values(np.array(psi), mu_up)
    return MartingaleTrace(float(mu_up), tuple(a), tuple(b), tuple(float(v) for v in values), psi)


def growth_bound(m: int, f: float) -> float:
    """``sum_{s=1}^m s/(f-s) * prod_{r=s+1}^m (1 - 2/(f-r))``."""
    if m < 0:
        raise SpecError(f"m must be nonnegative, got {m}")
    if f <= m:
        raise SpecError(f"growth bound needs f > m, got m={m}, f={f}")
    terms = []
    for s in range(1, m + 1):
        terms.append(s / (f - s) * math.prod(1.0 - 2.0 / (f - r) for r in range(s + 1, m + 1)))
    return math.fsum(terms)


def supermartingale_drift_check(real: Realization, replicates: int, seed: int) -> VerdictReport:
    """Terminal drift ``E[M_m] - M_0`` over coupled replicates on a fixed ``V_n``.

    Passes iff the estimate is at most ``3 SE`` (one-sided).
    """
    real = _asrg_realization(real)
    mu_up = real.mu_up
    if real.m == 0:
        return verdict("supermartingale-drift", 0.0, 0.0, 0.0, replicates=replicates, seed=seed,
                       bound_formula="E[M_m] - M_0 <= 3 SE", m=0)
    seeds = rng.split(seed, np.arange(replicates))
    batch = couple_asrg_esrg_batch(real, seeds)
    ok = batch.ok
    terminal = martingale_values(batch.psi[ok], mu_up)[:, -1]
    est = float(np.mean(terminal)) if terminal.size else 0.0
    se = float(np.std(terminal, ddof=1) / math.sqrt(terminal.size)) if terminal.size > 1 else 0.0
    return verdict("supermartingale-drift", est, 0.0, se, replicates=int(ok.sum()), seed=seed,
                   bound_formula="E[M_m] - M_0 <= 3 SE", n=real.n, m=real.m, mu_up=mu_up,
                   degenerate=int(batch.degenerate.sum()))
