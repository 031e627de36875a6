"""Replicated experiments: seeds, interval estimates and bound verdicts.

Replicate ``k`` of an experiment seeded with ``base`` always uses
``split(base, k)``, so results do not depend on batching or worker count.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import rng
from .coupling import (
    RULE_III,
    SelectionBatch,
    couple_asrg_esrg_batch,
    couple_iag_ieg_approx_batch,
    growth_bound,
)
from .distribution import GraphDistribution
from .errors import SpecError
from .events import EventSpec
from .graphs import N_MAX_GRAPHS, Graph, forget_codes, n_pairs, bits_to_codes
from .models import ModelSpec, Realization, realize, sample_codes
from .report import VerdictReport, verdict

CHUNK = 100_000
BOOTSTRAP_RESAMPLES = 200
EXHAUSTIVE_CAP = 100_000


# --- schedules ----------------------------------------------------------------


RATES = ("log", "sqrt", "const", "pow")


@dataclass(frozen=True)
class Rate:
    """A named schedule ``c * g(n)`` with ``g`` one of log, sqrt, const, pow."""

    name: str
    c: float = 1.0
    a: float = 1.0

    def __post_init__(self):
        if self.name not in RATES:
            raise SpecError(f"unknown rate {self.name!r}; expected one of {RATES}")
        if not self.c > 0:
            raise SpecError(f"rate constant must be positive, got {self.c}")

    def __call__(self, n: int) -> float:
        g = {"log": math.log(n) if n > 1 else 0.0, "sqrt": math.sqrt(n), "const": 1.0, "pow": float(n) ** self.a}[self.name]
        value = self.c * g
        if not (math.isfinite(value) and value > 0):
            raise SpecError(f"rate {self.describe()} is not positive and finite at n={n}")
        return value

    def describe(self) -> str:
        return {"log": f"{self.c}*log(n)", "sqrt": f"{self.c}*sqrt(n)", "const": f"{self.c}",
                "pow": f"{self.c}*n^{self.a}"}[self.name]

    @classmethod
    def parse(cls, obj) -> "Rate":
        if isinstance(obj, (int, float)):
            return cls("const", float(obj))
        if isinstance(obj, str):
            return cls(obj)
        return cls(obj["name"], float(obj.get("c", 1.0)), float(obj.get("a", 1.0)))

    def to_json(self) -> dict:
        return {"name": self.name, "c": self.c, "a": self.a}


@dataclass
class ExperimentConfig:
    specs: list
    replicates: int
    base_seed: int = rng.DEFAULT_SEED
    n_grid: list = field(default_factory=list)
    rate: Rate = field(default_factory=lambda: Rate("const"))
    omega: Rate = field(default_factory=lambda: Rate("const"))

    def __post_init__(self):
        if self.replicates < 1:
            raise SpecError(f"replicates must be at least 1, got {self.replicates}")
        for n in self.n_grid:
            self.rate(n)
            self.omega(n)

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        specs = [ModelSpec.from_json(s) for s in obj.get("specs", [])]
        return cls(
            specs=specs,
            replicates=int(obj.get("replicates", 1000)),
            base_seed=int(obj.get("base_seed", rng.DEFAULT_SEED)),
            n_grid=[int(n) for n in obj.get("n_grid", [])],
            rate=Rate.parse(obj.get("rate", "const")),
            omega=Rate.parse(obj.get("omega", "const")),
        )


# --- seeds and workers --------------------------------------------------------


def replicate_seeds(base_seed: int, replicates: int, start: int = 0) -> np.ndarray:
    return rng.split(base_seed, np.arange(start, start + replicates, dtype=np.uint64))


def worker_count() -> int:
    env = os.environ.get("UNDIRECTIFY_THREADS")
    cpus = os.cpu_count() or 1
    if env is None:
        return cpus
    try:
        return max(1, min(int(env), cpus))
    except ValueError:
        raise SpecError(f"UNDIRECTIFY_THREADS must be an integer, got {env!r}") from None


def map_chunks(fn, seeds: np.ndarray, *args, chunk: int = CHUNK) -> list:
    """Apply ``fn(*args, seed_chunk)`` over consecutive chunks, results in order."""
    parts = [seeds[i : i + chunk] for i in range(0, len(seeds), chunk)] or [seeds]
    workers = min(worker_count(), len(parts))
    if workers <= 1:
        return [fn(*args, p) for p in parts]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(fn, *[[a] * len(parts) for a in args], parts))


def selection_batch(real: Realization, replicates: int, seed: int) -> SelectionBatch:
    seeds = replicate_seeds(seed, replicates)
    parts = map_chunks(couple_asrg_esrg_batch, seeds, real, chunk=20_000)
    if len(parts) == 1:
        return parts[0]
    cat = lambda name: np.concatenate([getattr(p, name) for p in parts])  # noqa: E731
    return SelectionBatch(real.n, real.m, cat("graph_codes"), cat("digraph_codes"), cat("psi"), cat("rules"),
                          cat("degenerate"), cat("psi_recount"))


# --- intervals ----------------------------------------------------------------


def wald_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wald interval with continuity correction, clipped to [0, 1]."""
    if trials <= 0:
        return (0.0, 1.0)
    p = successes / trials
    half = z * math.sqrt(p * (1 - p) / trials) + 0.5 / trials
    return (max(0.0, p - half), min(1.0, p + half))


def proportion_se(successes: int, trials: int) -> float:
    if trials <= 0:
        return 0.0
    p = successes / trials
    return math.sqrt(p * (1 - p) / trials)


def mean_se(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return 0.0, 0.0
    se = float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return float(np.mean(x)), se


# --- sampling helpers -----------------------------------------------------------


def sampled_graph_codes(spec: ModelSpec, seeds: np.ndarray) -> list | np.ndarray:
    """Graph codes per seed; digraph samples are mapped through the forgetful map."""
    if spec.seed is not None or spec.type_free():
        real = realize(spec)
        codes = sample_codes(real, seeds)
    else:
        codes = [sample_codes(realize(spec, int(s)), [int(s)])[0] for s in seeds]
    if spec.directed:
        if spec.n <= 8:
            return forget_codes(np.asarray(codes, dtype=np.int64), spec.n)
        return [_forget_int(int(c), spec.n) for c in codes]
    return np.asarray(codes, dtype=np.int64) if spec.n <= 11 else [int(c) for c in codes]


def _forget_int(code: int, n: int) -> int:
    g = 0
    for p in range(n_pairs(n)):
        if code >> (2 * p) & 3:
            g |= 1 << p
    return g


def evaluate_graph_codes(q: EventSpec, n: int, codes) -> np.ndarray:
    """Graph-event truth values for graph codes of any size."""
    if q.domain != "graph":
        q = q.base
    if n <= N_MAX_GRAPHS:
        return q.table(n)[np.asarray(codes, dtype=np.int64)]
    memo: dict[int, bool] = {}
    out = np.empty(len(codes), dtype=bool)
    for k, c in enumerate(codes):
        c = int(c)
        if c not in memo:
            memo[c] = q(Graph.from_code(n, c))
        out[k] = memo[c]
    return out


# --- total variation ------------------------------------------------------------


@dataclass
class TvEstimate:
    estimate: float
    ci: tuple[float, float]
    replicates: int
    seed: int
    support_size: int

    def to_json(self) -> dict:
        return {"estimate": self.estimate, "ci": list(self.ci), "replicates": self.replicates, "seed": self.seed,
                "support_size": self.support_size}


def _plugin_tv(ca: np.ndarray, cb: np.ndarray, ra: int, rb: int) -> float:
    return 0.5 * float(np.abs(ca / ra - cb / rb).sum())


def empirical_tv(spec_a: ModelSpec, spec_b: ModelSpec, replicates: int, seed: int = rng.DEFAULT_SEED,
                 n: int | None = None) -> TvEstimate:
    """Plug-in TV between sampled graph pmfs, with a percentile bootstrap CI.

    Digraph specs are compared through the forgetful map.
    """
    if n is not None:
        spec_a, spec_b = spec_a.with_n(n), spec_b.with_n(n)
    if spec_a.n != spec_b.n:
        raise SpecError(f"specs disagree on n: {spec_a.n} vs {spec_b.n}")
    states = 1 << n_pairs(spec_a.n)
    if states > replicates / 10:
        warnings.warn(
            f"{states} graph states against {replicates} replicates: the plug-in TV is biased upward",
            stacklevel=2,
        )
    ga = sampled_graph_codes(spec_a, replicate_seeds(rng.split(seed, 0), replicates))
    gb = sampled_graph_codes(spec_b, replicate_seeds(rng.split(seed, 1), replicates))
    if isinstance(ga, np.ndarray) and isinstance(gb, np.ndarray):
        pooled = np.concatenate([ga, gb])
    else:
        pooled = np.array([str(int(x)) for x in list(ga) + list(gb)])
    keys, inverse = np.unique(pooled, return_inverse=True)
    ia, ib = inverse[:replicates], inverse[replicates:]
    ca = np.bincount(ia, minlength=len(keys)).astype(float)
    cb = np.bincount(ib, minlength=len(keys)).astype(float)
    est = _plugin_tv(ca, cb, replicates, replicates)
    g = rng.generator(rng.split(seed, 2))
    boot = np.empty(BOOTSTRAP_RESAMPLES)
    for k in range(BOOTSTRAP_RESAMPLES):
        boot[k] = _plugin_tv(g.multinomial(replicates, ca / replicates), g.multinomial(replicates, cb / replicates),
                             replicates, replicates)
    lo, hi = np.percentile(boot, [2.5, 97.5])
    return TvEstimate(est, (float(lo), float(hi)), replicates, seed, len(keys))


# --- coupling-error checks ------------------------------------------------------


def _xi1_samples(real: Realization, replicates: int, seed: int) -> np.ndarray:
    seeds = replicate_seeds(seed, replicates)
    parts = map_chunks(_xi_chunk, seeds, real)
    xi1 = np.concatenate([p[0] for p in parts])
    xi2 = np.concatenate([p[1] for p in parts])
    return xi1, xi2


def _xi_chunk(real: Realization, seeds: np.ndarray):
    b = couple_iag_ieg_approx_batch(real, seeds)
    return b.xi1.astype(np.int64), b.xi2.astype(np.int64)


def approx_error_law_check(real: Realization, replicates: int, seed: int = rng.DEFAULT_SEED) -> list[VerdictReport]:
    """Mean of ``xi1`` against its exact value and against ``(n pi_up)^2``; ``xi2 = 0`` throughout."""
    probs = real.ordered_probs()
    exact = math.fsum(probs[0::2] * probs[1::2])
    xi1, xi2 = _xi1_samples(real, replicates, seed)
    mean, se = mean_se(xi1)
    bound = (real.n * real.pi_up) ** 2
    two_sided = abs(mean - exact)
    return [
        verdict("xi-mean-vs-exact", two_sided, 0.0, se, replicates=replicates, seed=seed, n=real.n,
                bound_formula="|mean(xi) - sum_pairs pi(v,w) pi(w,v)| <= 3 SE", mean=mean, exact=exact),
        verdict("xi-mean-vs-bound", mean, bound, se, replicates=replicates, seed=seed, n=real.n,
                bound_formula="mean(xi) <= (n pi_up)^2 + 3 SE"),
        verdict("xi2-zero", float(xi2.max(initial=0)), 0.0, 0.0, replicates=replicates, seed=seed, n=real.n,
                bound_formula="max xi2 = 0"),
    ]


def chernoff_xi_check(real: Realization, omegas, replicates: int, seed: int = rng.DEFAULT_SEED):
    """Frequency of ``{xi > 2 omega max(1, (n pi_up)^2)}`` against ``exp(-3 omega / 2)``.

    ``omegas`` may be a number (one report) or a sequence (one report each,
    all read off the same replicates).
    """
    single = np.ndim(omegas) == 0
    xi1, _ = _xi1_samples(real, replicates, seed)
    scale = max(1.0, (real.n * real.pi_up) ** 2)
    out = []
    for w in np.atleast_1d(omegas):
        w = float(w)
        threshold = 2.0 * w * scale
        hits = int((xi1 > threshold).sum())
        out.append(verdict(
            "chernoff-xi", hits / replicates, math.exp(-1.5 * w), proportion_se(hits, replicates),
            replicates=replicates, seed=seed, n=real.n, omega=w, threshold=threshold,
            bound_formula="P(xi > 2 omega max(1, (n pi_up)^2)) <= exp(-3 omega / 2) + 3 SE",
        ))
    return out[0] if single else out


def psi_tail_check(real: Realization, r: float, replicates: int, seed: int = rng.DEFAULT_SEED,
                   batch: SelectionBatch | None = None) -> VerdictReport:
    """Frequency of ``{Psi_m >= 1/r + m^2 mu_up}`` against ``r m^2 mu_up``.

    Degenerate replicates are excluded and counted.
    """
    if batch is None:
        batch = selection_batch(real, replicates, seed)
    m, mu_up = real.m, real.mu_up
    final = batch.psi[batch.ok, -1]
    threshold = 1.0 / r + m * m * mu_up
    hits = int((final >= threshold).sum())
    trials = int(final.size)
    return verdict(
        "psi-tail", hits / trials if trials else 0.0, r * m * m * mu_up, proportion_se(hits, trials),
        replicates=trials, seed=seed, n=real.n, r=float(r), m=m, mu_up=mu_up, threshold=threshold,
        degenerate=int(batch.degenerate.sum()),
        bound_formula="P(Psi_m >= 1/r + m^2 mu_up) <= r m^2 mu_up + 3 SE",
    )


def psi_increment_check(real: Realization, replicates: int, seed: int = rng.DEFAULT_SEED,
                        batch: SelectionBatch | None = None, min_cell: int = 500) -> list[VerdictReport]:
    """Increment law of ``Psi``.

    Hard checks: increments lie in {0, 1} and equal the rule-III indicators in
    every replicate, and ``Psi_m`` equals the recounted ``xi1``.  Binned check:
    for each ``(s, Psi_s = k)`` cell with at least ``min_cell`` observations,
    the increment frequency stays below ``(s - 2k)/(1/mu_up - s) + 3 SE``.
    """
    if batch is None:
        batch = selection_batch(real, replicates, seed)
    ok = batch.ok
    psi, rules = batch.psi[ok], batch.rules[ok]
    inc = np.diff(psi, axis=1)
    in_range = bool(np.isin(inc, (0, 1)).all())
    match = bool((inc == (rules == RULE_III)).all())
    bookkeeping = bool((batch.psi_recount[ok] == psi[:, -1]).all())
    xi2 = batch.xi()[1][ok]
    reports = [
        VerdictReport("psi-increments-binary", float(in_range), None, in_range, int(ok.sum()), seed,
                      bound_formula="Psi_{s+1} - Psi_s in {0, 1}"),
        VerdictReport("psi-increments-rule-iii", float(match), None, match, int(ok.sum()), seed,
                      bound_formula="Psi_{s+1} - Psi_s = 1{rule III at step s+1}"),
        VerdictReport("psi-final-equals-xi1", float(bookkeeping), None, bookkeeping and not xi2.any(),
                      int(ok.sum()), seed, bound_formula="Psi_m = xi1 and xi2 = 0"),
    ]
    f = 1.0 / real.mu_up
    cells = []
    for s in range(real.m):
        level = psi[:, s]
        for k in np.unique(level):
            sel = level == k
            obs = int(sel.sum())
            if obs < min_cell:
                continue
            hits = int(inc[sel, s].sum())
            bound = (s - 2 * int(k)) / (f - s)
            cells.append(verdict("psi-increment-cell", hits / obs, bound, proportion_se(hits, obs), replicates=obs,
                                 seed=seed, n=real.n, s=s, psi_s=int(k),
                                 bound_formula="P(increment | s, Psi_s = k) <= (s - 2k)/(1/mu_up - s) + 3 SE"))
    reports.extend(cells)
    return reports


# --- insensitivity ----------------------------------------------------------------


def _reachable_flags(q: EventSpec, n: int, codes, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Per graph code: can at most ``r`` added edges make ``q`` true / false."""
    c = n_pairs(n)
    memo: dict[int, tuple[bool, bool]] = {}
    can_true = np.empty(len(codes), dtype=bool)
    can_false = np.empty(len(codes), dtype=bool)
    for idx, code in enumerate(codes):
        code = int(code)
        if code not in memo:
            absent = [p for p in range(c) if not code >> p & 1]
            t = f = False
            for size in range(0, min(r, len(absent)) + 1):
                for add in combinations(absent, size):
                    val = _eval(q, n, code | sum(1 << p for p in add))
                    t, f = t or val, f or not val
                    if t and f:
                        break
                if t and f:
                    break
            memo[code] = (t, f)
        can_true[idx], can_false[idx] = memo[code]
    return can_true, can_false


def _eval(q: EventSpec, n: int, code: int) -> bool:
    if n <= N_MAX_GRAPHS:
        return bool(q.table(n)[code])
    return q(Graph.from_code(n, code))


def exact_insensitivity(dist: GraphDistribution, q: EventSpec, r: int) -> dict:
    """Largest shifts of ``P(G in Q)`` reachable by adding at most ``r`` edges, exactly."""
    if dist.kind != "graph":
        raise SpecError("insensitivity is probed on graph distributions")
    _check_exhaustive(dist.n, r)
    codes = np.arange(len(dist.pmf))
    base = math.fsum(dist.pmf[q.table(dist.n)])
    can_true, can_false = _reachable_flags(q, dist.n, codes, r)
    up = math.fsum(dist.pmf[can_true]) - base
    down = base - (1.0 - math.fsum(dist.pmf[can_false]))
    return {"base": base, "up": up, "down": down, "max": max(up, down)}


def _check_exhaustive(n: int, r: int) -> None:
    if math.comb(n_pairs(n), r) > EXHAUSTIVE_CAP:
        raise SpecError(f"C({n_pairs(n)}, {r}) additions exceed the exhaustive cap {EXHAUSTIVE_CAP}")


def insensitivity_probe(spec: ModelSpec, q: EventSpec, r: int, replicates: int, seed: int = rng.DEFAULT_SEED,
                        strategies=("random", "greedy", "exhaustive")) -> VerdictReport:
    """Observed ``|P(G up in Q) - P(G in Q)|`` under several addition strategies.

    Informational only (``passed is None``): the definition ranges over every
    modification rule and sampling cannot certify it.
    """
    n = spec.n
    c = n_pairs(n)
    if not 0 <= r <= c:
        raise SpecError(f"r must lie in [0, {c}], got {r}")
    if q.domain != "graph":
        q = q.base
    codes = sampled_graph_codes(spec, replicate_seeds(rng.split(seed, 0), replicates))
    base = evaluate_graph_codes(q, n, codes)
    p0 = float(base.mean())
    details = {"base": {"estimate": p0, "ci": list(wald_interval(int(base.sum()), replicates))}}
    g = rng.generator(rng.split(seed, 1))
    for strategy in strategies:
        if strategy == "random":
            added = [_add_random(int(code), c, r, g) for code in codes]
            after = evaluate_graph_codes(q, n, added)
            shifts = {"random": after}
        elif strategy == "greedy":
            shifts = {
                "greedy-true": evaluate_graph_codes(q, n, [_add_greedy(q, n, int(code), r, True) for code in codes]),
                "greedy-false": evaluate_graph_codes(q, n, [_add_greedy(q, n, int(code), r, False) for code in codes]),
            }
        elif strategy == "exhaustive":
            try:
                _check_exhaustive(n, r)
            except SpecError as exc:
                details["exhaustive"] = {"skipped": str(exc)}
                continue
            can_true, can_false = _reachable_flags(q, n, codes, r)
            shifts = {"exhaustive-true": can_true, "exhaustive-false": ~can_false}
        else:
            raise SpecError(f"unknown insensitivity strategy {strategy!r}")
        for name, vals in shifts.items():
            k = int(vals.sum())
            details[name] = {"estimate": k / replicates, "delta": abs(k / replicates - p0),
                             "ci": list(wald_interval(k, replicates))}
    deltas = [v["delta"] for v in details.values() if "delta" in v]
    return VerdictReport("insensitivity", max(deltas, default=0.0), None, None, replicates, seed, n=n,
                         bound_formula="informational: max |P(G_up in Q) - P(G in Q)| over strategies",
                         details={"event": q.name, "r": r, "strategies": details})


def _add_random(code: int, c: int, r: int, g: np.random.Generator) -> int:
    absent = [p for p in range(c) if not code >> p & 1]
    if not absent or r == 0:
        return code
    chosen = g.choice(len(absent), size=min(r, len(absent)), replace=False)
    return code | sum(1 << absent[i] for i in chosen)


def _add_greedy(q: EventSpec, n: int, code: int, r: int, target: bool) -> int:
    """Add edges one at a time, taking the first that reaches ``target`` if any."""
    c = n_pairs(n)
    for _ in range(r):
        if _eval(q, n, code) == target:
            return code
        absent = [p for p in range(c) if not code >> p & 1]
        if not absent:
            return code
        hit = next((p for p in absent if _eval(q, n, code | 1 << p) == target), None)
        code |= 1 << (absent[0] if hit is None else hit)
    return code


# --- equivalence pipeline ---------------------------------------------------------


def _iag_side(spec: ModelSpec, q: EventSpec, seeds: np.ndarray):
    """Per replicate: q on U(IAG) and on the coupled IEG(pi°) graph, plus E[xi1 | V_n]."""
    n = spec.n
    if spec.seed is not None or spec.type_free():
        real = realize(spec)
        batches = [(real, couple_iag_ieg_approx_batch(real, seeds))]
    else:
        batches = []
        for s in seeds:
            real = realize(spec, int(s))
            batches.append((real, couple_iag_ieg_approx_batch(real, [int(s)])))
    directed, undirected, allowance = [], [], []
    for real, b in batches:
        located = b.arc_bits[:, 0::2] | b.arc_bits[:, 1::2]
        directed.append(evaluate_graph_codes(q, n, bits_to_codes(located)))
        undirected.append(evaluate_graph_codes(q, n, bits_to_codes(b.edge_bits)))
        probs = real.ordered_probs()
        allowance.append(np.full(len(b.edge_bits), math.fsum(probs[0::2] * probs[1::2])))
    return np.concatenate(directed), np.concatenate(undirected), np.concatenate(allowance)


def _asrg_side(spec: ModelSpec, q: EventSpec, seeds: np.ndarray):
    """Per replicate: q on U(ASRG) and on the coupled ESRG(mu°) graph, plus E[Psi_m | V_n] bound."""
    n = spec.n
    if spec.seed is not None or spec.type_free():
        real = realize(spec)
        pairs = [(real, couple_asrg_esrg_batch(real, seeds))]
    else:
        pairs = []
        for s in seeds:
            real = realize(spec, int(s))
            pairs.append((real, couple_asrg_esrg_batch(real, [int(s)])))
    directed, undirected, allowance, degenerate = [], [], [], 0
    for real, b in pairs:
        ok = b.ok
        degenerate += int((~ok).sum())
        dcodes = b.digraph_codes[ok]
        located = forget_codes(dcodes, n) if n <= 8 else [_forget_int(int(d), n) for d in dcodes]
        directed.append(evaluate_graph_codes(q, n, located))
        undirected.append(evaluate_graph_codes(q, n, b.graph_codes[ok]))
        f = 1.0 / real.mu_up
        allow = growth_bound(real.m, f) if real.m < f else 1.0
        allowance.append(np.full(int(ok.sum()), min(allow, 1.0)))
    return np.concatenate(directed), np.concatenate(undirected), np.concatenate(allowance), degenerate


def equivalence_pipeline(iag_spec: ModelSpec, asrg_spec: ModelSpec, q: EventSpec, n_grid, replicates: int,
                         seed: int = rng.DEFAULT_SEED) -> dict:
    """Estimate the four event probabilities on each ``n`` and compare gaps.

    Each directed sample is coupled to its undirected counterpart, so per row
    ``undirected_gap <= directed_gap + P(coupling differs)`` up to sampling
    error, with the coupling terms bounded by ``E[xi1]`` and ``E[Psi_m]``.
    """
    if q.domain != "graph":
        q = q.base
    rows = []
    for n in n_grid:
        sa, sb = iag_spec.with_n(n), asrg_spec.with_n(n)
        if sa.cls != "IAG" or sb.cls != "ASRG":
            raise SpecError("the pipeline takes an IAG spec and an ASRG spec")
        iag_dir, ieg, allow_a = _iag_side(sa, q, replicate_seeds(rng.split(seed, 2 * n), replicates))
        asrg_dir, esrg, allow_b, degenerate = _asrg_side(sb, q, replicate_seeds(rng.split(seed, 2 * n + 1), replicates))
        est = {}
        for name, vals in (("iag", iag_dir), ("asrg", asrg_dir), ("ieg_sym", ieg), ("esrg_sym", esrg)):
            k = int(vals.sum())
            est[name] = {"estimate": k / len(vals), "se": proportion_se(k, len(vals)),
                         "ci": list(wald_interval(k, len(vals)))}
        directed_gap = abs(est["iag"]["estimate"] - est["asrg"]["estimate"])
        undirected_gap = abs(est["ieg_sym"]["estimate"] - est["esrg_sym"]["estimate"])
        allowance = float(allow_a.mean()) + float(allow_b.mean() if allow_b.size else 0.0)
        se = math.sqrt(sum(v["se"] ** 2 for v in est.values()))
        rows.append({
            "n": n,
            "probabilities": est,
            "directed_gap": directed_gap,
            "undirected_gap": undirected_gap,
            "coupling_allowance": allowance,
            "se": se,
            "within_allowance": bool(undirected_gap <= directed_gap + allowance + 3 * se),
            "degenerate": degenerate,
        })
    return {"event": q.name, "replicates": replicates, "seed": seed, "rows": rows,
            "passed": all(r["within_allowance"] for r in rows)}
