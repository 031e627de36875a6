"""Named verification suites behind ``undirectify verify``.

Each suite takes a config dict (defaults below) and returns a
:class:`SuiteReport` whose hard checks decide the exit code.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import rng
from .coupling import (
    couple_iag_ieg_exact_batch,
    growth_bound,
    martingale_transform,
    supermartingale_drift_check,
)
from .distribution import GraphDistribution
from .errors import SpecError
from .events import BUILTIN_EVENTS, IS_EMPTY, lift_event
from .exact import (
    esrg_exact_distribution_oracle,
    event_probability,
    gilbert_distribution,
    phi_pushforward,
    tv_distance,
)
from .graphs import Digraph, n_pairs, pair_index
from .models import (
    CciParameters,
    ModelSpec,
    cci_kernel_matrix,
    cci_mass_up_from_counts,
    exact_counterpart,
    exact_model_distribution,
    independent_realization,
    realize,
    selection_realization,
    EdgeMassFn,
)
from .montecarlo import (
    approx_error_law_check,
    chernoff_xi_check,
    equivalence_pipeline,
    proportion_se,
    psi_increment_check,
    psi_tail_check,
    replicate_seeds,
    selection_batch,
)
from .report import VerdictReport, verdict

EXACT_TOL = 1e-12


@dataclass
class SuiteReport:
    suite: str
    config: dict
    checks: list = field(default_factory=list)
    info: dict = field(default_factory=dict)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.hard)

    def failures(self) -> list[VerdictReport]:
        return [c for c in self.checks if c.hard and not c.passed]

    def to_json(self, timing: bool = True) -> dict:
        out = {
            "suite": self.suite,
            "passed": self.passed,
            "config": self.config,
            "checks": [c.to_json() for c in self.checks],
            "info": self.info,
        }
        if timing:
            out["elapsed_s"] = self.elapsed
        return out

    def summary(self) -> str:
        hard = [c for c in self.checks if c.hard]
        lines = [f"suite {self.suite}: {'PASS' if self.passed else 'FAIL'} "
                 f"({sum(c.passed for c in hard)}/{len(hard)} hard checks, {self.elapsed:.1f}s)"]
        for c in self.failures()[:20]:
            lines.append(f"  FAIL {c.statistic}: estimate={c.estimate!r} bound={c.bound!r} ({c.bound_formula}) {c.details}")
        return "\n".join(lines)


def _exact_check(name: str, value: float, *, seed: int, tol: float = EXACT_TOL, **details) -> VerdictReport:
    return VerdictReport(name, float(value), tol, bool(value <= tol), 1, seed, bound_formula=f"<= {tol}",
                         details=details)


def _flag(name: str, ok: bool, *, seed: int, replicates: int = 1, **details) -> VerdictReport:
    return VerdictReport(name, float(ok), None, bool(ok), replicates, seed, details=details)


def _event_transfer_checks(dist: GraphDistribution, seed: int, **details) -> list[VerdictReport]:
    pushed = phi_pushforward(dist)
    out = []
    for ev in BUILTIN_EVENTS.values():
        diff = abs(event_probability(dist, lift_event(ev)) - event_probability(pushed, ev))
        out.append(_exact_check("event-transfer", diff, seed=seed, event=ev.name, **details))
    return out


# --- suites -----------------------------------------------------------------------


def suite_gilbert_phi(cfg: dict) -> SuiteReport:
    rep = SuiteReport("gilbert-phi", cfg)
    for n in cfg["n_values"]:
        for p in cfg["p_values"]:
            directed = exact_model_distribution(ModelSpec("IAG", "directed-gilbert", {"p": p}, n=n))
            pushed = phi_pushforward(directed)
            target = gilbert_distribution(n, 1.0 - (1.0 - p) ** 2)
            rep.checks.append(_exact_check("gilbert-identity-tv", tv_distance(pushed, target), seed=cfg["seed"],
                                           n=n, p=p))
            rep.checks.append(_exact_check("pushforward-mass", abs(pushed.total() - 1.0), seed=cfg["seed"], n=n, p=p))
            if cfg["event_transfer"]:
                rep.checks.extend(_event_transfer_checks(directed, cfg["seed"], n=n, p=p))
    return rep


def random_pi(n: int, seed: int, kind: str) -> ModelSpec:
    """A random conditioned IAG instance: free ``pi`` matrix or IRD with fixed types."""
    g = rng.generator(seed)
    if kind == "custom":
        pi = g.random((n, n))
        np.fill_diagonal(pi, 0.0)
        return ModelSpec("IAG", "custom", {"pi": pi.tolist()}, n=n)
    tau = int(g.integers(1, 4))
    kernel = (g.random((tau, tau)) * 2 * n).tolist()
    q = g.dirichlet(np.ones(tau)).tolist()
    return ModelSpec("IAG", "ird", {"kernel": kernel, "type_pmf": q}, n=n, seed=int(g.integers(0, 2**63)))


def suite_iag_ieg_exact(cfg: dict) -> SuiteReport:
    rep = SuiteReport("iag-ieg-exact", cfg)
    seed = cfg["seed"]
    k = 0
    for n in cfg["n_values"]:
        for i in range(cfg["instances"]):
            spec = random_pi(n, rng.split(seed, k), "custom" if i % 2 == 0 else "ird")
            k += 1
            real = realize(spec)
            directed = exact_model_distribution(real)
            undirected = exact_model_distribution(exact_counterpart(real))
            rep.checks.append(_exact_check("exact-iag-ieg-tv", tv_distance(phi_pushforward(directed), undirected),
                                           seed=seed, n=n, instance=i, model=spec.instance))
            rep.checks.extend(_event_transfer_checks(directed, seed, n=n, instance=i))
            batch = couple_iag_ieg_exact_batch(real, replicate_seeds(rng.split(seed, 10_000 + k), cfg["replicates"]))
            xi = batch.xi1 + batch.xi2
            rep.checks.append(VerdictReport("exact-coupling-xi-zero", float(xi.max()), 0.0, bool(xi.max() == 0),
                                            cfg["replicates"], seed, bound_formula="max xi = 0",
                                            details={"n": n, "instance": i}))
            if i == 0:
                rep.checks.append(_chi_square_check("exact-coupling-graph-marginal", batch.graph_codes(), undirected,
                                                    seed, n=n))
    return rep


def _chi_square_check(name: str, codes, dist: GraphDistribution, seed: int, alpha: float = 0.001,
                      **details) -> VerdictReport:
    """Goodness of fit of sampled codes to an exact pmf; sparse cells pooled."""
    codes = np.asarray(codes, dtype=np.int64)
    total = len(codes)
    observed = np.bincount(codes, minlength=len(dist.pmf)).astype(float)
    expected = dist.pmf * total
    outside = observed[dist.pmf == 0].sum()
    keep = expected >= 5
    obs = list(observed[keep])
    exp = list(expected[keep])
    rest_e = expected[~keep & (dist.pmf > 0)].sum()
    if rest_e > 0:
        obs.append(observed[~keep & (dist.pmf > 0)].sum())
        exp.append(rest_e)
    if len(obs) < 2:
        pvalue = 1.0
    else:
        exp = np.array(exp) * (sum(obs) / sum(exp))
        pvalue = float(stats.chisquare(obs, exp).pvalue)
    ok = pvalue > alpha and outside == 0
    return VerdictReport(name, pvalue, alpha, bool(ok), total, seed, bound_formula=f"chi-square p > {alpha}",
                         details={"cells": len(obs), "outside_support": int(outside), **details})


def suite_iag_ieg_approx(cfg: dict) -> SuiteReport:
    rep = SuiteReport("iag-ieg-approx", cfg)
    n, p = cfg["n"], cfg["p"]
    real = independent_realization("IAG", _constant_matrix(n, p))
    seed = cfg["seed"]
    rep.checks.extend(approx_error_law_check(real, cfg["replicates"], rng.split(seed, 0)))
    rep.checks.extend(chernoff_xi_check(real, cfg["omegas"], cfg["chernoff_replicates"], rng.split(seed, 1)))
    return rep


def _constant_matrix(n: int, value: float) -> np.ndarray:
    mat = np.full((n, n), float(value))
    np.fill_diagonal(mat, 0.0)
    return mat


def marginal_instance(n: int = 3) -> EdgeMassFn:
    """Ordered mass on ``n = 3`` with ``mu°`` proportional to (2, 1, 1)."""
    mu = np.zeros((3, 3))
    mu[0, 1], mu[1, 0] = 0.35, 0.15
    mu[0, 2], mu[2, 0] = 0.05, 0.20
    mu[1, 2], mu[2, 1] = 0.125, 0.125
    return EdgeMassFn(mu, ordered=True)


def suite_asrg_esrg(cfg: dict) -> SuiteReport:
    rep = SuiteReport("asrg-esrg", cfg)
    seed = cfg["seed"]
    mass = marginal_instance()
    real = selection_realization("ASRG", mass, cfg["marginal_m"])
    batch = selection_batch(real, cfg["marginal_replicates"], rng.split(seed, 0))
    ok = batch.ok
    graph_oracle = esrg_exact_distribution_oracle(mass.pair_masses(), 3, real.m, "graph")
    arc_oracle = esrg_exact_distribution_oracle(mass.ordered_masses(), 3, real.m, "digraph")
    rep.checks.append(_chi_square_check("coupled-graph-marginal", batch.graph_codes[ok], graph_oracle, seed))
    rep.checks.append(_chi_square_check("coupled-digraph-marginal", batch.digraph_codes[ok], arc_oracle, seed))
    rep.info["marginal_degenerate"] = int(batch.degenerate.sum())

    uni = realize(ModelSpec("ASRG", "directed-classical-er", {"m": cfg["m"]}, n=cfg["n"]))
    big = selection_batch(uni, cfg["replicates"], rng.split(seed, 1))
    rep.checks.extend(psi_increment_check(uni, cfg["replicates"], rng.split(seed, 1), batch=big,
                                          min_cell=cfg["min_cell"]))
    for r in cfg["r_values"]:
        rep.checks.append(psi_tail_check(uni, r, cfg["replicates"], rng.split(seed, 1), batch=big))
    return rep


def suite_martingale(cfg: dict) -> SuiteReport:
    rep = SuiteReport("martingale", cfg)
    seed = cfg["seed"]
    uni = realize(ModelSpec("ASRG", "directed-classical-er", {"m": cfg["m"]}, n=cfg["n"]))
    rep.checks.append(supermartingale_drift_check(uni, cfg["replicates"], rng.split(seed, 1)))
    example = martingale_transform([0, 0], 0.01).m_values[1]
    rep.checks.append(_exact_check("m1-example", abs(example + 1 / 97), seed=seed, m1=example))
    # recursive and closed forms on arbitrary paths
    g = rng.generator(rng.split(seed, 2))
    worst = 0.0
    for _ in range(cfg["paths"]):
        m = int(g.integers(1, 30))
        mu_up = 1.0 / float(g.uniform(m + 3, 20 * m + 3))
        psi = np.concatenate([[0], np.cumsum(g.random(m) < 0.3)])
        trace = martingale_transform(psi, mu_up)
        worst = max(worst, float(np.max(np.abs(trace.recompute() - np.array(trace.m_values)))))
    rep.checks.append(_exact_check("recompute-consistency", worst, seed=seed, tol=1e-9, paths=cfg["paths"]))
    return rep


def suite_growth_bound(cfg: dict) -> SuiteReport:
    """Two families of checks on the growth sum.

    ``headline-*``: the bound chain as stated (sum <= m^2/(2(f-m)), and
    <= m^2/f when f - m >= f/2).  ``corrected-*``: the chain that the
    Bernoulli step actually yields (sum <= m^2/(f-m) <= 2 m^2/f for f >= 2m).
    """
    rep = SuiteReport("growth-bound", cfg)
    seed = cfg["seed"]
    for m in range(1, cfg["m_max"] + 1):
        for f in (2 * m + 1, 10 * m, 100 * m):
            s = growth_bound(m, f)
            rep.checks.append(verdict("headline-half-chain", s, m * m / (2 * (f - m)), 0.0, replicates=1, seed=seed,
                                      bound_formula="sum <= m^2/(2(f-m))", m=m, f=f))
            if f - m >= f / 2:
                rep.checks.append(verdict("headline-m2-over-f", s, m * m / f, 0.0, replicates=1, seed=seed,
                                          bound_formula="sum <= m^2/f", m=m, f=f))
            if cfg["corrected"] and f >= 2 * m:
                rep.checks.append(verdict("corrected-chain", s, m * m / (f - m), 0.0, replicates=1, seed=seed,
                                          bound_formula="sum <= m^2/(f-m)", m=m, f=f))
                rep.checks.append(verdict("corrected-2m2-over-f", s, 2 * m * m / f, 0.0, replicates=1, seed=seed,
                                          bound_formula="sum <= 2 m^2/f", m=m, f=f))
    return rep


def random_cci_params(g: np.random.Generator, max_dim: int = 4) -> CciParameters:
    """Valid random CCI parameters: every channel is reachable from some type."""
    tau, l, r = (int(x) for x in g.integers(1, max_dim + 1, size=3))
    q = g.dirichlet(np.ones(tau))
    p = g.dirichlet(np.ones(l * r)).reshape(l, r)

    def indicators(width: int) -> np.ndarray:
        ind = (g.random((tau, width)) < 0.5).astype(int)
        for c in range(width):
            if not ind[:, c].any():
                ind[g.integers(tau), c] = 1
        return ind

    return CciParameters(tuple(q), tuple(map(tuple, p)), tuple(map(tuple, indicators(l))),
                         tuple(map(tuple, indicators(r))), float(g.uniform(0.5, 2.0)))


def cci_type_counts(params: CciParameters, n: int, type_seeds: np.ndarray) -> np.ndarray:
    """Type counts ``(R, tau)`` of ``V_n`` realizations, via the model's own type sampler."""
    cdf = np.cumsum(np.asarray(params.q, float))
    u = rng.uniforms(type_seeds, n)
    types = np.minimum(np.searchsorted(cdf, u * cdf[-1], side="right"), params.tau - 1)
    counts = np.zeros((len(type_seeds), params.tau), dtype=np.int64)
    for t in range(params.tau):
        counts[:, t] = (types == t).sum(axis=1)
    return counts


def suite_cci_bounds(cfg: dict) -> SuiteReport:
    """Kernel bound exhaustively; mass bound and its Chebyshev event by sampling ``V_n``.

    The mass check uses the raw mass (self-pairs dropped, no renormalization),
    which is the quantity the bound is about.
    """
    rep = SuiteReport("cci-bounds", cfg)
    seed = cfg["seed"]
    n = cfg["n"]
    g = rng.generator(rng.split(seed, 0))
    inclusion_breaks = 0
    for k in range(cfg["instances"]):
        params = random_cci_params(g)
        kernel = cci_kernel_matrix(params)
        kbound = params.alpha / (params.lambdas.min() * params.rhos.min())
        top = float(kernel.max())
        rep.checks.append(VerdictReport("kernel-bound", top, kbound, bool(top <= kbound * (1 + 1e-12)), 1, seed,
                                        bound_formula="max kappa <= alpha/(lambda_min rho_min)",
                                        details={"instance": k, "tau": params.tau}))
        counts = cci_type_counts(params, n, replicate_seeds(rng.split(seed, 1 + k), cfg["realizations"]))
        q_min = min(params.q)
        ind_i = np.asarray(params.I)
        ind_j = np.asarray(params.J)
        L, R = counts @ ind_i, counts @ ind_j
        event_a = (L >= q_min * n / 2).all(axis=1) & (R >= q_min * n / 2).all(axis=1)
        mu_up = cci_mass_up_from_counts(params, counts, renormalize=False)
        # relative slack only absorbs rounding at equality (tau = 1 gives mu_up = 1/n^2 exactly)
        over = mu_up > (1.0 + 1e-12) / (n * n * q_min * q_min)
        reps = cfg["realizations"]
        f_over, f_not_a = float(over.mean()), float((~event_a).mean())
        inclusion_breaks += int((over & event_a).sum())
        rep.checks.append(VerdictReport(
            "mass-bound-frequency", f_over, f_not_a, bool(f_over <= f_not_a), reps, seed,
            bound_formula="freq{mu_up > 1/(n^2 q_min^2)} <= freq{not A}",
            details={"instance": k, "over_and_a": int((over & event_a).sum())}, n=n))
        l, r = ind_i.shape[1], ind_j.shape[1]
        cheb = l * r * 4 * (1 - q_min) / (n * q_min)
        rep.checks.append(verdict("chebyshev-not-a", f_not_a, cheb, proportion_se(int((~event_a).sum()), reps),
                                  replicates=reps, seed=seed, n=n, instance=k,
                                  bound_formula="freq{not A} <= l r 4(1-q_min)/(n q_min) + 3 SE"))
        four = 4.0 / (n * n * q_min * q_min)
        rep.checks.append(VerdictReport(
            "mass-bound-on-a-factor-4", float((mu_up[event_a] > four * (1 + 1e-12)).sum()), 0.0,
            bool(not (mu_up[event_a] > four * (1 + 1e-12)).any()), int(event_a.sum()), seed,
            bound_formula="on A: mu_up <= 4/(n^2 q_min^2)", details={"instance": k}, n=n))
    rep.info["realizations_in_a_above_headline_bound"] = inclusion_breaks
    return rep


MONOTONE_EVENTS = [e for e in BUILTIN_EVENTS.values() if e.monotonicity != "none"] + [IS_EMPTY]


def random_subset_pair(g: np.random.Generator, n: int) -> tuple[Digraph, Digraph]:
    k = 2 * n_pairs(n)
    big = g.random(k) < g.random()
    small = big & (g.random(k) < g.random())
    idx = pair_index(n)
    to = lambda bits: Digraph.from_arcs(n, (idx.ordered_pair(j) for j in np.flatnonzero(bits)))  # noqa: E731
    return to(small), to(big)


def suite_monotonicity(cfg: dict) -> SuiteReport:
    rep = SuiteReport("monotonicity", cfg)
    seed = cfg["seed"]
    g = rng.generator(rng.split(seed, 0))
    for ev in MONOTONE_EVENTS:
        lifted = lift_event(ev)
        violations = 0
        for _ in range(cfg["pairs"]):
            n = int(g.integers(cfg["n_min"], cfg["n_max"] + 1))
            small, big = random_subset_pair(g, n)
            a, b = lifted(small), lifted(big)
            if ev.monotonicity == "increasing" and a and not b:
                violations += 1
            if ev.monotonicity == "decreasing" and b and not a:
                violations += 1
        rep.checks.append(VerdictReport("lifted-monotonicity", float(violations), 0.0, violations == 0,
                                        cfg["pairs"], seed, bound_formula="no direction violations",
                                        details={"event": lifted.name, "monotonicity": lifted.monotonicity}))
    return rep


def suite_pipeline(cfg: dict) -> SuiteReport:
    rep = SuiteReport("pipeline", cfg)
    seed = cfg["seed"]
    from .events import get_event

    q = get_event(cfg["event"])
    iag = ModelSpec("IAG", "directed-gilbert", {"c": cfg["c"]}, n=cfg["n_grid"][0])
    asrg = ModelSpec("ASRG", "directed-classical-er", {"alpha": cfg["c"]}, n=cfg["n_grid"][0])
    result = equivalence_pipeline(iag, asrg, q, cfg["n_grid"], cfg["replicates"], rng.split(seed, 0))
    rep.info["gilbert_vs_er"] = result
    _pipeline_checks(rep, result, seed)
    if cfg["cci_replicates"]:
        params = CciParameters.from_dict(cfg["cci"])
        ird = ModelSpec("IAG", "ird", {"cci": params.to_dict()}, n=cfg["cci_n"])
        cci = ModelSpec("ASRG", "cci", params.to_dict(), n=cfg["cci_n"])
        result = equivalence_pipeline(ird, cci, get_event(cfg["cci_event"]), [cfg["cci_n"]], cfg["cci_replicates"],
                                      rng.split(seed, 1))
        rep.info["cci_vs_ird"] = result
        _pipeline_checks(rep, result, seed)
    return rep


def _pipeline_checks(rep: SuiteReport, result: dict, seed: int) -> None:
    for row in result["rows"]:
        for name, est in row["probabilities"].items():
            rep.checks.append(VerdictReport(f"p-{name}", est["estimate"], None, None, result["replicates"], seed,
                                            se=est["se"], ci=tuple(est["ci"]), n=row["n"],
                                            details={"event": result["event"]}))
        rep.checks.append(verdict("undirected-gap", row["undirected_gap"], row["directed_gap"] + row["coupling_allowance"],
                                  row["se"], replicates=result["replicates"], seed=seed, n=row["n"],
                                  bound_formula="undirected gap <= directed gap + E[xi1] + E[Psi_m] bound + 3 SE",
                                  event=result["event"]))


DEFAULT_CCI = {
    "q": [0.5, 0.5],
    "p": [[0.6, 0.4]],
    "I": [[1], [1]],
    "J": [[1, 0], [0, 1]],
    "alpha": 1.0,
}

SUITES = {
    "gilbert-phi": (suite_gilbert_phi, {"n_values": [2, 3, 4], "p_values": [0.0, 0.1, 0.3, 0.5, 0.9, 1.0],
                                        "event_transfer": True}),
    "iag-ieg-exact": (suite_iag_ieg_exact, {"n_values": [3, 4], "instances": 20, "replicates": 100_000}),
    "iag-ieg-approx": (suite_iag_ieg_approx, {"n": 10, "p": 0.05, "replicates": 100_000, "omegas": [1.0, 5.0],
                                              "chernoff_replicates": 1_000_000}),
    "asrg-esrg": (suite_asrg_esrg, {"marginal_m": 2, "marginal_replicates": 200_000, "n": 10, "m": 5,
                                    "replicates": 100_000, "r_values": [1.0, 2.0], "min_cell": 500}),
    "martingale": (suite_martingale, {"n": 10, "m": 5, "replicates": 100_000, "paths": 200}),
    "growth-bound": (suite_growth_bound, {"m_max": 20, "corrected": True}),
    "cci-bounds": (suite_cci_bounds, {"instances": 100, "n": 100, "realizations": 10_000}),
    "monotonicity": (suite_monotonicity, {"pairs": 10_000, "n_min": 2, "n_max": 6}),
    "pipeline": (suite_pipeline, {"event": "triangle", "c": 1.0, "n_grid": [6, 8, 10, 12], "replicates": 10_000,
                                  "cci": DEFAULT_CCI, "cci_n": 30, "cci_event": "max-degree-ge-3",
                                  "cci_replicates": 2_000}),
}

# keys that scale run time, for quick reruns
REPLICATE_KEYS = ("replicates", "chernoff_replicates", "marginal_replicates", "realizations", "pairs",
                  "cci_replicates", "paths")


def suite_config(name: str, overrides: dict | None = None, seed: int = rng.DEFAULT_SEED) -> dict:
    if name not in SUITES:
        raise SpecError(f"unknown suite {name!r}; expected one of {', '.join(SUITES)}")
    cfg = dict(SUITES[name][1])
    cfg["seed"] = seed
    for key, value in (overrides or {}).items():
        if key not in cfg:
            raise SpecError(f"suite {name!r} has no config key {key!r}; known keys: {', '.join(sorted(cfg))}")
        cfg[key] = value
    return cfg


def run_suite(name: str, overrides: dict | None = None, seed: int = rng.DEFAULT_SEED) -> SuiteReport:
    cfg = suite_config(name, overrides, seed)
    start = time.perf_counter()
    rep = SUITES[name][0](cfg)
    rep.elapsed = time.perf_counter() - start
    return rep


def scaled_overrides(name: str, factor: float) -> dict:
    """Replicate counts scaled down by ``factor`` (at least 1), for quick reruns."""
    cfg = SUITES[name][1]
    return {k: max(1, int(cfg[k] * factor)) for k in REPLICATE_KEYS if k in cfg and cfg[k]}
