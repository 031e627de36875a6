import math
import warnings

import numpy as np
import pytest

from undirectify import ModelSpec, SpecError, get_event, realize
from undirectify.exact import gilbert_distribution
from undirectify.models import independent_realization
from undirectify.montecarlo import (
    ExperimentConfig,
    Rate,
    approx_error_law_check,
    chernoff_xi_check,
    empirical_tv,
    equivalence_pipeline,
    exact_insensitivity,
    insensitivity_probe,
    proportion_se,
    psi_increment_check,
    psi_tail_check,
    replicate_seeds,
    wald_interval,
)


def _const(n, p):
    m = np.full((n, n), p)
    np.fill_diagonal(m, 0.0)
    return independent_realization("IAG", m)


def test_rates():
    assert Rate("log", 2.0)(math.e) == pytest.approx(2.0)
    assert Rate("pow", 1.0, 0.5)(16) == 4.0
    assert Rate.parse(3).describe() == "3.0"
    with pytest.raises(SpecError):
        Rate("log")(1)
    with pytest.raises(SpecError):
        Rate("cubic")


def test_experiment_config_round_trip():
    cfg = ExperimentConfig.from_json({"specs": [{"class": "IEG", "instance": "gilbert", "params": {"p": 0.1}, "n": 4}],
                                      "replicates": 10, "n_grid": [4, 8], "rate": {"name": "sqrt", "c": 2}})
    assert cfg.specs[0].n == 4 and cfg.rate(4) == 4.0
    with pytest.raises(SpecError):
        ExperimentConfig([], 0)


def test_replicate_seeds_are_prefix_stable():
    assert np.array_equal(replicate_seeds(7, 100)[:10], replicate_seeds(7, 10))
    assert np.array_equal(replicate_seeds(7, 100)[50:], replicate_seeds(7, 50, start=50))


def test_interval_helpers():
    lo, hi = wald_interval(0, 100)
    assert lo == 0.0 and 0 < hi < 0.05
    assert proportion_se(50, 100) == pytest.approx(0.05)


def test_empirical_tv_disjoint_supports():
    a = ModelSpec("IEG", "gilbert", {"p": 0.0}, n=2)
    b = ModelSpec("IEG", "gilbert", {"p": 1.0}, n=2)
    est = empirical_tv(a, b, 1000, seed=1)
    assert est.estimate == 1.0


def test_empirical_tv_same_spec_shrinks():
    spec = ModelSpec("IEG", "gilbert", {"p": 0.5}, n=3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ests = [empirical_tv(spec, spec, r, seed=3) for r in (1000, 10_000, 100_000)]
    assert ests[-1].estimate < 0.02
    for small, big in zip(ests, ests[1:]):
        assert big.estimate <= small.ci[1]


def test_empirical_tv_through_forgetful_map():
    directed = ModelSpec("IAG", "directed-gilbert", {"p": 0.5}, n=2)
    target = ModelSpec("IEG", "gilbert", {"p": 0.75}, n=2)
    est = empirical_tv(directed, target, 20_000, seed=4)
    assert est.ci[0] <= 0.02 and est.estimate < 0.02


def test_empirical_tv_warns_on_sparse_support():
    spec = ModelSpec("IEG", "gilbert", {"p": 0.5}, n=5)
    with pytest.warns(UserWarning, match="biased"):
        empirical_tv(spec, spec, 1000, seed=1)


def test_error_law_on_empty_pi():
    reps = approx_error_law_check(_const(5, 0.0), 1000, 1)
    assert all(r.passed for r in reps)
    assert chernoff_xi_check(_const(5, 0.0), 5.0, 1000, 1).estimate == 0.0


def test_error_law_small_instance():
    reps = approx_error_law_check(_const(10, 0.05), 20_000, 2)
    assert [r.statistic for r in reps] == ["xi-mean-vs-exact", "xi-mean-vs-bound", "xi2-zero"]
    assert reps[0].details["exact"] == pytest.approx(45 * 0.0025)
    assert all(r.passed for r in reps)


def test_chernoff_gilbert_style():
    real = _const(20, 1 / 20)
    rep = chernoff_xi_check(real, 5.0, 100_000, 3)
    assert rep.bound == pytest.approx(math.exp(-7.5))
    assert rep.passed
    one = chernoff_xi_check(_const(10, 0.05), [1.0], 100_000, 3)[0]
    assert one.bound == pytest.approx(0.2231, abs=1e-4)
    assert one.estimate < one.bound


def test_psi_tail_examples():
    m1 = realize(ModelSpec("ASRG", "directed-classical-er", {"m": 1}, n=6))
    assert psi_tail_check(m1, 1.0, 500, 1).estimate == 0.0
    uni = realize(ModelSpec("ASRG", "directed-classical-er", {"m": 5}, n=10))
    rep = psi_tail_check(uni, 1.0, 20_000, 5)
    assert rep.bound == pytest.approx(25 / 90)
    assert rep.passed


def test_psi_increment_checks_pass():
    uni = realize(ModelSpec("ASRG", "directed-classical-er", {"m": 5}, n=10))
    reps = psi_increment_check(uni, 20_000, 6, min_cell=500)
    assert all(r.passed for r in reps)
    assert any(r.statistic == "psi-increment-cell" for r in reps)


def test_exact_insensitivity_examples():
    d = gilbert_distribution(3, 0.5)
    assert exact_insensitivity(d, get_event("always-true"), 1)["max"] == 0.0
    assert exact_insensitivity(d, get_event("has-edge"), 1)["max"] == pytest.approx(0.125, abs=1e-15)
    # parity flips under one added edge except from the complete graph
    assert exact_insensitivity(d, get_event("even-edge-count"), 1)["max"] == pytest.approx(0.5, abs=1e-15)


def test_insensitivity_probe_is_informational():
    spec = ModelSpec("IEG", "gilbert", {"p": 0.5}, n=3)
    rep = insensitivity_probe(spec, get_event("has-edge"), 1, 20_000, seed=1)
    assert rep.passed is None and not rep.hard
    assert rep.details["strategies"]["exhaustive-true"]["delta"] == pytest.approx(0.125, abs=0.01)


def test_pipeline_always_true():
    iag = ModelSpec("IAG", "directed-gilbert", {"c": 1.0}, n=4)
    asrg = ModelSpec("ASRG", "directed-classical-er", {"alpha": 1.0}, n=4)
    out = equivalence_pipeline(iag, asrg, get_event("always-true"), [4, 5], 500, seed=2)
    assert out["passed"] and len(out["rows"]) == 2
    for row in out["rows"]:
        assert all(v["estimate"] == 1.0 for v in row["probabilities"].values())
        assert row["directed_gap"] == row["undirected_gap"] == 0.0
