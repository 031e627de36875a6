import math
from itertools import permutations

import numpy as np
import pytest

from undirectify import GraphDistribution, ModelSpec, SpecError, get_event, lift_event
from undirectify.exact import (
    esrg_exact_distribution_oracle,
    event_probability,
    gilbert_distribution,
    phi_pushforward,
    tv_distance,
    witness_events,
)
from undirectify.graphs import enumerate_graphs, n_pairs
from undirectify.models import exact_model_distribution


def _gilbert_formula(n, p):
    # closed form pmf, written independently of the library
    k = n_pairs(n)
    return np.array([p ** bin(c).count("1") * (1 - p) ** (k - bin(c).count("1")) for c in range(1 << k)])


def test_point_mass_pushes_to_point_mass():
    d = GraphDistribution.point_mass(3, "digraph", 0)
    out = phi_pushforward(d)
    assert out.kind == "graph" and out.pmf[0] == 1.0


def test_directed_gilbert_n2():
    d = exact_model_distribution(ModelSpec("IAG", "directed-gilbert", {"p": 0.5}, n=2))
    assert np.allclose(d.pmf, 0.25)
    out = phi_pushforward(d)
    assert out.pmf[1] == pytest.approx(0.75, abs=1e-15)
    assert out.pmf[0] == pytest.approx(0.25, abs=1e-15)


def test_directed_gilbert_n3_matches_formula():
    d = exact_model_distribution(ModelSpec("IAG", "directed-gilbert", {"p": 0.2}, n=3))
    out = phi_pushforward(d)
    assert np.max(np.abs(out.pmf - _gilbert_formula(3, 1 - 0.8 ** 2))) <= 1e-12


@pytest.mark.parametrize("n", [2, 3, 4])
def test_gilbert_distribution_matches_formula(n):
    assert np.allclose(gilbert_distribution(n, 0.3).pmf, _gilbert_formula(n, 0.3), rtol=0, atol=1e-15)


def test_tv_examples():
    a = gilbert_distribution(2, 0.75)
    assert tv_distance(a, a) == 0.0
    assert tv_distance(gilbert_distribution(2, 0.0), gilbert_distribution(2, 1.0)) == 1.0
    assert tv_distance(a, gilbert_distribution(2, 0.5)) == pytest.approx(0.25, abs=1e-15)


def test_tv_rejects_mismatched_spaces():
    with pytest.raises(SpecError):
        tv_distance(gilbert_distribution(2, 0.5), gilbert_distribution(3, 0.5))
    with pytest.raises(SpecError):
        tv_distance(gilbert_distribution(2, 0.5), GraphDistribution.point_mass(2, "digraph", 0))


def test_witness_examples():
    a = gilbert_distribution(2, 0.75)
    assert witness_events(a, a) == (frozenset(), frozenset(), 0.0)
    plus, minus, gap = witness_events(a, gilbert_distribution(2, 0.5))
    assert plus == {1} and minus == {0}
    assert gap == pytest.approx(0.25, abs=1e-15)


def test_witness_gap_equals_tv_on_random_pairs():
    g = np.random.default_rng(7)
    for _ in range(100):
        a = GraphDistribution(3, "graph", g.dirichlet(np.ones(8)))
        b = GraphDistribution(3, "graph", g.dirichlet(np.ones(8)))
        plus, _, gap = witness_events(a, b)
        direct = math.fsum(a.pmf[list(plus)]) - math.fsum(b.pmf[list(plus)])
        assert abs(gap - tv_distance(a, b)) <= 1e-12
        assert abs(direct - gap) <= 1e-12


def test_event_probability_examples():
    d = gilbert_distribution(3, 0.5)
    assert event_probability(d, get_event("always-true")) == 1.0
    assert event_probability(d, get_event("has-edge")) == pytest.approx(0.875, abs=1e-15)
    with pytest.raises(SpecError):
        event_probability(d, lift_event(get_event("has-edge")))


def test_event_transfer_on_random_digraph_pmf():
    g = np.random.default_rng(3)
    d = GraphDistribution(3, "digraph", g.dirichlet(np.ones(64)))
    pushed = phi_pushforward(d)
    for name in ("has-edge", "triangle", "connected", "even-edge-count"):
        ev = get_event(name)
        assert abs(event_probability(d, lift_event(ev)) - event_probability(pushed, ev)) <= 1e-12


def _order_sum(weights, n, m):
    # sum over ordered draw sequences without replacement, written out directly
    weights = np.asarray(weights, float)
    total = weights.sum()
    pmf = {}
    for seq in permutations(range(len(weights)), m):
        prob, left = 1.0, total
        for i in seq:
            prob *= weights[i] / left
            left -= weights[i]
        code = sum(1 << i for i in seq)
        pmf[code] = pmf.get(code, 0.0) + prob
    return pmf


def test_selection_oracle_m1_is_proportional():
    w = [2.0, 1.0, 1.0]
    d = esrg_exact_distribution_oracle(w, 3, 1)
    assert np.allclose(d.pmf[[1, 2, 4]], [0.5, 0.25, 0.25], rtol=0, atol=1e-15)


def test_selection_oracle_classical_er():
    d = esrg_exact_distribution_oracle([1, 1, 1], 3, 2)
    two_edge = [c for c in range(8) if bin(c).count("1") == 2]
    assert np.allclose(d.pmf[two_edge], 1 / 3, rtol=0, atol=1e-15)
    assert d.pmf.sum() == pytest.approx(1.0, abs=1e-15)


def test_selection_oracle_matches_order_sum():
    w = [0.35, 0.05, 0.2, 0.1, 0.25, 0.05]
    d = esrg_exact_distribution_oracle(w, 4, 3)
    for code, p in _order_sum(w, 4, 3).items():
        assert abs(d.pmf[code] - p) <= 1e-12


def test_selection_oracle_agrees_with_subset_dp():
    spec = ModelSpec("ESRG", "custom", {"mu": [[0, 3, 1, 2], [3, 0, 1, 1], [1, 1, 0, 4], [2, 1, 4, 0]], "m": 3}, n=4)
    from undirectify.models import realize

    real = realize(spec)
    dp = exact_model_distribution(real)
    oracle = esrg_exact_distribution_oracle(real.mass.pair_masses(), 4, 3)
    assert tv_distance(dp, oracle) <= 1e-12


def test_selection_oracle_size_cap():
    with pytest.raises(SpecError):
        esrg_exact_distribution_oracle(np.ones(10), 5, 2)


def test_distribution_json_round_trip():
    d = gilbert_distribution(3, 0.3)
    back = GraphDistribution.from_json(d.to_json())
    assert np.array_equal(back.pmf, d.pmf)


def test_gilbert_graph_masses_by_structure():
    d = gilbert_distribution(3, 0.4)
    for g in enumerate_graphs(3):
        assert d.pmf[g.code] == pytest.approx(0.4 ** len(g) * 0.6 ** (3 - len(g)), abs=1e-15)
