import math

import numpy as np
import pytest
from scipy import stats

from undirectify import (
    CciParameters,
    DegenerateRealizationError,
    Digraph,
    Graph,
    InfeasibleSpecError,
    ModelSpec,
    SpecError,
    realize,
)
from undirectify.graphs import enumerate_graphs
from undirectify.models import (
    TypedVertexVector,
    cci_kernel,
    cci_kernel_matrix,
    cci_mass,
    cci_mass_up_from_counts,
    exact_model_distribution,
    girg_probability,
    irg_probability,
    sample_asrg,
    sample_codes,
    sample_esrg,
    sample_iag,
    sample_ieg,
    sample_spec,
)
from undirectify.montecarlo import replicate_seeds

SINGLE = {"q": [1.0], "p": [[1.0]], "I": [[1]], "J": [[1]], "alpha": 1.0}


@pytest.mark.parametrize("seed", range(5))
def test_gilbert_extremes(seed):
    assert sample_ieg(ModelSpec("IEG", "gilbert", {"p": 0.0}, n=5), seed) == Graph.empty(5)
    assert sample_ieg(ModelSpec("IEG", "gilbert", {"p": 1.0}, n=5), seed) == Graph.complete(5)
    assert sample_iag(ModelSpec("IAG", "directed-gilbert", {"p": 0.0}, n=4), seed) == Digraph.empty(4)
    full = sample_iag(ModelSpec("IAG", "directed-gilbert", {"p": 1.0}, n=4), seed)
    assert len(full.arcs) == 12


@pytest.mark.parametrize("seed", range(5))
def test_selection_extremes(seed):
    assert sample_esrg(ModelSpec("ESRG", "classical-er", {"m": 0}, n=4), seed) == Graph.empty(4)
    assert sample_esrg(ModelSpec("ESRG", "classical-er", {"m": 3}, n=3), seed) == Graph.complete(3)
    assert sample_asrg(ModelSpec("ASRG", "directed-classical-er", {"m": 0}, n=3), seed) == Digraph.empty(3)
    assert sample_asrg(ModelSpec("ASRG", "directed-classical-er", {"m": 2}, n=2), seed).arcs == {(1, 2), (2, 1)}


def test_asymmetric_ieg_rejected():
    with pytest.raises(SpecError, match="symmetric"):
        realize(ModelSpec("IEG", "custom", {"pi": [[0, 0.2], [0.1, 0]]}, n=2))


def test_infeasible_selection():
    with pytest.raises(InfeasibleSpecError):
        realize(ModelSpec("ESRG", "classical-er", {"m": 4}, n=3))
    with pytest.raises(InfeasibleSpecError):
        realize(ModelSpec("ASRG", "custom", {"mu": [[0, 1, 0], [0, 0, 0], [0, 0, 0]], "m": 2}, n=3))


def test_spec_validation():
    with pytest.raises(SpecError):
        ModelSpec("IEG", "directed-gilbert", {"p": 0.5}, n=3)
    with pytest.raises(SpecError):
        ModelSpec("IEG", "gilbert", {"p": 1.5}, n=3)
    with pytest.raises(SpecError):
        ModelSpec("IEG", "gilbert", {}, n=3)
    spec = ModelSpec("IEG", "gilbert", {"c": 2.0}, n=5)
    assert realize(spec).pi_up == pytest.approx(0.5)
    assert ModelSpec.from_json(spec.to_json()) == spec


def test_er_alpha_sets_m():
    real = realize(ModelSpec("ESRG", "classical-er", {"alpha": 1.5}, n=4))
    assert real.m == 6


def test_classical_er_n4_m2_is_uniform():
    spec = ModelSpec("ESRG", "classical-er", {"m": 2}, n=4)
    real = realize(spec)
    codes = np.asarray(sample_codes(real, replicate_seeds(11, 30_000)))
    two = [g.code for g in enumerate_graphs(4) if len(g) == 2]
    assert len(two) == 15
    assert set(np.unique(codes)) <= set(two)
    observed = [int((codes == c).sum()) for c in two]
    assert stats.chisquare(observed).pvalue > 0.001


def test_iag_marginals_chi_square():
    pi = [[0, 0.2, 0.7], [0.5, 0, 0.1], [0.3, 0.9, 0]]
    real = realize(ModelSpec("IAG", "custom", {"pi": pi}, n=3))
    exact = exact_model_distribution(real)
    codes = np.asarray(sample_codes(real, replicate_seeds(5, 50_000)))
    observed = np.bincount(codes, minlength=64)
    keep = exact.pmf * len(codes) >= 5
    expected = exact.pmf[keep] * len(codes)
    obs = observed[keep]
    assert stats.chisquare(obs, expected * obs.sum() / expected.sum()).pvalue > 0.001


def test_exact_model_distribution_examples():
    d = exact_model_distribution(ModelSpec("IEG", "gilbert", {"p": 0.3}, n=2))
    assert d.pmf[1] == pytest.approx(0.3) and d.pmf[0] == pytest.approx(0.7)
    d = exact_model_distribution(ModelSpec("IAG", "directed-gilbert", {"p": 0.5}, n=2))
    assert np.allclose(d.pmf, 0.25)
    d = exact_model_distribution(ModelSpec("ESRG", "classical-er", {"m": 1}, n=3))
    assert np.allclose(d.pmf[[1, 2, 4]], 1 / 3)


def test_sampling_is_deterministic():
    spec = ModelSpec("ASRG", "directed-classical-er", {"m": 5}, n=6)
    assert sample_spec(spec, 99) == sample_spec(spec, 99)


def test_irg_probability_examples():
    v = TypedVertexVector(2, (1, 1))
    assert np.all(irg_probability(lambda t, s: 0.0, 8).matrix(v) == 0)
    assert irg_probability(lambda t, s: 8.0, 8).matrix(v)[0, 1] == 1.0
    assert irg_probability(lambda t, s: 2.0, 8).matrix(v)[0, 1] == 0.25


def test_girg_examples():
    fn = girg_probability({"alpha": 1.0, "lambda": 1.0}, 1)
    assert fn.evaluate(((0.0,), 1.0), ((0.5,), 1.0)) == 1.0
    assert fn.evaluate(((0.3,), 1.0), ((0.3,), 1.0)) == 1.0
    tiny = girg_probability({"alpha": 1.0, "lambda": 1.0}, 10)
    assert tiny.evaluate(((0.0,), 1e-6), ((0.5,), 1e-6)) < 1e-12


def test_cci_single_channel_kernel():
    params = CciParameters.from_dict(SINGLE)
    assert np.allclose(cci_kernel_matrix(params), 1.0)
    assert cci_kernel(params)(1, 1) == 1.0


def test_cci_two_type_kernel_by_hand():
    params = CciParameters.from_dict({"q": [0.5, 0.5], "p": [[0.6, 0.4]], "I": [[1], [0]],
                                      "J": [[1, 0], [0, 1]], "alpha": 2.0})
    assert params.lambdas[0] == 0.5
    kappa = cci_kernel(params)
    for t in (1, 2):
        for s in (1, 2):
            # scalar double sum, one term at a time
            total = 0.0
            for i in range(1):
                for j in range(2):
                    lam = sum(params.q[k] * params.I[k][i] for k in range(2))
                    rho = sum(params.q[k] * params.J[k][j] for k in range(2))
                    total += params.p[i][j] * params.I[t - 1][i] * params.J[s - 1][j] / (lam * rho)
            assert kappa(t, s) == pytest.approx(2.0 * total, rel=1e-14)
    assert kappa(1, 1) == pytest.approx(2.0 * 0.6 / (0.5 * 0.5))


def test_cci_uniform_mass():
    params = CciParameters.from_dict(SINGLE)
    v = TypedVertexVector(4, (1, 1, 1, 1))
    raw = cci_mass(params, v, renormalize=False)
    off = ~np.eye(4, dtype=bool)
    assert np.allclose(raw.matrix[off], 1 / 16)
    renorm = cci_mass(params, v)
    assert np.allclose(renorm.matrix[off], 1 / 12)
    real = realize(ModelSpec("ASRG", "cci", SINGLE, n=4))
    assert real.m == 4 and real.mu_up == pytest.approx(1 / 12)


def test_cci_uniform_arc_marginals():
    real = realize(ModelSpec("ASRG", "cci", SINGLE, n=4))
    codes = np.asarray(sample_codes(real, replicate_seeds(3, 20_000)))
    bits = (codes[:, None] >> np.arange(12)) & 1
    assert (bits.sum(axis=1) == 4).all()
    assert stats.chisquare(bits.sum(axis=0)).pvalue > 0.001


def test_cci_degenerate_realization():
    params = CciParameters.from_dict({"q": [0.5, 0.5], "p": [[1.0]], "I": [[1], [0]], "J": [[0], [1]], "alpha": 1.0})
    with pytest.raises(DegenerateRealizationError):
        cci_mass(params, TypedVertexVector(3, (1, 1, 1)))


def test_cci_assumption_rejected():
    with pytest.raises(SpecError, match="assumption"):
        CciParameters.from_dict({"q": [1.0, 0.0], "p": [[1.0]], "I": [[0], [1]], "J": [[1], [1]], "alpha": 1.0})


def test_cci_up_from_counts_matches_mass():
    params = CciParameters.from_dict({"q": [0.3, 0.7], "p": [[0.2, 0.8]], "I": [[1], [1]],
                                      "J": [[1, 0], [0, 1]], "alpha": 1.0})
    types = (1, 2, 2, 1, 2, 2, 2)
    counts = np.array([[2, 5]])
    raw = cci_mass(params, TypedVertexVector(7, types), renormalize=False)
    assert cci_mass_up_from_counts(params, counts)[0] == pytest.approx(raw.matrix.max(), rel=1e-14)
    renorm = cci_mass(params, TypedVertexVector(7, types))
    assert cci_mass_up_from_counts(params, counts, renormalize=True)[0] == pytest.approx(renorm.up, rel=1e-12)


def test_irg_from_cci_and_types():
    spec = ModelSpec("IAG", "ird", {"cci": SINGLE}, n=5)
    real = realize(spec)
    assert real.pi_up == pytest.approx(1 / 5)
    assert math.isclose(real.prob.sum(), 20 / 5)
