import math

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

from domain.errors import DimensionTooLarge, NotPSD
from gaussian import (
    MarkovChainRecursion,
    MvnProblem,
    bvn_cdf,
    mvn_cdf,
    std_normal_cdf,
    std_normal_ppf,
    tvn_cdf,
)
from gaussian.mvn import legendre_rule, smallest_eigenvalue
from tests.strategies import correlation_matrices, orthant_limits


def brownian_corr(times):
    t = np.asarray(times, dtype=float)
    return np.sqrt(np.minimum.outer(t, t) / np.maximum.outer(t, t))


def test_univariate_reference_values():
    assert std_normal_cdf(0.0) == 0.5
    assert std_normal_cdf(1.959963984540054) == pytest.approx(0.975, abs=1e-12)
    assert std_normal_ppf(0.95) == pytest.approx(1.6448536269514722, abs=1e-12)


@given(st.floats(min_value=-3.0, max_value=3.0), st.floats(min_value=-3.0, max_value=3.0))
def test_bivariate_independent_is_product(a, b):
    assert bvn_cdf(a, b, 0.0) == pytest.approx(std_normal_cdf(a) * std_normal_cdf(b), abs=1e-14)


@given(st.floats(min_value=-0.999, max_value=0.999))
def test_bivariate_orthant_closed_form(rho):
    assert bvn_cdf(0.0, 0.0, rho) == pytest.approx(0.25 + math.asin(rho) / (2 * math.pi), abs=1e-14)


def test_bivariate_degenerate_correlations():
    a, b = 0.3, -0.4
    assert bvn_cdf(a, b, 1.0) == pytest.approx(std_normal_cdf(min(a, b)), abs=1e-14)
    assert bvn_cdf(a, b, -1.0) == pytest.approx(max(0.0, std_normal_cdf(a) + std_normal_cdf(b) - 1.0), abs=1e-14)
    assert bvn_cdf(math.inf, b, 0.7) == pytest.approx(std_normal_cdf(b))


def test_bivariate_rejects_invalid_correlation():
    with pytest.raises(ValueError):
        bvn_cdf(0.0, 0.0, 1.5)


def test_trivariate_orthant_closed_form():
    corr = np.array([[1.0, 0.3, -0.2], [0.3, 1.0, 0.5], [-0.2, 0.5, 1.0]])
    expected = 0.125 + (math.asin(0.3) + math.asin(-0.2) + math.asin(0.5)) / (4 * math.pi)
    value, error, _ = tvn_cdf([0.0, 0.0, 0.0], corr)
    assert value == pytest.approx(expected, abs=1e-10)
    assert error < 1e-9


def test_mvn_one_dimension_is_phi():
    estimate = mvn_cdf(MvnProblem([0.7], [[1.0]]))
    assert estimate.value == pytest.approx(std_normal_cdf(0.7), abs=1e-15)


def test_infinite_limits_marginalize():
    corr = brownian_corr([0.1, 0.2, 0.3, 0.4])
    full = mvn_cdf(MvnProblem([0.2, math.inf, -0.1, math.inf], corr))
    reduced = mvn_cdf(MvnProblem([0.2, -0.1], corr[np.ix_([0, 2], [0, 2])]))
    assert full.value == pytest.approx(reduced.value, abs=1e-14)
    assert mvn_cdf(MvnProblem([math.inf] * 4, corr)).value == 1.0
    assert mvn_cdf(MvnProblem([0.2, -math.inf, 0.0, 0.0], corr)).value == 0.0


def test_dimension_limit():
    with pytest.raises(DimensionTooLarge):
        mvn_cdf(MvnProblem(np.zeros(17), np.eye(17)))


def test_not_psd_is_rejected():
    corr = np.full((3, 3), -0.9)
    np.fill_diagonal(corr, 1.0)
    with pytest.raises(NotPSD):
        MvnProblem(np.zeros(3), corr)


def test_equicorrelated_orthant_uses_lattice():
    # P(all <= 0) = 1/(n+1) for correlation 1/2
    n = 5
    corr = np.full((n, n), 0.5)
    np.fill_diagonal(corr, 1.0)
    assert MarkovChainRecursion.detect(corr) is None
    estimate = mvn_cdf(MvnProblem(np.zeros(n), corr), target_abs_error=1e-6)
    assert estimate.method == "qmc"
    assert estimate.value == pytest.approx(1 / (n + 1), abs=max(3 * estimate.error_bound, 2e-6))


def test_markov_chain_recursion_matches_lattice():
    times = [0.1, 0.25, 0.3, 0.45, 0.5, 0.7]
    signs = np.array([1, -1, -1, 1, 1, 1], dtype=float)
    corr = np.outer(signs, signs) * brownian_corr(times)
    limits = [0.4, -0.2, 0.1, 0.8, 0.3, 1.0]
    problem = MvnProblem(limits, corr)
    assert MarkovChainRecursion.detect(corr) is not None
    chain = mvn_cdf(problem, method="auto")
    lattice = mvn_cdf(problem, target_abs_error=1e-6, method="qmc")
    assert chain.method != "qmc"
    assert chain.value == pytest.approx(lattice.value, abs=3 * lattice.error_bound + 1e-6)


def test_lattice_is_deterministic_for_a_seed():
    corr = np.full((4, 4), 0.3)
    np.fill_diagonal(corr, 1.0)
    problem = MvnProblem([0.1, 0.2, -0.3, 0.5], corr)
    first = mvn_cdf(problem, target_abs_error=1e-5, seed=7, method="qmc")
    second = mvn_cdf(problem, target_abs_error=1e-5, seed=7, method="qmc")
    assert first.value == second.value
    assert first.error_bound == second.error_bound


@hyp_settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(min_value=-2.0, max_value=2.0), min_size=4, max_size=4),
       st.integers(min_value=0, max_value=3), st.floats(min_value=0.01, max_value=1.0))
def test_mvn_monotone_in_limits(limits, index, bump):
    corr = brownian_corr([0.2, 0.4, 0.5, 0.9])
    low = mvn_cdf(MvnProblem(limits, corr))
    raised = list(limits)
    raised[index] += bump
    high = mvn_cdf(MvnProblem(raised, corr))
    assert high.value >= low.value - (low.error_bound + high.error_bound)


CHAIN_TIMES = [0.1, 0.25, 0.3, 0.45, 0.5, 0.7]
CHAIN_LIMITS = [0.4, -0.2, 0.1, 0.8, 0.3, 1.0]


def test_legendre_rule_is_shared():
    nodes, weights = legendre_rule(50)
    assert legendre_rule(50)[0] is nodes
    assert weights.sum() == pytest.approx(2.0, abs=1e-13)
    with pytest.raises(ValueError):
        nodes[0] = 0.0


def test_legendre_rule_is_built_once_per_size(monkeypatch):
    calls = []
    original = np.polynomial.legendre.leggauss
    monkeypatch.setattr(np.polynomial.legendre, "leggauss", lambda n: calls.append(n) or original(n))
    legendre_rule.cache_clear()
    problem = MvnProblem(CHAIN_LIMITS, brownian_corr(CHAIN_TIMES))
    first = mvn_cdf(problem)
    second = mvn_cdf(problem)
    assert first.method == "markov"
    assert first.value == second.value
    assert calls
    assert len(calls) == len(set(calls))


def test_sign_flipped_correlations_share_one_psd_check():
    corr = brownian_corr([0.2, 0.4, 0.6, 0.8])
    smallest_eigenvalue.cache_clear()
    for signs in ([1, 1, 1, 1], [1, -1, 1, -1], [-1, 1, 1, -1], [1, -1, -1, -1]):
        s = np.asarray(signs, dtype=float)
        MvnProblem(np.zeros(4), np.outer(s, s) * corr)
    info = smallest_eigenvalue.cache_info()
    assert info.misses == 1
    assert info.hits == 3


@pytest.mark.parametrize("target", [1e-5, 1e-8])
def test_markov_chain_error_meets_the_target(target):
    signs = np.array([1, -1, -1, 1, 1, 1], dtype=float)
    problem = MvnProblem(CHAIN_LIMITS, np.outer(signs, signs) * brownian_corr(CHAIN_TIMES))
    estimate = mvn_cdf(problem, target_abs_error=target)
    assert estimate.method == "markov"
    assert estimate.error_bound <= target


def test_markov_chain_gives_up_past_the_node_cap(monkeypatch):
    monkeypatch.setattr(MarkovChainRecursion, "REFINE_NODES", 100)
    chain = MarkovChainRecursion(np.asarray(CHAIN_LIMITS), np.full(5, 0.9))
    assert chain.estimate(1e-8) is None


@hyp_settings(max_examples=10, deadline=None)
@given(orthant_limits(4), correlation_matrices(4), st.permutations(range(4)))
def test_mvn_permutation_invariance(limits, corr, order):
    idx = np.asarray(order)
    original = mvn_cdf(MvnProblem(limits, corr), target_abs_error=1e-5)
    permuted = mvn_cdf(MvnProblem(limits[idx], corr[np.ix_(idx, idx)]), target_abs_error=1e-5)
    assert permuted.value == pytest.approx(original.value, abs=original.error_bound + permuted.error_bound + 1e-7)


@hyp_settings(max_examples=10, deadline=None)
@given(orthant_limits(5), correlation_matrices(2), correlation_matrices(3))
def test_block_diagonal_factorizes(limits, first, second):
    corr = np.zeros((5, 5))
    corr[:2, :2] = first
    corr[2:, 2:] = second
    joint = mvn_cdf(MvnProblem(limits, corr), target_abs_error=1e-5)
    pair = bvn_cdf(limits[0], limits[1], float(first[0, 1]))
    triple, triple_error, _ = tvn_cdf(limits[2:], second)
    assert joint.value == pytest.approx(pair * triple, abs=joint.error_bound + triple_error + 1e-7)


@hyp_settings(max_examples=8, deadline=None)
@given(orthant_limits(5), correlation_matrices(5))
def test_five_dimensions_agree_with_sampling(limits, corr):
    samples = 200_000
    rng = np.random.default_rng(20240517)
    draws = rng.standard_normal((samples, 5)) @ np.linalg.cholesky(corr).T
    hit = float(np.mean(np.all(draws <= limits, axis=1)))
    se = math.sqrt(max(hit * (1.0 - hit), 1.0 / samples) / samples)
    estimate = mvn_cdf(MvnProblem(limits, corr), target_abs_error=1e-5)
    assert estimate.value == pytest.approx(hit, abs=4.0 * se + estimate.error_bound + 1e-6)
