import numpy as np
import pytest

from blockcd.blocks import FlopCounter, make_uniform_partition
from blockcd.losses import DesignMatrix, LogisticLoss, PredictionCache
from blockcd.losses import full_gradient
from blockcd.penalties import L1Penalty, LogSumPenalty, block_violation
from blockcd.problem import DesignProblem
from blockcd.sampling import (CyclicSelector, ImportanceSelector,
                              SamplingDistribution, UniformSelector,
                              ViolationVector, cyclic_next,
                              importance_probabilities, init_violations,
                              sample_block, update_violation)


def small_problem(rng, n=12, d=8, lam=1.0, penalty=None):
    a = DesignMatrix(rng.standard_normal((n, d)))
    y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    return DesignProblem(a, y, LogisticLoss(), penalty or L1Penalty(), lam)


def test_epsilon_one_is_exactly_uniform():
    rng = np.random.default_rng(0)
    for m in (1, 3, 10):
        z = rng.random(m) * 5
        dist = importance_probabilities(z, epsilon=1.0)
        np.testing.assert_array_equal(dist.probs, np.full(m, 1.0 / m))


def test_two_block_hand_case():
    dist = importance_probabilities(np.array([1.0, 0.0]), epsilon=0.5)
    np.testing.assert_allclose(dist.probs, [2.0 / 3.0, 1.0 / 3.0], rtol=1e-15)


def test_equal_violations_give_uniform():
    for c in (0.3, 4.0):
        dist = importance_probabilities(np.full(7, c), epsilon=0.25)
        np.testing.assert_allclose(dist.probs, np.full(7, 1.0 / 7.0),
                                   rtol=1e-14)


def test_zero_violations_fall_back_to_uniform():
    dist = importance_probabilities(np.zeros(4), epsilon=0.1)
    np.testing.assert_array_equal(dist.probs, np.full(4, 0.25))


def test_distribution_normalization_and_floor():
    rng = np.random.default_rng(1)
    for _ in range(300):
        m = int(rng.integers(1, 40))
        z = rng.random(m) * rng.choice([1e-3, 1.0, 1e4])
        eps = float(rng.random() * 0.999 + 0.001)
        dist = importance_probabilities(z, eps)
        assert abs(float(np.sum(dist.probs)) - 1.0) <= 1e-12
        assert np.all(dist.probs >= eps / m - 1e-15)


def test_monotone_bias():
    rng = np.random.default_rng(2)
    for _ in range(100):
        m = int(rng.integers(2, 20))
        z = rng.random(m) * 10
        dist = importance_probabilities(z, epsilon=0.3)
        order = np.argsort(z)
        p_sorted = dist.probs[order]
        z_sorted = z[order]
        strict = z_sorted[1:] > z_sorted[:-1]
        assert np.all(p_sorted[1:][strict] > p_sorted[:-1][strict])


def test_scale_invariance():
    rng = np.random.default_rng(3)
    z = rng.random(15) * 2
    base = importance_probabilities(z, 0.2).probs
    for alpha in (1e-6, 0.5, 3.0, 1e7):
        scaled = importance_probabilities(alpha * z, 0.2).probs
        np.testing.assert_allclose(scaled, base, rtol=1e-12, atol=1e-15)


def test_epsilon_validation():
    with pytest.raises(ValueError):
        importance_probabilities(np.ones(3), 0.0)
    with pytest.raises(ValueError):
        importance_probabilities(np.ones(3), 1.2)
    with pytest.raises(ValueError):
        SamplingDistribution(np.array([0.5, 0.5]), epsilon=-0.1)


def test_violation_vector_validation():
    with pytest.raises(ValueError):
        ViolationVector(np.array([1.0, -0.1]))
    with pytest.raises(ValueError):
        ViolationVector(np.array([np.inf, 0.0]))


def test_sample_block_uniform_frequencies():
    rng = np.random.default_rng(4)
    dist = SamplingDistribution(np.full(4, 0.25), epsilon=1.0)
    draws = np.array([sample_block(dist, rng) for _ in range(100_000)])
    counts = np.bincount(draws, minlength=4)
    # 3 sigma of Binomial(1e5, 1/4)
    sigma = np.sqrt(100_000 * 0.25 * 0.75)
    assert np.all(np.abs(counts - 25_000) <= 3 * sigma)


def test_sample_block_weighted_frequencies():
    rng = np.random.default_rng(5)
    dist = SamplingDistribution(np.array([2.0 / 3.0, 1.0 / 3.0]), epsilon=0.5)
    n = 300_000
    draws = np.array([sample_block(dist, rng) for _ in range(n)])
    count0 = int(np.sum(draws == 0))
    sigma = np.sqrt(n * (2 / 3) * (1 / 3))
    assert abs(count0 - n * 2 / 3) <= 3 * sigma


def test_sample_block_deterministic_under_seed():
    dist = importance_probabilities(np.array([3.0, 1.0, 0.2]), 0.4)
    a = [sample_block(dist, np.random.default_rng(99)) for _ in range(50)]
    b = [sample_block(dist, np.random.default_rng(99)) for _ in range(50)]
    # one generator per sequence, advanced across draws
    rng1, rng2 = np.random.default_rng(7), np.random.default_rng(7)
    s1 = [sample_block(dist, rng1) for _ in range(200)]
    s2 = [sample_block(dist, rng2) for _ in range(200)]
    assert a == b and s1 == s2


def test_init_violations_zero_iterate_large_lambda():
    rng = np.random.default_rng(6)
    problem = small_problem(rng, lam=1e3)
    part = make_uniform_partition(8, 4)
    z = init_violations(problem, part, np.zeros(8))
    assert z.exact_at_init
    np.testing.assert_array_equal(z.approx, np.zeros(4))


def test_init_violations_lambda_zero_is_gradient_norm():
    rng = np.random.default_rng(7)
    a_mat = rng.standard_normal((10, 6))
    y = np.where(rng.random(10) < 0.5, -1.0, 1.0)
    problem = DesignProblem(DesignMatrix(a_mat), y, LogisticLoss(),
                            L1Penalty(), lam=0.0)
    part = make_uniform_partition(6, 3)
    z = init_violations(problem, part, np.zeros(6))
    grad0 = -0.5 * a_mat.T @ y
    for i in range(3):
        np.testing.assert_allclose(
            z.approx[i], np.max(np.abs(grad0[part.slice(i)])), rtol=1e-12)


def test_init_violations_matches_full_recompute_and_charges():
    rng = np.random.default_rng(8)
    problem = small_problem(rng, lam=0.4, penalty=LogSumPenalty(0.7))
    part = make_uniform_partition(8, 4)
    x0 = rng.standard_normal(8)
    flops = FlopCounter()
    z = init_violations(problem, part, x0, flops)
    assert flops.gradient_flops == 2 * 12 * 8 + 12
    cache = PredictionCache(problem.matrix, x0)
    grad = full_gradient(problem.loss, problem.matrix, cache, problem.labels)
    for i in range(4):
        sl = part.slice(i)
        expected = block_violation(problem.penalty, x0[sl], grad[sl], 0.4)
        np.testing.assert_allclose(z.approx[i], expected, rtol=1e-13)


def test_update_violation_exact_at_gradient_iterate():
    rng = np.random.default_rng(9)
    problem = small_problem(rng, lam=0.6, penalty=LogSumPenalty(1.1))
    part = make_uniform_partition(8, 4)
    x = rng.standard_normal(8)
    cache = PredictionCache(problem.matrix, x)
    grad = full_gradient(problem.loss, problem.matrix, cache, problem.labels)
    z = ViolationVector(rng.random(4), exact_at_init=True)
    before = z.approx.copy()
    sl = part.slice(2)
    update_violation(z, 2, x[sl], grad[sl], problem.penalty, problem.lam)
    expected = block_violation(problem.penalty, x[sl], grad[sl], problem.lam)
    assert z.approx[2] == expected
    np.testing.assert_array_equal(np.delete(z.approx, 2), np.delete(before, 2))


def test_update_violation_planted_stationary_block():
    pen = L1Penalty()
    z = ViolationVector(np.ones(3))
    x_block = np.array([0.0, 0.0])
    grad = np.array([0.2, -0.3])  # inside lam * [-1, 1]
    update_violation(z, 1, x_block, grad, pen, lam=1.0)
    assert z.approx[1] == 0.0


def test_cyclic_next():
    assert [cyclic_next(k, 3) for k in range(7)] == [0, 1, 2, 0, 1, 2, 0]
    assert [cyclic_next(k, 1) for k in range(4)] == [0, 0, 0, 0]
    sel = CyclicSelector(4)
    rng = np.random.default_rng(0)
    visits = [sel.next_block(rng) for _ in range(8)]
    assert visits == [0, 1, 2, 3, 0, 1, 2, 3]


def test_uniform_selector_matches_importance_with_epsilon_one():
    rng = np.random.default_rng(10)
    z = ViolationVector(rng.random(6), exact_at_init=True)
    uniform = UniformSelector(6)
    importance = ImportanceSelector(6, epsilon=1.0)
    importance.seed_violations(z)
    r1, r2 = np.random.default_rng(123), np.random.default_rng(123)
    a = [uniform.next_block(r1) for _ in range(500)]
    b = [importance.next_block(r2) for _ in range(500)]
    assert a == b


def test_importance_selector_tracks_and_converges():
    sel = ImportanceSelector(3, epsilon=0.5)
    sel.seed_violations(ViolationVector(np.array([1.0, 0.5, 0.0]),
                                        exact_at_init=True))
    assert not sel.converged
    sel.observe(0, 0.0)
    sel.observe(1, 0.0)
    assert sel.converged
    with pytest.raises(ValueError):
        ImportanceSelector(3, epsilon=0.0)
