import jax
import jax.numpy as jnp
import numpy as np
import pytest

from locovx.covmodel import (
    CovarianceMatrix,
    ReturnMatrix,
    SpectralModel,
    sample_covariance,
    sample_returns,
)
from locovx.errors import (
    AmbiguousPortfolioError,
    DegenerateAssetError,
    InputError,
    Status,
    raise_for_status,
)
from locovx.locov import (
    _update_ledger,
    draw_index_set,
    locov2,
    locov2_result,
    locovk,
    locovk_result,
    locovk_running_mean,
    normalize_votes,
    subproblem_weights,
    votek,
)
from locovx.minvar import min_variance_portfolio


def random_cov(key, p, n=None):
    """A sample covariance of `n` Gaussian returns with eigenvalues 1..p."""
    model = SpectralModel.from_eigenvalues(jnp.arange(1, p + 1, dtype=jnp.float64))
    return sample_covariance(sample_returns(model, n or 2 * p, "gaussian", key))


def test_subproblem_weights():
    cov = CovarianceMatrix.create(jnp.diag(jnp.asarray([1.0, 1.0, 3.0])))
    assert jnp.allclose(subproblem_weights(cov, [0, 1]), jnp.asarray([0.5, 0.5]))
    assert jnp.allclose(subproblem_weights(cov, [0, 2]), jnp.asarray([0.75, 0.25]))
    assert jnp.allclose(subproblem_weights(cov, [2, 0]), jnp.asarray([0.25, 0.75]))

    cov = random_cov(jax.random.PRNGKey(0), 6)
    index_set = [4, 1, 3]
    expected, _ = min_variance_portfolio(cov[index_set])
    weights = subproblem_weights(cov, index_set)
    assert jnp.max(jnp.abs(weights - expected.values)) <= 1e-10
    assert abs(float(jnp.sum(weights)) - 1.0) <= 1e-10


def test_subproblem_weights_errors():
    cov = CovarianceMatrix.create(jnp.eye(3))
    with pytest.raises(InputError):
        subproblem_weights(cov, [0])
    with pytest.raises(InputError):
        subproblem_weights(cov, [0, 0])
    with pytest.raises(InputError):
        subproblem_weights(cov, [0, 3])

    singular = CovarianceMatrix.create(jnp.diag(jnp.asarray([0.0, 1.0, 1.0])))
    assert subproblem_weights(singular, [0, 1]) is None


def test_locov2_identity():
    for p in (2, 5, 30):
        weights = locov2(CovarianceMatrix.create(jnp.eye(p)))
        assert jnp.max(jnp.abs(weights.values - 1.0 / p)) <= 1e-12


def test_locov2_hand_trace():
    result = locov2_result(CovarianceMatrix.create(jnp.diag(jnp.asarray([1.0, 3.0]))))
    expected = jnp.asarray([[0.5, 0.75], [0.25, 0.5]])
    assert jnp.max(jnp.abs(result.relative_weights.entries - expected)) <= 1e-12
    assert jnp.max(jnp.abs(result.votes.values - jnp.asarray([0.625, 0.375]))) <= 1e-12
    assert jnp.max(jnp.abs(result.weights - jnp.asarray([0.625, 0.375]))) <= 1e-12
    assert int(result.status) == Status.OK
    assert int(result.skips) == 0


def test_locov2_diagonal_formula():
    variances = jnp.asarray([1.0, 2.0, 5.0, 0.5, 3.0])
    p = variances.shape[0]
    result = locov2_result(CovarianceMatrix.create(jnp.diag(variances)))
    for i in range(p):
        others = sum(
            float(variances[j] / (variances[i] + variances[j]))
            for j in range(p)
            if j != i
        )
        assert abs(float(result.votes.values[i]) - (0.5 + others) / p) <= 1e-12
    # votes are the row means of the ledger
    row_means = jnp.mean(result.relative_weights.entries, axis=1)
    assert jnp.max(jnp.abs(result.votes.values - row_means)) <= 1e-12


def test_locov2_invariances():
    cov = random_cov(jax.random.PRNGKey(1), 8)
    weights = locov2(cov).values
    assert abs(float(jnp.sum(weights)) - 1.0) <= 1e-10

    scaled = locov2(CovarianceMatrix.create(123.0 * cov.entries)).values
    assert jnp.max(jnp.abs(scaled - weights)) <= 1e-10

    permutation = jnp.asarray([3, 0, 7, 1, 6, 2, 5, 4])
    permuted = locov2(cov[permutation]).values
    assert jnp.max(jnp.abs(permuted - weights[permutation])) <= 1e-10


def test_locov2_skips_singular_pairs():
    key = jax.random.PRNGKey(2)
    returns = jax.random.normal(key, (50, 3))
    # the last asset duplicates the first
    returns = jnp.concatenate([returns, returns[:, :1]], axis=1)
    cov = sample_covariance(ReturnMatrix(entries=returns))
    result = locov2_result(cov)
    assert int(result.skips) == 1
    assert int(result.status) == Status.OK
    assert jnp.all(jnp.isfinite(result.relative_weights.entries))
    assert float(result.relative_weights.entries[0, 3]) == 0.0
    assert float(result.relative_weights.entries[3, 0]) == 0.0


def test_locov2_degenerate_asset():
    cov = CovarianceMatrix.create(jnp.diag(jnp.asarray([0.0, 1.0, 2.0])))
    result = locov2_result(cov)
    assert int(result.status) == Status.DEGENERATE_ASSET
    assert int(result.skips) == 2
    with pytest.raises(DegenerateAssetError):
        locov2(cov)



def test_negative_pair_weights():
    # S = (3, -1), so the pair shorts the second asset
    cov = CovarianceMatrix.create(jnp.asarray([[1.0, 2.0], [2.0, 5.0]]))
    result = locov2_result(cov)
    assert jnp.allclose(result.relative_weights.entries[0, 1], 1.5, atol=1e-12)
    assert jnp.allclose(result.relative_weights.entries[1, 0], -0.5, atol=1e-12)
    assert abs(float(jnp.sum(result.weights)) - 1.0) <= 1e-10


def test_ambiguous_votes():
    weights, status = normalize_votes(jnp.asarray([1.0, -1.0, 0.0]), 1e-12)
    assert int(status) == Status.AMBIGUOUS
    with pytest.raises(AmbiguousPortfolioError):
        raise_for_status(status, signed_sum=0.0)


def test_draw_index_set():
    p, k = 10, 4
    for seed in range(50):
        asset = jnp.asarray(seed % p)
        index_set = draw_index_set(jax.random.PRNGKey(seed), asset, p, k)
        assert index_set.shape == (k,)
        assert int(index_set[0]) == int(asset)
        values = [int(i) for i in index_set]
        assert len(set(values)) == k
        assert all(0 <= i < p for i in values)

    # k = p forces every asset in
    index_set = draw_index_set(jax.random.PRNGKey(0), jnp.asarray(2), 5, 5)
    assert sorted(int(i) for i in index_set) == [0, 1, 2, 3, 4]


def test_update_ledger():
    a, u1, u2 = 1 / 3, 0.9, 0.1
    relative = jnp.full((2, 2), a)
    counts = jnp.ones((2, 2))
    rows, cols, ok = jnp.asarray([0]), jnp.asarray([1]), jnp.asarray(True)

    first = jnp.asarray([u1])
    halved, _ = _update_ledger(relative, counts, rows, cols, first, ok, False)
    running, _ = _update_ledger(relative, counts, rows, cols, first, ok, True)
    assert float(halved[0, 1]) == pytest.approx((a + u1) / 2, abs=1e-15)
    assert float(running[0, 1]) == pytest.approx((a + u1) / 2, abs=1e-15)

    schemes = ((False, a / 4 + u1 / 4 + u2 / 2), (True, (a + u1 + u2) / 3))
    for running_mean, expected in schemes:
        ledger, seen = relative, counts
        for u in (u1, u2):
            ledger, seen = _update_ledger(
                ledger, seen, rows, cols, jnp.asarray([u]), ok, running_mean
            )
        assert float(ledger[0, 1]) == pytest.approx(expected, abs=1e-15)
        assert float(ledger[1, 0]) == a

    skipped, seen = _update_ledger(
        relative, counts, rows, cols, jnp.asarray([jnp.nan]), jnp.asarray(False), True
    )
    assert jnp.array_equal(skipped, relative)
    assert jnp.array_equal(seen, counts)


def test_locovk_identity():
    cov = CovarianceMatrix.create(jnp.eye(7))
    for seed in range(3):
        key = jax.random.PRNGKey(seed)
        for estimate in (locovk, locovk_running_mean):
            weights = estimate(cov, 3, key)
            assert jnp.max(jnp.abs(weights.values - 1 / 7)) <= 1e-10


def test_locovk_is_reproducible():
    cov = random_cov(jax.random.PRNGKey(3), 12)
    key = jax.random.PRNGKey(4)
    first = locovk_result(cov, 4, key)
    second = locovk_result(cov, 4, key)
    assert jnp.array_equal(first.weights, second.weights)
    assert jnp.array_equal(
        first.relative_weights.entries, second.relative_weights.entries
    )
    assert abs(float(jnp.sum(first.weights)) - 1.0) <= 1e-10

    other = locovk_result(cov, 4, jax.random.PRNGKey(5))
    assert not jnp.array_equal(first.weights, other.weights)

    running = locovk_result(cov, 4, key, running_mean=True)
    assert not jnp.array_equal(first.weights, running.weights)
    assert abs(float(jnp.sum(running.weights)) - 1.0) <= 1e-10


def test_locovk_votes_and_repetitions():
    p = 6
    cov = random_cov(jax.random.PRNGKey(6), p)
    result = locovk_result(cov, 3, jax.random.PRNGKey(7), repetitions=2 * p)
    assert jnp.all(jnp.isfinite(result.relative_weights.entries))
    assert abs(float(jnp.sum(result.weights)) - 1.0) <= 1e-10
    row_means = jnp.mean(result.relative_weights.entries, axis=1)
    assert jnp.max(jnp.abs(result.votes.values - row_means)) <= 1e-12

    in_loop = locovk_result(
        cov, 3, jax.random.PRNGKey(7), repetitions=2 * p, vote_in_loop=True
    )
    assert jnp.array_equal(
        in_loop.relative_weights.entries, result.relative_weights.entries
    )
    # only the last asset votes after the ledger is final
    assert float(in_loop.votes.values[p - 1]) == pytest.approx(float(row_means[p - 1]))
    assert not jnp.allclose(in_loop.votes.values, row_means)

    full = locovk_result(cov, p, jax.random.PRNGKey(8))
    assert int(full.skips) == 0
    assert abs(float(jnp.sum(full.weights)) - 1.0) <= 1e-10


def test_locovk_redraws_singular_blocks():
    cov = CovarianceMatrix.create(jnp.diag(jnp.asarray([0.0, 1.0, 2.0, 3.0])))
    result = locovk_result(cov, 3, jax.random.PRNGKey(0))
    # every index set of asset 0 is singular, so each of its 4 draws is
    # retried 10 times and then skipped
    assert int(result.skips) >= 4
    assert int(result.resamples) >= 40
    assert jnp.all(jnp.isfinite(result.relative_weights.entries))
    assert jnp.all(result.relative_weights.entries[0] == 1 / 3)


def test_locovk_permutation_equivariance():
    p, k, seeds = 6, 3, 200
    cov = random_cov(jax.random.PRNGKey(9), p, n=12)
    permutation = jnp.asarray([5, 3, 1, 0, 2, 4])
    permuted = cov[permutation].entries
    keys = jax.random.split(jax.random.PRNGKey(10), seeds)

    def votes(entries, key):
        result = votek(
            entries,
            key,
            k=k,
            repetitions=p,
            running_mean=False,
            degeneracy_tol=1e-10,
            normalization_tol=1e-12,
            max_resamples=10,
        )
        return result.weights

    original = jax.vmap(lambda key: votes(cov.entries, key))(keys)
    relabelled = jax.vmap(lambda key: votes(permuted, key))(keys)
    differences = np.asarray(relabelled - original[:, permutation])
    stderr = differences.std(axis=0, ddof=1) / np.sqrt(seeds)
    z = np.abs(differences.mean(axis=0)) / stderr
    assert np.all(z < 4.0), z


def test_locovk_errors():
    cov = CovarianceMatrix.create(jnp.eye(5))
    key = jax.random.PRNGKey(0)
    with pytest.raises(InputError):
        locovk(cov, 2, key)
    with pytest.raises(InputError):
        locovk(cov, 6, key)
    with pytest.raises(InputError):
        locovk(cov, 3, key, repetitions=0)


def test_locov_beats_sample_portfolio():
    p, n = 30, 30
    model = SpectralModel.from_eigenvalues(jnp.arange(1, p + 1, dtype=jnp.float64))
    true_cov = CovarianceMatrix.create(jnp.diag(model.eigenvalues))
    true_weights = min_variance_portfolio(true_cov)[0].values
    sample_errors, locov_errors = [], []
    for seed in range(20):
        returns = sample_returns(model, n, "gaussian", jax.random.PRNGKey(seed))
        cov = sample_covariance(returns)
        sample_weights = min_variance_portfolio(cov)[0].values
        sample_errors.append(float(jnp.mean(jnp.abs(sample_weights - true_weights))))
        locov_errors.append(float(jnp.mean(jnp.abs(locov2(cov).values - true_weights))))
    assert np.mean(locov_errors) < np.mean(sample_errors)


if __name__ == "__main__":
    test_subproblem_weights()
    test_locov2_identity()
    test_locov2_hand_trace()
    test_locov2_diagonal_formula()
    test_locovk_identity()
    test_locovk_redraws_singular_blocks()
