import jax
import jax.numpy as jnp
import numpy as np
import pytest

from locovx import presets
from locovx.covmodel import (
    marchenko_pastur_edges,
    returns_from_noise,
    sample_covariance,
    sample_noise,
    whitened_spectrum,
)
from locovx.errors import InputError, SweepError, UsageError
from locovx.io import jsonable
from locovx.experiment import (
    MP_SLACK,
    TrialConfig,
    compare_estimators,
    estimator_stream,
    fit_loglog,
    parse_sigma,
    rank_estimators,
    run_experiment,
    scaling_sweep,
    spectral_model,
    trial_keys,
    true_portfolio,
)
from locovx.minvar import free_optimal_weight, optimal_risk


def test_parse_sigma():
    assert jnp.array_equal(parse_sigma("identity", 3), jnp.ones(3))
    assert jnp.allclose(parse_sigma("linspace:1:30", 30), jnp.arange(1.0, 31.0))
    assert jnp.array_equal(parse_sigma("list:1,2.5,4", 3), jnp.asarray([1.0, 2.5, 4.0]))
    for bad in ("list:1,2", "list:1,0,2", "linspace:1", "eye", "list:a,b,c"):
        with pytest.raises(InputError):
            parse_sigma(bad, 3)


def test_trial_config_validate():
    estimators = TrialConfig(p=5, estimators=("sample", "locovk:3")).validate()
    assert [e.tag for e in estimators] == ["sample", "locovk:3"]
    invalid = (
        dict(p=1),
        dict(n=0),
        dict(trials=0),
        dict(basis="random"),
        dict(noise="cauchy"),
        dict(estimators=()),
        dict(estimators=("sample", "sample")),
        dict(estimators=("locov3",)),
        dict(estimators=("locovk",)),
        dict(estimators=("locovk:2",)),
        dict(p=5, estimators=("locovk:6",)),
    )
    for fields in invalid:
        with pytest.raises(InputError):
            TrialConfig(**fields).validate()


def test_streams():
    keys = trial_keys(3, 10)
    assert keys.shape[0] == 10
    assert jnp.array_equal(keys, trial_keys(3, 10))
    assert jnp.array_equal(keys[:4], trial_keys(3, 4))
    assert not jnp.array_equal(keys, trial_keys(4, 10))

    assert estimator_stream("locov2") == estimator_stream("locov2")
    assert estimator_stream("locovk:3") != estimator_stream("locovk:4")
    assert estimator_stream("sample") >= 1


def test_run_experiment_records():
    config = TrialConfig(
        p=5,
        n=40,
        sigma="linspace:1:5",
        basis="haar",
        trials=12,
        seed=2,
        estimators=("sample", "locov2", "locovk:3", "locovk-rm:3"),
    )
    records, summaries = run_experiment(config)
    assert len(records) == 12 * 4
    assert [r.estimator for r in records[:4]] == list(config.estimators)
    assert set(summaries) == set(config.estimators)

    true_weights, true_risk = true_portfolio(spectral_model(config))
    for record in records:
        assert record.ok
        assert abs(record.weights.sum() - 1.0) <= 1e-10
        assert record.oracle_risk >= float(true_risk) - 1e-10
        assert np.allclose(record.weight_error, record.weights - true_weights.values)

    for summary in summaries.values():
        assert summary.n_trials == 12
        assert summary.n_failures == 0
        assert 0.0 <= summary.risk_underestimate_freq <= 1.0
        assert summary.mse >= 0.0
        assert summary.mean_weights.shape == (5,)


def test_sample_risk_identity():
    config = TrialConfig(p=4, n=20, sigma="linspace:1:4", trials=5, seed=9)
    records, _ = run_experiment(config)
    model = spectral_model(config)
    for key, record in zip(trial_keys(config.seed, config.trials), records):
        shape = (config.n, config.p)
        noise = sample_noise(jax.random.fold_in(key, 0), shape, "gaussian")
        estimate = sample_covariance(returns_from_noise(model, noise))
        expected = float(optimal_risk(free_optimal_weight(estimate)))
        assert record.sample_risk == pytest.approx(expected, rel=1e-10)


def test_mp_within_uses_whitened_spectrum():
    config = TrialConfig(
        p=4, n=8, basis="haar", sigma="linspace:1:4", trials=30, seed=3
    )
    _, summaries = run_experiment(config)
    model = spectral_model(config)
    lower, upper = marchenko_pastur_edges(config.p, config.n)
    within = []
    for key in trial_keys(config.seed, config.trials):
        shape = (config.n, config.p)
        noise = sample_noise(jax.random.fold_in(key, 0), shape, "gaussian")
        spectrum = whitened_spectrum(returns_from_noise(model, noise), model)
        within.append(
            bool(spectrum[-1] <= upper * (1 + MP_SLACK))
            and bool(spectrum[0] >= lower * (1 - MP_SLACK))
        )
    assert summaries["sample"].mp_within_freq == pytest.approx(np.mean(within))


def test_independent_of_batch_size():
    config = TrialConfig(
        p=6, n=12, trials=16, seed=5, estimators=("sample", "locov2", "locovk:3")
    )
    single_records, single = run_experiment(config, batch_size=1)
    # 16 trials in batches of 5 pads the last batch
    for batch_size in (5, None):
        records, summaries = run_experiment(config, batch_size=batch_size)
        assert len(records) == len(single_records)
        for a, b in zip(single_records, records):
            assert a.trial_id == b.trial_id and a.estimator == b.estimator
            assert np.array_equal(a.weights, b.weights)
            assert a.status == b.status and a.skips == b.skips
        for tag in single:
            assert jsonable(single[tag].to_dict()) == jsonable(
                summaries[tag].to_dict()
            )

    with pytest.raises(InputError):
        run_experiment(config, batch_size=0)


def test_failures_are_recorded():
    # n < p makes every sample covariance singular
    config = TrialConfig(p=5, n=3, trials=4, estimators=("sample", "locov2"))
    records, summaries = run_experiment(config)
    sample_records = [r for r in records if r.estimator == "sample"]
    assert len(sample_records) == 4
    assert not any(r.ok for r in sample_records)
    assert summaries["sample"].failure_rate == 1.0
    assert np.isnan(summaries["sample"].mse)

    comparison = rank_estimators(records, summaries)
    assert comparison.ranking == ("locov2", "sample")
    assert np.isnan(comparison.win_rates[("locov2", "sample")])
    assert comparison.to_dict()["ranking"] == ["locov2", "sample"]


def test_consistency_at_large_n():
    config = TrialConfig(p=5, n=100_000, trials=5, seed=1)
    _, summaries = run_experiment(config)
    assert summaries["sample"].mean_abs_error <= 0.01


def test_fit_loglog():
    n_grid = [10, 100, 1000, 10000]
    slope, stderr = fit_loglog(n_grid, [3.0 * n**-0.5 for n in n_grid])
    assert slope == pytest.approx(-0.5, abs=1e-12)
    assert stderr == pytest.approx(0.0, abs=1e-12)

    slope, stderr = fit_loglog(n_grid, [1.0, 0.5, 0.1, 0.04])
    assert slope < 0
    assert stderr > 0


def test_scaling_sweep_rejects_grids():
    config = TrialConfig(p=4, trials=5)
    for grid in ((60, 240), (60, 40, 600), (60, 100, 200), (2, 20, 200)):
        with pytest.raises(InputError):
            scaling_sweep(config, grid)


def test_scaling_sweep_two_assets():
    config = TrialConfig(p=2, trials=100, seed=4)
    fit = scaling_sweep(config, (1000, 10_000, 100_000))
    assert fit.estimator == "sample"
    assert fit.n_grid == (1000, 10_000, 100_000)
    assert all(e < 0.05 for e in fit.median_errors)
    assert fit.loglog_slope == pytest.approx(-0.5, abs=0.1)
    assert fit.failure_rates == (0.0, 0.0, 0.0)


def test_scaling_sweep_failure_threshold():
    # two rademacher observations of two assets are collinear half of the time
    config = TrialConfig(p=2, trials=50, noise="rademacher")
    with pytest.raises(SweepError) as info:
        scaling_sweep(config, (2, 4, 20), fail_threshold=0.05)
    assert info.value.n == 2


def test_compare_estimators_needs_two():
    with pytest.raises(InputError):
        compare_estimators(TrialConfig(p=3, trials=2))


def test_presets():
    configs = presets.make("fig1", seed=7)
    assert [c.n for c in configs] == [30, 3000]
    assert all(c.p == 30 and c.trials == 300 and c.seed == 7 for c in configs)
    assert configs[0].basis == "identity"
    assert presets.make("fig2")[0].basis == "haar"

    (config,) = presets.make("fig5", estimators=("sample", "locov2"))
    assert config.basis == "haar" and config.n == 30
    assert [c.n for c in presets.make("fig1", n=(60, 90))] == [60, 90]

    with pytest.raises(UsageError) as info:
        presets.make("fig6")
    assert "fig" in str(info.value)


@pytest.mark.slow
def test_fig1_weight_spread():
    small, large = presets.make("fig1", seed=7)
    _, small_summaries = run_experiment(small)
    _, large_summaries = run_experiment(large)
    small_std = float(np.max(small_summaries["sample"].std_weights))
    # at n = p the weights have infinite variance, so only the order is stable
    assert 0.1 <= small_std <= 10.0

    # Wishart law of the minimum-variance weights
    inverse = 1.0 / np.arange(1.0, 31.0)
    weights = inverse / inverse.sum()
    variance = (inverse / inverse.sum() - weights**2) / (large.n - large.p - 1)
    large_std = np.asarray(large_summaries["sample"].std_weights)
    assert np.max(np.abs(large_std / np.sqrt(variance) - 1.0)) <= 0.2
    assert small_std / float(np.max(large_std)) >= 5.0


@pytest.mark.slow
def test_fig1_risk_underestimation():
    config = presets.make("fig1", n=30, seed=0)[0]
    _, summaries = run_experiment(config)
    assert summaries["sample"].risk_underestimate_freq > 0.5


@pytest.mark.slow
@pytest.mark.parametrize("preset", ["fig3", "fig4", "fig5"])
def test_locov2_beats_sample(preset):
    (config,) = presets.make(preset, seed=1)
    comparison = compare_estimators(config)
    summaries = comparison.summaries
    assert summaries["locov2"].mse < summaries["sample"].mse
    assert comparison.ranking[0] == "locov2"
    assert 0.0 <= comparison.win_rates[("locov2", "sample")] <= 1.0


@pytest.mark.slow
def test_scaling_law():
    config = TrialConfig(p=30, trials=200, seed=3, sigma="linspace:1:30")
    fit = scaling_sweep(config, (60, 240, 960, 3840))
    assert -0.6 <= fit.loglog_slope <= -0.4
    assert all(freq >= 0.95 for freq in fit.band_freqs)


if __name__ == "__main__":
    test_parse_sigma()
    test_trial_config_validate()
    test_run_experiment_records()
    test_fit_loglog()
    test_presets()
