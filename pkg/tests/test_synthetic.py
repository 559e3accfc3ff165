import numpy as np
import pytest
from scipy import stats

from multiway_vae.dataio import read_labels_csv, write_labels_csv
from multiway_vae.multiway import fft_features
from multiway_vae.synthetic import (
    BenchmarkSuite,
    DamageSpec,
    SyntheticSpec,
    benchmark_suite,
    generate,
)


def _spec(**kw):
    defaults = dict(
        n_sensors=4,
        signal_length=128,
        n_events=20,
        base_modes=((8.0, 1.0), (21.0, 0.6)),
        noise_std=0.1,
        seed=0,
    )
    defaults.update(kw)
    return SyntheticSpec(**defaults)


class TestGenerate:
    def test_same_seed_byte_identical(self):
        a = generate(_spec())
        b = generate(_spec())
        assert a.signals.tobytes() == b.signals.tobytes()

    def test_shapes_and_labels(self):
        data = generate(_spec())
        assert data.signals.shape == (20, 4, 128)
        assert len(data.labels) == 20
        assert all(not lab.is_damage for lab in data.labels)

    def test_healthy_spectra_peak_at_base_modes(self):
        spec = _spec(noise_std=0.01, amp_jitter=0.0)
        data = generate(spec)
        for event in data.signals[:5]:
            for row in event:
                mags = fft_features(row, 64)
                # strongest non-DC bin is the dominant mode
                assert int(np.argmax(mags[1:])) + 1 == 8

    def test_damage_moves_target_spectrum_only(self):
        spec = _spec()
        healthy = generate(spec)
        damaged = generate(
            spec, DamageSpec(target_sensors=[2], magnitude=0.3, n_events=20)
        )
        # untouched sensors share the same seed-driven samples bit for bit
        for s in (0, 1, 3):
            np.testing.assert_array_equal(damaged.signals[:, s], healthy.signals[:, s])
        # the injected sensor's dominant bin moves down by the magnitude fraction
        mags = fft_features(damaged.signals[0, 2], 64)
        peak = int(np.argmax(mags[1:])) + 1
        assert peak == round(8 * 0.7)

    def test_zero_magnitude_is_bit_identical_to_healthy(self):
        spec = _spec()
        healthy = generate(spec)
        untouched = generate(
            spec, DamageSpec(target_sensors=[1], magnitude=0.0, n_events=20)
        )
        assert untouched.signals.tobytes() == healthy.signals.tobytes()
        assert all(not lab.is_damage for lab in untouched.labels)

    def test_zero_magnitude_statistically_indistinguishable(self):
        # different seeds, same distribution: a two-sample test on the
        # dominant spectral feature must not reject at alpha = 0.01
        a = generate(_spec(n_events=100, seed=1))
        b = generate(
            _spec(n_events=100, seed=2),
            DamageSpec(target_sensors=[0], magnitude=0.0, n_events=100),
        )
        feats_a = np.array([fft_features(ev[0], 32)[8] for ev in a.signals])
        feats_b = np.array([fft_features(ev[0], 32)[8] for ev in b.signals])
        assert stats.ks_2samp(feats_a, feats_b).pvalue > 0.01

    def test_real_magnitude_is_distinguishable(self):
        a = generate(_spec(n_events=100, seed=1))
        b = generate(
            _spec(n_events=100, seed=2),
            DamageSpec(target_sensors=[0], magnitude=0.3, n_events=100),
        )
        feats_a = np.array([fft_features(ev[0], 32)[8] for ev in a.signals])
        feats_b = np.array([fft_features(ev[0], 32)[8] for ev in b.signals])
        assert stats.ks_2samp(feats_a, feats_b).pvalue < 1e-6

    def test_two_simultaneous_injections(self):
        spec = _spec()
        data = generate(
            spec,
            [
                DamageSpec(target_sensors=[0], magnitude=0.4, n_events=10),
                DamageSpec(target_sensors=[3], magnitude=0.2, n_events=10),
            ],
        )
        assert data.signals.shape[0] == 10
        assert data.labels[0].target_sensors == [0, 3]

    def test_overlapping_injections_rejected(self):
        with pytest.raises(ValueError, match="distinct"):
            generate(
                _spec(),
                [
                    DamageSpec(target_sensors=[1], magnitude=0.4, n_events=10),
                    DamageSpec(target_sensors=[1], magnitude=0.2, n_events=10),
                ],
            )

    def test_mismatched_event_counts_rejected(self):
        with pytest.raises(ValueError, match="n_events"):
            generate(
                _spec(),
                [
                    DamageSpec(target_sensors=[1], magnitude=0.4, n_events=10),
                    DamageSpec(target_sensors=[2], magnitude=0.2, n_events=12),
                ],
            )

    def test_target_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="out of range"):
            generate(_spec(), DamageSpec(target_sensors=[9], magnitude=0.4, n_events=5))


class TestSpecValidation:
    def test_mode_frequency_below_nyquist(self):
        with pytest.raises(ValueError):
            _spec(base_modes=((70.0, 1.0),))  # signal_length 128 -> limit 64

    def test_noise_std_positive(self):
        with pytest.raises(ValueError):
            _spec(noise_std=0.0)

    def test_negative_magnitude_rejected(self):
        with pytest.raises(ValueError):
            DamageSpec(target_sensors=[0], magnitude=-0.1, n_events=5)


class TestBenchmarkSuite:
    def test_exactly_four_scenarios(self):
        suite = benchmark_suite(seed=3, spec=_spec())
        assert isinstance(suite, BenchmarkSuite)
        assert len(suite.scenarios) == 4

    def test_default_training_dims(self):
        suite = benchmark_suite(seed=3)
        assert suite.train.signals.shape == (200, 8, 256)

    def test_two_site_scenario_targets_two_distinct_sensors(self):
        suite = benchmark_suite(seed=3)
        two_site = suite.scenarios[-1]
        targets = [s for inj in two_site.injections for s in inj.target_sensors]
        assert len(targets) == 2 and len(set(targets)) == 2

    def test_deterministic(self):
        a = benchmark_suite(seed=5, spec=_spec())
        b = benchmark_suite(seed=5, spec=_spec())
        assert a.train.signals.tobytes() == b.train.signals.tobytes()
        for sa, sb in zip(a.scenarios, b.scenarios):
            assert sa.dataset.signals.tobytes() == sb.dataset.signals.tobytes()

    def test_scenario_labels_round_trip_csv(self, tmp_path):
        suite = benchmark_suite(seed=3, spec=_spec())
        for scen in suite.scenarios:
            path = tmp_path / f"{scen.name}.csv"
            write_labels_csv(path, scen.dataset.labels)
            assert read_labels_csv(path) == scen.dataset.labels
