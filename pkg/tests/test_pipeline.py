import numpy as np
import pytest

from multiway_vae.artifact import save_artifact
from multiway_vae.detection import DAMAGE, HEALTHY
from multiway_vae.pipeline import score_model, train_model, worker_count

from conftest import small_run_config


class TestTrainModel:
    def test_artifact_is_complete(self, small_model):
        artifact, curve, cfg = small_model
        n, m = 4, 32
        assert artifact.scaler.mean.shape == (n, m)
        assert artifact.vae.d_in == n * m
        assert artifact.baseline.history.shape[0] == 80
        assert len(curve) == cfg.vae.epochs
        assert np.isfinite(artifact.threshold)

    def test_training_is_deterministic(self, small_suite, tmp_path, small_model):
        artifact, _, _ = small_model
        cfg = small_run_config()
        again, _ = train_model(small_suite.train.signals, None, cfg)
        save_artifact(tmp_path / "a.mva", artifact)
        save_artifact(tmp_path / "b.mva", again)
        assert (tmp_path / "a.mva").read_bytes() == (tmp_path / "b.mva").read_bytes()

    def test_rejects_non_finite_input(self):
        cfg = small_run_config()
        bad = np.zeros((3, 4, 64))
        bad[1, 2, 3] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            train_model(bad, None, cfg)


class TestScoreModel:
    def _scored(self, small_model, small_suite):
        artifact, _, _ = small_model
        scen = {s.name: s for s in small_suite.scenarios}
        healthy, hit = scen["healthy"], scen["hit"]
        raw = np.concatenate([healthy.dataset.signals, hit.dataset.signals])
        groups = ["healthy"] * healthy.dataset.n_events + ["hit"] * hit.dataset.n_events
        truth = [False] * healthy.dataset.n_events + [True] * hit.dataset.n_events
        return score_model(artifact, raw, None, groups, truth), truth

    def test_detects_the_damage_scenario(self, small_model, small_suite):
        result, truth = self._scored(small_model, small_suite)
        recall = np.mean(
            [e.decision == DAMAGE for e, t in zip(result.events, truth) if t]
        )
        fpr = np.mean(
            [e.decision == DAMAGE for e, t in zip(result.events, truth) if not t]
        )
        assert recall == 1.0
        assert fpr <= 0.2  # tiny model, tiny healthy set; the bench gates are stricter
        assert result.metrics is not None
        assert result.metrics[2] > 0.85

    def test_severity_trace_orders_groups(self, small_model, small_suite):
        result, _ = self._scored(small_model, small_suite)
        severity = dict(result.severity)
        assert severity["hit"] > severity["healthy"]

    def test_localization_points_at_injected_sensor(self, small_model, small_suite):
        result, truth = self._scored(small_model, small_suite)
        top = [s for s in result.localization_mean if s.rank == 1]
        assert top[0].sensor_label == "s2"

    def test_decisions_match_threshold_rule(self, small_model, small_suite):
        result, _ = self._scored(small_model, small_suite)
        for e in result.events:
            want = DAMAGE if e.score.neg_log_likelihood > result.threshold else HEALTHY
            assert e.decision == want

    def test_dimension_mismatch_reports_both_shapes(self, small_model):
        artifact, _, _ = small_model
        wrong = np.random.default_rng(0).normal(0, 1, (4, 3, 64))  # 3 sensors, not 4
        with pytest.raises(ValueError, match=r"\(4, 32\).*\(3, 32\)"):
            score_model(artifact, wrong)

    def test_thread_fanout_matches_serial(self, small_model, small_suite, monkeypatch):
        artifact, _, _ = small_model
        raw = small_suite.scenarios[0].dataset.signals
        serial = score_model(artifact, raw)
        monkeypatch.setenv("MVA_THREADS", "4")
        parallel = score_model(artifact, raw)
        for a, b in zip(serial.events, parallel.events):
            assert a.score.neg_log_likelihood == b.score.neg_log_likelihood
            assert [s.knn_score for s in a.location_scores] == [
                s.knn_score for s in b.location_scores
            ]

    def test_bad_thread_env_rejected(self, monkeypatch):
        monkeypatch.setenv("MVA_THREADS", "zero")
        with pytest.raises(ValueError, match="MVA_THREADS"):
            worker_count()
        monkeypatch.setenv("MVA_THREADS", "0")
        with pytest.raises(ValueError, match="MVA_THREADS"):
            worker_count()


class TestTwoSiteLocalization:
    def test_both_sites_rank_top2_and_larger_magnitude_scores_higher(
        self, small_model, small_suite
    ):
        artifact, _, _ = small_model
        two = {s.name: s for s in small_suite.scenarios}["two_site"]
        result = score_model(artifact, two.dataset.signals)
        top2_rate = np.mean(
            [
                {"s0", "s3"} <= {s.sensor_label for s in e.location_scores if s.rank <= 2}
                for e in result.events
            ]
        )
        assert top2_rate >= 0.8
        by_label = {s.sensor_label: s.knn_score for s in result.localization_mean}
        assert by_label["s0"] > by_label["s3"] > max(by_label["s1"], by_label["s2"])


class TestHealthyDamageSeparation:
    def test_max_knn_score_separates_states_over_50_trials(self, small_model, small_suite):
        artifact, _, _ = small_model
        scen = {s.name: s for s in small_suite.scenarios}
        healthy = score_model(artifact, scen["healthy"].dataset.signals)
        damaged = score_model(artifact, scen["hit"].dataset.signals)
        healthy_max = [max(s.knn_score for s in e.location_scores) for e in healthy.events]
        damaged_max = [max(s.knn_score for s in e.location_scores) for e in damaged.events]
        assert len(healthy_max) + len(damaged_max) >= 50
        assert min(damaged_max) > np.quantile(healthy_max, 0.95)
