"""Stochastic forward-pass sampling and the two epistemic variances."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mosuq.calibrate import CalibrationScale
from mosuq.datagen import gen_ood_shift, split_dataset
from mosuq.errors import ConfigError, InputError
from mosuq.mcdropout import MCConfig, mc_forward, mc_forward_dataset, row_seed, variance_of
from mosuq.net import ArchConfig, init_params

from conftest import FIXTURE_MC, fixture_gen_config


def tiny_params(seed=0, dropout_p=0.5):
    arch = ArchConfig(input_dim=3, trunk_dims=(4,), head_hidden_dim=4, dropout_p=dropout_p)
    return init_params(arch, seed=seed)


class TestVarianceOf:
    def test_hand_worked_triple(self):
        assert variance_of([1.0, 2.0, 3.0]) == 2.0 / 3.0

    def test_all_equal_is_exactly_zero(self):
        assert variance_of([0.1 + 0.2] * 7) == 0.0

    def test_single_sample_is_zero(self):
        assert variance_of([42.0]) == 0.0

    def test_empty_rejected(self):
        with pytest.raises(InputError):
            variance_of([])

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(st.floats(-1, 1), min_size=2, max_size=10),
        st.floats(-1e3, 1e3),
    )
    def test_shift_invariance(self, samples, shift):
        """Adding a constant to every sample leaves the variance unchanged.

        Samples are unit scale here because the shifted inputs x + c are
        rounded to the nearest double before the variance routine ever sees
        them. That rounding alone perturbs the variance by roughly
        2 * max|x - mean| * ulp(c), so for wide samples no algorithm can
        reach 1e-12 absolute; at unit scale the worst observed error is
        about 1e-13.
        """
        base = variance_of(samples)
        shifted = variance_of([x + shift for x in samples])
        assert shifted == pytest.approx(base, abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(st.floats(-100, 100), min_size=2, max_size=10),
        st.floats(-1e3, 1e3),
    )
    def test_shift_invariance_wide_samples(self, samples, shift):
        """Same property at wider sample scale, with a tolerance that
        covers the irreducible input-representation rounding (worst
        measured error 1.7e-11 over 4e5 random trials)."""
        base = variance_of(samples)
        shifted = variance_of([x + shift for x in samples])
        assert shifted == pytest.approx(base, abs=1e-10)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-10, 10), min_size=2, max_size=10), st.floats(-4, 4))
    def test_quadratic_scaling(self, samples, factor):
        base = variance_of(samples)
        scaled = variance_of([factor * x for x in samples])
        assert scaled == pytest.approx(factor**2 * base, rel=1e-9, abs=1e-12)


class TestMCConfig:
    def test_defaults(self):
        cfg = MCConfig()
        assert cfg.num_passes == 25
        assert cfg.dropout_p == 0.5

    @pytest.mark.parametrize("kwargs", [
        {"num_passes": 0},
        {"dropout_p": 1.0},
        {"dropout_p": -0.2},
        {"seed": -1},
    ])
    def test_validation(self, kwargs):
        with pytest.raises(ConfigError):
            MCConfig(**kwargs)


class TestMcForward:
    def test_no_dropout_means_no_epistemic_variance(self):
        params = tiny_params()
        result = mc_forward(params, np.ones(3), MCConfig(num_passes=8, dropout_p=0.0, seed=1))
        assert len(set(result.y_samples)) == 1
        assert result.epi_pred_var == 0.0
        assert result.epi_dist_var == 0.0

    def test_single_pass_means_no_epistemic_variance(self):
        params = tiny_params()
        result = mc_forward(params, np.ones(3), MCConfig(num_passes=1, dropout_p=0.5, seed=1))
        assert result.epi_pred_var == 0.0
        assert result.epi_dist_var == 0.0

    def test_fixed_seed_reproduces_result_bit_for_bit(self):
        params = tiny_params(seed=4)
        cfg = MCConfig(num_passes=25, dropout_p=0.5, seed=31)
        x = np.array([0.2, -0.7, 1.1])
        assert mc_forward(params, x, cfg) == mc_forward(params, x, cfg)

    def test_pass_results_do_not_depend_on_total_pass_count(self):
        """Each pass draws from its own (seed, index) substream."""
        params = tiny_params(seed=4)
        x = np.array([0.2, -0.7, 1.1])
        short = mc_forward(params, x, MCConfig(num_passes=3, dropout_p=0.5, seed=9))
        long = mc_forward(params, x, MCConfig(num_passes=10, dropout_p=0.5, seed=9))
        assert long.y_samples[:3] == short.y_samples
        assert long.s_samples[:3] == short.s_samples

    def test_summary_fields_follow_from_samples(self):
        params = tiny_params(seed=2)
        result = mc_forward(params, np.zeros(3), MCConfig(num_passes=12, dropout_p=0.5, seed=0))
        assert result.y_mean == pytest.approx(np.mean(result.y_samples), abs=1e-15)
        assert result.s_mean == pytest.approx(np.mean(result.s_samples), abs=1e-15)
        assert result.epi_pred_var == variance_of(result.y_samples)
        assert result.epi_dist_var == variance_of(result.s_samples)
        assert result.aleatoric_var == pytest.approx(
            np.mean(np.exp(result.s_samples)), rel=1e-12
        )

    def test_calibration_scales_only_the_aleatoric_variance(self):
        params = tiny_params(seed=2)
        cfg = MCConfig(num_passes=10, dropout_p=0.5, seed=5)
        x = np.array([0.4, 0.4, -0.1])
        plain = mc_forward(params, x, cfg)
        scaled = mc_forward(params, x, cfg, scale=CalibrationScale.from_r(2.0))
        assert scaled.aleatoric_var == pytest.approx(4.0 * plain.aleatoric_var, rel=1e-12)
        assert scaled.epi_pred_var == plain.epi_pred_var
        assert scaled.epi_dist_var == plain.epi_dist_var
        assert scaled.y_samples == plain.y_samples
        assert scaled.s_samples == plain.s_samples


class TestMcForwardDataset:
    def test_rows_are_independent_of_batch_composition(self):
        params = tiny_params(seed=6)
        cfg = MCConfig(num_passes=5, dropout_p=0.5, seed=17)
        features = np.random.default_rng(3).normal(size=(4, 3))
        full = mc_forward_dataset(params, features, cfg)
        row2 = mc_forward(params, features[2], replace(cfg, seed=row_seed(17, 2)))
        assert full[2] == row2

    def test_requires_matrix_input(self):
        params = tiny_params()
        with pytest.raises(InputError):
            mc_forward_dataset(params, np.zeros(3), MCConfig())

    def test_row_seeds_differ(self):
        seeds = {row_seed(0, i) for i in range(100)}
        assert len(seeds) == 100


class TestTrainedModelSensitivity:
    def test_mean_distributional_variance_rises_off_distribution(self, hetero_runs):
        """Shifted inputs produce higher mean epi_dist_var than in-domain ones.

        Checked at 95% confidence (normal approximation over 500 inputs per
        pool) on the first fixture model.
        """
        run = hetero_runs[0]
        cfg = fixture_gen_config(run.seed)
        ood = gen_ood_shift(cfg, 3.0)
        _, _, ood_test = split_dataset(ood, (5 / 7, 1 / 7, 1 / 7), seed=run.seed)
        in_feats = run.test_split.features()[:500]
        ood_feats = ood_test.features()[:500]
        in_vars = np.array(
            [r.epi_dist_var for r in mc_forward_dataset(run.params, in_feats, FIXTURE_MC)]
        )
        ood_vars = np.array(
            [r.epi_dist_var for r in mc_forward_dataset(run.params, ood_feats, FIXTURE_MC)]
        )
        gap = ood_vars.mean() - in_vars.mean()
        stderr = math.sqrt(in_vars.var(ddof=1) / 500 + ood_vars.var(ddof=1) / 500)
        assert gap > 1.645 * stderr
