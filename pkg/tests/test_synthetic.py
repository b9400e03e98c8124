"""Synthetic scenario kinds and the rater panel simulator."""

import numpy as np
import pytest

from dspr.dataset import consistency_filter
from dspr.pipeline import risk_rows
from dspr.risk import DsprParams, risk_vector
from dspr.scene import validate_panel
from dspr.synthetic import (
    KINDS,
    RaterProfile,
    aggregate_risk,
    default_profiles,
    default_suite,
    gen_scenario,
    simulate_raters,
)

PARAMS = DsprParams()


class TestGenScenario:
    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            gen_scenario("warp_drive", 10.0, 0)

    def test_duration_floor(self):
        with pytest.raises(ValueError):
            gen_scenario("free_flow", 1.0, 0)

    def test_scenarios_validate_and_are_bounded(self):
        for kind in KINDS:
            s = gen_scenario(kind, 8.0, 3)
            assert len(s.frames) == 80
            assert s.frequency == 10.0
            for f in s.frames:
                assert f.ego.speed <= 40.0 + 1e-9
                for o in f.objects:
                    assert o.state.speed <= 40.0 + 1e-9

    def test_free_flow_never_triggers(self):
        s = gen_scenario("free_flow", 10.0, 11)
        for f in s.frames:
            _, breakdowns = risk_vector(f, PARAMS)
            assert all(not b.triggered for b in breakdowns)

    def test_lead_brake_triggers(self):
        s = gen_scenario("lead_brake", 10.0, 11)
        triggered = False
        for f in s.frames:
            _, breakdowns = risk_vector(f, PARAMS)
            triggered = triggered or any(b.triggered for b in breakdowns)
        assert triggered

    def test_same_seed_identical(self):
        a = gen_scenario("mixed", 9.0, 42)
        b = gen_scenario("mixed", 9.0, 42)
        assert len(a.frames) == len(b.frames)
        for fa, fb in zip(a.frames, b.frames):
            assert fa.ego == fb.ego
            assert fa.objects == fb.objects

    def test_different_seeds_differ(self):
        a = gen_scenario("mixed", 9.0, 1)
        b = gen_scenario("mixed", 9.0, 2)
        assert any(fa.ego != fb.ego for fa, fb in zip(a.frames, b.frames))

    def test_default_suite_composition(self):
        suite = default_suite(7, n_clips=10)
        assert len(suite) == 10
        kinds = [s.id.split("_", 1)[1] for s in suite]
        assert set(kinds) == set(KINDS)


class TestSimulateRaters:
    def test_profile_validation(self):
        with pytest.raises(ValueError):
            RaterProfile(thresholds=(5.0, 5.0, 60.0))
        with pytest.raises(ValueError):
            RaterProfile(noise_sd=-0.1)

    def test_identical_noiseless_raters_agree_everywhere(self):
        profiles = [RaterProfile((5.0, 20.0, 60.0), 0.0, 0.0, 0)] * 6
        g = np.array([[0.0], [10.0], [30.0], [100.0]]).repeat(40, axis=1).T
        risk = np.zeros((4, 40))
        risk[:, 0] = [0.0, 10.0, 30.0, 100.0]
        panel = simulate_raters(risk, profiles, seed=0)
        assert panel.ratings.shape == (6, 4)
        assert (panel.ratings == panel.ratings[0]).all()
        assert list(panel.ratings[0]) == [1, 2, 3, 4]
        decisions = consistency_filter(panel)
        assert decisions == [1, 2, 3, 4]

    def test_below_first_cutpoint_all_ones(self):
        profiles = default_profiles(8, 0.0, 0)
        risk = np.zeros((30, 40))
        risk[:, 3] = 0.5   # well under every jittered first cut-point
        panel = simulate_raters(risk, profiles, seed=1)
        assert (panel.ratings == 1).all()

    def test_reaction_lag_shifts_response(self):
        profiles = [RaterProfile((5.0, 20.0, 60.0), 0.0, 0.0, 3)]
        risk = np.zeros((10, 40))
        risk[5:, 0] = 30.0   # step at frame 5
        panel = simulate_raters(risk, profiles, seed=0)
        assert list(panel.ratings[0][:8]) == [1] * 8
        assert list(panel.ratings[0][8:]) == [3, 3]

    def test_seeded_determinism(self):
        profiles = default_profiles(5, 0.4, 1)
        risk = np.abs(np.random.default_rng(3).normal(10, 8, size=(50, 40)))
        a = simulate_raters(risk, profiles, seed=9)
        b = simulate_raters(risk, profiles, seed=9)
        assert (a.ratings == b.ratings).all()

    def test_needs_profiles(self):
        with pytest.raises(ValueError):
            simulate_raters(np.zeros((5, 40)), [], seed=0)

    def test_noise_monotonically_fills_unlabeled_pool(self):
        # Monte-Carlo expectation over >= 20 seeds: more rating noise cannot
        # reduce the average unlabeled fraction after the consistency filter.
        scenario = gen_scenario("lead_brake", 6.0, 5)
        risk = risk_rows(scenario, PARAMS)[0]
        fractions = []
        for noise in (0.0, 0.3, 0.8):
            totals = []
            for seed in range(22):
                profiles = default_profiles(10, noise, 1, spread=0.2)
                panel = simulate_raters(risk, profiles, seed=seed)
                panel = validate_panel(panel, scenario)
                decisions = consistency_filter(panel)
                totals.append(np.mean([d is None for d in decisions]))
            fractions.append(np.mean(totals))
        assert fractions[0] <= fractions[1] + 1e-9
        assert fractions[1] <= fractions[2] + 1e-9


class TestAggregate:
    def test_max_over_slots(self):
        risk = np.zeros((3, 40))
        risk[1, 5] = 7.0
        risk[2, 39] = 2.0
        assert list(aggregate_risk(risk)) == [0.0, 7.0, 2.0]

    def test_empty(self):
        assert aggregate_risk(np.zeros((0, 40))).shape == (0,)
