import math

import numpy as np
import pytest

from offloadmdp.dp import backward_induction
from offloadmdp.exceptions import PolicyLookupError, SizingError
from offloadmdp.heuristic import BaselinePolicy, HeuristicPolicy, TablePolicy
from offloadmdp.model import Action, ActionMode, Network, State
from offloadmdp.sim import (
    brute_force_value,
    episode_rng,
    exact_policy_evaluation,
    monte_carlo,
    run_episode,
    run_episodes,
    trace_monetary,
    trace_objective,
    trace_raw_energy,
)
from offloadmdp.verification import random_tiny_scenario

from conftest import make_profile, make_scenario


def always_wlan_scenario():
    profiles = (make_profile(0, cellular_rate=10.0, wlan_rate=15.0,
                             cellular_energy=0.7, wlan_energy=0.4),)
    return make_scenario(grid=(1, 1), profiles=profiles, flows=((30.0, 5),),
                         stay_prob=1.0, theta=1.0)


class TestRunEpisode:
    def test_zero_size_flow(self):
        sc = make_scenario(grid=(1, 1), stay_prob=1.0,
                           profiles=(make_profile(0, cellular_rate=2.0),),
                           flows=((0.0, 3),))
        ep = run_episode(sc, BaselinePolicy(sc), 0, np.random.default_rng(0))
        assert ep.monetary_cost == 0.0
        assert ep.raw_energy == 0.0
        assert ep.penalty_paid == 0.0
        assert ep.finish_rate == 1.0
        assert len(ep.trace) <= 1

    def test_baseline_finishes_in_two_slots_for_free(self):
        sc = always_wlan_scenario()
        ep = run_episode(sc, BaselinePolicy(sc), 0, np.random.default_rng(0))
        assert len(ep.trace) == 2
        assert ep.monetary_cost == 0.0
        assert ep.finished_flags == (True,)
        assert ep.raw_energy == pytest.approx(0.4 * 30)
        assert ep.weighted_energy == pytest.approx(0.4 * 30)
        assert [s.action for s in ep.trace] == [
            Action(Network.WLAN, (15,)),
            Action(Network.WLAN, (15,)),
        ]

    def test_totals_recomputable_from_trace(self):
        rng = np.random.default_rng(8)
        for _ in range(4):
            sc = random_tiny_scenario(rng)
            for policy in (BaselinePolicy(sc), HeuristicPolicy(sc)):
                ep = run_episode(sc, policy, 0, np.random.default_rng(11))
                assert trace_monetary(ep.trace, sc) == ep.monetary_cost
                assert trace_raw_energy(ep.trace, sc) == ep.raw_energy
                assert trace_objective(ep.trace, sc) == pytest.approx(
                    ep.objective, rel=1e-12, abs=1e-12
                )

    def test_penalty_charged_at_each_deadline(self):
        # no capacity to serve flow 1 fully by its deadline
        profiles = (make_profile(0, cellular_rate=1.0),)
        sc = make_scenario(grid=(1, 1), profiles=profiles, stay_prob=1.0,
                           flows=((3.0, 2), (2.0, 4)))

        def idle_policy(epoch, state):
            return Action.idle(2)

        ep = run_episode(sc, idle_policy, 0, np.random.default_rng(0))
        assert ep.penalty_paid == 2.0 * 3 + 2.0 * 2
        assert ep.finished_flags == (False, False)
        assert len(ep.trace) == sc.horizon

    def test_finished_flag_requires_meeting_deadline(self):
        profiles = (make_profile(0, cellular_rate=1.0),)
        sc = make_scenario(grid=(1, 1), profiles=profiles, stay_prob=1.0,
                           flows=((2.0, 1), (1.0, 4)))
        ep = run_episode(sc, BaselinePolicy(sc), 0, np.random.default_rng(0))
        # flow 0 finishes late (after t=1), flow 1 in time
        assert ep.finished_flags == (False, True)

    def test_lookup_failure_carries_slot_context(self):
        sc = make_scenario(flows=((3.0, 3),))
        _, pt = backward_induction(sc)

        class Broken:
            def __call__(self, epoch, state):
                raise PolicyLookupError("no entry")

        with pytest.raises(PolicyLookupError, match="slot 1"):
            run_episode(sc, Broken(), 0, np.random.default_rng(0))

    def test_theta_schedule_weights_energy_per_slot(self):
        profiles = (make_profile(0, cellular_rate=10.0, wlan_rate=15.0,
                                 cellular_energy=0.7, wlan_energy=0.4),)
        sc = make_scenario(grid=(1, 1), profiles=profiles, flows=((30.0, 5),),
                           stay_prob=1.0, theta_schedule=(0.0, 2.0, 0.0, 0.0, 0.0))
        ep = run_episode(sc, BaselinePolicy(sc), 0, np.random.default_rng(0))
        # slot 1 weighs nothing, slot 2 weighs double
        assert ep.weighted_energy == pytest.approx(2.0 * 0.4 * 15)
        assert ep.raw_energy == pytest.approx(0.4 * 30)


class TestMonteCarlo:
    def test_single_episode_report(self):
        sc = always_wlan_scenario()
        rep = monte_carlo(sc, BaselinePolicy(sc), 1, 5, label="baseline")
        ep = run_episode(sc, BaselinePolicy(sc), 0, episode_rng(5, 0))
        assert rep.mean_monetary_yen == ep.monetary_cost
        assert rep.sd_monetary == 0.0
        assert rep.mean_energy_joule == ep.raw_energy
        assert rep.episodes == 1
        assert rep.finish_rate == 1.0

    def test_same_seed_same_report(self):
        sc = make_scenario(flows=((4.0, 4),))
        r1 = monte_carlo(sc, BaselinePolicy(sc), 40, 9, label="baseline")
        r2 = monte_carlo(sc, BaselinePolicy(sc), 40, 9, label="baseline")
        assert r1 == r2

    def test_different_seed_changes_numbers(self):
        sc = make_scenario(flows=((4.0, 4),))
        r1 = monte_carlo(sc, BaselinePolicy(sc), 40, 9, label="baseline")
        r2 = monte_carlo(sc, BaselinePolicy(sc), 40, 10, label="baseline")
        assert r1 != r2

    def test_stderr_scales_with_episode_count(self):
        sc = make_scenario(grid=(2, 2), flows=((6.0, 6),), stay_prob=0.5)
        r1 = monte_carlo(sc, BaselinePolicy(sc), 600, 3, label="b")
        r2 = monte_carlo(sc, BaselinePolicy(sc), 1200, 3, label="b")
        ratio = r2.stderr_monetary() / r1.stderr_monetary()
        assert ratio == pytest.approx(1 / math.sqrt(2), rel=0.2)

    def test_fixed_start_location_honored(self):
        sc = make_scenario(flows=((4.0, 4),), start_location=1)
        eps = run_episodes(sc, BaselinePolicy(sc), 10, 0)
        assert all(ep.trace[0].location == 1 for ep in eps)

    def test_episode_streams_are_order_independent(self):
        g5_first = episode_rng(7, 5).random(4)
        _ = episode_rng(7, 0).random(4)
        g5_again = episode_rng(7, 5).random(4)
        assert np.array_equal(g5_first, g5_again)


class TestBruteForce:
    def test_zero_size_instance(self):
        sc = make_scenario(flows=((0.0, 2),))
        assert brute_force_value(sc, 0) == 0.0

    def test_single_epoch_hand_value(self):
        profiles = (make_profile(0, cellular_rate=1.0, wlan_rate=10.0),)
        sc = make_scenario(grid=(1, 1), profiles=profiles, flows=((5.0, 1),),
                           stay_prob=1.0, theta=0.0)
        assert brute_force_value(sc, 0) == 0.0  # serve everything on free WLAN

    def test_penalty_versus_price_tradeoff(self):
        # cellular only: serving costs 0.1875/Mbit, idling costs 2/Mbit
        profiles = (make_profile(0, cellular_rate=2.0),)
        sc = make_scenario(grid=(1, 1), profiles=profiles, flows=((4.0, 1),),
                           stay_prob=1.0, theta=0.0)
        assert brute_force_value(sc, 0) == pytest.approx(2 * 0.1875 + 2.0 * 2)

    def test_size_guard(self):
        sc = make_scenario(grid=(2, 2), flows=((20.0, 20),))
        with pytest.raises(SizingError):
            brute_force_value(sc, 0, node_budget=50)


class TestExactPolicyEvaluation:
    def test_dp_policy_is_a_fixed_point(self):
        sc = make_scenario(grid=(2, 1), flows=((3.0, 2), (2.0, 4)), theta=0.5)
        for mode in ActionMode:
            vt, pt = backward_induction(sc, mode)
            w = exact_policy_evaluation(sc, TablePolicy(pt))
            assert np.array_equal(w.values, vt.values)

    def test_idle_everywhere_pays_all_penalties(self):
        sc = make_scenario(grid=(2, 1), flows=((3.0, 2), (2.0, 4)))

        def idle(epoch, state):
            return Action.idle(2)

        w = exact_policy_evaluation(sc, idle)
        for loc in range(sc.n_locations):
            assert w.value(1, sc.initial_state(loc)) == pytest.approx(
                2.0 * (3 + 2), rel=1e-12
            )

    def test_monte_carlo_agrees_with_exact_value(self):
        sc = make_scenario(grid=(2, 1), flows=((3.0, 3),), theta=0.5,
                           start_location=0)
        w = exact_policy_evaluation(sc, BaselinePolicy(sc))
        rep = monte_carlo(sc, BaselinePolicy(sc), 4000, 17, label="baseline")
        exact = w.value(1, sc.initial_state(0))
        stderr = rep.sd_objective / math.sqrt(rep.episodes)
        assert abs(rep.mean_objective - exact) <= 4 * max(stderr, 1e-12)


class TestEnergyRepricing:
    def test_steeper_curve_prices_every_trace_lower(self):
        from offloadmdp.config import FlowConfig, ScenarioConfig
        from offloadmdp.scenario_gen import generate_scenario

        cfg = ScenarioConfig(
            grid_width=2, grid_height=2, ap_count=2, sigma_mbit=5.0,
            flows=[FlowConfig(total_size_mbit=40, deadline=6)], seed=13,
        )
        sc_f1 = generate_scenario(cfg)
        sc_f2 = generate_scenario(cfg.model_copy(update={"energy_curve": "f2"}))
        # identical layout, only the energy rates differ
        assert [l.wlan_available for l in sc_f1.locations] == [
            l.wlan_available for l in sc_f2.locations
        ]
        for ep in run_episodes(sc_f1, BaselinePolicy(sc_f1), 20, 21):
            if ep.raw_energy == 0.0:
                continue
            repriced = trace_raw_energy(ep.trace, sc_f2)
            assert repriced < ep.raw_energy
