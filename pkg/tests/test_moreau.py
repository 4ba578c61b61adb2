import math

import numpy as np
import pytest

from teamsolve import TeamGame, zero_sum_value
from teamsolve.games import LocalBlock, adversary_payoff_vector, analytic_bounds
from teamsolve.moreau import potential_g, proximal_point, stationarity

from conftest import random_profile, random_team_game
from oracles import grid_prox_minimum


def small_games(seed, count, two_player=False):
    """Dense games whose simplex product stays grid-searchable at 1e-3."""
    rng = np.random.default_rng(seed)
    games = []
    for _ in range(count):
        if two_player and rng.random() < 0.5:
            sizes = (2, 2)
        else:
            sizes = (int(rng.integers(2, 4)),)
        nb = int(rng.integers(2, 5))
        games.append(TeamGame.dense(rng.uniform(-1, 1, size=(*sizes, nb))))
    return games


class TestProximalPoint:
    def test_constant_game_returns_center(self, constant_game):
        center = [np.array([0.3, 0.7])]
        res = proximal_point(constant_game, center, ell=4.0, tol=1e-6)
        assert np.allclose(res.prox_point[0], center[0], atol=1e-9)
        assert res.potential_g == pytest.approx(2.0, abs=1e-9)
        assert res.reached

    def test_pennies_vertex_matches_grid(self, matching_pennies):
        res = proximal_point(matching_pennies, [np.array([1.0, 0.0])],
                             ell=4.0, tol=1e-3)
        grid_val, _ = grid_prox_minimum(matching_pennies.payoff_tensor(),
                                        [np.array([1.0, 0.0])], ell=4.0)
        assert abs(res.objective_value - grid_val) <= 2e-3

    def test_exact_minimax_center_is_stationary(self):
        rng = np.random.default_rng(23)
        for _ in range(5):
            M = rng.uniform(-1, 1, size=(3, 3))
            _, x, _ = zero_sum_value(M)
            game = TeamGame.dense(M)
            ell = analytic_bounds(game).smoothness
            res = proximal_point(game, [x], ell=ell, tol=1e-10)
            assert res.prox_distance <= math.sqrt(2 * res.tolerance / ell) + 1e-5

    def test_center_always_feasible(self):
        rng = np.random.default_rng(24)
        for game in small_games(25, 8, two_player=True):
            team, _ = random_profile(rng, game)
            ell = analytic_bounds(game).smoothness
            res = proximal_point(game, team, ell=ell, tol=1e-5)
            phi_center = float(np.max(adversary_payoff_vector(game, team)))
            assert res.objective_value <= phi_center + 1e-9
            assert res.tolerance > 0

    def test_planned_budget_matches_rate_formula(self, matching_pennies):
        lip = analytic_bounds(matching_pennies).lipschitz
        tol = 1e-4
        res = proximal_point(matching_pennies, [np.array([0.6, 0.4])],
                             ell=4.0, tol=tol)
        assert res.planned_iterations == math.ceil(
            2.0 * lip * lip / (4.0 * tol))
        assert res.reached and res.tolerance <= tol

    def test_iteration_cap_flags_unreached(self, matching_pennies):
        res = proximal_point(matching_pennies, [np.array([1.0, 0.0])],
                             ell=4.0, tol=1e-13, max_iters=3)
        assert res.tolerance > 0
        if not res.reached:
            assert res.iterations <= 3

    def test_grid_oracle_agreement(self):
        tol = 1e-3
        for game in small_games(26, 10, two_player=True):
            rng = np.random.default_rng(27)
            team, _ = random_profile(rng, game)
            ell = analytic_bounds(game).smoothness
            res = proximal_point(game, team, ell=ell, tol=tol)
            grid_val, _ = grid_prox_minimum(game.payoff_tensor(), team,
                                            ell=ell)
            assert abs(res.objective_value - grid_val) <= 2 * tol

    def test_polytensor_games_supported(self):
        blocks = [
            LocalBlock((0,), True, np.array([[1.0, -1.0], [-1.0, 1.0]])),
            LocalBlock((1,), True, np.array([[0.5, 0.0], [-0.5, 0.25]])),
        ]
        game = TeamGame.polytensor([2, 2], 2, blocks)
        team = (np.array([0.5, 0.5]), np.array([0.5, 0.5]))
        ell = analytic_bounds(game).smoothness
        res = proximal_point(game, team, ell=ell, tol=1e-6)
        dense = TeamGame.dense(game.payoff_tensor())
        res_dense = proximal_point(dense, team, ell=ell, tol=1e-6)
        assert res.objective_value == pytest.approx(
            res_dense.objective_value, abs=1e-5)


class TestPotential:
    def test_constant_game_everywhere(self, constant_game):
        rng = np.random.default_rng(31)
        for _ in range(5):
            team, _ = random_profile(rng, constant_game)
            val = potential_g(constant_game, team, ell=4.0, tol=1e-8)
            assert val == pytest.approx(2.0, abs=1e-8)

    def test_pennies_at_equilibrium_is_zero(self, matching_pennies):
        val = potential_g(matching_pennies, [np.array([0.5, 0.5])],
                          ell=4.0, tol=1e-6)
        assert abs(val) <= 1e-6 + 1e-6

    def test_bounded_by_payoff_and_diameter(self):
        rng = np.random.default_rng(32)
        for game in small_games(33, 5):
            ell = analytic_bounds(game).smoothness
            bound = game.v_max + ell * 2.0 * game.n
            for _ in range(20):
                team, _ = random_profile(rng, game)
                val = potential_g(game, team, ell=ell, tol=1e-4)
                assert abs(val) <= bound + 1e-9


class TestStationarity:
    def test_minimax_center_nearly_stationary(self):
        rng = np.random.default_rng(41)
        M = rng.uniform(-1, 1, size=(3, 3))
        _, x, _ = zero_sum_value(M)
        game = TeamGame.dense(M)
        ell = analytic_bounds(game).smoothness
        report = stationarity(game, [x], ell=ell, tol=1e-10)
        assert report.measure <= report.slack + 1e-4

    def test_pennies_vertex_far_from_stationary(self, matching_pennies):
        report = stationarity(matching_pennies, [np.array([1.0, 0.0])],
                              ell=4.0, tol=1e-8)
        assert report.measure > 0.5

    def test_constant_game_slack_only(self, constant_game):
        report = stationarity(constant_game, [np.array([0.3, 0.7])],
                              ell=4.0, tol=1e-8)
        assert report.measure == pytest.approx(report.slack)
        assert report.prox_distance == pytest.approx(0.0, abs=1e-12)

    def test_close_prox_relation_by_construction(self):
        rng = np.random.default_rng(42)
        for game in small_games(43, 5):
            team, _ = random_profile(rng, game)
            ell = analytic_bounds(game).smoothness
            report = stationarity(game, team, ell=ell, tol=1e-6)
            assert report.prox_distance <= report.measure / (2 * ell) + 1e-12


class TestSummedDeviationTransfer:
    def test_prox_distance_of_summed_deviation_function(self):
        """Stationarity transfers to the summed-deviation surrogate.

        At the prox point of a near-stationary center, the function
        summing each player's unilateral payoff (others pinned at the
        prox point) has a proximal point within measure/ell plus solver
        slack.  The summed function lives in a polytensor game whose
        blocks couple each player with the adversary.
        """
        rng = np.random.default_rng(44)
        maker = np.random.default_rng(45)
        games = [TeamGame.dense(maker.uniform(-1, 1, size=(2, 2,
                                                           int(maker.integers(2, 5)))))
                 for _ in range(4)]
        checked = 0
        for game in games:
            ell = max(analytic_bounds(game).smoothness, 1e-9)
            team, _ = random_profile(rng, game)
            res = proximal_point(game, team, ell=ell, tol=1e-9)
            anchor = res.prox_point
            measure = 2.0 * ell * res.prox_distance + 2.0 * math.sqrt(
                2.0 * res.tolerance * ell)
            blocks = []
            tensor = game.payoff_tensor()
            for i in range(game.n):
                axes = list(range(game.n))
                axes.remove(i)
                table = tensor
                shift = 0
                for pos, j in enumerate(axes):
                    table = np.tensordot(anchor[j], table,
                                         axes=([0], [j - shift]))
                    shift += 1
                blocks.append(LocalBlock((i,), True, table))
            summed = TeamGame.polytensor(game.action_sets,
                                         game.adversary_actions, blocks)
            res_w = proximal_point(summed, anchor, ell=ell, tol=1e-9)
            slack = (math.sqrt(2.0 * res_w.tolerance / ell)
                     + math.sqrt(2.0 * res.tolerance / ell))
            assert res_w.prox_distance <= measure / ell + slack + 1e-6
            checked += 1
        assert checked >= 2
