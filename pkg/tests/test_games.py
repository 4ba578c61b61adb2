import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from teamsolve import (
    DimensionMismatchError,
    GameError,
    MixedProfile,
    TeamGame,
    adversary_best_response,
    adversary_payoff_vector,
    analytic_bounds,
    expected_utility,
    game_from_dict,
    game_to_dict,
    partial_gradient,
)
from teamsolve.games import LocalBlock, SchemaError, deviation_payoff_matrix

from conftest import random_profile, random_team_game
from oracles import exhaustive_expected_utility, finite_difference_gradient


def profile(team, adversary):
    return MixedProfile.of(team, adversary)


class TestExpectedUtility:
    def test_pure_profile_reads_tensor_entry(self, matching_pennies):
        assert expected_utility(
            matching_pennies, profile([[1, 0]], [0, 1])) == -1.0

    def test_uniform_symmetry(self, matching_pennies):
        assert expected_utility(
            matching_pennies, profile([[0.5, 0.5]], [0.5, 0.5])) == 0.0

    def test_matches_exhaustive_enumeration(self):
        rng = np.random.default_rng(42)
        game = TeamGame.dense(rng.uniform(-1, 1, size=(2, 2, 2)))
        team, adversary = random_profile(rng, game)
        expected = exhaustive_expected_utility(game.payoff_tensor(), team,
                                               adversary)
        got = expected_utility(game, profile(team, adversary))
        assert got == pytest.approx(expected, abs=1e-12)

    def test_dimension_mismatch_names_player(self, matching_pennies):
        with pytest.raises(DimensionMismatchError) as err:
            expected_utility(matching_pennies,
                             profile([[0.5, 0.25, 0.25]], [0.5, 0.5]))
        assert err.value.player == 0
        assert "player 0" in str(err.value)

    def test_invalid_simplex_rejected(self, matching_pennies):
        with pytest.raises(DimensionMismatchError):
            expected_utility(matching_pennies,
                             profile([[0.7, 0.7]], [0.5, 0.5]))

    @settings(max_examples=50, deadline=None)
    @given(lam=st.floats(0.0, 1.0), seed=st.integers(0, 10_000))
    def test_multilinearity_in_each_player(self, lam, seed):
        rng = np.random.default_rng(seed)
        game = random_team_game(rng)
        team, adversary = random_profile(rng, game)
        other = tuple(rng.dirichlet(np.ones(k)) for k in game.action_sets)
        for i in range(game.n):
            blend = list(team)
            blend[i] = lam * team[i] + (1 - lam) * other[i]
            left = expected_utility(game, profile(blend, adversary))
            a = list(team)
            b = list(team)
            b[i] = other[i]
            right = (lam * expected_utility(game, profile(a, adversary))
                     + (1 - lam) * expected_utility(game,
                                                    profile(b, adversary)))
            assert left == pytest.approx(right, abs=1e-9)


class TestPartialGradient:
    def test_uniform_adversary_zeroes_pennies(self, matching_pennies):
        grad = partial_gradient(
            matching_pennies, profile([[0.3, 0.7]], [0.5, 0.5]), 0)
        assert np.allclose(grad, [0.0, 0.0])

    def test_row_expectations(self, matching_pennies):
        grad = partial_gradient(
            matching_pennies, profile([[0.5, 0.5]], [1.0, 0.0]), 0)
        assert np.allclose(grad, [1.0, -1.0])

    def test_matches_central_finite_differences(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            game = random_team_game(rng)
            team, adversary = random_profile(rng, game)
            player = int(rng.integers(game.n))
            fd = finite_difference_gradient(game.payoff_tensor(), team,
                                            adversary, player)
            grad = partial_gradient(game, profile(team, adversary), player)
            assert np.max(np.abs(grad - fd)) < 1e-5

    def test_fixing_pure_action_reproduces_components(self):
        rng = np.random.default_rng(12)
        game = random_team_game(rng)
        team, adversary = random_profile(rng, game)
        grad = partial_gradient(game, profile(team, adversary), 0)
        for a in range(game.action_sets[0]):
            pinned = list(team)
            pinned[0] = np.zeros(game.action_sets[0])
            pinned[0][a] = 1.0
            val = expected_utility(game, profile(pinned, adversary))
            assert grad[a] == pytest.approx(val, abs=1e-12)

    def test_player_out_of_range(self, matching_pennies):
        with pytest.raises(DimensionMismatchError):
            partial_gradient(matching_pennies,
                             profile([[0.5, 0.5]], [0.5, 0.5]), 1)


class TestAdversaryBestResponse:
    def test_column_read(self, matching_pennies):
        assert adversary_best_response(matching_pennies,
                                       [np.array([1.0, 0.0])]) == (0, 1.0)

    def test_tie_breaks_to_lowest_index(self, matching_pennies):
        action, value = adversary_best_response(matching_pennies,
                                                [np.array([0.5, 0.5])])
        assert action == 0 and value == 0.0

    def test_value_matches_enumeration(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            game = random_team_game(rng)
            team, _ = random_profile(rng, game)
            action, value = adversary_best_response(game, team)
            per_action = []
            for b in range(game.adversary_actions):
                one_hot = np.zeros(game.adversary_actions)
                one_hot[b] = 1.0
                per_action.append(exhaustive_expected_utility(
                    game.payoff_tensor(), team, one_hot))
            assert value == pytest.approx(max(per_action), abs=1e-12)
            assert action == int(np.argmax(per_action))

    def test_pure_actions_suffice(self):
        rng = np.random.default_rng(22)
        game = random_team_game(rng)
        team, _ = random_profile(rng, game)
        _, value = adversary_best_response(game, team)
        vec = adversary_payoff_vector(game, team)
        for _ in range(100):
            mixed = rng.dirichlet(np.ones(game.adversary_actions))
            assert float(vec @ mixed) <= value + 1e-9


class TestAnalyticBounds:
    def test_pennies_lipschitz_is_two(self, matching_pennies):
        bounds = analytic_bounds(matching_pennies)
        assert bounds.lipschitz == pytest.approx(2.0)
        assert bounds.smoothness == pytest.approx(4.0)
        assert bounds.source == "analytic"

    def test_zero_game(self):
        game = TeamGame.dense(np.zeros((2, 2)))
        bounds = analytic_bounds(game)
        assert bounds.lipschitz == 0.0 and bounds.smoothness == 0.0

    def test_sampled_lipschitz_audit(self):
        rng = np.random.default_rng(31)
        for _ in range(5):
            game = random_team_game(rng)
            lip = analytic_bounds(game).lipschitz
            tensor = game.payoff_tensor()
            for _ in range(200):
                t1, a1 = random_profile(rng, game)
                t2, a2 = random_profile(rng, game)
                u1 = expected_utility(game, profile(t1, a1))
                u2 = expected_utility(game, profile(t2, a2))
                dist = math.sqrt(
                    sum(float((x - y) @ (x - y))
                        for x, y in zip(t1, t2))
                    + float((a1 - a2) @ (a1 - a2)))
                assert abs(u1 - u2) <= lip * dist + 1e-12
            del tensor


class TestDeviationMatrix:
    def test_row_average_recovers_payoff_vector(self):
        rng = np.random.default_rng(41)
        game = random_team_game(rng)
        team, _ = random_profile(rng, game)
        vec = adversary_payoff_vector(game, team)
        for i in range(game.n):
            C = deviation_payoff_matrix(game, team, i)
            assert np.allclose(team[i] @ C, vec, atol=1e-12)


class TestPolytensor:
    def blocks_game(self):
        blocks = [
            LocalBlock((0,), True, np.array([[1.0, -1.0], [-1.0, 1.0]])),
            LocalBlock((1,), False, np.array([0.5, 0.25])),
            LocalBlock((0, 1), True,
                       np.arange(8, dtype=float).reshape(2, 2, 2) / 10.0),
        ]
        return TeamGame.polytensor([2, 2], 2, blocks)

    def test_matches_materialized_tensor(self):
        game = self.blocks_game()
        dense = TeamGame.dense(game.payoff_tensor())
        rng = np.random.default_rng(51)
        for _ in range(20):
            team, adversary = random_profile(rng, game)
            p = profile(team, adversary)
            assert expected_utility(game, p) == pytest.approx(
                expected_utility(dense, p), abs=1e-12)
            for i in range(2):
                assert np.allclose(partial_gradient(game, p, i),
                                   partial_gradient(dense, p, i),
                                   atol=1e-12)
                assert np.allclose(
                    deviation_payoff_matrix(game, team, i),
                    deviation_payoff_matrix(dense, team, i), atol=1e-12)

    def test_v_max_default_bounds_samples(self):
        game = self.blocks_game()
        # The default bound sums per-block maxima, so every sample obeys it.
        for a, b in game.pure_profiles():
            assert abs(game.payoff(a, b)) <= game.v_max + 1e-12

    def test_explicit_v_max_violation_rejected(self):
        blocks = [LocalBlock((0,), False, np.array([3.0, 0.0]))]
        with pytest.raises(GameError):
            TeamGame.polytensor([2], 2, blocks, v_max=1.0)


class TestJsonSchema:
    def doc(self):
        return {
            "n": 1,
            "actions": [2],
            "adversary_actions": 2,
            "payoff": {"kind": "dense",
                       "entries": [[[0, 0], 1, 1], [[0, 1], -1, 1],
                                   [[1, 0], -1, 1], [[1, 1], 1, 1]]},
        }

    def test_round_trip(self, matching_pennies):
        game = game_from_dict(self.doc())
        assert np.array_equal(game.payoff_tensor(),
                              matching_pennies.payoff_tensor())
        assert game_to_dict(game) == self.doc()

    def test_missing_field_path(self):
        doc = self.doc()
        del doc["actions"]
        with pytest.raises(SchemaError) as err:
            game_from_dict(doc)
        assert err.value.path == "actions"

    def test_entry_index_out_of_range(self):
        doc = self.doc()
        doc["payoff"]["entries"][0][0] = [5, 0]
        with pytest.raises(SchemaError) as err:
            game_from_dict(doc)
        assert "payoff.entries[0]" in str(err.value)

    def test_rational_v_max(self):
        doc = self.doc()
        doc["v_max"] = [3, 2]
        game = game_from_dict(doc)
        assert game.v_max == 1.5

    def test_v_max_too_small_rejected(self):
        doc = self.doc()
        doc["v_max"] = [1, 2]
        with pytest.raises(GameError):
            game_from_dict(doc)
