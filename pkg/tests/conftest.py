import numpy as np
import pytest

from teamsolve import TeamGame

MP_TENSOR = np.array([[1.0, -1.0], [-1.0, 1.0]])


@pytest.fixture()
def matching_pennies():
    """Team player with actions {H, T} versus adversary with {h, t}."""
    return TeamGame.dense(MP_TENSOR)


@pytest.fixture()
def constant_game():
    return TeamGame.dense(np.full((2, 2), 2.0))


def random_team_game(rng, max_players=3, max_actions=3, max_adversary=4):
    n = int(rng.integers(1, max_players + 1))
    sizes = [int(rng.integers(2, max_actions + 1)) for _ in range(n)]
    nb = int(rng.integers(2, max_adversary + 1))
    return TeamGame.dense(rng.uniform(-1, 1, size=(*sizes, nb)))


def random_profile(rng, game):
    team = tuple(rng.dirichlet(np.ones(k)) for k in game.action_sets)
    adversary = rng.dirichlet(np.ones(game.adversary_actions))
    return team, adversary
