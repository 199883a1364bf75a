"""Shared fixtures for the armorlab tests."""
import matplotlib
import numpy as np
import pytest

import armorlab as al

matplotlib.use('Agg')


def _bandit(rewards, gamma=0.5):
    k = len(rewards)
    return al.TabularMdp(np.ones((1, k, 1)), np.array([rewards], dtype=float), gamma, np.ones(1))


@pytest.fixture
def bandit():
    """Factory for one-state MDPs with one reward per action."""
    return _bandit


@pytest.fixture
def two_state():
    """Deterministic two-state chain: go reaches s1, staying in s1 pays 1."""
    return al.two_state_mdp(gamma=0.9)


@pytest.fixture
def go_stay():
    """Go in s0, stay in s1."""
    return al.Policy.from_actions((1, 0), 2)


@pytest.fixture
def two_state_inst():
    """Five-model two-state instance."""
    return al.two_state_instance()


@pytest.fixture
def separation():
    """Instance where return maximin and regret minimax disagree."""
    return al.separation_instance()


@pytest.fixture
def random_instances():
    """Twenty random instances from the default recipe."""
    recipe = al.RandomInstanceRecipe()
    return [al.generate_instance(recipe, seed) for seed in range(20)]
