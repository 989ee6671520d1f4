import numpy as np
import pytest

from safegames import GameSpec
from safegames.envs import RandomGameParams, random_game


@pytest.fixture
def g1():
    """Single state, single action pair, safe self-loop."""
    return GameSpec(1, 1, 1,
                    transition=np.zeros((1, 1, 1), dtype=int),
                    reward=np.ones((1, 1, 1)),
                    constraint=np.array([2.0]),
                    gamma=0.5, gamma_h=0.9)


def _g2_transition():
    t = np.zeros((2, 2, 1), dtype=int)
    t[0, 0, 0] = 0  # safe self-loop
    t[0, 1, 0] = 1  # step into the absorbing unsafe state
    t[1, :, 0] = 1
    return t


@pytest.fixture
def g2():
    """Two states: safe self-loop at x0, absorbing h=-1 at x1; one adversary action."""
    return GameSpec(2, 2, 1,
                    transition=_g2_transition(),
                    reward=np.zeros((2, 2, 1)),
                    constraint=np.array([1.0, -1.0]),
                    gamma=0.95, gamma_h=0.9)


@pytest.fixture
def g2_rewarded():
    """G2 with reward 1 on every x0 row and 0 at x1."""
    reward = np.zeros((2, 2, 1))
    reward[0] = 1.0
    return GameSpec(2, 2, 1,
                    transition=_g2_transition(),
                    reward=reward,
                    constraint=np.array([1.0, -1.0]),
                    gamma=0.95, gamma_h=0.9)


def _g3_transition():
    t = np.empty((2, 2, 2), dtype=int)
    for u in range(2):
        for a in range(2):
            t[0, u, a] = 0 if u == a else 1
    t[1] = 1
    return t


@pytest.fixture
def g3():
    """Matching game: x0 stays safe only when the adversary matches the
    protagonist's action, so persistent safety is impossible."""
    return GameSpec(2, 2, 2,
                    transition=_g3_transition(),
                    reward=np.zeros((2, 2, 2)),
                    constraint=np.array([1.0, -1.0]),
                    gamma=0.95, gamma_h=0.9)


@pytest.fixture
def g3_matching_reward():
    """G3 variant paying 1 exactly when the actions match."""
    reward = np.zeros((2, 2, 2))
    for u in range(2):
        reward[:, u, u] = 1.0
    return GameSpec(2, 2, 2,
                    transition=_g3_transition(),
                    reward=reward,
                    constraint=np.array([1.0, -1.0]),
                    gamma=0.95, gamma_h=0.9)


def make_random_spec(seed, n_states=8, n_u=3, n_a=3, hazard_fraction=0.25,
                     gamma=0.95, gamma_h=0.99):
    return random_game(RandomGameParams(
        n_states=n_states, n_u=n_u, n_a=n_a,
        hazard_fraction=hazard_fraction, seed=seed,
        gamma=gamma, gamma_h=gamma_h))
