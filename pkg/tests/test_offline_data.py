# pylint: disable=invalid-name
"""Tests for dataset sampling and storage."""
import json

import numpy as np
import pytest

import armorlab as al


@pytest.fixture
def uniform_mu():
    """Uniform distribution over the four state-action pairs of the chain."""
    return al.BehaviorDistribution(np.full((2, 2), 0.25))


def test_same_seed_same_dataset(two_state, uniform_mu):
    """Datasets are a pure function of their arguments."""
    D1 = al.sample_dataset(two_state, uniform_mu, 200, seed=4, noise=0.1)
    D2 = al.sample_dataset(two_state, uniform_mu, 200, seed=4, noise=0.1)
    D3 = al.sample_dataset(two_state, uniform_mu, 200, seed=5, noise=0.1)
    assert D1.transitions == D2.transitions
    assert D1.transitions != D3.transitions
    assert D1.meta == {'seed': 4, 'n': 200, 'behavior_id': uniform_mu.behavior_id,
                       'noise_spec': 0.1}


def test_transitions_follow_the_model(two_state, uniform_mu):
    """Deterministic dynamics are reproduced exactly; rewards are exact without noise."""
    D = al.sample_dataset(two_state, uniform_mu, 500, seed=1)
    expected_next = {(0, 0): 0, (0, 1): 1, (1, 0): 1, (1, 1): 0}
    for t in D.transitions:
        assert t.s_next == expected_next[(t.s, t.a)]
        assert t.r == two_state.reward[t.s, t.a]


def test_point_mass_behavior(two_state):
    """A point-mass behavior only produces its own pair."""
    mu = al.BehaviorDistribution([[0, 0], [0, 1]])
    D = al.sample_dataset(two_state, mu, 50, seed=0)
    assert {(t.s, t.a) for t in D.transitions} == {(1, 1)}


def test_reward_noise_is_clipped(two_state, uniform_mu):
    """Noisy rewards stay in [0, 1] and differ from the exact ones."""
    D = al.sample_dataset(two_state, uniform_mu, 500, seed=2, noise=0.5)
    _, _, r, _ = D.as_arrays()
    assert np.all((r >= 0) & (r <= 1))
    s, a, _, _ = D.as_arrays()
    assert np.any(r != two_state.reward[s, a])


def test_empirical_distribution_approaches_mu(two_state):
    """Frequencies converge to mu."""
    w = np.array([[0.1, 0.2], [0.3, 0.4]])
    D = al.sample_dataset(two_state, al.BehaviorDistribution(w), 20000, seed=3)
    freq = al.empirical_distribution(D, 2, 2)
    assert freq.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(freq, w, atol=0.02)


def test_behavior_policy_conditionals():
    """mu(a|s) with a uniform row where the state has no mass."""
    mu = al.BehaviorDistribution([[0.2, 0.6], [0.0, 0.0], [0.2, 0.0]])
    pi = al.behavior_policy(mu)
    np.testing.assert_allclose(pi.table, [[0.25, 0.75], [0.5, 0.5], [1.0, 0.0]])


def test_behavior_from_policy(two_state, go_stay):
    """The occupancy of a policy is a valid behavior distribution."""
    mu = al.behavior_from_policy(two_state, go_stay)
    assert mu.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert mu.weights[0, 1] == pytest.approx(0.1)
    assert mu.weights[1, 0] == pytest.approx(0.9)


def test_invalid_arguments(two_state, uniform_mu):
    """Bad sizes, noise and weights are rejected."""
    with pytest.raises(ValueError):
        al.sample_dataset(two_state, uniform_mu, 0, seed=0)
    with pytest.raises(ValueError):
        al.sample_dataset(two_state, uniform_mu, 10, seed=0, noise=-1)
    with pytest.raises(ValueError):
        al.sample_dataset(two_state, al.BehaviorDistribution([[1.0]]), 10, seed=0)
    with pytest.raises(ValueError):
        al.BehaviorDistribution([[0.5, 0.6]])


def test_dataset_file(tmp_path, two_state, uniform_mu):
    """A saved dataset loads back with its metadata header."""
    D = al.sample_dataset(two_state, uniform_mu, 30, seed=9, noise=0.2)
    path = tmp_path / 'data.jsonl'
    al.save_dataset(D, path)
    lines = path.read_text(encoding='utf-8').splitlines()
    assert len(lines) == 31
    assert json.loads(lines[0])['seed'] == 9
    loaded = al.load_dataset(path)
    assert loaded.transitions == D.transitions
    assert loaded.meta == D.meta


def test_malformed_record_reports_line(tmp_path):
    """A bad record raises DatasetFormatError with its line number."""
    path = tmp_path / 'bad.jsonl'
    path.write_text('{"n": 2}\n[0, 1, 0.5, 1]\n[0, -1, 0.5, 1]\n', encoding='utf-8')
    with pytest.raises(al.DatasetFormatError) as err:
        al.load_dataset(path)
    assert err.value.line == 3


@pytest.mark.parametrize('text', ['', 'not json\n', '{"n": 3}\n[0, 0, 0.0, 0]\n',
                                  '{}\n[0, 0, "r", 0]\n'])
def test_bad_files(tmp_path, text):
    """Missing header, bad header, wrong count and bad reward are all format errors."""
    path = tmp_path / 'bad.jsonl'
    path.write_text(text, encoding='utf-8')
    with pytest.raises(al.DatasetFormatError):
        al.load_dataset(path)


def test_header_only_file_is_empty_dataset(tmp_path):
    """A file with only the metadata line holds zero transitions."""
    path = tmp_path / 'empty.jsonl'
    path.write_text('{"seed": 1, "n": 0}\n', encoding='utf-8')
    D = al.load_dataset(path)
    assert D.n == 0
    assert D.transitions == ()
    assert D.meta['seed'] == 1


def test_hand_written_file(tmp_path):
    """Records are [s, a, r, s_next]; integer rewards are read as floats."""
    path = tmp_path / 'two.jsonl'
    path.write_text('{"seed": 7}\n[0, 1, 1, 1]\n[1, 0, 0.25, 0]\n', encoding='utf-8')
    D = al.load_dataset(path)
    assert D.n == 2
    assert D.transitions == (al.Transition(0, 1, 1.0, 1), al.Transition(1, 0, 0.25, 0))
    s, a, r, s_next = D.as_arrays()
    np.testing.assert_array_equal(s, [0, 1])
    np.testing.assert_array_equal(a, [1, 0])
    np.testing.assert_array_equal(r, [1.0, 0.25])
    np.testing.assert_array_equal(s_next, [1, 0])
