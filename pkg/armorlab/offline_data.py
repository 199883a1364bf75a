# pylint: disable=invalid-name
"""
Offline datasets of (s, a, r, s') tuples.

See <https://armorlab.readthedocs.io> for usage examples.

State-action pairs are drawn i.i.d. from a behavior distribution mu over
(s, a); next states come from the true model and rewards are the true
reward plus optional bounded noise::

    behavior_from_policy(M, pi)
    behavior_policy(mu)
    sample_dataset(M_star, mu, n, seed, noise=None)
    empirical_distribution(D, n_states, n_actions)

Datasets are stored as JSON lines: a metadata object on the first line and
one [s, a, r, s_next] array per following line::

    save_dataset(D, path)
    load_dataset(path)
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from armorlab.mdp_core import Policy, evaluate

__all__ = ('Transition',
           'Dataset',
           'BehaviorDistribution',
           'DatasetFormatError',
           'behavior_from_policy',
           'behavior_policy',
           'sample_dataset',
           'empirical_distribution',
           'save_dataset',
           'load_dataset')

logger = logging.getLogger(__name__)


class DatasetFormatError(ValueError):
    """A dataset file could not be parsed; `line` is the 1-based line number."""

    def __init__(self, line, message):
        super().__init__("line %d: %s" % (line, message))
        self.line = line


class Transition(NamedTuple):
    """One observed tuple (s, a, r, s_next)."""

    s: int
    a: int
    r: float
    s_next: int


@dataclass(frozen=True)
class Dataset:
    """
    A list of transitions and the metadata that generated it.

    Attributes:
        transitions: tuple of Transition
        meta: dict with seed, n, behavior_id and noise_spec
    """

    transitions: tuple
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        """Normalize the transitions to a tuple and record n."""
        transitions = tuple(Transition(*t) for t in self.transitions)
        meta = dict(self.meta)
        if meta.get('n', len(transitions)) != len(transitions):
            raise ValueError("metadata n=%s but %d transitions"
                             % (meta['n'], len(transitions)))
        meta['n'] = len(transitions)
        object.__setattr__(self, 'transitions', transitions)
        object.__setattr__(self, 'meta', meta)

    @property
    def n(self):
        """Number of transitions."""
        return len(self.transitions)

    def as_arrays(self):
        """Return (s, a, r, s_next) as numpy arrays."""
        if not self.transitions:
            empty = np.zeros(0, dtype=int)
            return empty, empty, np.zeros(0), empty
        s, a, r, s_next = zip(*self.transitions)
        return (np.array(s, dtype=int), np.array(a, dtype=int),
                np.array(r, dtype=float), np.array(s_next, dtype=int))


@dataclass(frozen=True, eq=False)
class BehaviorDistribution:
    """
    Sampling distribution mu over state-action pairs.

    Attributes:
        weights: non-negative (n_states, n_actions) table summing to one
    """

    weights: np.ndarray

    def __post_init__(self):
        """Freeze and validate the weights."""
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2:
            raise ValueError("behavior weights must be an (n_states, n_actions) table")
        if np.any(w < 0) or not np.isclose(w.sum(), 1, rtol=0, atol=1e-12):
            raise ValueError("behavior weights must be non-negative and sum to one")
        w.setflags(write=False)
        object.__setattr__(self, 'weights', w)

    @property
    def behavior_id(self):
        """Short content hash identifying the distribution."""
        return hashlib.sha256(self.weights.tobytes()).hexdigest()[:12]


def behavior_from_policy(M, pi):
    """
    Use the discounted occupancy of a policy as the sampling distribution.

    Args:
        M: TabularMdp
        pi: Policy

    Returns:
        BehaviorDistribution equal to d^pi_M
    """
    d = evaluate(M, pi).occupancy
    return BehaviorDistribution(d / d.sum())


def behavior_policy(mu):
    """
    Return the conditional policy mu(a|s).

    States with zero mass get the uniform distribution over actions.

    Args:
        mu: BehaviorDistribution

    Returns:
        Policy
    """
    w = mu.weights
    mass = w.sum(axis=1, keepdims=True)
    n_actions = w.shape[1]
    table = np.where(mass > 0, w / np.where(mass > 0, mass, 1), 1 / n_actions)
    return Policy(table / table.sum(axis=1, keepdims=True))


def _check_noise(noise):
    if noise is None:
        return None
    sigma = float(noise)
    if not np.isfinite(sigma) or sigma < 0:
        raise ValueError("reward noise half-width must be a finite number >= 0")
    return sigma


def sample_dataset(M_star, mu, n, seed, noise=None, behavior_id=None):
    """
    Draw an offline dataset.

    Each record has (s, a) ~ mu, s' ~ P*(.|s, a) and r = R*(s, a) plus a
    uniform draw on [-noise, noise], clipped so that r stays in [0, 1].
    The result is a pure function of the arguments.

    Args:
        M_star: true TabularMdp
        mu: BehaviorDistribution over (s, a)
        n: number of transitions, at least 1
        seed: integer seed for numpy.random.default_rng
        noise: half-width of the reward noise, or None for exact rewards
        behavior_id: label recorded in the metadata (default: hash of mu)

    Returns:
        Dataset
    """
    if int(n) != n or n < 1:
        raise ValueError("dataset size n must be a positive integer, got %r" % (n,))
    n = int(n)
    sigma = _check_noise(noise)
    if mu.weights.shape != (M_star.n_states, M_star.n_actions):
        raise ValueError("behavior distribution shape %s does not match the MDP"
                         % (mu.weights.shape,))

    rng = np.random.default_rng(seed)
    flat = rng.choice(mu.weights.size, size=n, p=mu.weights.ravel())
    s, a = np.divmod(flat, M_star.n_actions)
    cdf = np.cumsum(M_star.transition[s, a], axis=-1)
    cdf /= cdf[:, -1:]
    s_next = np.argmax(cdf > rng.random(n)[:, None], axis=1)
    r = M_star.reward[s, a]
    if sigma:
        r = np.clip(r + rng.uniform(-sigma, sigma, size=n), 0, 1)

    meta = {'seed': int(seed),
            'n': n,
            'behavior_id': behavior_id or mu.behavior_id,
            'noise_spec': sigma}
    transitions = [Transition(int(si), int(ai), float(ri), int(ti))
                   for si, ai, ri, ti in zip(s, a, r, s_next)]
    logger.debug("sampled %d transitions with seed %s", n, seed)
    return Dataset(tuple(transitions), meta)


def empirical_distribution(D, n_states, n_actions):
    """Return the (s, a) frequency table of a dataset."""
    s, a, _, _ = D.as_arrays()
    counts = np.zeros((n_states, n_actions))
    np.add.at(counts, (s, a), 1)
    return counts / max(D.n, 1)


def save_dataset(D, path):
    """
    Write a dataset as JSON lines.

    Args:
        D: Dataset
        path: output file name
    """
    with open(path, 'w', encoding='utf-8') as f:
        f.write(json.dumps(D.meta, sort_keys=True) + '\n')
        for t in D.transitions:
            f.write(json.dumps([t.s, t.a, t.r, t.s_next]) + '\n')


def _parse_record(line_no, text):
    try:
        record = json.loads(text)
    except json.JSONDecodeError as err:
        raise DatasetFormatError(line_no, "invalid JSON (%s)" % err.msg) from err
    if not isinstance(record, list) or len(record) != 4:
        raise DatasetFormatError(line_no, "expected [s, a, r, s_next]")
    s, a, r, s_next = record
    for name, value in (('s', s), ('a', a), ('s_next', s_next)):
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise DatasetFormatError(line_no, "%s must be a non-negative integer" % name)
    if isinstance(r, bool) or not isinstance(r, (int, float)) or not np.isfinite(r):
        raise DatasetFormatError(line_no, "r must be a finite number")
    return Transition(s, a, float(r), s_next)


def load_dataset(path):
    """
    Read a dataset written by `save_dataset`.

    Args:
        path: input file name

    Returns:
        Dataset

    Raises:
        DatasetFormatError: for a missing header or malformed record
    """
    with open(path, 'r', encoding='utf-8') as f:
        lines = f.read().splitlines()
    if not lines:
        raise DatasetFormatError(1, "missing metadata header")
    try:
        meta = json.loads(lines[0])
    except json.JSONDecodeError as err:
        raise DatasetFormatError(1, "invalid metadata header (%s)" % err.msg) from err
    if not isinstance(meta, dict):
        raise DatasetFormatError(1, "metadata header must be a JSON object")

    transitions = [_parse_record(i, text)
                   for i, text in enumerate(lines[1:], start=2) if text.strip()]
    if meta.get('n', len(transitions)) != len(transitions):
        raise DatasetFormatError(len(lines), "header says n=%s but found %d records"
                                 % (meta['n'], len(transitions)))
    return Dataset(tuple(transitions), meta)
