# pylint: disable=invalid-name
"""
Data loss, version spaces, and concentrability for finite model classes.

See <https://armorlab.readthedocs.io> for usage examples.

The loss of a model on a dataset is its transition log-likelihood minus
its squared reward error::

    L_D(M) = sum over D of [ ln P_M(s'|s,a) - (R_M(s,a) - r)**2 ]

A model that gives probability zero to an observed transition has loss
-inf.  The version space keeps every model whose loss is within alpha of
the best one::

    log_likelihood(M, D)
    squared_error(M, D)
    loss(M, D)
    build_version_space(mc, D, alpha)
    alpha_from_theory(class_size, delta, c=1)

Distribution-shift measures::

    on_support_error(M, M_star, w)
    concentrability(mc, pi, mu, M_star)
    standard_concentrability(pi, mu, M_star)

Model-class files::

    save_model_class(mc, path)
    load_model_class(path)
"""

import json
import logging
from dataclasses import dataclass

import numpy as np

from armorlab.mdp_core import evaluate, mdp_from_dict, mdp_to_dict

__all__ = ('ModelClass',
           'VersionSpace',
           'log_likelihood',
           'squared_error',
           'loss',
           'build_version_space',
           'alpha_from_theory',
           'on_support_error',
           'concentrability',
           'standard_concentrability',
           'save_model_class',
           'load_model_class')

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ModelClass:
    """
    Finite set of candidate models.

    Attributes:
        models: tuple of TabularMdp sharing states, actions, gamma and initial_dist
        truth_index: index of the true model, when it is known to be present
    """

    models: tuple
    truth_index: int = None

    def __post_init__(self):
        """Check the models are non-empty and mutually compatible."""
        models = tuple(self.models)
        if not models:
            raise ValueError("a model class needs at least one model")
        for i, M in enumerate(models[1:], start=1):
            if not M.same_shape(models[0]):
                raise ValueError("model %d does not share states, actions, gamma and "
                                 "initial_dist with model 0" % i)
        if self.truth_index is not None and not 0 <= self.truth_index < len(models):
            raise ValueError("truth_index %d is out of range" % self.truth_index)
        object.__setattr__(self, 'models', models)

    def __len__(self):
        return len(self.models)

    @property
    def truth(self):
        """The true model, or None when the class does not record it."""
        return None if self.truth_index is None else self.models[self.truth_index]


@dataclass(frozen=True, eq=False)
class VersionSpace:
    """
    Models whose loss is within alpha of the best loss.

    Attributes:
        member_indices: tuple of model indices in the version space
        losses: per-model loss L_D(M), possibly -inf
        alpha: threshold
        max_loss: largest finite loss
    """

    member_indices: tuple
    losses: np.ndarray
    alpha: float
    max_loss: float

    def __contains__(self, index):
        return index in self.member_indices

    def select(self, mc):
        """Return the member models of a model class, in index order."""
        return [mc.models[i] for i in self.member_indices]


def _check_indices(M, D):
    s, a, r, s_next = D.as_arrays()
    if D.n and (s.max() >= M.n_states or s_next.max() >= M.n_states
                or a.max() >= M.n_actions):
        raise ValueError("dataset indices exceed the model's %d states / %d actions"
                         % (M.n_states, M.n_actions))
    return s, a, r, s_next


def log_likelihood(M, D):
    """
    Transition log-likelihood of a dataset under a model.

    Args:
        M: TabularMdp
        D: Dataset

    Returns:
        sum of ln P_M(s'|s,a), or -inf if any observed transition has probability 0
    """
    s, a, _, s_next = _check_indices(M, D)
    p = M.transition[s, a, s_next]
    if np.any(p == 0):
        return -np.inf
    return float(np.sum(np.log(p)))


def squared_error(M, D):
    """Sum of (R_M(s,a) - r)**2 over a dataset."""
    s, a, r, _ = _check_indices(M, D)
    return float(np.sum((M.reward[s, a] - r)**2))


def loss(M, D):
    """
    Data loss of a model.

    Args:
        M: TabularMdp
        D: Dataset

    Returns:
        log_likelihood(M, D) - squared_error(M, D); -inf for zero-likelihood
        models and 0 for an empty dataset
    """
    ll = log_likelihood(M, D)
    if ll == -np.inf:
        return -np.inf
    return ll - squared_error(M, D)


def build_version_space(mc, D, alpha):
    """
    Keep every model whose loss is within alpha of the best loss.

    Args:
        mc: ModelClass
        D: Dataset
        alpha: non-negative threshold (may be inf)

    Returns:
        VersionSpace
    """
    alpha = float(alpha)
    if np.isnan(alpha) or alpha < 0:
        raise ValueError("alpha must be non-negative, got %r" % alpha)
    losses = np.array([loss(M, D) for M in mc.models])
    finite = np.isfinite(losses)
    if not np.any(finite):
        raise ValueError("every model gives zero likelihood to the dataset")
    max_loss = float(np.max(losses[finite]))
    members = tuple(int(i) for i in np.flatnonzero(finite)
                    if max_loss - losses[i] <= alpha)
    logger.debug("version space: %d of %d models at alpha=%g", len(members), len(mc), alpha)
    losses.setflags(write=False)
    return VersionSpace(member_indices=members, losses=losses, alpha=alpha, max_loss=max_loss)


def alpha_from_theory(class_size, delta, c=1.0):
    """
    Threshold c * ln(class_size / delta).

    Args:
        class_size: number of models, at least 1
        delta: failure probability in (0, 1]
        c: constant, at least 1

    Returns:
        alpha
    """
    if class_size < 1:
        raise ValueError("class_size must be at least 1")
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1], got %r" % delta)
    if c < 1:
        raise ValueError("c must be at least 1, got %r" % c)
    return c * np.log(class_size / delta)


def _error_table(M, M_star):
    """Per-pair TV(P_M, P*)**2 + (R_M - R*)**2."""
    if M.reward.shape != M_star.reward.shape:
        raise ValueError("models have different dimensions")
    tv = 0.5 * np.sum(np.abs(M.transition - M_star.transition), axis=-1)
    return tv**2 + (M.reward - M_star.reward)**2


def on_support_error(M, M_star, w):
    """
    Weighted model error against the true model.

    Args:
        M: TabularMdp
        M_star: true TabularMdp
        w: BehaviorDistribution or (n_states, n_actions) weights

    Returns:
        sum_{s,a} w(s,a) * [TV(P_M, P*)**2 + (R_M - R*)**2]
    """
    w = np.asarray(getattr(w, 'weights', w), dtype=float)
    if w.shape != M_star.reward.shape:
        raise ValueError("weights of shape %s do not match the model" % (w.shape,))
    return float(np.sum(w * _error_table(M, M_star)))


def concentrability(mc, pi, mu, M_star):
    """
    Generalized single-policy concentrability of a policy.

    The supremum over models of the model error under d^pi_{M*} divided by
    the model error under mu.  A zero numerator contributes 0 (also 0/0) and
    a positive numerator over a zero denominator gives inf.

    Args:
        mc: ModelClass
        pi: Policy
        mu: BehaviorDistribution
        M_star: true TabularMdp

    Returns:
        C(pi), possibly inf
    """
    d = evaluate(M_star, pi).occupancy
    worst = 0.0
    for M in mc.models:
        num = on_support_error(M, M_star, d)
        if num <= 0:
            continue
        den = on_support_error(M, M_star, mu)
        if den <= 0:
            return np.inf
        worst = max(worst, num / den)
    return worst


def standard_concentrability(pi, mu, M_star):
    """
    Return max d^pi(s,a)/mu(s,a) over pairs with d^pi > 0.

    Args:
        pi: Policy
        mu: BehaviorDistribution
        M_star: true TabularMdp

    Returns:
        the coefficient, inf when mu misses part of the support of d^pi
    """
    d = evaluate(M_star, pi).occupancy
    support = d > 0
    if np.any(mu.weights[support] == 0):
        return np.inf
    return float(np.max(d[support] / mu.weights[support]))


def save_model_class(mc, path):
    """Write a model class as {'models': [...], 'truth_index': k}."""
    doc = {'models': [mdp_to_dict(M) for M in mc.models], 'truth_index': mc.truth_index}
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(doc, f)


def load_model_class(path):
    """
    Read a model-class file.

    The file holds either a JSON array of MDP documents or an object with
    'models' and an optional 'truth_index'.

    Args:
        path: input file name

    Returns:
        ModelClass
    """
    with open(path, 'r', encoding='utf-8') as f:
        doc = json.load(f)
    if isinstance(doc, list):
        doc = {'models': doc}
    if 'models' not in doc:
        raise ValueError("model-class file needs a 'models' array")
    models = tuple(mdp_from_dict(m) for m in doc['models'])
    return ModelClass(models, doc.get('truth_index'))
