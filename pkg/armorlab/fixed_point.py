# pylint: disable=invalid-name
"""
Fixed points of the relative-pessimism operator.

See <https://armorlab.readthedocs.io> for usage examples.

A policy pi is a fixed point when no policy improves on it in the worst case
over the version space, i.e. when

    max_{pi'} min_{M} J_M(pi') - J_M(pi) = 0.

Every solution of max_{pi'} min_{M in subset} J_M(pi') + psi(M), for any
subset of the version space and any psi, is such a fixed point.  The four
standard choices of psi are selected with a `PsiSpec`::

    'zero'                psi(M) = 0            absolute pessimism
    'neg_ref_return'      psi(M) = -J_M(pi_ref) relative pessimism
    'neg_optimal_return'  psi(M) = -J_M(pi*_M)  regret minimization
    'singleton'           subset = {M}          optimal policy of one model

Functions::

    psi_policy(models, spec, policies)
    optimistic_policy(models, policies)
    optimal_policy_index(returns)
    is_fixed_point(pi, models, policies)
    improvement_certificate(pi_ref, models, policies)
    psi_from_fixed_point(pi, models, policies)
"""

import logging
from dataclasses import dataclass

import numpy as np

from armorlab.maximin import SolveResult, policy_returns

__all__ = ('PsiSpec',
           'PSI_KINDS',
           'psi_policy',
           'optimistic_policy',
           'optimal_policy_index',
           'is_fixed_point',
           'improvement_certificate',
           'psi_from_fixed_point')

logger = logging.getLogger(__name__)

PSI_KINDS = ('zero', 'neg_ref_return', 'neg_optimal_return', 'singleton')
CERTIFICATE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PsiSpec:
    """
    Choice of psi and of the model subset it is applied to.

    Attributes:
        kind: one of PSI_KINDS
        payload: reference Policy ('neg_ref_return') or model id ('singleton')
        subset: tuple of model ids; None means every model given
    """

    kind: str
    payload: object = None
    subset: tuple = None

    def __post_init__(self):
        """Check that the payload matches the kind."""
        if self.kind not in PSI_KINDS:
            raise ValueError("psi kind must be one of %s, got %r" % (PSI_KINDS, self.kind))
        needs_payload = self.kind in ('neg_ref_return', 'singleton')
        if needs_payload != (self.payload is not None):
            raise ValueError("psi kind %r %s a payload"
                             % (self.kind, 'needs' if needs_payload else 'takes no'))
        subset = self.subset
        if self.kind == 'singleton':
            if subset is not None and tuple(subset) != (self.payload,):
                raise ValueError("a singleton psi uses exactly the subset {payload}")
            subset = (self.payload,)
        if subset is not None:
            subset = tuple(subset)
            if not subset:
                raise ValueError("the model subset must be non-empty")
        object.__setattr__(self, 'subset', subset)


def optimal_policy_index(returns):
    """Index of the lexicographically-first best entry of one model's return column."""
    return int(np.argmax(returns))


def _columns(spec, model_ids):
    if spec.subset is None:
        return list(range(len(model_ids)))
    position = {m: i for i, m in enumerate(model_ids)}
    missing = [m for m in spec.subset if m not in position]
    if missing:
        raise ValueError("psi subset models %s are not in the version space" % missing)
    return [position[m] for m in spec.subset]


def psi_policy(models, spec, policies, model_ids=None):
    """
    Solve max over policies of min over the subset of J_M(pi) + psi(M).

    Args:
        models: list of TabularMdp (the version space)
        spec: PsiSpec
        policies: list of Policy
        model_ids: ids of `models` used by spec.subset and spec.payload

    Returns:
        SolveResult with the pure maximin policy; meta['psi'] holds psi per column
    """
    if model_ids is None:
        model_ids = tuple(range(len(models)))
    cols = _columns(spec, model_ids)
    chosen = [models[i] for i in cols]
    if spec.kind == 'neg_ref_return':
        J, ref = policy_returns(chosen, policies, extra=spec.payload)
        psi = -ref
    else:
        J = policy_returns(chosen, policies)
        if spec.kind == 'neg_optimal_return':
            psi = -J.max(axis=0)
        else:
            psi = np.zeros(len(cols))
    payoff = J + psi[None, :]
    row_mins = payoff.min(axis=1)
    row = int(np.argmax(row_mins))
    col = int(np.argmin(payoff[row]))
    return SolveResult(policy=policies[row], value=float(row_mins[row]),
                       worst_model=model_ids[cols[col]], row=row,
                       meta={'psi': psi.tolist(), 'kind': spec.kind})


def optimistic_policy(models, policies, model_ids=None):
    """
    Joint argmax over (policy, model) of J_M(pi).

    Ties go to the lowest policy index, then to the lowest model index.

    Args:
        models: list of TabularMdp
        policies: list of Policy

    Returns:
        (Policy, model id)
    """
    if model_ids is None:
        model_ids = tuple(range(len(models)))
    J = policy_returns(models, policies)
    row, col = np.unravel_index(int(np.argmax(J)), J.shape)
    return policies[row], model_ids[col]


def _certificate(pi, models, policies):
    """max over pi' in policies plus pi of min_M J_M(pi') - J_M(pi)."""
    J, own = policy_returns(models, policies, extra=pi)
    # the row of pi itself is exactly zero, so the certificate is never negative
    return float(max(np.max(np.min(J - own[None, :], axis=1)), 0.0))


def is_fixed_point(pi, models, policies, tol=CERTIFICATE_TOL):
    """
    Decide whether relative pessimism can improve on pi.

    Args:
        pi: Policy
        models: list of TabularMdp (the version space)
        policies: list of Policy (the policy class)
        tol: largest certificate still counted as zero

    Returns:
        (is_fixed, v*) with v* = max_{pi'} min_M J_M(pi') - J_M(pi) >= 0
    """
    v = _certificate(pi, models, policies)
    return v <= tol, v


def improvement_certificate(pi_ref, models, policies):
    """
    Worst-case improvement that relative pessimism can guarantee over pi_ref.

    Zero exactly when pi_ref is a fixed point; a positive value certifies a
    nontrivial improvement.

    Args:
        pi_ref: reference Policy
        models: list of TabularMdp
        policies: list of Policy

    Returns:
        the maximin game value with reference pi_ref
    """
    return _certificate(pi_ref, models, policies)


def psi_from_fixed_point(pi, models, policies, tol=CERTIFICATE_TOL):
    """
    Recover a psi that reproduces a fixed point.

    With psi(M) = -J_M(pi) over the full version space the maximin value is
    the fixed-point certificate, and pi attains payoff 0; pi is a solution
    exactly when that value is zero.

    Args:
        pi: Policy, expected to be a fixed point
        models: list of TabularMdp
        policies: list of Policy

    Returns:
        (psi, reproduced) where psi is the array -J_M(pi) and reproduced
        tells whether pi is in the argmax set
    """
    spec = PsiSpec('neg_ref_return', payload=pi)
    result = psi_policy(models, spec, policies)
    reproduced = abs(result.value) <= tol
    if not reproduced:
        logger.debug("policy %s is not reproduced: maximin value %.3g", pi, result.value)
    return np.array(result.meta['psi']), reproduced
