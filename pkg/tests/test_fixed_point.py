# pylint: disable=invalid-name
"""Tests for psi-policies and the fixed-point certificate."""
import numpy as np
import pytest

import armorlab as al

A0 = al.Policy.from_actions((0,), 2)
A1 = al.Policy.from_actions((1,), 2)
POLICIES = [A0, A1]


@pytest.fixture
def models(separation):
    """Bandits with returns (1.0, 2.0) and (1.0, 0.8)."""
    return list(separation.mc.models)


def test_zero_psi_is_return_maximin(models):
    """psi = 0 picks action 0 with guaranteed return 1."""
    result = al.psi_policy(models, al.PsiSpec('zero'), POLICIES)
    assert result.policy == A0
    assert result.value == pytest.approx(1.0)
    assert result.worst_model == 0
    assert result.meta['psi'] == [0.0, 0.0]


def test_reference_psi_is_relative_pessimism(models):
    """psi = -J(pi_ref) keeps the reference when nothing beats it everywhere."""
    result = al.psi_policy(models, al.PsiSpec('neg_ref_return', A0), POLICIES)
    assert result.policy == A0
    assert result.value == 0
    np.testing.assert_allclose(result.meta['psi'], [-1.0, -1.0])


def test_optimal_psi_is_regret_minimization(models):
    """psi = -max J gives action 1 with worst regret 0.2."""
    result = al.psi_policy(models, al.PsiSpec('neg_optimal_return'), POLICIES)
    assert result.policy == A1
    assert result.value == pytest.approx(-0.2)
    assert result.worst_model == 1


def test_singleton_psi(models):
    """A single model gives that model's optimal policy."""
    assert al.psi_policy(models, al.PsiSpec('singleton', 0), POLICIES).policy == A1
    assert al.psi_policy(models, al.PsiSpec('singleton', 1), POLICIES).policy == A0
    result = al.psi_policy(models, al.PsiSpec('singleton', 7), POLICIES, model_ids=(3, 7))
    assert result.policy == A0
    assert result.worst_model == 7


def test_optimistic_policy(models):
    """Joint argmax over policies and models."""
    assert al.optimistic_policy(models, POLICIES) == (A1, 0)
    assert al.optimistic_policy(models, POLICIES, model_ids=(5, 6)) == (A1, 5)


def test_optimal_policy_index():
    """First maximum wins."""
    assert al.optimal_policy_index(np.array([0.5, 2.0, 2.0])) == 1


def test_fixed_point_certificate(models):
    """Both actions are fixed points of the pair; action 0 is not for model 0 alone."""
    assert al.is_fixed_point(A0, models, POLICIES) == (True, 0.0)
    assert al.is_fixed_point(A1, models, POLICIES) == (True, 0.0)
    fixed, v = al.is_fixed_point(A0, models[:1], POLICIES)
    assert not fixed
    assert v == pytest.approx(1.0)
    assert al.improvement_certificate(A0, models[:1], POLICIES) == pytest.approx(1.0)
    assert al.improvement_certificate(A0, models, POLICIES) == 0


def test_psi_from_fixed_point(models):
    """psi = -J(pi) reproduces a fixed point and nothing else."""
    psi, reproduced = al.psi_from_fixed_point(A1, models, POLICIES)
    assert reproduced
    np.testing.assert_allclose(psi, [-2.0, -0.8])
    _, reproduced = al.psi_from_fixed_point(A0, models[:1], POLICIES)
    assert not reproduced


@pytest.mark.parametrize('kwargs', [
    {'kind': 'max_return'},
    {'kind': 'neg_ref_return'},
    {'kind': 'zero', 'payload': 0},
    {'kind': 'singleton', 'payload': 1, 'subset': (0,)},
    {'kind': 'zero', 'subset': ()},
])
def test_psi_spec_validation(kwargs):
    """Unknown kinds and payload mismatches are rejected."""
    with pytest.raises(ValueError):
        al.PsiSpec(**kwargs)


def test_singleton_subset_is_its_payload():
    """The subset of a singleton spec is filled in."""
    assert al.PsiSpec('singleton', 4).subset == (4,)
    assert al.PsiSpec('zero', subset=[1, 2]).subset == (1, 2)


def test_subset_outside_version_space(models):
    """A subset naming an unknown model is an error."""
    with pytest.raises(ValueError):
        al.psi_policy(models, al.PsiSpec('zero', subset=(2,)), POLICIES)


def test_every_psi_policy_is_a_fixed_point(random_instances):
    """All psi kinds, random subsets, the optimistic policy and idempotence."""
    for inst in random_instances:
        for report in al.check_fixed_points(inst, alpha=2.0):
            assert report.passed, report.name


def test_subset_solution_is_fixed_point_for_full_space(random_instances):
    """A maximin over part of the version space is still a fixed point of all of it."""
    inst = random_instances[1]
    models = list(inst.mc.models)
    for kind in ('zero', 'neg_optimal_return'):
        pi = al.psi_policy(models, al.PsiSpec(kind, subset=(0, 2)), inst.policies).policy
        fixed, v = al.is_fixed_point(pi, models, inst.policies)
        assert fixed
        assert v >= 0
