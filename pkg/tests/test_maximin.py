# pylint: disable=invalid-name
"""Tests for the relative-pessimism game and its solvers."""
import logging
from types import SimpleNamespace

import numpy as np
import pytest

import armorlab as al


def game(payoff):
    """GameMatrix over placeholder one-state policies."""
    A = np.asarray(payoff, dtype=float)
    rows = tuple(al.Policy.from_actions([i], len(A)) for i in range(len(A)))
    return al.GameMatrix(A, rows, tuple(range(A.shape[1])), np.zeros(A.shape[1]))


def test_enumeration_order_and_counts():
    """Lexicographic order, state-major."""
    assert len(al.enumerate_policies(1, 2)) == 2
    assert [pi.actions for pi in al.enumerate_policies(2, 2)] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    policies = al.enumerate_policies(3, 3)
    assert len(policies) == 27
    assert len(set(policies)) == 27
    with pytest.raises(al.EnumerationCapError):
        al.enumerate_policies(10, 4, cap=1000)


def test_pure_solver_examples():
    """Row minima decide; ties go to the first row and first column."""
    result = al.solve_maximin_pure(game([[2, 3], [1, 5]]))
    assert result.row == 0
    assert result.value == 2
    assert result.worst_model == 0
    result = al.solve_maximin_pure(game([[1, 0], [0, 1]]))
    assert result.row == 0
    assert result.value == 0
    assert result.worst_model == 1


@pytest.mark.parametrize('method', ['lp', 'hedge'])
def test_mixed_solver_symmetric_game(method):
    """Matching pennies has value 1/2 at the uniform mixture."""
    result = al.solve_maximin_mixed(game([[1, 0], [0, 1]]), eps=1e-6, method=method)
    assert result.value == pytest.approx(0.5, abs=1e-6)
    np.testing.assert_allclose(result.weights, [0.5, 0.5], atol=1e-6)
    assert 0 <= result.duality_gap <= 1e-6
    assert isinstance(result.policy, al.MixedPolicy)


def test_mixed_solver_dominant_row():
    """A dominant row gets all the weight."""
    result = al.solve_maximin_mixed(game([[3, 2], [1, 0], [0, 1]]))
    assert result.value == pytest.approx(2, abs=1e-6)
    np.testing.assert_allclose(result.weights, [1, 0, 0], atol=1e-6)
    assert len(result.policy.atoms) == 1


def test_mixed_solver_against_oracle():
    """Random 6x5 games agree with the column player's LP within 2 eps."""
    reports = al.check_solvers(n_matrices=20, eps=1e-6, seed=11, max_rows=6, max_cols=5)
    assert all(r.passed for r in reports)


def test_mixed_solver_errors():
    """Bad tolerance, unknown method and an unreachable gap."""
    g = game([[2, -1], [-1, 1]])
    with pytest.raises(ValueError):
        al.solve_maximin_mixed(g, eps=0)
    with pytest.raises(ValueError):
        al.solve_maximin_mixed(g, method='simplex')
    with pytest.raises(al.SolverConvergenceError) as err:
        al.solve_maximin_mixed(g, eps=1e-12, method='hedge', max_iter=100)
    assert err.value.gap > 1e-12


def test_lp_failure_is_reported(monkeypatch):
    """A failed linear program names the solver's reason, not a duality gap."""
    failed = SimpleNamespace(status=4, message='Numerical difficulties encountered')
    monkeypatch.setattr('armorlab.maximin.linprog', lambda *args, **kwargs: failed)
    with pytest.raises(al.SolverConvergenceError) as err:
        al.solve_maximin_mixed(game([[2, -1], [-1, 1]]), eps=1e-6)
    assert 'Numerical difficulties' in str(err.value)
    assert 'duality gap' not in str(err.value)
    assert err.value.gap == np.inf


def test_policy_returns_table(bandit):
    """Rows follow the policies, columns the models; extra shares the batch."""
    models = [bandit([0.25, 0.5]), bandit([0.5, 0.0])]
    policies = al.enumerate_policies(1, 2)
    J = al.policy_returns(models, policies)
    np.testing.assert_allclose(J, [[0.5, 1.0], [1.0, 0.0]])
    table, extra = al.policy_returns(models, policies[:1], extra=policies[1])
    np.testing.assert_allclose(table, [[0.5, 1.0]])
    np.testing.assert_allclose(extra, [1.0, 0.0])
    with pytest.raises(ValueError):
        al.policy_returns([], policies)
    with pytest.raises(ValueError):
        al.policy_returns(models, [])


def test_pure_value_below_mixed_value(random_instances):
    """Mixtures can only help the row player."""
    for inst in random_instances:
        g = al.build_game_matrix(list(inst.mc.models), inst.policies, inst.pi_ref)
        pure = al.solve_maximin_pure(g).value
        mixed = al.solve_maximin_mixed(g)
        assert pure <= mixed.value + 1e-9
        assert mixed.value <= mixed.meta['upper_bound'] + 1e-12


def test_game_matrix_entries(random_instances):
    """Entries match recomputation and the reference row is exactly zero."""
    inst = random_instances[0]
    models = list(inst.mc.models)[:4]
    policies = inst.policies[:8] + [inst.pi_ref]
    g = al.build_game_matrix(models, policies, inst.pi_ref)
    for i, pi in enumerate(policies):
        for j, M in enumerate(models):
            expected = al.evaluate(M, pi).j - al.evaluate(M, inst.pi_ref).j
            assert g.payoff[i, j] == pytest.approx(expected, abs=1e-10)
    assert np.all(g.payoff[-1] == 0)
    single = al.build_game_matrix(models[:1], policies, inst.pi_ref)
    assert single.payoff.shape == (len(policies), 1)


def test_game_value_nonnegative_and_monotone(random_instances):
    """The reference row guarantees value >= 0; more models never raise the value."""
    for inst in random_instances:
        models = list(inst.mc.models)
        values = [al.solve_maximin_pure(al.build_game_matrix(models[:k], inst.policies,
                                                             inst.pi_ref)).value
                  for k in range(1, len(models) + 1)]
        assert min(values) >= 0
        assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


def test_reward_scaling(random_instances):
    """Scaling every reward by k scales the payoff and keeps the chosen row."""
    for inst in random_instances[:10]:
        models = list(inst.mc.models)
        scaled = [al.TabularMdp(M.transition, 0.5 * M.reward, M.gamma, M.initial_dist)
                  for M in models]
        g = al.build_game_matrix(models, inst.policies, inst.pi_ref)
        g_half = al.build_game_matrix(scaled, inst.policies, inst.pi_ref)
        np.testing.assert_allclose(g_half.payoff, 0.5 * g.payoff, atol=1e-12)
        assert al.solve_maximin_pure(g_half).row == al.solve_maximin_pure(g).row


def test_armor_singleton_class(two_state_inst):
    """With only the true model the optimal policy is returned."""
    M = two_state_inst.m_star
    mc = al.ModelClass((M,), truth_index=0)
    D = al.instance_dataset(two_state_inst)
    result = al.armor_policy(mc, D, 1.0, two_state_inst.pi_ref)
    assert result.policy.actions == (1, 0)
    expected = al.evaluate(M, result.policy).j - al.evaluate(M, two_state_inst.pi_ref).j
    assert result.value == pytest.approx(expected, abs=1e-10)
    assert result.meta['truth_in_version_space'] is True


def test_armor_reference_already_optimal(two_state_inst):
    """An optimal reference gives value 0."""
    D = al.instance_dataset(two_state_inst)
    M = two_state_inst.m_star
    mc = al.ModelClass((M,), truth_index=0)
    result = al.armor_policy(mc, D, 1.0, al.Policy.from_actions((1, 0), 2))
    assert result.value == 0


def test_armor_improves_on_reference(two_state_inst):
    """J*(pi_hat) >= J*(pi_ref) whenever the true model survives."""
    D = al.instance_dataset(two_state_inst)
    for mode in ('pure', 'mixed'):
        result = al.armor_policy(two_state_inst.mc, D, np.inf, two_state_inst.pi_ref, mode=mode)
        assert result.meta['truth_in_version_space']
        if mode == 'pure':
            j_hat = al.evaluate(two_state_inst.m_star, result.policy).j
        else:
            j_hat = al.evaluate_mixed(two_state_inst.m_star, result.policy)
        assert j_hat >= al.evaluate(two_state_inst.m_star, two_state_inst.pi_ref).j - 1e-9


def test_armor_warns_on_stochastic_reference(two_state_inst, caplog):
    """A stochastic reference in pure mode is logged."""
    D = al.instance_dataset(two_state_inst)
    with caplog.at_level(logging.WARNING, logger='armorlab.maximin'):
        al.armor_policy(two_state_inst.mc, D, 2.0, al.Policy.uniform(2, 2))
    assert 'stochastic reference policy' in caplog.text
    with pytest.raises(ValueError):
        al.armor_policy(two_state_inst.mc, D, 2.0, two_state_inst.pi_ref, mode='robust')
