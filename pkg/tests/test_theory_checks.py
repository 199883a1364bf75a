# pylint: disable=invalid-name
"""Tests for the numerical checks of the relative-pessimism guarantees."""
from dataclasses import replace

import numpy as np
import pytest

import armorlab as al

GRID = (0.0, 1.0, 2.0, 5.0, np.inf)


def test_instance_locates_true_model(two_state_inst):
    """The recorded truth index follows m_star; a missing m_star is an error."""
    models = two_state_inst.mc.models
    inst = al.Instance(models[2], al.ModelClass(models, 0), two_state_inst.mu,
                       two_state_inst.pi_ref)
    assert inst.mc.truth_index == 2
    with pytest.raises(ValueError):
        al.Instance(al.two_state_mdp(0.9, go_success=0.5), al.ModelClass(models, 0),
                    two_state_inst.mu, two_state_inst.pi_ref)
    with pytest.raises(ValueError):
        al.Instance(models[0], al.ModelClass(models, 0),
                    al.BehaviorDistribution([[1.0]]), two_state_inst.pi_ref)


def test_instance_dataset_defaults(two_state_inst):
    """The instance size and seed are used unless overridden."""
    D = al.instance_dataset(two_state_inst)
    assert D.n == 50
    assert D.meta['seed'] == 3
    assert al.instance_dataset(two_state_inst, n=10, seed=1).n == 10


def test_report_dict_and_failed():
    """Extra data is merged; only asserted reports can fail."""
    report = al.CheckReport('rpi', False, 1.0, 0.5, data={'alpha': 2.0})
    assert report.failed
    assert report.to_dict()['alpha'] == 2.0
    assert report.to_dict()['passed'] is False
    assert not al.CheckReport('rpi', False, 1.0, 0.5, asserted=False).failed


@pytest.mark.parametrize('mode', ['pure', 'mixed'])
def test_rpi_two_state(two_state_inst, mode):
    """The learned policy never does worse than the reference."""
    reports = al.check_rpi(two_state_inst, GRID, mode=mode)
    assert len(reports) == len(GRID)
    assert not any(r.failed for r in reports)
    last = reports[-1]
    assert last.asserted
    assert last.data['version_space_size'] == 5
    assert last.data['game_value'] >= 0


def test_rpi_random_instances(random_instances):
    """No asserted failure over random instances and thresholds."""
    for inst in random_instances:
        for report in al.check_rpi(inst, (0.5, 2.0, np.inf)):
            assert not report.failed, report.to_dict()


def test_rpi_stochastic_reference(two_state_inst):
    """A reference outside the policy class is a precondition error."""
    inst = replace(two_state_inst, pi_ref=al.Policy.uniform(2, 2))
    with pytest.raises(al.PreconditionError):
        al.check_rpi(inst, [np.inf])


def test_rpi_without_the_true_model():
    """Dropping the truth lets the guarantee fail, and the failure is not asserted."""
    inst = al.truth_excluded_instance()
    (kept,) = al.check_rpi(inst, [np.inf])
    assert kept.passed
    (dropped,) = al.check_rpi(inst, [np.inf], drop_truth=True)
    assert not dropped.passed
    assert not dropped.asserted
    assert not dropped.failed
    assert dropped.lhs == pytest.approx(2.0)
    assert dropped.rhs == pytest.approx(0.0)
    (empty,) = al.check_rpi(inst, [0.0], drop_truth=True)
    assert np.isnan(empty.rhs)
    assert not empty.asserted


def test_absolute_decomposition(two_state_inst, random_instances):
    """The first step of the suboptimality bound holds."""
    report = al.check_absolute_decomposition(two_state_inst, np.inf)
    assert report.asserted
    assert report.passed
    for inst in random_instances:
        assert not al.check_absolute_decomposition(inst, 2.0).failed


def test_absolute_decomposition_needs_comparator(separation):
    """An instance without a comparator is rejected."""
    with pytest.raises(ValueError):
        al.check_absolute_decomposition(separation, 1.0)


def test_absolute_decomposition_with_only_the_true_model(two_state_inst):
    """With only M* left the bound is 0, and tight when the comparator is optimal."""
    m_star = two_state_inst.m_star
    inst = replace(two_state_inst, mc=al.ModelClass((m_star,), 0))
    report = al.check_absolute_decomposition(inst, np.inf)
    assert report.passed
    assert report.rhs == pytest.approx(0, abs=1e-12)
    j_comp = al.evaluate(m_star, inst.pi_comp).j
    j_hat = max(al.evaluate(m_star, pi).j for pi in inst.policies)
    assert report.lhs == pytest.approx(j_comp - j_hat, abs=1e-12)
    assert report.rhs == pytest.approx(report.lhs, abs=1e-12)

    worse = replace(inst, pi_comp=al.Policy.from_actions((0, 1), 2))
    report = al.check_absolute_decomposition(worse, np.inf)
    assert report.rhs == pytest.approx(0, abs=1e-12)
    assert report.lhs < -1


def test_trend_reference_as_comparator(two_state_inst):
    """Against the reference itself the suboptimality is never positive."""
    inst = replace(two_state_inst, pi_comp=two_state_inst.pi_ref)
    report = al.check_suboptimality_trend(inst, [20, 40, 80], trials=5, alpha=np.inf)
    assert report.passed
    assert max(report.data['means']) <= 1e-9
    assert report.data['c_fit'] == 0


def test_trend_report_contents(two_state_inst):
    """Means, standard errors and rates are reported per n."""
    report = al.check_suboptimality_trend(two_state_inst, [20, 80, 320], trials=4)
    assert report.name == 'trend'
    assert len(report.data['means']) == 3
    assert len(report.data['stderrs']) == 3
    assert report.data['rates'][0] > report.data['rates'][-1]
    assert np.isfinite(report.data['c_fit'])
    assert report.data['alpha'] == pytest.approx(np.log(50))
    with pytest.raises(ValueError):
        al.check_suboptimality_trend(two_state_inst, [20], trials=1)
    with pytest.raises(ValueError):
        al.check_suboptimality_trend(two_state_inst, [], trials=3)


def test_trend_two_state_family(two_state_inst):
    """50 datasets per size over n = 25, 100, 400: the mean suboptimality does not grow."""
    report = al.check_suboptimality_trend(two_state_inst, [25, 100, 400], trials=50)
    assert report.asserted
    assert report.passed
    assert report.trials == 50
    assert report.data['n_grid'] == [25, 100, 400]


def test_mle_coverage(two_state_inst):
    """The true model stays within ln(|M|/delta) of the best likelihood often enough."""
    report = al.mle_coverage_experiment(two_state_inst, 50, 200, 0.1)
    assert report.name == 'mle'
    assert report.passed
    assert report.lhs == pytest.approx(0.9 - 3 * np.sqrt(0.09 / 200))
    assert report.trials == 200


def test_coverage_edge_cases(two_state_inst):
    """delta = 1 is skipped, few trials and blind data are rejected."""
    skipped = al.mle_coverage_experiment(two_state_inst, 50, 100, 1.0)
    assert skipped.passed
    assert not skipped.asserted
    with pytest.raises(ValueError):
        al.mle_coverage_experiment(two_state_inst, 50, 99, 0.1)
    blind = replace(two_state_inst, mu=al.BehaviorDistribution([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        al.mle_coverage_experiment(blind, 50, 100, 0.1)


def test_version_space_coverage(two_state_inst):
    """Full-loss coverage is asserted without noise and diagnostic with it."""
    report = al.version_space_coverage_experiment(two_state_inst, 50, 100, 0.1)
    assert report.passed
    assert report.asserted
    noisy = replace(two_state_inst, noise=0.1)
    assert not al.version_space_coverage_experiment(noisy, 50, 100, 0.1).asserted


def test_on_support_bound(two_state_inst):
    """The smallest feasible constant is finite and reported, never asserted."""
    report = al.check_on_support_bound(two_state_inst, 50, 20, c_diag=1e6)
    assert not report.asserted
    assert report.passed
    assert np.isfinite(report.lhs)
    assert report.lhs == report.data['c_min']
    with pytest.raises(ValueError):
        al.check_on_support_bound(two_state_inst, 50, 20, c_diag=0)


def test_support_constant_under_doubled_n(bandit):
    """A reward-only error makes the loss gap grow with n, so c_min stays below 1."""
    right, wrong = bandit([1.0]), bandit([0.5])
    inst = al.Instance(right, al.ModelClass((right, wrong), 0),
                       al.BehaviorDistribution([[1.0]]), al.Policy.from_actions((0,), 1))
    c_min = []
    for n in (100, 200):
        report = al.check_on_support_bound(inst, n, 20, c_diag=1.0)
        assert report.lhs == pytest.approx(0.25 * n / (0.25 * n + np.log(20)))
        c_min.append(report.lhs)
    assert c_min[0] < c_min[1] < 1
    assert c_min[1] / c_min[0] < 1.1


def test_compare_solution_concepts(separation):
    """Return maximin and regret minimax pick different actions."""
    table = al.compare_solution_concepts(separation, np.inf)
    assert list(table.index) == ['absolute_pessimism', 'relative_pessimism',
                                 'regret_minimization', 'optimistic']
    assert table.index.name == 'concept'
    assert list(table['policy']) == ['(0,)', '(0,)', '(1,)', '(1,)']
    assert table.loc['absolute_pessimism', 'worst_case_return'] == pytest.approx(1.0)
    assert table.loc['absolute_pessimism', 'worst_case_regret'] == pytest.approx(1.0)
    assert table.loc['regret_minimization', 'worst_case_return'] == pytest.approx(0.8)
    assert table.loc['regret_minimization', 'worst_case_regret'] == pytest.approx(0.2)
    assert table.loc['optimistic', 'true_return'] == pytest.approx(2.0)
    assert table.attrs['members'] == [0, 1]


def test_check_solution_concepts(separation, random_instances):
    """Each concept is optimal for its own criterion."""
    reports = {r.name: r for r in al.check_solution_concepts(separation, np.inf)}
    assert all(r.passed for r in reports.values())
    assert not reports['concepts.separation'].asserted
    for inst in random_instances:
        assert not any(r.failed for r in al.check_solution_concepts(inst, 2.0))


def test_simulation_lemma():
    """The bound holds under the first model's occupancy on random triples."""
    report = al.check_simulation_lemma(n_pairs=50)
    assert report.passed
    assert report.lhs <= 1e-9
    assert report.data['first_failures'] == 0


def test_solver_checks():
    """Pure values are exact, mixed values within 2 eps."""
    pure, mixed = al.check_solvers(n_matrices=20)
    assert pure.name == 'solver.pure'
    assert pure.passed
    assert pure.lhs == 0
    assert mixed.passed
    assert mixed.rhs == pytest.approx(2e-6)
