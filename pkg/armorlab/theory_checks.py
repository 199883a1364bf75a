# pylint: disable=invalid-name
# pylint: disable=too-many-arguments
# pylint: disable=too-many-locals
"""
Numerical checks of the relative-pessimism guarantees.

See <https://armorlab.readthedocs.io> for usage examples.

A check takes an `Instance` (true model, model class, behavior distribution,
reference and comparator policies) and returns one or more `CheckReport`
objects.  A report is `passed` when its inequality lhs <= rhs holds at the
stated tolerance.  Reports with `asserted=False` are diagnostics: their
precondition failed or their constant is unknown, so they never fail a run.

Deterministic checks::

    check_rpi(inst, alpha_grid)
    check_absolute_decomposition(inst, alpha)
    check_fixed_points(inst, alpha)
    compare_solution_concepts(inst, alpha)
    check_solution_concepts(inst, alpha)
    check_simulation_lemma(n_pairs=100, seed=7)
    check_solvers(n_matrices=50, eps=1e-6, seed=11)

Statistical checks over seeded datasets::

    check_suboptimality_trend(inst, n_grid, trials)
    mle_coverage_experiment(inst, n, trials, delta)
    version_space_coverage_experiment(inst, n, trials, delta, c=1)
    check_on_support_bound(inst, n, trials, c_diag)
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import pandas as pd
from scipy.optimize import linprog

from armorlab.fixed_point import (PsiSpec, improvement_certificate, is_fixed_point,
                                  optimistic_policy, psi_from_fixed_point, psi_policy)
from armorlab.maximin import (GameMatrix, armor_policy, build_game_matrix, enumerate_policies,
                              policy_returns, solve_maximin_mixed, solve_maximin_pure)
from armorlab.mdp_core import (Policy, TabularMdp, batch_returns, evaluate, evaluate_mixed,
                               random_mdp, simulation_gap_bound)
from armorlab.offline_data import sample_dataset
from armorlab.version_space import (ModelClass, alpha_from_theory, build_version_space,
                                    log_likelihood, loss, on_support_error)

__all__ = ('Instance',
           'CheckReport',
           'PreconditionError',
           'instance_dataset',
           'check_rpi',
           'check_absolute_decomposition',
           'check_suboptimality_trend',
           'mle_coverage_experiment',
           'version_space_coverage_experiment',
           'check_on_support_bound',
           'compare_solution_concepts',
           'check_solution_concepts',
           'check_fixed_points',
           'check_simulation_lemma',
           'check_solvers')

logger = logging.getLogger(__name__)

TOL = 1e-9


class PreconditionError(ValueError):
    """A guarantee was requested for an instance that violates its precondition."""


@dataclass(frozen=True, eq=False)
class Instance:
    """
    Everything a check needs besides its own grid.

    Attributes:
        m_star: true TabularMdp
        mc: ModelClass containing m_star
        mu: BehaviorDistribution generating the data
        pi_ref: reference Policy
        pi_comp: comparator Policy, optional
        seed: base seed for every dataset drawn from the instance
        n: default dataset size
        noise: half-width of reward noise, or None
    """

    m_star: TabularMdp
    mc: ModelClass
    mu: object
    pi_ref: Policy
    pi_comp: Policy = None
    seed: int = 0
    n: int = 100
    noise: float = None

    def __post_init__(self):
        """Locate m_star in the class and check the dimensions agree."""
        mc = self.mc
        if mc.truth_index is None or mc.truth != self.m_star:
            hits = [i for i, M in enumerate(mc.models) if M == self.m_star]
            if not hits:
                raise ValueError("the true model is not in the model class")
            mc = ModelClass(mc.models, hits[0])
            object.__setattr__(self, 'mc', mc)
        shape = (self.m_star.n_states, self.m_star.n_actions)
        if self.mu.weights.shape != shape:
            raise ValueError("behavior distribution does not match the MDP dimensions")
        for name in ('pi_ref', 'pi_comp'):
            pi = getattr(self, name)
            if pi is not None and pi.table.shape != shape:
                raise ValueError("%s does not match the MDP dimensions" % name)

    @cached_property
    def policies(self):
        """Enumerated deterministic policies."""
        return enumerate_policies(self.m_star.n_states, self.m_star.n_actions)


@dataclass(frozen=True, eq=False)
class CheckReport:
    """
    Outcome of one numerical check.

    Attributes:
        name: check identifier, e.g. 'rpi'
        passed: whether lhs <= rhs holds at the check's tolerance
        lhs: left side of the checked inequality
        rhs: right side
        details: short human-readable note
        trials: number of datasets behind a statistical check
        asserted: False for diagnostics and failed preconditions
        data: extra values (grid point, fitted constants, ...)
    """

    name: str
    passed: bool
    lhs: float
    rhs: float
    details: str = ''
    trials: int = 1
    asserted: bool = True
    data: dict = field(default_factory=dict)

    @property
    def failed(self):
        """True when an asserted check did not pass."""
        return self.asserted and not self.passed

    def to_dict(self):
        """Return a flat JSON-ready dict."""
        d = {'name': self.name,
             'passed': bool(self.passed),
             'asserted': bool(self.asserted),
             'lhs': float(self.lhs),
             'rhs': float(self.rhs),
             'trials': int(self.trials),
             'details': self.details}
        d.update(self.data)
        return d


def instance_dataset(inst, n=None, seed=None):
    """Draw the dataset of an instance; defaults to inst.n and inst.seed."""
    return sample_dataset(inst.m_star, inst.mu, inst.n if n is None else n,
                          inst.seed if seed is None else seed, noise=inst.noise)


def _trial_seed(*entropy):
    """Independent integer seed for one trial."""
    return int(np.random.SeedSequence(list(entropy)).generate_state(1)[0])


def _require_in_class(pi, name):
    if not pi.is_deterministic:
        raise PreconditionError("%s is stochastic and therefore not in the enumerated "
                                "policy class" % name)


def _member_models(inst, vs, drop_truth=False):
    ids = tuple(i for i in vs.member_indices
                if not (drop_truth and i == inst.mc.truth_index))
    return [inst.mc.models[i] for i in ids], ids


def check_rpi(inst, alpha_grid, drop_truth=False, mode='pure'):
    """
    Check J*(pi_hat) >= J*(pi_ref) over a grid of thresholds.

    The guarantee needs the true model in the version space.  Points where it
    is missing are reported with asserted=False.  `drop_truth` removes the
    recorded true model from every version space, which shows the guarantee
    failing when its precondition is broken.

    Args:
        inst: Instance
        alpha_grid: sequence of thresholds (may include inf)
        drop_truth: remove the true model from the version space
        mode: 'pure' or 'mixed'

    Returns:
        list of CheckReport, one per alpha
    """
    _require_in_class(inst.pi_ref, 'pi_ref')
    D = instance_dataset(inst)
    j_ref = evaluate(inst.m_star, inst.pi_ref).j
    reports = []
    for alpha in alpha_grid:
        data = {'alpha': float(alpha), 'seed': inst.seed}
        if drop_truth:
            vs = build_version_space(inst.mc, D, alpha)
            models, ids = _member_models(inst, vs, drop_truth=True)
            if not models:
                reports.append(CheckReport('rpi', False, j_ref, np.nan, asserted=False,
                                           details='version space empty without the truth',
                                           data=data))
                continue
            g = build_game_matrix(models, inst.policies, inst.pi_ref, model_ids=ids)
            if mode == 'pure':
                result = solve_maximin_pure(g)
            else:
                result = solve_maximin_mixed(g)
            truth_in = False
        else:
            result = armor_policy(inst.mc, D, alpha, inst.pi_ref, mode=mode)
            ids = result.meta['members']
            truth_in = result.meta['truth_in_version_space']

        if mode == 'pure':
            j_hat = evaluate(inst.m_star, result.policy).j
        else:
            j_hat = evaluate_mixed(inst.m_star, result.policy)
        passed = j_ref <= j_hat + TOL
        data.update(game_value=result.value, version_space_size=len(ids),
                    truth_in_version_space=truth_in)
        details = '' if truth_in else 'true model outside the version space'
        if truth_in and not passed:
            logger.warning("rpi failed at alpha=%s: J(pi_ref)=%.12g > J(pi_hat)=%.12g",
                           alpha, j_ref, j_hat)
        reports.append(CheckReport('rpi', passed, j_ref, j_hat, details=details,
                                   asserted=truth_in, data=data))
    return reports


def check_absolute_decomposition(inst, alpha):
    """
    Check the first step of the suboptimality bound.

        J(pi_comp) - J(pi_hat) <= J(pi_comp) - J(pi_ref) - min_M [J_M(pi_comp) - J_M(pi_ref)]

    with J the return under the true model and M ranging over the version space.

    Args:
        inst: Instance with a deterministic pi_comp
        alpha: version-space threshold

    Returns:
        CheckReport, asserted only when the true model is in the version space
    """
    if inst.pi_comp is None:
        raise ValueError("the instance has no comparator policy")
    _require_in_class(inst.pi_ref, 'pi_ref')
    _require_in_class(inst.pi_comp, 'pi_comp')
    D = instance_dataset(inst)
    result = armor_policy(inst.mc, D, alpha, inst.pi_ref)
    models = [inst.mc.models[i] for i in result.meta['members']]
    comp, ref = policy_returns(models, [inst.pi_comp], extra=inst.pi_ref)
    worst = float(np.min(comp[0] - ref))

    j_comp = evaluate(inst.m_star, inst.pi_comp).j
    j_ref = evaluate(inst.m_star, inst.pi_ref).j
    j_hat = evaluate(inst.m_star, result.policy).j
    lhs = j_comp - j_hat
    rhs = j_comp - j_ref - worst
    truth_in = result.meta['truth_in_version_space']
    data = {'alpha': float(alpha), 'seed': inst.seed, 'truth_in_version_space': truth_in}
    if not truth_in:
        return CheckReport('absolute', False, lhs, rhs, asserted=False, data=data,
                           details='true model outside the version space')
    return CheckReport('absolute', lhs <= rhs + TOL, lhs, rhs, data=data)


def check_suboptimality_trend(inst, n_grid, trials, delta=0.1, c=1.0, alpha=None):
    """
    Check that J(pi_comp) - J(pi_hat) shrinks as the dataset grows.

    For each n the mean suboptimality over `trials` seeded datasets must not
    exceed the mean at any smaller n by more than two combined standard
    errors.  The constant C_fit = max_n mean(n) / sqrt(ln(|M|/delta)/n) is
    fitted and reported.

    Args:
        inst: Instance; pi_comp defaults to the first optimal policy of m_star
        n_grid: increasing dataset sizes
        trials: datasets per size, at least 2
        delta: failure probability for the threshold and the rate
        c: threshold constant for alpha_from_theory
        alpha: fixed threshold overriding alpha_from_theory

    Returns:
        CheckReport with lhs the largest excess increase (<= 0 passes)
    """
    if trials < 2:
        raise ValueError("need at least 2 trials for a standard error, got %d" % trials)
    if not n_grid:
        raise ValueError("n_grid must be non-empty")
    _require_in_class(inst.pi_ref, 'pi_ref')
    mc = inst.mc
    if alpha is None:
        alpha = alpha_from_theory(len(mc), delta, c)
    policies = inst.policies
    J, ref = policy_returns(mc.models, policies, extra=inst.pi_ref)
    j_star = J[:, mc.truth_index]
    if inst.pi_comp is None:
        j_comp = float(j_star.max())
    else:
        j_comp = evaluate(inst.m_star, inst.pi_comp).j

    means, stderrs = [], []
    for n in n_grid:
        gaps = np.empty(trials)
        for t in range(trials):
            D = instance_dataset(inst, n, _trial_seed(inst.seed, n, t))
            members = list(build_version_space(mc, D, alpha).member_indices)
            payoff = J[:, members] - ref[members]
            row = int(np.argmax(payoff.min(axis=1)))
            gaps[t] = j_comp - j_star[row]
        means.append(float(gaps.mean()))
        stderrs.append(float(gaps.std(ddof=1) / np.sqrt(trials)))
        logger.info("trend: n=%d mean suboptimality %.6g (se %.3g)", n, means[-1], stderrs[-1])

    means = np.array(means)
    stderrs = np.array(stderrs)
    excess = 0.0
    for i in range(len(means)):
        for j in range(i + 1, len(means)):
            slack = 2 * np.hypot(stderrs[i], stderrs[j])
            excess = max(excess, means[j] - means[i] - slack)
    rates = np.sqrt(np.log(len(mc) / delta) / np.asarray(n_grid, dtype=float))
    c_fit = float(np.max(np.maximum(means, 0) / rates))
    passed = excess <= TOL and np.isfinite(c_fit)
    data = {'seed': inst.seed, 'alpha': float(alpha), 'n_grid': list(n_grid),
            'means': means.tolist(), 'stderrs': stderrs.tolist(), 'rates': rates.tolist(),
            'c_fit': c_fit}
    return CheckReport('trend', passed, excess, 0.0, trials=trials, data=data,
                       details='C_fit = %.4g' % c_fit)


def _check_distinguishable(inst):
    """Raise ValueError when mu puts no mass where some model differs from m_star."""
    differs = np.zeros(inst.mu.weights.shape, dtype=bool)
    for M in inst.mc.models:
        differs |= np.any(M.transition != inst.m_star.transition, axis=-1)
    if np.any(differs) and not np.any(inst.mu.weights[differs] > 0):
        raise ValueError("behavior distribution gives no mass to any pair where the "
                         "models differ")


def _coverage(name, inst, n, trials, delta, threshold, statistic, asserted=True):
    """Frequency of statistic(D) <= threshold over seeded datasets."""
    if trials < 100:
        raise ValueError("coverage needs at least 100 trials, got %d" % trials)
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1], got %r" % delta)
    _check_distinguishable(inst)
    data = {'seed': inst.seed, 'n': int(n), 'delta': float(delta), 'threshold': threshold}
    if delta == 1:
        return CheckReport(name, True, 0.0, 1.0, trials=0, asserted=False, data=data,
                           details='vacuous at delta = 1, skipped')
    hits = 0
    for t in range(trials):
        D = instance_dataset(inst, n, _trial_seed(inst.seed, n, t))
        hits += statistic(D) <= threshold
    frequency = hits / trials
    bound = 1 - delta - 3 * np.sqrt(delta * (1 - delta) / trials)
    data['frequency'] = frequency
    return CheckReport(name, frequency >= bound, float(bound), frequency, trials=trials,
                       asserted=asserted, data=data,
                       details='frequency %.4f, required %.4f' % (frequency, bound))


def mle_coverage_experiment(inst, n, trials, delta):
    """
    Frequency of max_M ln l_D(M) - ln l_D(M*) <= ln(|M|/delta).

    Only the transition log-likelihood enters the gap.  The check passes when
    the frequency is at least 1 - delta - 3 sqrt(delta (1 - delta) / trials).

    Args:
        inst: Instance
        n: dataset size
        trials: number of datasets, at least 100
        delta: failure probability in (0, 1]

    Returns:
        CheckReport with lhs the required frequency and rhs the observed one
    """
    truth = inst.m_star

    def gap(D):
        return max(log_likelihood(M, D) for M in inst.mc.models) - log_likelihood(truth, D)

    threshold = float(np.log(len(inst.mc) / delta))
    return _coverage('mle', inst, n, trials, delta, threshold, gap)


def version_space_coverage_experiment(inst, n, trials, delta, c=1.0):
    """
    Frequency of max_M L_D(M) - L_D(M*) <= c ln(|M|/delta) for the full loss.

    With exact rewards the event contains the likelihood-only event, so the
    same frequency bound is asserted.  With reward noise the report is a
    diagnostic.

    Args:
        inst: Instance
        n: dataset size
        trials: number of datasets, at least 100
        delta: failure probability in (0, 1]
        c: threshold constant, at least 1

    Returns:
        CheckReport
    """
    truth = inst.m_star

    def gap(D):
        return max(loss(M, D) for M in inst.mc.models) - loss(truth, D)

    threshold = float(alpha_from_theory(len(inst.mc), delta, c))
    return _coverage('coverage', inst, n, trials, delta, threshold, gap,
                     asserted=not inst.noise)


def check_on_support_bound(inst, n, trials, c_diag, delta=0.1):
    """
    Diagnose E_mu[TV(P_M, P*)^2 + (R_M - R*)^2] <= c_diag (gap_M + ln(|M|/delta)) / n.

    gap_M is max_M' L_D(M') - L_D(M).  Models with zero likelihood are
    skipped.  The absolute constant is unknown, so the report is never
    asserted; it carries the smallest c_diag that would make every trial pass.

    Args:
        inst: Instance
        n: dataset size
        trials: number of datasets
        c_diag: constant to test, > 0
        delta: failure probability

    Returns:
        CheckReport with lhs the smallest feasible constant and rhs = c_diag
    """
    if not c_diag > 0:
        raise ValueError("c_diag must be positive, got %r" % c_diag)
    mc = inst.mc
    errors = np.array([on_support_error(M, inst.m_star, inst.mu) for M in mc.models])
    log_term = np.log(len(mc) / delta)
    c_min = 0.0
    for t in range(trials):
        D = instance_dataset(inst, n, _trial_seed(inst.seed, n, t))
        losses = np.array([loss(M, D) for M in mc.models])
        finite = np.isfinite(losses)
        scale = (losses[finite].max() - losses[finite] + log_term) / n
        err = errors[finite]
        positive = err > 0
        if np.any(positive & (scale <= 0)):
            c_min = np.inf
            break
        if np.any(positive):
            c_min = max(c_min, float(np.max(err[positive] / scale[positive])))
    data = {'seed': inst.seed, 'n': int(n), 'delta': float(delta), 'c_min': c_min}
    return CheckReport('support', c_min <= c_diag, c_min, float(c_diag), trials=trials,
                       asserted=False, data=data,
                       details='smallest feasible constant %.4g' % c_min)


def compare_solution_concepts(inst, alpha):
    """
    Tabulate the four fixed-point policies over one version space.

    Rows are absolute_pessimism, relative_pessimism, regret_minimization and
    optimistic.  Columns give the policy, its worst-case return and
    worst-case regret over the version space, and its true return.  The
    attributes `best_worst_case_return` and `best_worst_case_regret` hold the
    optimum of each column over every enumerated policy.

    Args:
        inst: Instance
        alpha: version-space threshold

    Returns:
        pandas.DataFrame
    """
    D = instance_dataset(inst)
    vs = build_version_space(inst.mc, D, alpha)
    models, ids = _member_models(inst, vs)
    policies = inst.policies
    J = policy_returns(models, policies)
    worst_return = J.min(axis=1)
    worst_regret = (J.max(axis=0)[None, :] - J).max(axis=1)
    true_return = batch_returns(inst.m_star, np.stack([pi.table for pi in policies]))

    rows = {
        'absolute_pessimism': psi_policy(models, PsiSpec('zero'), policies, ids).row,
        'relative_pessimism': psi_policy(models, PsiSpec('neg_ref_return', inst.pi_ref),
                                         policies, ids).row,
        'regret_minimization': psi_policy(models, PsiSpec('neg_optimal_return'),
                                          policies, ids).row,
        'optimistic': policies.index(optimistic_policy(models, policies, ids)[0]),
    }
    table = pd.DataFrame(
        {'policy': [str(policies[i].actions) for i in rows.values()],
         'worst_case_return': worst_return[list(rows.values())],
         'worst_case_regret': worst_regret[list(rows.values())],
         'true_return': true_return[list(rows.values())]},
        index=pd.Index(list(rows), name='concept'))
    table.attrs.update(best_worst_case_return=float(worst_return.max()),
                       best_worst_case_regret=float(worst_regret.min()),
                       alpha=float(alpha), members=list(ids))
    return table


def check_solution_concepts(inst, alpha):
    """
    Verify the definitional optimality of each column of compare_solution_concepts.

    Returns:
        list of CheckReport; the separation report is informational
    """
    table = compare_solution_concepts(inst, alpha)
    best_return = table.attrs['best_worst_case_return']
    best_regret = table.attrs['best_worst_case_regret']
    abs_return = table.loc['absolute_pessimism', 'worst_case_return']
    regret = table.loc['regret_minimization', 'worst_case_regret']
    optimistic = table.loc['optimistic', 'worst_case_return']
    data = {'alpha': float(alpha), 'seed': inst.seed}
    distinct = table.loc['absolute_pessimism', 'policy'] != \
        table.loc['regret_minimization', 'policy']
    return [
        CheckReport('concepts.absolute', abs(abs_return - best_return) <= TOL,
                    abs_return, best_return, data=data),
        CheckReport('concepts.regret', abs(regret - best_regret) <= TOL,
                    regret, best_regret, data=data),
        CheckReport('concepts.optimistic', optimistic <= abs_return + TOL,
                    optimistic, abs_return, data=data),
        CheckReport('concepts.separation', distinct, 0.0, 0.0, asserted=False, data=data,
                    details='return-maximin and regret-minimax policies %s'
                    % ('differ' if distinct else 'coincide')),
    ]


def _random_subsets(rng, ids, count):
    subsets = []
    for _ in range(count):
        mask = rng.random(len(ids)) < 0.5
        mask[rng.integers(len(ids))] = True
        subsets.append(tuple(i for i, keep in zip(ids, mask) if keep))
    return subsets


def check_fixed_points(inst, alpha, n_subsets=3):
    """
    Check that every psi-policy is a fixed point of relative pessimism.

    Covers the four psi kinds over the full version space, the three
    non-singleton kinds over random model subsets, the optimistic policy,
    the converse construction psi(M) = -J_M(pi), and idempotence of the
    learning step (re-feeding pi_hat as reference gives game value 0).

    Args:
        inst: Instance
        alpha: version-space threshold
        n_subsets: random subsets per kind

    Returns:
        list of CheckReport
    """
    _require_in_class(inst.pi_ref, 'pi_ref')
    D = instance_dataset(inst)
    vs = build_version_space(inst.mc, D, alpha)
    models, ids = _member_models(inst, vs)
    policies = inst.policies
    rng = np.random.default_rng(_trial_seed(inst.seed, 13))

    specs = [PsiSpec('zero'), PsiSpec('neg_ref_return', inst.pi_ref),
             PsiSpec('neg_optimal_return')]
    specs += [PsiSpec('singleton', m) for m in ids]
    for subset in _random_subsets(rng, ids, n_subsets):
        specs += [PsiSpec('zero', subset=subset),
                  PsiSpec('neg_ref_return', inst.pi_ref, subset),
                  PsiSpec('neg_optimal_return', subset=subset)]

    data = {'alpha': float(alpha), 'seed': inst.seed}
    reports = []
    for spec in specs:
        pi = psi_policy(models, spec, policies, ids).policy
        fixed, cert = is_fixed_point(pi, models, policies)
        _, reproduced = psi_from_fixed_point(pi, models, policies)
        reports.append(CheckReport('fixedpoint.' + spec.kind, fixed, cert, TOL, data=dict(
            data, subset=list(spec.subset or ids))))
        reports.append(CheckReport('fixedpoint.converse', reproduced, cert, TOL, data=data))

    pi_opt, _ = optimistic_policy(models, policies, ids)
    fixed, cert = is_fixed_point(pi_opt, models, policies)
    reports.append(CheckReport('fixedpoint.optimistic', fixed, cert, TOL, data=data))

    pi_hat = armor_policy(inst.mc, D, alpha, inst.pi_ref).policy
    again = improvement_certificate(pi_hat, models, policies)
    reports.append(CheckReport('fixedpoint.idempotence', again <= TOL, again, TOL, data=data))
    return reports


def check_simulation_lemma(n_pairs=100, seed=7, max_states=4, max_actions=3, gamma=0.9):
    """
    Check |J_M(pi) - J_M'(pi)| against the simulation bound on random triples.

    The bound is taken with the occupancy of pi under M.  A triple that
    violates it is re-run with the occupancy under M' and the outcome of
    both readings is reported.

    Args:
        n_pairs: number of random (M, M', pi) triples
        seed: seed for numpy.random.default_rng
        max_states: largest state count drawn
        max_actions: largest action count drawn
        gamma: discount shared by both models

    Returns:
        CheckReport with lhs the largest lhs - rhs over the triples
    """
    rng = np.random.default_rng(seed)
    worst = -np.inf
    first_failures = 0
    second_failures = 0
    for _ in range(n_pairs):
        n_states = int(rng.integers(1, max_states + 1))
        n_actions = int(rng.integers(1, max_actions + 1))
        M = random_mdp(rng, n_states, n_actions, gamma)
        other = random_mdp(rng, n_states, n_actions, gamma)
        M_prime = TabularMdp(other.transition, other.reward, gamma, M.initial_dist)
        pi = Policy(rng.dirichlet(np.ones(n_actions), size=n_states))
        lhs, rhs = simulation_gap_bound(M, M_prime, pi)
        worst = max(worst, lhs - rhs)
        if lhs > rhs + TOL:
            first_failures += 1
            lhs2, rhs2 = simulation_gap_bound(M, M_prime, pi, occupancy_under='second')
            second_failures += lhs2 > rhs2 + TOL
            logger.warning("simulation bound fails under the first model's occupancy "
                           "(%.6g > %.6g); second model: %.6g vs %.6g", lhs, rhs, lhs2, rhs2)
    data = {'seed': seed, 'first_failures': first_failures, 'second_failures': second_failures}
    return CheckReport('simulation', first_failures == 0, worst, 0.0, trials=n_pairs,
                       data=data)


def _column_lp_value(A):
    """min over column mixtures y of max_i (A y)_i, solved from the column player's side."""
    m, n = A.shape
    c = np.zeros(n + 1)
    c[-1] = 1
    A_ub = np.hstack([A, -np.ones((m, 1))])
    A_eq = np.append(np.ones(n), 0)[None, :]
    bounds = [(0, None)] * n + [(None, None)]
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(m), A_eq=A_eq, b_eq=[1],
                  bounds=bounds, method='highs')
    return float(res.fun)


def _raw_game(A):
    """Wrap a payoff matrix in a GameMatrix with placeholder row policies."""
    m, n = A.shape
    rows = tuple(Policy.from_actions([i], m) for i in range(m))
    return GameMatrix(payoff=A, row_index=rows, col_index=tuple(range(n)),
                      ref_returns=np.zeros(n))


def check_solvers(n_matrices=50, eps=1e-6, seed=11, max_rows=32, max_cols=8):
    """
    Cross-check both solvers on random matrices.

    The pure value must equal the exhaustive maximum of row minima exactly
    and the mixed value must match the column player's linear program within
    2 eps.

    Args:
        n_matrices: number of random matrices
        eps: duality-gap tolerance given to the mixed solver
        seed: seed for numpy.random.default_rng
        max_rows: largest number of rows
        max_cols: largest number of columns

    Returns:
        list with one pure and one mixed CheckReport
    """
    rng = np.random.default_rng(seed)
    pure_err = 0.0
    mixed_err = 0.0
    for _ in range(n_matrices):
        m = int(rng.integers(1, max_rows + 1))
        n = int(rng.integers(1, max_cols + 1))
        A = rng.uniform(-1, 1, size=(m, n))
        g = _raw_game(A)
        exhaustive = max(min(row) for row in A.tolist())
        pure_err = max(pure_err, abs(solve_maximin_pure(g).value - exhaustive))
        oracle = _column_lp_value(A)
        mixed_err = max(mixed_err, abs(solve_maximin_mixed(g, eps).value - oracle))
    data = {'seed': seed, 'eps': eps}
    return [CheckReport('solver.pure', pure_err == 0, pure_err, 0.0, trials=n_matrices,
                        data=data),
            CheckReport('solver.mixed', mixed_err <= 2 * eps, mixed_err, 2 * eps,
                        trials=n_matrices, data=data)]
