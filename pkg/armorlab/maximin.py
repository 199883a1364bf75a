# pylint: disable=invalid-name
# pylint: disable=too-many-arguments
# pylint: disable=too-many-locals
"""
The relative-pessimism game and its solvers.

See <https://armorlab.readthedocs.io> for usage examples.

The policy class is the finite set of deterministic tabular policies,
enumerated in lexicographic order.  The game matrix has one row per policy
and one column per model, with entry J_M(pi) - J_M(pi_ref)::

    enumerate_policies(n_states, n_actions, cap=10**6)
    policy_returns(models, policies)
    build_game_matrix(models, policies, pi_ref, model_ids=None)

The pure solver returns the lexicographically-first row with the largest
row minimum.  The mixed solver returns an episode-level mixture of rows and
a duality gap computed from the final strategies of both players::

    solve_maximin_pure(g)
    solve_maximin_mixed(g, eps=1e-6, method='lp')

The whole learning step (version space, game, solver)::

    armor_policy(mc, D, alpha, pi_ref, mode='pure')
"""

import itertools
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import linprog
from scipy.special import logsumexp

from armorlab.mdp_core import MixedPolicy, Policy, batch_returns
from armorlab.version_space import build_version_space

__all__ = ('GameMatrix',
           'SolveResult',
           'EnumerationCapError',
           'SolverConvergenceError',
           'enumerate_policies',
           'policy_returns',
           'build_game_matrix',
           'solve_maximin_pure',
           'solve_maximin_mixed',
           'armor_policy')

logger = logging.getLogger(__name__)

WEIGHT_FLOOR = 1e-12


class EnumerationCapError(ValueError):
    """The deterministic policy set is larger than the enumeration cap."""


class SolverConvergenceError(RuntimeError):
    """The mixed solver could not certify the requested duality gap."""

    def __init__(self, gap, eps, reason=None):
        if reason is None:
            reason = "duality gap %.3g exceeds tolerance %.3g" % (gap, eps)
        super().__init__(reason)
        self.gap = gap


@dataclass(frozen=True, eq=False)
class GameMatrix:
    """
    Payoff table of the relative-pessimism game.

    Attributes:
        payoff: array [policy, model] of J_M(pi) - J_M(pi_ref)
        row_index: tuple of Policy, one per row
        col_index: tuple of model ids, one per column
        ref_returns: J_M(pi_ref) for each column
    """

    payoff: np.ndarray
    row_index: tuple
    col_index: tuple
    ref_returns: np.ndarray


@dataclass(frozen=True, eq=False)
class SolveResult:
    """
    Solution of a maximin problem.

    Attributes:
        policy: Policy (pure) or MixedPolicy (mixed)
        value: guaranteed payoff, the minimum over columns for the solution
        worst_model: model id attaining that minimum
        duality_gap: certified gap (mixed solver only)
        row: chosen row index (pure solver only)
        weights: row weights (mixed solver only)
        meta: extra information such as version-space membership
    """

    policy: object
    value: float
    worst_model: object
    duality_gap: float = None
    row: int = None
    weights: np.ndarray = None
    meta: dict = field(default_factory=dict)


def enumerate_policies(n_states, n_actions, cap=10**6):
    """
    List every deterministic policy in lexicographic order.

    The first state is the most significant position, so for two states and
    two actions the order is (0,0), (0,1), (1,0), (1,1).

    Args:
        n_states: number of states
        n_actions: number of actions
        cap: largest allowed number of policies

    Returns:
        list of Policy
    """
    count = n_actions**n_states
    if count > cap:
        raise EnumerationCapError("%d^%d = %d policies exceed the cap of %d"
                                  % (n_actions, n_states, count, cap))
    return [Policy.from_actions(actions, n_actions)
            for actions in itertools.product(range(n_actions), repeat=n_states)]


def policy_returns(models, policies, extra=None):
    """
    Return the table J[policy, model].

    Args:
        models: list of TabularMdp
        policies: list of Policy
        extra: optional additional Policy evaluated in the same batch

    Returns:
        array of shape (len(policies), len(models)), or a pair
        (table, extra_returns) when `extra` is given
    """
    if not models:
        raise ValueError("need at least one model")
    tables = [pi.table for pi in policies]
    if extra is not None:
        tables.append(extra.table)
    if not tables:
        raise ValueError("need at least one policy")
    stacked = np.stack(tables)
    J = np.column_stack([batch_returns(M, stacked) for M in models])
    if extra is None:
        return J
    return J[:-1], J[-1]


def build_game_matrix(models, policies, pi_ref, model_ids=None):
    """
    Tabulate J_M(pi) - J_M(pi_ref) for every policy and model.

    pi_ref is evaluated once per model, in the same batch as the rows, so a
    row equal to pi_ref is exactly zero.

    Args:
        models: list of TabularMdp (the version space)
        policies: list of Policy (the rows)
        pi_ref: reference Policy
        model_ids: labels for the columns (default 0..len(models)-1)

    Returns:
        GameMatrix
    """
    if not policies:
        raise ValueError("need at least one policy")
    if model_ids is None:
        model_ids = tuple(range(len(models)))
    if len(model_ids) != len(models):
        raise ValueError("%d model ids for %d models" % (len(model_ids), len(models)))
    J, ref = policy_returns(models, policies, extra=pi_ref)
    payoff = J - ref[None, :]
    payoff.setflags(write=False)
    return GameMatrix(payoff=payoff, row_index=tuple(policies),
                      col_index=tuple(model_ids), ref_returns=ref)


def _pure(payoff):
    """Return (row, column, value) of the lexicographic pure maximin."""
    row_mins = payoff.min(axis=1)
    row = int(np.argmax(row_mins))
    col = int(np.argmin(payoff[row]))
    return row, col, float(row_mins[row])


def solve_maximin_pure(g):
    """
    Solve max over rows of min over columns.

    Ties go to the lowest row index, then to the lowest column index.

    Args:
        g: GameMatrix

    Returns:
        SolveResult with a deterministic policy
    """
    row, col, value = _pure(g.payoff)
    return SolveResult(policy=g.row_index[row], value=value,
                       worst_model=g.col_index[col], row=row)


def _lp_strategies(A, eps):
    """Row strategy from the maximin LP and column strategy from its duals."""
    m, n = A.shape
    # variables: x_1..x_m, v ; maximize v  s.t.  v - x^T A_j <= 0
    c = np.zeros(m + 1)
    c[-1] = -1
    A_ub = np.hstack([-A.T, np.ones((n, 1))])
    A_eq = np.append(np.ones(m), 0)[None, :]
    bounds = [(0, None)] * m + [(None, None)]
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(n), A_eq=A_eq, b_eq=[1],
                  bounds=bounds, method='highs')
    if res.status != 0:
        raise SolverConvergenceError(np.inf, eps, "linear program failed: %s" % res.message)
    x = np.clip(res.x[:m], 0, None)
    y = np.clip(-res.ineqlin.marginals, 0, None)
    if y.sum() <= 0:
        y = np.full(n, 1 / n)
    return x / x.sum(), y / y.sum()


def _hedge_strategies(A, eps, max_iter):
    """Average strategies of simultaneous multiplicative-weights play."""
    m, n = A.shape
    span = A.max() - A.min()
    if span == 0:
        return np.full(m, 1 / m), np.full(n, 1 / n)
    B = (A - A.min()) / span
    eta = np.sqrt(8 * np.log(max(m, n, 2)) / max_iter)
    row_score = np.zeros(m)
    col_score = np.zeros(n)
    x_sum = np.zeros(m)
    y_sum = np.zeros(n)
    for t in range(1, max_iter + 1):
        x = np.exp(eta * row_score - logsumexp(eta * row_score))
        y = np.exp(-eta * col_score - logsumexp(-eta * col_score))
        x_sum += x
        y_sum += y
        row_score += B @ y
        col_score += x @ B
        if t % 100 == 0:
            xa, ya = x_sum / t, y_sum / t
            if np.max(A @ ya) - np.min(xa @ A) <= eps:
                break
    return x_sum / x_sum.sum(), y_sum / y_sum.sum()


def solve_maximin_mixed(g, eps=1e-6, method='lp', max_iter=200000):
    """
    Solve the game over mixtures of rows, with a certified duality gap.

    The certificate is computed from the final strategies: the returned
    mixture x guarantees min_j (x^T A)_j, the column strategy y caps every
    row at max_i (A y)_i, and the gap is the difference of the two.

    Args:
        g: GameMatrix
        eps: largest acceptable duality gap, > 0
        method: 'lp' (HiGHS linear program) or 'hedge' (multiplicative weights)
        max_iter: iteration budget for 'hedge'

    Returns:
        SolveResult with a MixedPolicy, value = guaranteed payoff of the mixture

    Raises:
        SolverConvergenceError: when the certified gap exceeds eps or the LP fails
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    A = g.payoff
    if method == 'lp':
        x, y = _lp_strategies(A, eps)
    elif method == 'hedge':
        x, y = _hedge_strategies(A, eps, max_iter)
    else:
        raise ValueError("unknown method %r" % method)

    x = np.where(x > WEIGHT_FLOOR, x, 0)
    x /= x.sum()
    guaranteed = x @ A
    lower = float(np.min(guaranteed))
    upper = float(np.max(A @ y))
    gap = max(upper - lower, 0.0)
    logger.debug("mixed solve (%s): lower=%.12g upper=%.12g gap=%.3g", method, lower, upper, gap)
    if gap > eps:
        raise SolverConvergenceError(gap, eps)

    rows = np.flatnonzero(x)
    mixed = MixedPolicy(tuple(g.row_index[i] for i in rows), x[rows])
    col = int(np.argmin(guaranteed))
    return SolveResult(policy=mixed, value=lower, worst_model=g.col_index[col],
                       duality_gap=gap, weights=x,
                       meta={'upper_bound': upper, 'method': method})


def armor_policy(mc, D, alpha, pi_ref, mode='pure', eps=1e-6, cap=10**6):
    """
    Learn a policy by relative pessimism over the version space.

    Builds the version space, enumerates the deterministic policies, builds
    the game matrix against pi_ref and solves it.

    Args:
        mc: ModelClass
        D: Dataset
        alpha: version-space threshold
        pi_ref: reference Policy
        mode: 'pure' or 'mixed'
        eps: duality-gap tolerance for mode='mixed'
        cap: enumeration cap

    Returns:
        SolveResult whose meta records the version space
    """
    if mode not in ('pure', 'mixed'):
        raise ValueError("mode must be 'pure' or 'mixed', got %r" % mode)
    if mode == 'pure' and not pi_ref.is_deterministic:
        logger.warning("stochastic reference policy is outside the deterministic policy "
                       "class; the improvement guarantee needs pi_ref in the class")
    vs = build_version_space(mc, D, alpha)
    first = mc.models[0]
    policies = enumerate_policies(first.n_states, first.n_actions, cap)
    g = build_game_matrix(vs.select(mc), policies, pi_ref, model_ids=vs.member_indices)
    if mode == 'pure':
        result = solve_maximin_pure(g)
    else:
        result = solve_maximin_mixed(g, eps)
    meta = dict(result.meta)
    meta.update(members=vs.member_indices, losses=vs.losses.tolist(), alpha=vs.alpha,
                truth_in_version_space=(mc.truth_index in vs
                                        if mc.truth_index is not None else None))
    logger.info("armor: %d models in version space, game value %.6g",
                len(vs.member_indices), result.value)
    return replace(result, meta=meta)
