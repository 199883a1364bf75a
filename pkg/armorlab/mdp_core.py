# pylint: disable=invalid-name
# pylint: disable=too-many-arguments
"""
Exact mathematics for finite discounted Markov decision processes.

See <https://armorlab.readthedocs.io> for usage examples.

An MDP is a `TabularMdp` holding a transition table P[s, a, s'], a reward
table R[s, a] with entries in [0, 1], a discount gamma in [0, 1) and an
initial-state distribution.  Policies are `Policy` objects wrapping a
row-stochastic (n_states, n_actions) table; deterministic policies are the
special case with a single 1 in every row.  A `MixedPolicy` picks one
deterministic atom at the start of an episode and follows it.

Evaluation is done by a direct linear solve, not by iteration::

    evaluate(M, pi)
    evaluate_mixed(M, mixed)
    batch_returns(M, tables)

Distances and the simulation-lemma bound::

    tv_distance(p, q)
    simulation_gap_bound(M, M_prime, pi, occupancy_under='first')

Oracles used to cross-check the exact solution::

    value_iteration(M, pi, horizon)
    sample_returns(M, mixed, episodes, horizon, seed)
    optimal_values(M)

Construction and JSON serialization::

    random_mdp(rng, n_states, n_actions, gamma)
    two_state_mdp(gamma, go_success, stay_reward)
    mdp_to_dict(M), mdp_from_dict(d), save_mdp(M, path), load_mdp(path)
    policy_to_dict(pi), policy_from_dict(d), save_policy(pi, path), load_policy(path)
"""

import json
from dataclasses import dataclass

import numpy as np

__all__ = ('TabularMdp',
           'Policy',
           'MixedPolicy',
           'ValueReport',
           'evaluate',
           'evaluate_mixed',
           'batch_returns',
           'tv_distance',
           'simulation_gap_bound',
           'value_iteration',
           'sample_returns',
           'optimal_values',
           'random_mdp',
           'two_state_mdp',
           'mdp_to_dict',
           'mdp_from_dict',
           'save_mdp',
           'load_mdp',
           'policy_to_dict',
           'policy_from_dict',
           'save_policy',
           'load_policy')

PROB_ATOL = 1e-12


def _frozen_array(x, name, ndim):
    """Return a read-only float copy of x after checking its rank."""
    arr = np.array(x, dtype=float)
    if arr.ndim != ndim:
        raise ValueError("%s must have %d dimensions, got shape %s" % (name, ndim, arr.shape))
    if not np.all(np.isfinite(arr)):
        raise ValueError("%s contains non-finite entries" % name)
    arr.setflags(write=False)
    return arr


def _check_distribution(p, name, atol=PROB_ATOL, axis=-1):
    """Raise ValueError unless p is non-negative and sums to one along axis."""
    if np.any(p < 0):
        raise ValueError("%s has negative entries" % name)
    if not np.allclose(np.sum(p, axis=axis), 1, rtol=0, atol=atol):
        raise ValueError("%s does not sum to one" % name)


@dataclass(frozen=True, eq=False)
class TabularMdp:
    """
    Finite discounted MDP with an initial-state distribution.

    Attributes:
        transition: table P[s, a, s'] of next-state probabilities
        reward: table R[s, a] with entries in [0, 1]
        gamma: discount factor in [0, 1)
        initial_dist: probability vector over states
    """

    transition: np.ndarray
    reward: np.ndarray
    gamma: float
    initial_dist: np.ndarray

    def __post_init__(self):
        """Freeze the tables and check the MDP invariants."""
        P = _frozen_array(self.transition, 'transition', 3)
        R = _frozen_array(self.reward, 'reward', 2)
        rho = _frozen_array(self.initial_dist, 'initial_dist', 1)
        n_states, n_actions = R.shape
        if n_states < 1 or n_actions < 1:
            raise ValueError("an MDP needs at least one state and one action")
        if P.shape != (n_states, n_actions, n_states):
            raise ValueError("transition shape %s does not match reward shape %s"
                             % (P.shape, R.shape))
        if rho.shape != (n_states,):
            raise ValueError("initial_dist has length %d, expected %d" % (len(rho), n_states))
        _check_distribution(P, 'transition row')
        _check_distribution(rho, 'initial_dist')
        if np.any(R < 0) or np.any(R > 1):
            raise ValueError("rewards must lie in [0, 1]")
        gamma = float(self.gamma)
        if not 0 <= gamma < 1:
            raise ValueError("gamma must satisfy 0 <= gamma < 1, got %g" % gamma)
        object.__setattr__(self, 'transition', P)
        object.__setattr__(self, 'reward', R)
        object.__setattr__(self, 'initial_dist', rho)
        object.__setattr__(self, 'gamma', gamma)

    @property
    def n_states(self):
        """Number of states."""
        return self.reward.shape[0]

    @property
    def n_actions(self):
        """Number of actions."""
        return self.reward.shape[1]

    @property
    def v_max(self):
        """Upper end of the value range, 1/(1 - gamma)."""
        return 1 / (1 - self.gamma)

    def same_shape(self, other):
        """Return True when other shares states, actions, gamma and initial_dist."""
        return (self.reward.shape == other.reward.shape
                and self.gamma == other.gamma
                and np.array_equal(self.initial_dist, other.initial_dist))

    def __eq__(self, other):
        if not isinstance(other, TabularMdp):
            return NotImplemented
        return (self.same_shape(other)
                and np.array_equal(self.transition, other.transition)
                and np.array_equal(self.reward, other.reward))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Policy:
    """
    Tabular Markov policy.

    Attributes:
        table: row-stochastic array pi[s, a]
    """

    table: np.ndarray

    def __post_init__(self):
        """Freeze the table and check every row is a distribution."""
        table = _frozen_array(self.table, 'policy table', 2)
        _check_distribution(table, 'policy row')
        object.__setattr__(self, 'table', table)

    @classmethod
    def from_actions(cls, actions, n_actions):
        """
        Build a deterministic policy.

        Args:
            actions: sequence with one action index per state
            n_actions: size of the action set

        Returns:
            deterministic Policy
        """
        actions = np.asarray(actions, dtype=int)
        if np.any(actions < 0) or np.any(actions >= n_actions):
            raise ValueError("action index out of range [0, %d)" % n_actions)
        table = np.zeros((len(actions), n_actions))
        table[np.arange(len(actions)), actions] = 1
        return cls(table)

    @classmethod
    def uniform(cls, n_states, n_actions):
        """Return the uniformly random policy."""
        return cls(np.full((n_states, n_actions), 1 / n_actions))

    @property
    def n_states(self):
        """Number of states."""
        return self.table.shape[0]

    @property
    def n_actions(self):
        """Number of actions."""
        return self.table.shape[1]

    @property
    def is_deterministic(self):
        """True when every row puts all its mass on one action."""
        return bool(np.all(np.isin(self.table, (0.0, 1.0))))

    @property
    def actions(self):
        """Tuple of chosen actions; only defined for deterministic policies."""
        if not self.is_deterministic:
            raise ValueError("a stochastic policy has no action table")
        return tuple(int(a) for a in np.argmax(self.table, axis=1))

    def __eq__(self, other):
        if not isinstance(other, Policy):
            return NotImplemented
        return np.array_equal(self.table, other.table)

    def __hash__(self):
        return hash((self.table.shape, self.table.tobytes()))

    def __repr__(self):
        if self.is_deterministic:
            return 'Policy(actions=%s)' % (self.actions,)
        return 'Policy(table=%s)' % self.table.tolist()


@dataclass(frozen=True, eq=False)
class MixedPolicy:
    """
    Episode-level mixture of deterministic policies.

    One atom is drawn with the given weight at the start of an episode and
    followed for the whole episode, so returns are linear in the weights.

    Attributes:
        atoms: tuple of deterministic Policy objects
        weights: probability vector over atoms
    """

    atoms: tuple
    weights: np.ndarray

    def __post_init__(self):
        """Check the weights and that the atoms are compatible."""
        atoms = tuple(self.atoms)
        weights = _frozen_array(self.weights, 'mixture weights', 1)
        if not atoms:
            raise ValueError("a mixture needs at least one atom")
        if len(weights) != len(atoms):
            raise ValueError("%d weights for %d atoms" % (len(weights), len(atoms)))
        _check_distribution(weights, 'mixture weights')
        shape = atoms[0].table.shape
        for atom in atoms:
            if atom.table.shape != shape:
                raise ValueError("mixture atoms do not share state/action counts")
            if not atom.is_deterministic:
                raise ValueError("mixture atoms must be deterministic")
        object.__setattr__(self, 'atoms', atoms)
        object.__setattr__(self, 'weights', weights)


@dataclass(frozen=True, eq=False)
class ValueReport:
    """
    Exact evaluation of a policy.

    Attributes:
        v: state values V(s)
        q: action values Q(s, a)
        j: expected discounted return from the initial distribution
        occupancy: normalized discounted occupancy d(s, a)
    """

    v: np.ndarray
    q: np.ndarray
    j: float
    occupancy: np.ndarray


def _check_policy(M, pi):
    if pi.table.shape != (M.n_states, M.n_actions):
        raise ValueError("policy shape %s does not match MDP (%d states, %d actions)"
                         % (pi.table.shape, M.n_states, M.n_actions))


def _markov_chain(M, table):
    """Return the state-to-state matrix and reward vector induced by a policy table."""
    P_pi = np.einsum('sa,sat->st', table, M.transition)
    R_pi = np.einsum('sa,sa->s', table, M.reward)
    return P_pi, R_pi


def evaluate(M, pi):
    """
    Evaluate a policy exactly on an MDP.

    The values solve V = R_pi + gamma * P_pi V and the state occupancy solves
    d = (1 - gamma) * rho + gamma * P_pi^T d; both are found by direct
    elimination, so no iteration tolerance enters the result.

    Args:
        M: TabularMdp
        pi: Policy with matching dimensions

    Returns:
        ValueReport with v, q, j and the (s, a) occupancy
    """
    _check_policy(M, pi)
    P_pi, R_pi = _markov_chain(M, pi.table)
    A = np.eye(M.n_states) - M.gamma * P_pi
    v = np.linalg.solve(A, R_pi)
    q = M.reward + M.gamma * M.transition @ v
    d_state = (1 - M.gamma) * np.linalg.solve(A.T, M.initial_dist)
    occupancy = np.clip(d_state[:, None] * pi.table, 0, None)
    j = float(M.initial_dist @ v)
    return ValueReport(v=v, q=q, j=j, occupancy=occupancy)


def batch_returns(M, tables):
    """
    Return J_M for a stack of policy tables.

    The solve is batched over policies.  A given table always produces the
    same bits regardless of its position in the stack, which keeps payoff
    differences of identical policies exactly zero.

    Args:
        M: TabularMdp
        tables: array of shape (n_policies, n_states, n_actions)

    Returns:
        array of n_policies returns
    """
    tables = np.asarray(tables, dtype=float)
    if tables.ndim != 3 or tables.shape[1:] != (M.n_states, M.n_actions):
        raise ValueError("policy tables of shape %s do not match MDP (%d states, %d actions)"
                         % (tables.shape, M.n_states, M.n_actions))
    P_pi = np.einsum('psa,sat->pst', tables, M.transition)
    R_pi = np.einsum('psa,sa->ps', tables, M.reward)
    A = np.eye(M.n_states)[None, :, :] - M.gamma * P_pi
    v = np.linalg.solve(A, R_pi[..., None])[..., 0]
    return v @ M.initial_dist


def evaluate_mixed(M, mixed):
    """
    Return the expected return of an episode-level mixture.

    Args:
        M: TabularMdp
        mixed: MixedPolicy

    Returns:
        sum of weight times atom return
    """
    returns = np.array([evaluate(M, atom).j for atom in mixed.atoms])
    return float(mixed.weights @ returns)


def tv_distance(p, q):
    """
    Total variation distance between two discrete distributions.

    Args:
        p: probability vector
        q: probability vector of the same length

    Returns:
        0.5 * sum |p_i - q_i|, a number in [0, 1]
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError("tv_distance needs two vectors of equal length")
    _check_distribution(p, 'p', atol=1e-9)
    _check_distribution(q, 'q', atol=1e-9)
    return float(min(1.0, 0.5 * np.sum(np.abs(p - q))))


def simulation_gap_bound(M, M_prime, pi, occupancy_under='first'):
    """
    Return both sides of the simulation lemma for one policy.

    The right side is

        V_max/(1-gamma) * E_d[TV(P_M, P_M')] + 1/(1-gamma) * E_d[|R_M - R_M'|]

    where d is the occupancy of pi under M (`occupancy_under='first'`) or
    under M' (`occupancy_under='second'`).

    Args:
        M: TabularMdp
        M_prime: TabularMdp sharing dimensions and gamma with M
        pi: Policy
        occupancy_under: 'first' or 'second'

    Returns:
        (lhs, rhs) where lhs = |J_M(pi) - J_M'(pi)|
    """
    if M.reward.shape != M_prime.reward.shape or M.gamma != M_prime.gamma:
        raise ValueError("the two models must share dimensions and gamma")
    if occupancy_under not in ('first', 'second'):
        raise ValueError("occupancy_under must be 'first' or 'second'")
    first = evaluate(M, pi)
    second = evaluate(M_prime, pi)
    d = first.occupancy if occupancy_under == 'first' else second.occupancy
    tv = 0.5 * np.sum(np.abs(M.transition - M_prime.transition), axis=-1)
    dr = np.abs(M.reward - M_prime.reward)
    scale = 1 / (1 - M.gamma)
    lhs = abs(first.j - second.j)
    rhs = M.v_max * scale * np.sum(d * tv) + scale * np.sum(d * dr)
    return float(lhs), float(rhs)


def value_iteration(M, pi, horizon):
    """
    Truncated policy evaluation by repeated Bellman backups.

    Starting from V = 0, after `horizon` backups the return differs from
    the exact one by at most gamma**horizon * V_max.

    Args:
        M: TabularMdp
        pi: Policy
        horizon: number of backups

    Returns:
        (j, v) truncated return and state values
    """
    _check_policy(M, pi)
    P_pi, R_pi = _markov_chain(M, pi.table)
    v = np.zeros(M.n_states)
    for _ in range(int(horizon)):
        v = R_pi + M.gamma * P_pi @ v
    return float(M.initial_dist @ v), v


def _sample_rows(cdf, u):
    """Index of the first cdf entry exceeding u along the last axis."""
    return np.argmax(cdf > u[:, None], axis=1)


def sample_returns(M, mixed, episodes, horizon, seed):
    """
    Monte Carlo estimate of the return of a mixed policy.

    Each episode draws one atom, an initial state from initial_dist, and then
    follows the atom for `horizon` steps.

    Args:
        M: TabularMdp
        mixed: MixedPolicy (or a single Policy)
        episodes: number of simulated episodes
        horizon: steps per episode
        seed: seed for numpy.random.default_rng

    Returns:
        (mean, standard error) of the discounted returns
    """
    if isinstance(mixed, Policy):
        mixed = MixedPolicy((mixed,), np.ones(1))
    rng = np.random.default_rng(seed)
    atom_actions = np.array([atom.actions for atom in mixed.atoms])
    cdf = np.cumsum(M.transition, axis=-1)
    cdf /= cdf[..., -1:]
    rho_cdf = np.cumsum(M.initial_dist)
    rho_cdf /= rho_cdf[-1]

    atoms = rng.choice(len(mixed.atoms), size=episodes, p=mixed.weights)
    states = _sample_rows(np.broadcast_to(rho_cdf, (episodes, M.n_states)),
                          rng.random(episodes))
    total = np.zeros(episodes)
    discount = 1.0
    for _ in range(int(horizon)):
        actions = atom_actions[atoms, states]
        total += discount * M.reward[states, actions]
        states = _sample_rows(cdf[states, actions], rng.random(episodes))
        discount *= M.gamma
    stderr = np.std(total, ddof=1) / np.sqrt(episodes) if episodes > 1 else np.inf
    return float(np.mean(total)), float(stderr)


def optimal_values(M, max_iter=1000):
    """
    Solve an MDP exactly by policy iteration.

    Ties in the greedy step go to the lowest action index.

    Args:
        M: TabularMdp
        max_iter: iteration limit

    Returns:
        (Policy, V) optimal deterministic policy and its state values
    """
    actions = np.zeros(M.n_states, dtype=int)
    for _ in range(max_iter):
        report = evaluate(M, Policy.from_actions(actions, M.n_actions))
        best = report.q.max(axis=1)
        improvable = best > report.q[np.arange(M.n_states), actions] + 1e-12
        if not np.any(improvable):
            return Policy.from_actions(actions, M.n_actions), report.v
        actions = np.where(improvable, np.argmax(report.q, axis=1), actions)
    raise RuntimeError("policy iteration did not converge in %d iterations" % max_iter)


def random_mdp(rng, n_states, n_actions, gamma=0.9, concentration=1.0):
    """
    Draw a random MDP.

    Transition rows are Dirichlet(concentration), rewards uniform on [0, 1]
    and the initial distribution Dirichlet(1).

    Args:
        rng: numpy Generator
        n_states: number of states
        n_actions: number of actions
        gamma: discount factor
        concentration: Dirichlet parameter for transition rows

    Returns:
        TabularMdp
    """
    P = rng.dirichlet(np.full(n_states, concentration), size=(n_states, n_actions))
    R = rng.random((n_states, n_actions))
    rho = rng.dirichlet(np.ones(n_states))
    return TabularMdp(P, R, gamma, rho)


def two_state_mdp(gamma=0.9, go_success=1.0, stay_reward=0.0):
    """
    Build the two-state chain used throughout the tests and experiments.

    Action 0 is 'stay' and action 1 is 'go'.  In s0, 'stay' keeps the agent
    in s0 with reward `stay_reward`; 'go' reaches s1 with probability
    `go_success` and otherwise stays in s0, with reward 0.  In s1, 'stay'
    keeps the agent there with reward 1 and 'go' returns to s0 with reward 0.
    Episodes start in s0.

    Args:
        gamma: discount factor
        go_success: probability that 'go' leaves s0
        stay_reward: reward for staying in s0

    Returns:
        TabularMdp
    """
    P = np.zeros((2, 2, 2))
    P[0, 0, 0] = 1
    P[0, 1, 1] = go_success
    P[0, 1, 0] = 1 - go_success
    P[1, 0, 1] = 1
    P[1, 1, 0] = 1
    R = np.array([[stay_reward, 0.0], [1.0, 0.0]])
    return TabularMdp(P, R, gamma, np.array([1.0, 0.0]))


def mdp_to_dict(M):
    """Return the JSON document for an MDP."""
    return {'n_states': M.n_states,
            'n_actions': M.n_actions,
            'gamma': M.gamma,
            'initial_dist': M.initial_dist.tolist(),
            'transition': M.transition.tolist(),
            'reward': M.reward.tolist()}


def mdp_from_dict(d):
    """
    Build an MDP from its JSON document.

    Args:
        d: dict with n_states, n_actions, gamma, initial_dist, transition, reward

    Returns:
        TabularMdp
    """
    try:
        M = TabularMdp(d['transition'], d['reward'], d['gamma'], d['initial_dist'])
    except KeyError as err:
        raise ValueError("MDP document is missing field %s" % err) from err
    if (d.get('n_states', M.n_states), d.get('n_actions', M.n_actions)) != \
            (M.n_states, M.n_actions):
        raise ValueError("declared n_states/n_actions do not match the tables")
    return M


def save_mdp(M, path):
    """Write an MDP as one JSON document."""
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(mdp_to_dict(M), f)


def load_mdp(path):
    """Read an MDP written by `save_mdp`."""
    with open(path, 'r', encoding='utf-8') as f:
        return mdp_from_dict(json.load(f))


def policy_to_dict(pi):
    """Return {'actions': [...]} for deterministic policies, else {'table': [[...]]}."""
    if pi.is_deterministic:
        return {'actions': list(pi.actions), 'n_actions': pi.n_actions}
    return {'table': pi.table.tolist()}


def policy_from_dict(d, n_actions=None):
    """
    Build a Policy from a policy document.

    Args:
        d: {'actions': [...], 'n_actions': k} or {'table': [[...]]}
        n_actions: action count used when the document omits it

    Returns:
        Policy
    """
    if 'table' in d:
        return Policy(d['table'])
    if 'actions' in d:
        k = d.get('n_actions', n_actions)
        if k is None:
            raise ValueError("a policy given by actions needs n_actions")
        return Policy.from_actions(d['actions'], k)
    raise ValueError("policy document needs 'actions' or 'table'")


def save_policy(pi, path):
    """Write a policy document."""
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(policy_to_dict(pi), f)


def load_policy(path, n_actions=None):
    """Read a policy document written by `save_policy`."""
    with open(path, 'r', encoding='utf-8') as f:
        return policy_from_dict(json.load(f), n_actions)
