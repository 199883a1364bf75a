# pylint: disable=invalid-name
# pylint: disable=too-many-arguments
# pylint: disable=too-many-instance-attributes
"""
Instances, experiment configuration and sweeps.

See <https://armorlab.readthedocs.io> for usage examples.

Random instances are generated around a random true model; the candidate
models perturb its transitions and rewards, and the true model sits at a
recorded index of the class::

    generate_instance(recipe, seed)

Crafted instances used by the tests and the documentation::

    two_state_instance(seed=3, n=50)
    separation_instance()
    truth_excluded_instance()

Instance files::

    save_instance(inst, path)
    load_instance(path)

Sweeps read a JSON configuration (see docs/config.rst) and write one CSV per
suite, a JSON-lines file of every report and plot-data CSVs::

    load_config(path)
    config_from_dict(d)
    config_hash(cfg)
    run_suite(name, instances, cfg)
    run_sweep(cfg)
"""

import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields

import numpy as np
import pandas as pd
import matplotlib.pyplot as plt
from joblib import Parallel, delayed

from armorlab.mdp_core import (Policy, TabularMdp, mdp_from_dict, mdp_to_dict, policy_from_dict,
                               policy_to_dict, random_mdp, two_state_mdp)
from armorlab.offline_data import BehaviorDistribution, behavior_from_policy
from armorlab.version_space import ModelClass, alpha_from_theory
from armorlab.theory_checks import (Instance, check_absolute_decomposition, check_fixed_points,
                                    check_on_support_bound, check_rpi, check_simulation_lemma,
                                    check_solution_concepts, check_solvers,
                                    check_suboptimality_trend, mle_coverage_experiment,
                                    version_space_coverage_experiment)

__all__ = ('RandomInstanceRecipe',
           'ExperimentConfig',
           'ConfigError',
           'SweepResult',
           'SUITES',
           'generate_instance',
           'two_state_instance',
           'separation_instance',
           'truth_excluded_instance',
           'save_instance',
           'load_instance',
           'load_config',
           'config_from_dict',
           'config_to_dict',
           'config_hash',
           'run_suite',
           'run_sweep')

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """The experiment configuration is invalid."""


def _choices(value, name):
    values = (value,) if np.isscalar(value) else tuple(value)
    if not values or any(int(v) != v or v < 1 for v in values):
        raise ValueError("%s must be a positive integer or a list of them" % name)
    return tuple(int(v) for v in values)


@dataclass(frozen=True)
class RandomInstanceRecipe:
    """
    How to draw a random instance.

    Attributes:
        n_states: state count, or a list to choose from uniformly
        n_actions: action count, or a list to choose from uniformly
        class_size: number of models including the true one
        perturbation: scale of the Gaussian noise added to P* and R*
        temperature: softmax temperature of the behavior policy
        gamma: discount factor
    """

    n_states: tuple = (2, 3, 4)
    n_actions: tuple = (2, 3)
    class_size: int = 8
    perturbation: float = 0.3
    temperature: float = 1.0
    gamma: float = 0.9

    def __post_init__(self):
        """Validate the recipe."""
        object.__setattr__(self, 'n_states', _choices(self.n_states, 'n_states'))
        object.__setattr__(self, 'n_actions', _choices(self.n_actions, 'n_actions'))
        if int(self.class_size) != self.class_size or self.class_size < 1:
            raise ValueError("class_size must be a positive integer")
        if not self.perturbation >= 0:
            raise ValueError("perturbation must be >= 0")
        if not self.temperature > 0:
            raise ValueError("temperature must be > 0")
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must satisfy 0 <= gamma < 1")


def _perturb(rng, M, scale):
    """Candidate model near M; transition rows renormalized, rewards clipped."""
    if scale == 0:
        return M
    P = np.abs(M.transition + scale * rng.normal(size=M.transition.shape))
    P /= P.sum(axis=-1, keepdims=True)
    R = np.clip(M.reward + scale * rng.normal(size=M.reward.shape), 0, 1)
    return TabularMdp(P, R, M.gamma, M.initial_dist)


def _softmax_policy(rng, n_states, n_actions, temperature):
    logits = rng.normal(size=(n_states, n_actions)) / temperature
    table = np.exp(logits - logits.max(axis=1, keepdims=True))
    return Policy(table / table.sum(axis=1, keepdims=True))


def generate_instance(recipe, seed, n=100, noise=None):
    """
    Draw a random instance.

    The behavior distribution is the occupancy of a softmax policy under the
    true model.  Reference and comparator policies are uniformly random
    deterministic policies.  The result depends only on the recipe and seed.

    Args:
        recipe: RandomInstanceRecipe
        seed: integer seed
        n: default dataset size stored in the instance
        noise: reward-noise half-width stored in the instance

    Returns:
        Instance
    """
    rng = np.random.default_rng(seed)
    n_states = int(rng.choice(recipe.n_states))
    n_actions = int(rng.choice(recipe.n_actions))
    m_star = random_mdp(rng, n_states, n_actions, recipe.gamma)
    truth_index = int(rng.integers(recipe.class_size))
    models = [m_star if k == truth_index else _perturb(rng, m_star, recipe.perturbation)
              for k in range(recipe.class_size)]
    mu = behavior_from_policy(m_star, _softmax_policy(rng, n_states, n_actions,
                                                      recipe.temperature))
    pi_ref = Policy.from_actions(rng.integers(n_actions, size=n_states), n_actions)
    pi_comp = Policy.from_actions(rng.integers(n_actions, size=n_states), n_actions)
    return Instance(m_star, ModelClass(models, truth_index), mu, pi_ref, pi_comp,
                    seed=int(seed), n=n, noise=noise)


def two_state_instance(seed=3, n=50):
    """
    Two-state chain with a five-model class over the success probability of 'go'.

    The true model has success 0.9; below about 0.0476 staying in s0
    (reward 0.3 per step) beats going.  The reference policy always stays
    and the comparator goes from s0.
    """
    successes = (0.9, 0.6, 0.3, 0.04, 0.01)
    models = [two_state_mdp(0.9, go_success=q, stay_reward=0.3) for q in successes]
    mu = BehaviorDistribution(np.array([[0.48, 0.02], [0.25, 0.25]]))
    return Instance(models[0], ModelClass(models, 0), mu,
                    pi_ref=Policy.from_actions((0, 0), 2),
                    pi_comp=Policy.from_actions((1, 0), 2), seed=seed, n=n)


def _bandit(rewards, gamma=0.5):
    """One-state MDP with the given reward per action."""
    k = len(rewards)
    return TabularMdp(np.ones((1, k, 1)), np.array([rewards], dtype=float), gamma, np.ones(1))


def separation_instance():
    """
    One state, two actions, two models that agree on action 0.

    The data only shows action 0, so both models stay in the version space.
    Return maximin picks action 0, regret minimax picks action 1 and the
    optimistic pair is (action 1, model 0).
    """
    models = [_bandit((0.5, 1.0)), _bandit((0.5, 0.4))]
    mu = BehaviorDistribution(np.array([[1.0, 0.0]]))
    return Instance(models[0], ModelClass(models, 0), mu,
                    pi_ref=Policy.from_actions((0,), 2), seed=0, n=20)


def truth_excluded_instance():
    """
    One state and two models with opposite rewards.

    Removing the true model from the version space leaves only the model
    that prefers action 1, which is the worse action in truth.
    """
    models = [_bandit((1.0, 0.0)), _bandit((0.0, 1.0))]
    mu = BehaviorDistribution(np.array([[0.5, 0.5]]))
    return Instance(models[0], ModelClass(models, 0), mu,
                    pi_ref=Policy.from_actions((0,), 2), seed=0, n=20)


def save_instance(inst, path):
    """Write an instance as one JSON document."""
    doc = {'m_star': mdp_to_dict(inst.m_star),
           'models': [mdp_to_dict(M) for M in inst.mc.models],
           'truth_index': inst.mc.truth_index,
           'mu': inst.mu.weights.tolist(),
           'pi_ref': policy_to_dict(inst.pi_ref),
           'pi_comp': None if inst.pi_comp is None else policy_to_dict(inst.pi_comp),
           'seed': inst.seed,
           'n': inst.n,
           'noise': inst.noise}
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(doc, f)


def load_instance(path):
    """Read an instance written by `save_instance`."""
    with open(path, 'r', encoding='utf-8') as f:
        doc = json.load(f)
    try:
        m_star = mdp_from_dict(doc['m_star'])
        models = tuple(mdp_from_dict(m) for m in doc['models'])
        n_actions = m_star.n_actions
        pi_comp = doc.get('pi_comp')
        return Instance(m_star, ModelClass(models, doc.get('truth_index')),
                        BehaviorDistribution(doc['mu']),
                        policy_from_dict(doc['pi_ref'], n_actions),
                        None if pi_comp is None else policy_from_dict(pi_comp, n_actions),
                        seed=doc.get('seed', 0), n=doc.get('n', 100), noise=doc.get('noise'))
    except KeyError as err:
        raise ValueError("instance file is missing field %s" % err) from err


SUITES = ('rpi', 'fixedpoint', 'absolute', 'trend', 'mle', 'coverage', 'support',
          'concepts', 'simulation', 'solver')
INSTANCE_FREE = ('simulation', 'solver')


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Validated sweep configuration; see docs/config.rst for every key.

    Attributes:
        seed: base seed; instance i uses a seed derived from (seed, i)
        instances: number of random instances
        recipe: RandomInstanceRecipe
        n: dataset size for the fixed-n suites
        n_grid: dataset sizes for the trend suite
        noise: reward-noise half-width or None
        alpha_grid: thresholds; inf allowed
        alpha_theory: {'delta': .., 'c': ..} to use alpha_from_theory instead of the grid
        mode: 'pure' or 'mixed'
        eps: mixed-solver duality-gap tolerance
        delta: failure probability for the statistical suites
        trials: datasets per grid point for the trend and support suites
        mle_trials: datasets for the mle and coverage suites
        c_diag: constant tested by the support suite
        suites: names from SUITES
        out_dir: output directory
        jobs: joblib worker count
        plot: also render PNG plots
    """

    seed: int = 0
    instances: int = 100
    recipe: RandomInstanceRecipe = field(default_factory=RandomInstanceRecipe)
    n: int = 100
    n_grid: tuple = (25, 100, 400)
    noise: float = None
    alpha_grid: tuple = (0.5, 1.0, 2.0, 5.0, np.inf)
    alpha_theory: dict = None
    mode: str = 'pure'
    eps: float = 1e-6
    delta: float = 0.1
    trials: int = 50
    mle_trials: int = 500
    c_diag: float = 1.0
    suites: tuple = ('rpi',)
    out_dir: str = 'results'
    jobs: int = 1
    plot: bool = False

    def alphas(self, inst):
        """Thresholds to use for one instance."""
        if self.alpha_theory:
            return [alpha_from_theory(len(inst.mc), self.alpha_theory.get('delta', self.delta),
                                      self.alpha_theory.get('c', 1.0))]
        return list(self.alpha_grid)


def _positive_int(d, key, minimum=1):
    value = d[key]
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError("%s must be an integer >= %d, got %r" % (key, minimum, value))
    return value


def _alpha(value):
    if value in ('inf', 'Infinity'):
        return np.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)) or value < 0:
        raise ConfigError("alpha_grid entries must be numbers >= 0 or \"inf\", got %r" % value)
    return float(value)


def config_from_dict(d):
    """
    Validate a configuration document.

    Args:
        d: dict parsed from the JSON configuration

    Returns:
        ExperimentConfig

    Raises:
        ConfigError: for unknown keys or invalid values
    """
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(d) - known)
    if unknown:
        raise ConfigError("unknown configuration keys: %s" % ', '.join(unknown))
    base = asdict(ExperimentConfig())
    base.update(d)

    for key in ('instances', 'n', 'trials', 'mle_trials', 'jobs'):
        _positive_int(base, key)
    _positive_int(base, 'seed', minimum=0)
    try:
        recipe = base['recipe']
        recipe = RandomInstanceRecipe(**recipe) if isinstance(recipe, dict) else recipe
    except (TypeError, ValueError) as err:
        raise ConfigError("invalid recipe: %s" % err) from err

    n_grid = base['n_grid']
    if not n_grid or any(isinstance(v, bool) or not isinstance(v, int) or v < 1
                         for v in n_grid):
        raise ConfigError("n_grid must be a non-empty list of positive integers")
    alpha_grid = base['alpha_grid']
    if not alpha_grid:
        raise ConfigError("alpha_grid must be non-empty")
    alpha_grid = tuple(_alpha(a) for a in alpha_grid)

    theory = base['alpha_theory']
    if theory is not None:
        if not isinstance(theory, dict) or set(theory) - {'delta', 'c'}:
            raise ConfigError("alpha_theory must be an object with keys delta and c")
        if not 0 < theory.get('delta', base['delta']) <= 1 or theory.get('c', 1.0) < 1:
            raise ConfigError("alpha_theory needs 0 < delta <= 1 and c >= 1")

    suites = base['suites']
    if isinstance(suites, str):
        suites = [suites]
    if not suites or set(suites) - set(SUITES):
        raise ConfigError("suites must be a non-empty subset of %s" % (SUITES,))
    if base['mode'] not in ('pure', 'mixed'):
        raise ConfigError("mode must be 'pure' or 'mixed'")
    if not base['eps'] > 0:
        raise ConfigError("eps must be positive")
    if not 0 < base['delta'] <= 1:
        raise ConfigError("delta must lie in (0, 1]")
    if not base['c_diag'] > 0:
        raise ConfigError("c_diag must be positive")
    noise = base['noise']
    if noise is not None and not (isinstance(noise, (int, float)) and noise >= 0):
        raise ConfigError("noise must be null or a number >= 0")

    base.update(recipe=recipe, n_grid=tuple(n_grid), alpha_grid=alpha_grid,
                suites=tuple(suites), out_dir=str(base['out_dir']), plot=bool(base['plot']))
    return ExperimentConfig(**base)


def load_config(path):
    """Read and validate a JSON configuration file."""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            doc = json.load(f)
    except json.JSONDecodeError as err:
        raise ConfigError("%s is not valid JSON: %s" % (path, err)) from err
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    return config_from_dict(doc)


def config_to_dict(cfg):
    """Return the canonical JSON-ready form of a configuration."""
    d = asdict(cfg)
    d['alpha_grid'] = ['inf' if np.isinf(a) else a for a in cfg.alpha_grid]
    for key, value in d.items():
        if isinstance(value, tuple):
            d[key] = list(value)
    d['recipe'] = {k: list(v) if isinstance(v, tuple) else v for k, v in d['recipe'].items()}
    return d


def config_hash(cfg):
    """SHA-256 of the sorted-key JSON form of a configuration."""
    text = json.dumps(config_to_dict(cfg), sort_keys=True)
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def _instance_seed(seed, i):
    return int(np.random.SeedSequence([seed, i]).generate_state(1)[0])


def _run_point(name, inst, cfg):
    """Run one suite on one instance (or once, for instance-free suites)."""
    if name == 'rpi':
        return check_rpi(inst, cfg.alphas(inst), mode=cfg.mode)
    if name == 'fixedpoint':
        return [r for a in cfg.alphas(inst) for r in check_fixed_points(inst, a)]
    if name == 'absolute':
        return [check_absolute_decomposition(inst, a) for a in cfg.alphas(inst)]
    if name == 'concepts':
        return [r for a in cfg.alphas(inst) for r in check_solution_concepts(inst, a)]
    if name == 'trend':
        return [check_suboptimality_trend(inst, list(cfg.n_grid), cfg.trials, cfg.delta)]
    if name == 'mle':
        return [mle_coverage_experiment(inst, cfg.n, cfg.mle_trials, cfg.delta)]
    if name == 'coverage':
        return [version_space_coverage_experiment(inst, cfg.n, cfg.mle_trials, cfg.delta)]
    if name == 'support':
        return [check_on_support_bound(inst, cfg.n, cfg.trials, cfg.c_diag, cfg.delta)]
    if name == 'simulation':
        return [check_simulation_lemma(seed=cfg.seed)]
    if name == 'solver':
        return check_solvers(eps=cfg.eps, seed=cfg.seed)
    raise ValueError("unknown suite %r" % name)


def run_suite(name, instances, cfg):
    """
    Run one suite over a list of instances.

    Instances are processed by `cfg.jobs` joblib workers; results come back
    in instance order.

    Args:
        name: suite name from SUITES
        instances: list of Instance
        cfg: ExperimentConfig

    Returns:
        list of report dicts, each with an 'instance' column
    """
    if name not in SUITES:
        raise ValueError("unknown suite %r" % name)
    if name in INSTANCE_FREE:
        batches = [_run_point(name, None, cfg)]
    else:
        batches = Parallel(n_jobs=cfg.jobs)(delayed(_run_point)(name, inst, cfg)
                                            for inst in instances)
    rows = []
    for i, reports in enumerate(batches):
        for report in reports:
            row = report.to_dict()
            row['instance'] = i
            rows.append(row)
    failures = sum(1 for r in rows if r['asserted'] and not r['passed'])
    logger.info("suite %s: %d reports, %d failed", name, len(rows), failures)
    return rows


@dataclass(frozen=True, eq=False)
class SweepResult:
    """
    Outcome of a sweep.

    Attributes:
        reports: pandas.DataFrame with one row per CheckReport
        files: paths written, in order
    """

    reports: pd.DataFrame
    files: tuple

    @property
    def failures(self):
        """Rows of asserted checks that did not pass."""
        if self.reports.empty:
            return self.reports
        return self.reports[self.reports['asserted'] & ~self.reports['passed']]


def _plot_data(frame, name):
    """Plot-data table for suites that have one, else None."""
    if name == 'trend':
        rows = [{'instance': r.instance, 'n': n, 'mean': m, 'stderr': s, 'rate': q}
                for r in frame.itertuples()
                for n, m, s, q in zip(r.n_grid, r.means, r.stderrs, r.rates)]
        return pd.DataFrame(rows)
    if name == 'rpi':
        return (frame.groupby('alpha', sort=True)
                .agg(game_value=('game_value', 'mean'),
                     improvement=('rhs', 'mean'),
                     reference=('lhs', 'mean'),
                     truth_in_version_space=('truth_in_version_space', 'mean'))
                .reset_index())
    return None


def _render(plot_frame, name, path):
    fig, ax = plt.subplots()
    if name == 'trend':
        for _, group in plot_frame.groupby('instance'):
            ax.errorbar(group['n'], group['mean'], yerr=2 * group['stderr'], marker='o')
        ax.set_xscale('log')
        ax.set_xlabel('dataset size n')
        ax.set_ylabel('mean suboptimality')
    else:
        alpha = plot_frame['alpha'].replace(np.inf, np.nan)
        ax.plot(alpha, plot_frame['game_value'], marker='o')
        ax.set_xlabel('alpha')
        ax.set_ylabel('mean game value')
    ax.set_title(name)
    fig.savefig(path)
    plt.close(fig)


def run_sweep(cfg, instances=None):
    """
    Run every configured suite and write the results.

    Writes `<suite>.csv` and, where defined, `<suite>_plot.csv` (and a PNG
    when cfg.plot is set) per suite, plus `reports.jsonl` with every report.
    Every row carries the config hash and base seed.

    Args:
        cfg: ExperimentConfig
        instances: list of Instance overriding the generated ones

    Returns:
        SweepResult
    """
    digest = config_hash(cfg)
    if instances is None:
        instances = [generate_instance(cfg.recipe, _instance_seed(cfg.seed, i),
                                       n=cfg.n, noise=cfg.noise)
                     for i in range(cfg.instances)]
    os.makedirs(cfg.out_dir, exist_ok=True)
    files = []
    frames = []
    for name in cfg.suites:
        rows = run_suite(name, instances, cfg)
        frame = pd.DataFrame(rows)
        frame.insert(0, 'config_hash', digest)
        frame.insert(1, 'base_seed', cfg.seed)
        path = os.path.join(cfg.out_dir, '%s.csv' % name)
        frame.to_csv(path, index=False)
        files.append(path)

        plot_frame = _plot_data(frame, name) if len(frame) else None
        if plot_frame is not None:
            plot_frame.insert(0, 'config_hash', digest)
            plot_frame.insert(1, 'base_seed', cfg.seed)
            path = os.path.join(cfg.out_dir, '%s_plot.csv' % name)
            plot_frame.to_csv(path, index=False)
            files.append(path)
            if cfg.plot:
                path = os.path.join(cfg.out_dir, '%s.png' % name)
                _render(plot_frame, name, path)
                files.append(path)
        frames.append(frame)

    reports = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()
    path = os.path.join(cfg.out_dir, 'reports.jsonl')
    with open(path, 'w', encoding='utf-8') as f:
        for frame in frames:
            for row in frame.to_dict(orient='records'):
                f.write(json.dumps(row, sort_keys=True, default=_json_default) + '\n')
    files.append(path)
    result = SweepResult(reports, tuple(files))
    logger.info("sweep: %d reports, %d failed", len(reports), len(result.failures))
    return result


def _json_default(value):
    """Serialize numpy scalars that json cannot handle."""
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError("cannot serialize %r" % (value,))
