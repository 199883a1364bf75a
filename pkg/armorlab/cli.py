# pylint: disable=invalid-name
"""
Command-line interface ``armor-lab``.

See <https://armorlab.readthedocs.io> for usage examples.

Verbs::

    armor-lab gen-instance [--crafted NAME | recipe options]
    armor-lab gen-data --mdp FILE --behavior FILE --n N [--noise S]
    armor-lab vspace --class FILE --data FILE --alpha A
    armor-lab solve --class FILE --data FILE --alpha A --ref FILE [--mode pure|mixed]
    armor-lab fixedpoint --class FILE --data FILE --alpha A --psi zero|ref|regret|singleton
    armor-lab verify --suite NAME [--config FILE] [--instance FILE]
    armor-lab sweep --config FILE

Global flags ``--seed``, ``--jobs`` and ``--out-dir`` come before the verb.
Errors print one line on stderr and exit with status 2; a failed asserted
check exits with status 1.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

import pandas as pd

from armorlab.experiments import (RandomInstanceRecipe, SUITES, ExperimentConfig,
                                  config_hash, generate_instance, load_config, load_instance,
                                  run_sweep, save_instance, separation_instance,
                                  truth_excluded_instance, two_state_instance)
from armorlab.fixed_point import PsiSpec, is_fixed_point, psi_policy
from armorlab.maximin import (armor_policy, build_game_matrix, enumerate_policies)
from armorlab.mdp_core import (Policy, load_mdp, load_policy, policy_from_dict, policy_to_dict,
                               save_mdp, save_policy)
from armorlab.offline_data import (BehaviorDistribution, behavior_from_policy, load_dataset,
                                   sample_dataset, save_dataset)
from armorlab.version_space import build_version_space, load_model_class, save_model_class

__all__ = ('main',
           'build_parser')

CRAFTED = {'two_state': two_state_instance,
           'separation': separation_instance,
           'truth_excluded': truth_excluded_instance}
PSI_NAMES = {'zero': 'zero', 'ref': 'neg_ref_return', 'regret': 'neg_optimal_return',
             'singleton': 'singleton'}


def _out(args, name):
    os.makedirs(args.out_dir or '.', exist_ok=True)
    return os.path.join(args.out_dir or '.', name)


def _print_json(doc):
    print(json.dumps(doc, indent=2, sort_keys=True))


def _policy_doc(policy):
    """JSON form of a Policy or MixedPolicy."""
    if isinstance(policy, Policy):
        return policy_to_dict(policy)
    return {'atoms': [list(a.actions) for a in policy.atoms],
            'weights': policy.weights.tolist()}


def _load_behavior(path, mdp_path=None):
    """A behavior file holds {'weights': ...} or a policy whose occupancy is used."""
    with open(path, 'r', encoding='utf-8') as f:
        doc = json.load(f)
    if 'weights' in doc:
        return BehaviorDistribution(doc['weights'])
    if mdp_path is None:
        raise ValueError("a behavior policy file needs the MDP to compute its occupancy")
    M = load_mdp(mdp_path)
    return behavior_from_policy(M, policy_from_dict(doc, M.n_actions))


def cmd_gen_instance(args):
    """Write an instance and its parts (MDP, class, behavior, policies)."""
    if args.crafted:
        inst = CRAFTED[args.crafted]()
    else:
        recipe = RandomInstanceRecipe(n_states=args.states, n_actions=args.actions,
                                      class_size=args.class_size,
                                      perturbation=args.perturbation,
                                      temperature=args.temperature, gamma=args.gamma)
        inst = generate_instance(recipe, args.seed or 0, n=args.n, noise=args.noise)
    paths = {'instance': _out(args, 'instance.json'),
             'mdp': _out(args, 'mdp.json'),
             'class': _out(args, 'model_class.json'),
             'behavior': _out(args, 'behavior.json'),
             'ref': _out(args, 'ref_policy.json')}
    save_instance(inst, paths['instance'])
    save_mdp(inst.m_star, paths['mdp'])
    save_model_class(inst.mc, paths['class'])
    with open(paths['behavior'], 'w', encoding='utf-8') as f:
        json.dump({'weights': inst.mu.weights.tolist()}, f)
    save_policy(inst.pi_ref, paths['ref'])
    if inst.pi_comp is not None:
        paths['comp'] = _out(args, 'comp_policy.json')
        save_policy(inst.pi_comp, paths['comp'])
    _print_json(paths)
    return 0


def cmd_gen_data(args):
    """Sample a dataset from an MDP and a behavior distribution."""
    M = load_mdp(args.mdp)
    mu = _load_behavior(args.behavior, args.mdp)
    D = sample_dataset(M, mu, args.n, args.seed or 0, noise=args.noise)
    path = args.out or _out(args, 'data.jsonl')
    save_dataset(D, path)
    print(path)
    return 0


def cmd_vspace(args):
    """Print model losses and version-space membership as CSV."""
    mc = load_model_class(args.model_class)
    vs = build_version_space(mc, load_dataset(args.data), args.alpha)
    table = pd.DataFrame({'model': range(len(mc)),
                          'loss': vs.losses,
                          'gap': vs.max_loss - vs.losses,
                          'member': [i in vs for i in range(len(mc))]})
    table.to_csv(sys.stdout, index=False)
    return 0


def cmd_solve(args):
    """Learn a policy by relative pessimism and print the result as JSON."""
    mc = load_model_class(args.model_class)
    D = load_dataset(args.data)
    pi_ref = load_policy(args.ref, mc.models[0].n_actions)
    result = armor_policy(mc, D, args.alpha, pi_ref, mode=args.mode, eps=args.eps)
    if args.matrix_csv:
        vs = build_version_space(mc, D, args.alpha)
        M0 = mc.models[0]
        g = build_game_matrix(vs.select(mc), enumerate_policies(M0.n_states, M0.n_actions),
                              pi_ref, model_ids=vs.member_indices)
        pd.DataFrame(g.payoff, columns=['model_%d' % m for m in g.col_index],
                     index=pd.Index([str(pi.actions) for pi in g.row_index], name='policy')
                     ).to_csv(args.matrix_csv)
    _print_json({'policy': _policy_doc(result.policy),
                 'value': result.value,
                 'worst_model': result.worst_model,
                 'duality_gap': result.duality_gap,
                 'members': list(result.meta['members']),
                 'truth_in_version_space': result.meta['truth_in_version_space']})
    return 0


def cmd_fixedpoint(args):
    """Solve a psi-policy and certify that it is a fixed point."""
    mc = load_model_class(args.model_class)
    vs = build_version_space(mc, load_dataset(args.data), args.alpha)
    models = vs.select(mc)
    M0 = mc.models[0]
    policies = enumerate_policies(M0.n_states, M0.n_actions)
    kind = PSI_NAMES[args.psi]
    payload = None
    if kind == 'neg_ref_return':
        if not args.ref:
            raise ValueError("--psi ref needs --ref")
        payload = load_policy(args.ref, M0.n_actions)
    elif kind == 'singleton':
        if args.model is None:
            raise ValueError("--psi singleton needs --model")
        payload = args.model
    spec = PsiSpec(kind, payload, tuple(args.subset) if args.subset else None)
    result = psi_policy(models, spec, policies, vs.member_indices)
    fixed, certificate = is_fixed_point(result.policy, models, policies)
    _print_json({'policy': _policy_doc(result.policy),
                 'value': result.value,
                 'psi': result.meta['psi'],
                 'certificate': certificate})
    print('%s: fixed point certificate %.3g' % ('PASS' if fixed else 'FAIL', certificate))
    return 0 if fixed else 1


def _config(args, suites=None):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if suites:
        overrides['suites'] = tuple(suites)
    if args.seed is not None:
        overrides['seed'] = args.seed
    if args.jobs is not None:
        overrides['jobs'] = args.jobs
    if args.out_dir is not None:
        overrides['out_dir'] = args.out_dir
    return replace(cfg, **overrides)


def _summarize(result, cfg):
    frame = result.reports
    print('config %s, seed %d' % (config_hash(cfg)[:12], cfg.seed))
    for name in cfg.suites:
        rows = frame[frame['name'].str.split('.').str[0] == name]
        asserted = rows[rows['asserted']]
        failed = asserted[~asserted['passed']]
        print('%-12s %5d reports  %5d asserted  %5d failed'
              % (name, len(rows), len(asserted), len(failed)))
    for path in result.files:
        print('wrote %s' % path)
    if len(result.failures):
        print('FAIL: %d asserted checks failed' % len(result.failures))
        return 1
    print('PASS')
    return 0


def cmd_verify(args):
    """Run one suite from a config, optionally on a single instance file."""
    cfg = _config(args, [args.suite])
    instances = [load_instance(args.instance)] if args.instance else None
    return _summarize(run_sweep(cfg, instances), cfg)


def cmd_sweep(args):
    """Run every suite named in the config."""
    cfg = _config(args)
    return _summarize(run_sweep(cfg), cfg)


def _global_options(parser, default):
    parser.add_argument('--seed', type=int, default=default, help='base random seed')
    parser.add_argument('--jobs', type=int, default=default, help='parallel workers for sweeps')
    parser.add_argument('--out-dir', default=default, help='directory for output files')


OUTPUT_HELP = """\
output: <out-dir>/<suite>.csv has one row per report with the columns
config_hash, base_seed, name, passed, asserted, lhs, rhs, trials, details,
instance and the values of the suite (alpha, game_value, c_fit, ...).
rpi_plot.csv and trend_plot.csv hold plot data; reports.jsonl holds every
report.  Exit status 1 if an asserted check fails, 2 on errors.
"""


def build_parser():
    """Return the argparse parser for ``armor-lab``."""
    # global flags are accepted before or after the verb
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, argparse.SUPPRESS)
    parser = argparse.ArgumentParser(
        prog='armor-lab',
        description='Relative pessimism for offline RL on finite MDPs, with numerical checks '
                    'of its guarantees.')
    _global_options(parser, None)
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='-v for progress, -vv for solver details')
    sub = parser.add_subparsers(dest='verb', required=True)

    p = sub.add_parser('gen-instance', help='generate an instance and its files', parents=[common])
    p.add_argument('--crafted', choices=sorted(CRAFTED), help='write a crafted instance')
    p.add_argument('--states', type=int, nargs='+', default=[2, 3, 4])
    p.add_argument('--actions', type=int, nargs='+', default=[2, 3])
    p.add_argument('--class-size', type=int, default=8)
    p.add_argument('--perturbation', type=float, default=0.3)
    p.add_argument('--temperature', type=float, default=1.0)
    p.add_argument('--gamma', type=float, default=0.9)
    p.add_argument('--n', type=int, default=100, help='default dataset size of the instance')
    p.add_argument('--noise', type=float, default=None)
    p.set_defaults(func=cmd_gen_instance)

    p = sub.add_parser('gen-data', help='sample an offline dataset', parents=[common])
    p.add_argument('--mdp', required=True)
    p.add_argument('--behavior', required=True,
                   help="{'weights': [[...]]} file or a policy file")
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--noise', type=float, default=None)
    p.add_argument('--out', default=None)
    p.set_defaults(func=cmd_gen_data)

    for verb, func, text in (('vspace', cmd_vspace, 'print losses and membership as CSV'),
                             ('solve', cmd_solve, 'learn a policy by relative pessimism'),
                             ('fixedpoint', cmd_fixedpoint, 'solve and certify a psi-policy')):
        p = sub.add_parser(verb, help=text, parents=[common])
        p.add_argument('--class', dest='model_class', required=True)
        p.add_argument('--data', required=True)
        p.add_argument('--alpha', type=float, required=True, help='threshold, "inf" allowed')
        if verb == 'solve':
            p.add_argument('--ref', required=True)
            p.add_argument('--mode', choices=('pure', 'mixed'), default='pure')
            p.add_argument('--eps', type=float, default=1e-6)
            p.add_argument('--matrix-csv', default=None, help='also write the payoff matrix')
        if verb == 'fixedpoint':
            p.add_argument('--psi', choices=sorted(PSI_NAMES), required=True)
            p.add_argument('--ref', default=None)
            p.add_argument('--model', type=int, default=None)
            p.add_argument('--subset', type=int, nargs='+', default=None)
        p.set_defaults(func=func)

    p = sub.add_parser('verify', help='run one check suite', parents=[common],
                       epilog=OUTPUT_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument('--suite', choices=SUITES, required=True)
    p.add_argument('--config', default=None)
    p.add_argument('--instance', default=None, help='run on this instance file only')
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser('sweep', help='run every suite in a config', parents=[common],
                       epilog=OUTPUT_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument('--config', required=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    """Entry point; returns the exit status."""
    args = build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as err:
        print('armor-lab: error: %s' % err, file=sys.stderr)
        return 2


if __name__ == '__main__':
    sys.exit(main())
