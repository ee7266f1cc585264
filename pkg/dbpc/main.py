#! /usr/bin/env python
# -*- coding: utf-8 -*-
# Create Date    :  2024-03-09 15:20
# Git Repo       :  https://github.com/Jerry-Ma
# Email Address  :  jerry.ma.nk@gmail.com


from __future__ import (absolute_import, division, print_function,
                        unicode_literals)
from collections import OrderedDict
import os
import sys
import inspect
import logging
import logging.config
from textwrap import indent
from importlib.metadata import version as get_version, PackageNotFoundError
from docopt import docopt
from schema import Schema, And, Use, SchemaError
from .utils import (
        DBPCError, CheckpointError, expanded_abspath, LoggingHandler,
        tabulate_listofdicts)


__all__ = ['cli', ]

LOGGER_NAME = 'cli'


def cli(argv=None):
    """Command line interface of :mod:`dbpc`. Run

    .. code-block:: sh

        $ dbpc --help

    for an extensive description.
    """
    doc = """
Deep bi-directional predictive coding: train networks that classify
and reconstruct images from local prediction errors.

Usage:
    dbpc -h
    dbpc --help
    dbpc (-v|--version)
    dbpc [(-d|--debug)] <command> [<args>...]

Options:
    -h                  Show this message.
    --help              Show a more detailed help message
    -v --version        Show version.
    -d --debug          Show debug messages.
"""

    cmderr_fmt = "ERROR: {}"
    cmds = OrderedDict()

    def register_cmd(cmd):
        def wrapper(func):
            cmds[cmd] = func
            return func
        return wrapper

    @register_cmd('train')
    def cmd_train(args):
        """
Train a network on the training split with minibatch SGD and evaluate
it on the test split after every epoch. Writes `metrics.csv`,
`latest.dbpc`, `best-accuracy.dbpc` and the resolved `config.yaml`
to the output directory.

Usage:
    dbpc train [--config=<file>] [--out=<dir>] [--seed=<n>]
               [--threads=<n>] [--epochs=<n>] [--mode=<mode>]

Options:
    -h --help           Show this message.
    -c <file> --config=<file>
                        Experiment config file.
    -o <dir> --out=<dir>
                        Output directory.
    -s <n> --seed=<n>   Seed of initialization, shuffling and
                        augmentation.
    -t <n> --threads=<n>
                        Number of worker threads.
    -e <n> --epochs=<n>
                        Number of epochs, the preset of the
                        architecture by default.
    -m <mode> --mode=<mode>
                        Classification mode of the per-epoch
                        evaluation, `feedforward` or `iterative`.
"""
        logger = logging.getLogger(LOGGER_NAME)
        config = _load_config(args)
        args, fc, tc = _sync_args_with_config(
                args, config, _common_policy(args))
        exp = config.experiment()
        train_set = exp.load_dataset('train')
        test_set = exp.load_dataset('test')
        config.save(os.path.join(exp.out_dir, 'config.yaml'))
        from . import train
        params, rows = train.train(exp, train_set, test_set)
        logger.info("training finished, outputs in {}".format(exp.out_dir))

    @register_cmd('eval')
    def cmd_eval(args):
        """
Evaluate a checkpoint on the test split: classification accuracy and the
mean PSNR/SSIM of the reconstructions from every source layer. Writes
`eval_summary.csv`, `eval_layers.csv` and `confusion.csv`.

If no config is given, `config.yaml` next to the checkpoint is used
when present.

Usage:
    dbpc eval --checkpoint=<file> [--config=<file>] [--out=<dir>]
              [--threads=<n>] [--mode=<mode>] [--layers=<list>]

Options:
    -h --help           Show this message.
    -k <file> --checkpoint=<file>
                        Checkpoint to evaluate.
    -c <file> --config=<file>
                        Experiment config file.
    -o <dir> --out=<dir>
                        Output directory.
    -t <n> --threads=<n>
                        Number of worker threads.
    -m <mode> --mode=<mode>
                        Classification mode, `feedforward` or
                        `iterative`.
    -l <list> --layers=<list>
                        Comma separated reconstruction source
                        layers, all hidden layers by default.
"""
        logger = logging.getLogger(LOGGER_NAME)
        args = _validate_checkpoint_arg(args)
        config = _load_config(args, args['--checkpoint'])
        args, fc, tc = _sync_args_with_config(
                args, config, _common_policy(args))
        exp = config.experiment()
        params = _load_matching_checkpoint(args['--checkpoint'], exp)
        test_set = exp.load_dataset('test', limit=exp.evaluation['limit'])
        from .inference import evaluate
        from .report import write_eval_report
        report = evaluate(
                params, test_set, exp.hp, mode=exp.mode,
                layers=exp.evaluation['layers'],
                max_intensity=exp.evaluation['max_intensity'],
                chunk_size=exp.evaluation['batch_size'],
                n_jobs=exp.threads)
        files = write_eval_report(report, exp.out_dir, len(test_set))
        print(tabulate_listofdicts(
            [{'mode': report.mode, 'samples': len(test_set),
              'accuracy': report.accuracy}], headers='keys'))
        print()
        print(tabulate_listofdicts(report.rows(), keymap=[
            ('layer', 'layer'), ('PSNR [dB]', 'psnr'), ('SSIM', 'ssim')]))
        logger.info("write {}".format(", ".join(files)))

    @register_cmd('reconstruct')
    def cmd_reconstruct(args):
        """
Reconstruct an input image from the representations of the given
layers by feedback propagation. The input is either the test sample
<n> or a binary PGM file. Writes `original.pgm`, one `layer<l>.pgm`
per source layer and `montage.pgm`.

Usage:
    dbpc reconstruct --checkpoint=<file> (--index=<n>|--image=<file>)
                     [--config=<file>] [--out=<dir>] [--layers=<list>]

Options:
    -h --help           Show this message.
    -k <file> --checkpoint=<file>
                        Checkpoint to use.
    -i <n> --index=<n>  Index of the test sample.
    -g <file> --image=<file>
                        Binary PGM image to reconstruct.
    -c <file> --config=<file>
                        Experiment config file.
    -o <dir> --out=<dir>
                        Output directory.
    -l <list> --layers=<list>
                        Comma separated source layers, all hidden
                        layers by default.
"""
        logger = logging.getLogger(LOGGER_NAME)
        args = _validate_checkpoint_arg(args)
        config = _load_config(args, args['--checkpoint'])
        args, fc, tc = _sync_args_with_config(
                args, config, _common_policy(args))
        exp = config.experiment()
        params = _load_matching_checkpoint(args['--checkpoint'], exp)
        max_intensity = exp.evaluation['max_intensity']
        if args['--image'] is not None:
            from .utils import read_pgm
            path = expanded_abspath(args['--image'])
            if not os.path.isfile(path):
                raise SchemaError("`--image`: file `{}` does not exist".format(
                    path))
            image = read_pgm(path, max_intensity)
        else:
            index = Schema(And(
                Use(int), lambda v: v >= 0,
                error="`--index` has to be a non-negative integer, got"
                      " `{}`".format(args['--index']))).validate(
                              args['--index'])
            test_set = exp.load_dataset('test')
            if index >= len(test_set):
                raise SchemaError(
                        "`--index` {} out of range, the test split has {}"
                        " samples".format(index, len(test_set)))
            image = test_set.images[index]
        layers = exp.evaluation['layers']
        if layers is None:
            layers = params.reconstruction_layers()
        from .inference import reconstruct_from_layer, estimate_state
        from .report import write_reconstructions
        state = estimate_state(params, image[None], exp.hp)
        results = []
        for l in sorted(layers):
            r = reconstruct_from_layer(params, state, l)
            results.append(r._replace(image=r.image[0]))
        files = write_reconstructions(
                image, results, exp.out_dir, max_intensity)
        logger.info("write {}".format(", ".join(files)))

    @register_cmd('gradcheck')
    def cmd_gradcheck(args):
        """
Check the analytic representation and weight gradients against central
finite differences on seeded random networks. Exits with 1 if any suite
fails.

Usage:
    dbpc gradcheck [--seed=<n>] [--corrupt=<value>]

Options:
    -h --help           Show this message.
    -s <n> --seed=<n>   Seed of the random instances [default: 0].
    --corrupt=<value>   Offset added to the analytic gradients,
                        a negative control [default: 0].
"""
        logger = logging.getLogger(LOGGER_NAME)
        args = Schema({
            '--seed': And(
                Use(int), lambda v: v >= 0,
                error="`--seed` has to be a non-negative integer"),
            '--corrupt': Use(
                float, error="`--corrupt` has to be a number"),
            }, ignore_extra_keys=True).validate(args)
        from .gradcheck import run_gradcheck
        report = run_gradcheck(seed=args['--seed'],
                               corrupt=args['--corrupt'])
        print(tabulate_listofdicts(report, keymap=[
            ('suite', 'suite'), ('instances', 'instances'),
            ('checks', 'checks'),
            ('max rel. error', lambda d: "{:.3e}".format(
                d['max_rel_error'])),
            ('result', lambda d: 'pass' if d['passed'] else 'FAIL'),
            ]))
        failed = [d['suite'] for d in report if not d['passed']]
        if failed:
            logger.error("gradient check failed: {}".format(
                ", ".join(failed)))
            sys.exit(1)

    @register_cmd('params')
    def cmd_params(args):
        """
Print the number of weights of an architecture.

Usage:
    dbpc params [--config=<file>] [--arch=<name>]

Options:
    -h --help           Show this message.
    -c <file> --config=<file>
                        Experiment config file.
    -a <name> --arch=<name>
                        Architecture preset, overrides the config.
"""
        config = _load_config(args)
        args, fc, tc = _sync_args_with_config(
                args, config,
                {
                    # use config entry if --arch not specified
                    '--arch': {
                        'key': 'model.architecture',
                        'norm': lambda a: a,
                        'from': lambda a, c: a is None,
                        'to': lambda a, c: a is not None,
                        },
                    })
        exp = config.experiment()
        from .network import param_count
        params = exp.network()
        print(tabulate_listofdicts([{
            'architecture': exp.architecture,
            'layers': " ".join(exp.layers),
            'parameters': "{:,}".format(param_count(params)),
            }], headers='keys'))

    # process main doc
    try:
        version = get_version("dbpc")
    except PackageNotFoundError:
        version = "unknown"
    args = docopt(doc, argv=argv, version=version, options_first=True,
                  help=False)
    logging.config.dictConfig({
        'version': 1,
        'disable_existing_loggers': False,
        'formatters': {
            'standard': {
                'format': '%(asctime)s [%(levelname)s] %(name)s: %(message)s'
            },
            'short': {
                'format': '%(levelname)s: %(name)s: %(message)s'
            },
        },
        'handlers': {
            'default': {
                '()': LoggingHandler,
                'formatter': 'short',  # standard
            },
        },
        'loggers': {
            '': {
                'handlers': ['default'],
                'level': "DEBUG" if args['--debug'] else "INFO",
                'propagate': False
            },
        }
    })
    if args['-h']:
        print(doc.strip("\n"))
        sys.exit(0)
    if args['--help']:
        # concat all docs in cmds
        fdoc = "{}\nAvailable commands:\n\n".format(doc)
        for cmd, cmd_func in cmds.items():
            fdoc += "{}:\n\n{}\n".format(
                    cmd, indent(cmd_func.__doc__, "    ").strip('\n'))
        print(fdoc.strip("\n"))
        sys.exit(0)
    # execute command
    cmd = args['<command>']
    argv = [cmd, ] + args['<args>']
    if cmd in cmds:
        cmd_func = cmds[cmd]
        try:
            cmd_func(docopt(cmd_func.__doc__, argv=argv))
        except SchemaError as e:
            sys.exit("{}\n\n{}".format(
                cmderr_fmt.format(e.code),
                cmds[cmd].__doc__.strip("\n"),
                ))
        except (DBPCError, OSError) as e:
            f_locals = inspect.trace()[-1][0].f_locals
            if 'logger' in f_locals:
                logger = f_locals['logger']
            elif 'self' in f_locals:
                logger = getattr(f_locals['self'], "logger", None)
            else:
                logger = None
            if logger is None:
                logger = logging.getLogger(LOGGER_NAME)
            logger.error("{}: {}".format(e.__class__.__name__, e))
            sys.exit(1)
    else:
        sys.exit(cmderr_fmt.format(
            "`{}` is not a valid dbpc command. See 'dbpc -h'."
            .format(cmd)))


# some internal stuff

def _load_config(args, checkpoint=None):
    """Return the :obj:`Config` of `--config`, falling back to the
    ``config.yaml`` next to `checkpoint`."""
    from .config import Config
    logger = logging.getLogger(LOGGER_NAME)
    config_file = args.get('--config')
    if config_file is None and checkpoint is not None:
        sibling = os.path.join(os.path.dirname(checkpoint), 'config.yaml')
        if os.path.isfile(sibling):
            logger.info("use config {} of the checkpoint".format(sibling))
            config_file = sibling
    return Config(config_file)


def _parse_layers(s):
    try:
        return [int(v) for v in s.split(',')]
    except ValueError:
        raise SchemaError(
                "`--layers` has to be a comma separated list of layer"
                " indices, got `{}`".format(s))


def _common_policy(args):
    """Flags that override config entries. A flag not given on the
    command line takes the config value; a given one replaces it."""
    policy = OrderedDict([
        ('--out', ('output.dir', expanded_abspath)),
        ('--seed', ('train.seed', lambda a: a)),
        ('--threads', ('parallel.threads', lambda a: a)),
        ('--epochs', ('train.epochs', lambda a: a)),
        ('--mode', ('eval.mode', lambda a: a)),
        ('--layers', ('eval.layers', _parse_layers)),
        ])
    return OrderedDict(
            (ak, {
                'key': key,
                'norm': norm,
                'from': lambda a, c: a is None,
                'to': lambda a, c: a is not None,
                })
            for ak, (key, norm) in policy.items() if ak in args)


def _validate_checkpoint_arg(args):
    return Schema({
        '--checkpoint': And(
            Use(expanded_abspath), os.path.isfile,
            error="checkpoint `{}` does not exist".format(
                args['--checkpoint'])),
        object: object,
        }).validate(args)


def _load_matching_checkpoint(filename, exp):
    from .checkpoint import load_checkpoint
    params = load_checkpoint(filename)
    expected = exp.network()
    if not params.same_architecture(expected):
        raise CheckpointError(
                "checkpoint {} holds {} but the config describes {}".format(
                    filename, params, expected))
    return params


def _sync_args_with_config(args, config, sync_policy):
    logger = logging.getLogger(LOGGER_NAME)
    fc = []
    tc = []
    for ak, sp in sync_policy.items():
        ck, nm, ff, tf = sp['key'], sp['norm'], sp['from'], sp['to']
        av, cv = args[ak], config.get(ck)
        if ff(av, cv):
            logger.debug("sync {}=`{}` in config to `{}`".format(
                ck, cv, ak))
            args[ak] = config.get(ck)
            fc.append(ak)
        if tf(av, cv):
            logger.debug("sync {}=`{}` to `{}` in config".format(
                ak, av, ck))
            nv = nm(av)
            if nv != av:
                logger.debug("use {}=`{}` instead of `{}`".format(
                    ak, nv, av))
            args[ak] = nv
            config.set(ck, nv)
            tc.append(ak)
    return args, fc, tc
