#! /usr/bin/env python
# -*- coding: utf-8 -*-
# Create Date    :  2024-03-08 14:02
# Git Repo       :  https://github.com/Jerry-Ma
# Email Address  :  jerry.ma.nk@gmail.com
from __future__ import (absolute_import, division, print_function,
                        unicode_literals)

import os
import logging
from collections import OrderedDict

from appdirs import AppDirs
from schema import Schema, And, Or, Use, SchemaError

from .core import Hyperparams
from .data import AugmentConfig, load_idx
from .inference import MODES
from .network import ARCHITECTURES, NetworkParams
from .utils import DBPCError, yaml, mkdirs, expanded_abspath


__all__ = ['Config', 'ExperimentConfig', 'CUSTOM']


CUSTOM = 'custom'
"""Architecture name that selects the layer list in ``model.layers``."""


class Config(object):
    """Class that configures an experiment of :mod:`dbpc`.

    The configuration is a YAML document with the sections of
    :attr:`default_content`. Entries of a user config file override the
    default ones key by key; unknown sections or keys are rejected.
    """

    _dirs = AppDirs("dbpc", "dbpc")
    """An :obj:`AppDirs` object that provides the conventional path to
    store the outputs. See documentations of :mod:`appdirs` for details"""

    _default_filename = "config.yaml"

    @property
    def default_content(self):
        """Default configuration."""
        return """# {}
model:
    architecture: dbpc-fcn-mnist
    layers:
    input_shape: [1, 28, 28]

hyperparams:
    lambda_f: 1.0
    lambda_b: 1.0
    beta_c: 1.0
    beta_r: 1.0
    lr_y: 0.1
    lr_w: 0.001
    iterations: 20

train:
    batch_size: 32
    epochs:
    seed: 0

data:
    name: mnist
    train_images:
    train_labels:
    test_images:
    test_labels:
    train_limit:
    test_limit:

augment:
    enabled: true
    rotation_deg: 10.0
    translate_px: 2

eval:
    mode: feedforward
    max_intensity: 1.0
    batch_size: 256
    limit:
    layers:

parallel:
    threads: 1

output:
    dir: {}
    """.format(self._default_filename, self.default_outdir)

    @property
    def default_outdir(self):
        """Default directory to write outputs to."""
        return os.path.abspath(self._dirs.user_data_dir)

    def __init__(self, config_file=None):
        """Create a `Config` object. If `config_file` is set, entries
        within will override the default ones. The config is
        not loaded until `get` or `set` is called.
        """
        self.logger = logging.getLogger("config")
        if config_file is None:
            self.filepath = None
        else:
            self.filepath = expanded_abspath(config_file)
        self._config = None  # lazy load

    def load(self):
        """Actually load the config. This will be done at the first call
        of `get` or `set`"""
        self._config = yaml.safe_load(self.default_content)
        if self.filepath is None:
            self.logger.debug("load default config")
            return
        if not os.path.isfile(self.filepath):
            raise SchemaError("config file `{}` does not exist".format(
                self.filepath))
        try:
            with open(self.filepath, 'r') as stream:
                content = yaml.safe_load(stream)
        except yaml.YAMLError as e:
            raise SchemaError("config file `{}` is not valid YAML: {}".format(
                self.filepath, e))
        if content is None:
            content = {}
        if not isinstance(content, dict):
            raise SchemaError("config file `{}` is not a mapping".format(
                self.filepath))
        for section, entries in content.items():
            if section not in self._config:
                raise SchemaError(
                        "unknown config section `{}` in {}".format(
                            section, self.filepath))
            if entries is None:
                continue
            if not isinstance(entries, dict):
                raise SchemaError(
                        "config section `{}` in {} is not a mapping".format(
                            section, self.filepath))
            for k, v in entries.items():
                if k not in self._config[section]:
                    raise SchemaError(
                            "unknown config entry `{}.{}` in {}".format(
                                section, k, self.filepath))
                self._config[section][k] = v
        self.logger.debug("load config from {}".format(self.filepath))

    def get(self, keys):
        """Return the config entry specified by `keys`

        :param keys:
            keys of the entry. multi-level keys is supported
            using format like ``key1.key2``.
        """
        if self._config is None:
            self.load()
        keys = keys.split('.')
        ret = self._config[keys[0]]
        for k in keys[1:]:
            ret = ret[k]
        return ret

    def set(self, keys, value):
        """Set `value` to config entry specified by `keys`.

        :param keys:
            keys of the entry. multi-level keys is supported
            using format like ``key1.key2``.
        :param value:
            value to be set.
        """
        if self._config is None:
            self.load()
        keys = keys.split('.')
        d = self._config
        nk = len(keys)
        for i, k in enumerate(keys):
            if i + 1 == nk:  # last
                d[k] = value
            else:
                d = d[k]

    def save(self, filename):
        """Save the config to `filename`."""
        if self._config is None:
            self.load()
        content = OrderedDict(
                (section, OrderedDict(sorted(entries.items())))
                for section, entries in self._config.items())
        s = yaml.safe_dump(content, default_flow_style=False)
        self.logger.debug("save config to {}".format(filename))
        d = os.path.dirname(os.path.abspath(filename))
        if not os.path.exists(d):
            mkdirs(d)
        with open(filename, 'w') as fo:
            fo.write(s)
        return filename

    def experiment(self):
        """Validate the config and return the :obj:`ExperimentConfig`.

        Invalid entries raise :obj:`SchemaError` naming the entry.
        """
        if self._config is None:
            self.load()
        c = {section: _schemas[section].validate(entries)
             for section, entries in self._config.items()}
        model = c['model']
        if model['architecture'] == CUSTOM:
            if model['layers'] is None:
                raise SchemaError(
                        "`model.layers` has to be set for architecture"
                        " `{}`".format(CUSTOM))
            layers = model['layers']
            epochs = Hyperparams().epochs
        else:
            if model['layers'] is not None:
                raise SchemaError(
                        "`model.layers` is only used with architecture"
                        " `{}`".format(CUSTOM))
            preset = ARCHITECTURES[model['architecture']]
            layers = preset['layers']
            epochs = preset['epochs']
        try:
            NetworkParams(layers, model['input_shape'])
        except DBPCError as e:
            raise SchemaError("invalid `model.layers` {}: {}".format(
                layers, e))
        train = c['train']
        if train['epochs'] is not None:
            epochs = train['epochs']
        h = c['hyperparams']
        hp = Hyperparams(
                lambda_f=h['lambda_f'], lambda_b=h['lambda_b'],
                beta_c=h['beta_c'], beta_r=h['beta_r'],
                lr_y=h['lr_y'], lr_w=h['lr_w'], T=h['iterations'],
                batch_size=train['batch_size'], epochs=epochs,
                seed=train['seed'])
        a = c['augment']
        augment = AugmentConfig(
                rotation_deg=a['rotation_deg'],
                translate_px=a['translate_px'],
                enabled=a['enabled'])
        return ExperimentConfig(
                architecture=model['architecture'],
                layers=layers,
                input_shape=tuple(model['input_shape']),
                hp=hp,
                data=c['data'],
                augment=augment,
                evaluation=c['eval'],
                threads=c['parallel']['threads'],
                out_dir=c['output']['dir'] or self.default_outdir,
                )


class ExperimentConfig(object):
    """Validated settings of an experiment.

    :ivar architecture: preset name or ``custom``.
    :ivar layers: layer specifications in text form.
    :ivar hp: :obj:`Hyperparams`, with epochs resolved from the preset
        if not set.
    :ivar data: dict of dataset name, IDX paths and subset limits.
    :ivar augment: :obj:`AugmentConfig` of the training images.
    :ivar evaluation: dict with ``mode``, ``max_intensity``,
        ``batch_size``, ``limit`` and ``layers``.
    :ivar threads: number of worker threads.
    :ivar out_dir: output directory.
    """

    def __init__(self, architecture, layers, input_shape, hp, data,
                 augment, evaluation, threads, out_dir):
        self.architecture = architecture
        self.layers = list(layers)
        self.input_shape = input_shape
        self.hp = hp
        self.data = data
        self.augment = augment
        self.evaluation = evaluation
        self.threads = threads
        self.out_dir = out_dir

    @property
    def mode(self):
        """Classification mode."""
        return self.evaluation['mode']

    def network(self):
        """Un-initialized :obj:`NetworkParams` of the architecture."""
        return NetworkParams(self.layers, self.input_shape)

    def dataset_paths(self, split):
        """Return the checked (images, labels) paths of `split`."""
        paths = []
        for kind in ('images', 'labels'):
            key = '{}_{}'.format(split, kind)
            path = self.data[key]
            if path is None:
                raise SchemaError("`data.{}` is not set".format(key))
            if not os.path.isfile(path):
                raise SchemaError("`data.{}`: file `{}` does not exist".format(
                    key, path))
            paths.append(path)
        return tuple(paths)

    def load_dataset(self, split, limit=None):
        """Load the ``train`` or ``test`` split, truncated to its
        configured limit (or to `limit` if given)."""
        images, labels = self.dataset_paths(split)
        dataset = load_idx(
                images, labels,
                name="{}-{}".format(self.data['name'], split))
        if limit is None:
            limit = self.data['{}_limit'.format(split)]
        if limit is not None:
            dataset = dataset.subset(limit)
        return dataset

    def __repr__(self):
        return "ExperimentConfig({}, {})".format(self.architecture, self.hp)


def _nonneg(key):
    return And(Use(float), lambda v: v >= 0,
               error="`{}` has to be a non-negative number".format(key))


def _int(key, lo):
    return And(Use(int), lambda v: v >= lo,
               error="`{}` has to be an integer >= {}".format(key, lo))


def _optional(schema, key, what):
    return Or(None, schema,
              error="`{}` has to be empty or {}".format(key, what))


def _path(key):
    return _optional(And(str, Use(expanded_abspath)), key, "a path")


_schemas = {
    'model': Schema({
        'architecture': Or(
            CUSTOM, *ARCHITECTURES.keys(),
            error="`model.architecture` has to be one of {}".format(
                list(ARCHITECTURES.keys()) + [CUSTOM])),
        'layers': _optional(
            And([Use(str)], lambda v: len(v) >= 2), 'model.layers',
            "a list of at least two layers"),
        'input_shape': And(
            [Use(int)], lambda v: len(v) == 3 and min(v) >= 1,
            error="`model.input_shape` has to be three positive integers"),
        }),
    'hyperparams': Schema({
        'lambda_f': _nonneg('hyperparams.lambda_f'),
        'lambda_b': _nonneg('hyperparams.lambda_b'),
        'beta_c': _nonneg('hyperparams.beta_c'),
        'beta_r': _nonneg('hyperparams.beta_r'),
        'lr_y': _nonneg('hyperparams.lr_y'),
        'lr_w': _nonneg('hyperparams.lr_w'),
        'iterations': _int('hyperparams.iterations', 0),
        }),
    'train': Schema({
        'batch_size': _int('train.batch_size', 1),
        'epochs': _optional(
            And(Use(int), lambda v: v >= 0), 'train.epochs',
            "an integer >= 0"),
        'seed': _int('train.seed', 0),
        }),
    'data': Schema({
        'name': Use(str),
        'train_images': _path('data.train_images'),
        'train_labels': _path('data.train_labels'),
        'test_images': _path('data.test_images'),
        'test_labels': _path('data.test_labels'),
        'train_limit': _optional(
            And(Use(int), lambda v: v >= 1), 'data.train_limit',
            "an integer >= 1"),
        'test_limit': _optional(
            And(Use(int), lambda v: v >= 1), 'data.test_limit',
            "an integer >= 1"),
        }),
    'augment': Schema({
        'enabled': And(bool, error="`augment.enabled` has to be a boolean"),
        'rotation_deg': _nonneg('augment.rotation_deg'),
        'translate_px': _int('augment.translate_px', 0),
        }),
    'eval': Schema({
        'mode': Or(*MODES, error="`eval.mode` has to be one of {}".format(
            list(MODES))),
        'max_intensity': And(
            Use(float), lambda v: v > 0,
            error="`eval.max_intensity` has to be a positive number"),
        'batch_size': _int('eval.batch_size', 1),
        'limit': _optional(
            And(Use(int), lambda v: v >= 1), 'eval.limit',
            "an integer >= 1"),
        'layers': _optional(
            [Use(int)], 'eval.layers', "a list of layer indices"),
        }),
    'parallel': Schema({
        'threads': _int('parallel.threads', 1),
        }),
    'output': Schema({
        'dir': _optional(Use(expanded_abspath), 'output.dir', "a path"),
        }),
    }
