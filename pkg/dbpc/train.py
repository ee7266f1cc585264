#! /usr/bin/env python
# -*- coding: utf-8 -*-
# Create Date    :  2024-03-09 09:47
# Git Repo       :  https://github.com/Jerry-Ma
# Email Address  :  jerry.ma.nk@gmail.com
from __future__ import (absolute_import, division, print_function,
                        unicode_literals)

import os
import logging
from collections import namedtuple

import numpy as np

from .checkpoint import save_checkpoint
from .core import train_batch
from .data import augment_batch, minibatches
from .inference import evaluate
from .report import metrics_header, metrics_row
from .utils import mkdirs, write_csv


__all__ = ['EpochStats', 'train_epoch', 'train']


EpochStats = namedtuple('EpochStats', ['energy', 'accuracy'])
"""Mean post-inference global energy per training sample and the
fraction of training samples the feedforward sweep classified
correctly, over one epoch."""


LATEST = 'latest.dbpc'
BEST = 'best-accuracy.dbpc'
METRICS = 'metrics.csv'


def train_epoch(params, dataset, hp, augment, epoch, n_jobs=1):
    """Run one pass of minibatch training over `dataset`.

    Batches are drawn from a permutation seeded with ``[hp.seed, epoch]``
    and batch ``b`` is augmented with a generator seeded with
    ``[hp.seed, epoch, b]``.

    :return: updated params and :obj:`EpochStats`.
    """
    logger = logging.getLogger("train.batch")
    energy, correct = 0., 0
    batches = minibatches(dataset, hp.batch_size, [hp.seed, epoch])
    for b, idx in enumerate(batches):
        rng = np.random.default_rng([hp.seed, epoch, b])
        images = augment_batch(dataset.images[idx], augment, rng)
        params, stats = train_batch(
                params, images, dataset.labels[idx], hp, n_jobs=n_jobs)
        energy += stats.energy
        correct += stats.correct
        logger.info("epoch {} batch {}/{}: energy={:.6g} correct={}/{}"
                    .format(epoch, b + 1, len(batches), stats.energy,
                            stats.correct, stats.size))
    n = len(dataset)
    return params, EpochStats(energy / n, correct / n)


def train(exp, train_set, test_set, out_dir=None, params=None):
    """Train the network of :obj:`ExperimentConfig` `exp`.

    After every epoch the network is evaluated on `test_set`, the metrics
    log ``metrics.csv`` is rewritten, and the checkpoint ``latest.dbpc``
    is replaced; ``best-accuracy.dbpc`` holds the network with the
    highest test accuracy so far. With zero epochs only the initialized
    network and the header of the log are written.

    :param params: initial network, by default ``exp.network()``
        initialized with ``exp.hp.seed``.
    :return: the trained params and the rows of the log.
    """
    logger = logging.getLogger("train")
    hp = exp.hp
    out_dir = exp.out_dir if out_dir is None else out_dir
    if not os.path.exists(out_dir):
        mkdirs(out_dir)
    if params is None:
        params = exp.network().init_weights(hp.seed)
    layers = exp.evaluation['layers']
    if layers is None:
        layers = params.reconstruction_layers()
    layers = sorted(layers)
    header = metrics_header(layers)
    metrics_file = os.path.join(out_dir, METRICS)
    latest = os.path.join(out_dir, LATEST)
    rows = []
    write_csv(metrics_file, header, rows)
    save_checkpoint(params, latest)
    logger.info("train {} on {} for {} epochs, output to {}".format(
        params, train_set, hp.epochs, out_dir))
    best = None
    for epoch in range(1, hp.epochs + 1):
        params, stats = train_epoch(
                params, train_set, hp, exp.augment, epoch,
                n_jobs=exp.threads)
        report = evaluate(
                params, test_set, hp, mode=exp.mode, layers=layers,
                max_intensity=exp.evaluation['max_intensity'],
                chunk_size=exp.evaluation['batch_size'],
                n_jobs=exp.threads)
        rows.append(metrics_row(epoch, stats, report))
        write_csv(metrics_file, header, rows)
        save_checkpoint(params, latest)
        if best is None or report.accuracy > best:
            best = report.accuracy
            save_checkpoint(params, os.path.join(out_dir, BEST))
        logger.info(
                "epoch {}/{}: energy={:.6g} train_accuracy={:.4f}"
                " test_accuracy={:.4f}".format(
                    epoch, hp.epochs, stats.energy, stats.accuracy,
                    report.accuracy))
    return params, rows
