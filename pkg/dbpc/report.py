#! /usr/bin/env python
# -*- coding: utf-8 -*-
# Create Date    :  2024-03-09 11:31
# Git Repo       :  https://github.com/Jerry-Ma
# Email Address  :  jerry.ma.nk@gmail.com
"""Files written by the commands: CSV tables of metrics and PGM images of
reconstructions."""
from __future__ import (absolute_import, division, print_function,
                        unicode_literals)

import os
import logging

import numpy as np

from .utils import write_csv, write_pgm, mkdirs


__all__ = [
        'metrics_header', 'metrics_row', 'write_eval_report',
        'write_reconstructions', 'montage']


def metrics_header(layers):
    """Columns of the per-epoch training log."""
    return (['epoch', 'train_energy', 'train_accuracy', 'test_accuracy'] +
            ['psnr_l{}'.format(l) for l in layers] +
            ['ssim_l{}'.format(l) for l in layers])


def metrics_row(epoch, epoch_stats, report):
    """Row of the training log for `epoch` matching
    :func:`metrics_header`."""
    return ([epoch, float(epoch_stats.energy), float(epoch_stats.accuracy),
             float(report.accuracy)] +
            [float(v) for v in report.psnr] +
            [float(v) for v in report.ssim])


def _outdir(out_dir):
    if not os.path.exists(out_dir):
        mkdirs(out_dir)
    return out_dir


def write_eval_report(report, out_dir, n_samples):
    """Write ``eval_summary.csv``, ``eval_layers.csv`` and
    ``confusion.csv`` of :obj:`MetricsReport` `report` to `out_dir`.

    :return: list of the files written.
    """
    out_dir = _outdir(out_dir)
    summary = write_csv(
            os.path.join(out_dir, 'eval_summary.csv'),
            ['mode', 'samples', 'accuracy'],
            [[report.mode, n_samples, float(report.accuracy)]])
    layers = write_csv(
            os.path.join(out_dir, 'eval_layers.csv'),
            ['layer', 'psnr', 'ssim'],
            [[r['layer'], float(r['psnr']), float(r['ssim'])]
             for r in report.rows()])
    counts = report.confusion.counts
    confusion = write_csv(
            os.path.join(out_dir, 'confusion.csv'),
            ['true'] + ['pred_{}'.format(j) for j in range(len(counts))],
            [[i] + [int(c) for c in row] for i, row in enumerate(counts)])
    logging.getLogger("report").debug("write {} {} {}".format(
        summary, layers, confusion))
    return [summary, layers, confusion]


def montage(images, max_intensity=1.):
    """Place single-channel images side by side, separated by one column
    of full intensity."""
    tiles = []
    for image in images:
        image = np.asarray(image, dtype=np.float64)
        if image.ndim == 3:
            image = image[0]
        if tiles:
            tiles.append(np.full((image.shape[0], 1), max_intensity))
        tiles.append(image)
    return np.concatenate(tiles, axis=1)


def write_reconstructions(original, results, out_dir, max_intensity=1.):
    """Write the `original` image, one ``layer<l>.pgm`` per
    :obj:`ReconstructionResult` in `results` and ``montage.pgm``.

    :return: list of the files written.
    """
    out_dir = _outdir(out_dir)
    files = [write_pgm(os.path.join(out_dir, 'original.pgm'), original,
                       max_intensity)]
    for r in results:
        files.append(write_pgm(
            os.path.join(out_dir, 'layer{}.pgm'.format(r.source_layer)),
            r.image, max_intensity))
    files.append(write_pgm(
        os.path.join(out_dir, 'montage.pgm'),
        montage([original] + [r.image for r in results], max_intensity),
        max_intensity))
    return files
