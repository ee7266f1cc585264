#! /usr/bin/env python
# -*- coding: utf-8 -*-
# Create Date    :  2024-03-05 16:40
# Git Repo       :  https://github.com/Jerry-Ma
# Email Address  :  jerry.ma.nk@gmail.com
from __future__ import (absolute_import, division, print_function,
                        unicode_literals)

import numpy as np

from .network import N_CLASSES
from .utils import DataError, ShapeError


__all__ = ['ConfusionMatrix', 'accuracy', 'psnr', 'ssim']


class ConfusionMatrix(object):
    """Counts of (true class, predicted class) pairs; rows are the true
    classes and columns the predicted ones."""

    def __init__(self, n_classes=N_CLASSES, counts=None):
        if counts is None:
            counts = np.zeros((n_classes, n_classes), dtype=np.int64)
        counts = np.asarray(counts)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ShapeError(
                    "confusion matrix has to be square, got {}".format(
                        counts.shape))
        if np.any(counts < 0):
            raise DataError("confusion matrix counts have to be >= 0")
        self.counts = counts.astype(np.int64)

    @classmethod
    def from_predictions(cls, labels, predicted, n_classes=N_CLASSES):
        cm = cls(n_classes)
        cm.add(labels, predicted)
        return cm

    @property
    def n_classes(self):
        return self.counts.shape[0]

    @property
    def total(self):
        return int(self.counts.sum())

    def add(self, labels, predicted):
        """Count the pairs of true `labels` and `predicted` classes."""
        labels, predicted = np.atleast_1d(labels), np.atleast_1d(predicted)
        if labels.shape != predicted.shape:
            raise ShapeError("{} labels but {} predictions".format(
                labels.shape, predicted.shape))
        np.add.at(self.counts, (labels, predicted), 1)
        return self

    def merge(self, other):
        return ConfusionMatrix(counts=self.counts + other.counts)

    def accuracy(self):
        return accuracy(self)


def accuracy(q):
    """Fraction of the counts of confusion matrix `q` on its diagonal."""
    counts = q.counts if isinstance(q, ConfusionMatrix) else np.asarray(q)
    total = counts.sum()
    if total <= 0:
        raise DataError("accuracy of an empty confusion matrix")
    return float(np.trace(counts) / total)


def _pair(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ShapeError("cannot compare images of shape {} and {}".format(
            x.shape, y.shape))
    return x, y


def psnr(x, y, max_intensity=1.):
    """Peak signal-to-noise ratio in dB, ``+inf`` for identical images."""
    x, y = _pair(x, y)
    mse = np.mean((x - y) ** 2)
    if mse == 0:
        return float('inf')
    return float(10. * np.log10(max_intensity ** 2 / mse))


def ssim(x, y, max_intensity=1.):
    """Structural similarity from the means, population variances and
    covariance of the whole images.

    ``C1 = (0.01 MAX)^2`` and ``C2 = (0.03 MAX)^2``.
    """
    x, y = _pair(x, y)
    if x.size < 2:
        raise ShapeError("SSIM needs at least two pixels")
    c1 = (0.01 * max_intensity) ** 2
    c2 = (0.03 * max_intensity) ** 2
    mx, my = x.mean(), y.mean()
    dx, dy = x - mx, y - my
    vx, vy = np.mean(dx * dx), np.mean(dy * dy)
    cxy = np.mean(dx * dy)
    return float(((2 * mx * my + c1) * (2 * cxy + c2)) /
                 ((mx ** 2 + my ** 2 + c1) * (vx + vy + c2)))
