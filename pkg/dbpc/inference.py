#! /usr/bin/env python
# -*- coding: utf-8 -*-
# Create Date    :  2024-03-06 10:22
# Git Repo       :  https://github.com/Jerry-Ma
# Email Address  :  jerry.ma.nk@gmail.com
from __future__ import (absolute_import, division, print_function,
                        unicode_literals)

import logging
from collections import namedtuple
from functools import reduce

import numpy as np
from joblib import Parallel, delayed

from .core import ActivationState, initialize_state, infer_representations
from .metrics import ConfusionMatrix, psnr, ssim
from .tensor import as_tensor, relu
from .utils import DataError, LayerIndexError, log_and_raise


__all__ = [
        'MODES', 'ClassificationResult', 'ReconstructionResult',
        'MetricsReport', 'classify', 'classify_batch', 'estimate_state',
        'reconstruct_from_layer', 'evaluate']


MODES = ('feedforward', 'iterative')


class ClassificationResult(namedtuple(
        'ClassificationResult', ['predicted_class', 'output_activity',
                                 'mode'])):
    """Predicted class (argmax of the output activity, lowest index on
    ties), a copy of the output activity and the mode used."""
    __slots__ = ()


class ReconstructionResult(namedtuple(
        'ReconstructionResult', ['source_layer', 'image'])):
    """Input-shaped reconstruction obtained from `source_layer`."""
    __slots__ = ()


class MetricsReport(object):
    """Evaluation of a network on a dataset.

    :ivar accuracy: fraction of correctly classified samples.
    :ivar confusion: the :obj:`ConfusionMatrix` behind `accuracy`.
    :ivar layers: reconstruction source layers, ordered by depth.
    :ivar psnr: mean PSNR of the reconstructions per source layer.
    :ivar ssim: mean SSIM of the reconstructions per source layer.
    :ivar mode: classification mode.
    """

    def __init__(self, confusion, layers, psnr, ssim, mode):
        self.confusion = confusion
        self.accuracy = confusion.accuracy()
        self.layers = list(layers)
        self.psnr = list(psnr)
        self.ssim = list(ssim)
        self.mode = mode

    def rows(self):
        """One dict per reconstruction source layer."""
        return [{'layer': l, 'psnr': p, 'ssim': s}
                for l, p, s in zip(self.layers, self.psnr, self.ssim)]

    def __repr__(self):
        return "MetricsReport(accuracy={:.4f}, layers={})".format(
                self.accuracy, self.layers)


def _check_mode(mode):
    if mode not in MODES:
        raise DataError("unknown classification mode `{}`, choose from"
                        " {}".format(mode, MODES))


def _as_batch(params, x):
    x = as_tensor(x)
    size = int(np.prod(params.layer_shape(1)))
    if x.size == size:
        return x.reshape((1, ) + params.layer_shape(1)), True
    if x.ndim >= 2 and int(np.prod(x.shape[1:])) == size:
        return x, False
    raise DataError("input of shape {} does not match layer {}".format(
        x.shape, params.specs[0]))


def estimate_state(params, x, hp, iterations=None):
    """Clamp the input layer to `x`, initialize the other layers by a
    feedforward sweep and estimate them with `iterations` (``hp.T`` by
    default) representation updates."""
    state, _ = initialize_state(params, x)
    return infer_representations(params, state, hp, iterations)


def classify_batch(params, x, hp, mode='feedforward'):
    """Return predicted classes and output activities of a batch."""
    _check_mode(mode)
    if mode == 'feedforward':
        _, out = initialize_state(params, x)
    else:
        out = estimate_state(params, x, hp).y[-1]
    return np.argmax(out, axis=1), out


def classify(params, x, hp, mode='feedforward'):
    """Classify a single input `x`.

    ``feedforward`` propagates `x` through all layers once.
    ``iterative`` also runs ``hp.T`` representation updates with only
    the input clamped before reading the output layer.
    """
    xb, single = _as_batch(params, x)
    if not single:
        raise DataError("classify takes a single input, got shape {}".format(
            as_tensor(x).shape))
    predicted, out = classify_batch(params, xb, hp, mode)
    return ClassificationResult(int(predicted[0]), out[0].copy(), mode)


def _propagate_down(params, y, l):
    for i in range(l - 1, 0, -1):
        y = relu(params.interface(i).adjoint(y))
    return y


def reconstruct_from_layer(params, state_or_x, l, hp=None):
    """Reconstruct the input from the representation of layer `l` by
    feedback propagation through interfaces ``l - 1, ..., 1``.

    :param state_or_x: an :obj:`ActivationState` holding the
        representations, or a raw input from which they are estimated
        with :func:`estimate_state` (needs `hp`).
    :return: :obj:`ReconstructionResult` shaped like the input image
        (a batch of them for a batched state or input).
    """
    if not 2 <= l <= params.n_layers:
        log_and_raise(
                logging.getLogger("inference").error,
                "cannot reconstruct from layer {}, choose from [2, {}]"
                .format(l, params.n_layers),
                LayerIndexError)
    if isinstance(state_or_x, ActivationState):
        state, single = state_or_x, False
    else:
        if hp is None:
            raise DataError("hyperparameters needed to estimate"
                            " representations from an input")
        x, single = _as_batch(params, state_or_x)
        state = estimate_state(params, x, hp)
    image = _propagate_down(params, state.layer(l), l)
    image = image.reshape((image.shape[0], ) + params.input_shape)
    return ReconstructionResult(l, image[0] if single else image)


def _evaluate_chunk(params, images, labels, hp, mode, layers, max_intensity):
    if mode == 'iterative' or layers:
        state = estimate_state(params, images, hp)
    if mode == 'feedforward':
        _, out = initialize_state(params, images)
    else:
        out = state.y[-1]
    confusion = ConfusionMatrix.from_predictions(
            labels, np.argmax(out, axis=1), params.n_classes)
    psnrs = np.zeros((len(layers), len(images)))
    ssims = np.zeros((len(layers), len(images)))
    for j, l in enumerate(layers):
        recon = reconstruct_from_layer(params, state, l).image
        for k, (x, r) in enumerate(zip(images, recon)):
            psnrs[j, k] = psnr(x, r, max_intensity)
            ssims[j, k] = ssim(x, r, max_intensity)
    return confusion, psnrs, ssims


def evaluate(params, dataset, hp, mode='feedforward', layers=None,
             max_intensity=1., chunk_size=256, n_jobs=1):
    """Classification accuracy and per-layer reconstruction quality on
    `dataset`.

    Representations for the reconstructions are always estimated
    iteratively with only the input clamped.

    :param layers: reconstruction source layers, all hidden layers by
        default.
    :return: :obj:`MetricsReport`.
    """
    logger = logging.getLogger("inference")
    _check_mode(mode)
    if len(dataset) == 0:
        raise DataError("cannot evaluate on an empty dataset")
    if layers is None:
        layers = params.reconstruction_layers()
    layers = sorted(layers)
    for l in layers:
        if not 2 <= l <= params.n_layers:
            raise LayerIndexError(
                    "cannot reconstruct from layer {}, choose from"
                    " [2, {}]".format(l, params.n_layers))
    n = len(dataset)
    chunks = [slice(i, min(i + chunk_size, n))
              for i in range(0, n, chunk_size)]
    results = Parallel(n_jobs=n_jobs, backend='threading')(
            delayed(_evaluate_chunk)(
                params, dataset.images[s], dataset.labels[s], hp, mode,
                layers, max_intensity)
            for s in chunks)
    psnrs = np.concatenate([r[1] for r in results], axis=1)
    ssims = np.concatenate([r[2] for r in results], axis=1)
    confusion = reduce(lambda a, b: a.merge(b), [r[0] for r in results])
    report = MetricsReport(
            confusion, layers, psnrs.mean(axis=1), ssims.mean(axis=1), mode)
    logger.debug("evaluate {} on {}: {}".format(params, dataset, report))
    return report
