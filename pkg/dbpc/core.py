#! /usr/bin/env python
# -*- coding: utf-8 -*-
# Create Date    :  2024-03-03 16:45
# Git Repo       :  https://github.com/Jerry-Ma
# Email Address  :  jerry.ma.nk@gmail.com
"""Bi-directional predictive coding: predictions, local errors,
representation learning and model learning.

Indexing follows the network: layers ``1..L`` and interfaces
``1..L-1``. Interface ``l`` produces two errors,

* the feedforward error ``e_l^ff = (y_{l+1} - relu(F_l y_l))^2`` and
* the feedback error ``e_l^fb = (y_l - relu(F_l^* y_{l+1}))^2``,

where ``F_l`` is the linear map of the interface and ``F_l^*`` its
adjoint. The global energy is
``sum_l lambda_f * sum(e_l^ff) + lambda_b * sum(e_l^fb)`` and the
representation energy of a layer collects the terms of its two
interfaces, so its gradient equals the gradient of the global energy.

Activities carry a leading batch axis. Samples never interact; energies
and weight gradients are summed over the batch.
"""
from __future__ import (absolute_import, division, print_function,
                        unicode_literals)

import logging
from collections import namedtuple

import numpy as np
from joblib import Parallel, delayed
from schema import Schema, And, Use

from .tensor import as_tensor, relu, relu_prime
from .data import one_hot
from .utils import (
        DBPCError, DataError, ShapeError, LayerIndexError, log_and_raise)


__all__ = [
        'Hyperparams', 'ActivationState', 'PredictionErrors', 'BatchStats',
        'feedforward_predict', 'feedback_predict',
        'prediction_errors', 'global_energy', 'representation_energy',
        'representation_grad', 'representation_step',
        'infer_representations', 'weight_energy', 'weight_grad',
        'weight_grads', 'weight_step', 'apply_weight_grads',
        'initialize_state', 'train_batch', 'SAMPLE_CHUNK']


SAMPLE_CHUNK = 8
"""Number of samples processed together by one parallel task.

Chunks are cut independently of the number of workers, so the floating
point work done per sample does not depend on the thread count."""


_nonneg = And(Use(float), lambda v: v >= 0)


class Hyperparams(object):
    """Factors, step sizes and loop settings of the learning algorithm.

    :ivar lambda_f: feedforward factor of the representation energy.
    :ivar lambda_b: feedback factor of the representation energy.
    :ivar beta_c: classification factor of the weight energy.
    :ivar beta_r: reconstruction factor of the weight energy.
    :ivar lr_y: step size of representation updates.
    :ivar lr_w: step size of weight updates.
    :ivar T: number of representation updates per sample.
    :ivar batch_size: samples per weight update.
    :ivar epochs: passes over the training set.
    :ivar seed: seed of weight initialization, shuffling and augmentation.
    """

    defaults = (
            ('lambda_f', 1.), ('lambda_b', 1.),
            ('beta_c', 1.), ('beta_r', 1.),
            ('lr_y', 0.1), ('lr_w', 1e-3),
            ('T', 20), ('batch_size', 32), ('epochs', 50), ('seed', 0),
            )

    _schema = Schema({
        'lambda_f': _nonneg, 'lambda_b': _nonneg,
        'beta_c': _nonneg, 'beta_r': _nonneg,
        'lr_y': _nonneg, 'lr_w': _nonneg,
        'T': And(Use(int), lambda v: v >= 0,
                 error="`T` has to be a non-negative integer"),
        'batch_size': And(Use(int), lambda v: v >= 1,
                          error="`batch_size` has to be at least 1"),
        'epochs': And(Use(int), lambda v: v >= 0,
                      error="`epochs` has to be a non-negative integer"),
        'seed': And(Use(int), lambda v: v >= 0,
                    error="`seed` has to be a non-negative integer"),
        })

    def __init__(self, **kwargs):
        unknown = set(kwargs) - set(k for k, _ in self.defaults)
        if unknown:
            raise TypeError("unknown hyperparameters {}".format(
                sorted(unknown)))
        values = dict(self.defaults)
        values.update(kwargs)
        values = self._schema.validate(values)
        for k, _ in self.defaults:
            setattr(self, k, values[k])

    def replace(self, **kwargs):
        """Return a copy with entries in `kwargs` replaced."""
        return self.__class__(**dict(self.to_dict(), **kwargs))

    def to_dict(self):
        return {k: getattr(self, k) for k, _ in self.defaults}

    def __repr__(self):
        return "Hyperparams({})".format(", ".join(
            "{}={}".format(k, getattr(self, k)) for k, _ in self.defaults))


class ActivationState(object):
    """Activities ``y_1..y_L`` of a batch of samples and the clamp flags.

    :param y: list of arrays, ``y[l - 1]`` has shape
        ``(B, ) + params.layer_shape(l)``.
    :param clamped: list of booleans, one per layer.
    """

    def __init__(self, y, clamped):
        if len(y) != len(clamped):
            raise ShapeError("{} activities but {} clamp flags".format(
                len(y), len(clamped)))
        self.y = [as_tensor(a) for a in y]
        self.clamped = [bool(c) for c in clamped]

    @property
    def n_layers(self):
        return len(self.y)

    @property
    def batch_size(self):
        return self.y[0].shape[0]

    def layer(self, l):
        """Activity of layer `l` (1-based)."""
        if not 1 <= l <= self.n_layers:
            raise LayerIndexError("layer {} out of range [1, {}]".format(
                l, self.n_layers))
        return self.y[l - 1]

    def free_layers(self):
        return [l for l in range(1, self.n_layers + 1)
                if not self.clamped[l - 1]]

    def copy(self):
        return ActivationState([a.copy() for a in self.y], self.clamped)

    def __repr__(self):
        return "ActivationState(B={}, clamped={})".format(
                self.batch_size, self.clamped)


PredictionErrors = namedtuple('PredictionErrors', ['ff', 'fb'])
"""Element-wise squared prediction errors per interface: ``ff[l - 1]`` is
``e_l^ff`` (upper layer shape) and ``fb[l - 1]`` is ``e_l^fb`` (lower
layer shape)."""

BatchStats = namedtuple('BatchStats', ['energy', 'correct', 'size'])
"""Summed post-inference global energy, number of samples the
feedforward sweep classified correctly, and the number of samples."""


def _check_interface_layer(params, l, lo, hi):
    if not lo <= l <= hi:
        raise LayerIndexError("layer {} out of range [{}, {}]".format(
            l, lo, hi))


def feedforward_predict(params, state, l):
    """Prediction of layer `l` (``2 <= l <= L``) from layer ``l - 1``."""
    _check_interface_layer(params, l, 2, params.n_layers)
    return relu(params.interface(l - 1).forward(state.layer(l - 1)))


def feedback_predict(params, state, l):
    """Prediction of layer `l` (``1 <= l <= L - 1``) from layer ``l + 1``
    through the adjoint of the same weights."""
    _check_interface_layer(params, l, 1, params.n_layers - 1)
    return relu(params.interface(l).adjoint(state.layer(l + 1)))


class _Residuals(object):
    """Pre-activations and residuals of one interface for one state."""

    def __init__(self, interface, lower, upper):
        self.lower = lower
        self.upper = upper
        self.pre_ff = interface.forward(lower)
        self.pre_fb = interface.adjoint(upper)
        self.r_ff = upper - relu(self.pre_ff)
        self.r_fb = lower - relu(self.pre_fb)

    @property
    def ff_error(self):
        return self.r_ff ** 2

    @property
    def fb_error(self):
        return self.r_fb ** 2


def _residuals(params, state):
    return [_Residuals(params.interface(i), state.layer(i),
                       state.layer(i + 1))
            for i in range(1, params.n_layers)]


def prediction_errors(params, state):
    """Return :obj:`PredictionErrors` for every interface."""
    res = _residuals(params, state)
    return PredictionErrors([r.ff_error for r in res],
                            [r.fb_error for r in res])


def global_energy(params, state, hp):
    """``sum_l lambda_f * sum(e_l^ff) + lambda_b * sum(e_l^fb)``."""
    errors = prediction_errors(params, state)
    return float(sum(hp.lambda_f * np.sum(ff) + hp.lambda_b * np.sum(fb)
                     for ff, fb in zip(errors.ff, errors.fb)))


def _neighbour_interfaces(params, l):
    """Interfaces touching layer `l`: below (``l - 1``) and above (``l``)
    where they exist."""
    return [i for i in (l - 1, l) if 1 <= i <= params.n_layers - 1]


def representation_energy(params, state, l, hp):
    """Local energy ``E_{y_l}`` of layer `l`.

    Only the interfaces that exist contribute, so layer ``L`` (free at
    test time) sees its lower interface only.
    """
    _check_interface_layer(params, l, 1, params.n_layers)
    energy = 0.
    for i in _neighbour_interfaces(params, l):
        r = _Residuals(params.interface(i), state.layer(i),
                       state.layer(i + 1))
        energy += hp.lambda_f * np.sum(r.ff_error) + \
            hp.lambda_b * np.sum(r.fb_error)
    return float(energy)


def _representation_grad(params, l, residuals, hp):
    grad = 0.
    if l >= 2:
        # layer l is the upper side of interface l - 1
        r = residuals[l - 2]
        fwd = params.interface(l - 1).forward
        grad = grad + 2. * hp.lambda_f * r.r_ff - \
            2. * hp.lambda_b * fwd(relu_prime(r.pre_fb) * r.r_fb)
    if l <= params.n_layers - 1:
        # layer l is the lower side of interface l
        r = residuals[l - 1]
        adj = params.interface(l).adjoint
        grad = grad + 2. * hp.lambda_b * r.r_fb - \
            2. * hp.lambda_f * adj(relu_prime(r.pre_ff) * r.r_ff)
    return grad


def representation_grad(params, state, l, hp):
    """Analytic gradient of :func:`representation_energy` with respect to
    the activity of layer `l`, which must not be clamped."""
    _check_interface_layer(params, l, 1, params.n_layers)
    if state.clamped[l - 1]:
        log_and_raise(
                logging.getLogger("core").error,
                "gradient requested for clamped layer {}".format(l),
                DBPCError)
    return _representation_grad(params, l, _residuals(params, state), hp)


def representation_step(params, state, hp):
    """One update ``y_l <- y_l - lr_y * dE_{y_l}/dy_l`` of all free layers.

    All gradients are computed from the state before the update, so the
    result does not depend on the order in which layers are visited.
    """
    residuals = _residuals(params, state)
    grads = [(l, _representation_grad(params, l, residuals, hp))
             for l in state.free_layers()]
    new = state.copy()
    for l, g in grads:
        new.y[l - 1] = state.y[l - 1] - hp.lr_y * g
    return new


def infer_representations(params, state, hp, iterations=None,
                          energies=None):
    """Apply :func:`representation_step` `iterations` times (``hp.T`` by
    default), recomputing all predictions every iteration.

    :param energies: if a list is given, the global energy before the
        first and after every iteration is appended to it.
    """
    iterations = hp.T if iterations is None else iterations
    if energies is not None:
        energies.append(global_energy(params, state, hp))
    for _ in range(iterations):
        state = representation_step(params, state, hp)
        if energies is not None:
            energies.append(global_energy(params, state, hp))
    return state


def weight_energy(params, state, l, hp):
    """``E_{W_l} = beta_c * sum(e_l^ff) + beta_r * sum(e_l^fb)``."""
    _check_interface_layer(params, l, 1, params.n_layers - 1)
    r = _Residuals(params.interface(l), state.layer(l), state.layer(l + 1))
    return float(hp.beta_c * np.sum(r.ff_error) +
                 hp.beta_r * np.sum(r.fb_error))


def _weight_grad(interface, r, hp):
    g_ff = interface.weight_grad(r.lower, relu_prime(r.pre_ff) * r.r_ff)
    g_fb = interface.adjoint_weight_grad(
            r.upper, relu_prime(r.pre_fb) * r.r_fb)
    return -2. * hp.beta_c * g_ff - 2. * hp.beta_r * g_fb


def weight_grad(params, state, l, hp):
    """Gradient of :func:`weight_energy` with respect to the weights of
    interface `l`, through both their feedforward and their feedback
    use, summed over the batch."""
    _check_interface_layer(params, l, 1, params.n_layers - 1)
    r = _Residuals(params.interface(l), state.layer(l), state.layer(l + 1))
    return _weight_grad(params.interface(l), r, hp)


def weight_grads(params, state, hp):
    """:func:`weight_grad` of every interface, in interface order."""
    return [_weight_grad(params.interface(i), r, hp)
            for i, r in enumerate(_residuals(params, state), 1)]


def apply_weight_grads(params, grads, lr):
    """Return new params with ``W_l <- W_l - lr * grads[l - 1]``."""
    return params.with_weights(
            [w - lr * g for w, g in zip(params.weights, grads)])


def weight_step(params, state, hp):
    """Update all weights with the batch mean of their gradients."""
    grads = weight_grads(params, state, hp)
    n = state.batch_size
    return apply_weight_grads(params, [g / n for g in grads], hp.lr_w)


def initialize_state(params, x, target=None):
    """Clamp the input layer to `x`, initialize the other layers with one
    feedforward sweep, and clamp the output layer to `target` if given.

    :param x: batch of inputs, either images ``(B, C, H, W)`` or arrays
        already shaped like layer 1.
    :param target: optional ``(B, n_classes)`` target activities.
    :return: the :obj:`ActivationState` and the feedforward output of the
        sweep (``(B, n_classes)``), before any clamping of the output.
    """
    x = as_tensor(x)
    shape = params.layer_shape(1)
    if x.shape[1:] != shape:
        if int(np.prod(x.shape[1:])) != int(np.prod(shape)):
            raise DataError("input of shape {} does not match layer {}".format(
                x.shape[1:], params.specs[0]))
        x = x.reshape((x.shape[0], ) + shape)
    y = [x]
    for interface in params.interfaces:
        y.append(relu(interface.forward(y[-1])))
    sweep = y[-1]
    clamped = [True] + [False] * (params.n_layers - 1)
    if target is not None:
        target = as_tensor(target)
        if target.shape != (x.shape[0], params.n_classes):
            raise DataError("target of shape {} does not match {}".format(
                target.shape, params.specs[-1]))
        y[-1] = target.copy()
        clamped[-1] = True
    return ActivationState(y, clamped), sweep


def _train_chunk(params, x, labels, hp):
    state, sweep = initialize_state(
            params, x, one_hot(labels, params.n_classes))
    state = infer_representations(params, state, hp)
    correct = int(np.sum(np.argmax(sweep, axis=1) == labels))
    return (weight_grads(params, state, hp),
            global_energy(params, state, hp), correct)


def _chunks(n, size=SAMPLE_CHUNK):
    return [slice(i, min(i + size, n)) for i in range(0, n, size)]


def train_batch(params, images, labels, hp, n_jobs=1):
    """Run one minibatch of the learning algorithm.

    Each sample has its input and label clamped, its free layers
    initialized by a feedforward sweep and inferred for ``hp.T``
    iterations. The weight gradients are then averaged over the batch and
    applied once.

    :param n_jobs: number of worker threads. Results do not depend on it.
    :return: updated params and :obj:`BatchStats`.
    """
    labels = np.asarray(labels)
    n = len(labels)
    if n == 0 or len(images) != n:
        raise DataError("batch of {} images and {} labels".format(
            len(images), n))
    one_hot(labels, params.n_classes)  # validate up front
    chunks = _chunks(n)
    results = Parallel(n_jobs=n_jobs, backend='threading')(
            delayed(_train_chunk)(params, images[s], labels[s], hp)
            for s in chunks)
    # fixed reduction order over chunks
    grads = [np.zeros_like(w) for w in params.weights]
    energy, correct = 0., 0
    for g, e, c in results:
        for acc, gi in zip(grads, g):
            acc += gi
        energy += e
        correct += c
    params = apply_weight_grads(params, [g / n for g in grads], hp.lr_w)
    return params, BatchStats(energy, correct, n)
