#! /usr/bin/env python
# -*- coding: utf-8 -*-
# Create Date    :  2024-03-07 09:51
# Git Repo       :  https://github.com/Jerry-Ma
# Email Address  :  jerry.ma.nk@gmail.com
"""Central finite-difference checks of the representation and weight
gradients on small seeded random networks."""
from __future__ import (absolute_import, division, print_function,
                        unicode_literals)

import logging

import numpy as np

from .core import (
        Hyperparams, ActivationState, representation_energy,
        representation_grad, weight_energy, weight_grad)
from .network import NetworkParams


__all__ = [
        'random_fc_network', 'random_conv_network', 'random_state',
        'clear_of_kinks', 'relative_error',
        'check_representation_grad', 'check_weight_grad',
        'run_gradcheck', 'SUITES']


SUITES = ('fc-representation', 'fc-weight', 'conv-representation',
          'conv-weight')

MAX_DRAWS = 100


def random_fc_network(rng, n_layers=None, max_width=16):
    """Fully connected network with 3 to 5 layers of at most `max_width`
    neurons and unit-scale random weights."""
    if n_layers is None:
        n_layers = int(rng.integers(3, 6))
    sizes = rng.integers(2, max_width + 1, size=n_layers)
    specs = ['fc:{}'.format(s) for s in sizes]
    params = NetworkParams(specs, (1, 1, int(sizes[0])))
    return params.with_weights([
        rng.normal(size=i.weight_shape) / np.sqrt(i.fan_in)
        for i in params.interfaces])


def random_conv_network(rng, max_channels=3, max_size=6):
    """Convolutional network with up to 3 layers on maps of at most
    ``max_size x max_size``; kernels of size 1 or 3."""
    n_layers = int(rng.integers(2, 4))
    h, w = (int(v) for v in rng.integers(3, max_size + 1, size=2))
    channels = rng.integers(1, max_channels + 1, size=n_layers)
    kernels = rng.choice([1, 3], size=n_layers)
    specs = ['conv:{}:{}'.format(c, k) for c, k in zip(channels, kernels)]
    params = NetworkParams(specs, (int(channels[0]), h, w))
    return params.with_weights([
        rng.normal(size=i.weight_shape) / np.sqrt(i.fan_in)
        for i in params.interfaces])


def random_state(params, rng, batch_size=1, clamp_output=False):
    """Random non-negative activities for every layer with the input
    clamped (and the output too if `clamp_output`)."""
    y = [rng.uniform(0., 1., size=(batch_size, ) + params.layer_shape(l))
         for l in range(1, params.n_layers + 1)]
    clamped = [True] + [False] * (params.n_layers - 2) + [clamp_output]
    return ActivationState(y, clamped)


def clear_of_kinks(params, state, margin=2e-4):
    """Whether every pre-activation of `state` is at least `margin` away
    from the ReLU corner, so small perturbations keep all units on the
    same side of it."""
    for l, interface in enumerate(params.interfaces, 1):
        for pre in (interface.forward(state.layer(l)),
                    interface.adjoint(state.layer(l + 1))):
            if np.min(np.abs(pre)) < margin:
                return False
    return True


def relative_error(analytic, numeric):
    """Largest absolute difference, relative to the largest magnitude of
    either gradient."""
    analytic, numeric = np.asarray(analytic), np.asarray(numeric)
    scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric)) / scale)


def _central_difference(f, x, eps):
    grad = np.zeros_like(x)
    flat, gflat = x.reshape(-1), grad.reshape(-1)
    for i in range(flat.size):
        v = flat[i]
        flat[i] = v + eps
        fp = f()
        flat[i] = v - eps
        fm = f()
        flat[i] = v
        gflat[i] = (fp - fm) / (2 * eps)
    return grad


def check_representation_grad(params, state, l, hp, eps=1e-5, corrupt=0.):
    """Relative error between :func:`representation_grad` of layer `l`
    and central differences of :func:`representation_energy`.

    :param corrupt: added to the analytic gradient, for negative
        controls.
    """
    analytic = representation_grad(params, state, l, hp) + corrupt
    state = state.copy()
    numeric = _central_difference(
            lambda: representation_energy(params, state, l, hp),
            state.y[l - 1], eps)
    return relative_error(analytic, numeric)


def check_weight_grad(params, state, l, hp, eps=1e-5, corrupt=0.):
    """Relative error between :func:`weight_grad` of interface `l` and
    central differences of :func:`weight_energy`."""
    analytic = weight_grad(params, state, l, hp) + corrupt
    params = params.copy()
    numeric = _central_difference(
            lambda: weight_energy(params, state, l, hp),
            params.interface(l).weights, eps)
    return relative_error(analytic, numeric)


def _random_hp(rng):
    return Hyperparams(
            lambda_f=rng.uniform(0.1, 2.), lambda_b=rng.uniform(0.1, 2.),
            beta_c=rng.uniform(0.1, 2.), beta_r=rng.uniform(0.1, 2.))


def _run_suite(suite, rng, instances, eps, corrupt):
    errors = []
    for _ in range(instances):
        for _ in range(MAX_DRAWS):
            if suite.startswith('fc'):
                params = random_fc_network(rng)
            else:
                params = random_conv_network(rng)
            state = random_state(params, rng, batch_size=2)
            if clear_of_kinks(params, state):
                break
        else:
            raise RuntimeError(
                    "no instance clear of ReLU corners in {} draws".format(
                        MAX_DRAWS))
        hp = _random_hp(rng)
        if suite.endswith('representation'):
            errors.extend(
                    check_representation_grad(
                        params, state, l, hp, eps, corrupt)
                    for l in state.free_layers())
        else:
            errors.extend(
                    check_weight_grad(params, state, l, hp, eps, corrupt)
                    for l in range(1, params.n_layers))
    return errors


def run_gradcheck(seed=0, fc_instances=50, conv_instances=20, eps=1e-5,
                  tol=1e-4, corrupt=0.):
    """Run all finite-difference suites.

    :param corrupt: offset added to every analytic gradient; a nonzero
        value makes the suites fail.
    :return: list of dicts with keys ``suite``, ``instances``,
        ``checks``, ``max_rel_error`` and ``passed``.
    """
    logger = logging.getLogger("gradcheck")
    report = []
    for k, suite in enumerate(SUITES):
        rng = np.random.default_rng([seed, k])
        instances = fc_instances if suite.startswith('fc') else \
            conv_instances
        errors = _run_suite(suite, rng, instances, eps, corrupt)
        max_err = max(errors) if errors else 0.
        report.append({
            'suite': suite,
            'instances': instances,
            'checks': len(errors),
            'max_rel_error': max_err,
            'passed': max_err <= tol,
            })
        logger.debug("{}: {} checks, max relative error {:.3e}".format(
            suite, len(errors), max_err))
    return report
