#! /usr/bin/env python
# -*- coding: utf-8 -*-
# Create Date    :  2024-03-02 14:31
# Git Repo       :  https://github.com/Jerry-Ma
# Email Address  :  jerry.ma.nk@gmail.com
from __future__ import (absolute_import, division, print_function,
                        unicode_literals)

import abc
import logging
from collections import OrderedDict, namedtuple
from inspect import isabstract

import numpy as np

from .tensor import (
        ConvKernel, as_tensor, matmul, matmul_transpose, conv2d_same,
        conv2d_adjoint_same, conv2d_kernel_grad, same_padding)
from .utils import ShapeError, LayerIndexError, log_and_raise


__all__ = [
        'LayerSpec', 'parse_layer', 'Interface', 'Dense', 'Conv',
        'FlattenDense', 'NetworkParams', 'ARCHITECTURES', 'architecture',
        'param_count', 'N_CLASSES', 'INPUT_SHAPE']


N_CLASSES = 10
"""Number of classes of MNIST and FashionMNIST."""

INPUT_SHAPE = (1, 28, 28)
"""Shape of a MNIST/FashionMNIST image, channels first."""

LAYER_KINDS = ('fc', 'conv', 'flatten')


class LayerSpec(namedtuple('LayerSpec', ['kind', 'size', 'kernel'])):
    """Specification of one layer.

    :param kind: ``fc`` for fully connected layers, ``conv`` for
        convolutional layers, and ``flatten`` for a fully connected
        layer that reads the flattened maps of a convolutional layer
        (the classification head of the convolutional networks).
    :param size: number of neurons (``fc``/``flatten``) or channels
        (``conv``).
    :param kernel: kernel size of the convolution *into* this layer.
        Only used by ``conv`` layers and ignored for the first layer.
    """

    __slots__ = ()

    def __new__(cls, kind, size, kernel=0):
        if kind not in LAYER_KINDS:
            raise ShapeError("unknown layer kind `{}`, choose from {}".format(
                kind, LAYER_KINDS))
        if int(size) < 1:
            raise ShapeError("layer size has to be positive, got {}".format(
                size))
        if kind == 'conv':
            kernel = int(kernel) if kernel else 3
            same_padding(kernel)
        else:
            kernel = 0
        return super().__new__(cls, kind, int(size), kernel)

    def __str__(self):
        if self.kind == 'conv':
            return "conv:{}:{}".format(self.size, self.kernel)
        return "{}:{}".format(self.kind, self.size)


def parse_layer(s):
    """Create :obj:`LayerSpec` from text like ``fc:1000``, ``conv:16:3``
    or ``flatten:10``."""
    parts = str(s).strip().split(':')
    if len(parts) not in (2, 3) or (len(parts) == 3 and parts[0] != 'conv'):
        raise ShapeError("invalid layer `{}`".format(s))
    try:
        values = [int(p) for p in parts[1:]]
    except ValueError:
        raise ShapeError("invalid layer `{}`".format(s))
    return LayerSpec(parts[0], *values)


class Interface(abc.ABC):
    """Abstract base class of the weight blocks between two adjacent
    layers.

    The same weights serve the feedforward map (:meth:`forward`, lower
    to upper layer) and the feedback map (:meth:`adjoint`, its exact
    adjoint). Concrete classes register themselves under the pair of
    layer kinds they connect.
    """

    kinds = OrderedDict()
    """Dict of concrete interface classes keyed by (lower, upper) layer
    kinds."""

    connects = ()
    """Pairs of (lower kind, upper kind) handled by this class."""

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        logger = logging.getLogger(Interface.__name__)
        if not isabstract(cls):
            for pair in cls.connects:
                if pair in cls.kinds:
                    logger.warning(
                            "name collision when adding interface {}".format(
                                pair))
                cls.kinds[pair] = cls

    def __init__(self, lower_shape, upper_shape, upper_spec, weights=None):
        self.lower_shape = tuple(lower_shape)
        self.upper_shape = tuple(upper_shape)
        self.spec = upper_spec
        if weights is None:
            weights = np.zeros(self.weight_shape)
        weights = as_tensor(weights)
        if weights.shape != self.weight_shape:
            raise ShapeError(
                    "{} needs weights of shape {}, got {}".format(
                        self.__class__.__name__, self.weight_shape,
                        weights.shape))
        self.weights = weights

    @classmethod
    def create(cls, lower, upper, lower_shape, upper_shape, weights=None):
        """Return the concrete interface connecting layer specs `lower`
        and `upper`."""
        pair = (lower.kind, upper.kind)
        if pair not in cls.kinds:
            raise ShapeError("a `{}` layer cannot follow a `{}` layer".format(
                upper.kind, lower.kind))
        return cls.kinds[pair](lower_shape, upper_shape, upper, weights)

    @abc.abstractproperty
    def weight_shape(self):
        return NotImplemented

    @abc.abstractproperty
    def fan_in(self):
        return NotImplemented

    @abc.abstractmethod
    def forward(self, x):
        """Linear part of the feedforward prediction of the upper layer."""
        return NotImplemented

    @abc.abstractmethod
    def adjoint(self, v):
        """Linear part of the feedback prediction of the lower layer."""
        return NotImplemented

    @abc.abstractmethod
    def weight_grad(self, x, g):
        """Gradient of ``<g, forward(x)>`` with respect to the weights,
        summed over the batch axis."""
        return NotImplemented

    def adjoint_weight_grad(self, v, h):
        """Gradient of ``<h, adjoint(v)>`` with respect to the weights,
        summed over the batch axis."""
        return self.weight_grad(h, v)

    def copy(self, weights=None):
        return self.__class__(
                self.lower_shape, self.upper_shape, self.spec,
                self.weights.copy() if weights is None else weights)

    def init_weights(self, rng):
        """Draw weights uniformly from ``+-sqrt(6 / fan_in)``."""
        bound = np.sqrt(6. / self.fan_in)
        self.weights = rng.uniform(-bound, bound, size=self.weight_shape)
        return self

    def __repr__(self):
        return "{}({} -> {})".format(
                self.__class__.__name__, self.lower_shape, self.upper_shape)


class Dense(Interface):
    """Weight matrix between two fully connected layers."""

    connects = (('fc', 'fc'), ('flatten', 'fc'), ('flatten', 'flatten'))

    @property
    def weight_shape(self):
        return (self.upper_shape[0], self.lower_shape[0])

    @property
    def fan_in(self):
        return self.lower_shape[0]

    def forward(self, x):
        return matmul(self.weights, x)

    def adjoint(self, v):
        return matmul_transpose(self.weights, v)

    def weight_grad(self, x, g):
        g, x = np.atleast_2d(g), np.atleast_2d(x)
        return g.T @ x


class Conv(Interface):
    """Same-padded convolution between two convolutional layers."""

    connects = (('conv', 'conv'), )

    @property
    def weight_shape(self):
        k = self.spec.kernel
        return (self.upper_shape[0], self.lower_shape[0], k, k)

    @property
    def fan_in(self):
        return self.lower_shape[0] * self.spec.kernel ** 2

    @property
    def kernel(self):
        return ConvKernel(self.weights)

    def forward(self, x):
        return conv2d_same(x, self.kernel)

    def adjoint(self, v):
        return conv2d_adjoint_same(v, self.kernel)

    def weight_grad(self, x, g):
        return conv2d_kernel_grad(x, g, self.spec.kernel)


class FlattenDense(Interface):
    """Weight matrix from the flattened maps of a convolutional layer to a
    fully connected layer."""

    connects = (('conv', 'flatten'), )

    @property
    def weight_shape(self):
        return (self.upper_shape[0], int(np.prod(self.lower_shape)))

    @property
    def fan_in(self):
        return self.weight_shape[1]

    def _flat(self, x):
        x = as_tensor(x)
        if x.shape == self.lower_shape:
            return x.reshape(-1)
        return x.reshape(x.shape[0], -1)

    def forward(self, x):
        return matmul(self.weights, self._flat(x))

    def adjoint(self, v):
        out = matmul_transpose(self.weights, v)
        return out.reshape(out.shape[:-1] + self.lower_shape)

    def weight_grad(self, x, g):
        g, x = np.atleast_2d(g), np.atleast_2d(self._flat(x))
        return g.T @ x


class NetworkParams(object):
    """Layer specifications and the weight blocks between them.

    Layers are numbered ``1..L`` and interfaces ``1..L-1``, interface
    ``l`` connecting layer ``l`` to layer ``l + 1``.

    :param specs: list of :obj:`LayerSpec` (or their text form).
    :param input_shape: shape ``(C, H, W)`` of the input images. For a
        fully connected first layer it only describes how a flat input
        maps back to an image.
    :param weights: optional list of weight arrays, one per interface.
    """

    def __init__(self, specs, input_shape=INPUT_SHAPE, weights=None):
        self.logger = logging.getLogger("network")
        self.specs = [s if isinstance(s, LayerSpec) else parse_layer(s)
                      for s in specs]
        self.input_shape = tuple(int(i) for i in input_shape)
        if len(self.specs) < 2:
            raise ShapeError("a network needs at least two layers")
        if len(self.input_shape) != 3:
            raise ShapeError("input shape has to be (C, H, W), got {}".format(
                self.input_shape))
        first = self.specs[0]
        if first.kind == 'flatten':
            raise ShapeError("the first layer cannot be a `flatten` layer")
        if first.kind == 'fc' and first.size != np.prod(self.input_shape):
            raise ShapeError(
                    "first layer {} does not match input shape {}".format(
                        first, self.input_shape))
        if first.kind == 'conv' and first.size != self.input_shape[0]:
            raise ShapeError(
                    "first layer {} does not match input channels {}".format(
                        first, self.input_shape))
        self.layer_shapes = [self._shape_of(s) for s in self.specs]
        if weights is None:
            weights = [None] * (len(self.specs) - 1)
        if len(weights) != len(self.specs) - 1:
            raise ShapeError("{} layers need {} weight blocks, got {}".format(
                len(self.specs), len(self.specs) - 1, len(weights)))
        self.interfaces = [
                Interface.create(
                    self.specs[i], self.specs[i + 1],
                    self.layer_shapes[i], self.layer_shapes[i + 1], w)
                for i, w in enumerate(weights)]

    def _shape_of(self, spec):
        if spec.kind == 'conv':
            return (spec.size, ) + self.input_shape[1:]
        return (spec.size, )

    @property
    def n_layers(self):
        """Number of layers ``L``."""
        return len(self.specs)

    @property
    def n_classes(self):
        return self.specs[-1].size

    @property
    def weights(self):
        """List of weight arrays in interface order."""
        return [i.weights for i in self.interfaces]

    def interface(self, l):
        """Return interface `l` (``1 <= l <= L - 1``)."""
        if not 1 <= l <= self.n_layers - 1:
            raise LayerIndexError(
                    "interface {} out of range [1, {}]".format(
                        l, self.n_layers - 1))
        return self.interfaces[l - 1]

    def layer_shape(self, l):
        """Shape of the activity of layer `l` for a single sample."""
        if not 1 <= l <= self.n_layers:
            raise LayerIndexError("layer {} out of range [1, {}]".format(
                l, self.n_layers))
        return self.layer_shapes[l - 1]

    def reconstruction_layers(self):
        """Layers whose representation is used to reconstruct inputs:
        all layers except the input and the output layer."""
        return list(range(2, self.n_layers))

    def init_weights(self, seed=0):
        """Initialize all weights from a generator seeded with `seed`."""
        rng = np.random.default_rng(seed)
        for interface in self.interfaces:
            interface.init_weights(rng)
        self.logger.debug("initialized {} weights with seed {}".format(
            param_count(self), seed))
        return self

    def copy(self):
        return NetworkParams(
                self.specs, self.input_shape,
                [w.copy() for w in self.weights])

    def with_weights(self, weights):
        """Return a new :obj:`NetworkParams` sharing the architecture
        with `weights` in place of the current ones."""
        return NetworkParams(self.specs, self.input_shape, list(weights))

    def same_architecture(self, other):
        return (self.specs == other.specs and
                self.input_shape == other.input_shape)

    def __repr__(self):
        return "NetworkParams({})".format(
                ", ".join(str(s) for s in self.specs))


ARCHITECTURES = OrderedDict([
    ('dbpc-fcn-mnist', {
        'layers': ['fc:784', 'fc:1000', 'fc:400', 'fc:100', 'fc:10'],
        'epochs': 50,
        'dataset': 'mnist',
        }),
    ('dbpc-cnn-mnist', {
        'layers': ['conv:1', 'conv:16:3', 'conv:32:3', 'conv:32:3',
                   'conv:48:3', 'conv:48:3', 'flatten:10'],
        'epochs': 50,
        'dataset': 'mnist',
        }),
    ('dbpc-cnn-fashion', {
        'layers': ['conv:1', 'conv:16:3', 'conv:32:3', 'conv:32:3',
                   'conv:48:3', 'conv:48:3', 'conv:64:3', 'conv:64:3',
                   'conv:96:3', 'conv:96:3', 'flatten:10'],
        'epochs': 100,
        'dataset': 'fashion',
        }),
    ])
"""Published architectures, their numbers of epochs and datasets."""


def architecture(name, input_shape=INPUT_SHAPE):
    """Return an un-initialized :obj:`NetworkParams` for the published
    architecture `name`."""
    if name not in ARCHITECTURES:
        log_and_raise(
                logging.getLogger("network").error,
                "unknown architecture `{}`, choose from {}".format(
                    name, list(ARCHITECTURES.keys())),
                ShapeError)
    return NetworkParams(ARCHITECTURES[name]['layers'], input_shape)


def param_count(params):
    """Total number of scalar weights (there are no biases)."""
    return int(sum(w.size for w in params.weights))
