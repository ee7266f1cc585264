#! /usr/bin/env python
# -*- coding: utf-8 -*-

import numpy as np
import pytest

from dbpc.network import (
        LayerSpec, parse_layer, NetworkParams, Dense, Conv, FlattenDense,
        ARCHITECTURES, architecture, param_count)
from dbpc.tensor import dense_conv_matrix
from dbpc.utils import ShapeError, InvalidKernelError, LayerIndexError


@pytest.mark.parametrize('name,count', [
    ('dbpc-fcn-mnist', 1225000),
    ('dbpc-cnn-mnist', 424848),
    ('dbpc-cnn-fashion', 1003920),
    ])
def test_published_param_counts(name, count):
    assert param_count(architecture(name)) == count


def test_architecture_presets():
    assert ARCHITECTURES['dbpc-fcn-mnist']['epochs'] == 50
    assert ARCHITECTURES['dbpc-cnn-mnist']['epochs'] == 50
    assert ARCHITECTURES['dbpc-cnn-fashion']['epochs'] == 100
    assert architecture('dbpc-cnn-mnist').n_layers == 7
    assert architecture('dbpc-cnn-fashion').n_layers == 11
    with pytest.raises(ShapeError):
        architecture('lenet')


def test_parse_layer():
    assert parse_layer('fc:1000') == LayerSpec('fc', 1000)
    assert parse_layer('conv:16:5') == LayerSpec('conv', 16, 5)
    assert parse_layer('conv:16').kernel == 3
    assert parse_layer('flatten:10').kernel == 0
    assert str(parse_layer('conv:16')) == 'conv:16:3'
    for bad in ('fc', 'fc:a', 'pool:2', 'fc:4:3', 'fc:0'):
        with pytest.raises(ShapeError):
            parse_layer(bad)
    with pytest.raises(InvalidKernelError):
        parse_layer('conv:4:2')


def test_network_validation():
    with pytest.raises(ShapeError):
        NetworkParams(['fc:783', 'fc:10'])
    with pytest.raises(ShapeError):
        NetworkParams(['conv:3', 'conv:4'])
    with pytest.raises(ShapeError):
        NetworkParams(['fc:784'])
    with pytest.raises(ShapeError):
        NetworkParams(['fc:784', 'conv:4'])
    with pytest.raises(ShapeError):
        NetworkParams(['fc:4', 'fc:2'], (1, 2, 2), [np.zeros((2, 3))])


def test_network_layout():
    params = architecture('dbpc-cnn-mnist')
    assert params.layer_shape(1) == (1, 28, 28)
    assert params.layer_shape(2) == (16, 28, 28)
    assert params.layer_shape(7) == (10, )
    assert isinstance(params.interface(1), Conv)
    assert isinstance(params.interface(6), FlattenDense)
    assert params.reconstruction_layers() == [2, 3, 4, 5, 6]
    assert params.n_classes == 10
    fcn = architecture('dbpc-fcn-mnist')
    assert isinstance(fcn.interface(1), Dense)
    assert fcn.reconstruction_layers() == [2, 3, 4]
    fashion = architecture('dbpc-cnn-fashion')
    assert fashion.n_layers == 11
    assert fashion.reconstruction_layers() == list(range(2, 11))
    with pytest.raises(LayerIndexError):
        fcn.interface(5)
    with pytest.raises(LayerIndexError):
        fcn.layer_shape(0)


def test_init_weights_seeded():
    a = NetworkParams(['fc:8', 'fc:6', 'fc:3'], (1, 2, 4)).init_weights(3)
    b = NetworkParams(['fc:8', 'fc:6', 'fc:3'], (1, 2, 4)).init_weights(3)
    for wa, wb in zip(a.weights, b.weights):
        np.testing.assert_array_equal(wa, wb)
    bound = np.sqrt(6. / 8)
    assert np.all(np.abs(a.weights[0]) <= bound)


def test_copy_is_independent():
    a = NetworkParams(['fc:4', 'fc:2'], (1, 2, 2)).init_weights(0)
    b = a.copy()
    b.weights[0][...] = 0.
    assert np.any(a.weights[0] != 0.)
    assert a.same_architecture(b)


@pytest.mark.parametrize('specs,shape', [
    (['fc:6', 'fc:4'], (1, 2, 3)),
    (['conv:2', 'conv:3:3'], (2, 4, 5)),
    (['conv:2', 'flatten:4'], (2, 3, 3)),
    ])
def test_weight_tying_adjoint(specs, shape):
    rng = np.random.default_rng(0)
    params = NetworkParams(specs, shape).init_weights(1)
    interface = params.interface(1)
    for _ in range(20):
        u = rng.normal(size=(1, ) + params.layer_shape(1))
        v = rng.normal(size=(1, ) + params.layer_shape(2))
        lhs = np.sum(v * interface.forward(u))
        rhs = np.sum(interface.adjoint(v) * u)
        assert abs(lhs - rhs) <= 1e-10 * (abs(lhs) + 1)


@pytest.mark.parametrize('specs,shape', [
    (['fc:6', 'fc:4'], (1, 2, 3)),
    (['conv:2', 'conv:3:3'], (2, 4, 5)),
    (['conv:2', 'flatten:4'], (2, 3, 3)),
    ])
def test_weight_grads_are_exact(specs, shape):
    # <g, forward(x)> is linear in the weights, so its gradient can be
    # checked by probing with unit weight blocks
    rng = np.random.default_rng(1)
    params = NetworkParams(specs, shape)
    interface = params.interface(1)
    x = rng.normal(size=(2, ) + params.layer_shape(1))
    g = rng.normal(size=(2, ) + params.layer_shape(2))
    grad = interface.weight_grad(x, g)
    adj_grad = interface.adjoint_weight_grad(g, x)
    expected = np.zeros(interface.weight_shape)
    expected_adj = np.zeros(interface.weight_shape)
    for idx in np.ndindex(*interface.weight_shape):
        unit = np.zeros(interface.weight_shape)
        unit[idx] = 1.
        probe = interface.copy(unit)
        expected[idx] = np.sum(g * probe.forward(x))
        expected_adj[idx] = np.sum(x * probe.adjoint(g))
    np.testing.assert_allclose(grad, expected, atol=1e-12)
    np.testing.assert_allclose(adj_grad, expected_adj, atol=1e-12)


def test_conv_interface_matches_dense_matrix():
    params = NetworkParams(['conv:1', 'conv:1:3'], (1, 3, 3)).init_weights(0)
    interface = params.interface(1)
    m = dense_conv_matrix(interface.weights, (1, 3, 3))
    v = np.random.default_rng(2).normal(size=(1, 1, 3, 3))
    np.testing.assert_allclose(
            interface.adjoint(v).ravel(), m.T @ v.ravel(), atol=1e-12)
