#! /usr/bin/env python
# -*- coding: utf-8 -*-

import numpy as np
import pytest

from dbpc.core import Hyperparams, train_batch
from dbpc.data import ImageDataset, AugmentConfig
from dbpc.inference import (
        classify, classify_batch, reconstruct_from_layer, estimate_state,
        evaluate, MetricsReport)
from dbpc.network import NetworkParams
from dbpc.train import train_epoch
from dbpc.utils import DataError, LayerIndexError


def identity_net(n=2, n_layers=2):
    params = NetworkParams(['fc:{}'.format(n)] * n_layers, (1, 1, n))
    return params.with_weights([np.eye(n)] * (n_layers - 1))


def small_conv_net(seed=0):
    params = NetworkParams(
            ['conv:1', 'conv:2:3', 'conv:3:3', 'flatten:4'], (1, 5, 5))
    return params.init_weights(seed)


def test_feedforward_equals_iterative_without_iterations():
    params = small_conv_net()
    x = np.random.default_rng(0).uniform(size=(1, 5, 5))
    hp = Hyperparams(T=0)
    ff = classify(params, x, hp, mode='feedforward')
    it = classify(params, x, hp, mode='iterative')
    assert ff.predicted_class == it.predicted_class
    np.testing.assert_array_equal(ff.output_activity, it.output_activity)
    assert (ff.mode, it.mode) == ('feedforward', 'iterative')


def test_classify_tie_picks_lowest_index():
    params = identity_net()
    result = classify(params, [0.5, 0.5], Hyperparams())
    assert result.predicted_class == 0
    result = classify(params, [0.2, 0.7], Hyperparams())
    assert result.predicted_class == 1
    np.testing.assert_array_equal(result.output_activity, [0.2, 0.7])


def test_classify_iterative_runs_inference():
    params = small_conv_net(1)
    x = np.random.default_rng(1).uniform(size=(1, 5, 5))
    hp = Hyperparams(T=5, lr_y=0.01)
    result = classify(params, x, hp, mode='iterative')
    _, out = classify_batch(params, x[None], hp, mode='iterative')
    np.testing.assert_array_equal(result.output_activity, out[0])
    assert result.output_activity.shape == (4, )


def test_classify_errors():
    params = identity_net()
    with pytest.raises(DataError):
        classify(params, [1., 2., 3.], Hyperparams())
    with pytest.raises(DataError):
        classify(params, np.zeros((2, 2)), Hyperparams())
    with pytest.raises(DataError):
        classify(params, [1., 2.], Hyperparams(), mode='sampling')


def test_classify_is_pure():
    params = small_conv_net(2)
    x = np.random.default_rng(2).uniform(size=(1, 5, 5))
    a = classify(params, x, Hyperparams())
    b = classify(params, x, Hyperparams())
    assert a.predicted_class == b.predicted_class
    np.testing.assert_array_equal(a.output_activity, b.output_activity)


def test_reconstruct_identity_toy():
    params = identity_net(n=3)
    x = np.array([0.5, -1., 2.])
    result = reconstruct_from_layer(params, x, 2, Hyperparams())
    assert result.source_layer == 2
    np.testing.assert_array_equal(
            result.image, np.maximum(x, 0.).reshape(1, 1, 3))


def test_reconstruct_layer_range():
    params = small_conv_net()
    x = np.zeros((1, 5, 5))
    for l in (0, 1, 5):
        with pytest.raises(LayerIndexError):
            reconstruct_from_layer(params, x, l, Hyperparams())


def test_reconstruct_untrained_net_is_input_shaped():
    params = small_conv_net(3)
    x = np.random.default_rng(3).uniform(size=(1, 5, 5))
    hp = Hyperparams(T=3, lr_y=0.01)
    for l in (2, 3, 4):
        image = reconstruct_from_layer(params, x, l, hp).image
        assert image.shape == (1, 5, 5)
        assert np.all(np.isfinite(image))
        assert np.all(image >= 0.)


def test_reconstruct_from_state_is_batched():
    params = small_conv_net(4)
    x = np.random.default_rng(4).uniform(size=(3, 1, 5, 5))
    state = estimate_state(params, x, Hyperparams(T=2, lr_y=0.01))
    result = reconstruct_from_layer(params, state, 3)
    assert result.image.shape == (3, 1, 5, 5)
    with pytest.raises(DataError):
        reconstruct_from_layer(params, x[0], 3)


def one_hot_dataset(n=12):
    labels = np.arange(n) % 2
    images = np.eye(2)[labels].reshape(n, 1, 1, 2)
    return ImageDataset(images, labels, name='toy')


def test_evaluate_perfect_classifier():
    params = identity_net(n=2, n_layers=3)
    dataset = one_hot_dataset()
    report = evaluate(params, dataset, Hyperparams(), chunk_size=5)
    assert isinstance(report, MetricsReport)
    assert report.accuracy == 1.0
    assert report.confusion.total == len(dataset)
    assert report.layers == [2]
    assert len(report.psnr) == len(report.ssim) == 1
    assert report.psnr[0] == float('inf')
    assert report.ssim[0] == pytest.approx(1.0)
    assert report.rows()[0]['layer'] == 2


def test_evaluate_layer_rows():
    params = small_conv_net(5)
    rng = np.random.default_rng(5)
    dataset = ImageDataset(rng.uniform(size=(6, 1, 5, 5)),
                           rng.integers(0, 4, size=6))
    hp = Hyperparams(T=2, lr_y=0.01)
    report = evaluate(params, dataset, hp)
    assert report.layers == [2, 3]
    assert len(report.psnr) == 2
    report = evaluate(params, dataset, hp, layers=[3])
    assert report.layers == [3]
    with pytest.raises(LayerIndexError):
        evaluate(params, dataset, hp, layers=[1])


def test_evaluate_independent_of_threads_and_chunks():
    params = small_conv_net(6)
    rng = np.random.default_rng(6)
    dataset = ImageDataset(rng.uniform(size=(10, 1, 5, 5)),
                           rng.integers(0, 4, size=10))
    hp = Hyperparams(T=2, lr_y=0.01)
    a = evaluate(params, dataset, hp, mode='iterative', chunk_size=3)
    b = evaluate(params, dataset, hp, mode='iterative', chunk_size=3,
                 n_jobs=3)
    np.testing.assert_array_equal(a.confusion.counts, b.confusion.counts)
    assert a.psnr == b.psnr and a.ssim == b.ssim
    c = evaluate(params, dataset, hp, mode='iterative', chunk_size=10)
    np.testing.assert_array_equal(a.confusion.counts, c.confusion.counts)
    np.testing.assert_allclose(a.psnr, c.psnr, rtol=1e-9)


def test_evaluate_empty_dataset():
    params = identity_net()
    empty = ImageDataset(np.zeros((0, 1, 1, 2)), np.zeros(0, dtype=int))
    with pytest.raises(DataError):
        evaluate(params, empty, Hyperparams())


def test_classify_memorized_samples():
    rng = np.random.default_rng(30)
    labels = np.arange(8) % 2
    centers = np.array([[0.9, 0.8, 0.1, 0.], [0., 0.1, 0.8, 0.9]])
    images = np.clip(centers[labels] + rng.uniform(0., 0.1, size=(8, 4)),
                     0., 1.).reshape(8, 1, 1, 4)
    params = NetworkParams(['fc:4', 'fc:2'], (1, 1, 4))
    params = params.with_weights([np.full((2, 4), 0.1)])
    hp = Hyperparams(lr_w=0.1, batch_size=8)
    for _ in range(300):
        params, _ = train_batch(params, images, labels, hp)
    for x, label in zip(images, labels):
        assert classify(params, x, hp).predicted_class == label


def test_evaluate_trained_network_psnr_drops_with_depth():
    # each interface above the second drops one more input dimension
    params = NetworkParams(
            ['fc:4', 'fc:4', 'fc:3', 'fc:2', 'fc:2'], (1, 1, 4))
    params = params.with_weights(
            [np.eye(4), np.eye(3, 4), np.eye(2, 3), np.eye(2)])
    rng = np.random.default_rng(31)
    dataset = ImageDataset(rng.uniform(0.5, 1., size=(16, 1, 1, 4)),
                           np.arange(16) % 2, name='toy')
    hp = Hyperparams(lr_w=1e-3, batch_size=4)
    for epoch in range(3):
        params, stats = train_epoch(
                params, dataset, hp, AugmentConfig(enabled=False), epoch)
        assert np.isfinite(stats.energy)
    report = evaluate(params, dataset, hp)
    assert report.layers == [2, 3, 4]
    assert np.all(np.isfinite(report.ssim))
    assert all(a >= b for a, b in zip(report.psnr, report.psnr[1:]))
    assert report.psnr[0] > report.psnr[-1]
