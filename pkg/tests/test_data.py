#! /usr/bin/env python
# -*- coding: utf-8 -*-

import gzip
import struct
from collections import Counter

import numpy as np
import pytest

from dbpc.data import (
        ImageDataset, AugmentConfig, load_idx, one_hot, augment,
        augment_batch, minibatches, IMAGE_MAGIC, LABEL_MAGIC)
from dbpc.utils import DataError, FormatError


def idx_images(pixels, magic=IMAGE_MAGIC):
    pixels = np.asarray(pixels, dtype=np.uint8)
    n, rows, cols = pixels.shape
    return struct.pack('>IIII', magic, n, rows, cols) + pixels.tobytes()


def idx_labels(labels, magic=LABEL_MAGIC, count=None):
    labels = np.asarray(labels, dtype=np.uint8)
    n = len(labels) if count is None else count
    return struct.pack('>II', magic, n) + labels.tobytes()


def write(path, content):
    path.write_bytes(content)
    return str(path)


def test_load_idx_scaling_and_labels(tmp_path):
    images = write(tmp_path / 'img', idx_images(np.full((1, 28, 28), 255)))
    labels = write(tmp_path / 'lbl', idx_labels([7]))
    dataset = load_idx(images, labels, name='mnist-test')
    assert len(dataset) == 1
    assert dataset.images.shape == (1, 1, 28, 28)
    np.testing.assert_array_equal(dataset.images, 1.)
    assert dataset.labels.tolist() == [7]
    assert dataset.name == 'mnist-test'


def test_load_idx_gzip(tmp_path):
    pixels = np.arange(2 * 3 * 4).reshape(2, 3, 4)
    images = write(tmp_path / 'img.gz', gzip.compress(idx_images(pixels)))
    labels = write(tmp_path / 'lbl.gz', gzip.compress(idx_labels([1, 9])))
    dataset = load_idx(images, labels)
    np.testing.assert_allclose(
            dataset.images[:, 0], pixels / 255., rtol=0, atol=1e-15)
    assert dataset.labels.tolist() == [1, 9]


def test_load_idx_count_mismatch(tmp_path):
    images = write(tmp_path / 'img', idx_images(np.zeros((10, 2, 2))))
    labels = write(tmp_path / 'lbl', idx_labels(np.zeros(9)))
    with pytest.raises(FormatError, match='count mismatch'):
        load_idx(images, labels)


def test_load_idx_bad_magic(tmp_path):
    images = write(tmp_path / 'img',
                   idx_images(np.zeros((1, 2, 2)), magic=LABEL_MAGIC))
    labels = write(tmp_path / 'lbl', idx_labels([0]))
    with pytest.raises(FormatError, match='offset 0'):
        load_idx(images, labels)


def test_load_idx_truncated(tmp_path):
    content = idx_images(np.zeros((3, 4, 4)))
    images = write(tmp_path / 'img', content[:-5])
    labels = write(tmp_path / 'lbl', idx_labels([0, 1, 2]))
    with pytest.raises(FormatError, match='offset {}'.format(
            len(content) - 5)):
        load_idx(images, labels)
    images = write(tmp_path / 'img', content[:10])
    with pytest.raises(FormatError, match='truncated header'):
        load_idx(images, labels)
    images = write(tmp_path / 'img', content)
    labels = write(tmp_path / 'lbl', idx_labels([0, 1], count=3))
    with pytest.raises(FormatError, match='truncated label'):
        load_idx(images, labels)


def test_load_idx_label_out_of_range(tmp_path):
    images = write(tmp_path / 'img', idx_images(np.zeros((2, 2, 2))))
    labels = write(tmp_path / 'lbl', idx_labels([3, 12]))
    with pytest.raises(FormatError, match='offset 9'):
        load_idx(images, labels)


def test_image_dataset_validation():
    with pytest.raises(DataError):
        ImageDataset(np.zeros((2, 1, 2, 2)), [0])
    with pytest.raises(DataError):
        ImageDataset(np.full((1, 1, 2, 2), 1.5), [0])
    with pytest.raises(DataError):
        ImageDataset(np.zeros((1, 2, 2)), [0])
    with pytest.raises(DataError):
        ImageDataset(np.zeros((1, 1, 2, 2)), [10])


def test_image_dataset_subset_and_targets():
    dataset = ImageDataset(np.zeros((5, 1, 2, 2)), [0, 1, 2, 3, 4], 'x')
    assert len(dataset.subset(3)) == 3
    assert len(dataset.subset(50)) == 5
    assert dataset.subset([4, 0]).labels.tolist() == [4, 0]
    assert dataset.targets.shape == (5, 10)
    np.testing.assert_array_equal(np.argmax(dataset.targets, axis=1),
                                  dataset.labels)


def test_one_hot():
    np.testing.assert_array_equal(one_hot(0), [1] + [0] * 9)
    np.testing.assert_array_equal(one_hot(9), [0] * 9 + [1])
    for c in range(10):
        v = one_hot(c)
        assert v.sum() == 1.
        assert np.argmax(v) == c
    assert one_hot([1, 2], 3).tolist() == [[0, 1, 0], [0, 0, 1]]
    for bad in (-1, 10):
        with pytest.raises(DataError):
            one_hot(bad)


def test_augment_config_validation():
    with pytest.raises(DataError):
        AugmentConfig(rotation_deg=-1)
    with pytest.raises(DataError):
        AugmentConfig(translate_px=-2)


def test_augment_disabled_returns_input():
    image = np.random.default_rng(0).uniform(size=(1, 8, 8))
    cfg = AugmentConfig(enabled=False)
    assert augment(image, cfg, np.random.default_rng(1)) is image


def test_augment_zero_ranges_keep_image():
    image = np.random.default_rng(2).uniform(size=(1, 8, 8))
    cfg = AugmentConfig(rotation_deg=0, translate_px=0)
    np.testing.assert_array_equal(
            augment(image, cfg, np.random.default_rng(3)), image)


def test_augment_zero_image_stays_zero():
    cfg = AugmentConfig(rotation_deg=30, translate_px=3)
    rng = np.random.default_rng(4)
    for _ in range(10):
        np.testing.assert_array_equal(
                augment(np.zeros((1, 10, 10)), cfg, rng), 0.)


def test_augment_stays_in_range():
    rng = np.random.default_rng(5)
    cfg = AugmentConfig(rotation_deg=45, translate_px=4)
    for _ in range(20):
        out = augment(rng.uniform(size=(1, 12, 12)), cfg, rng)
        assert out.shape == (1, 12, 12)
        assert np.all(np.isfinite(out))
        assert out.min() >= 0. and out.max() <= 1.


def test_augment_translation_only():
    image = np.zeros((1, 5, 5))
    image[0, 2, 2] = 1.
    cfg = AugmentConfig(rotation_deg=0, translate_px=1)
    out = augment(image, cfg, np.random.default_rng(6))
    # a single pixel stays a single pixel within one pixel of the center
    assert out.sum() == 1.
    r, c = np.argwhere(out[0] == 1.)[0]
    assert abs(r - 2) <= 1 and abs(c - 2) <= 1


def test_augment_batch_seeded():
    images = np.random.default_rng(7).uniform(size=(4, 1, 6, 6))
    cfg = AugmentConfig()
    a = augment_batch(images, cfg, np.random.default_rng([0, 1, 2]))
    b = augment_batch(images, cfg, np.random.default_rng([0, 1, 2]))
    np.testing.assert_array_equal(a, b)
    assert a.shape == images.shape


def test_minibatches():
    dataset = ImageDataset(np.zeros((10, 1, 2, 2)), np.zeros(10, dtype=int))
    batches = minibatches(dataset, 3, seed=[0, 1])
    assert [len(b) for b in batches] == [3, 3, 3, 1]
    assert sorted(np.concatenate(batches).tolist()) == list(range(10))
    again = minibatches(dataset, 3, seed=[0, 1])
    for a, b in zip(batches, again):
        np.testing.assert_array_equal(a, b)
    whole = minibatches(dataset, 10, seed=5)
    assert len(whole) == 1
    assert Counter(whole[0].tolist()) == Counter(range(10))
    with pytest.raises(DataError):
        minibatches(dataset, 0, seed=0)
