#! /usr/bin/env python
# -*- coding: utf-8 -*-
# Create Date    :  2024-03-05 13:08
# Git Repo       :  https://github.com/Jerry-Ma
# Email Address  :  jerry.ma.nk@gmail.com
from __future__ import (absolute_import, division, print_function,
                        unicode_literals)

import gzip
import logging

import numpy as np
from scipy import ndimage

from .network import N_CLASSES
from .utils import DataError, FormatError


__all__ = [
        'ImageDataset', 'AugmentConfig', 'load_idx', 'one_hot', 'augment',
        'augment_batch', 'minibatches', 'IMAGE_MAGIC', 'LABEL_MAGIC']


IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


class ImageDataset(object):
    """Images with integer labels.

    :param images: array ``(N, C, H, W)`` of intensities in ``[0, 1]``.
    :param labels: ``N`` integer labels in ``[0, n_classes)``.
    :param name: identifier of the dataset.
    """

    def __init__(self, images, labels, name='', n_classes=N_CLASSES):
        images = np.asarray(images, dtype=np.float64)
        labels = np.asarray(labels)
        if images.ndim != 4:
            raise DataError("images need shape (N, C, H, W), got {}".format(
                images.shape))
        if labels.ndim != 1 or len(labels) != len(images):
            raise DataError("{} images but labels of shape {}".format(
                len(images), labels.shape))
        if not np.issubdtype(labels.dtype, np.integer):
            raise DataError("labels have to be integers")
        if np.any(labels < 0) or np.any(labels >= n_classes):
            raise DataError("labels out of range [0, {})".format(n_classes))
        if not np.all(np.isfinite(images)) or \
                np.any(images < 0.) or np.any(images > 1.):
            raise DataError("intensities have to be finite and in [0, 1]")
        self.images = images
        self.labels = labels.astype(np.int64)
        self.name = name
        self.n_classes = n_classes

    def __len__(self):
        return len(self.labels)

    @property
    def image_shape(self):
        return self.images.shape[1:]

    @property
    def targets(self):
        """One-hot targets of all samples."""
        return one_hot(self.labels, self.n_classes)

    def subset(self, indices):
        """Return the dataset restricted to `indices` (or to the first
        `indices` samples if it is an integer)."""
        if isinstance(indices, (int, np.integer)):
            indices = np.arange(min(int(indices), len(self)))
        return ImageDataset(
                self.images[indices], self.labels[indices], self.name,
                self.n_classes)

    def __repr__(self):
        return "ImageDataset({}, N={}, shape={})".format(
                self.name, len(self), self.image_shape)


class AugmentConfig(object):
    """Random rotation and translation applied to training images.

    :param rotation_deg: maximum absolute rotation angle in degrees.
    :param translate_px: maximum absolute shift in pixels along each axis.
    :param enabled: augmentation is skipped entirely if ``False``.
    """

    def __init__(self, rotation_deg=10., translate_px=2, enabled=True):
        if rotation_deg < 0 or translate_px < 0:
            raise DataError(
                    "augmentation ranges have to be non-negative, got"
                    " rotation_deg={} translate_px={}".format(
                        rotation_deg, translate_px))
        self.rotation_deg = float(rotation_deg)
        self.translate_px = int(translate_px)
        self.enabled = bool(enabled)

    def __repr__(self):
        return "AugmentConfig(rotation_deg={}, translate_px={}," \
               " enabled={})".format(
                    self.rotation_deg, self.translate_px, self.enabled)


def _read(filename):
    with open(filename, 'rb') as fo:
        content = fo.read()
    if content[:2] == b'\x1f\x8b':
        content = gzip.decompress(content)
    return content


def _header(content, n, filename, magic):
    if len(content) < 4 * n:
        raise FormatError("truncated header in {} at offset {}".format(
            filename, len(content)))
    header = np.frombuffer(content, dtype='>u4', count=n)
    if header[0] != magic:
        raise FormatError(
                "bad magic number 0x{:08x} in {} at offset 0,"
                " expect 0x{:08x}".format(int(header[0]), filename, magic))
    return [int(h) for h in header[1:]]


def load_idx(images_path, labels_path, name=None):
    """Load images and labels in IDX format (optionally gzipped).

    Pixel bytes are scaled by ``1 / 255``.
    """
    logger = logging.getLogger("data")
    logger.info("read {} {}".format(images_path, labels_path))
    content = _read(images_path)
    n, rows, cols = _header(content, 4, images_path, IMAGE_MAGIC)
    expected = 16 + n * rows * cols
    if len(content) < expected:
        raise FormatError(
                "truncated image data in {} at offset {}, expect {} bytes"
                .format(images_path, len(content), expected))
    images = np.frombuffer(
            content, dtype=np.uint8, count=n * rows * cols, offset=16)
    images = images.reshape(n, 1, rows, cols).astype(np.float64) / 255.
    content = _read(labels_path)
    n_labels, = _header(content, 2, labels_path, LABEL_MAGIC)
    if n_labels != n:
        raise FormatError(
                "count mismatch: {} images in {} but {} labels in {}"
                " (offset 4)".format(n, images_path, n_labels, labels_path))
    if len(content) < 8 + n:
        raise FormatError(
                "truncated label data in {} at offset {}".format(
                    labels_path, len(content)))
    labels = np.frombuffer(content, dtype=np.uint8, count=n, offset=8)
    bad = np.flatnonzero(labels >= N_CLASSES)
    if bad.size:
        raise FormatError("label {} out of range in {} at offset {}".format(
            int(labels[bad[0]]), labels_path, 8 + int(bad[0])))
    if name is None:
        name = images_path
    dataset = ImageDataset(images, labels.astype(np.int64), name)
    logger.info("{} images of {}x{} loaded".format(n, rows, cols))
    return dataset


def one_hot(labels, n_classes=N_CLASSES):
    """Return the one-hot vector of an integer label, or rows of them for
    an array of labels."""
    labels = np.asarray(labels)
    scalar = labels.ndim == 0
    labels = np.atleast_1d(labels)
    if (not np.issubdtype(labels.dtype, np.integer) or
            np.any(labels < 0) or np.any(labels >= n_classes)):
        raise DataError("label out of range [0, {}): {}".format(
            n_classes, labels[:10].tolist()))
    out = np.zeros((labels.size, n_classes))
    out[np.arange(labels.size), labels] = 1.
    return out[0] if scalar else out


def augment(image, cfg, rng):
    """Rotate `image` ``(C, H, W)`` by a random angle about its center
    with bilinear resampling, then shift it by random whole pixels.

    Pixels moved in from outside the frame are 0 and the result is
    clipped to ``[0, 1]``.
    """
    if not cfg.enabled:
        return image
    angle = rng.uniform(-cfg.rotation_deg, cfg.rotation_deg)
    shift = rng.integers(-cfg.translate_px, cfg.translate_px, size=2,
                         endpoint=True)
    out = np.asarray(image, dtype=np.float64)
    if angle != 0.:
        out = ndimage.rotate(
                out, angle, axes=(out.ndim - 2, out.ndim - 1),
                reshape=False, order=1, mode='constant', cval=0.)
    if np.any(shift):
        out = ndimage.shift(
                out, (0, ) * (out.ndim - 2) + tuple(shift), order=0,
                mode='constant', cval=0.)
    return np.clip(out, 0., 1.)


def augment_batch(images, cfg, rng):
    """Apply :func:`augment` to every image of a batch in order."""
    if not cfg.enabled:
        return images
    return np.stack([augment(img, cfg, rng) for img in images])


def minibatches(dataset, batch_size, seed):
    """Split a seeded random permutation of the sample indices into
    batches of `batch_size`, keeping the final partial batch.

    :param seed: anything accepted by :func:`numpy.random.default_rng`,
        e.g. ``[seed, epoch]``.
    :return: list of index arrays.
    """
    if batch_size < 1:
        raise DataError("batch size has to be at least 1, got {}".format(
            batch_size))
    n = len(dataset)
    order = np.random.default_rng(seed).permutation(n)
    return [order[i:i + batch_size] for i in range(0, n, batch_size)]
