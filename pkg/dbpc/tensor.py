#! /usr/bin/env python
# -*- coding: utf-8 -*-
# Create Date    :  2024-03-02 11:02
# Git Repo       :  https://github.com/Jerry-Ma
# Email Address  :  jerry.ma.nk@gmail.com
"""Dense numerical core shared by the feedforward and feedback paths.

Vectors, matrices and channels-first feature maps are plain
:obj:`numpy.ndarray` objects of ``float64``. Every operator accepts an
optional leading batch axis, and samples in a batch never interact, so
a batch of ``B`` samples agrees with ``B`` separate calls up to
rounding.
"""
from __future__ import (absolute_import, division, print_function,
                        unicode_literals)

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .utils import ShapeError, InvalidKernelError


__all__ = [
        'ConvKernel', 'as_tensor', 'matmul', 'matmul_transpose',
        'conv2d_same', 'conv2d_adjoint_same', 'conv2d_kernel_grad',
        'relu', 'relu_prime', 'same_padding', 'dense_conv_matrix']


def as_tensor(x):
    """Return `x` as a ``float64`` array (no copy if already one)."""
    return np.asarray(x, dtype=np.float64)


def same_padding(k):
    """Zero padding ``P = (K - 1) / 2`` that keeps the spatial shape of a
    stride-1 convolution with kernel size `k`."""
    if k < 1 or k % 2 == 0:
        raise InvalidKernelError(
                "kernel size has to be a positive odd number, got {}".format(
                    k))
    return (k - 1) // 2


class ConvKernel(object):
    """Kernel of a stride-1, same-padded 2-d convolution.

    :param weights: array of shape ``(out_channels, in_channels, K, K)``
        with odd ``K``.
    """

    def __init__(self, weights):
        weights = as_tensor(weights)
        if weights.ndim != 4 or weights.shape[2] != weights.shape[3]:
            raise InvalidKernelError(
                    "kernel weights need shape (out, in, K, K), got {}".format(
                        weights.shape))
        same_padding(weights.shape[2])
        self.weights = weights

    @property
    def out_channels(self):
        return self.weights.shape[0]

    @property
    def in_channels(self):
        return self.weights.shape[1]

    @property
    def size(self):
        """Kernel height and width ``K``."""
        return self.weights.shape[2]

    @property
    def padding(self):
        return same_padding(self.size)

    def __repr__(self):
        return "ConvKernel(out={}, in={}, K={})".format(
                self.out_channels, self.in_channels, self.size)


def _batched(x, ndim):
    """Add a leading batch axis to a single sample of rank `ndim`."""
    if x.ndim == ndim:
        return x[np.newaxis], True
    if x.ndim == ndim + 1:
        return x, False
    raise ShapeError("expect a tensor of rank {} or {}, got shape {}".format(
        ndim, ndim + 1, x.shape))


def matmul(w, x):
    """Return ``W x`` for a matrix `w` of shape ``(n_out, n_in)`` and a
    vector (or batch of vectors) `x`."""
    w, x = as_tensor(w), as_tensor(x)
    if w.ndim != 2 or x.ndim not in (1, 2) or x.shape[-1] != w.shape[1]:
        raise ShapeError("cannot multiply matrix of shape {} with {}".format(
            w.shape, x.shape))
    return x @ w.T


def matmul_transpose(w, v):
    """Return ``W^T v``, the adjoint of :func:`matmul` for the same `w`."""
    w, v = as_tensor(w), as_tensor(v)
    if w.ndim != 2 or v.ndim not in (1, 2) or v.shape[-1] != w.shape[0]:
        raise ShapeError(
                "cannot multiply transpose of matrix of shape {} with"
                " {}".format(w.shape, v.shape))
    return v @ w


def _patches(x, k):
    """Sliding ``k x k`` windows over zero padded batched maps, shape
    ``(B, C, H, W, k, k)``."""
    p = same_padding(k)
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)), mode='constant')
    return sliding_window_view(xp, (k, k), axis=(2, 3))


def _check_kernel(kernel):
    if not isinstance(kernel, ConvKernel):
        kernel = ConvKernel(kernel)
    return kernel


def conv2d_same(x, kernel):
    """Stride-1 cross-correlation of channels-first maps `x` with zero
    padding ``(K - 1) / 2``, so output and input share the spatial
    shape.

    :param x: ``(C_in, H, W)`` or ``(B, C_in, H, W)``.
    :param kernel: :obj:`ConvKernel` or its weight array.
    :return: ``(C_out, H, W)`` or ``(B, C_out, H, W)``.
    """
    kernel = _check_kernel(kernel)
    xb, single = _batched(as_tensor(x), 3)
    if xb.shape[1] != kernel.in_channels:
        raise ShapeError(
                "input with {} channels does not match {}".format(
                    xb.shape[1], kernel))
    out = np.einsum(
            'bchwuv,ocuv->bohw', _patches(xb, kernel.size), kernel.weights,
            optimize=True)
    return out[0] if single else out


def conv2d_adjoint_same(v, kernel):
    """Exact adjoint of :func:`conv2d_same` under the Frobenius inner
    product.

    With stride 1 and same padding the adjoint is the same-padded
    correlation with the kernel flipped spatially and its channel axes
    swapped.
    """
    kernel = _check_kernel(kernel)
    vb, single = _batched(as_tensor(v), 3)
    if vb.shape[1] != kernel.out_channels:
        raise ShapeError(
                "map with {} channels does not match output of {}".format(
                    vb.shape[1], kernel))
    flipped = kernel.weights[:, :, ::-1, ::-1]
    out = np.einsum(
            'bohwuv,ocuv->bchw', _patches(vb, kernel.size), flipped,
            optimize=True)
    return out[0] if single else out


def conv2d_kernel_grad(x, g, k):
    """Gradient of ``<g, conv2d_same(x, kernel)>`` with respect to the
    kernel weights, summed over the batch.

    Since ``<g, conv(x)> = <conv^*(g), x>``, the same call gives the
    gradient of ``<x, conv2d_adjoint_same(g, kernel)>``.

    :param x: input maps ``(B, C_in, H, W)`` (or unbatched).
    :param g: output-side maps ``(B, C_out, H, W)`` (or unbatched).
    :param k: kernel size.
    :return: ``(C_out, C_in, k, k)``.
    """
    xb, _ = _batched(as_tensor(x), 3)
    gb, _ = _batched(as_tensor(g), 3)
    if xb.shape[0] != gb.shape[0] or xb.shape[2:] != gb.shape[2:]:
        raise ShapeError("input {} and gradient {} do not align".format(
            xb.shape, gb.shape))
    return np.einsum(
            'bohw,bchwuv->ocuv', gb, _patches(xb, k), optimize=True)


def relu(x):
    """Element-wise ``max(0, x)``."""
    return np.maximum(as_tensor(x), 0.)


def relu_prime(x):
    """Derivative of :func:`relu`, taken as 0 at exactly 0."""
    return (as_tensor(x) > 0.).astype(np.float64)


def dense_conv_matrix(kernel, shape):
    """Materialize :func:`conv2d_same` for inputs of `shape`
    ``(C_in, H, W)`` as a dense matrix acting on flattened maps.

    Column ``j`` is the response to the ``j``-th unit input. Only meant
    for small instances.
    """
    kernel = _check_kernel(kernel)
    n = int(np.prod(shape))
    basis = np.eye(n).reshape((n, ) + tuple(shape))
    return conv2d_same(basis, kernel).reshape(n, -1).T
