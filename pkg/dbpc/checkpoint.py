#! /usr/bin/env python
# -*- coding: utf-8 -*-
# Create Date    :  2024-03-04 09:20
# Git Repo       :  https://github.com/Jerry-Ma
# Email Address  :  jerry.ma.nk@gmail.com
"""Reading and writing network checkpoints.

The checkpoint is a flat little-endian binary file::

    [offset] [type]        [description]
    0        4 bytes       magic ``DBPC``
    4        uint32        format version (1)
    8        uint32        number of layers L
    12       3 x uint32    input shape C, H, W
    24       L x 3 uint32  layer table: kind code (0 fc, 1 conv,
                           2 flatten), size, kernel size
    ...      float64       weight blocks of interfaces 1..L-1 in
                           C order, shapes implied by the layer table
"""
from __future__ import (absolute_import, division, print_function,
                        unicode_literals)

import os
import struct
import logging

import numpy as np

from .network import NetworkParams, LayerSpec, LAYER_KINDS
from .utils import CheckpointError, ShapeError, mkdirs


__all__ = ['save_checkpoint', 'load_checkpoint', 'MAGIC', 'VERSION']

MAGIC = b'DBPC'
VERSION = 1


def save_checkpoint(params, filename):
    """Write `params` to `filename`."""
    logger = logging.getLogger("checkpoint")
    header = [MAGIC, struct.pack(
        '<II3I', VERSION, params.n_layers, *params.input_shape)]
    for spec in params.specs:
        header.append(struct.pack(
            '<3I', LAYER_KINDS.index(spec.kind), spec.size, spec.kernel))
    d = os.path.dirname(os.path.abspath(filename))
    if not os.path.exists(d):
        mkdirs(d)
    with open(filename, 'wb') as fo:
        fo.write(b''.join(header))
        for w in params.weights:
            fo.write(np.ascontiguousarray(w, dtype='<f8').tobytes())
    logger.debug("save checkpoint {} for {}".format(filename, params))
    return filename


def _unpack(fmt, content, offset, filename):
    size = struct.calcsize(fmt)
    if offset + size > len(content):
        raise CheckpointError(
                "truncated checkpoint {} at offset {}".format(
                    filename, offset))
    return struct.unpack_from(fmt, content, offset), offset + size


def load_checkpoint(filename):
    """Read a checkpoint written by :func:`save_checkpoint` and return
    the :obj:`NetworkParams` it describes."""
    logger = logging.getLogger("checkpoint")
    try:
        with open(filename, 'rb') as fo:
            content = fo.read()
    except OSError as e:
        raise CheckpointError("unable to read checkpoint {}: {}".format(
            filename, e))
    if content[:4] != MAGIC:
        raise CheckpointError("{} is not a DBPC checkpoint (offset 0)".format(
            filename))
    (version, n_layers, c, h, w), offset = _unpack(
            '<II3I', content, 4, filename)
    if version != VERSION:
        raise CheckpointError(
                "unsupported checkpoint version {} in {}".format(
                    version, filename))
    table = []
    for _ in range(n_layers):
        (kind, size, kernel), offset = _unpack('<3I', content, offset,
                                               filename)
        if kind >= len(LAYER_KINDS):
            raise CheckpointError(
                    "unknown layer kind code {} in {} at offset {}".format(
                        kind, filename, offset - 12))
        table.append((LAYER_KINDS[kind], size, kernel))
    try:
        specs = [LayerSpec(*entry) for entry in table]
        params = NetworkParams(specs, (c, h, w))
    except ShapeError as e:
        raise CheckpointError("invalid architecture in {}: {}".format(
            filename, e))
    weights = []
    for interface in params.interfaces:
        n = int(np.prod(interface.weight_shape))
        if offset + 8 * n > len(content):
            raise CheckpointError(
                    "truncated checkpoint {} at offset {}".format(
                        filename, offset))
        block = np.frombuffer(content, dtype='<f8', count=n, offset=offset)
        weights.append(block.astype(np.float64).reshape(
            interface.weight_shape))
        offset += 8 * n
    if offset != len(content):
        raise CheckpointError(
                "{} trailing bytes in checkpoint {} at offset {}".format(
                    len(content) - offset, filename, offset))
    logger.debug("load checkpoint {} for {}".format(filename, params))
    return params.with_weights(weights)
