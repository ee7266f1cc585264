#! /usr/bin/env python
# -*- coding: utf-8 -*-
# Create Date    :  2024-03-02 10:14
# Git Repo       :  https://github.com/Jerry-Ma
# Email Address  :  jerry.ma.nk@gmail.com
from __future__ import (absolute_import, division, print_function,
                        unicode_literals)

import os
import csv
import errno
import logging
from collections import OrderedDict

import numpy as np
import yaml
from tabulate import tabulate


__all__ = [
        'DBPCError', 'ShapeError', 'InvalidKernelError', 'DataError',
        'FormatError', 'CheckpointError', 'LayerIndexError',
        'log_and_raise', 'mkdirs', 'expanded_abspath',
        'tabulate_listofdicts', 'write_csv', 'write_pgm', 'read_pgm',
        'LoggingHandler', 'yaml']


class DBPCError(Exception):
    """Base class of the errors raised by :mod:`dbpc`."""
    pass


class ShapeError(DBPCError, ValueError):
    """Raised when operands have incompatible shapes."""
    pass


class InvalidKernelError(ShapeError):
    """Raised for kernels that cannot be same-padded (even size)."""
    pass


class DataError(DBPCError, ValueError):
    """Raised for invalid samples, labels or datasets."""
    pass


class FormatError(DataError):
    """Raised when a binary file does not follow its format."""
    pass


class CheckpointError(DBPCError):
    """Raised when a checkpoint cannot be read or does not match."""
    pass


class LayerIndexError(DBPCError, IndexError):
    """Raised when a layer or interface index is out of range."""
    pass


def log_and_raise(logger_func, msg, exc):
    """Log message `msg` to `logger_func` and raise `exc` with the same
    message."""
    logger_func(msg)
    raise exc(msg)


def expanded_abspath(p):
    """Return absolute path with user ``~`` expanded for path `p`."""
    return os.path.abspath(os.path.expanduser(p))


def mkdirs(d):
    """Create directory named `d`"""
    try:
        os.makedirs(d)
    except OSError as exc:  # Guard against race condition
        if exc.errno != errno.EEXIST:
            raise
    return d


def tabulate_listofdicts(lod, keymap=None, fill=None, **kwargs):
    """Return a table summarizes a list of dicts."""
    if keymap is None:
        return tabulate(lod, **kwargs)
    else:
        # create a list of list from key map
        try:
            hs, fs = zip(*keymap)
        except TypeError:
            hs, fs = zip(*keymap.items())
        lol = [[f(d) if callable(f) else d.get(f, fill)
                for f in fs] for d in lod]
        kwargs.pop('headers', None)
        return tabulate(lol, headers=hs, **kwargs)


def format_float(v):
    """Locale independent text form of a float used in CSV outputs."""
    if np.isposinf(v):
        return "inf"
    if np.isneginf(v):
        return "-inf"
    return "{:.10g}".format(float(v))


def write_csv(filename, header, rows):
    """Write `rows` under `header` to `filename`, replacing any
    existing file.

    Floats are written with :func:`format_float` so that identical
    values give identical bytes.
    """
    with open(filename, 'w', newline='') as fo:
        writer = csv.writer(fo, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([
                format_float(v) if isinstance(v, (float, np.floating))
                else v for v in row])
    return filename


def write_pgm(filename, image, max_intensity=1.0):
    """Write a 2-d `image` to `filename` as binary PGM (P5).

    Intensities are clipped to ``[0, max_intensity]`` and scaled to
    ``0..255``. Images of shape ``(1, H, W)`` are accepted.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 3 and image.shape[0] == 1:
        image = image[0]
    if image.ndim != 2:
        raise ShapeError(
                "PGM needs a single channel image, got shape {}".format(
                    image.shape))
    scaled = np.clip(image, 0., max_intensity) / max_intensity * 255.
    data = np.rint(scaled).astype(np.uint8)
    h, w = data.shape
    with open(filename, 'wb') as fo:
        fo.write("P5 {} {} 255\n".format(w, h).encode('ascii'))
        fo.write(data.tobytes())
    return filename


def read_pgm(filename, max_intensity=1.0):
    """Read a binary PGM (P5) file into a ``(1, H, W)`` float image
    scaled to ``[0, max_intensity]``."""
    with open(filename, 'rb') as fo:
        content = fo.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        # skip whitespace and comments between header tokens
        while pos < len(content) and content[pos:pos + 1].isspace():
            pos += 1
        if content[pos:pos + 1] == b'#':
            while pos < len(content) and content[pos:pos + 1] != b'\n':
                pos += 1
            continue
        start = pos
        while pos < len(content) and not content[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(
                    "truncated PGM header in {} at offset {}".format(
                        filename, start))
        tokens.append(content[start:pos])
    pos += 1  # single whitespace before the raster
    if tokens[0] != b'P5':
        raise FormatError("{} is not a binary PGM (offset 0)".format(
            filename))
    w, h, maxval = (int(t) for t in tokens[1:])
    if maxval > 255:
        raise FormatError("16-bit PGM not supported in {}".format(filename))
    raster = content[pos:pos + w * h]
    if len(raster) != w * h:
        raise FormatError(
                "truncated PGM raster in {} at offset {}".format(
                    filename, pos + len(raster)))
    data = np.frombuffer(raster, dtype=np.uint8).reshape(1, h, w)
    return data.astype(np.float64) / maxval * max_intensity


class LoggingHandler(logging.StreamHandler):
    """Customize logging handler to cleanup some noises."""

    def emit(self, record):
        if record.name == "train.batch":
            if logging.getLogger().level > logging.DEBUG:
                return
            record.levelno = logging.DEBUG
            record.levelname = logging.getLevelName(logging.DEBUG)
        return super().emit(record)


def _represent_odict(dump, tag, mapping, flow_style=None):
    """Like :meth:`BaseRepresenter.represent_mapping`, but
    does not issue the :meth:`sort`.
    """
    value = []
    node = yaml.MappingNode(tag, value, flow_style=flow_style)
    if dump.alias_key is not None:
        dump.represented_objects[dump.alias_key] = node
    best_style = True
    if hasattr(mapping, 'items'):
        mapping = mapping.items()
    for item_key, item_value in mapping:
        node_key = dump.represent_data(item_key)
        node_value = dump.represent_data(item_value)
        if not (isinstance(node_key, yaml.ScalarNode) and not node_key.style):
            best_style = False
        if not (isinstance(node_value, yaml.ScalarNode) and
                not node_value.style):
            best_style = False
        value.append((node_key, node_value))
    if flow_style is None:
        if dump.default_flow_style is not None:
            node.flow_style = dump.default_flow_style
        else:
            node.flow_style = best_style
    return node


yaml.SafeDumper.add_representer(
        OrderedDict,
        lambda dumper, value: _represent_odict(
            dumper, u'tag:yaml.org,2002:map', value))
"""
Patch :mod:`pyyaml` to allow using with :obj:`OrderedDict`

See: https://stackoverflow.com/a/16782282
"""
