"""Python bindings for the dyga anchoring toolkit.

Config arguments take the same sections as the CLI's JSON config file
(``dyga``, ``em``, ``metrics``, ``data``, ``mask``); unknown keys raise
:class:`Error` with ``kind == "ConfigError"``.
"""

import json

import numpy as np

from . import _dyga
from ._dyga import AnchorModel, Error, __version__

__all__ = [
    "AnchorModel",
    "Error",
    "__version__",
    "align",
    "align_feature",
    "decode_tensor",
    "encode_tensor",
    "evaluate",
    "log_gaussian_pdf",
    "make_bundle",
    "run_cli",
    "select_anchors",
    "skip_dropout",
]


def _config(config):
    return json.dumps(config) if config else ""


def select_anchors(data, config=None, seed=0, stream=0):
    """Fit an anchor model to an (N, D) array."""
    return _dyga.select_anchors(np.asarray(data, dtype=np.float64), _config(config), seed, stream)


def align(features, model, config=None, seed=0, stream=0):
    """Move each row toward its Gumbel-selected anchor.

    Returns ``(aligned, delta, anchor_index)``.
    """
    aligned, delta, anchor = _dyga.align(np.asarray(features, dtype=np.float64), model,
                                         _config(config), seed, stream)
    return aligned, delta, np.asarray(anchor)


def align_feature(c, anchor, lam=0.1, ratio_epsilon=1e-8):
    """Single-feature update; returns ``(value, delta)``."""
    return _dyga.align_feature(np.asarray(c, dtype=np.float64), np.asarray(anchor, dtype=np.float64),
                               lam, ratio_epsilon)


def log_gaussian_pdf(x, mean, basis, eigvals, noise):
    return _dyga.log_gaussian_pdf(np.asarray(x, dtype=np.float64), np.asarray(mean, dtype=np.float64),
                                  np.asarray(basis, dtype=np.float64).reshape(len(mean), -1),
                                  np.asarray(eigvals, dtype=np.float64), noise)


def skip_dropout(tensor, keep_prob=0.8, granularity="channel", rescale=False, seed=0):
    """Bernoulli mask over a (C, H, W) array; returns ``(masked, keep)``."""
    tensor = np.asarray(tensor, dtype=np.float64)
    if tensor.ndim != 3:
        raise ValueError("tensor must have shape (C, H, W)")
    config = {"mask": {"keep_prob": keep_prob, "granularity": granularity, "rescale": rescale}}
    values, keep = _dyga.skip_dropout(tensor.ravel().tolist(), *tensor.shape, _config(config), seed)
    return np.asarray(values).reshape(tensor.shape), np.asarray(keep, dtype=bool)


def make_bundle(seed=0, **data):
    """Synthetic bundle. Keyword arguments are ``data`` config keys.

    Returns a dict with ``features`` (N, U, D), ``factors`` (N, F),
    ``cardinalities`` and ``train_size``.
    """
    features, factors, cards, train = _dyga.make_bundle(_config({"seed": seed, "data": data}))
    return {
        "features": np.stack(features, axis=1),
        "factors": np.asarray(factors),
        "cardinalities": list(cards),
        "train_size": train,
    }


def evaluate(codes, factors, cardinalities=None, config=None, seed=0):
    """Disentanglement scores of an (N, U) code matrix against (N, F) factors."""
    factors = np.asarray(factors, dtype=np.int32)
    if cardinalities is None:
        cardinalities = (factors.max(axis=0) + 1).tolist()
    report = _dyga.evaluate(np.asarray(codes, dtype=np.float64), factors, list(cardinalities),
                            _config(config), seed)
    return json.loads(report)


def encode_tensor(array):
    """Serialize an array to the ``.dyga`` tensor format (float32 payload)."""
    array = np.asarray(array, dtype=np.float32)
    return _dyga.encode_tensor(list(array.shape), array.ravel().tolist())


def decode_tensor(data):
    dims, values = _dyga.decode_tensor(bytes(data))
    return np.asarray(values, dtype=np.float32).reshape(dims)


def run_cli(*args):
    """Run a ``dyga`` command in-process; returns ``(exit_code, stdout, log)``."""
    return _dyga.run_cli([str(a) for a in args])
