"""Policy checkpoints.

Layout, all little-endian: the magic ``RLTQ``, uint32 format version, uint32
layer count L, L uint32 layer widths, then each weight matrix (row-major,
fan_in x fan_out) followed by its bias vector, as float64.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from fap_planner.learning.qnetwork import QNetwork

logger = logging.getLogger(__name__)

MAGIC = b"RLTQ"
FORMAT_VERSION = 1
_UINT = np.dtype("<u4")
_FLOAT = np.dtype("<f8")


def encode_policy(net: QNetwork) -> bytes:
    widths = np.asarray(net.layer_sizes, dtype=_UINT)
    header = MAGIC + np.array([FORMAT_VERSION, widths.size], dtype=_UINT).tobytes() + widths.tobytes()
    return header + net.flat_parameters().astype(_FLOAT).tobytes()


def decode_policy(data: bytes) -> QNetwork:
    if data[:4] != MAGIC:
        msg = "not a policy checkpoint: bad magic bytes"
        raise ValueError(msg)
    offset = 4
    if len(data) < offset + 2 * _UINT.itemsize:
        msg = "truncated checkpoint header"
        raise ValueError(msg)
    version, n_layers = (int(v) for v in np.frombuffer(data, dtype=_UINT, count=2, offset=offset))
    offset += 2 * _UINT.itemsize
    if version != FORMAT_VERSION:
        msg = f"unsupported checkpoint version {version}"
        raise ValueError(msg)
    if n_layers < 2 or len(data) < offset + n_layers * _UINT.itemsize:
        msg = f"checkpoint declares {n_layers} layers but the header is too short"
        raise ValueError(msg)
    widths = [int(w) for w in np.frombuffer(data, dtype=_UINT, count=n_layers, offset=offset)]
    offset += n_layers * _UINT.itemsize

    template = [
        shape
        for fan_in, fan_out in zip(widths, widths[1:], strict=False)
        for shape in ((fan_in, fan_out), (fan_out,))
    ]
    expected = sum(int(np.prod(shape)) for shape in template)
    if len(data) - offset != expected * _FLOAT.itemsize:
        msg = f"checkpoint body holds {len(data) - offset} bytes, expected {expected * _FLOAT.itemsize}"
        raise ValueError(msg)
    flat = np.frombuffer(data, dtype=_FLOAT, offset=offset).astype(np.float64)
    if not np.all(np.isfinite(flat)):
        msg = "checkpoint holds non-finite parameters"
        raise ValueError(msg)

    parameters = []
    start = 0
    for shape in template:
        size = int(np.prod(shape))
        parameters.append(flat[start : start + size].reshape(shape).copy())
        start += size
    return QNetwork.from_parameters(parameters)


def save_policy(path: str | Path, net: QNetwork) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(encode_policy(net))
    logger.info("Wrote policy %s to %s", "x".join(map(str, net.layer_sizes)), target)
    return target


def load_policy(path: str | Path) -> QNetwork:
    return decode_policy(Path(path).read_bytes())
