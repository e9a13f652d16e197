"""CKPT1 checkpoint format.

Line-oriented text header, then per layer a descriptor line followed by its
little-endian float32 parameter blob, and a trailing 64-bit FNV-1a checksum
of all blob bytes.
"""

import numpy as np

from ..errors import CorruptCheckpointError
from ..rng import fnv1a64
from .layers import (Conv2d, ConvTranspose2d, FlattenMean, InstanceNorm,
                     LeakyReLU, ReLU, ResidualBlock, Tanh)
from .network import Network

_MAGIC = b"CKPT1\n"


def _build_layer(kind, hyper):
    if kind == "conv2d":
        return Conv2d(int(hyper["cin"]), int(hyper["cout"]), int(hyper["k"]),
                      int(hyper["stride"]), int(hyper["pad"]))
    if kind == "conv_transpose2d":
        return ConvTranspose2d(int(hyper["cin"]), int(hyper["cout"]), int(hyper["k"]),
                               int(hyper["stride"]), int(hyper["pad"]),
                               int(hyper["output_padding"]))
    if kind == "instance_norm":
        return InstanceNorm(int(hyper["channels"]))
    if kind == "relu":
        return ReLU()
    if kind == "leaky_relu":
        return LeakyReLU(float(hyper["slope"]))
    if kind == "tanh":
        return Tanh()
    if kind == "residual_block":
        return ResidualBlock(int(hyper["channels"]), int(hyper["k"]))
    if kind == "flatten_mean":
        return FlattenMean()
    raise CorruptCheckpointError(f"unknown layer kind {kind!r}")


def save_checkpoint(net: Network, path):
    blobs = []
    chunks = [_MAGIC]
    chunks.append(f"layers {len(net.layers)} global_residual "
                  f"{1 if net.global_residual else 0}\n".encode())
    for layer in net.layers:
        params = [p for _, p, _ in layer.param_items()]
        hyper = " ".join(f"{k}={v!r}" for k, v in layer.hyper().items())
        lens = " ".join(str(p.size) for p in params)
        chunks.append(f"{layer.kind} {hyper}| lens {lens}\n".encode())
        blob = b"".join(np.asarray(p, dtype="<f4").tobytes() for p in params)
        chunks.append(blob)
        blobs.append(blob)
    checksum = fnv1a64(b"".join(blobs))
    chunks.append(checksum.to_bytes(8, "little"))
    with open(path, "wb") as f:
        f.write(b"".join(chunks))


def _read_line(data, pos):
    end = data.index(b"\n", pos)
    return data[pos:end].decode(), end + 1


def load_checkpoint(path) -> Network:
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(_MAGIC):
        raise CorruptCheckpointError(f"{path}: missing CKPT1 magic")
    pos = len(_MAGIC)
    header, pos = _read_line(data, pos)
    fields = header.split()
    if len(fields) != 4 or fields[0] != "layers" or fields[2] != "global_residual":
        raise CorruptCheckpointError(f"{path}: malformed layer-count line")
    n_layers = int(fields[1])
    global_residual = fields[3] == "1"

    layers = []
    blob_bytes = []
    for _ in range(n_layers):
        line, pos = _read_line(data, pos)
        desc, _, lens_part = line.partition("| lens")
        parts = desc.split()
        kind = parts[0]
        hyper = {}
        for item in parts[1:]:
            key, _, val = item.partition("=")
            hyper[key] = val
        lens = [int(v) for v in lens_part.split()]
        layer = _build_layer(kind, hyper)
        params = [p for _, p, _ in layer.param_items()]
        if [p.size for p in params] != lens:
            raise CorruptCheckpointError(f"{path}: parameter lengths do not match {kind}")
        nbytes = 4 * sum(lens)
        blob = data[pos:pos + nbytes]
        if len(blob) != nbytes:
            raise CorruptCheckpointError(f"{path}: truncated parameter blob")
        pos += nbytes
        blob_bytes.append(blob)
        offset = 0
        for p in params:
            vals = np.frombuffer(blob, dtype="<f4", count=p.size, offset=offset)
            p[...] = vals.astype(np.float64).reshape(p.shape)
            offset += 4 * p.size
        layers.append(layer)

    if len(data) - pos != 8:
        raise CorruptCheckpointError(f"{path}: missing checksum")
    stored = int.from_bytes(data[pos:pos + 8], "little")
    if stored != fnv1a64(b"".join(blob_bytes)):
        raise CorruptCheckpointError(f"{path}: checksum mismatch")
    return Network(layers, global_residual=global_residual)
