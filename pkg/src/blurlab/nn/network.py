"""Network container, gradient checking, and the generator/discriminator builders."""

import numpy as np

from .. import rng
from ..errors import DimensionError
from .layers import (Conv2d, ConvTranspose2d, FlattenMean, InstanceNorm,
                     LeakyReLU, ReLU, ResidualBlock, Tanh)


class Network:
    """Ordered layer stack. Single-writer: forward/backward mutate caches.

    With global_residual the output is clamp(input + body(input), -1, 1),
    so a zero-initialized body is the identity map on [-1, 1] inputs.
    """

    def __init__(self, layers, global_residual=False):
        self.layers = list(layers)
        self.global_residual = global_residual
        self._x = None
        self._mask = None

    def forward(self, x):
        self._x = x
        y = x
        for layer in self.layers:
            y = layer.forward(y)
        if self.global_residual:
            if y.shape != x.shape:
                raise DimensionError("global residual requires shape-preserving body")
            raw = x + y
            self._mask = (raw > -1.0) & (raw < 1.0)
            y = np.clip(raw, -1.0, 1.0)
        return y

    def backward(self, gy):
        if self._x is None:
            raise DimensionError("backward called before forward")
        if self.global_residual:
            gy = np.where(self._mask, gy, 0.0)
        g = gy
        for layer in reversed(self.layers):
            g = layer.backward(g)
        if self.global_residual:
            g = g + gy
        return g

    def param_items(self):
        for i, layer in enumerate(self.layers):
            for name, p, g in layer.param_items():
                yield f"layer{i}.{name}", p, g

    def zero_grads(self):
        for layer in self.layers:
            layer.zero_grads()

    def num_params(self):
        return sum(p.size for _, p, _ in self.param_items())


def build_generator(base_channels=64, res_blocks=6, in_channels=3, seed=0,
                    global_residual=True) -> Network:
    """Encoder (3 conv blocks) + residual blocks + decoder (2 transposed
    conv blocks) + output conv with tanh."""
    gen = rng.generator(seed, "generator-init")
    f = base_channels
    c = in_channels
    layers = [
        Conv2d(c, f, 7, 1, 3, gen=gen), InstanceNorm(f), ReLU(),
        Conv2d(f, 2 * f, 3, 2, 1, gen=gen), InstanceNorm(2 * f), ReLU(),
        Conv2d(2 * f, 4 * f, 3, 2, 1, gen=gen), InstanceNorm(4 * f), ReLU(),
    ]
    for _ in range(res_blocks):
        layers.append(ResidualBlock(4 * f, gen=gen))
    layers += [
        ConvTranspose2d(4 * f, 2 * f, 3, 2, 1, 1, gen=gen), InstanceNorm(2 * f), ReLU(),
        ConvTranspose2d(2 * f, f, 3, 2, 1, 1, gen=gen), InstanceNorm(f), ReLU(),
        Conv2d(f, c, 7, 1, 3, gen=gen), Tanh(),
    ]
    return Network(layers, global_residual=global_residual)


def build_discriminator(base_channels=64, in_channels=3, seed=0) -> Network:
    """4 strided conv blocks with leaky ReLU, then a 1-channel head and
    spatial mean -> one score per batch item (no sigmoid link)."""
    gen = rng.generator(seed, "discriminator-init")
    f = base_channels
    c = in_channels
    layers = [
        Conv2d(c, f, 4, 2, 1, gen=gen), LeakyReLU(0.2),
        Conv2d(f, 2 * f, 4, 2, 1, gen=gen), InstanceNorm(2 * f), LeakyReLU(0.2),
        Conv2d(2 * f, 4 * f, 4, 2, 1, gen=gen), InstanceNorm(4 * f), LeakyReLU(0.2),
        Conv2d(4 * f, 8 * f, 4, 2, 1, gen=gen), InstanceNorm(8 * f), LeakyReLU(0.2),
        Conv2d(8 * f, 1, 3, 1, 1, gen=gen), FlattenMean(),
    ]
    return Network(layers)


def grad_check(net: Network, x, loss_fn, eps=1e-4):
    """Max relative error between analytic and central-difference gradients.

    loss_fn maps the network output to (scalar value, gradient wrt output).
    Checks every parameter entry and every input entry.
    """
    value, gy = loss_fn(net.forward(x))
    net.zero_grads()
    gx = net.backward(gy)

    def numeric(arr, idx):
        orig = arr[idx]
        arr[idx] = orig + eps
        up, _ = loss_fn(net.forward(x))
        arr[idx] = orig - eps
        dn, _ = loss_fn(net.forward(x))
        arr[idx] = orig
        return (up - dn) / (2 * eps)

    max_err = 0.0
    for _, p, g in net.param_items():
        for idx in np.ndindex(p.shape):
            num = numeric(p, idx)
            ana = g[idx]
            err = abs(ana - num) / max(abs(ana), abs(num), 1e-8)
            max_err = max(max_err, err)
    for idx in np.ndindex(x.shape):
        num = numeric(x, idx)
        ana = gx[idx]
        err = abs(ana - num) / max(abs(ana), abs(num), 1e-8)
        max_err = max(max_err, err)
    return max_err
