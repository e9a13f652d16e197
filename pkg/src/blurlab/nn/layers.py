"""Differentiable layers with explicit forward/backward passes.

Every layer caches what its backward pass needs during forward. Parameters
and gradient buffers are float64 numpy arrays mutated in place, so
optimizer updates through param_items() stay visible to the layer.
"""

import numpy as np

from .. import backend
from ..errors import DimensionError


class Layer:
    kind = "base"

    def forward(self, x):
        raise NotImplementedError

    def backward(self, gy):
        raise NotImplementedError

    def param_items(self):
        """Yield (name, param_array, grad_array) triples."""
        return iter(())

    def zero_grads(self):
        for _, _, g in self.param_items():
            g[...] = 0.0

    def hyper(self) -> dict:
        return {}


def _init_weight(gen, shape, std=0.02):
    return gen.normal(0.0, std, size=shape)


class Conv2d(Layer):
    kind = "conv2d"

    def __init__(self, cin, cout, k, stride=1, pad=0, gen=None):
        self.cin, self.cout, self.k, self.stride, self.pad = cin, cout, k, stride, pad
        if gen is None:
            self.w = np.zeros((cout, cin, k, k))
        else:
            self.w = _init_weight(gen, (cout, cin, k, k))
        self.b = np.zeros(cout)
        self.gw = np.zeros_like(self.w)
        self.gb = np.zeros_like(self.b)
        self._xp = None

    def forward(self, x):
        p = self.pad
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else np.ascontiguousarray(x)
        self._xp = xp
        y = backend.corr_forward(xp, self.w, self.stride)
        return y + self.b[None, :, None, None]

    def backward(self, gy):
        xp = self._xp
        if xp is None:
            raise DimensionError("backward called before forward")
        self.gb += gy.sum(axis=(0, 2, 3))
        self.gw += backend.corr_backward_weight(xp, gy, self.stride, self.k, self.k)
        gxp = backend.corr_backward_input(gy, self.w, self.stride, xp.shape[2], xp.shape[3])
        p = self.pad
        if p:
            gxp = gxp[:, :, p:-p, p:-p]
        return gxp

    def param_items(self):
        yield "w", self.w, self.gw
        yield "b", self.b, self.gb

    def hyper(self):
        return {"cin": self.cin, "cout": self.cout, "k": self.k,
                "stride": self.stride, "pad": self.pad}


class ConvTranspose2d(Layer):
    """Transposed convolution via zero-stuffing + stride-1 correlation."""

    kind = "conv_transpose2d"

    def __init__(self, cin, cout, k, stride=2, pad=1, output_padding=1, gen=None):
        self.cin, self.cout, self.k = cin, cout, k
        self.stride, self.pad, self.output_padding = stride, pad, output_padding
        if gen is None:
            self.w = np.zeros((cin, cout, k, k))
        else:
            self.w = _init_weight(gen, (cin, cout, k, k))
        self.b = np.zeros(cout)
        self.gw = np.zeros_like(self.w)
        self.gb = np.zeros_like(self.b)
        self._xp = None
        self._in_shape = None

    def _stuff_pad(self, x):
        b, c, h, w = x.shape
        s = self.stride
        hs, ws = (h - 1) * s + 1, (w - 1) * s + 1
        stuffed = np.zeros((b, c, hs, ws))
        stuffed[:, :, ::s, ::s] = x
        lo = self.k - 1 - self.pad
        hi = lo + self.output_padding
        return np.pad(stuffed, ((0, 0), (0, 0), (lo, hi), (lo, hi)))

    def _w_corr(self):
        # (Cin,Cout,k,k) transpose-conv weight as an equivalent correlation
        # filter: swap channel roles and flip spatially.
        return np.ascontiguousarray(self.w.transpose(1, 0, 2, 3)[:, :, ::-1, ::-1])

    def forward(self, x):
        self._in_shape = x.shape
        xp = self._stuff_pad(x)
        self._xp = xp
        y = backend.corr_forward(xp, self._w_corr(), 1)
        return y + self.b[None, :, None, None]

    def backward(self, gy):
        if self._xp is None:
            raise DimensionError("backward called before forward")
        self.gb += gy.sum(axis=(0, 2, 3))
        gw_corr = backend.corr_backward_weight(self._xp, gy, 1, self.k, self.k)
        self.gw += gw_corr.transpose(1, 0, 2, 3)[:, :, ::-1, ::-1]
        gxp = backend.corr_backward_input(gy, self._w_corr(), 1,
                                          self._xp.shape[2], self._xp.shape[3])
        lo = self.k - 1 - self.pad
        s = self.stride
        b, c, h, w = self._in_shape
        return np.ascontiguousarray(
            gxp[:, :, lo:lo + (h - 1) * s + 1:s, lo:lo + (w - 1) * s + 1:s])

    def param_items(self):
        yield "w", self.w, self.gw
        yield "b", self.b, self.gb

    def hyper(self):
        return {"cin": self.cin, "cout": self.cout, "k": self.k, "stride": self.stride,
                "pad": self.pad, "output_padding": self.output_padding}


class InstanceNorm(Layer):
    kind = "instance_norm"

    def __init__(self, channels, eps=1e-5):
        self.channels = channels
        self.eps = eps
        self.gamma = np.ones(channels)
        self.beta = np.zeros(channels)
        self.ggamma = np.zeros_like(self.gamma)
        self.gbeta = np.zeros_like(self.beta)
        self._cache = None

    def forward(self, x):
        mu = x.mean(axis=(2, 3), keepdims=True)
        var = x.var(axis=(2, 3), keepdims=True)
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mu) * inv
        self._cache = (xhat, inv)
        return self.gamma[None, :, None, None] * xhat + self.beta[None, :, None, None]

    def backward(self, gy):
        if self._cache is None:
            raise DimensionError("backward called before forward")
        xhat, inv = self._cache
        self.ggamma += (gy * xhat).sum(axis=(0, 2, 3))
        self.gbeta += gy.sum(axis=(0, 2, 3))
        g = gy * self.gamma[None, :, None, None]
        m1 = g.mean(axis=(2, 3), keepdims=True)
        m2 = (g * xhat).mean(axis=(2, 3), keepdims=True)
        return inv * (g - m1 - xhat * m2)

    def param_items(self):
        yield "gamma", self.gamma, self.ggamma
        yield "beta", self.beta, self.gbeta

    def hyper(self):
        return {"channels": self.channels}


class ReLU(Layer):
    kind = "relu"

    def forward(self, x):
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, gy):
        return np.where(self._mask, gy, 0.0)


class LeakyReLU(Layer):
    kind = "leaky_relu"

    def __init__(self, slope=0.2):
        self.slope = slope

    def forward(self, x):
        self._mask = x > 0
        return np.where(self._mask, x, self.slope * x)

    def backward(self, gy):
        return np.where(self._mask, gy, self.slope * gy)

    def hyper(self):
        return {"slope": self.slope}


class Tanh(Layer):
    kind = "tanh"

    def forward(self, x):
        self._y = np.tanh(x)
        return self._y

    def backward(self, gy):
        return gy * (1.0 - self._y ** 2)


class ResidualBlock(Layer):
    """conv3x3 + norm + relu + conv3x3 + norm with an additive skip."""

    kind = "residual_block"

    def __init__(self, channels, k=3, gen=None):
        self.channels, self.k = channels, k
        pad = (k - 1) // 2
        self.body = [
            Conv2d(channels, channels, k, 1, pad, gen=gen),
            InstanceNorm(channels),
            ReLU(),
            Conv2d(channels, channels, k, 1, pad, gen=gen),
            InstanceNorm(channels),
        ]

    def forward(self, x):
        y = x
        for layer in self.body:
            y = layer.forward(y)
        return x + y

    def backward(self, gy):
        g = gy
        for layer in reversed(self.body):
            g = layer.backward(g)
        return gy + g

    def param_items(self):
        for i, layer in enumerate(self.body):
            for name, p, g in layer.param_items():
                yield f"body{i}.{name}", p, g

    def hyper(self):
        return {"channels": self.channels, "k": self.k}


class FlattenMean(Layer):
    """Spatial mean: (B, C, H, W) -> (B, C)."""

    kind = "flatten_mean"

    def forward(self, x):
        self._shape = x.shape
        return x.mean(axis=(2, 3))

    def backward(self, gy):
        b, c, h, w = self._shape
        return np.broadcast_to(gy[:, :, None, None], self._shape) / (h * w)
