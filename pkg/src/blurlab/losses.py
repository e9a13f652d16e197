"""Adversarial objectives (cross-entropy, least-squares, Wasserstein with
weight clipping or gradient penalty) and the feature-space content loss.

Every function returns both the value and the gradient(s) so callers never
differentiate losses themselves. Scores are raw (no sigmoid); the
cross-entropy variant applies its own link internally.
"""

import functools
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import ConfigError, DimensionError, NumericError
from .nn import Conv2d, Network, ReLU

VARIANTS = ("original", "lsgan", "wgan", "wgan_gp")


@dataclass(frozen=True)
class GanVariant:
    kind: str = "lsgan"
    # least-squares labels: a fake, b real, c what G wants D to believe
    a: float = 0.0
    b: float = 1.0
    c: float = 1.0
    gp_lambda: float = 10.0
    clip_c: float = 0.01
    # minimax generator loss instead of the non-saturating default
    saturating: bool = False

    def validate(self):
        if self.kind not in VARIANTS:
            raise ConfigError(f"unknown GAN variant {self.kind!r}")
        if self.gp_lambda < 0:
            raise ConfigError("gp_lambda must be nonnegative")
        if self.clip_c <= 0:
            raise ConfigError("clip_c must be positive")


@dataclass(frozen=True)
class ContentLossConfig:
    weight: float = 100.0
    extractor: str = "conv3"  # "conv3" or "identity"
    seed: int = 0
    in_channels: int = 3
    base_channels: int = 16

    def validate(self):
        if self.weight < 0:
            raise ConfigError("content weight must be nonnegative")
        if self.extractor not in ("conv3", "identity"):
            raise ConfigError(f"unknown extractor {self.extractor!r}")


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _softplus(x):
    return np.logaddexp(0.0, x)


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericError("non-finite score")


def d_loss(variant: GanVariant, d_real, d_fake):
    """Discriminator loss; returns (value, grad_wrt_d_real, grad_wrt_d_fake)."""
    variant.validate()
    d_real = np.asarray(d_real, dtype=np.float64)
    d_fake = np.asarray(d_fake, dtype=np.float64)
    _check_finite(d_real, d_fake)
    n, m = d_real.size, d_fake.size
    if variant.kind == "original":
        value = _softplus(-d_real).mean() + _softplus(d_fake).mean()
        grad_real = (_sigmoid(d_real) - 1.0) / n
        grad_fake = _sigmoid(d_fake) / m
    elif variant.kind == "lsgan":
        value = 0.5 * ((d_real - variant.b) ** 2).mean() + \
            0.5 * ((d_fake - variant.a) ** 2).mean()
        grad_real = (d_real - variant.b) / n
        grad_fake = (d_fake - variant.a) / m
    else:  # wgan / wgan_gp; gradient penalty is added separately
        value = d_fake.mean() - d_real.mean()
        grad_real = np.full_like(d_real, -1.0 / n)
        grad_fake = np.full_like(d_fake, 1.0 / m)
    return float(value), grad_real, grad_fake


def g_adv_loss(variant: GanVariant, d_fake):
    """Generator adversarial loss; returns (value, grad_wrt_d_fake)."""
    variant.validate()
    d_fake = np.asarray(d_fake, dtype=np.float64)
    _check_finite(d_fake)
    m = d_fake.size
    if variant.kind == "original":
        if variant.saturating:
            value = -_softplus(d_fake).mean()
            grad = -_sigmoid(d_fake) / m
        else:
            value = _softplus(-d_fake).mean()
            grad = (_sigmoid(d_fake) - 1.0) / m
    elif variant.kind == "lsgan":
        value = 0.5 * ((d_fake - variant.c) ** 2).mean()
        grad = (d_fake - variant.c) / m
    else:
        value = -d_fake.mean()
        grad = np.full_like(d_fake, -1.0 / m)
    return float(value), grad


def clip_weights(net: Network, c: float):
    """Clamp every parameter of the network to [-c, c] in place."""
    if c <= 0:
        raise ConfigError("clip threshold must be positive")
    for _, p, _ in net.param_items():
        np.clip(p, -c, c, out=p)


@functools.lru_cache(maxsize=8)
def make_extractor(cfg: ContentLossConfig) -> Network | None:
    """Frozen seeded feature extractor: 3 stride-2 conv + relu stages."""
    cfg.validate()
    if cfg.extractor == "identity":
        return None
    gen = rng.generator(cfg.seed, "content-extractor")
    f, c = cfg.base_channels, cfg.in_channels
    layers = []
    for cin, cout in ((c, f), (f, 2 * f), (2 * f, 4 * f)):
        conv = Conv2d(cin, cout, 3, 2, 1, gen=gen)
        # rescale to unit fan-in variance so features carry signal
        conv.w *= 1.0 / (0.02 * np.sqrt(cin * 9))
        layers += [conv, ReLU()]
    return Network(layers)


def content_loss(cfg: ContentLossConfig, restored, sharp, extractor=None):
    """Feature-space MSE; returns (value, grad_wrt_restored)."""
    cfg.validate()
    if restored.shape != sharp.shape:
        raise DimensionError("restored/sharp shape mismatch")
    if extractor is None:
        extractor = make_extractor(cfg)
    if extractor is None:  # identity extractor: pixel space
        diff = restored - sharp
        value = cfg.weight * float((diff ** 2).mean())
        return value, cfg.weight * 2.0 * diff / diff.size
    f_sharp = extractor.forward(sharp)
    f_restored = extractor.forward(restored)
    diff = f_restored - f_sharp
    value = cfg.weight * float((diff ** 2).mean())
    gy = cfg.weight * 2.0 * diff / diff.size
    grad = extractor.backward(gy)
    return value, grad


def _param_grads_of_score_sum(D: Network, x):
    """Parameter gradients of sum_b D(x)_b, leaving D's buffers untouched."""
    items = list(D.param_items())
    saved = [g.copy() for _, _, g in items]
    for _, _, g in items:
        g[...] = 0.0
    out = D.forward(x)
    D.backward(np.ones_like(out))
    grads = [g.copy() for _, _, g in items]
    for (_, _, g), s in zip(items, saved):
        g[...] = s
    return grads


def gradient_penalty(D: Network, x_real, x_fake, gp_lambda: float, seed: int,
                     param_grads: bool = True):
    """Penalty pushing ||grad_x D|| toward 1 at interpolated samples.

    Returns (value, per-item input-gradient norms). When param_grads is
    true the penalty's parameter gradients are accumulated into D's grad
    buffers via a directional central difference (two extra passes), which
    is equivalent to differencing over every parameter but runs at
    training speed.
    """
    if x_real.shape != x_fake.shape:
        raise DimensionError("x_real/x_fake shape mismatch")
    b = x_real.shape[0]
    gen = rng.generator(seed, "gp-interp")
    eps = gen.uniform(0.0, 1.0, size=(b, 1, 1, 1))
    xhat = eps * x_real + (1.0 - eps) * x_fake

    items = list(D.param_items())
    saved = [g.copy() for _, _, g in items]
    out = D.forward(xhat)
    g_in = D.backward(np.ones_like(out))
    for (_, _, g), s in zip(items, saved):
        g[...] = s

    norms = np.sqrt((g_in ** 2).sum(axis=(1, 2, 3)))
    value = gp_lambda * float(((norms - 1.0) ** 2).mean())

    if param_grads and gp_lambda > 0:
        safe = np.maximum(norms, 1e-12)
        coef = (2.0 * gp_lambda / b) * (norms - 1.0) / safe
        u = coef[:, None, None, None] * g_in
        umax = float(np.abs(u).max())
        delta = 1e-5 / max(umax, 1e-12)
        plus = _param_grads_of_score_sum(D, xhat + delta * u)
        minus = _param_grads_of_score_sum(D, xhat - delta * u)
        for (_, _, g), gp, gm in zip(items, plus, minus):
            g += (gp - gm) / (2.0 * delta)
    return value, norms
