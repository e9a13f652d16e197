"""Finite-difference verification of every layer kind and loss gradient.

Shared by the `blurlab gradcheck` subcommand and the test suite. All checks
run in float64 with central differences.
"""

import numpy as np

from . import rng
from .losses import (ContentLossConfig, GanVariant, content_loss, d_loss,
                     g_adv_loss, make_extractor)
from .nn import (Conv2d, ConvTranspose2d, FlattenMean, InstanceNorm, LeakyReLU,
                 Network, ReLU, ResidualBlock, Tanh, build_discriminator,
                 grad_check)

TOLERANCE = 1e-4


def _mixed_loss(gen, shape):
    """Random linear + quadratic readout; avoids degeneracies (e.g. the
    near-invariance of a plain quadratic under instance normalization).

    Coefficients are kept small so that central-difference roundoff noise
    stays below the absolute floor of the relative-error metric even for
    parameters whose true gradient is exactly zero (conv biases feeding a
    normalization layer)."""
    a = gen.normal(size=shape) * 0.02
    b = gen.uniform(0.5, 1.5, size=shape) * 0.02

    def loss_fn(y):
        return float((a * y).sum() + 0.5 * (b * y * y).sum()), a + b * y

    return loss_fn


def _away_from_zero(gen, shape, margin=0.2):
    signs = np.where(gen.uniform(size=shape) < 0.5, -1.0, 1.0)
    return signs * gen.uniform(margin, 1.0, size=shape)


def layer_cases(seed=0):
    gen = rng.generator(seed, "gradcheck-layers")
    return [
        ("conv2d", Conv2d(2, 3, 3, 2, 1, gen=gen), gen.normal(size=(2, 2, 5, 5))),
        ("conv_transpose2d", ConvTranspose2d(2, 3, 3, 2, 1, 1, gen=gen),
         gen.normal(size=(2, 2, 3, 3))),
        ("instance_norm", InstanceNorm(2), gen.normal(size=(2, 2, 5, 5))),
        ("relu", ReLU(), _away_from_zero(gen, (2, 2, 5, 5))),
        ("leaky_relu", LeakyReLU(0.2), _away_from_zero(gen, (2, 2, 5, 5))),
        ("tanh", Tanh(), gen.normal(size=(2, 2, 5, 5))),
        ("residual_block", ResidualBlock(2, gen=gen), gen.normal(size=(1, 2, 5, 5))),
        ("flatten_mean", FlattenMean(), gen.normal(size=(2, 3, 4, 4))),
    ]


def layer_suite(seed=0, eps=1e-4):
    """Max relative finite-difference error per layer kind."""
    results = {}
    gen = rng.generator(seed, "gradcheck-loss-coeffs")
    for kind, layer, x in layer_cases(seed):
        net = Network([layer])
        y_shape = net.forward(x).shape
        results[kind] = grad_check(net, x, _mixed_loss(gen, y_shape), eps=eps)
    return results


def _fd_scores(fn, scores, eps):
    """Central differences of a scalar score function over score entries."""
    out = np.zeros_like(scores)
    for idx in np.ndindex(scores.shape):
        orig = scores[idx]
        scores[idx] = orig + eps
        up = fn()
        scores[idx] = orig - eps
        dn = fn()
        scores[idx] = orig
        out[idx] = (up - dn) / (2 * eps)
    return out


def _rel_err(analytic, numeric):
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float((np.abs(analytic - numeric) / denom).max())


def loss_suite(seed=0, eps=1e-4):
    """Max relative finite-difference error per loss gradient."""
    gen = rng.generator(seed, "gradcheck-losses")
    results = {}
    d_real = gen.normal(size=(5, 1))
    d_fake = gen.normal(size=(5, 1))
    variants = {
        "original": GanVariant(kind="original"),
        "original_saturating": GanVariant(kind="original", saturating=True),
        "lsgan": GanVariant(kind="lsgan"),
        "wgan": GanVariant(kind="wgan"),
    }
    for name, variant in variants.items():
        if name != "original_saturating":
            _, gr, gf = d_loss(variant, d_real, d_fake)
            num_r = _fd_scores(lambda: d_loss(variant, d_real, d_fake)[0], d_real, eps)
            num_f = _fd_scores(lambda: d_loss(variant, d_real, d_fake)[0], d_fake, eps)
            results[f"d_loss_{name}"] = max(_rel_err(gr, num_r), _rel_err(gf, num_f))
        _, gf = g_adv_loss(variant, d_fake)
        num_f = _fd_scores(lambda: g_adv_loss(variant, d_fake)[0], d_fake, eps)
        results[f"g_adv_{name}"] = _rel_err(gf, num_f)

    cfg = ContentLossConfig(weight=3.0, in_channels=2, base_channels=2,
                            seed=rng.derive_seed(seed, "content"))
    extractor = make_extractor(cfg)
    restored = gen.normal(size=(1, 2, 8, 8)) * 0.3
    sharp = gen.normal(size=(1, 2, 8, 8)) * 0.3
    _, grad = content_loss(cfg, restored, sharp, extractor)
    num = _fd_scores(lambda: content_loss(cfg, restored, sharp, extractor)[0],
                     restored, eps)
    results["content_loss"] = _rel_err(grad, num)

    cfg_id = ContentLossConfig(weight=2.0, extractor="identity")
    _, grad = content_loss(cfg_id, restored, sharp)
    num = _fd_scores(lambda: content_loss(cfg_id, restored, sharp)[0], restored, eps)
    results["content_loss_identity"] = _rel_err(grad, num)
    return results


def gp_input_gradient_error(seed=0, eps=1e-4):
    """Backprop input gradient of a tiny discriminator vs finite differences."""
    gen = rng.generator(seed, "gradcheck-gp")
    D = build_discriminator(base_channels=2, in_channels=2,
                            seed=rng.derive_seed(seed, "gpD"))
    # 32x32 keeps the deepest feature map above 1x1; instance norm on a
    # single spatial cell would zero the whole network output.
    x = gen.normal(size=(1, 2, 32, 32)) * 0.5
    out = D.forward(x)
    analytic = D.backward(np.ones_like(out))
    numeric = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        orig = x[idx]
        x[idx] = orig + eps
        up = float(D.forward(x).sum())
        x[idx] = orig - eps
        dn = float(D.forward(x).sum())
        x[idx] = orig
        numeric[idx] = (up - dn) / (2 * eps)
    return _rel_err(analytic, numeric)


def full_suite(seed=0, eps=1e-4):
    results = layer_suite(seed, eps)
    results.update(loss_suite(seed, eps))
    results["gp_input_gradient"] = gp_input_gradient_error(seed, eps)
    return results
