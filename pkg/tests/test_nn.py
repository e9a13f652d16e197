import numpy as np
import pytest

from blurlab import rng
from blurlab.errors import CorruptCheckpointError
from blurlab.nn import (Conv2d, ConvTranspose2d, FlattenMean, InstanceNorm,
                        LeakyReLU, Network, ReLU, ResidualBlock, Tanh,
                        build_discriminator, build_generator)
from blurlab.nn.checkpoint import load_checkpoint, save_checkpoint


def test_conv2d_shape_contract():
    gen = rng.generator(0, "t")
    layer = Conv2d(3, 8, 3, stride=2, pad=1, gen=gen)
    y = layer.forward(np.zeros((2, 3, 16, 16)))
    assert y.shape == (2, 8, 8, 8)
    gx = layer.backward(np.zeros_like(y))
    assert gx.shape == (2, 3, 16, 16)


def test_conv_transpose_shape_contract():
    gen = rng.generator(0, "t")
    layer = ConvTranspose2d(8, 4, 3, stride=2, pad=1, output_padding=1, gen=gen)
    y = layer.forward(np.zeros((2, 8, 8, 8)))
    assert y.shape == (2, 4, 16, 16)
    gx = layer.backward(np.zeros_like(y))
    assert gx.shape == (2, 8, 8, 8)


def test_conv2d_1x1_closed_form():
    # y = w * x summed over cin; dL/dw with gy=1 is sum of inputs
    layer = Conv2d(1, 1, 1)
    layer.w[0, 0, 0, 0] = 2.0
    x = np.arange(12, dtype=float).reshape(1, 1, 3, 4)
    y = layer.forward(x)
    np.testing.assert_array_equal(y, 2.0 * x)
    layer.backward(np.ones_like(y))
    assert layer.gw[0, 0, 0, 0] == x.sum()
    assert layer.gb[0] == 12.0


def test_conv2d_zero_padding_values():
    layer = Conv2d(1, 1, 3, stride=1, pad=1)
    layer.w[0, 0] = np.ones((3, 3))
    x = np.ones((1, 1, 3, 3))
    y = layer.forward(x)
    # corner covers a 2x2 patch of ones, center a 3x3 patch
    assert y[0, 0, 0, 0] == 4.0
    assert y[0, 0, 1, 1] == 9.0
    assert y[0, 0, 0, 1] == 6.0


def test_conv_transpose_matches_conv_adjoint():
    # transposed convolution forward equals gradient-wrt-input of the
    # matching strided convolution with the same weight tensor
    gen = rng.generator(3, "adjoint")
    conv = Conv2d(4, 2, 3, stride=2, pad=1, gen=gen)
    deconv = ConvTranspose2d(2, 4, 3, stride=2, pad=1, output_padding=1)
    deconv.w[...] = conv.w  # (cout, cin) conv weight is (cin, cout) here
    x = gen.normal(size=(1, 4, 8, 8))
    y = conv.forward(x)
    gy = gen.normal(size=y.shape)
    gx = conv.backward(gy)
    np.testing.assert_allclose(deconv.forward(gy), gx, atol=1e-12)


def test_instance_norm_statistics():
    gen = rng.generator(1, "in")
    layer = InstanceNorm(3)
    x = gen.normal(2.0, 5.0, size=(2, 3, 16, 16))
    y = layer.forward(x)
    mu = y.mean(axis=(2, 3))
    sd = y.std(axis=(2, 3))
    assert np.abs(mu).max() < 1e-5
    assert np.abs(sd - 1.0).max() < 1e-3


def test_activations_closed_form():
    x = np.array([[-2.0, -0.5, 0.5, 2.0]])
    np.testing.assert_array_equal(ReLU().forward(x), [[0, 0, 0.5, 2.0]])
    np.testing.assert_array_equal(LeakyReLU(0.2).forward(x),
                                  [[-0.4, -0.1, 0.5, 2.0]])
    np.testing.assert_allclose(Tanh().forward(x), np.tanh(x))


def test_flatten_mean():
    x = np.arange(24, dtype=float).reshape(1, 2, 3, 4)
    y = FlattenMean().forward(x)
    np.testing.assert_allclose(y, x.mean(axis=(2, 3)))


def test_residual_block_zero_weights_is_affine_of_zero():
    # zero conv weights -> body output is instance-norm of constants = 0,
    # so the block is the identity
    block = ResidualBlock(2)
    x = rng.generator(2, "res").normal(size=(1, 2, 6, 6))
    np.testing.assert_array_equal(block.forward(x), x)


def test_global_residual_identity_with_zero_body():
    net = build_generator(base_channels=4, res_blocks=1, seed=0)
    for _, p, _ in net.param_items():
        p[...] = 0.0
    x = rng.generator(4, "gr").uniform(-0.9, 0.9, size=(1, 3, 8, 8))
    np.testing.assert_array_equal(net.forward(x), x)


def test_global_residual_clamps_and_kills_gradient():
    net = Network([], global_residual=True)
    x = np.array([[[[0.9, -0.9], [0.0, 0.5]]]])
    body = Network([Tanh()], global_residual=True)
    y = body.forward(x)
    assert y.max() <= 1.0 and y.min() >= -1.0
    # entries clamped at the rails propagate zero gradient
    x2 = np.array([[[[0.999, -0.1]]]])
    y2 = body.forward(x2)
    assert y2[0, 0, 0, 0] == 1.0
    g = body.backward(np.ones_like(y2))
    assert g[0, 0, 0, 0] == 0.0
    assert g[0, 0, 0, 1] != 0.0


def test_generator_topology():
    net = build_generator(base_channels=4, res_blocks=3, seed=0)
    kinds = [layer.kind for layer in net.layers]
    assert kinds.count("residual_block") == 3
    assert kinds.count("conv_transpose2d") == 2
    assert kinds[0] == "conv2d" and net.layers[0].k == 7
    assert kinds[-1] == "tanh"
    x = np.zeros((1, 3, 16, 16))
    assert net.forward(x).shape == x.shape
    # encoder downsamples by 4: deepest feature width = base * 4
    assert net.layers[6].cout == 16


def test_discriminator_topology_and_output():
    net = build_discriminator(base_channels=4, seed=0)
    strided = [l for l in net.layers if l.kind == "conv2d" and l.stride == 2]
    assert len(strided) == 4
    y = net.forward(rng.generator(0, "d").normal(size=(3, 3, 32, 32)))
    assert y.shape == (3, 1)


def test_seeded_init_deterministic():
    a = build_generator(base_channels=4, res_blocks=1, seed=5)
    b = build_generator(base_channels=4, res_blocks=1, seed=5)
    for (na, pa, _), (nb, pb, _) in zip(a.param_items(), b.param_items()):
        assert na == nb
        np.testing.assert_array_equal(pa, pb)
    c = build_generator(base_channels=4, res_blocks=1, seed=6)
    diffs = [not np.array_equal(pa, pc)
             for (_, pa, _), (_, pc, _) in zip(a.param_items(), c.param_items())]
    assert any(diffs)


def test_checkpoint_round_trip(tmp_path):
    net = build_generator(base_channels=4, res_blocks=2, seed=9)
    p1 = tmp_path / "a.ckpt"
    p2 = tmp_path / "b.ckpt"
    save_checkpoint(net, p1)
    loaded = load_checkpoint(p1)
    save_checkpoint(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()
    x = rng.generator(9, "ck").uniform(-0.5, 0.5, size=(1, 3, 8, 8))
    # float32 storage: forward outputs agree to storage precision
    assert np.abs(net.forward(x) - loaded.forward(x)).max() < 1e-5


def test_checkpoint_corrupt_checksum_rejected(tmp_path):
    net = build_discriminator(base_channels=4, seed=1)
    path = tmp_path / "d.ckpt"
    save_checkpoint(net, path)
    raw = bytearray(path.read_bytes())
    raw[len(raw) // 2] ^= 0xFF  # flip one payload bit
    path.write_bytes(bytes(raw))
    with pytest.raises(CorruptCheckpointError):
        load_checkpoint(path)


def test_checkpoint_bad_magic_rejected(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"NOPE\n")
    with pytest.raises(CorruptCheckpointError):
        load_checkpoint(path)


def test_backends_agree():
    import blurlab._convcore_py as pyb
    try:
        import blurlab._convcore as cyb
    except ImportError:
        pytest.skip("compiled backend not built")
    gen = rng.generator(0, "backend")
    x = np.ascontiguousarray(gen.normal(size=(2, 3, 9, 9)))
    w = np.ascontiguousarray(gen.normal(size=(4, 3, 3, 3)))
    for stride in (1, 2):
        y1 = pyb.corr_forward(x, w, stride)
        y2 = cyb.corr_forward(x, w, stride)
        np.testing.assert_allclose(y1, y2, atol=1e-12)
        gy = np.ascontiguousarray(gen.normal(size=y1.shape))
        np.testing.assert_allclose(
            pyb.corr_backward_input(gy, w, stride, 9, 9),
            cyb.corr_backward_input(gy, w, stride, 9, 9), atol=1e-12)
        np.testing.assert_allclose(
            pyb.corr_backward_weight(x, gy, stride, 3, 3),
            cyb.corr_backward_weight(x, gy, stride, 3, 3), atol=1e-12)
