from .layers import (Conv2d, ConvTranspose2d, FlattenMean, InstanceNorm, Layer,
                     LeakyReLU, ReLU, ResidualBlock, Tanh)
from .network import Network, build_discriminator, build_generator, grad_check
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Conv2d", "ConvTranspose2d", "FlattenMean", "InstanceNorm", "Layer",
    "LeakyReLU", "ReLU", "ResidualBlock", "Tanh",
    "Network", "build_discriminator", "build_generator", "grad_check",
    "load_checkpoint", "save_checkpoint",
]
