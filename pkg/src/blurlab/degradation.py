"""Blur model application: blurred = kernel * sharp + noise.

Convolution is true convolution (kernel flipped before correlating),
applied per channel with the same output size as the input. blur_corpus
turns a directory of sharp images into blurred/sharp training pairs with
one fresh kernel per image.
"""

import csv
import logging
import os
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import backend, imageio, rng
from .errors import ConfigError, DimensionError, KernelOverflowError
from .psf import BlurKernel, rasterize_kernel, required_size, save_kernel, load_kernel
from .trajectory import TrajectoryConfig, generate_trajectory

log = logging.getLogger(__name__)

_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")


@dataclass(frozen=True)
class DegradationConfig:
    noise_std: float = 0.01
    seed: int = 0
    kernel_size: int = 31
    samples_per_segment: int = 2
    kernel_path: str | None = None  # fixed kernel file; None -> fresh per image

    def validate(self):
        if self.noise_std < 0:
            raise ConfigError("noise_std must be nonnegative")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ConfigError("kernel_size must be odd and positive")


def convolve(image: np.ndarray, kernel: BlurKernel, padding: str = "reflect") -> np.ndarray:
    """Convolve a (B, C, H, W) batch with a blur kernel, same output size."""
    if image.ndim != 4:
        raise DimensionError("expected a (B, C, H, W) batch")
    b, c, h, w = image.shape
    k = kernel.size
    if k > min(h, w):
        raise DimensionError(f"kernel {k} larger than image {h}x{w}")
    pad = (k - 1) // 2
    mode = {"reflect": "reflect", "zero": "constant"}.get(padding)
    if mode is None:
        raise ConfigError(f"unknown padding {padding!r}")
    flat = image.reshape(b * c, 1, h, w)
    padded = np.pad(flat, ((0, 0), (0, 0), (pad, pad), (pad, pad)), mode=mode)
    flipped = kernel.weights[::-1, ::-1]
    out = backend.corr_forward(padded, flipped[None, None, :, :], 1)
    return out.reshape(b, c, h, w)


def add_noise(image: np.ndarray, noise_std: float, seed: int) -> np.ndarray:
    """Add seeded Gaussian noise and clamp to [-1, 1]."""
    if noise_std < 0:
        raise ConfigError("noise_std must be nonnegative")
    if noise_std == 0:
        return image.copy()
    gen = rng.generator(seed, "noise")
    noisy = image + gen.normal(0.0, noise_std, size=image.shape)
    return np.clip(noisy, -1.0, 1.0)


def degrade_image(image: np.ndarray, traj_config: TrajectoryConfig,
                  degr_config: DegradationConfig, seed: int):
    """Blur one (C, H, W) image with a per-seed fresh kernel; returns (blurred, kernel)."""
    if degr_config.kernel_path is not None:
        kernel = load_kernel(degr_config.kernel_path)
    else:
        traj = generate_trajectory(replace(traj_config, seed=seed))
        size = degr_config.kernel_size
        needed = required_size(traj)
        if needed > size:
            size = needed if needed % 2 == 1 else needed + 1
        if size > min(image.shape[1], image.shape[2]):
            raise KernelOverflowError(
                f"kernel size {size} exceeds image {image.shape[1]}x{image.shape[2]}"
            )
        kernel = rasterize_kernel(traj, size, degr_config.samples_per_segment)
    blurred = convolve(image[None], kernel, "reflect")[0]
    blurred = add_noise(blurred, degr_config.noise_std, seed)
    return blurred, kernel


def blur_corpus(input_dir, output_dir, traj_config: TrajectoryConfig,
                degr_config: DegradationConfig) -> Path:
    """Blur every image in input_dir; returns the manifest path.

    Per-image seeds are derived from (config seed, filename), so output is
    independent of processing order.
    """
    degr_config.validate()
    in_dir = Path(input_dir)
    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = sorted(p for p in in_dir.iterdir()
                   if p.suffix.lower() in _IMAGE_SUFFIXES)
    if not files:
        raise ConfigError(f"no images found in {in_dir}")

    manifest_path = out_dir / "manifest.csv"
    rows = []
    for path in files:
        seed = rng.derive_seed(degr_config.seed, path.name)
        try:
            image = imageio.load_image(path)
        except Exception as exc:  # unreadable file: skip, keep going
            log.warning("skipping %s: %s", path, exc)
            continue
        try:
            blurred, kernel = degrade_image(image, traj_config, degr_config, seed)
        except KernelOverflowError as exc:
            log.warning("skipping %s: %s", path, exc)
            continue
        blurred_path = out_dir / (path.stem + "_blur.png")
        kernel_path = out_dir / (path.stem + ".psf")
        imageio.save_image(blurred, blurred_path)
        save_kernel(kernel, kernel_path)
        # paths are stored relative to the manifest so byte-identical
        # corpora land in byte-identical manifests wherever they live
        rows.append([os.path.relpath(path, out_dir),
                     os.path.relpath(blurred_path, out_dir),
                     os.path.relpath(kernel_path, out_dir), str(seed)])

    with open(manifest_path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["input", "blurred", "kernel", "seed"])
        writer.writerows(rows)
    return manifest_path
