"""Rasterize continuous trajectories into discrete, normalized blur kernels.

Each sampled trajectory position deposits unit mass onto its four
surrounding pixels with bilinear weights; the accumulated raster is
normalized to sum 1. The trajectory is first translated so its centroid
sits at the kernel center, which makes the kernel invariant to constant
shifts of the path.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, KernelOverflowError
from .trajectory import Trajectory

# Deposit coordinates are snapped to this grid so that last-ulp noise
# (e.g. from translating the trajectory) cannot change the raster.
_QUANTUM = 2.0 ** -20


@dataclass(frozen=True)
class BlurKernel:
    size: int
    weights: np.ndarray  # (size, size) float64, nonnegative, sums to 1

    def validate(self):
        if self.size < 1 or self.size % 2 == 0:
            raise ConfigError("kernel size must be odd and positive")
        if self.weights.shape != (self.size, self.size):
            raise ConfigError("weight raster does not match declared size")
        if np.any(self.weights < 0):
            raise ConfigError("kernel weights must be nonnegative")
        if abs(float(self.weights.sum()) - 1.0) > 1e-6:
            raise ConfigError("kernel weights must sum to 1")


def _sample_positions(traj: Trajectory, samples_per_segment: int) -> np.ndarray:
    pts = np.asarray(traj.points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ConfigError("trajectory has no points")
    if pts.shape[0] == 1:
        return pts
    t = np.arange(samples_per_segment, dtype=np.float64) / samples_per_segment
    a = pts[:-1]  # (n-1, 2) segment starts
    b = pts[1:]
    samples = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
    samples = samples.reshape(-1, 2)
    return np.concatenate([samples, pts[-1:]], axis=0)


def required_size(traj: Trajectory) -> int:
    """Smallest odd kernel size that can hold the centered trajectory."""
    pts = np.asarray(traj.points, dtype=np.float64)
    offsets = pts - pts.mean(axis=0)
    reach = float(np.abs(offsets).max()) if offsets.size else 0.0
    return 2 * int(np.ceil(reach)) + 3


def rasterize_kernel(traj: Trajectory, size: int, samples_per_segment: int = 2) -> BlurKernel:
    """Bilinear sub-pixel rasterization of a centroid-centered trajectory."""
    if size < 1 or size % 2 == 0:
        raise ConfigError("kernel size must be odd and positive")
    if samples_per_segment < 1:
        raise ConfigError("samples_per_segment must be >= 1")

    samples = _sample_positions(traj, samples_per_segment)
    centroid = np.asarray(traj.points, dtype=np.float64).mean(axis=0)
    offsets = samples - centroid
    offsets = np.round(offsets / _QUANTUM) * _QUANTUM

    center = (size - 1) / 2.0
    reach = float(np.abs(offsets).max())
    if reach > center - 1.0:
        raise KernelOverflowError(
            f"trajectory reach {reach:.2f} px does not fit a {size}x{size} kernel; "
            f"need size >= {2 * int(np.ceil(reach)) + 3}"
        )

    cx = center + offsets[:, 0]
    cy = center + offsets[:, 1]
    x0 = np.floor(cx).astype(np.intp)
    y0 = np.floor(cy).astype(np.intp)
    fx = cx - x0
    fy = cy - y0

    weights = np.zeros((size, size), dtype=np.float64)
    np.add.at(weights, (y0, x0), (1.0 - fx) * (1.0 - fy))
    np.add.at(weights, (y0, x0 + 1), fx * (1.0 - fy))
    np.add.at(weights, (y0 + 1, x0), (1.0 - fx) * fy)
    np.add.at(weights, (y0 + 1, x0 + 1), fx * fy)

    mass = float(weights.sum())
    n_samples = samples.shape[0]
    assert abs(mass - n_samples) <= 1e-9 * n_samples, "deposited mass lost"
    weights /= mass
    kernel = BlurKernel(size=size, weights=weights)
    kernel.validate()
    return kernel


def kernel_to_image(kernel: BlurKernel) -> np.ndarray:
    """Min-max scale the weights to an 8-bit grayscale raster.

    A constant raster (max == min) maps to all zeros.
    """
    w = kernel.weights
    lo, hi = float(w.min()), float(w.max())
    if hi == lo:
        return np.zeros_like(w, dtype=np.uint8)
    scaled = (w - lo) / (hi - lo) * 255.0
    return np.floor(scaled + 0.5).astype(np.uint8)


def save_kernel(kernel: BlurKernel, path):
    """Write the PSF1 text format (bit-exact, 9 significant digits)."""
    kernel.validate()
    lines = [f"PSF1 {kernel.size}"]
    for row in kernel.weights:
        lines.append(" ".join(f"{v:.9g}" for v in row))
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def load_kernel(path) -> BlurKernel:
    """Read a PSF1 kernel file."""
    with open(path, "r") as f:
        header = f.readline().split()
        if len(header) != 2 or header[0] != "PSF1":
            raise ConfigError(f"{path}: not a PSF1 file")
        size = int(header[1])
        rows = []
        for _ in range(size):
            row = [float(v) for v in f.readline().split()]
            if len(row) != size:
                raise ConfigError(f"{path}: malformed PSF1 row")
            rows.append(row)
    kernel = BlurKernel(size=size, weights=np.asarray(rows, dtype=np.float64))
    kernel.validate()
    return kernel
