"""Random 2-D camera-shake trajectory simulation.

A trajectory is produced by a stochastic velocity recurrence: each step the
velocity is the inertial carry-over of the previous one plus a Gaussian
perturbation, an occasional impulse kick, and a deterministic pull toward the
centroid of the path so far. The per-step speed is clamped so the total arc
length never exceeds the configured budget.
"""

import math
from dataclasses import dataclass, field

from . import rng
from .errors import ConfigError

# Per-step speed may exceed the average step length by at most this factor.
OVERSHOOT_BOUND = 2.0


@dataclass(frozen=True)
class TrajectoryConfig:
    iterations: int = 2000
    max_length: float = 60.0
    gaussian_std: float = 0.3
    impulse_prob: float = 0.005
    impulse_scale: float = 3.0
    inertia: float = 0.7
    centripetal_gain: float = 0.3 / 2000
    seed: int = 0
    # None -> random unit direction scaled by max_length / iterations.
    initial_velocity: tuple[float, float] | None = None

    def validate(self):
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.max_length <= 0:
            raise ConfigError("max_length must be positive")
        if self.gaussian_std < 0 or self.impulse_scale < 0:
            raise ConfigError("perturbation scales must be nonnegative")
        if not 0.0 <= self.impulse_prob <= 1.0:
            raise ConfigError("impulse_prob must lie in [0, 1]")
        if not 0.0 <= self.inertia <= 1.0:
            raise ConfigError("inertia must lie in [0, 1]")
        if self.centripetal_gain < 0:
            raise ConfigError("centripetal_gain must be nonnegative")


@dataclass(frozen=True)
class Trajectory:
    points: list = field(default_factory=list)  # [(x, y), ...], first at origin
    velocities: list = field(default_factory=list)  # parallel [(vx, vy), ...]


def generate_trajectory(config: TrajectoryConfig) -> Trajectory:
    """Simulate a trajectory; deterministic function of the config."""
    config.validate()
    n = config.iterations
    gen = rng.generator(config.seed, "trajectory")

    # All draws happen up front in a fixed order so the output is a pure
    # function of the config regardless of which terms are active.
    init_angle = gen.uniform(0.0, 2.0 * math.pi)
    gauss = gen.normal(0.0, 1.0, size=(n, 2)) * config.gaussian_std
    impulse_u = gen.uniform(0.0, 1.0, size=n)
    impulse_angle = gen.uniform(0.0, 2.0 * math.pi, size=n)

    if config.initial_velocity is not None:
        vx, vy = float(config.initial_velocity[0]), float(config.initial_velocity[1])
    else:
        speed0 = config.max_length / n
        vx, vy = speed0 * math.cos(init_angle), speed0 * math.sin(init_angle)

    step_cap = OVERSHOOT_BOUND * config.max_length / n
    budget = config.max_length
    px, py = 0.0, 0.0
    sum_x, sum_y = 0.0, 0.0
    points = [(0.0, 0.0)]
    velocities = [(vx, vy)]

    gauss_l = gauss.tolist()
    impulse_u_l = impulse_u.tolist()
    impulse_angle_l = impulse_angle.tolist()

    for t in range(n):
        cx = sum_x / (t + 1)
        cy = sum_y / (t + 1)
        gx, gy = gauss_l[t]
        nvx = config.inertia * vx + gx + config.centripetal_gain * (cx - px)
        nvy = config.inertia * vy + gy + config.centripetal_gain * (cy - py)
        if impulse_u_l[t] < config.impulse_prob:
            nvx += config.impulse_scale * math.cos(impulse_angle_l[t])
            nvy += config.impulse_scale * math.sin(impulse_angle_l[t])

        speed = math.hypot(nvx, nvy)
        cap = min(step_cap, budget)
        if speed > cap:
            # Slight shrink keeps the running arc length strictly within
            # budget despite rounding.
            scale = cap / speed * (1.0 - 1e-12) if speed > 0 else 0.0
            nvx *= scale
            nvy *= scale
            speed = math.hypot(nvx, nvy)

        px += nvx
        py += nvy
        budget -= speed
        if budget < 0.0:
            budget = 0.0
        points.append((px, py))
        velocities.append((nvx, nvy))
        sum_x += px
        sum_y += py
        vx, vy = nvx, nvy

    return Trajectory(points=points, velocities=velocities)


def trajectory_extent(traj: Trajectory) -> tuple[float, float]:
    """Bounding-box (width, height) of the trajectory points."""
    if not traj.points:
        raise ConfigError("trajectory has no points")
    xs = [p[0] for p in traj.points]
    ys = [p[1] for p in traj.points]
    return max(xs) - min(xs), max(ys) - min(ys)


def save_trajectory(traj: Trajectory, path):
    """Debug export: one "x y" pair per line, LF endings."""
    with open(path, "w", newline="\n") as f:
        for x, y in traj.points:
            f.write(f"{x!r} {y!r}\n")
