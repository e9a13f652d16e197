"""Adversarial training loop: alternate discriminator and generator updates
over blurred/sharp pairs, plus Adam and single-image restoration.

Training is bit-reproducible for a fixed seed in single-threaded execution:
all shuffling, augmentation, and interpolation noise flows from named
sub-streams of the config seed.
"""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import imageio, rng
from .errors import ConfigError, DimensionError, NumericError
from .losses import (ContentLossConfig, GanVariant, clip_weights, content_loss,
                     d_loss, g_adv_loss, gradient_penalty, make_extractor)
from .nn import Network, build_discriminator, build_generator
from .nn.checkpoint import load_checkpoint, save_checkpoint


@dataclass
class TrainConfig:
    variant: GanVariant = field(default_factory=GanVariant)
    content: ContentLossConfig = field(default_factory=ContentLossConfig)
    epochs: int = 10
    batch_size: int = 1
    crop_size: int = 256
    lr_g: float = 1e-4
    lr_d: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.999
    d_steps_per_g: int = 0  # 0 -> 5 for wgan variants, 1 otherwise
    seed: int = 0
    checkpoint_dir: str = "checkpoints"
    log_path: str = "loss_log.csv"
    g_base_channels: int = 64
    g_res_blocks: int = 6
    d_base_channels: int = 64
    in_channels: int = 3

    def validate(self):
        self.variant.validate()
        self.content.validate()
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("epochs must be >= 0 and batch_size >= 1")
        if self.crop_size < 4 or self.crop_size % 4 != 0:
            raise ConfigError("crop_size must be a positive multiple of 4")
        if self.lr_g <= 0 or self.lr_d <= 0:
            raise ConfigError("learning rates must be positive")

    def effective_d_steps(self):
        if self.d_steps_per_g > 0:
            return self.d_steps_per_g
        return 5 if self.variant.kind in ("wgan", "wgan_gp") else 1


_CONFIG_INT_KEYS = {"epochs", "batch_size", "crop_size", "d_steps_per_g", "seed",
                    "g_base_channels", "g_res_blocks", "d_base_channels",
                    "in_channels"}
_CONFIG_FLOAT_KEYS = {"lr_g", "lr_d", "beta1", "beta2"}
_CONFIG_STR_KEYS = {"checkpoint_dir", "log_path"}
_VARIANT_NAMES = {"gan": "original", "lsgan": "lsgan", "wgan": "wgan",
                  "wgan-gp": "wgan_gp", "wgan_gp": "wgan_gp", "original": "original"}


def parse_variant(name: str, gp_lambda=10.0, clip_c=0.01) -> GanVariant:
    kind = _VARIANT_NAMES.get(name)
    if kind is None:
        raise ConfigError(f"unknown variant {name!r} (use gan|lsgan|wgan|wgan-gp)")
    return GanVariant(kind=kind, gp_lambda=gp_lambda, clip_c=clip_c)


def load_train_config(path=None, overrides=None) -> TrainConfig:
    """Build a TrainConfig from a flat key=value file plus CLI overrides.

    Override values (a dict of strings) win over file values.
    """
    kv = {}
    if path is not None:
        for raw in Path(path).read_text().splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}: malformed line {raw!r}")
            kv[key.strip()] = value.strip()
    kv.update(overrides or {})

    cfg = TrainConfig()
    variant_name = kv.pop("variant", None)
    gp_lambda = float(kv.pop("gp_lambda", cfg.variant.gp_lambda))
    clip_c = float(kv.pop("clip_c", cfg.variant.clip_c))
    if variant_name is not None:
        cfg.variant = parse_variant(variant_name, gp_lambda, clip_c)
    content_weight = float(kv.pop("content_weight", cfg.content.weight))
    content_extractor = kv.pop("content_extractor", cfg.content.extractor)
    for key, value in kv.items():
        if key in _CONFIG_INT_KEYS:
            setattr(cfg, key, int(value))
        elif key in _CONFIG_FLOAT_KEYS:
            setattr(cfg, key, float(value))
        elif key in _CONFIG_STR_KEYS:
            setattr(cfg, key, value)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    cfg.content = ContentLossConfig(weight=content_weight,
                                    extractor=content_extractor,
                                    in_channels=cfg.in_channels)
    cfg.validate()
    return cfg


@dataclass
class PairDataset:
    rows: list  # [(blurred_path, sharp_path), ...]

    @classmethod
    def from_manifest(cls, path):
        base = Path(path).parent
        rows = []
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames is None:
                raise ConfigError(f"{path}: empty manifest")
            cols = set(reader.fieldnames)
            if not {"input", "blurred"} <= cols and not {"sharp", "blurred"} <= cols:
                raise ConfigError(f"{path}: manifest needs input/blurred columns")
            sharp_col = "input" if "input" in cols else "sharp"
            for rec in reader:
                # relative manifest entries are relative to the manifest itself
                rows.append((str(base / rec["blurred"]),
                             str(base / rec[sharp_col])))
        return cls(rows=rows)

    def order(self, seed, epoch):
        gen = rng.generator(seed, f"shuffle-epoch{epoch}")
        return gen.permutation(len(self.rows)).tolist()


def adam_step(params, grads, state, lr, betas=(0.5, 0.999), eps=1e-8):
    """In-place Adam update with bias correction over parallel array lists."""
    if "m" not in state:
        state["m"] = [np.zeros_like(p) for p in params]
        state["v"] = [np.zeros_like(p) for p in params]
        state["t"] = 0
    state["t"] += 1
    b1, b2 = betas
    t = state["t"]
    for p, g, m, v in zip(params, grads, state["m"], state["v"]):
        m[...] = b1 * m + (1.0 - b1) * g
        v[...] = b2 * v + (1.0 - b2) * g * g
        mhat = m / (1.0 - b1 ** t)
        vhat = v / (1.0 - b2 ** t)
        p -= lr * mhat / (np.sqrt(vhat) + eps)


def _augment_pair(blurred, sharp, crop, gen):
    c, h, w = blurred.shape
    if h < crop or w < crop:
        raise DimensionError(f"image {h}x{w} smaller than crop {crop}")
    top = int(gen.integers(0, h - crop + 1))
    left = int(gen.integers(0, w - crop + 1))
    b = blurred[:, top:top + crop, left:left + crop]
    s = sharp[:, top:top + crop, left:left + crop]
    if gen.uniform() < 0.5:
        b = b[:, :, ::-1]
        s = s[:, :, ::-1]
    return np.ascontiguousarray(b), np.ascontiguousarray(s)


def _params_and_grads(net):
    items = list(net.param_items())
    return [p for _, p, _ in items], [g for _, _, g in items]


def train(dataset: PairDataset, cfg: TrainConfig, audit_hook=None):
    """Run the adversarial training loop; returns (last_ckpt, best_ckpt, log_path)."""
    cfg.validate()
    if not dataset.rows:
        raise ConfigError("dataset is empty")

    images = []
    for blurred_path, sharp_path in dataset.rows:
        try:
            blurred = imageio.load_image(blurred_path)
            sharp = imageio.load_image(sharp_path)
        except Exception as exc:
            raise ConfigError(f"cannot decode pair ({blurred_path}, {sharp_path}): {exc}")
        if blurred.shape != sharp.shape:
            raise DimensionError(
                f"pair dimension mismatch: {blurred_path} vs {sharp_path}")
        images.append((blurred, sharp))

    G = build_generator(cfg.g_base_channels, cfg.g_res_blocks, cfg.in_channels,
                        seed=rng.derive_seed(cfg.seed, "G"))
    D = build_discriminator(cfg.d_base_channels, cfg.in_channels,
                            seed=rng.derive_seed(cfg.seed, "D"))
    extractor = make_extractor(cfg.content)
    g_params, g_grads = _params_and_grads(G)
    d_params, d_grads = _params_and_grads(D)
    g_state, d_state = {}, {}
    d_steps = cfg.effective_d_steps()

    ckpt_dir = Path(cfg.checkpoint_dir)
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    last_path = ckpt_dir / "last.ckpt"
    best_path = ckpt_dir / "best.ckpt"
    save_checkpoint(G, last_path)

    best_content = math.inf
    step = 0
    log_rows = []
    n = len(images)

    for epoch in range(cfg.epochs):
        order = dataset.order(cfg.seed, epoch)
        aug_gen = rng.generator(cfg.seed, f"aug-epoch{epoch}")
        epoch_content = []
        for start in range(0, n, cfg.batch_size):
            idxs = order[start:start + cfg.batch_size]
            pairs = [_augment_pair(*images[i], cfg.crop_size, aug_gen) for i in idxs]
            z = np.stack([p[0] for p in pairs])
            x = np.stack([p[1] for p in pairs])
            step += 1

            dl_value, gp_value = 0.0, 0.0
            for _ in range(d_steps):
                restored = G.forward(z)
                scores = D.forward(np.concatenate([x, restored]))
                s_real, s_fake = scores[:len(x)], scores[len(x):]
                dl_value, grad_real, grad_fake = d_loss(cfg.variant, s_real, s_fake)
                D.zero_grads()
                D.backward(np.concatenate([grad_real, grad_fake]))
                if cfg.variant.kind == "wgan_gp":
                    gp_value, _ = gradient_penalty(
                        D, x, restored, cfg.variant.gp_lambda,
                        rng.derive_seed(cfg.seed, f"gp-step{step}"))
                adam_step(d_params, d_grads, d_state, cfg.lr_d,
                          (cfg.beta1, cfg.beta2))
                if cfg.variant.kind == "wgan":
                    clip_weights(D, cfg.variant.clip_c)
                if audit_hook is not None:
                    audit_hook({"event": "d_step", "step": step,
                                "real": x, "fake": restored})

            restored = G.forward(z)
            s_fake = D.forward(restored)
            ga_value, grad_s = g_adv_loss(cfg.variant, s_fake)
            grad_restored_adv = D.backward(grad_s)
            cl_value, grad_restored_content = content_loss(
                cfg.content, restored, x, extractor)
            G.zero_grads()
            G.backward(grad_restored_adv + grad_restored_content)
            adam_step(g_params, g_grads, g_state, cfg.lr_g, (cfg.beta1, cfg.beta2))
            if audit_hook is not None:
                audit_hook({"event": "g_step", "step": step,
                            "restored": restored, "sharp": x})

            if not all(map(math.isfinite, (dl_value, ga_value, cl_value, gp_value))):
                raise NumericError(f"non-finite loss at step {step}")
            log_rows.append([step, epoch, dl_value, ga_value, cl_value, gp_value])
            epoch_content.append(cl_value)

        save_checkpoint(G, last_path)
        mean_content = float(np.mean(epoch_content))
        if mean_content < best_content:
            best_content = mean_content
            save_checkpoint(G, best_path)

    log_path = Path(cfg.log_path)
    if log_path.parent != Path(""):
        log_path.parent.mkdir(parents=True, exist_ok=True)
    with open(log_path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["step", "epoch", "d_loss", "g_adv", "g_content", "gp"])
        writer.writerows(log_rows)
    return last_path, best_path, log_path


def restore(image_path, checkpoint_path, output_path):
    """Deblur one image with a trained generator checkpoint."""
    G = load_checkpoint(checkpoint_path)
    image = imageio.load_image(image_path)
    cin = G.layers[0].cin
    if image.shape[0] == 1 and cin == 3:
        image = np.repeat(image, 3, axis=0)
    elif image.shape[0] != cin:
        raise DimensionError(
            f"{image_path}: {image.shape[0]} channels, generator expects {cin}")
    c, h, w = image.shape
    ph = (-h) % 4
    pw = (-w) % 4
    padded = np.pad(image, ((0, 0), (0, ph), (0, pw)), mode="reflect") \
        if (ph or pw) else image
    out = G.forward(padded[None])[0]
    out = out[:, :h, :w]
    imageio.save_image(out, output_path)
    return out
