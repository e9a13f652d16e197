"""Command-line entry point wiring the full pipeline:
synthesize -> blur -> train -> restore -> evaluate.

Exit codes: 0 success, 1 runtime/numeric failure, 2 usage/config error.
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import backend, imageio, metrics, rng
from .degradation import DegradationConfig, blur_corpus, convolve
from .errors import BlurlabError, ConfigError
from .gradcheck import TOLERANCE, full_suite
from .psf import BlurKernel, kernel_to_image, rasterize_kernel, save_kernel
from .trajectory import TrajectoryConfig, generate_trajectory
from .trainer import PairDataset, load_train_config, restore, train

from PIL import Image


def _add_trajectory_flags(p):
    p.add_argument("--iterations", type=int, default=2000)
    p.add_argument("--max-length", type=float, default=60.0)
    p.add_argument("--gaussian-std", type=float, default=0.3)
    p.add_argument("--impulse-prob", type=float, default=0.005)
    p.add_argument("--impulse-scale", type=float, default=3.0)
    p.add_argument("--inertia", type=float, default=0.7)
    p.add_argument("--centripetal-gain", type=float, default=0.3 / 2000)


def _traj_config(args, seed):
    return TrajectoryConfig(
        iterations=args.iterations, max_length=args.max_length,
        gaussian_std=args.gaussian_std, impulse_prob=args.impulse_prob,
        impulse_scale=args.impulse_scale, inertia=args.inertia,
        centripetal_gain=args.centripetal_gain, seed=seed)


def cmd_make_kernel(args):
    traj = generate_trajectory(_traj_config(args, args.seed))
    kernel = rasterize_kernel(traj, args.size, args.samples_per_segment)
    save_kernel(kernel, args.out)
    if args.png:
        Image.fromarray(kernel_to_image(kernel), mode="L").save(args.png)
    print(f"wrote {args.out} ({args.size}x{args.size}, seed {args.seed})")
    return 0


def cmd_blur(args):
    traj_config = _traj_config(args, args.seed)
    degr = DegradationConfig(noise_std=args.noise_std, seed=args.seed,
                             kernel_size=args.kernel_size,
                             kernel_path=args.kernel)
    manifest = blur_corpus(args.in_dir, args.out_dir, traj_config, degr)
    print(f"wrote {manifest}")
    return 0


def cmd_train(args):
    overrides = {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        overrides[key] = value
    if args.variant:
        overrides["variant"] = args.variant
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.epochs is not None:
        overrides["epochs"] = str(args.epochs)
    cfg = load_train_config(args.config, overrides)
    dataset = PairDataset.from_manifest(args.pairs)
    last, best, log = train(dataset, cfg)
    print(f"checkpoints: {last} {best}\nloss log: {log}")
    return 0


def cmd_restore(args):
    restore(args.in_path, args.ckpt, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_eval(args):
    truth = metrics.load_detections(args.truth)
    rows = []
    for det_path in args.detections:
        detections = metrics.load_detections(det_path)
        scores = metrics.match_and_score(detections, truth, args.iou_thresh)
        rows.append({"name": Path(det_path).stem, **scores})
    table = metrics.report(rows, csv_path=args.report)
    print(table, end="")
    print(f"wrote {args.report}")
    return 0


def cmd_gradcheck(args):
    results = full_suite(seed=args.seed)
    worst = 0.0
    for name in sorted(results):
        err = results[name]
        worst = max(worst, err)
        status = "ok" if err < TOLERANCE else "FAIL"
        print(f"{name:28s} max_rel_err {err:.3e}  {status}")
    print(f"worst {worst:.3e} (tolerance {TOLERANCE:g})")
    return 0 if worst < TOLERANCE else 1


def _synth_sharp_image(gen, size=32):
    """Procedural test image: smooth random background plus ellipses."""
    coarse = gen.uniform(-0.7, 0.7, size=(3, 4, 4))
    img = np.repeat(np.repeat(coarse, size // 4, axis=1), size // 4, axis=2)
    yy, xx = np.mgrid[0:size, 0:size]
    for _ in range(2):
        cy, cx = gen.uniform(size * 0.25, size * 0.75, size=2)
        ry, rx = gen.uniform(size * 0.1, size * 0.3, size=2)
        color = gen.uniform(-0.9, 0.9, size=3)
        mask = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0
        img[:, mask] = color[:, None]
    smooth = BlurKernel(size=3, weights=np.full((3, 3), 1.0 / 9.0))
    return np.clip(convolve(img[None], smooth, "reflect")[0], -1.0, 1.0)


def cmd_demo(args):
    out = Path(args.out)
    sharp_dir = out / "sharp"
    blur_dir = out / "blurred"
    restored_dir = out / "restored"
    for d in (sharp_dir, blur_dir, restored_dir):
        d.mkdir(parents=True, exist_ok=True)

    gen = rng.generator(args.seed, "demo-synth")
    n_pairs = 8
    for i in range(n_pairs):
        imageio.save_image(_synth_sharp_image(gen), sharp_dir / f"img{i:02d}.png")

    # Short, fast path: at 32x32 a ~5 px smear is already severe blur.
    traj_config = TrajectoryConfig(iterations=60, max_length=20.0,
                                   gaussian_std=0.6, impulse_scale=6.0,
                                   centripetal_gain=0.3 / 60,
                                   seed=rng.derive_seed(args.seed, "demo-blur"))
    degr = DegradationConfig(noise_std=0.005, kernel_size=17,
                             seed=rng.derive_seed(args.seed, "demo-blur"))
    manifest = blur_corpus(sharp_dir, blur_dir, traj_config, degr)

    overrides = {
        "variant": "lsgan", "epochs": str(args.epochs), "batch_size": "8",
        "crop_size": "32", "lr_g": "2e-3", "lr_d": "2e-3",
        # pixel-space content anchors PSNR at desk scale
        "content_extractor": "identity", "content_weight": "100",
        "g_base_channels": "8", "g_res_blocks": "2", "d_base_channels": "8",
        "seed": str(args.seed),
        "checkpoint_dir": str(out / "ckpt"),
        "log_path": str(out / "loss_log.csv"),
    }
    cfg = load_train_config(None, overrides)
    dataset = PairDataset.from_manifest(manifest)
    last, best, log = train(dataset, cfg)

    blurred_psnr, blurred_ssim = [], []
    restored_psnr, restored_ssim = [], []
    for blurred_path, sharp_path in dataset.rows:
        sharp = imageio.load_image(sharp_path)
        blurred = imageio.load_image(blurred_path)
        out_path = restored_dir / Path(blurred_path).name
        restored_img = restore(blurred_path, last, out_path)
        blurred_psnr.append(metrics.psnr(blurred, sharp))
        blurred_ssim.append(metrics.ssim(blurred, sharp))
        restored_img = imageio.load_image(out_path)
        restored_psnr.append(metrics.psnr(restored_img, sharp))
        restored_ssim.append(metrics.ssim(restored_img, sharp))

    rows = [
        {"name": "sharp", "psnr": metrics.PSNR_CAP, "ssim": 1.0},
        {"name": "blurred", "psnr": float(np.mean(blurred_psnr)),
         "ssim": float(np.mean(blurred_ssim))},
        {"name": "restored", "psnr": float(np.mean(restored_psnr)),
         "ssim": float(np.mean(restored_ssim))},
    ]
    table = metrics.report(rows, csv_path=out / "report.csv")
    (out / "report.txt").write_text(table)
    print(table, end="")
    print(f"demo complete in {out} (backend: {backend.name})")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="blurlab",
        description="Motion-blur synthesis, adversarial deblurring, and "
                    "detection-metric evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-kernel", help="write a PSF1 blur kernel")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=31)
    p.add_argument("--samples-per-segment", type=int, default=2)
    p.add_argument("--out", required=True)
    p.add_argument("--png", default=None, help="also write a grayscale preview")
    _add_trajectory_flags(p)
    p.set_defaults(func=cmd_make_kernel)

    p = sub.add_parser("blur", help="blur a directory of images")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", dest="out_dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-std", type=float, default=0.01)
    p.add_argument("--kernel-size", type=int, default=31)
    p.add_argument("--kernel", default=None, help="fixed PSF1 kernel file")
    _add_trajectory_flags(p)
    p.set_defaults(func=cmd_blur)

    p = sub.add_parser("train", help="train a deblurring generator")
    p.add_argument("--pairs", required=True, help="manifest CSV of image pairs")
    p.add_argument("--variant", choices=["gan", "lsgan", "wgan", "wgan-gp"])
    p.add_argument("--config", default=None, help="flat key=value config file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any config key")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("restore", help="deblur one image with a checkpoint")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_restore)

    p = sub.add_parser("eval", help="score detection files against ground truth")
    p.add_argument("--truth", required=True)
    p.add_argument("--detections", nargs="+", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--iou-thresh", type=float, default=0.5)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference gradient suite")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("demo", help="end-to-end desk-scale run")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--epochs", type=int, default=300)
    p.set_defaults(func=cmd_demo)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BlurlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
