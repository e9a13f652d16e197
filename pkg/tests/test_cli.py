import csv
import json

import numpy as np
import pytest

from blurlab import imageio
from blurlab.cli import main
from blurlab.degradation import convolve
from blurlab.psf import load_kernel

FAST_TRAJ = ["--iterations", "60", "--max-length", "10",
             "--centripetal-gain", "0.005"]


def test_make_kernel_deterministic(tmp_path):
    k1 = tmp_path / "a.psf"
    k2 = tmp_path / "b.psf"
    for out in (k1, k2):
        rc = main(["make-kernel", "--seed", "4", "--size", "21",
                   "--out", str(out)] + FAST_TRAJ)
        assert rc == 0
    assert k1.read_bytes() == k2.read_bytes()


def test_make_kernel_even_size_exits_2(tmp_path):
    rc = main(["make-kernel", "--size", "20",
               "--out", str(tmp_path / "x.psf")] + FAST_TRAJ)
    assert rc == 2


def test_make_kernel_png_preview(tmp_path):
    png = tmp_path / "k.png"
    rc = main(["make-kernel", "--seed", "1", "--size", "15",
               "--out", str(tmp_path / "k.psf"), "--png", str(png)] + FAST_TRAJ)
    assert rc == 0
    assert png.read_bytes().startswith(b"\x89PNG")


def test_make_kernel_reload_convolve_round_trip(tmp_path):
    out = tmp_path / "k.psf"
    assert main(["make-kernel", "--seed", "2", "--size", "15",
                 "--out", str(out)] + FAST_TRAJ) == 0
    kernel = load_kernel(out)
    assert kernel.weights.sum() == pytest.approx(1.0, abs=1e-6)
    # convolving a constant image with the reloaded kernel is the identity
    x = np.full((1, 1, 20, 20), 0.25)
    y = convolve(x, kernel, "reflect")
    np.testing.assert_allclose(y, x, atol=1e-9)


def test_blur_command_writes_manifest(tmp_path):
    in_dir = tmp_path / "sharp"
    in_dir.mkdir()
    gen = np.random.default_rng(0)
    for i in range(3):
        imageio.save_image(gen.uniform(-0.8, 0.8, size=(3, 24, 24)),
                           in_dir / f"f{i}.png")
    out_dir = tmp_path / "blurred"
    rc = main(["blur", "--in", str(in_dir), "--out", str(out_dir),
               "--seed", "3", "--kernel-size", "13"] + FAST_TRAJ)
    assert rc == 0
    rows = list(csv.DictReader(open(out_dir / "manifest.csv")))
    assert len(rows) == 3
    for row in rows:
        assert (out_dir / row["blurred"].rsplit("/", 1)[-1]).exists()


def test_eval_command(tmp_path):
    truth = tmp_path / "truth.jsonl"
    det = tmp_path / "model.jsonl"
    truth.write_text(json.dumps(
        {"id": "img0", "boxes": [[0, 0, 10, 10, 1.0]]}) + "\n")
    det.write_text(json.dumps(
        {"id": "img0", "boxes": [[1, 1, 10, 10, 0.9]]}) + "\n")
    report = tmp_path / "report.csv"
    rc = main(["eval", "--truth", str(truth), "--detections", str(det),
               "--report", str(report)])
    assert rc == 0
    rows = list(csv.DictReader(open(report)))
    assert rows[0]["name"] == "model"
    assert float(rows[0]["recall"]) == 1.0
    assert float(rows[0]["confidence_mean"]) == pytest.approx(0.9)


def test_eval_unknown_id_exits_2(tmp_path):
    truth = tmp_path / "truth.jsonl"
    det = tmp_path / "d.jsonl"
    truth.write_text(json.dumps({"id": "a", "boxes": [[0, 0, 1, 1, 1.0]]}) + "\n")
    det.write_text(json.dumps({"id": "zzz", "boxes": []}) + "\n")
    rc = main(["eval", "--truth", str(truth), "--detections", str(det),
               "--report", str(tmp_path / "r.csv")])
    assert rc == 2


def test_restore_missing_checkpoint_exits_1(tmp_path):
    img = tmp_path / "x.png"
    imageio.save_image(np.zeros((3, 8, 8)), img)
    rc = main(["restore", "--in", str(img), "--ckpt",
               str(tmp_path / "missing.ckpt"), "--out", str(tmp_path / "y.png")])
    assert rc == 1


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def test_gradcheck_command_passes(capsys):
    assert main(["gradcheck", "--seed", "0"]) == 0
    out = capsys.readouterr().out
    assert "worst" in out and "FAIL" not in out
