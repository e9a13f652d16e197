"""Detection-based evaluation (IoU, recall, false positives, failure rate,
confidence mean) plus PSNR/SSIM restoration metrics and report emission.

Detection records travel as JSON Lines: one {"id": ..., "boxes":
[[x, y, w, h, confidence], ...]} object per line; ground truth uses the
same format with confidence 1.0.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError, DimensionError

PSNR_CAP = 99.0


@dataclass(frozen=True)
class DetectionBox:
    x: float
    y: float
    w: float
    h: float
    confidence: float = 1.0

    def validate(self):
        if self.w <= 0 or self.h <= 0:
            raise ConfigError("box width/height must be positive")
        if not 0.0 <= self.confidence <= 1.0:
            raise ConfigError("confidence must lie in [0, 1]")

    def area(self):
        return self.w * self.h


@dataclass(frozen=True)
class DetectionRecord:
    image_id: str
    boxes: list = field(default_factory=list)

    def validate(self):
        if not self.image_id:
            raise ConfigError("image id must be nonempty")
        for box in self.boxes:
            box.validate()


def iou(a: DetectionBox, b: DetectionBox) -> float:
    """Intersection over union; 0 for disjoint boxes."""
    ix = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    iy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area() + b.area() - inter)


def match_and_score(detections, truth, iou_thresh=0.5):
    """Greedy confidence-descending matching against ground truth.

    A detection matches the unmatched truth box of highest IoU when that
    IoU is strictly greater than the threshold; IoU ties break toward the
    lower truth index. Returns a dict with recall, false_positives
    (absolute count), failure_rate (fraction of images with no matched
    truth), and confidence_mean over matched detections.
    """
    truth_by_id = {rec.image_id: rec for rec in truth}
    if not truth_by_id:
        raise ConfigError("empty truth set")
    det_by_id = {}
    for rec in detections:
        if rec.image_id not in truth_by_id:
            raise ConfigError(f"unknown image id {rec.image_id!r}")
        det_by_id[rec.image_id] = rec

    total_truths = 0
    matched_truths = 0
    false_positives = 0
    failed_images = 0
    matched_confidences = []

    for image_id in sorted(truth_by_id):
        t_boxes = truth_by_id[image_id].boxes
        d_boxes = det_by_id[image_id].boxes if image_id in det_by_id else []
        total_truths += len(t_boxes)
        taken = [False] * len(t_boxes)
        image_matches = 0
        order = sorted(range(len(d_boxes)),
                       key=lambda i: (-d_boxes[i].confidence, i))
        for i in order:
            best_j, best_iou = -1, iou_thresh
            for j, tb in enumerate(t_boxes):
                if taken[j]:
                    continue
                v = iou(d_boxes[i], tb)
                if v > best_iou:
                    best_j, best_iou = j, v
            if best_j >= 0:
                taken[best_j] = True
                image_matches += 1
                matched_confidences.append(d_boxes[i].confidence)
            else:
                false_positives += 1
        matched_truths += image_matches
        if image_matches == 0:
            failed_images += 1

    n_images = len(truth_by_id)
    return {
        "recall": matched_truths / total_truths if total_truths else 0.0,
        "false_positives": false_positives,
        "failure_rate": failed_images / n_images,
        "confidence_mean": float(np.mean(matched_confidences)) if matched_confidences else 0.0,
    }


def _to_unit(img):
    return (np.asarray(img, dtype=np.float64) + 1.0) / 2.0


def psnr(img, ref) -> float:
    """Peak signal-to-noise ratio in dB; identical images report 99 dB."""
    if np.shape(img) != np.shape(ref):
        raise DimensionError("psnr shape mismatch")
    mse = float(((_to_unit(img) - _to_unit(ref)) ** 2).mean())
    if mse == 0.0:
        return PSNR_CAP
    return min(10.0 * np.log10(1.0 / mse), PSNR_CAP)


def ssim(img, ref, window=8, c1=0.01 ** 2, c2=0.03 ** 2) -> float:
    """Mean structural similarity over sliding windows (uniform weighting)."""
    if np.shape(img) != np.shape(ref):
        raise DimensionError("ssim shape mismatch")
    a = _to_unit(img)
    b = _to_unit(ref)
    if a.ndim == 2:
        a, b = a[None], b[None]
    if a.shape[1] < window or a.shape[2] < window:
        raise DimensionError(f"image smaller than {window}x{window} ssim window")
    values = []
    for c in range(a.shape[0]):
        wa = sliding_window_view(a[c], (window, window)).reshape(-1, window * window)
        wb = sliding_window_view(b[c], (window, window)).reshape(-1, window * window)
        mu_a = wa.mean(axis=1)
        mu_b = wb.mean(axis=1)
        var_a = wa.var(axis=1)
        var_b = wb.var(axis=1)
        cov = (wa * wb).mean(axis=1) - mu_a * mu_b
        num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
        den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
        values.append(num / den)
    return float(np.concatenate(values).mean())


def load_detections(path):
    """Read a JSON Lines detection file."""
    records = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            boxes = [DetectionBox(*vals) for vals in obj["boxes"]]
            rec = DetectionRecord(image_id=obj["id"], boxes=boxes)
            rec.validate()
            records.append(rec)
    return records


def save_detections(records, path):
    with open(path, "w", newline="\n") as f:
        for rec in records:
            boxes = [[b.x, b.y, b.w, b.h, b.confidence] for b in rec.boxes]
            f.write(json.dumps({"id": rec.image_id, "boxes": boxes}) + "\n")


REPORT_COLUMNS = ("name", "failure_rate", "confidence_mean", "recall",
                  "false_positives", "psnr", "ssim")


def report(rows, csv_path=None) -> str:
    """Emit a comparison table (aligned text; optionally CSV to a file).

    Each row is a dict with any of the REPORT_COLUMNS keys; missing values
    render empty.
    """
    def fmt(value):
        if value is None:
            return ""
        if isinstance(value, float):
            return f"{value:.4f}"
        return str(value)

    table = [[fmt(row.get(col)) for col in REPORT_COLUMNS] for row in rows]
    if csv_path is not None:
        with open(csv_path, "w", newline="\n") as f:
            f.write(",".join(REPORT_COLUMNS) + "\n")
            for cells in table:
                f.write(",".join(cells) + "\n")
    widths = [max(len(col), *(len(cells[i]) for cells in table)) if table else len(col)
              for i, col in enumerate(REPORT_COLUMNS)]
    lines = ["  ".join(col.ljust(w) for col, w in zip(REPORT_COLUMNS, widths))]
    for cells in table:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(cells, widths)))
    return "\n".join(lines) + "\n"
