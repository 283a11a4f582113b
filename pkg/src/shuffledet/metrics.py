"""Counting metrics (MAE / RMSE over per-image counts) and a VOC-style AP."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .postprocess import Detection
from .priors import iou_matrix


@dataclass(frozen=True)
class EvalSummary:
    per_image: tuple[tuple[str, int, int], ...]   # (image_id, predicted, actual)
    mae: float
    rmse: float
    ap: float | None = None


def _check_image_ids(dets_by_image: dict, gts_by_image: dict) -> list[str]:
    if set(dets_by_image) != set(gts_by_image):
        missing = set(gts_by_image) - set(dets_by_image)
        extra = set(dets_by_image) - set(gts_by_image)
        raise ShapeError(
            f"image-id sets differ (missing={sorted(missing)[:3]}, "
            f"extra={sorted(extra)[:3]})"
        )
    return sorted(gts_by_image)


def evaluate_counts(dets_by_image: dict[str, list],
                    gts_by_image: dict[str, list]) -> EvalSummary:
    """MAE and RMSE between predicted and ground-truth object counts."""
    ids = _check_image_ids(dets_by_image, gts_by_image)
    rows = []
    errs = []
    for image_id in ids:
        pred = len(dets_by_image[image_id])
        actual = len(gts_by_image[image_id])
        rows.append((image_id, pred, actual))
        errs.append(pred - actual)
    errs = np.asarray(errs, np.float64)
    mae = float(np.abs(errs).mean()) if errs.size else 0.0
    rmse = float(math.sqrt((errs ** 2).mean())) if errs.size else 0.0
    return EvalSummary(tuple(rows), mae, rmse)


def evaluate_ap(dets_by_image: dict[str, list[Detection]],
                gts_by_image: dict[str, list],
                iou_threshold: float = 0.5) -> float:
    """Average precision over all foreground detections.

    Detections are visited in descending score order; each greedily claims
    the unmatched ground-truth box in its image with the highest IoU at or
    above the threshold.  AP is the area under the interpolated
    precision-recall curve.
    """
    ids = _check_image_ids(dets_by_image, gts_by_image)
    total_gt = sum(len(gts_by_image[i]) for i in ids)
    flat: list[tuple[float, str, int]] = []
    for image_id in ids:
        for j, d in enumerate(dets_by_image[image_id]):
            flat.append((float(d.score), image_id, j))
    if not flat or total_gt == 0:
        return 0.0
    flat.sort(key=lambda t: (-t[0], t[1], t[2]))

    gt_boxes = {i: np.asarray([list(g) for g in gts_by_image[i]],
                              np.float64).reshape(-1, 4) for i in ids}
    claimed = {i: np.zeros(len(gts_by_image[i]), bool) for i in ids}
    tp = np.zeros(len(flat))
    for rank, (_, image_id, j) in enumerate(flat):
        d = dets_by_image[image_id][j]
        boxes = gt_boxes[image_id]
        if boxes.shape[0] == 0:
            continue
        ious = iou_matrix(np.array([[d.xmin, d.ymin, d.xmax, d.ymax]]), boxes)[0]
        ious[claimed[image_id]] = -1.0
        best = int(ious.argmax())
        if ious[best] >= iou_threshold:
            claimed[image_id][best] = True
            tp[rank] = 1.0

    cum_tp = np.cumsum(tp)
    recall = cum_tp / total_gt
    precision = cum_tp / np.arange(1, len(flat) + 1)
    # interpolated envelope: precision at recall r is max precision at >= r
    for i in range(len(precision) - 2, -1, -1):
        precision[i] = max(precision[i], precision[i + 1])
    ap = 0.0
    prev_r = 0.0
    for r, p in zip(recall, precision):
        ap += (r - prev_r) * p
        prev_r = r
    return float(ap)
