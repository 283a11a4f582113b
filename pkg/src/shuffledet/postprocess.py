"""Score thresholding, greedy NMS, and large-image tiling.

NMS is greedy per class: detections are visited in descending score order
(ties broken by lower input index) and kept only when their IoU with every
previously kept box stays at or below the threshold.  The output lists kept
detections per class id, each class in that visiting order, which makes the
result independent of the input ordering for distinct scores.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .network import HeadOutput, flatten_head
from .priors import DEFAULT_VARIANCES, PriorSet, decode_boxes


@dataclass(frozen=True)
class Detection:
    """One scored box in pixel coordinates of its source image."""

    class_id: int
    score: float
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    @property
    def box(self) -> tuple[float, float, float, float]:
        return (self.xmin, self.ymin, self.xmax, self.ymax)


@dataclass(frozen=True)
class TileWindow:
    """A crop window inside a large source image."""

    x0: int
    y0: int
    width: int
    height: int


def iou(a, b) -> float:
    """Intersection over union of two corner-form boxes."""
    ax0, ay0, ax1, ay1 = map(float, a)
    bx0, by0, bx1, by1 = map(float, b)
    if ax0 >= ax1 or ay0 >= ay1 or bx0 >= bx1 or by0 >= by1:
        raise ShapeError(f"degenerate box in iou: {a} vs {b}")
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return inter / union


def _nms_indices(boxes: np.ndarray, scores: np.ndarray, threshold: float) -> list[int]:
    """Greedy NMS over one class; returns kept indices in visiting order."""
    order = np.argsort(-scores, kind="stable")
    boxes = boxes[order]
    x0, y0, x1, y1 = boxes[:, 0], boxes[:, 1], boxes[:, 2], boxes[:, 3]
    areas = (x1 - x0) * (y1 - y0)
    kept: list[int] = []
    alive = np.ones(len(order), bool)
    for i in range(len(order)):
        if not alive[i]:
            continue
        kept.append(int(order[i]))
        idx = np.nonzero(alive[i + 1:])[0] + i + 1
        if idx.size == 0:
            break
        iw = np.minimum(x1[i], x1[idx]) - np.maximum(x0[i], x0[idx])
        ih = np.minimum(y1[i], y1[idx]) - np.maximum(y0[i], y0[idx])
        inter = np.clip(iw, 0, None) * np.clip(ih, 0, None)
        overlap = inter / (areas[i] + areas[idx] - inter)
        alive[idx[overlap > threshold]] = False
    return kept


def nms(dets: list[Detection], iou_threshold: float = 0.3) -> list[Detection]:
    """Per-class greedy suppression; see module docstring for ordering."""
    by_class: dict[int, list[tuple[int, Detection]]] = {}
    for i, d in enumerate(dets):
        by_class.setdefault(d.class_id, []).append((i, d))
    out: list[Detection] = []
    for cid in sorted(by_class):
        items = by_class[cid]
        boxes = np.array([d.box for _, d in items], np.float64)
        scores = np.array([d.score for _, d in items], np.float64)
        for ki in _nms_indices(boxes, scores, iou_threshold):
            out.append(items[ki][1])
    return out


def run_postprocess(head: HeadOutput, priors: PriorSet,
                    conf_threshold: float = 0.5, nms_threshold: float = 0.3,
                    image_dims: tuple[int, int] = (512, 512),
                    variances: tuple[float, float] = DEFAULT_VARIANCES) -> list[Detection]:
    """Turn raw head tensors into pixel-space detections.

    Softmax over classes per prior, drop background, keep scores at or above
    the confidence threshold, decode against the priors, scale to pixels of
    `image_dims` = (width, height), then per-class NMS.
    """
    loc, conf = flatten_head(head)
    if loc.shape[0] != len(priors):
        raise ShapeError(
            f"head predicts {loc.shape[0]} priors, prior set has {len(priors)}"
        )
    img_w, img_h = image_dims
    z = conf - conf.max(axis=1, keepdims=True)
    ez = np.exp(z)
    probs = ez / ez.sum(axis=1, keepdims=True)

    dets: list[Detection] = []
    for cid in range(1, head.num_classes):
        scores = probs[:, cid]
        keep = scores >= conf_threshold
        if not keep.any():
            continue
        corners = decode_boxes(loc[keep], priors.boxes[keep], variances)
        corners = corners * np.array([img_w, img_h, img_w, img_h], np.float64)
        for (x0, y0, x1, y1), s in zip(corners, scores[keep]):
            if x1 <= x0 or y1 <= y0:
                continue
            dets.append(Detection(cid, float(s), float(x0), float(y0),
                                  float(x1), float(y1)))
    return nms(dets, nms_threshold)


def _axis_origins(length: int, tile: int, stride: int) -> list[int]:
    if length <= tile:
        return [0]
    n_regular = -(-(length - tile) // stride)        # ceil
    origins = [k * stride for k in range(n_regular)]
    origins.append(length - tile)
    return origins


def plan_tiles(img_w: int, img_h: int, tile: int = 512,
               overlap: int = 100) -> list[TileWindow]:
    """Cover an image with tile x tile windows overlapping by >= `overlap`.

    Windows advance by tile - overlap; the final window per axis is shifted
    back so it ends exactly at the image edge.  Images smaller than the tile
    yield a single window of the image size.
    """
    if img_w < 1 or img_h < 1:
        raise ShapeError("image dimensions must be positive")
    if not 0 <= overlap < tile:
        raise ShapeError(f"need 0 <= overlap < tile, got overlap={overlap}, tile={tile}")
    stride = tile - overlap
    xs = _axis_origins(img_w, tile, stride)
    ys = _axis_origins(img_h, tile, stride)
    w = min(tile, img_w)
    h = min(tile, img_h)
    return [TileWindow(x, y, w, h) for y in ys for x in xs]


def merge_tiles(per_tile: list[tuple[TileWindow, list[Detection]]],
                nms_threshold: float = 0.3) -> list[Detection]:
    """Translate per-tile detections into image space and apply global NMS."""
    merged: list[Detection] = []
    for window, dets in per_tile:
        for d in dets:
            if (d.xmin < -1e-6 or d.ymin < -1e-6
                    or d.xmax > window.width + 1e-6
                    or d.ymax > window.height + 1e-6):
                raise ShapeError(
                    f"detection {d.box} outside its {window.width}x{window.height} tile"
                )
            merged.append(Detection(
                d.class_id, d.score,
                d.xmin + window.x0, d.ymin + window.y0,
                d.xmax + window.x0, d.ymax + window.y0,
            ))
    return nms(merged, nms_threshold)
