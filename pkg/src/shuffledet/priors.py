"""Prior (default) boxes, box coding, ground-truth matching, multibox loss.

Priors are generated per feature tap on a linear scale schedule between
`s_min` and `s_max`.  A tap with B=4 places boxes with aspect ratios
{1, 1 at the geometric-mean scale, 2, 1/2}; B=6 adds {3, 1/3}.  Ordering is
tap-major, then row-major over the tap grid, then box index, matching the
flattened head layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import NetworkConfig
from .errors import ShapeError
from .network import HeadOutput, flatten_head, plan_network

DEFAULT_VARIANCES = (0.1, 0.2)


@dataclass(frozen=True)
class PriorBox:
    """Center-form box normalized to [0, 1] image coordinates."""

    cx: float
    cy: float
    w: float
    h: float


class PriorSet:
    """Ordered prior boxes for every tap of a network."""

    def __init__(self, boxes: np.ndarray, per_tap_counts: list[int],
                 tap_shapes: list[tuple[int, int]], tap_boxes: list[int]):
        self.boxes = np.asarray(boxes, np.float64)          # (N, 4) center-form
        self.per_tap_counts = tuple(per_tap_counts)
        self.tap_shapes = tuple(tap_shapes)
        self.tap_boxes = tuple(tap_boxes)

    def __len__(self) -> int:
        return self.boxes.shape[0]

    def prior(self, i: int) -> PriorBox:
        cx, cy, w, h = self.boxes[i]
        return PriorBox(cx, cy, w, h)

    def corner_form(self) -> np.ndarray:
        """Boxes as (xmin, ymin, xmax, ymax), unclipped."""
        b = self.boxes
        half = b[:, 2:] / 2.0
        return np.concatenate([b[:, :2] - half, b[:, :2] + half], axis=1)


def scale_schedule(m: int, s_min: float, s_max: float) -> list[float]:
    """Per-tap scale: linear from s_min (tap 1) to s_max (tap m)."""
    if m < 2:
        raise ShapeError("scale schedule needs at least 2 taps")
    return [s_min + (s_max - s_min) * k / (m - 1) for k in range(m)]


def box_shapes_for_tap(scale: float, next_scale: float, b: int) -> list[tuple[float, float]]:
    """The B (w, h) pairs shared by every location of one tap."""
    shapes = [
        (scale, scale),
        (math.sqrt(scale * next_scale),) * 2,
        (scale * math.sqrt(2.0), scale / math.sqrt(2.0)),
        (scale / math.sqrt(2.0), scale * math.sqrt(2.0)),
    ]
    if b == 6:
        shapes.append((scale * math.sqrt(3.0), scale / math.sqrt(3.0)))
        shapes.append((scale / math.sqrt(3.0), scale * math.sqrt(3.0)))
    elif b != 4:
        raise ShapeError(f"unsupported boxes-per-location {b}")
    return shapes


def generate_priors(cfg: NetworkConfig) -> PriorSet:
    taps = plan_network(cfg).taps
    m = len(taps)
    scales = scale_schedule(m, cfg.s_min, cfg.s_max)
    all_boxes: list[np.ndarray] = []
    counts: list[int] = []
    for k, tap in enumerate(taps):
        next_scale = scales[k + 1] if k + 1 < m else 1.0
        shapes = np.array(box_shapes_for_tap(scales[k], next_scale, tap.boxes),
                          np.float64)
        h, w = tap.h, tap.w
        cx = (np.arange(w, dtype=np.float64) + 0.5) / w
        cy = (np.arange(h, dtype=np.float64) + 0.5) / h
        grid = np.empty((h, w, len(shapes), 4), np.float64)
        grid[..., 0] = cx[None, :, None]
        grid[..., 1] = cy[:, None, None]
        grid[..., 2] = shapes[None, None, :, 0]
        grid[..., 3] = shapes[None, None, :, 1]
        boxes = grid.reshape(-1, 4)
        boxes[:, :2] = np.clip(boxes[:, :2], 0.0, 1.0)
        all_boxes.append(boxes)
        counts.append(boxes.shape[0])
    return PriorSet(np.concatenate(all_boxes), counts,
                    [(t.h, t.w) for t in taps], [t.boxes for t in taps])


def _corner_to_center(box: np.ndarray) -> np.ndarray:
    box = np.asarray(box, np.float64)
    wh = box[..., 2:] - box[..., :2]
    return np.concatenate([box[..., :2] + wh / 2.0, wh], axis=-1)


def encode_boxes(gts: np.ndarray, priors: np.ndarray,
                 variances: tuple[float, float] = DEFAULT_VARIANCES) -> np.ndarray:
    """Encode corner-form boxes against center-form priors (vectorized)."""
    gts = np.asarray(gts, np.float64).reshape(-1, 4)
    priors = np.asarray(priors, np.float64).reshape(-1, 4)
    if np.any(gts[:, 2:] - gts[:, :2] <= 0):
        raise ShapeError("ground-truth box has non-positive extent")
    g = _corner_to_center(gts)
    vc, vs = variances
    t_center = (g[:, :2] - priors[:, :2]) / (priors[:, 2:] * vc)
    t_size = np.log(g[:, 2:] / priors[:, 2:]) / vs
    return np.concatenate([t_center, t_size], axis=1)


def decode_boxes(t: np.ndarray, priors: np.ndarray,
                 variances: tuple[float, float] = DEFAULT_VARIANCES) -> np.ndarray:
    """Inverse of :func:`encode_boxes`; corners clamped to [0, 1]."""
    t = np.asarray(t, np.float64).reshape(-1, 4)
    priors = np.asarray(priors, np.float64).reshape(-1, 4)
    vc, vs = variances
    center = priors[:, :2] + t[:, :2] * vc * priors[:, 2:]
    size = priors[:, 2:] * np.exp(t[:, 2:] * vs)
    corners = np.concatenate([center - size / 2.0, center + size / 2.0], axis=1)
    return np.clip(corners, 0.0, 1.0)


def encode_box(gt, prior: PriorBox,
               variances: tuple[float, float] = DEFAULT_VARIANCES) -> np.ndarray:
    p = np.array([[prior.cx, prior.cy, prior.w, prior.h]])
    return encode_boxes(np.asarray(gt).reshape(1, 4), p, variances)[0]


def decode_box(t, prior: PriorBox,
               variances: tuple[float, float] = DEFAULT_VARIANCES) -> np.ndarray:
    p = np.array([[prior.cx, prior.cy, prior.w, prior.h]])
    return decode_boxes(np.asarray(t).reshape(1, 4), p, variances)[0]


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU of corner-form boxes: (len(a), len(b))."""
    a = np.asarray(a, np.float64).reshape(-1, 4)
    b = np.asarray(b, np.float64).reshape(-1, 4)
    tl = np.maximum(a[:, None, :2], b[None, :, :2])
    br = np.minimum(a[:, None, 2:], b[None, :, 2:])
    wh = np.clip(br - tl, 0.0, None)
    inter = wh[..., 0] * wh[..., 1]
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    return np.where(union > 0, inter / union, 0.0)


@dataclass(frozen=True)
class MatchResult:
    """Per-prior match: ground-truth index or -1 for background."""

    gt_index: np.ndarray
    iou: np.ndarray

    @property
    def num_positive(self) -> int:
        return int(np.sum(self.gt_index >= 0))


def match_priors(gts: np.ndarray, priors: PriorSet,
                 iou_threshold: float = 0.5) -> MatchResult:
    """SSD matching: each gt claims its best prior unconditionally, then any
    prior whose best-gt IoU clears the threshold is matched to that gt."""
    n = len(priors)
    gts = np.asarray(gts, np.float64).reshape(-1, 4)
    if gts.shape[0] == 0:
        return MatchResult(np.full(n, -1, np.int64), np.zeros(n))
    ious = iou_matrix(priors.corner_form(), gts)       # (P, G)
    best_gt = ious.argmax(axis=1)
    best_iou = ious[np.arange(n), best_gt]
    match = np.where(best_iou >= iou_threshold, best_gt, -1)
    for gi in range(gts.shape[0]):
        pi = int(ious[:, gi].argmax())
        match[pi] = gi
        best_iou[pi] = ious[pi, gi]
    return MatchResult(match.astype(np.int64), best_iou)


@dataclass(frozen=True)
class LossReport:
    loc_loss: float
    conf_loss: float
    num_pos: int
    num_neg_mined: int


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def smooth_l1(x: np.ndarray) -> np.ndarray:
    ax = np.abs(x)
    return np.where(ax < 1.0, 0.5 * x * x, ax - 0.5)


def mine_hard_negatives(bg_loss: np.ndarray, positive: np.ndarray,
                        num_pos: int, ratio: int = 3) -> np.ndarray:
    """Indices of the min(ratio * num_pos, available) hardest negatives.

    Negatives are non-positive priors ranked by background loss, descending;
    ties resolve to the lower prior index.
    """
    candidates = np.where(~positive)[0]
    k = min(ratio * max(num_pos, 0), candidates.size)
    order = np.argsort(-bg_loss[candidates], kind="stable")
    return candidates[order[:k]]


def multibox_loss(head: HeadOutput, priors: PriorSet, gts: np.ndarray,
                  labels: np.ndarray,
                  variances: tuple[float, float] = DEFAULT_VARIANCES,
                  iou_threshold: float = 0.5,
                  neg_pos_ratio: int = 3) -> LossReport:
    """Smooth-L1 localization + cross-entropy with 3:1 hard negative mining.

    Both terms are normalized by the positive count.  With no positives the
    localization term is zero and the confidence term falls back to the mean
    over the hardest min(available, 8) negatives to stay finite;
    `num_neg_mined` reports only ratio-mined negatives.
    """
    loc_pred, conf_pred = flatten_head(head)
    if loc_pred.shape[0] != len(priors):
        raise ShapeError(
            f"head predicts {loc_pred.shape[0]} priors, prior set has {len(priors)}"
        )
    gts = np.asarray(gts, np.float64).reshape(-1, 4)
    labels = np.asarray(labels, np.int64).reshape(-1)
    if labels.shape[0] != gts.shape[0]:
        raise ShapeError("one label per ground-truth box required")
    if np.any(labels < 1) or np.any(labels >= head.num_classes):
        raise ShapeError("labels must be foreground class ids (1..classes-1)")

    match = match_priors(gts, priors, iou_threshold)
    pos = match.gt_index >= 0
    num_pos = int(pos.sum())

    log_probs = _log_softmax(conf_pred)
    per_prior_bg_loss = -log_probs[:, 0]

    if num_pos > 0:
        targets = encode_boxes(gts[match.gt_index[pos]], priors.boxes[pos],
                               variances)
        loc_loss = float(smooth_l1(loc_pred[pos] - targets).sum() / num_pos)
        mined = mine_hard_negatives(per_prior_bg_loss, pos, num_pos,
                                    neg_pos_ratio)
        pos_idx = np.where(pos)[0]
        pos_ce = -log_probs[pos_idx, labels[match.gt_index[pos_idx]]]
        conf_loss = float((pos_ce.sum() + per_prior_bg_loss[mined].sum()) / num_pos)
        return LossReport(loc_loss, conf_loss, num_pos, int(mined.size))

    neg_candidates = np.where(~pos)[0]
    k = min(neg_candidates.size, 8)
    if k == 0:
        return LossReport(0.0, 0.0, 0, 0)
    order = np.argsort(-per_prior_bg_loss[neg_candidates], kind="stable")
    fallback = float(per_prior_bg_loss[neg_candidates[order[:k]]].mean())
    return LossReport(0.0, fallback, 0, 0)
