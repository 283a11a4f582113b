"""File ingestion and serialization: PNG images, annotation CSV, detection JSON.

Annotation CSV schema, one row per box (an optional header row is skipped):
    image_id,xmin,ymin,xmax,ymax,class
Detections serialize as a JSON array of objects with keys
    image_id, class, score, xmin, ymin, xmax, ymax
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import EngineError, ShapeError
from .postprocess import Detection

CSV_HEADER = ("image_id", "xmin", "ymin", "xmax", "ymax", "class")


def load_image(path: str | Path) -> np.ndarray:
    """Read an image file as an (H, W, 3) uint8 RGB array."""
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB"))
    except (OSError, ValueError) as exc:
        raise EngineError(f"cannot read image {path}: {exc}") from exc
    if arr.size == 0:
        raise ShapeError(f"image {path} has a zero dimension")
    return arr


def save_image(path: str | Path, array: np.ndarray) -> None:
    Image.fromarray(np.asarray(array, np.uint8), "RGB").save(path)


def read_annotations_csv(path: str | Path) -> dict[str, list[tuple[tuple[float, float, float, float], int]]]:
    """Ground-truth boxes per image id: {id: [((xmin, ymin, xmax, ymax), class)]}."""
    out: dict[str, list] = {}
    with open(path, newline="") as fh:
        for row_no, row in enumerate(csv.reader(fh)):
            if not row or (row_no == 0 and row[0].strip() == "image_id"):
                continue
            if len(row) != 6:
                raise EngineError(
                    f"{path}:{row_no + 1}: expected 6 columns "
                    f"{','.join(CSV_HEADER)}, got {len(row)}"
                )
            image_id = row[0].strip()
            try:
                xmin, ymin, xmax, ymax = (float(v) for v in row[1:5])
                cls = int(row[5])
            except ValueError as exc:
                raise EngineError(f"{path}:{row_no + 1}: bad value ({exc})") from exc
            if xmax <= xmin or ymax <= ymin:
                raise ShapeError(f"{path}:{row_no + 1}: degenerate box")
            out.setdefault(image_id, []).append(((xmin, ymin, xmax, ymax), cls))
    return out


def write_annotations_csv(path: str | Path, gts_by_image: dict) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for image_id in sorted(gts_by_image):
            for (xmin, ymin, xmax, ymax), cls in gts_by_image[image_id]:
                writer.writerow([image_id, xmin, ymin, xmax, ymax, cls])


def detections_to_records(dets: list[Detection], image_id: str) -> list[dict]:
    return [
        {
            "image_id": image_id,
            "class": d.class_id,
            "score": d.score,
            "xmin": d.xmin,
            "ymin": d.ymin,
            "xmax": d.xmax,
            "ymax": d.ymax,
        }
        for d in dets
    ]


def write_detections_json(path: str | Path, records: list[dict]) -> None:
    Path(path).write_text(json.dumps(records, indent=2) + "\n")


def read_detections_json(path: str | Path) -> dict[str, list[Detection]]:
    """Detections grouped by image id."""
    try:
        records = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise EngineError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(records, list):
        raise EngineError(f"{path}: expected a JSON array of detections")
    out: dict[str, list[Detection]] = {}
    for i, rec in enumerate(records):
        try:
            det = Detection(
                class_id=int(rec["class"]),
                score=float(rec["score"]),
                xmin=float(rec["xmin"]),
                ymin=float(rec["ymin"]),
                xmax=float(rec["xmax"]),
                ymax=float(rec["ymax"]),
            )
            image_id = str(rec["image_id"])
        except (KeyError, TypeError, ValueError) as exc:
            raise EngineError(f"{path}: bad detection record {i} ({exc})") from exc
        out.setdefault(image_id, []).append(det)
    return out
