import numpy as np
import pytest

from shuffledet.errors import EngineError
from shuffledet.files import (
    detections_to_records,
    load_image,
    read_annotations_csv,
    read_detections_json,
    save_image,
    write_annotations_csv,
    write_detections_json,
)
from shuffledet.postprocess import Detection


def test_image_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    img = rng.integers(0, 255, (20, 30, 3)).astype(np.uint8)
    path = tmp_path / "img.png"
    save_image(path, img)
    loaded = load_image(path)
    assert np.array_equal(loaded, img)


def test_load_image_missing(tmp_path):
    with pytest.raises((EngineError, OSError)):
        load_image(tmp_path / "nope.png")


def test_annotations_round_trip(tmp_path):
    gts = {
        "a": [((0.0, 1.0, 10.0, 11.0), 1), ((5.0, 5.0, 9.0, 9.0), 1)],
        "b": [((2.0, 2.0, 4.0, 4.0), 2)],
    }
    path = tmp_path / "gt.csv"
    write_annotations_csv(path, gts)
    assert read_annotations_csv(path) == gts


def test_annotations_header_optional(tmp_path):
    path = tmp_path / "gt.csv"
    path.write_text("img1,0,0,5,5,1\nimg1,10,10,20,20,1\n")
    out = read_annotations_csv(path)
    assert len(out["img1"]) == 2


def test_annotations_bad_row(tmp_path):
    path = tmp_path / "gt.csv"
    path.write_text("img1,0,0,5\n")
    with pytest.raises(EngineError):
        read_annotations_csv(path)


def test_detections_json_round_trip(tmp_path):
    dets = [Detection(1, 0.75, 1.0, 2.0, 3.0, 4.0),
            Detection(1, 0.25, 5.0, 6.0, 7.0, 8.0)]
    records = detections_to_records(dets, "imgX")
    assert records[0]["class"] == 1 and records[0]["image_id"] == "imgX"
    path = tmp_path / "dets.json"
    write_detections_json(path, records)
    loaded = read_detections_json(path)
    assert loaded["imgX"] == dets


def test_detections_json_schema_errors(tmp_path):
    path = tmp_path / "dets.json"
    path.write_text('{"not": "a list"}')
    with pytest.raises(EngineError):
        read_detections_json(path)
    path.write_text('[{"image_id": "a"}]')
    with pytest.raises(EngineError):
        read_detections_json(path)
