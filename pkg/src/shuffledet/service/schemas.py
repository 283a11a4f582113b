"""Pydantic request/response models for the detection service."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, model_validator


class DetectionOut(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    image_id: str
    class_id: int = Field(alias="class")
    score: float
    xmin: float
    ymin: float
    xmax: float
    ymax: float


class GroundTruthBox(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    image_id: str
    xmin: float
    ymin: float
    xmax: float
    ymax: float
    class_id: int = Field(alias="class", default=1)


class DetectRequest(BaseModel):
    config: dict | None = None
    config_path: str | None = None
    weights_path: str | None = None
    seed: int = 0
    image_path: str | None = None
    image_b64: str | None = None
    image_id: str = "image"
    tile: bool = False
    tile_overlap: int = 100
    conf_threshold: float = 0.5
    nms_threshold: float = 0.3

    @model_validator(mode="after")
    def _one_image_source(self):
        if (self.image_path is None) == (self.image_b64 is None):
            raise ValueError("provide exactly one of image_path or image_b64")
        if self.config is not None and self.config_path is not None:
            raise ValueError("provide config inline or by path, not both")
        return self


class DetectResponse(BaseModel):
    image_id: str
    count: int
    detections: list[DetectionOut]


class FlopsRequest(BaseModel):
    config: dict | None = None
    config_path: str | None = None
    ablation_grid: bool = False
    include_layers: bool = False


class AblationRowOut(BaseModel):
    label: str
    gflops: float
    total_flops: int
    total_params: int
    dab_enabled: list[bool]


class FlopsResponse(BaseModel):
    full_gflops: float
    baseline_gflops: float
    delta_gflops: float
    full_params: int
    baseline_params: int
    published_full_gflops: float
    published_baseline_gflops: float
    table: str
    layers: list[dict] | None = None
    ablation: list[AblationRowOut] | None = None


class PriorsRequest(BaseModel):
    config: dict | None = None
    config_path: str | None = None


class TapPriors(BaseModel):
    name: str
    height: int
    width: int
    boxes_per_location: int
    count: int


class PriorsResponse(BaseModel):
    taps: list[TapPriors]
    total: int
    published_total: int
    note: str


class EvalRequest(BaseModel):
    detections: list[DetectionOut] | None = None
    detections_path: str | None = None
    ground_truth: list[GroundTruthBox] | None = None
    ground_truth_path: str | None = None
    ap: bool = False
    iou_threshold: float = 0.5

    @model_validator(mode="after")
    def _one_source_each(self):
        if (self.detections is None) == (self.detections_path is None):
            raise ValueError("provide detections inline or by path")
        if (self.ground_truth is None) == (self.ground_truth_path is None):
            raise ValueError("provide ground truth inline or by path")
        return self


class PerImageCount(BaseModel):
    image_id: str
    predicted: int
    actual: int


class EvalResponse(BaseModel):
    mae: float
    rmse: float
    ap: float | None = None
    per_image: list[PerImageCount]


class SelftestResponse(BaseModel):
    passed: bool
    checks: list[dict]
