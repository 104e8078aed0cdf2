"""Annotation manifest schema: one JSON array of records per corpus.

Each record names an image and lists instances carrying a polygon, a
point, or both; ``care=false`` marks regions excluded from evaluation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DegeneratePolygon, SchemaError
from .geometry import Point2, Polygon


@dataclass
class InstanceRecord:
    polygon: Polygon | None = None
    point: Point2 | None = None
    text: str | None = None
    care: bool = True

    def __post_init__(self):
        if self.polygon is None and self.point is None:
            raise SchemaError("instance needs a polygon or a point")
        if self.polygon is not None and self.polygon.care != self.care:
            self.polygon = Polygon(self.polygon.vertices, care=self.care)


@dataclass
class AnnotationRecord:
    image_path: str
    instances: list[InstanceRecord] = field(default_factory=list)


def _instance_to_dict(inst: InstanceRecord) -> dict:
    return {
        "polygon": [[p.x, p.y] for p in inst.polygon.vertices] if inst.polygon else None,
        "point": [inst.point.x, inst.point.y] if inst.point else None,
        "text": inst.text,
        "care": inst.care,
    }


def _instance_from_dict(obj, where: str) -> InstanceRecord:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: instance must be an object")
    poly_raw = obj.get("polygon")
    point_raw = obj.get("point")
    text = obj.get("text")
    care = obj.get("care", True)
    if poly_raw is None and point_raw is None:
        raise SchemaError(f"{where}: instance needs a polygon or a point")
    if text is not None and not isinstance(text, str):
        raise SchemaError(f"{where}: text must be a string or null")
    if not isinstance(care, bool):
        raise SchemaError(f"{where}: care must be a boolean")
    polygon = None
    if poly_raw is not None:
        if not isinstance(poly_raw, list) or len(poly_raw) < 3:
            raise SchemaError(f"{where}: polygon needs >= 3 vertices")
        try:
            pts = tuple(Point2(float(x), float(y)) for x, y in poly_raw)
            polygon = Polygon(pts, care=care)
        except (TypeError, ValueError, DegeneratePolygon) as exc:
            raise SchemaError(f"{where}: bad polygon ({exc})") from exc
    point = None
    if point_raw is not None:
        try:
            x, y = point_raw
            point = Point2(float(x), float(y))
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{where}: bad point ({exc})") from exc
    return InstanceRecord(polygon, point, text, care)


def save_manifest(path, records: list[AnnotationRecord]) -> None:
    payload = [
        {"image_path": r.image_path, "instances": [_instance_to_dict(i) for i in r.instances]}
        for r in records
    ]
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_manifest(path) -> list[AnnotationRecord]:
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    if not isinstance(payload, list):
        raise SchemaError("manifest must be a JSON array of records")
    records = []
    for idx, obj in enumerate(payload):
        where = f"record {idx}"
        if not isinstance(obj, dict) or not isinstance(obj.get("image_path"), str):
            raise SchemaError(f"{where}: missing image_path")
        raw_instances = obj.get("instances")
        if not isinstance(raw_instances, list):
            raise SchemaError(f"{where}: instances must be a list")
        instances = [
            _instance_from_dict(o, f"{where} instance {j}") for j, o in enumerate(raw_instances)
        ]
        records.append(AnnotationRecord(obj["image_path"], instances))
    return records
