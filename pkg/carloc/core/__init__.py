"""Shared domain types and rectangle geometry."""

from carloc.core.geometry import (
    BBox,
    ImageRef,
    bbox_area,
    bbox_from_json,
    bbox_intersection_area,
    bbox_iou,
    bbox_to_json,
    clip_bbox,
    config_digest,
    make_bbox,
    whole_image_box,
)

__all__ = [
    "BBox",
    "ImageRef",
    "bbox_area",
    "bbox_from_json",
    "bbox_intersection_area",
    "bbox_iou",
    "bbox_to_json",
    "clip_bbox",
    "config_digest",
    "make_bbox",
    "whole_image_box",
]
