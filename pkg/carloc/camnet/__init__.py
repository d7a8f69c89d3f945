"""CAM-constrained classifier: preprocessing, training and heatmap inference."""

from carloc.camnet.heatmap import Heatmap, export_pgm, load_heatmap, save_heatmap
from carloc.camnet.infer import CamInferencer, infer_heatmap, infer_split
from carloc.camnet.model import (
    CamModelSpec,
    CamNetwork,
    CamWeights,
    TrainConfig,
    build_network,
    cam_map,
    load_checkpoint,
    save_checkpoint,
)
from carloc.camnet.preprocess import load_image, preprocess_eval, preprocess_train
from carloc.camnet.train import train

__all__ = [
    "CamInferencer",
    "CamModelSpec",
    "CamNetwork",
    "CamWeights",
    "Heatmap",
    "TrainConfig",
    "build_network",
    "cam_map",
    "export_pgm",
    "infer_heatmap",
    "infer_split",
    "load_checkpoint",
    "load_heatmap",
    "load_image",
    "preprocess_eval",
    "preprocess_train",
    "save_checkpoint",
    "save_heatmap",
    "train",
]
