"""Classification training of the CAM network on one label space."""

from __future__ import annotations

import time
from typing import Dict, List, Sequence, Tuple

import numpy as np
import torch
from torch import nn
from torch.utils.data import DataLoader, Dataset

from carloc.camnet.model import CamModelSpec, CamWeights, TrainConfig, build_network
from carloc.camnet.preprocess import load_image, preprocess_eval, preprocess_train
from carloc.config import get_settings
from carloc.core.errors import LabelMismatch, UnreadableImage
from carloc.ingest.manifest import DatasetManifest
from carloc.labeling.assignment import LabelAssignment
from carloc.utils.logger import get_logger

logger = get_logger(__name__)


class TrainImages(Dataset):
    """(path, label) pairs; augmentation randomness depends only on (seed, epoch, index)."""

    def __init__(self, items: Sequence[Tuple[str, str, int]], crop_size: int, seed: int) -> None:
        self.items = list(items)
        self.crop_size = crop_size
        self.seed = seed
        self.epoch = 0

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, index: int) -> Tuple[torch.Tensor, int]:
        image_id, path, label = self.items[index]
        try:
            image = load_image(path)
        except (OSError, ValueError) as exc:
            raise UnreadableImage(image_id, str(exc)) from exc
        rng = np.random.default_rng([self.seed, self.epoch, index])
        return preprocess_train(image, self.crop_size, rng), label


def _training_items(manifest: DatasetManifest, labels: LabelAssignment, spec: CamModelSpec) -> List[Tuple[str, str, int]]:
    if spec.num_classes != labels.num_classes:
        raise LabelMismatch(
            f"model has {spec.num_classes} classes but label space {labels.space_name!r} has {labels.num_classes}"
        )
    train_ids = manifest.ids("train")
    missing = [image_id for image_id in train_ids if image_id not in labels.mapping]
    if missing:
        raise LabelMismatch(f"{len(missing)} train images lack a {labels.space_name!r} label, e.g. {missing[:5]}")
    return [(image_id, manifest.image(image_id).path, labels.mapping[image_id]) for image_id in train_ids]


@torch.no_grad()
def fit_accuracy(net: nn.Module, items: Sequence[Tuple[str, str, int]], device: str) -> float:
    """Eval-mode top-1 accuracy on the full, un-augmented training images."""

    net.eval()
    correct = 0
    for image_id, path, label in items:
        try:
            image = load_image(path)
        except (OSError, ValueError) as exc:
            raise UnreadableImage(image_id, str(exc)) from exc
        original, _ = preprocess_eval(image)
        correct += int(int(net(original[None].to(device)).argmax(dim=1)[0]) == label)
    return correct / max(1, len(items))


def train(manifest: DatasetManifest, labels: LabelAssignment, spec: CamModelSpec, cfg: TrainConfig) -> CamWeights:
    """Fit GAP -> linear -> softmax cross-entropy on the train split; frozen stages never move."""

    items = _training_items(manifest, labels, spec)
    settings = get_settings()
    device = settings.torch_device()

    net = build_network(spec, cfg.seed).to(device)
    net.freeze(spec.frozen_stages)
    params = [p for p in net.parameters() if p.requires_grad]
    optimizer = torch.optim.SGD(params, lr=cfg.learning_rate, momentum=cfg.momentum, weight_decay=cfg.weight_decay)
    criterion = nn.CrossEntropyLoss()

    dataset = TrainImages(items, cfg.crop_size, cfg.seed)
    order = torch.Generator().manual_seed(cfg.seed)
    loader = DataLoader(
        dataset,
        batch_size=cfg.batch_size,
        shuffle=True,
        generator=order,
        num_workers=settings.num_workers,
        drop_last=False,
    )

    logger.info(
        "Training %s on %s: %d images, %d classes, %d epochs, device=%s",
        spec.backbone,
        labels.space_name,
        len(dataset),
        spec.num_classes,
        cfg.epochs,
        device,
    )
    history: List[Dict[str, float]] = []
    for epoch in range(cfg.epochs):
        dataset.epoch = epoch
        net.train()
        net.hold_frozen_in_eval(spec.frozen_stages)
        start = time.perf_counter()
        total_loss, correct, seen = 0.0, 0, 0
        for images, targets in loader:
            images, targets = images.to(device), targets.to(device)
            optimizer.zero_grad(set_to_none=True)
            logits = net(images)
            loss = criterion(logits, targets)
            loss.backward()
            optimizer.step()
            total_loss += float(loss.item()) * len(targets)
            correct += int((logits.argmax(dim=1) == targets).sum().item())
            seen += len(targets)
        record = {"epoch": epoch + 1, "loss": total_loss / max(1, seen), "accuracy": correct / max(1, seen)}
        history.append(record)
        logger.info(
            "epoch %d/%d loss=%.4f train_acc=%.4f (%.1fs)",
            epoch + 1,
            cfg.epochs,
            record["loss"],
            record["accuracy"],
            time.perf_counter() - start,
        )

    final_accuracy = fit_accuracy(net, items, device)
    logger.info("Training accuracy in eval mode: %.4f", final_accuracy)

    state = {key: value.detach().cpu().clone() for key, value in net.state_dict().items()}
    return CamWeights(
        spec=spec,
        state_dict=state,
        label_space=labels.space_name,
        vocab=labels.vocab,
        epochs=cfg.epochs,
        seed=cfg.seed,
        history=tuple(history),
        final_accuracy=final_accuracy,
    )
