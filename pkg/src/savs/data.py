"""Dataset directory codec.

Layout: ``root/{train,query,gallery}/images/<pid>_<clothid>_<seq>.png``
with a parallel ``masks/`` directory holding single-channel 8-bit PNGs
in the canonical 7-class label space.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

SPLITS = ("train", "query", "gallery")
FILENAME_RE = re.compile(r"^(\d+)_(\d+)_(\d+)\.png$")


@dataclass(frozen=True)
class SampleRecord:
    image_path: str
    mask_path: str
    person_id: int
    clothing_id: int
    split: str


def load_image(path) -> np.ndarray:
    """Decode an 8-bit RGB PNG to float32 (H, W, 3) in [0, 1]."""
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return arr.astype(np.float32) / 255.0


def load_mask(path) -> np.ndarray:
    """Decode a single-channel 8-bit PNG label map to int64 (H, W)."""
    with Image.open(path) as img:
        arr = np.asarray(img.convert("L"), dtype=np.uint8)
    return arr.astype(np.int64)


def save_image(path, pixels: np.ndarray) -> None:
    """Write float [0,1] or uint8 RGB pixels as an 8-bit PNG."""
    arr = np.asarray(pixels)
    if arr.dtype != np.uint8:
        arr = np.clip(np.round(arr * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(path)


def save_mask(path, labels: np.ndarray) -> None:
    Image.fromarray(np.asarray(labels, dtype=np.uint8), mode="L").save(path)


def _scan_split_dir(split_dir: Path, split: str, problems: list) -> list:
    images_dir = split_dir / "images"
    masks_dir = split_dir / "masks"
    image_names = {p.name for p in images_dir.glob("*.png")} if images_dir.is_dir() else set()
    mask_names = {p.name for p in masks_dir.glob("*.png")} if masks_dir.is_dir() else set()
    for name in sorted(image_names - mask_names):
        problems.append(f"{split}: image without mask: {name}")
    for name in sorted(mask_names - image_names):
        problems.append(f"{split}: mask without image: {name}")
    records = []
    for name in sorted(image_names & mask_names):
        match = FILENAME_RE.match(name)
        if not match:
            problems.append(f"{split}: malformed filename: {name}")
            continue
        pid, cid, _seq = (int(g) for g in match.groups())
        records.append(
            SampleRecord(
                image_path=str(images_dir / name),
                mask_path=str(masks_dir / name),
                person_id=pid,
                clothing_id=cid,
                split=split,
            )
        )
    return records


def scan_dataset(root) -> list:
    """Enumerate all samples under a dataset root, validating the layout."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root {root} does not exist")
    problems: list = []
    records: list = []
    for split in SPLITS:
        split_dir = root / split
        if split_dir.is_dir():
            records.extend(_scan_split_dir(split_dir, split, problems))
    if problems:
        raise ValueError("dataset layout errors:\n  " + "\n  ".join(problems))
    return records


def scan_flat_dir(directory) -> list:
    """Scan a single split-style directory (images/ + masks/) without a split name."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"{directory} does not exist")
    problems: list = []
    records = _scan_split_dir(directory, directory.name, problems)
    if problems:
        raise ValueError("layout errors:\n  " + "\n  ".join(problems))
    return records


class LoadedSplit:
    """A split decoded once into memory: images, semantic maps, and labels."""

    def __init__(self, records, images, sems):
        self.records = list(records)
        self.images = images
        self.sems = sems
        self.person_ids = np.array([r.person_id for r in self.records], dtype=np.int64)
        self.clothing_ids = np.array([r.clothing_id for r in self.records], dtype=np.int64)

    @classmethod
    def load(cls, records) -> "LoadedSplit":
        images = []
        sems = []
        for rec in records:
            try:
                images.append(load_image(rec.image_path))
                sems.append(load_mask(rec.mask_path))
            except OSError as exc:
                raise OSError(f"failed reading sample {rec.image_path}: {exc}") from exc
            if images[-1].shape[:2] != sems[-1].shape:
                raise ValueError(f"{rec.image_path}: image and mask sizes disagree")
        return cls(records, images, sems)

    def __len__(self) -> int:
        return len(self.records)
