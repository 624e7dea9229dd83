"""Deterministic synthetic person dataset ("paper dolls").

Each person id has fixed identity attributes (head hue, build, leg
pattern, skin tone, optional belonging marker) that survive clothing
changes; each clothing variant colors the torso and pants.  Clothing
colors are deliberately confounded across ids: with probability
``confound_strength`` a variant's colors come from one shared two-color
palette, so clothing color is a trap feature.  Query and gallery splits
use held-out ids with disjoint clothing variants, forcing cross-clothing
matching.
"""

from __future__ import annotations

import colorsys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import SampleRecord, save_image, save_mask
from .encoder import ARMS, BACKGROUND, BELONGINGS, HEAD, LEGS, PANTS, TORSO

TRAIN_ID_FRACTION = 0.8


@dataclass
class SynthSpec:
    num_ids: int = 16
    clothes_per_id: int = 2
    images_per_combination: int = 4
    image_size: int = 64
    seed: int = 0
    confound_strength: float = 0.75

    def __post_init__(self):
        if min(self.num_ids, self.images_per_combination) < 1:
            raise ValueError("num_ids and images_per_combination must be positive")
        if self.clothes_per_id < 2:
            raise ValueError("need at least 2 clothing variants per id")
        if self.image_size < 32:
            raise ValueError("image_size must be at least 32")
        if not 0.0 <= self.confound_strength <= 1.0:
            raise ValueError("confound_strength must lie in [0, 1]")


def _hsv(h: float, s: float, v: float) -> np.ndarray:
    r, g, b = colorsys.hsv_to_rgb(h % 1.0, s, v)
    return np.array([round(255 * r), round(255 * g), round(255 * b)], dtype=np.uint8)


@dataclass
class _Identity:
    head_color: np.ndarray
    skin_color: np.ndarray
    leg_color: np.ndarray
    leg_color_alt: np.ndarray
    striped_legs: bool
    width_attr: float
    marker: bool
    marker_color: np.ndarray


def _draw_identities(rng: np.random.Generator, num_ids: int) -> list:
    head_perm = rng.permutation(num_ids)
    leg_perm = rng.permutation(num_ids)
    identities = []
    for i in range(num_ids):
        head_hue = (head_perm[i] + 0.5) / num_ids
        leg_hue = (leg_perm[i] + 0.5) / num_ids
        skin_hue = 0.05 + 0.06 * rng.random()
        identities.append(
            _Identity(
                head_color=_hsv(head_hue, 0.85, 0.95),
                skin_color=_hsv(skin_hue, 0.45, 0.95),
                leg_color=_hsv(leg_hue, 0.85, 0.75),
                leg_color_alt=_hsv(leg_hue, 0.85, 0.45),
                striped_legs=bool(rng.random() < 0.5),
                width_attr=float(rng.random()),
                marker=bool(rng.random() < 0.5),
                marker_color=_hsv(float(rng.random()), 1.0, 1.0),
            )
        )
    return identities


def _draw_wardrobe(rng: np.random.Generator, spec: SynthSpec) -> list:
    """Per (id, variant) torso and pants colors with the shared-palette confound."""
    palette_hue = float(rng.random())
    palette = [_hsv(palette_hue, 0.8, 0.85), _hsv(palette_hue + 0.5, 0.8, 0.85)]
    wardrobe = []
    for _pid in range(spec.num_ids):
        slots = []
        for _slot in range(2):  # torso, pants
            base = int(rng.integers(2))
            colors = []
            for cidx in range(spec.clothes_per_id):
                if rng.random() < spec.confound_strength:
                    colors.append(palette[(base + cidx) % 2])
                else:
                    colors.append(_hsv(float(rng.random()), 0.8, 0.85))
            slots.append(colors)
        wardrobe.append(slots)
    return wardrobe


def render_sample(
    size: int,
    identity: _Identity,
    torso_color: np.ndarray,
    pants_color: np.ndarray,
    background_color: np.ndarray,
    jitter: tuple = (0, 0),
):
    """Paint one person image and its exact canonical mask."""
    img = np.empty((size, size, 3), dtype=np.uint8)
    img[:] = background_color
    mask = np.full((size, size), BACKGROUND, dtype=np.uint8)
    dy, dx = jitter
    cx = size // 2 + dx

    def paint(r0, r1, c0, c1, color, cls):
        r0, r1 = max(0, r0 + dy), min(size, r1 + dy)
        c0, c1 = max(0, c0), min(size, c1)
        img[r0:r1, c0:c1] = color
        mask[r0:r1, c0:c1] = cls

    half_w = int(size * (0.14 + 0.06 * identity.width_attr))
    head_half = max(2, int(size * 0.09))
    arm_w = max(2, int(size * 0.05))
    leg_w = max(2, int(size * 0.07))

    paint(int(0.08 * size), int(0.25 * size), cx - head_half, cx + head_half,
          identity.head_color, HEAD)
    paint(int(0.25 * size), int(0.55 * size), cx - half_w, cx + half_w,
          torso_color, TORSO)
    paint(int(0.27 * size), int(0.50 * size), cx - half_w - arm_w, cx - half_w,
          identity.skin_color, ARMS)
    paint(int(0.27 * size), int(0.50 * size), cx + half_w, cx + half_w + arm_w,
          identity.skin_color, ARMS)
    paint(int(0.55 * size), int(0.72 * size), cx - half_w, cx + half_w,
          pants_color, PANTS)
    leg_r0, leg_r1 = int(0.72 * size), int(0.93 * size)
    for c0, c1 in ((cx - half_w, cx - half_w + leg_w), (cx + half_w - leg_w, cx + half_w)):
        paint(leg_r0, leg_r1, c0, c1, identity.leg_color, LEGS)
        if identity.striped_legs:
            for r in range(leg_r0, leg_r1, 4):
                paint(r, min(r + 2, leg_r1), c0, c1, identity.leg_color_alt, LEGS)
    if identity.marker:
        side = max(3, int(0.09 * size))
        c0 = cx + half_w + arm_w + 1
        paint(int(0.33 * size), int(0.33 * size) + side, c0, c0 + side,
              identity.marker_color, BELONGINGS)
    return img, mask


def generate_synthetic(spec: SynthSpec, out_root) -> list:
    """Write the dataset tree under ``out_root``; returns all records.

    Train gets all clothing variants of the first 80% of ids; the held-out
    ids appear in query (first half of the variants) and gallery (the
    rest), so every query match requires crossing a clothing change.
    """
    out_root = Path(out_root)
    rng = np.random.default_rng(spec.seed)
    identities = _draw_identities(rng, spec.num_ids)
    wardrobe = _draw_wardrobe(rng, spec)

    num_train = max(1, int(spec.num_ids * TRAIN_ID_FRACTION))
    query_variants = set(range(max(1, spec.clothes_per_id // 2)))

    for split in ("train", "query", "gallery"):
        (out_root / split / "images").mkdir(parents=True, exist_ok=True)
        (out_root / split / "masks").mkdir(parents=True, exist_ok=True)

    jitter_max = max(1, round(0.03 * spec.image_size))
    records = []
    for pid in range(spec.num_ids):
        for cidx in range(spec.clothes_per_id):
            torso_color = wardrobe[pid][0][cidx]
            pants_color = wardrobe[pid][1][cidx]
            for seq in range(spec.images_per_combination):
                jitter = tuple(int(v) for v in rng.integers(-jitter_max, jitter_max + 1, size=2))
                background = _hsv(
                    float(rng.random()), 0.2 + 0.3 * rng.random(), 0.25 + 0.7 * rng.random()
                )
                img, mask = render_sample(
                    spec.image_size, identities[pid], torso_color, pants_color,
                    background, jitter,
                )
                if pid < num_train:
                    split = "train"
                elif cidx in query_variants:
                    split = "query"
                else:
                    split = "gallery"
                name = f"{pid:04d}_{cidx:02d}_{seq:03d}.png"
                image_path = out_root / split / "images" / name
                mask_path = out_root / split / "masks" / name
                save_image(image_path, img)
                save_mask(mask_path, mask)
                records.append(
                    SampleRecord(
                        image_path=str(image_path),
                        mask_path=str(mask_path),
                        person_id=pid,
                        clothing_id=cidx,
                        split=split,
                    )
                )
    return records
