"""Semantic-map preprocessing and clothing-shielded rendering.

Raw parsing labels are recombined into a canonical 7-class space
(background, head, torso, pants, arms, legs, belongings).  From the
canonical map we derive the foreground image (background zeroed), the
clothing shield mask, and per-batch shielded renders whose clothing
pixels are redrawn from a shuffled pool of the batch's clothing pixels.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

BACKGROUND, HEAD, TORSO, PANTS, ARMS, LEGS, BELONGINGS = range(7)
NUM_CANONICAL_CLASSES = 7
CANONICAL_CLASS_NAMES = (
    "background",
    "head",
    "torso",
    "pants",
    "arms",
    "legs",
    "belongings",
)

# Upper clothes and pants are the regions that change between outfits.
DEFAULT_SHIELD_CLASSES = frozenset({TORSO, PANTS})

# Default recombination for the common 20-label human-parsing space
# (background, hat, hair, glove, sunglasses, upper-clothes, dress, coat,
# socks, pants, jumpsuits, scarf, skirt, face, l/r-arm, l/r-leg,
# l/r-shoe).  The regrouping is an editorial default, not a published
# table; any custom mapping can be supplied instead.
DEFAULT_20_LABEL_TABLE = (
    BACKGROUND,  # background
    HEAD,        # hat
    HEAD,        # hair
    ARMS,        # glove
    BELONGINGS,  # sunglasses
    TORSO,       # upper-clothes
    TORSO,       # dress
    TORSO,       # coat
    LEGS,        # socks
    PANTS,       # pants
    PANTS,       # jumpsuits
    TORSO,       # scarf
    PANTS,       # skirt
    HEAD,        # face
    ARMS,        # left-arm
    ARMS,        # right-arm
    LEGS,        # left-leg
    LEGS,        # right-leg
    LEGS,        # left-shoe
    LEGS,        # right-shoe
)


@dataclass(frozen=True)
class LabelMapping:
    """Total map from a source parsing label space onto the canonical classes.

    ``table[src_label] == canonical_class``; the table length defines the
    source label space size.
    """

    table: np.ndarray

    def __post_init__(self):
        table = np.asarray(self.table, dtype=np.int64)
        if table.ndim != 1 or table.size == 0:
            raise ValueError("mapping table must be a non-empty 1-D sequence")
        bad = table[(table < 0) | (table >= NUM_CANONICAL_CLASSES)]
        if bad.size:
            raise ValueError(
                f"mapping targets outside canonical classes 0..6: {sorted(set(bad.tolist()))}"
            )
        object.__setattr__(self, "table", table)

    @property
    def label_space_size(self) -> int:
        return int(self.table.size)

    @classmethod
    def identity(cls) -> "LabelMapping":
        return cls(np.arange(NUM_CANONICAL_CLASSES))

    @classmethod
    def default_20_label(cls) -> "LabelMapping":
        return cls(np.array(DEFAULT_20_LABEL_TABLE))

    @classmethod
    def from_file(cls, path) -> "LabelMapping":
        """Parse plain-text lines of the form ``src_label -> canonical_class``."""
        pairs = {}
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split("->")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'src -> dst', got {raw!r}")
            src, dst = int(parts[0]), int(parts[1])
            if src < 0:
                raise ValueError(f"{path}:{lineno}: negative source label {src}")
            pairs[src] = dst
        if not pairs:
            raise ValueError(f"{path}: empty mapping file")
        size = max(pairs) + 1
        missing = sorted(set(range(size)) - set(pairs))
        if missing:
            raise ValueError(f"{path}: mapping not total, missing source labels {missing}")
        table = np.array([pairs[src] for src in range(size)])
        return cls(table)

    def to_file(self, path) -> None:
        lines = [f"{src} -> {int(dst)}" for src, dst in enumerate(self.table)]
        Path(path).write_text("\n".join(lines) + "\n")


def recombine_labels(raw: np.ndarray, mapping: LabelMapping) -> np.ndarray:
    """Map a raw parsing label image pixelwise into the canonical 7-class space."""
    raw = np.asarray(raw)
    if raw.ndim != 2:
        raise ValueError(f"label map must be H×W, got shape {raw.shape}")
    if raw.size:
        lo, hi = int(raw.min()), int(raw.max())
        if lo < 0 or hi >= mapping.label_space_size:
            offender = lo if lo < 0 else hi
            raise ValueError(
                f"source label {offender} outside mapping domain "
                f"0..{mapping.label_space_size - 1}"
            )
    return mapping.table[raw]


def foreground_mask(sem: np.ndarray) -> np.ndarray:
    """Binary mask: 1 wherever the canonical class is non-background."""
    return (np.asarray(sem) != BACKGROUND).astype(np.uint8)


def extract_foreground(img: np.ndarray, sem: np.ndarray) -> np.ndarray:
    """Copy of the image with background pixels set to (0, 0, 0)."""
    img = np.asarray(img)
    sem = np.asarray(sem)
    if img.shape[:2] != sem.shape:
        raise ValueError(f"image {img.shape[:2]} and semantic map {sem.shape} disagree")
    return np.where((sem != BACKGROUND)[..., None], img, np.zeros((), dtype=img.dtype))


def shielding_mask(sem: np.ndarray, shield_classes=DEFAULT_SHIELD_CLASSES) -> np.ndarray:
    """Binary mask of the clothing classes to be shielded."""
    shield = set(shield_classes)
    if BACKGROUND in shield:
        raise ValueError("background (class 0) is never shielded")
    if not shield <= set(range(1, NUM_CANONICAL_CLASSES)):
        raise ValueError(f"shield classes {sorted(shield)} outside 1..6")
    sem = np.asarray(sem)
    if not shield:
        return np.zeros(sem.shape, dtype=np.uint8)
    return np.isin(sem, sorted(shield)).astype(np.uint8)


@dataclass
class PixelPool:
    """Shuffled multiset of the RGB values of one batch's clothing pixels."""

    pixels: np.ndarray  # (N, 3)
    source_count: int

    def __len__(self) -> int:
        return int(self.pixels.shape[0])


@dataclass
class RenderedBatch:
    """Shielded images plus the masks that selected their redrawn pixels."""

    images: list
    masks: list


def _check_batch(batch_images, batch_masks):
    if len(batch_images) != len(batch_masks) or len(batch_images) == 0:
        raise ValueError(
            f"need equally many images and masks (>= 1), "
            f"got {len(batch_images)} / {len(batch_masks)}"
        )
    for i, (img, mask) in enumerate(zip(batch_images, batch_masks)):
        if np.asarray(img).shape[:2] != np.asarray(mask).shape:
            raise ValueError(f"batch element {i}: image/mask shape mismatch")


def build_pixel_pool(batch_images, batch_masks, rng_seed: int) -> PixelPool:
    """Collect every masked pixel of the batch and shuffle them into a pool.

    Pixels are gathered in image order, row-major within each image, then
    permuted with a generator seeded by ``rng_seed``, so identical inputs
    and seed give an identical pool.
    """
    _check_batch(batch_images, batch_masks)
    parts = []
    for img, mask in zip(batch_images, batch_masks):
        img = np.asarray(img)
        sel = np.asarray(mask).astype(bool)
        parts.append(img[sel].reshape(-1, 3))
    pixels = np.concatenate(parts, axis=0)
    rng = np.random.default_rng(rng_seed)
    pool = pixels[rng.permutation(pixels.shape[0])]
    return PixelPool(pixels=pool, source_count=int(pixels.shape[0]))


def render_shielded(
    batch_images,
    batch_masks,
    pool: PixelPool,
    rng_seed: int,
    with_replacement: bool = True,
) -> RenderedBatch:
    """Replace each masked pixel with a value drawn from the pool.

    Non-masked pixels are copied through unchanged.  Draws consume a
    generator seeded by ``rng_seed`` serially over (image index, row-major
    pixel), so renders are deterministic.  By default draws are uniform
    with replacement; ``with_replacement=False`` instead consumes a
    permutation of the pool, so the drawn values form a sub-multiset of
    the pool contents.
    """
    _check_batch(batch_images, batch_masks)
    rng = np.random.default_rng(rng_seed)
    order = None
    cursor = 0
    if not with_replacement:
        order = rng.permutation(len(pool))
    out_images = []
    out_masks = []
    for i, (img, mask) in enumerate(zip(batch_images, batch_masks)):
        img = np.asarray(img)
        sel = np.asarray(mask).astype(bool)
        n = int(sel.sum())
        out = img.copy()
        if n:
            if len(pool) == 0:
                raise ValueError(
                    f"batch element {i} has {n} shielded pixels but the pool is empty"
                )
            if with_replacement:
                idx = rng.integers(0, len(pool), size=n)
            else:
                if cursor + n > len(order):
                    raise ValueError(
                        "pool exhausted: without-replacement rendering needs a pool "
                        "built from the same batch"
                    )
                idx = order[cursor : cursor + n]
                cursor += n
            out[sel] = pool.pixels[idx]
        out_images.append(out)
        out_masks.append(np.asarray(mask).copy())
    return RenderedBatch(images=out_images, masks=out_masks)
