"""Training configuration: dataclass defaults plus the flat key=value file codec."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .losses import CircleLossConfig, LossWeights


@dataclass
class TrainConfig:
    batch_size: int = 32
    images_per_id: int = 4
    epochs: int = 60
    lr0: float = 3.5e-3
    lr_decay: float = 0.1
    decay_epoch: int = 40
    momentum: float = 0.9
    weight_decay: float = 0.0
    input_size: int = 224
    seed: int = 0
    channels: int = 128
    reduction: int = 16
    grid: int = 7
    lambda_id: float = 1.0
    lambda_cir: float = 1.0
    lambda_sem: float = 1.0
    gamma: float = 32.0
    margin: float = 0.25
    o_p: float | None = None
    o_n: float | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.batch_size < 1 or self.images_per_id < 1:
            raise ValueError("batch_size and images_per_id must be positive")
        if self.batch_size % self.images_per_id:
            raise ValueError(
                f"batch_size {self.batch_size} not divisible by images_per_id "
                f"{self.images_per_id}"
            )
        if not 0 <= self.decay_epoch < self.epochs:
            raise ValueError(
                f"decay_epoch {self.decay_epoch} must lie in [0, epochs={self.epochs})"
            )
        if self.channels % self.reduction:
            raise ValueError(
                f"channels {self.channels} not divisible by reduction {self.reduction}"
            )
        # constructing these validates their own invariants
        self.circle_config()
        self.loss_weights()

    @property
    def ids_per_batch(self) -> int:
        return self.batch_size // self.images_per_id

    def circle_config(self) -> CircleLossConfig:
        return CircleLossConfig(gamma=self.gamma, margin=self.margin, o_p=self.o_p, o_n=self.o_n)

    def loss_weights(self) -> LossWeights:
        return LossWeights(self.lambda_id, self.lambda_cir, self.lambda_sem)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _parse_value(field: dataclasses.Field, text: str):
    text = text.strip()
    if field.type in ("float | None",):
        return None if text.lower() == "none" else float(text)
    if field.type == "int":
        return int(text)
    if field.type == "float":
        return float(text)
    raise ValueError(f"unhandled config field type {field.type!r} for {field.name}")


def load_config(path) -> TrainConfig:
    """Parse a flat ``key = value`` file; unknown keys are an error."""
    fields = {f.name: f for f in dataclasses.fields(TrainConfig)}
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, text = (part.strip() for part in line.split("=", 1))
        if key not in fields:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = _parse_value(fields[key], text)
    return TrainConfig(**values)


def save_config(cfg: TrainConfig, path) -> None:
    lines = []
    for field in dataclasses.fields(TrainConfig):
        value = getattr(cfg, field.name)
        lines.append(f"{field.name} = {'none' if value is None else value!r}")
    Path(path).write_text("\n".join(lines) + "\n")
