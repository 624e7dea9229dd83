"""Identity-balanced batch sampling: P distinct ids times K images each."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class BatchSpec:
    """Dataset indices for one batch plus their person ids."""

    indices: list
    person_ids: list


class PKSampler:
    """Yields identity-balanced batches covering every id once per epoch.

    Ids are shuffled, then consumed round-robin in chunks of P; a short
    final chunk wraps around the shuffled list.  Ids with fewer than K
    images are completed by sampling with replacement.
    """

    def __init__(self, labels, batch_size: int, images_per_id: int, rng: np.random.Generator):
        if batch_size % images_per_id:
            raise ValueError(
                f"batch_size {batch_size} not divisible by images_per_id {images_per_id}"
            )
        self.ids_per_batch = batch_size // images_per_id
        self.images_per_id = images_per_id
        self.rng = rng
        self.by_id: dict = {}
        for idx, pid in enumerate(labels):
            self.by_id.setdefault(int(pid), []).append(idx)
        if len(self.by_id) < self.ids_per_batch:
            raise ValueError(
                f"dataset has {len(self.by_id)} ids but batches need "
                f"{self.ids_per_batch} distinct ids"
            )
        self.ids = sorted(self.by_id)

    def _draw_for_id(self, pid: int) -> list:
        candidates = self.by_id[pid]
        k = self.images_per_id
        if len(candidates) >= k:
            picks = self.rng.permutation(len(candidates))[:k]
        else:
            extra = self.rng.integers(0, len(candidates), size=k - len(candidates))
            picks = np.concatenate([np.arange(len(candidates)), extra])
        return [candidates[i] for i in picks]

    def epoch(self) -> list:
        order = [self.ids[i] for i in self.rng.permutation(len(self.ids))]
        num_batches = -(-len(order) // self.ids_per_batch)
        batches = []
        for b in range(num_batches):
            chosen = [order[(b * self.ids_per_batch + j) % len(order)]
                      for j in range(self.ids_per_batch)]
            indices = []
            pids = []
            for pid in chosen:
                drawn = self._draw_for_id(pid)
                indices.extend(drawn)
                pids.extend([pid] * len(drawn))
            batches.append(BatchSpec(indices=indices, person_ids=pids))
        return batches


def pk_sample(labels, batch_size: int, images_per_id: int, rng: np.random.Generator) -> BatchSpec:
    """Draw a single identity-balanced batch."""
    return PKSampler(labels, batch_size, images_per_id, rng).epoch()[0]
