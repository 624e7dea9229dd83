"""Training objectives: id cross-entropy, pair-similarity circle loss, and
the alignment loss that pulls shielded features onto original features."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import torch
import torch.nn.functional as F

logger = logging.getLogger(__name__)


@dataclass
class CircleLossConfig:
    """Scale and similarity optima for the circle loss.

    ``o_p``/``o_n`` default to the usual margin parameterization
    ``1 + margin`` / ``-margin`` when left unset.
    """

    gamma: float = 32.0
    margin: float = 0.25
    o_p: float | None = None
    o_n: float | None = None

    def __post_init__(self):
        if self.o_p is None:
            self.o_p = 1.0 + self.margin
        if self.o_n is None:
            self.o_n = -self.margin
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.o_p > self.o_n:
            raise ValueError(f"need o_p > o_n, got o_p={self.o_p}, o_n={self.o_n}")


@dataclass
class LossWeights:
    lambda_id: float = 1.0
    lambda_cir: float = 1.0
    lambda_sem: float = 1.0

    def __post_init__(self):
        if min(self.lambda_id, self.lambda_cir, self.lambda_sem) < 0:
            raise ValueError("loss weights must be non-negative")
        if self.lambda_id == self.lambda_cir == self.lambda_sem == 0:
            raise ValueError("at least one loss weight must be non-zero")


@dataclass
class SimilarityBundle:
    """One anchor's intraclass (``s_p``) and interclass (``s_n``) cosine scores."""

    s_p: torch.Tensor
    s_n: torch.Tensor

    @property
    def contributes(self) -> bool:
        return self.s_p.numel() >= 1 and self.s_n.numel() >= 1


def id_loss(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Mean cross-entropy of the class logits against the person labels."""
    labels = torch.as_tensor(labels, dtype=torch.long)
    num_classes = logits.shape[-1]
    if labels.numel() and (labels.min() < 0 or labels.max() >= num_classes):
        raise ValueError(
            f"labels must lie in 0..{num_classes - 1}, got range "
            f"[{int(labels.min())}, {int(labels.max())}]"
        )
    return F.cross_entropy(logits, labels)


def circle_loss(bundle: SimilarityBundle, cfg: CircleLossConfig) -> torch.Tensor:
    """Loss for one anchor:

        log(1 + sum_i sum_j exp(gamma * (a_n[j] * s_n[j] - a_p[i] * s_p[i])))

    with the self-paced weights a_p = relu(o_p - s_p), a_n = relu(s_n - o_n).
    Evaluated as softplus(logsumexp_n + logsumexp_p), which factorizes the
    double sum and stays finite for large gamma.
    """
    s_p, s_n = bundle.s_p, bundle.s_n
    if s_p.numel() == 0 or s_n.numel() == 0:
        raise ValueError("circle loss needs at least one positive and one negative score")
    a_p = torch.relu(cfg.o_p - s_p)
    a_n = torch.relu(s_n - cfg.o_n)
    term_p = torch.logsumexp(-cfg.gamma * a_p * s_p, dim=0)
    term_n = torch.logsumexp(cfg.gamma * a_n * s_n, dim=0)
    return F.softplus(term_n + term_p)


def circle_loss_batch(bundles, cfg: CircleLossConfig) -> torch.Tensor:
    """Mean circle loss over the anchors that have both positives and negatives."""
    terms = [circle_loss(b, cfg) for b in bundles if b.contributes]
    if not terms:
        raise ValueError("no anchor in the batch has both positive and negative pairs")
    return torch.stack(terms).mean()


def mine_similarities(embeddings: torch.Tensor, labels) -> list[SimilarityBundle]:
    """Batch-local all-pairs cosine similarities, one bundle per anchor.

    Embeddings are L2-normalized first; a zero-norm embedding is treated
    as similarity 0 to everything (with a logged warning).  Each anchor's
    positives exclude the anchor itself.
    """
    if embeddings.ndim != 2:
        raise ValueError(f"expected (batch, dim) embeddings, got {tuple(embeddings.shape)}")
    labels = torch.as_tensor(labels)
    n = embeddings.shape[0]
    if labels.shape[0] != n:
        raise ValueError("labels and embeddings disagree on batch size")
    norms = embeddings.norm(dim=1, keepdim=True)
    zero = norms.squeeze(1) == 0
    if bool(zero.any()):
        logger.warning(
            "zero-norm embedding(s) at batch positions %s; using similarity 0",
            zero.nonzero().flatten().tolist(),
        )
    normed = embeddings / torch.where(norms == 0, torch.ones_like(norms), norms)
    sims = normed @ normed.t()
    same = labels.view(-1, 1) == labels.view(1, -1)
    eye = torch.eye(n, dtype=torch.bool, device=embeddings.device)
    bundles = []
    for a in range(n):
        bundles.append(
            SimilarityBundle(s_p=sims[a][same[a] & ~eye[a]], s_n=sims[a][~same[a]])
        )
    return bundles


def semantic_loss(
    f_o: torch.Tensor, f_s: torch.Tensor, squared: bool = False
) -> torch.Tensor:
    """Mean per-sample L2 distance between original and shielded features.

    ``squared=True`` averages squared distances instead (the true-MSE
    reading).  The gradient is defined (zero) even when a pair of rows is
    identical.
    """
    if f_o.shape != f_s.shape:
        raise ValueError(f"feature shapes disagree: {tuple(f_o.shape)} vs {tuple(f_s.shape)}")
    if f_o.ndim != 2:
        raise ValueError("expected (batch, dim) feature matrices")
    sumsq = ((f_o - f_s) ** 2).sum(dim=1)
    if squared:
        return sumsq.mean()
    positive = sumsq > 0
    safe = torch.where(positive, sumsq, torch.ones_like(sumsq))
    norms = torch.where(positive, torch.sqrt(safe), torch.zeros_like(sumsq))
    return norms.mean()


def total_loss(l_id, l_cir, l_sem, w: LossWeights) -> torch.Tensor:
    """Weighted sum of the three components."""
    for name, value in (("id", l_id), ("circle", l_cir), ("semantic", l_sem)):
        v = torch.as_tensor(value)
        if not bool(torch.isfinite(v).all()):
            raise ValueError(f"non-finite {name} loss component: {float(v)}")
    return w.lambda_id * l_id + w.lambda_cir * l_cir + w.lambda_sem * l_sem
