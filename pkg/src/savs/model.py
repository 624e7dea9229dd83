"""Feature extraction network: pluggable backbone, foreground-driven channel
attention, and the parameter-shared stream over shielded images.

Any ``nn.Module`` mapping (B, 3, H, W) to (B, C, h, w) with an
``out_channels`` attribute satisfies the extractor contract;
:class:`ToyPatchExtractor` is the shipped desk-scale default.
"""

from __future__ import annotations

import math

import torch
import torch.nn as nn
import torch.nn.functional as F

ABLATIONS = ("baseline", "hsa", "hsa_vcs")


def gap(feature_map: torch.Tensor) -> torch.Tensor:
    """Global average pooling: spatial mean per channel over (..., C, h, w)."""
    if feature_map.ndim < 3:
        raise ValueError(f"need at least (C, h, w), got shape {tuple(feature_map.shape)}")
    return feature_map.mean(dim=(-2, -1))


class ToyPatchExtractor(nn.Module):
    """Small strided-conv patch-embedding stack pooled to a fixed grid."""

    def __init__(self, out_channels: int = 128, grid: int = 7):
        super().__init__()
        if out_channels < 4:
            raise ValueError("out_channels must be at least 4")
        self.stem = nn.Conv2d(3, out_channels // 4, kernel_size=4, stride=4)
        self.mid = nn.Conv2d(out_channels // 4, out_channels // 2, 3, stride=2, padding=1)
        self.head = nn.Conv2d(out_channels // 2, out_channels, 3, padding=1)
        self.pool = nn.AdaptiveAvgPool2d(grid)
        self.out_channels = out_channels
        self.grid = grid

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = F.relu(self.stem(x))
        x = F.relu(self.mid(x))
        return self.pool(self.head(x))


class HumanSemanticAttention(nn.Module):
    """Channel weights from a pooled feature vector: sigmoid(W2 relu(W1 v)).

    The squeeze layer reduces the channel count by ``reduction``; outputs
    are strictly inside (0, 1).
    """

    def __init__(self, channels: int, reduction: int = 16):
        super().__init__()
        if reduction < 1:
            raise ValueError(f"reduction must be >= 1, got {reduction}")
        if channels % reduction:
            raise ValueError(f"channels {channels} not divisible by reduction {reduction}")
        self.fc1 = nn.Linear(channels, channels // reduction)
        self.fc2 = nn.Linear(channels // reduction, channels)
        self.channels = channels

    def forward(self, feature_map: torch.Tensor) -> torch.Tensor:
        if feature_map.shape[-3] != self.channels:
            raise ValueError(
                f"feature map has {feature_map.shape[-3]} channels, expected {self.channels}"
            )
        return torch.sigmoid(self.fc2(torch.relu(self.fc1(gap(feature_map)))))


def hsa_weights(feature_map: torch.Tensor, attention: HumanSemanticAttention) -> torch.Tensor:
    """Channel attention weights for a (foreground-stream) feature map."""
    return attention(feature_map)


def hsa_reweight(feature_map: torch.Tensor, weights: torch.Tensor) -> torch.Tensor:
    """Pooled reweighting: weights times the per-channel spatial means.

    Channelwise scaling commutes with the spatial mean, so this equals
    pooling the reweighted map while skipping the (C, h, w) product.
    """
    pooled = gap(feature_map)
    if pooled.shape != weights.shape:
        raise ValueError(
            f"weights shape {tuple(weights.shape)} does not match pooled "
            f"features {tuple(pooled.shape)}"
        )
    return weights * pooled


def hsa_reweight_map(feature_map: torch.Tensor, weights: torch.Tensor) -> torch.Tensor:
    """Spatial form of the reweighting, kept for attention-map rendering."""
    if feature_map.shape[-3] != weights.shape[-1]:
        raise ValueError("channel counts disagree")
    return weights[..., :, None, None] * feature_map


class SavsModel(nn.Module):
    """Shared-backbone network over (original, foreground, shielded) inputs.

    The original and shielded streams run through the *same* backbone
    instance; the attention branch is a separate extractor over the
    foreground image.  ``ablation`` selects the reduced variants:
    ``baseline`` (backbone + classifier only) and ``hsa`` (no shielded
    stream).
    """

    def __init__(
        self,
        num_classes: int,
        channels: int = 128,
        reduction: int = 16,
        grid: int = 7,
        input_size: int = 64,
        ablation: str = "hsa_vcs",
        backbone: nn.Module | None = None,
        attn_branch: nn.Module | None = None,
        init_seed: int | None = None,
    ):
        super().__init__()
        if ablation not in ABLATIONS:
            raise ValueError(f"ablation must be one of {ABLATIONS}, got {ablation!r}")
        self.backbone = backbone if backbone is not None else ToyPatchExtractor(channels, grid)
        channels = self.backbone.out_channels
        if ablation != "baseline":
            self.attn_branch = (
                attn_branch if attn_branch is not None else ToyPatchExtractor(channels, grid)
            )
            if self.attn_branch.out_channels != channels:
                raise ValueError(
                    f"attention branch emits {self.attn_branch.out_channels} channels, "
                    f"backbone emits {channels}"
                )
            self.hsa = HumanSemanticAttention(channels, reduction)
        self.classifier = nn.Linear(channels, num_classes)
        self.num_classes = num_classes
        self.channels = channels
        self.reduction = reduction
        self.input_size = int(input_size)
        self.ablation = ablation
        if init_seed is not None:
            self.reset_parameters(init_seed)

    def reset_parameters(self, seed: int) -> None:
        """Deterministic init: uniform fan-in scaling for weights, zero biases."""
        gen = torch.Generator().manual_seed(int(seed))
        for module in self.modules():
            if isinstance(module, (nn.Conv2d, nn.Linear)):
                fan_in = module.weight.shape[1:].numel()
                bound = 1.0 / math.sqrt(fan_in)
                with torch.no_grad():
                    module.weight.uniform_(-bound, bound, generator=gen)
                    if module.bias is not None:
                        module.bias.zero_()

    def _check_images(self, *images):
        for x in images:
            if x is None:
                continue
            if x.ndim != 4 or x.shape[1] != 3:
                raise ValueError(f"expected (B, 3, H, W) input, got {tuple(x.shape)}")
            if x.shape[-2] != self.input_size or x.shape[-1] != self.input_size:
                raise ValueError(
                    f"input is {x.shape[-2]}x{x.shape[-1]}, model configured for "
                    f"{self.input_size}x{self.input_size}"
                )

    def _enhanced(self, feature_map_o: torch.Tensor, foreground: torch.Tensor) -> torch.Tensor:
        if self.ablation == "baseline":
            return gap(feature_map_o)
        weights = self.hsa(self.attn_branch(foreground))
        return hsa_reweight(feature_map_o, weights)

    def forward_train(self, original, foreground, shielded=None):
        """Training pass.

        Returns ``(f_o, f_e, f_s, logits)``: pooled original feature,
        attention-enhanced feature (reusing the single backbone pass over
        the original), pooled shielded feature (None unless the shielded
        stream is active), and class logits over the enhanced feature.
        """
        self._check_images(original, foreground, shielded)
        feature_map_o = self.backbone(original)
        f_o = gap(feature_map_o)
        f_e = self._enhanced(feature_map_o, foreground)
        f_s = None
        if self.ablation == "hsa_vcs":
            if shielded is None:
                raise ValueError("shielded images required when the shielded stream is active")
            f_s = gap(self.backbone(shielded))
        logits = self.classifier(f_e)
        return f_o, f_e, f_s, logits

    def forward_test(self, original, foreground):
        """Retrieval descriptor: the enhanced feature only, no shielded input."""
        self._check_images(original, foreground)
        feature_map_o = self.backbone(original)
        return self._enhanced(feature_map_o, foreground)

    def forward(self, original, foreground):
        return self.forward_test(original, foreground)
