"""Two desk-scale encoder-decoder families used as ensemble base learners.

Both take (N, 3, H, W) RGB in [0, 1] and emit (N, 2, H, W) class scores
(background, hand). They are intentionally tiny; the point is architectural
diversity between the families, not benchmark-grade capacity.
"""

from __future__ import annotations

import torch
from torch import nn


def conv_block(c_in: int, c_out: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(c_in, c_out, 3, padding=1),
        nn.BatchNorm2d(c_out),
        nn.ReLU(inplace=True),
        nn.Conv2d(c_out, c_out, 3, padding=1),
        nn.BatchNorm2d(c_out),
        nn.ReLU(inplace=True),
    )


class TinyUNet(nn.Module):
    """Two-level U-shaped net with skip concatenation."""

    def __init__(self, base: int = 12):
        super().__init__()
        self.enc1 = conv_block(3, base)
        self.enc2 = conv_block(base, base * 2)
        self.bottleneck = conv_block(base * 2, base * 2)
        self.pool = nn.MaxPool2d(2)
        self.up2 = nn.Upsample(scale_factor=2, mode="bilinear", align_corners=False)
        self.dec2 = conv_block(base * 4, base)
        self.dec1 = conv_block(base * 2, base)
        self.head = nn.Conv2d(base, 2, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        s1 = self.enc1(x)
        s2 = self.enc2(self.pool(s1))
        b = self.bottleneck(self.pool(s2))
        d2 = self.dec2(torch.cat([self.up2(b), s2], dim=1))
        d1 = self.dec1(torch.cat([self.up2(d2), s1], dim=1))
        return self.head(d1)


class ResidualConvUnit(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.body = nn.Sequential(
            nn.ReLU(inplace=False),
            nn.Conv2d(channels, channels, 3, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(channels, channels, 3, padding=1),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.body(x)


class TinyRefineNet(nn.Module):
    """Multi-resolution refinement: residual units per scale, then chained
    pooling-style refinement while fusing the coarse path back into the fine
    one."""

    def __init__(self, base: int = 12):
        super().__init__()
        self.stem_fine = nn.Conv2d(3, base, 3, padding=1)
        self.stem_coarse = nn.Conv2d(3, base, 3, padding=1)
        self.pool = nn.AvgPool2d(2)
        self.rcu_fine = ResidualConvUnit(base)
        self.rcu_coarse = ResidualConvUnit(base)
        self.fuse = nn.Conv2d(base, base, 3, padding=1)
        self.up = nn.Upsample(scale_factor=2, mode="bilinear", align_corners=False)
        self.crp_pool = nn.MaxPool2d(5, stride=1, padding=2)
        self.crp_conv = nn.Conv2d(base, base, 3, padding=1)
        self.out_rcu = ResidualConvUnit(base)
        self.head = nn.Conv2d(base, 2, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        fine = self.rcu_fine(self.stem_fine(x))
        coarse = self.rcu_coarse(self.stem_coarse(self.pool(x)))
        fused = self.fuse(fine + self.up(coarse))
        refined = fused + self.crp_conv(self.crp_pool(fused))
        return self.head(self.out_rcu(refined))


FAMILIES = {"unet": TinyUNet, "refinenet": TinyRefineNet}


def build_model(family: str) -> nn.Module:
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}")
    return FAMILIES[family]()
