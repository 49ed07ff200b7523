from .conv import as_tensor, conv2d, depthwise_conv, im2col, pointwise
from .deform import (
    KERNEL_GRID,
    DeformParams,
    OffsetNet,
    alau_forward,
    bilinear_sample,
    deformable_sample,
)
from .lka import STRIP_SIZES, VARIANTS, LkaWeights, gelu, lka_forward, msa_forward

__all__ = [
    "as_tensor", "conv2d", "depthwise_conv", "im2col", "pointwise",
    "KERNEL_GRID", "DeformParams", "OffsetNet", "alau_forward", "bilinear_sample",
    "deformable_sample", "STRIP_SIZES", "VARIANTS", "LkaWeights", "gelu",
    "lka_forward", "msa_forward",
]
