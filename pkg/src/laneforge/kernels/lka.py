"""Large Kernel Attention forward pass and its multi-scale aggregator variants.

Variants of the aggregator (``Att`` before the Hadamard product):

* ``baseline``: W1 . DConv11x11(Lin x)
* ``A``:        W1 . sum_i Strip_i(Lin x)              (i = 1..3)
* ``B``:        W1 . (Lin x + sum_i Strip_i(Lin x))
* ``C``:        W1 . (D + sum_i Strip_i(D)), D = DConv5x5(x)

``C`` is the shipped design. A strip path is a 1xk depthwise conv
followed by a kx1 one (or their sum when ``parallel_strips`` is set).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import erf

from ..errors import ShapeMismatch
from .conv import as_tensor, depthwise_conv, pointwise

VARIANTS = ("baseline", "A", "B", "C")
STRIP_SIZES = (7, 11, 21)


def gelu(x):
    return 0.5 * x * (1.0 + erf(x / np.sqrt(2.0)))


ACTIVATIONS = {
    "gelu": gelu,
    "relu": lambda x: np.maximum(x, 0.0),
    "none": lambda x: x,
}


@dataclass(frozen=True)
class LkaWeights:
    dconv5: np.ndarray                                   # (C, 5, 5)
    strips: Tuple[Tuple[np.ndarray, np.ndarray], ...]    # ((C,1,k), (C,k,1)) per branch
    w1: np.ndarray                                       # (C, C)
    w2: np.ndarray                                       # (C, C)
    ffn_w1: np.ndarray                                   # (hidden, C)
    ffn_b1: np.ndarray                                   # (hidden,)
    ffn_w2: np.ndarray                                   # (C, hidden)
    ffn_b2: np.ndarray                                   # (C,)
    lin: Optional[np.ndarray] = None                     # (C, C), baseline/A/B only
    dconv11: Optional[np.ndarray] = None                 # (C, 11, 11), baseline only
    activation: str = "gelu"
    parallel_strips: bool = False

    @property
    def channels(self) -> int:
        return self.w1.shape[0]

    def validate(self, c: int) -> None:
        def need(arr, shape, name):
            if arr is None or np.shape(arr) != shape:
                raise ShapeMismatch(f"{name} must have shape {shape}, got {np.shape(arr)}")

        need(self.dconv5, (c, 5, 5), "dconv5")
        need(self.w1, (c, c), "w1")
        need(self.w2, (c, c), "w2")
        hidden = np.shape(self.ffn_w1)[0] if np.ndim(self.ffn_w1) == 2 else -1
        need(self.ffn_w1, (hidden, c), "ffn_w1")
        need(self.ffn_b1, (hidden,), "ffn_b1")
        need(self.ffn_w2, (c, hidden), "ffn_w2")
        need(self.ffn_b2, (c,), "ffn_b2")
        for n, (row, col) in enumerate(self.strips):
            k = np.shape(row)[-1]
            need(row, (c, 1, k), f"strips[{n}] row kernel")
            need(col, (c, k, 1), f"strips[{n}] column kernel")
        if self.lin is not None:
            need(self.lin, (c, c), "lin")
        if self.dconv11 is not None:
            need(self.dconv11, (c, 11, 11), "dconv11")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @classmethod
    def random(cls, channels: int, rng: np.random.Generator, hidden: Optional[int] = None,
               strip_sizes: Sequence[int] = STRIP_SIZES, scale: float = 0.3, **kw) -> "LkaWeights":
        c = channels
        hidden = hidden or 2 * c
        n = lambda *s: rng.normal(0.0, scale, size=s)
        return cls(
            dconv5=n(c, 5, 5),
            strips=tuple((n(c, 1, k), n(c, k, 1)) for k in strip_sizes),
            w1=n(c, c), w2=n(c, c),
            ffn_w1=n(hidden, c), ffn_b1=n(hidden), ffn_w2=n(c, hidden), ffn_b2=n(c),
            lin=n(c, c), dconv11=n(c, 11, 11), **kw,
        )


def _strip(x, row, col, parallel: bool):
    if parallel:
        return depthwise_conv(x, row) + depthwise_conv(x, col)
    return depthwise_conv(depthwise_conv(x, row), col)


def _linear_or_identity(x, lin):
    return x if lin is None else pointwise(x, lin)


def msa_forward(x, w: LkaWeights, variant: str = "C") -> np.ndarray:
    """Attention map ``Att`` produced by the chosen aggregator variant."""
    x = as_tensor(x, "input")
    w.validate(x.shape[0])
    if variant not in VARIANTS:
        raise ValueError(f"unknown MSA variant {variant!r}; expected one of {VARIANTS}")

    if variant == "baseline":
        if w.dconv11 is None:
            raise ShapeMismatch("baseline variant needs dconv11 weights")
        agg = depthwise_conv(_linear_or_identity(x, w.lin), w.dconv11)
        return pointwise(agg, w.w1)

    base = depthwise_conv(x, w.dconv5) if variant == "C" else _linear_or_identity(x, w.lin)
    agg = base.copy() if variant in ("B", "C") else np.zeros_like(base)
    for row, col in w.strips:
        agg += _strip(base, row, col, w.parallel_strips)
    return pointwise(agg, w.w1)


def lka_forward(x, w: LkaWeights, variant: str = "C") -> np.ndarray:
    """Z1 = Att * (W2 x) + x;  Z = FFN(Z1) + Z1, with * elementwise."""
    x = as_tensor(x, "input")
    att = msa_forward(x, w, variant)
    z1 = att * pointwise(x, w.w2) + x
    act = ACTIVATIONS[w.activation]
    ffn = pointwise(act(pointwise(z1, w.ffn_w1, w.ffn_b1)), w.ffn_w2, w.ffn_b2)
    return ffn + z1
