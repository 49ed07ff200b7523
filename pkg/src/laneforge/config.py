"""Per-dataset hyperparameter presets."""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Optional, Tuple

from .losses import GliouParams, LossWeights
from .targets import TargetConfig

INPUT_SIZE = (800, 320)
EXTEND_E = 15.0


@dataclass(frozen=True)
class RunConfig:
    preset: str
    sigma: float
    t_theta: float
    n_anchors: int
    weights: LossWeights
    e: float = EXTEND_E
    input_size: Tuple[int, int] = INPUT_SIZE      # (w, h)
    source_size: Tuple[int, int] = (1640, 590)    # annotation image size (w, h)
    downsample: int = 8
    n_slices: int = 72
    seed: int = 0

    def target_config(self) -> TargetConfig:
        return TargetConfig(self.sigma, self.t_theta, self.downsample)

    def gliou_params(self) -> GliouParams:
        return GliouParams(self.e)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["input_size"] = list(self.input_size)
        d["source_size"] = list(self.source_size)
        return d


PRESETS = {
    "culane": RunConfig(
        preset="culane", sigma=4.0, t_theta=0.5, n_anchors=300,
        weights=LossWeights(w_reg=6.0, w_cls=6.0, w_hm=2.0, w_theta=3.0),
        source_size=(1640, 590),
    ),
    "tusimple": RunConfig(
        preset="tusimple", sigma=2.0, t_theta=0.2, n_anchors=100,
        weights=LossWeights(w_reg=10.0, w_cls=10.0, w_hm=10.0, w_theta=1.0),
        source_size=(1280, 720),
    ),
}
# custom starts from the culane values; every field is meant to be overridden
PRESETS["custom"] = replace(PRESETS["culane"], preset="custom")


def make_config(preset: str = "culane", *, sigma: Optional[float] = None,
                t_theta: Optional[float] = None, e: Optional[float] = None,
                n_anchors: Optional[int] = None, input_size: Optional[Tuple[int, int]] = None,
                seed: Optional[int] = None, downsample: Optional[int] = None,
                weights: Optional[LossWeights] = None) -> RunConfig:
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}")
    overrides = {
        k: v for k, v in dict(sigma=sigma, t_theta=t_theta, e=e, n_anchors=n_anchors,
                              input_size=input_size, seed=seed, downsample=downsample,
                              weights=weights).items()
        if v is not None
    }
    cfg = replace(PRESETS[preset], **overrides)
    cfg.target_config()     # validates sigma/t_theta/downsample
    cfg.gliou_params()
    if cfg.n_anchors < 1:
        raise ValueError("n_anchors must be >= 1")
    return cfg
