"""
Layer schedule and parameters of the COARSE and COARSE+FINE networks.

Encoder (C3D-like): conv3d blocks with max pools (1,2,2), (2,2,2), (2,2,2),
(2,2,2) and a final temporal pool (2,1,1) reaching C×1×h×w. Decoder: four
[conv2d, leaky ReLU, ×2 upsample] stages and a 1-channel conv2d head.
Refinement: four conv2d layers over the upsampled map stacked with the last frame.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..models import CLIP_LENGTH, Architecture
from ..tensor import Tensor

logger = logging.getLogger(__name__)

# (layer name, pool applied after the layer or None)
ENCODER_LAYOUT: Tuple[Tuple[str, Tuple[int, int, int] | None], ...] = (
    ("conv1", (1, 2, 2)),
    ("conv2", (2, 2, 2)),
    ("conv3a", None),
    ("conv3b", (2, 2, 2)),
    ("conv4a", None),
    ("conv4b", (2, 2, 2)),
)
BOTTLENECK_POOL = (2, 1, 1)
SPATIAL_REDUCTION = 16
RGB = 3


class NetConfig(BaseModel):
    """Channel schedule and resolutions of one network build."""
    architecture: Architecture = Architecture.COARSE_FINE
    encoder_channels: Tuple[int, int, int, int, int, int] = (64, 128, 256, 256, 512, 512)
    decoder_channels: Tuple[int, int, int, int] = (256, 128, 64, 32)
    refine_channels: Tuple[int, int, int] = (32, 16, 8)
    clip_size: int = Field(default=112, gt=0)
    refine_size: int = Field(default=448, gt=0)
    leaky_alpha: float = Field(default=0.001, ge=0.0)
    tiny: bool = False

    @model_validator(mode="after")
    def _check_sizes(self) -> "NetConfig":
        if self.clip_size % SPATIAL_REDUCTION:
            raise ValueError(f"clip_size {self.clip_size} must be a multiple of {SPATIAL_REDUCTION}")
        ratio, rest = divmod(self.refine_size, self.clip_size)
        if rest or ratio < 1 or ratio & (ratio - 1):
            raise ValueError(
                f"refine_size {self.refine_size} must be clip_size {self.clip_size} times a power of two"
            )
        return self

    @classmethod
    def full(cls, architecture: Architecture = Architecture.COARSE_FINE, refine_size: int = 448) -> "NetConfig":
        return cls(architecture=architecture, refine_size=refine_size)

    @classmethod
    def tiny_config(cls, architecture: Architecture = Architecture.COARSE_FINE, refine_size: int = 128) -> "NetConfig":
        """All channel counts divided by 8, 64×64 clips."""
        full = cls()
        return cls(
            architecture=architecture,
            encoder_channels=tuple(c // 8 for c in full.encoder_channels),
            decoder_channels=tuple(c // 8 for c in full.decoder_channels),
            refine_channels=tuple(c // 8 for c in full.refine_channels),
            clip_size=64,
            refine_size=refine_size,
            tiny=True,
        )

    @property
    def bottleneck_shape(self) -> Tuple[int, int, int, int]:
        side = self.clip_size // SPATIAL_REDUCTION
        return (self.encoder_channels[-1], 1, side, side)

    @property
    def clip_shape(self) -> Tuple[int, int, int, int]:
        return (RGB, CLIP_LENGTH, self.clip_size, self.clip_size)

    @property
    def upsample_steps(self) -> int:
        return (self.refine_size // self.clip_size).bit_length() - 1

    def param_shapes(self) -> Dict[str, Tuple[int, ...]]:
        """Ordered parameter names and shapes for this architecture."""
        shapes: Dict[str, Tuple[int, ...]] = {}
        channels_in = RGB
        for (name, _), channels_out in zip(ENCODER_LAYOUT, self.encoder_channels):
            shapes[f"coarse.{name}.weight"] = (channels_out, channels_in, 3, 3, 3)
            shapes[f"coarse.{name}.bias"] = (channels_out,)
            channels_in = channels_out
        for i, channels_out in enumerate(self.decoder_channels, start=1):
            shapes[f"coarse.dec{i}.weight"] = (channels_out, channels_in, 3, 3)
            shapes[f"coarse.dec{i}.bias"] = (channels_out,)
            channels_in = channels_out
        shapes["coarse.head.weight"] = (1, channels_in, 3, 3)
        shapes["coarse.head.bias"] = (1,)
        if self.architecture == Architecture.COARSE_FINE:
            channels_in = 1 + RGB
            for i, channels_out in enumerate(list(self.refine_channels) + [1], start=1):
                shapes[f"fine.conv{i}.weight"] = (channels_out, channels_in, 3, 3)
                shapes[f"fine.conv{i}.bias"] = (channels_out,)
                channels_in = channels_out
        return shapes


@dataclass
class ModelParams:
    """Named weight tensors of one network; both COARSE streams read the same objects."""
    net: NetConfig
    tensors: Dict[str, Tensor] = field(default_factory=dict)

    @property
    def architecture(self) -> Architecture:
        return self.net.architecture

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.tensors)

    def __len__(self) -> int:
        return len(self.tensors)

    def items(self):
        return self.tensors.items()

    def arrays(self) -> Dict[str, np.ndarray]:
        return {name: t.data for name, t in self.tensors.items()}

    def coarse_names(self) -> List[str]:
        return [n for n in self.tensors if n.startswith("coarse.")]

    def validate(self) -> None:
        expected = self.net.param_shapes()
        if list(expected) != list(self.tensors):
            raise ValueError(
                f"parameter names do not match the {self.architecture.value} schedule: "
                f"expected {list(expected)}, got {list(self.tensors)}"
            )
        for name, shape in expected.items():
            if self.tensors[name].shape != shape:
                raise ValueError(f"{name}: expected shape {shape}, got {self.tensors[name].shape}")

    @classmethod
    def from_arrays(cls, net: NetConfig, arrays: Dict[str, np.ndarray]) -> "ModelParams":
        params = cls(
            net=net,
            tensors={
                name: Tensor(np.array(arr, dtype=np.float64), requires_grad=True, name=name)
                for name, arr in arrays.items()
            },
        )
        params.validate()
        return params


def fan_in_bound(shape: Tuple[int, ...]) -> float:
    """He-uniform limit sqrt(6 / fan_in) for a C'×C×k... kernel."""
    fan_in = int(np.prod(shape[1:]))
    return float(np.sqrt(6.0 / fan_in))


def init_params(seed: int, net: NetConfig | None = None) -> ModelParams:
    """Fan-in scaled uniform weights, zero biases, reproducible from `seed`."""
    net = net or NetConfig()
    rng = np.random.default_rng(seed)
    arrays: Dict[str, np.ndarray] = {}
    for name, shape in net.param_shapes().items():
        if name.endswith(".bias"):
            arrays[name] = np.zeros(shape)
        else:
            bound = fan_in_bound(shape)
            arrays[name] = rng.uniform(-bound, bound, size=shape)
    logger.info(
        f"Initialized {net.architecture.value} parameters "
        f"({sum(a.size for a in arrays.values())} weights, seed {seed})"
    )
    return ModelParams.from_arrays(net, arrays)
