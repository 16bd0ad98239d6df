"""
Procedural driving scenes with a planted gaze policy.

Each frame shows sky above the horizon, a road trapezoid converging to a
vanishing point, roadside scenery chosen by landscape, a lead vehicle the
driver follows, one oncoming vehicle and moving lane dashes whose phase
advances with speed. The ground-truth map is a Gaussian centred just below
the vanishing point whose spread shrinks with speed. During planted event
windows the gaze jumps to a pedestrian at the roadside and the central
component drops to a small residual weight.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from ..models import CATEGORIES, SPEED_BUCKETS, FrameRecord, Landscape
from .clips import TRUTH_COLUMNS, SequenceData, write_manifest, write_sequence
from .tensor_io import PathLike

logger = logging.getLogger(__name__)

LABEL = {name: i for i, name in enumerate(CATEGORIES)}

# speed drawn inside each bucket, kept clear of the bucket edges
SPEED_RANGES: Tuple[Tuple[float, float], ...] = ((2.0, 8.0), (12.0, 28.0), (32.0, 48.0), (52.0, 68.0), (72.0, 110.0))
EVENT_BUCKETS = ("a", "b")

COLORS: Dict[str, Tuple[float, float, float]] = {
    "sky": (0.55, 0.70, 0.95),
    "road": (0.35, 0.35, 0.37),
    "road_limits": (0.92, 0.92, 0.90),
    "sidewalk": (0.62, 0.60, 0.55),
    "buildings": (0.60, 0.36, 0.30),
    "trees": (0.16, 0.48, 0.18),
    "traffic_signs": (0.95, 0.80, 0.10),
    "vehicles": (0.80, 0.10, 0.12),
    "oncoming": (0.15, 0.20, 0.70),
    "people": (1.00, 0.55, 0.85),
    "cycles": (0.20, 0.85, 0.85),
}


class SynthConfig(BaseModel):
    sequences_per_landscape: int = Field(default=2, ge=1)
    frames: int = Field(default=320, ge=16)
    height: int = Field(default=45, ge=16)
    width: int = Field(default=80, ge=16)
    segment_length: int = Field(default=32, ge=1)
    event_length: int = Field(default=16, ge=1)
    event_fraction: float = Field(default=0.10, ge=0.0, lt=1.0)
    event_residual: float = Field(default=0.1, ge=0.0, le=1.0)
    horizon: float = Field(default=0.42, gt=0.0, lt=1.0)
    gaze_offset: float = Field(default=0.06, ge=0.0)
    vp_drift: float = Field(default=1.5, ge=0.0)
    with_segmentation: bool = True


def gaze_sigma(speed_kmh: float, width: int) -> Tuple[float, float]:
    """(σ_y, σ_x) of the gaze Gaussian; strictly decreasing in speed."""
    sigma_x = 0.25 * width / (1.0 + speed_kmh / 20.0)
    return 0.6 * sigma_x, sigma_x


def gaussian(shape: Tuple[int, int], center: Tuple[float, float], sigma: Tuple[float, float]) -> np.ndarray:
    yy, xx = np.mgrid[0:shape[0], 0:shape[1]].astype(np.float64)
    return np.exp(-((yy - center[0]) ** 2 / (2.0 * sigma[0] ** 2) + (xx - center[1]) ** 2 / (2.0 * sigma[1] ** 2)))


def speed_profile(config: SynthConfig, rng: np.random.Generator) -> Tuple[np.ndarray, List[str]]:
    """Per-frame speeds cycling through the five buckets segment by segment."""
    speeds = np.empty(config.frames)
    buckets: List[str] = []
    n_segments = -(-config.frames // config.segment_length)
    for s in range(n_segments):
        k = s % len(SPEED_BUCKETS)
        lo, hi = SPEED_RANGES[k]
        base = rng.uniform(lo, hi)
        start, stop = s * config.segment_length, min((s + 1) * config.segment_length, config.frames)
        jitter = rng.normal(0.0, 0.5, size=stop - start)
        speeds[start:stop] = np.clip(base + jitter, lo, hi)
        buckets.extend([SPEED_BUCKETS[k][0]] * (stop - start))
    return speeds, buckets


def plan_events(config: SynthConfig, buckets: List[str], rng: np.random.Generator) -> np.ndarray:
    """Event flags: separated windows inside low-speed segments covering `event_fraction` of frames.

    Onsets are drawn off multiples of `event_length` whenever the low-speed runs allow it.
    """
    length = config.event_length
    valid = [
        start for start in range(0, config.frames - length + 1)
        if all(b in EVENT_BUCKETS for b in buckets[start:start + length])
    ]
    onsets = [start for start in valid if start % length] or valid
    wanted = int(round(config.event_fraction * config.frames / length))
    flags = np.zeros(config.frames, dtype=bool)
    placed = 0
    for start in rng.permutation(onsets) if onsets else []:
        if placed == wanted:
            break
        # one calm frame between events
        if flags[max(0, start - 1):start + length + 1].any():
            continue
        flags[start:start + length] = True
        placed += 1
    if placed < wanted:
        logger.warning(f"Placed {placed} of {wanted} events; low-speed segments are too short")
    return flags


def _paint(frame: np.ndarray, seg: np.ndarray, mask: np.ndarray, color: str, label: str) -> None:
    frame[:, mask] = np.asarray(COLORS[color])[:, None]
    seg[mask] = LABEL[label]


def _box(shape: Tuple[int, int], center: Tuple[float, float], half: Tuple[float, float]) -> np.ndarray:
    yy, xx = np.mgrid[0:shape[0], 0:shape[1]]
    return (np.abs(yy - center[0]) <= half[0]) & (np.abs(xx - center[1]) <= half[1])


def render_frame(
    config: SynthConfig,
    landscape: Landscape,
    t: int,
    vp: Tuple[float, float],
    gaze: Tuple[float, float],
    travelled: float,
    event_at: Tuple[float, float] | None,
    texture: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    h, w = config.height, config.width
    vp_y, vp_x = vp
    frame = np.zeros((3, h, w))
    seg = np.zeros((h, w), dtype=np.uint8)
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)

    depth = np.clip((yy - vp_y) / max(h - 1 - vp_y, 1.0), 0.0, 1.0)
    half_road = 0.45 * w * depth
    offset = np.abs(xx - vp_x)
    below = yy >= vp_y

    scenery = {Landscape.DOWNTOWN: "buildings", Landscape.COUNTRYSIDE: "trees", Landscape.HIGHWAY: "trees"}[landscape]
    _paint(frame, seg, np.ones((h, w), dtype=bool), scenery, scenery)
    if landscape == Landscape.HIGHWAY:
        _paint(frame, seg, below & (xx > vp_x) & (yy < vp_y + 0.2 * h), "buildings", "buildings")
    _paint(frame, seg, yy < vp_y, "sky", "sky")
    _paint(frame, seg, below & (offset <= half_road * 1.35 + 1.0), "sidewalk", "sidewalk")
    _paint(frame, seg, below & (offset <= half_road + 1.0), "road_limits", "road_limits")
    _paint(frame, seg, below & (offset <= half_road), "road", "road")

    # lane dashes move towards the viewer at a rate set by the travelled distance
    phase = (1.0 / np.maximum(depth, 0.05) + travelled) % 4.0
    _paint(frame, seg, below & (offset <= 0.5 + 0.02 * w * depth) & (phase < 2.0) & (depth > 0.1), "road_limits", "road")

    sign_y, sign_x = vp_y + 0.12 * h, min(w - 2.0, vp_x + 0.3 * w)
    _paint(frame, seg, _box((h, w), (sign_y, sign_x), (max(1.0, 0.04 * h), 1.0)), "traffic_signs", "traffic_signs")

    cycle = (t * 0.7) % (0.4 * w)
    if landscape == Landscape.DOWNTOWN:
        _paint(frame, seg, _box((h, w), (vp_y + 0.3 * h, 0.1 * w + cycle), (1.0, 1.0)), "cycles", "cycles")

    s = ((t * 1.3) % 40.0) / 40.0
    on_y = vp_y + s * (h - 1 - vp_y)
    on_x = vp_x - 0.22 * w * s
    size = 0.5 + 2.5 * s
    _paint(frame, seg, _box((h, w), (on_y, on_x), (0.6 * size, size)), "oncoming", "vehicles")

    lead_half = (max(1.0, 0.045 * h), max(1.5, 0.05 * w))
    _paint(frame, seg, _box((h, w), gaze, lead_half), "vehicles", "vehicles")

    if event_at is not None:
        _paint(frame, seg, _box((h, w), event_at, (max(1.5, 0.07 * h), max(1.0, 0.025 * w))), "people", "people")

    frame = np.clip(frame + texture, 0.0, 1.0)
    return frame, seg


def attention_map(
    config: SynthConfig, gaze: Tuple[float, float], speed_kmh: float, event_at: Tuple[float, float] | None
) -> np.ndarray:
    shape = (config.height, config.width)
    grid = gaussian(shape, gaze, gaze_sigma(speed_kmh, config.width))
    if event_at is not None:
        blob = 0.06 * config.width
        grid = config.event_residual * grid + gaussian(shape, event_at, (blob, blob))
    return (grid / grid.max())[None]


def generate_sequence(
    config: SynthConfig, landscape: Landscape, sequence_id: str, rng: np.random.Generator
) -> SequenceData:
    h, w = config.height, config.width
    speeds, buckets = speed_profile(config, rng)
    events = plan_events(config, buckets, rng)
    base_vp = (config.horizon * h, w / 2.0 + rng.uniform(-0.08, 0.08) * w)
    drift_phase = rng.uniform(0.0, 2.0 * np.pi, size=2)
    texture = rng.normal(0.0, 0.03, size=(3, h, w))
    event_side = 1.0

    frames = np.empty((config.frames, 3, h, w))
    maps = np.empty((config.frames, 1, h, w))
    seg = np.empty((config.frames, h, w), dtype=np.uint8)
    truth_rows = []
    records = []
    travelled = 0.0
    for t in range(config.frames):
        if events[t] and (t == 0 or not events[t - 1]):
            event_side = float(rng.choice([-1.0, 1.0]))
        vp = (
            base_vp[0] + 0.5 * config.vp_drift * np.sin(2.0 * np.pi * t / 89.0 + drift_phase[0]),
            base_vp[1] + config.vp_drift * np.sin(2.0 * np.pi * t / 97.0 + drift_phase[1]),
        )
        gaze = (vp[0] + config.gaze_offset * h, vp[1])
        event_at = (vp[0] + 0.16 * h, w / 2.0 + event_side * 0.36 * w) if events[t] else None
        travelled += speeds[t] / 60.0
        frames[t], seg[t] = render_frame(config, landscape, t, vp, gaze, travelled, event_at, texture)
        maps[t] = attention_map(config, gaze, speeds[t], event_at)
        truth_rows.append([t, vp[0], vp[1], int(events[t])])
        records.append(
            FrameRecord(
                frame_index=t,
                speed_kmh=float(speeds[t]),
                landscape=landscape,
                frame_path=f"frames/{t:06d}.drvt",
                map_path=f"maps/{t:06d}.drvt",
                seg_path=f"seg/{t:06d}.drvt" if config.with_segmentation else None,
            )
        )
    return SequenceData(
        sequence_id=sequence_id,
        landscape=landscape,
        frames=frames,
        maps=maps,
        records=records,
        segmentation=seg if config.with_segmentation else None,
        truth=pd.DataFrame(truth_rows, columns=TRUTH_COLUMNS),
    )


def synth_generate(config: SynthConfig, seed: int) -> List[SequenceData]:
    """All sequences of a synthetic dataset, bit-identical for a given seed."""
    sequences = []
    index = 0
    for landscape in Landscape:
        for k in range(config.sequences_per_landscape):
            rng = np.random.default_rng([seed, index])
            sequences.append(generate_sequence(config, landscape, f"{landscape.value}_{k:02d}", rng))
            index += 1
    logger.info(f"Generated {len(sequences)} synthetic sequences of {config.frames} frames (seed {seed})")
    return sequences


def default_test_ids(sequences: List[SequenceData]) -> List[str]:
    """The last sequence of each landscape."""
    last: Dict[Landscape, str] = {}
    for sequence in sequences:
        last[sequence.landscape] = sequence.sequence_id
    return sorted(last.values())


def write_dataset(root: PathLike, sequences: List[SequenceData]) -> pd.DataFrame:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    for sequence in sequences:
        write_sequence(root, sequence)
    manifest = write_manifest(root, sequences, default_test_ids(sequences))
    logger.info(f"Wrote dataset with {len(sequences)} sequences to {root}")
    return manifest
