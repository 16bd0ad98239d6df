import logging

import numpy as np
import pytest

from driver_attention.data import (
    ClipDataset,
    SequenceStore,
    SynthConfig,
    TensorFormatError,
    crop_policy_aggressive,
    crop_policy_mild,
    frame_assignment,
    make_clip,
    mirror,
    read_indexed,
    read_tensor,
    resize_bilinear,
    split,
    synth_generate,
    validation_range,
    write_indexed,
    write_tensor,
)
from driver_attention.data.split import ClipRef
from driver_attention.data.tensor_io import MAGIC, decode_tensor, encode_tensor, header_size
from driver_attention.data.transforms import mirror_with_flag, source_side
from driver_attention.models import CATEGORIES, CropPolicy, VideoClip

from .conftest import SMALL_SYNTH


# tensor container


@pytest.mark.parametrize("dtype, array", [
    ("float32", np.linspace(0, 1, 24).reshape(2, 3, 4)),
    ("float64", np.linspace(-1, 1, 5)),
    ("uint8", np.arange(12, dtype=np.uint8).reshape(3, 4)),
])
def test_tensor_file_round_trip(tmp_path, dtype, array):
    path = tmp_path / "t.drvt"
    write_tensor(path, array, dtype)
    loaded = read_tensor(path)
    assert loaded.dtype == np.dtype(dtype)
    np.testing.assert_array_equal(loaded, array.astype(dtype))


def test_tensor_file_size_matches_layout(tmp_path):
    path = tmp_path / "t.drvt"
    write_tensor(path, np.zeros((3, 5, 7)))
    assert path.stat().st_size == header_size(3) + 3 * 5 * 7 * 4
    assert header_size(3) == 16 + 24


def test_bad_magic_and_rank_are_rejected():
    buf = bytearray(encode_tensor(np.zeros(3)))
    assert bytes(buf[:4]) == MAGIC
    buf[:4] = b"XXXX"
    with pytest.raises(TensorFormatError, match="magic"):
        decode_tensor(bytes(buf))
    with pytest.raises(TensorFormatError):
        encode_tensor(np.zeros((1,) * 9))
    forged = bytearray(encode_tensor(np.zeros(1)))
    forged[12:16] = (9).to_bytes(4, "little")
    with pytest.raises(TensorFormatError, match="rank"):
        decode_tensor(bytes(forged))


def test_truncated_and_padded_payloads_are_rejected():
    buf = encode_tensor(np.ones((4, 4)))
    with pytest.raises(TensorFormatError, match="truncated"):
        decode_tensor(buf[:-1])
    with pytest.raises(TensorFormatError, match="trailing"):
        decode_tensor(buf + b"\0")


def test_indexed_container_round_trip(tmp_path):
    path = tmp_path / "i.drvt"
    write_indexed(path, np.arange(6, dtype=np.float32), {"names": ["a", "b"], "n": 2})
    flat, index = read_indexed(path)
    np.testing.assert_array_equal(flat, np.arange(6))
    assert index == {"names": ["a", "b"], "n": 2}


def test_uint8_storage_range_is_checked():
    with pytest.raises(TensorFormatError):
        encode_tensor(np.array([300.0]), "uint8")


# clips and transforms


def test_make_clip_takes_sixteen_frames_ending_at_index(small_store):
    sequence = small_store.get(small_store.sequence_ids[0])
    clip = make_clip(sequence, 20)
    assert isinstance(clip, VideoClip)
    assert clip.frames.shape == (3, 16) + sequence.resolution
    np.testing.assert_array_equal(clip.frames[:, 0], sequence.frames[5])
    np.testing.assert_array_equal(clip.last_frame, sequence.frames[20])
    with pytest.raises(IndexError):
        make_clip(sequence, 14)
    with pytest.raises(IndexError):
        make_clip(sequence, len(sequence))


def test_video_clip_rejects_out_of_range_values():
    with pytest.raises(ValueError):
        VideoClip(frames=np.full((3, 16, 4, 4), 1.5))


def test_resize_preserves_range_and_constants():
    rng = np.random.default_rng(0)
    image = rng.uniform(size=(3, 45, 80))
    out = resize_bilinear(image, (64, 64))
    assert out.shape == (3, 64, 64)
    assert image.min() <= out.min() and out.max() <= image.max()
    np.testing.assert_allclose(resize_bilinear(np.full((1, 45, 80), 0.3), (20, 31)), 0.3)


@pytest.mark.parametrize("policy_fn, policy", [(crop_policy_mild, CropPolicy.MILD), (crop_policy_aggressive, CropPolicy.AGGRESSIVE)])
def test_crops_stay_inside_the_source(policy_fn, policy):
    rng = np.random.default_rng(1)
    clip = rng.uniform(size=(3, 16, 45, 80))
    attention_map = rng.uniform(size=(1, 45, 80))
    side = source_side(policy, 112)
    assert side == {CropPolicy.MILD: 128, CropPolicy.AGGRESSIVE: 256}[policy]
    source_map = resize_bilinear(attention_map, (side, side))
    for _ in range(50):
        sample = policy_fn(clip, attention_map, rng)
        y, x = sample.origin
        assert 0 <= y <= side - 112 and 0 <= x <= side - 112
        assert sample.cropped_clip.shape == (3, 16, 112, 112)
        assert sample.resized_clip.shape == (3, 16, 112, 112)
        assert sample.full_map.shape == (1, 448, 448)
        assert sample.last_frame.shape == (3, 448, 448)
        np.testing.assert_array_equal(sample.cropped_map, source_map[:, y:y + 112, x:x + 112])


def test_aggressive_crop_covers_under_a_quarter_of_the_source():
    side = source_side(CropPolicy.AGGRESSIVE, 112)
    assert (112 / side) ** 2 < 0.25
    assert source_side(CropPolicy.AGGRESSIVE, 64) == 146


def _planted_peak(shape, center):
    rows, cols = np.mgrid[0 : shape[0], 0 : shape[1]]
    return np.exp(-((rows - center[0]) ** 2 + (cols - center[1]) ** 2) / 4.0)


def _peak(plane):
    return np.unravel_index(plane.argmax(), plane.shape)


@pytest.mark.parametrize("policy_fn", [crop_policy_mild, crop_policy_aggressive])
def test_clip_and_map_share_crop_and_mirror_geometry(policy_fn):
    bump = _planted_peak((45, 80), (20, 30))
    clip = np.broadcast_to(bump, (3, 16, 45, 80)).copy()
    attention_map = bump[None].copy()
    rng = np.random.default_rng(2)
    seen = 0
    for _ in range(40):
        mirrored_clip, mirrored_map, flipped = mirror_with_flag(clip, attention_map, rng)
        sample = policy_fn(mirrored_clip, mirrored_map, rng, clip_size=64, refine_size=128)
        expected_x = 79 - 30 if flipped else 30
        assert _peak(mirrored_map[0]) == (20, expected_x)
        assert _peak(sample.last_frame[0]) == _peak(sample.full_map[0])
        assert _peak(sample.resized_clip[1, 7]) == _peak(resize_bilinear(mirrored_map, (64, 64))[0])
        if sample.cropped_map.max() < 0.5:
            continue
        seen += 1
        for channel in range(3):
            assert _peak(sample.cropped_clip[channel, -1]) == _peak(sample.cropped_map[0])
        side = sample.source_size
        y, x = sample.origin
        peak_y, peak_x = _peak(sample.cropped_map[0])
        assert abs(peak_y + y - 20 * side / 45) <= side / 45 + 1
        assert abs(peak_x + x - expected_x * side / 80) <= side / 80 + 1
    assert seen > 0


def test_mirror_rate_and_consistency():
    rng = np.random.default_rng(3)
    clip = np.arange(2 * 16 * 2 * 3, dtype=np.float64).reshape(2, 16, 2, 3)
    attention_map = np.arange(6, dtype=np.float64).reshape(1, 2, 3)
    flips = 0
    for _ in range(10_000):
        out_clip, out_map = mirror(clip, attention_map, rng)
        flipped = out_map[0, 0, 0] != attention_map[0, 0, 0]
        if flipped:
            np.testing.assert_array_equal(out_clip, clip[..., ::-1])
            np.testing.assert_array_equal(out_map, attention_map[..., ::-1])
        flips += flipped
    assert abs(flips / 10_000 - 0.5) < 0.02


# split


def test_validation_window_of_a_long_sequence():
    assert validation_range(9000) == (4250, 4750)
    flags = frame_assignment(9000)
    assert flags.sum() == 500 and flags[4250] and not flags[4249] and not flags[4750]


def test_split_is_disjoint_and_respects_test_ids():
    data_split = split({"s1": 9000, "s2": 600, "t1": 100}, ["t1"])
    assert {r.sequence_id for r in data_split.test} == {"t1"}
    assert len(data_split.test) == 100 - 15
    train, validation = set(data_split.train), set(data_split.validation)
    assert not train & validation
    lo, hi = data_split.validation_frames["s1"]
    for ref in data_split.train:
        if ref.sequence_id == "s1":
            start = ref.end_index - 15
            assert ref.end_index < lo or start >= hi
    for ref in data_split.validation:
        assert ref.end_index - 15 >= data_split.validation_frames[ref.sequence_id][0]
    assert data_split.train_sequences == ["s1", "s2"]
    assert data_split.test_sequences == ["t1"]
    with pytest.raises(ValueError):
        data_split.refs("holdout")


def test_short_sequence_warns_and_uses_central_third(caplog):
    with caplog.at_level(logging.WARNING):
        assert validation_range(300, "short") == (100, 200)
    assert "short" in caplog.text


def test_unknown_test_sequence_is_rejected():
    with pytest.raises(ValueError):
        split({"a": 100}, ["b"])


# synthetic data and the on-disk store


def test_synthetic_generation_is_deterministic():
    config = SynthConfig(sequences_per_landscape=1, frames=32, height=24, width=40)
    first, second = synth_generate(config, seed=5), synth_generate(config, seed=5)
    other = synth_generate(config, seed=6)
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a.frames, b.frames)
        np.testing.assert_array_equal(a.maps, b.maps)
        np.testing.assert_array_equal(a.segmentation, b.segmentation)
    assert not np.array_equal(first[0].frames, other[0].frames)


def test_synthetic_dataset_layout(synthetic_sequences):
    assert [s.sequence_id for s in synthetic_sequences] == [
        "downtown_00", "downtown_01", "countryside_00", "countryside_01", "highway_00", "highway_01",
    ]
    for sequence in synthetic_sequences:
        assert sequence.frames.shape == (320, 3, 45, 80)
        assert sequence.frames.min() >= 0.0 and sequence.frames.max() <= 1.0
        assert sequence.maps.min() >= 0.0
        np.testing.assert_allclose(sequence.maps.max(axis=(1, 2, 3)), 1.0)
        assert sequence.segmentation.max() < len(CATEGORIES)
        assert sequence.events().sum() == 32
        onsets = np.flatnonzero(np.diff(sequence.events().astype(int), prepend=0) == 1)
        assert len(onsets) == 2
        assert all(onset % 16 for onset in onsets)


def test_store_reads_back_what_was_written(small_store):
    assert sorted(small_store.default_test_ids()) == ["countryside_01", "downtown_01", "highway_01"]
    assert len(small_store) == 6
    generated = synth_generate(SMALL_SYNTH, seed=3)[0]
    loaded = small_store.get(generated.sequence_id)
    assert loaded is small_store.get(generated.sequence_id)
    np.testing.assert_array_equal(loaded.frames, generated.frames.astype(np.float32))
    np.testing.assert_array_equal(loaded.segmentation, generated.segmentation)
    np.testing.assert_allclose(loaded.speeds, generated.speeds, atol=1e-6)
    with pytest.raises(KeyError):
        small_store.get("nowhere_00")


def test_store_requires_a_manifest(tmp_path):
    with pytest.raises(FileNotFoundError):
        SequenceStore(tmp_path)


def test_clip_dataset_is_reproducible(small_store):
    refs = [ClipRef(sequence_id="downtown_00", end_index=e) for e in range(15, 64)]
    first = ClipDataset(small_store, refs, 64, 128, CropPolicy.AGGRESSIVE, seed=8).batch(3)
    second = ClipDataset(small_store, refs, 64, 128, CropPolicy.AGGRESSIVE, seed=8).batch(3)
    for a, b in zip(first, second):
        assert a.origin == b.origin and a.mirrored == b.mirrored
        np.testing.assert_array_equal(a.cropped_clip, b.cropped_clip)
        np.testing.assert_array_equal(a.full_map, b.full_map)
    with pytest.raises(ValueError):
        ClipDataset(small_store, [], 64, 128)
