import itertools

import numpy as np
import pytest

from driver_attention.data import split
from driver_attention.data.transforms import resize_bilinear
from driver_attention.metrics import (
    KL_EPSILON,
    GroundTruthPredictor,
    StaticPredictor,
    cc,
    evaluate,
    gaussian_baseline,
    kendall_tau,
    kl,
    mean_gt_baseline,
    read_report,
    write_report,
)
from driver_attention.models import AttentionMap, BaselineKind, HardSelection
from driver_attention.tensor import ShapeError


def kl_oracle(g, p, eps=KL_EPSILON):
    g, p = g.ravel() + eps, p.ravel() + eps
    g, p = g / g.sum(), p / p.sum()
    return float(np.sum(g * np.log(g / p)))


def tau_b_oracle(a, b):
    concordant = discordant = ties_a = ties_b = 0
    for i, j in itertools.combinations(range(len(a)), 2):
        da, db = np.sign(a[i] - a[j]), np.sign(b[i] - b[j])
        if da == 0 and db == 0:
            continue
        if da == 0:
            ties_a += 1
        elif db == 0:
            ties_b += 1
        elif da == db:
            concordant += 1
        else:
            discordant += 1
    return (concordant - discordant) / np.sqrt((concordant + discordant + ties_a) * (concordant + discordant + ties_b))


def test_cc_and_kl_match_direct_formulas():
    rng = np.random.default_rng(0)
    for _ in range(100):
        p, g = rng.uniform(size=(1, 9, 12)), rng.uniform(size=(1, 9, 12))
        assert cc(p, g) == pytest.approx(np.corrcoef(p.ravel(), g.ravel())[0, 1], abs=1e-12)
        assert kl(g, p) == pytest.approx(kl_oracle(g, p), abs=1e-10)


def test_cc_is_invariant_to_positive_affine_maps():
    rng = np.random.default_rng(1)
    p, g = rng.uniform(size=(1, 8, 8)), rng.uniform(size=(1, 8, 8))
    assert cc(3.0 * p + 0.5, g) == pytest.approx(cc(p, g), abs=1e-12)
    assert cc(-p, g) == pytest.approx(-cc(p, g), abs=1e-12)
    assert cc(g, g) == pytest.approx(1.0)


def test_kl_direction_and_identity():
    g = np.array([[[0.9, 0.1, 0.0]]])
    p = np.array([[[0.3, 0.3, 0.4]]])
    assert kl(g, p) == pytest.approx(kl_oracle(g, p))
    assert kl(g, p) != pytest.approx(kl(p, g))
    assert kl(g, g) == 0.0
    with pytest.raises(ValueError):
        kl(g, -p)


def test_degenerate_and_mismatched_maps():
    constant = np.full((1, 4, 4), 0.5)
    other = np.random.default_rng(2).uniform(size=(1, 4, 4))
    assert cc(constant, other) is None
    assert cc(AttentionMap(grid=other), AttentionMap(grid=other)) == pytest.approx(1.0)
    assert kl(np.zeros((1, 4, 4)), np.zeros((1, 4, 4))) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ShapeError):
        cc(np.ones((1, 4, 4)), np.ones((1, 4, 5)))


def test_kendall_tau_matches_tau_b_with_ties():
    rng = np.random.default_rng(3)
    for _ in range(100):
        a = rng.integers(0, 4, size=10).astype(float)
        b = rng.integers(0, 4, size=10).astype(float)
        if np.ptp(a) == 0 or np.ptp(b) == 0:
            continue
        assert kendall_tau(a, b) == pytest.approx(tau_b_oracle(a, b), abs=1e-12)
    assert kendall_tau([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)
    assert kendall_tau([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
    assert kendall_tau([1, 1, 1], [1, 2, 3]) is None
    with pytest.raises(ValueError):
        kendall_tau([1, 2], [1, 2, 3])


def test_gaussian_baseline_is_centred_and_scaled():
    baseline = gaussian_baseline((45, 80))
    assert baseline.kind == BaselineKind.CENTERED_GAUSSIAN
    assert baseline.grid.shape == (1, 45, 80)
    assert baseline.grid.max() == pytest.approx(1.0)
    assert np.unravel_index(baseline.grid.argmax(), baseline.grid.shape) == (0, 22, 39)
    np.testing.assert_allclose(baseline.grid, baseline.grid[..., ::-1])
    assert (baseline.sigma_y, baseline.sigma_x) == (pytest.approx(11.25), pytest.approx(20.0))
    assert baseline.predict((30, 30)).shape == (1, 30, 30)
    with pytest.raises(ValueError):
        gaussian_baseline((10, 10), sigma_fraction=0.0)


def test_mean_gt_baseline_averages_maps():
    maps = [np.zeros((1, 2, 2)), np.ones((1, 2, 2)), np.full((2, 2), 2.0)]
    baseline = mean_gt_baseline(maps)
    np.testing.assert_allclose(baseline.grid, np.ones((1, 2, 2)))
    with pytest.raises(ValueError):
        mean_gt_baseline([])
    with pytest.raises(ValueError):
        mean_gt_baseline([np.zeros((1, 2, 2)), np.zeros((1, 3, 3))])


def _test_refs(store):
    lengths = dict(zip(store.manifest["sequence_id"], store.manifest["frames"]))
    return split(lengths, store.default_test_ids()).test


def test_ground_truth_against_itself_is_perfect(small_store):
    report = evaluate(GroundTruthPredictor(), small_store, _test_refs(small_store))
    assert len(report.rows) == 3 * (64 - 15)
    assert all(r.cc == pytest.approx(1.0) for r in report.rows)
    assert all(r.kl == pytest.approx(0.0, abs=1e-12) for r in report.rows)
    assert report.cc_summary().std == pytest.approx(0.0, abs=1e-12)


def test_evaluation_does_not_depend_on_clip_order(small_store):
    refs = _test_refs(small_store)
    predictor = StaticPredictor(gaussian_baseline((45, 80)))
    forward = evaluate(predictor, small_store, refs)
    backward = evaluate(predictor, small_store, list(reversed(refs)))
    assert forward.rows == backward.rows
    assert forward.summary == backward.summary


def test_report_csv_rows_and_aggregates(tmp_path, small_store):
    refs = _test_refs(small_store)
    hard = {"downtown_01": HardSelection(windows=[(16, 32)])}
    report = evaluate(
        StaticPredictor(gaussian_baseline((45, 80))), small_store, refs, hard=hard, sigma_fraction=0.25
    )
    path = write_report(report, tmp_path / "report.csv")
    header = [line for line in path.read_text().splitlines() if line.startswith("#")]
    assert "# std: population" in header
    assert "# sigma_fraction: 0.25" in header
    frame = read_report(path)
    per_clip = frame[~frame["clip_end_frame"].isin(["MEAN", "STD"])]
    assert len(per_clip) == len(refs)
    assert len(frame) == len(refs) + 2 * 3 + 2 + 2
    hard_rows = frame[(frame["sequence_id"] == "ALL_HARD") & (frame["clip_end_frame"] == "MEAN")]
    assert int(hard_rows["count"].iloc[0]) == 16
    assert int(per_clip["hard"].sum()) == 16
    all_mean = frame[(frame["sequence_id"] == "ALL") & (frame["clip_end_frame"] == "MEAN")]
    assert float(all_mean["cc"].iloc[0]) == pytest.approx(report.summary["cc_mean"], abs=1e-9)
    all_std = frame[(frame["sequence_id"] == "ALL") & (frame["clip_end_frame"] == "STD")]
    assert float(all_std["cc"].iloc[0]) == pytest.approx(np.std([r.cc for r in report.rows]), abs=1e-9)


def test_empty_hard_subset_is_written_as_na(tmp_path, small_store):
    report = evaluate(StaticPredictor(gaussian_baseline((45, 80))), small_store, _test_refs(small_store)[:5])
    frame = read_report(write_report(report, tmp_path / "report.csv"))
    hard_mean = frame[(frame["sequence_id"] == "ALL_HARD") & (frame["clip_end_frame"] == "MEAN")]
    assert np.isnan(hard_mean["cc"].iloc[0])
    assert int(hard_mean["count"].iloc[0]) == 0
    assert "NA" in (tmp_path / "report.csv").read_text()


class _UpsampledTruth:
    name = "upsampled"

    def predict_clip(self, sequence, end_index):
        return resize_bilinear(sequence.maps[end_index], (128, 128))


def test_report_header_names_the_scoring_grid(tmp_path, small_store):
    refs = _test_refs(small_store)[:4]
    native = evaluate(StaticPredictor(gaussian_baseline((45, 80))), small_store, refs)
    upsampled = evaluate(_UpsampledTruth(), small_store, refs, resampling="gt")
    downsampled = evaluate(_UpsampledTruth(), small_store, refs, resampling="prediction")
    assert (native.grid, upsampled.grid, downsampled.grid) == ("45x80", "128x128", "45x80")
    header = write_report(upsampled, tmp_path / "report.csv").read_text().splitlines()[:7]
    assert "# grid: 128x128" in header
    assert "# resampling: gt" in header
    assert downsampled.resampling == "prediction"
