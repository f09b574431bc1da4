import math

import numpy as np
import pytest

import enfpd


def test_alias():
    assert abs(enfpd.flicker_alias_frequency(50, 30000 / 1001) - 10.09) < 0.005
    assert enfpd.alias_frequency(10, 30000 / 1001) == pytest.approx(10.0)


def test_pearson():
    assert enfpd.pearson([1, 2, 3], [1, 2, 4]) == pytest.approx(0.98198050606)
    assert enfpd.pearson([1, 2, 3], [5, 5, 5]) is None


def test_roc_auc():
    auc, points = enfpd.roc_auc([0.9, 0.7, 0.8, 0.1], [1, 1, 0, 0])
    assert auc == 0.75  # 3 of 4 pairs ordered, no ties
    assert points[0][:2] == (0.0, 0.0)
    assert points[-1][:2] == (1.0, 1.0)
    with pytest.raises(enfpd.EnfpdError):
        enfpd.roc_auc([0.1, 0.2], [1, 1])


def test_stft_tone():
    fs = 30000 / 1001
    t = np.arange(int(math.ceil(60 * fs))) / fs
    est = enfpd.stft_enf_estimate(0.5 + 0.1 * np.sin(2 * np.pi * 10.09 * t))
    assert len(est) == 41
    assert max(abs(f - 10.09) for f in est) < 0.005


def test_segment_constant_frame():
    labels = enfpd.segment_slic(np.full((80, 80), 0.5, dtype=np.float32), superpixels=4)
    assert labels.shape == (80, 80)
    assert sorted(np.bincount(labels.ravel())) == [1600] * 4


def test_simulate_and_detect():
    frames, alias = enfpd.simulate(width=64, height=48, seconds=40, label="present", seed=2)
    assert frames.shape == (1199, 48, 64)
    assert frames.dtype == np.float32
    assert alias == pytest.approx(10.09, abs=0.005)
    config = {
        "slic.target_superpixels": "12",
        "steady.tau": "40",
        "stft.window_seconds": "10",
        "clip_seconds": "40",
    }
    report = enfpd.detect_frames(frames, config=config)
    assert report["verdict"] == "EnfPresent"
    assert report["f1"] > 0.95
    assert report["L"] == len(report["per_region"])


def test_bad_config_raises():
    frames = np.zeros((10, 8, 8), dtype=np.float32)
    with pytest.raises(enfpd.EnfpdError):
        enfpd.detect_frames(frames, config={"no.such.key": "1"})


def test_default_config_keys():
    cfg = enfpd.default_config()
    assert cfg["threshold"] == "0.8"
    assert cfg["representative_mode"] == "median"
