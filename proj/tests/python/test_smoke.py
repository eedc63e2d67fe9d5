import json

import numpy as np
import pytest

import mitoforge as mf


def random_image(h, w, seed, lo=0.0, hi=1.0):
    return np.random.default_rng(seed).uniform(lo, hi, size=(h, w, 3))


def test_splitmix_reference():
    assert mf.mix64(0x9E3779B97F4A7C15) == 0xE220A8397B1DCDAF
    assert mf.derive_seed(0, 0) == 0xE220A8397B1DCDAF


def test_identities():
    img = random_image(32, 32, 1)
    np.testing.assert_array_equal(mf.fisheye(img, 0.0), img)
    np.testing.assert_array_equal(mf.brightness_contrast(img, 0.0, 1.0), img)
    np.testing.assert_array_equal(mf.rotate(img, 0.0), img)
    np.testing.assert_allclose(mf.fda_transfer(img, img, 0.3), img, atol=1e-5)


def test_rotate_90_matches_numpy():
    img = random_image(5, 5, 2)
    np.testing.assert_array_equal(mf.rotate(img, 90.0), np.rot90(img))


def test_resize_pad_shape_and_letterbox():
    out = mf.resize_pad(np.full((150, 300, 3), 0.7), 224)
    assert out.shape == (224, 224, 3)
    assert out[0, 0, 0] == 0.0
    assert out[112, 112, 0] == pytest.approx(0.7)


def test_fda_amplitude_swap():
    src = random_image(32, 32, 3, 0.45, 0.55)
    tgt = random_image(32, 32, 4, 0.45, 0.55)
    out = mf.fda_transfer(src, tgt, 1.0)
    fo, ft, fs = (np.fft.fft2(a[..., 0]) for a in (out, tgt, src))
    np.testing.assert_allclose(np.abs(fo), np.abs(ft), rtol=1e-4)
    mask = (np.abs(fo) > 1e-6) & (np.abs(fs) > 1e-6)
    dphi = np.angle(fo[mask] / fs[mask])
    assert np.max(np.abs(dphi)) < 1e-3


def test_augment_one_is_deterministic():
    img = random_image(40, 30, 5)
    cfg = json.dumps({"side": 24, "fda_probability": 1.0, "fda_beta": 0.1})
    targets = [("t0.png", random_image(16, 16, 6))]
    a, pa = mf.augment_one(img, cfg, 7, targets, "x")
    b, pb = mf.augment_one(img, cfg, 7, targets, "x")
    np.testing.assert_array_equal(a, b)
    assert pa == pb
    assert pa["fda_target"] == "t0.png"
    assert a.shape == (24, 24, 3)
    with pytest.raises(mf.MitoforgeError, match="MissingTargets"):
        mf.augment_one(img, cfg, 7)


def test_balanced_accuracy_and_errors():
    assert mf.balanced_accuracy([0, 0, 0, 1, 1], [0, 0, 0, 0, 1], 2) == pytest.approx(0.875)
    with pytest.raises(mf.MitoforgeError, match="DegenerateLabels"):
        mf.balanced_accuracy([0, 0], [0, 0], 2)


def test_ensemble_predict_and_fit():
    a = np.array([[0.9, 0.1], [0.2, 0.8]])
    b = np.array([[0.3, 0.7], [0.7, 0.3]])
    probs, labels = mf.ensemble_predict([a, b], [0.25, 0.75])
    np.testing.assert_allclose(probs, 0.25 * a + 0.75 * b)
    assert labels == [1, 0]

    fit = mf.fit_greedy([b, a], [0, 1])
    assert fit["weights"] == [0.0, 1.0]
    assert fit["fit_balanced_accuracy"] == 1.0


def test_effective_weight_and_gradcheck():
    rng = np.random.default_rng(0)
    a, b, w0 = rng.normal(size=(4, 2)), rng.normal(size=(2, 3)), rng.normal(size=(4, 3))
    np.testing.assert_allclose(mf.effective_weight(a, b, w0, 0.5), w0 + 0.5 * a @ b, rtol=1e-12)
    assert mf.gradcheck(seed=7) < 1e-5


def test_weighted_sample_frequencies():
    groups = ["primary_train"] * 10 + ["external_a"] * 10 + ["external_b"] * 10
    idx = np.array(mf.weighted_sample(groups, 20000, 3))
    assert np.mean(idx < 10) == pytest.approx(1 / 1.3, abs=0.02)
    assert mf.weighted_sample(groups, 50, 3) == mf.weighted_sample(groups, 50, 3)
