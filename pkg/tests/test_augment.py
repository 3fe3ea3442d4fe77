import colorsys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from attribnet.augment import (
    Augmenter,
    PhotometricRanges,
    adjust,
    gaussian_augment,
    hsv_to_rgb,
    photometric_augment,
    photometric_params,
    random_image,
    rgb_to_hsv,
)


def test_zero_sigma_is_identity():
    x = np.array([1.0, -2.0, 3.5])
    np.testing.assert_array_equal(gaussian_augment(x, 0.0, 1, 0), x)


def test_gaussian_deterministic_per_key():
    x = np.zeros(5)
    np.testing.assert_array_equal(gaussian_augment(x, 1.0, 3, 7), gaussian_augment(x, 1.0, 3, 7))
    assert not np.array_equal(gaussian_augment(x, 1.0, 3, 7), gaussian_augment(x, 1.0, 3, 8))
    np.testing.assert_array_equal(gaussian_augment(x, 1.0, 3, (2, 4)), gaussian_augment(x, 1.0, 3, (2, 4)))


def test_gaussian_variance():
    x = np.zeros(10)
    eps = np.concatenate([gaussian_augment(x, 1.0, 42, i) for i in range(10_000)])
    assert eps.size == 100_000
    assert abs(eps.var() - 1.0) < 0.02


def test_substreams_uncorrelated():
    a = np.array([gaussian_augment(np.zeros(1), 1.0, 5, (i, 0))[0] for i in range(10_000)])
    b = np.array([gaussian_augment(np.zeros(1), 1.0, 5, (i, 1))[0] for i in range(10_000)])
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.02


def test_default_ranges():
    r = PhotometricRanges()
    assert r.brightness == (0.875, 1.125) and r.contrast == (0.5, 1.5)
    assert r.saturation == (0.8, 1.2) and r.hue == (-0.1, 0.1)
    with pytest.raises(ValueError):
        PhotometricRanges(brightness=(1.2, 1.0))


def test_identity_parameters_leave_image_unchanged():
    img = random_image(6, 5, seed=1)
    out = photometric_augment(img, PhotometricRanges.fixed(), 0, 0)
    np.testing.assert_allclose(out, img, atol=1e-15)


@pytest.mark.parametrize("s, h", [(0.5, 0.0), (1.7, 0.3), (0.0, -0.1)])
def test_gray_image_is_fixed_by_saturation_and_hue(s, h):
    img = np.full((3, 4, 4), 0.4)
    img[:, 1, 2] = 0.9
    np.testing.assert_allclose(adjust(img, 1.0, 1.0, s, h), img, atol=1e-12)


def test_brightness_clamps():
    img = np.full((3, 2, 2), 0.75)
    np.testing.assert_array_equal(adjust(img, 2.0, 1.0, 1.0, 0.0), np.ones((3, 2, 2)))


def test_hsv_round_trip_matches_colorsys(rng):
    img = rng.random((3, 5, 5))
    hsv = rgb_to_hsv(img)
    for i in range(5):
        for j in range(5):
            np.testing.assert_allclose(hsv[:, i, j], colorsys.rgb_to_hsv(*img[:, i, j]), atol=1e-12)
    np.testing.assert_allclose(hsv_to_rgb(hsv), img, atol=1e-12)


def test_params_are_drawn_inside_ranges():
    r = PhotometricRanges()
    for i in range(200):
        b, c, s, h = photometric_params(r, 9, i)
        assert 0.875 <= b <= 1.125 and 0.5 <= c <= 1.5 and 0.8 <= s <= 1.2 and -0.1 <= h <= 0.1


@given(arrays(float, (3, 3, 4), elements=st.floats(0, 1)), st.integers(0, 2**32), st.integers(0, 10**6))
def test_photometric_output_in_unit_range_and_deterministic(img, seed, index):
    a = photometric_augment(img, PhotometricRanges(), seed, index)
    assert a.min() >= 0.0 and a.max() <= 1.0
    np.testing.assert_array_equal(a, photometric_augment(img, PhotometricRanges(), seed, index))


def test_augmenter_photometric_flattens_channel_major():
    img = random_image(4, 4, seed=3)
    aug = Augmenter("photometric", image_shape=(4, 4))
    out = aug(img.reshape(-1), 1, 2)
    np.testing.assert_array_equal(out, photometric_augment(img, PhotometricRanges(), 1, 2).reshape(-1))
    with pytest.raises(ValueError):
        aug(np.zeros(10), 1, 2)
