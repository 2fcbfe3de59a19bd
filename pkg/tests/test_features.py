import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hscs.dataset_io import ImageGroup
from hscs.errors import DegenerateTextures
from hscs.features import (FEATURE_DIM, N_TEXTONS, TEXTURE, affinity, chi_square,
                           compute_feature, compute_features, compute_texton_map,
                           depth_confidence, lab_histogram, lab_histograms,
                           pairwise_chi_square, superpixel_affinity, texton_histograms)
from hscs.superpixel import SuperpixelSegmentation, slic_segment

from conftest import make_image


def _group(*rgbs):
    return ImageGroup([make_image(r, image_id=f"i{k}") for k, r in enumerate(rgbs)])


def _stripes_and_checker(size=128):
    yy, xx = np.mgrid[0:size, 0:size]
    stripes = ((xx // 4) % 2) * 255
    checker = (((xx // 8) + (yy // 8)) % 2) * 255
    gray = np.where(xx < size // 2, stripes, checker).astype(np.uint8)
    return np.repeat(gray[..., None], 3, axis=2), xx < size // 2


def test_texton_purity_stripes_vs_checker():
    rgb, is_stripe = _stripes_and_checker()
    tm = compute_texton_map(_group(rgb, rgb))
    labels = tm.labels[0]
    assert tm.codebook.shape[0] == N_TEXTONS
    assert labels.min() >= 0 and labels.max() < N_TEXTONS
    majority = 0
    for t in np.unique(labels):
        sel = labels == t
        majority += max(np.sum(is_stripe[sel]), np.sum(~is_stripe[sel]))
    purity = majority / labels.size
    assert purity >= 0.95, purity


def test_constant_group_is_degenerate_single_texton():
    rgb = np.full((32, 32, 3), 128, np.uint8)
    with pytest.warns(DegenerateTextures):
        tm = compute_texton_map(_group(rgb, rgb))
    assert tm.codebook.shape[0] == N_TEXTONS
    assert len(np.unique(tm.labels[0])) == 1
    seg = slic_segment(make_image(rgb), 4)
    t = texton_histograms(seg, tm.labels[0])
    np.testing.assert_allclose(t.max(1), 1.0)


def test_texton_map_deterministic(rng):
    rgb = (rng.random((48, 48, 3)) * 255).astype(np.uint8)
    a = compute_texton_map(_group(rgb, rgb[::-1]), rng_seed=3)
    b = compute_texton_map(_group(rgb, rgb[::-1]), rng_seed=3)
    np.testing.assert_array_equal(a.labels[1], b.labels[1])


@pytest.fixture
def seg_and_textons(rng):
    rgb = (rng.random((40, 48, 3)) * 255).astype(np.uint8)
    depth = rng.random((40, 48))
    seg = slic_segment(make_image(rgb, depth), 20)
    textons = rng.integers(0, N_TEXTONS, size=(40, 48))
    return seg, textons


def test_feature_layout_and_bounds(seg_and_textons):
    seg, textons = seg_and_textons
    F = compute_features(seg, textons)
    assert F.shape == (seg.n_regions, FEATURE_DIM)
    assert np.all((F >= 0) & (F <= 1))
    np.testing.assert_allclose(F[:, TEXTURE].sum(1), 1.0, atol=1e-9)


def test_vectorized_matches_per_region(seg_and_textons):
    seg, textons = seg_and_textons
    F = compute_features(seg, textons)
    for sp in seg.regions:
        np.testing.assert_allclose(compute_feature(sp, seg, textons), F[sp.index], atol=1e-12)
        # counting oracle for the texton part
        counts = np.bincount(textons[seg.labels == sp.index], minlength=N_TEXTONS)
        np.testing.assert_allclose(F[sp.index, TEXTURE], counts / counts.sum())


def test_white_centered_superpixel():
    rgb = np.full((33, 33, 3), 255, np.uint8)
    labels = np.ones((33, 33), int)
    labels[12:21, 12:21] = 0
    seg = SuperpixelSegmentation(labels, rgb, np.zeros((33, 33)))
    f = compute_feature(seg.regions[0], seg, np.zeros((33, 33), int))
    np.testing.assert_allclose(f[:3], 1.0)
    assert f[3] == pytest.approx(1.0, abs=1e-6)  # L* = 100
    np.testing.assert_allclose(f[4:6], 128 / 255, atol=1e-3)  # a*, b* ~ 0
    assert f[9] == 0.0
    np.testing.assert_allclose(f[10:12], 0.5)


def test_lab_histogram_cases(rng):
    rgb = np.zeros((16, 32, 3), np.uint8)
    rgb[:, 16:] = 255
    labels = np.zeros((16, 32), int)
    seg = SuperpixelSegmentation(labels, rgb, np.zeros((16, 32)))
    h = lab_histogram(seg.regions[0], seg)
    assert np.count_nonzero(h) == 2 and np.allclose(h[h > 0], 0.5)
    single = SuperpixelSegmentation(labels, np.full((16, 32, 3), 77, np.uint8), np.zeros((16, 32)))
    assert lab_histogram(single.regions[0], single).max() == 1.0

    rgb = (rng.random((30, 30, 3)) * 255).astype(np.uint8)
    labels = rng.integers(0, 4, size=(30, 30))
    seg = SuperpixelSegmentation(labels, rgb, np.zeros((30, 30)))
    H = lab_histograms(seg)
    np.testing.assert_allclose(H.sum(1), 1.0, atol=1e-9)
    for sp in seg.regions:
        np.testing.assert_allclose(lab_histogram(sp, seg), H[sp.index])


def test_chi_square_examples():
    h = np.zeros(512)
    h[0] = 1
    g = np.zeros(512)
    g[1] = 1
    assert chi_square(h, h) == 0
    assert chi_square(h, g) == pytest.approx(1.0, abs=1e-9)


hist = arrays(np.float64, 8, elements=st.floats(0, 1)).filter(lambda a: a.sum() > 0).map(
    lambda a: a / a.sum())


@settings(max_examples=100, deadline=None)
@given(hist, hist)
def test_chi_square_symmetric_nonneg(h1, h2):
    assert chi_square(h1, h2) == pytest.approx(chi_square(h2, h1))
    assert chi_square(h1, h2) >= 0


def test_pairwise_chi_square(rng):
    H = rng.random((70, 16))
    H /= H.sum(1, keepdims=True)
    P = pairwise_chi_square(H, chunk=16)
    for i, j in [(0, 1), (5, 69), (33, 33)]:
        assert P[i, j] == pytest.approx(chi_square(H[i], H[j]))
    np.testing.assert_allclose(P, P.T)


def test_affinity_examples():
    assert affinity(0.1, 0.2, 0.5, 0.1) == pytest.approx(math.exp(-2), abs=1e-12)
    assert affinity(0.1, 0.2, 0.5, 0.1) == pytest.approx(0.1353, abs=1e-4)
    assert affinity(0.0, 0.0, 0.7) == 1.0
    assert affinity(0.3, 0.9, 0.0) == pytest.approx(math.exp(-3))
    h = np.full(8, 1 / 8)
    assert superpixel_affinity(h, h, 0.4, 0.4, 1.0) == 1.0


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 2), st.floats(0, 2), st.floats(-1, 1), st.floats(0, 3))
def test_affinity_monotone(c1, c2, d, lam):
    lo, hi = sorted((c1, c2))
    assert affinity(hi, d, lam) <= affinity(lo, d, lam)
    assert affinity(lo, 2 * d, lam) <= affinity(lo, d, lam)
    assert affinity(lo, d, lam) == affinity(lo, -d, lam)
    assert 0 <= affinity(lo, d, lam) <= 1


def test_depth_confidence_examples(rng):
    assert depth_confidence(np.full((10, 10), 0.37)).lam == 0.0
    assert depth_confidence(np.full((10, 10), 0.37)).cv == 0.0
    assert math.expm1(0.5 * 0.4 * 0.8) == pytest.approx(0.1735, abs=1e-4)
    depth = rng.random((50, 50))
    dc = depth_confidence(depth)
    assert dc.mean == pytest.approx(depth.mean())
    assert dc.cv == pytest.approx(depth.std() / depth.mean())
    hist = np.histogram(depth, bins=256, range=(0, 1))[0] / depth.size
    p = hist[hist > 0]
    assert dc.entropy == pytest.approx(-(p * np.log(p)).sum() / np.log(256))
    assert dc.lam == pytest.approx(math.exp((1 - dc.mean) * dc.cv * dc.entropy) - 1)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (6, 6), elements=st.floats(0, 1)))
def test_depth_confidence_nonnegative(depth):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert depth_confidence(depth).lam >= 0
