import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hscs.errors import EmptySeedSet, KTooLarge, LengthMismatch, SingleImageGroup
from hscs.features import FEATURE_DIM
from hscs.inter_saliency import (build_global_dictionary, build_pairwise_dictionaries,
                                 compute_inter, fuse_hierarchical, global_inter, pairwise_inter)
from hscs.seed_ranking import rank_seeds, select_initial_seeds
from hscs.sparse_coding import Dictionary

from test_seed_ranking import random_seedset


@pytest.fixture
def group_state(rng):
    n_sp = [50, 60, 55]
    feats = [rng.random((n, FEATURE_DIM)) for n in n_sp]
    intra = [rng.random(n) for n in n_sp]
    hists = [rng.dirichlet(np.ones(32), n) for n in n_sp]
    init = select_initial_seeds(intra, 10, feats, hists, [0.1, 0.2, 0.3])
    _, final = rank_seeds(init)
    return feats, intra, final


def test_global_dictionary(group_state):
    _, _, final = group_state
    D = build_global_dictionary(final)
    assert D.atoms.shape == (27, -(-4 * 3 * 10 // 5)) == (27, 24)
    np.testing.assert_array_equal(D.atoms.T, final.features)
    with pytest.raises(EmptySeedSet):
        build_global_dictionary(final.subset([], "final"))


def test_seed_reconstructs_itself(group_state):
    feats, _, final = group_state
    S_gr = global_inter(feats, build_global_dictionary(final), 0.01, 0.1)
    for i, m in zip(final.image_index, final.superpixel_index):
        assert S_gr[i].values[m] >= 0.95
    for s in S_gr:
        assert np.all((s.values > 0) & (s.values <= 1))


def test_feature_outside_span_scores_lower():
    D = Dictionary(np.eye(27)[:, :3])
    seed = np.zeros((1, 27))
    seed[0, 0] = 0.8
    other = np.zeros((1, 27))
    other[0, 10] = 0.8
    s_seed = global_inter([seed], D)[0].values[0]
    s_other = global_inter([other], D)[0].values[0]
    assert s_other < s_seed


def test_pairwise_dictionaries(group_state):
    feats, intra, _ = group_state
    dicts = build_pairwise_dictionaries(intra, 10, feats)
    assert len(dicts) == 3
    for k, D in enumerate(dicts):
        assert D.atoms.shape == (27, 10)
        top = np.sort(np.argsort(-intra[k])[:10])
        np.testing.assert_array_equal(D.atoms.T, feats[k][top])
    with pytest.raises(KTooLarge):
        build_pairwise_dictionaries(intra, 51, feats)


def test_pairwise_two_images(group_state):
    feats, intra, _ = group_state
    dicts = build_pairwise_dictionaries(intra[:2], 10, feats[:2])
    s, per_k = pairwise_inter(0, feats[0], dicts)
    assert list(per_k) == [1]
    np.testing.assert_array_equal(s.values, per_k[1])
    with pytest.raises(SingleImageGroup):
        pairwise_inter(0, feats[0], dicts[:1])


def test_pairwise_hand_computed_four_images():
    # orthonormal single-atom dictionaries with xi = 0: error = |f|^2 - (d.f)^2
    f = np.zeros(27)
    f[:4] = [0.1, 0.2, 0.3, 0.4]
    dicts = [Dictionary(np.eye(27)[:, [k]]) for k in range(4)]
    s, per_k = pairwise_inter(0, f[None, :], dicts, xi=0.0, sigma2=0.1)
    total = float(f @ f)
    expected = [math.exp(-(total - f[k] ** 2) / 0.1) for k in (1, 2, 3)]
    for k, e in zip((1, 2, 3), expected):
        assert per_k[k][0] == pytest.approx(e, rel=1e-9)
    assert s.values[0] == pytest.approx(sum(expected) / 3, rel=1e-9)
    assert 0 not in per_k


def test_pairwise_equal_maps_average_unchanged():
    f = np.full((3, 27), 0.2)
    dicts = [Dictionary(np.full((27, 1), 0.2)) for _ in range(4)]
    s, per_k = pairwise_inter(2, f, dicts, xi=0.0)
    np.testing.assert_allclose(s.values, per_k[0])


def test_fuse_examples():
    assert fuse_hierarchical(np.array([0.5]), np.array([0.5])).values[0] == 0.5
    assert fuse_hierarchical(np.array([0.2]), np.array([0.8])).values[0] == 0.5
    with pytest.raises(LengthMismatch):
        fuse_hierarchical(np.zeros(3), np.zeros(4))


@settings(max_examples=50)
@given(arrays(np.float64, 10, elements=st.floats(0, 1)),
       arrays(np.float64, 10, elements=st.floats(0, 1)))
def test_fuse_between(a, b):
    r = fuse_hierarchical(a, b).values
    assert np.all(np.minimum(a, b) <= r) and np.all(r <= np.maximum(a, b))


def test_compute_inter_bundle(group_state):
    feats, intra, final = group_state
    a = compute_inter(feats, intra, final, 10, ids=["x", "y", "z"])
    b = compute_inter(feats, intra, final, 10, ids=["x", "y", "z"])
    for i in range(3):
        np.testing.assert_array_equal(a.S_r[i].values,
                                      0.5 * (a.S_gr[i].values + a.S_pr[i].values))
        np.testing.assert_array_equal(a.S_r[i].values, b.S_r[i].values)
        assert i not in a.S_pr_k[i] and len(a.S_pr_k[i]) == 2
        assert a.S_r[i].image_id == "xyz"[i]
        assert np.all((a.S_r[i].values > 0) & (a.S_r[i].values <= 1))
