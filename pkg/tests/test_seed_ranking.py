import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hscs.clustering import kmeans
from hscs.errors import KTooLarge, TooFewSeeds
from hscs.features import FEATURE_DIM
from hscs.seed_ranking import (CENTER_SCALE, SeedSet, consistency_measure, filter_seeds,
                               kmeans_pp, rank_seeds, select_initial_seeds, top_k)

from oracles import brute_force_kmeans


def random_seedset(rng, n, n_images=2, intra=None, lam=None):
    hists = rng.random((n, 16))
    hists /= hists.sum(1, keepdims=True)
    return SeedSet(np.arange(n) % n_images, np.arange(n) // n_images,
                   rng.random((n, FEATURE_DIM)), hists,
                   rng.random(n) if intra is None else np.asarray(intra, float),
                   rng.random(n) if lam is None else np.asarray(lam, float))


def test_top_k_examples():
    values = np.array([0.1, 0.5, 0.9, 0.3, 0.7])
    assert set(top_k(values, 2)) == {2, 4}
    assert list(top_k(np.ones(6), 3)) == [0, 1, 2]
    with pytest.raises(KTooLarge):
        top_k(np.ones(3), 4)


def test_select_initial_seeds_union(rng):
    intra = [rng.random(30), rng.random(25), rng.random(40)]
    feats = [rng.random((len(v), FEATURE_DIM)) for v in intra]
    hists = [rng.random((len(v), 512)) for v in intra]
    seeds = select_initial_seeds(intra, 7, feats, hists, [0.1, 0.2, 0.3])
    assert len(seeds) == 21
    for i, values in enumerate(intra):
        picked = seeds.superpixel_index[seeds.image_index == i]
        assert set(picked) == set(np.argsort(-values)[:7])
        for m in picked:
            q = np.nonzero((seeds.image_index == i) & (seeds.superpixel_index == m))[0][0]
            np.testing.assert_array_equal(seeds.features[q], feats[i][m])
            assert seeds.intra[q] == values[m] and seeds.lam[q] == [0.1, 0.2, 0.3][i]
    keys = list(zip(seeds.image_index, seeds.superpixel_index))
    assert keys == sorted(keys)
    with pytest.raises(KTooLarge):
        select_initial_seeds(intra, 26, feats, hists, [0, 0, 0])


def test_kmeans_matches_brute_force(rng):
    pts = np.concatenate([rng.normal(0, 0.05, (3, 2)), rng.normal(1, 0.05, (3, 2))])
    best = brute_force_kmeans(pts, 2)
    assert kmeans(pts, 2, rng_seed=0).distortion == pytest.approx(best, rel=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.integers(5, 8), st.integers(2, 3))
def test_kmeans_near_brute_force(seed, n, k):
    pts = np.random.default_rng(seed).random((n, 2))
    res = kmeans(pts, k, rng_seed=seed)
    # Lloyd finds a local optimum; on well-separated data it is the global one
    assert res.distortion >= brute_force_kmeans(pts, k) - 1e-12
    assert len(np.unique(res.labels)) == k
    np.testing.assert_allclose(res.centers[res.labels], [res.centers[l] for l in res.labels])


def test_kmeans_k1_is_mean(rng):
    seeds = random_seedset(rng, 9)
    out = kmeans_pp(seeds, 1)
    np.testing.assert_allclose(out.centers, np.tile(seeds.features.mean(0) * CENTER_SCALE, (9, 1)))


def test_kmeans_pp_contract(rng):
    seeds = random_seedset(rng, 20)
    out = kmeans_pp(seeds, 5, rng_seed=7)
    assert len(np.unique(out.cluster)) == 5
    again = kmeans_pp(seeds, 5, rng_seed=7)
    np.testing.assert_array_equal(out.centers, again.centers)
    with pytest.raises(TooFewSeeds):
        kmeans_pp(random_seedset(rng, 4), 5)


def _score(seeds, k=1):
    return consistency_measure(kmeans_pp(seeds, k))


def test_mc_single_seed_is_zero(rng):
    assert _score(random_seedset(rng, 1, n_images=1))[0] == 0.0


def test_mc_two_identical_seeds():
    f = np.full((2, FEATURE_DIM), 0.3)
    h = np.zeros((2, 8))
    h[:, 2] = 1
    seeds = SeedSet(np.array([0, 1]), np.array([0, 0]), f, h, np.array([0.8, 0.8]),
                    np.array([0.4, 0.9]))
    np.testing.assert_allclose(_score(seeds), [0.8, 0.8])


def test_mc_zero_intra(rng):
    seeds = random_seedset(rng, 12, intra=[0.0] + [1.0] * 11)
    assert _score(seeds, 3)[0] == 0.0


def test_mc_matches_direct_sum(rng):
    from hscs.features import superpixel_affinity

    seeds = kmeans_pp(random_seedset(rng, 10), 3)
    mc = consistency_measure(seeds, 0.1)
    for m in range(10):
        total = 0.0
        for n in range(10):
            if n == m:
                continue
            closeness = 1 - np.linalg.norm(seeds.centers[m] - seeds.centers[n])
            total += closeness * superpixel_affinity(seeds.hists[m], seeds.hists[n],
                                                     seeds.depth[m], seeds.depth[n],
                                                     min(seeds.lam[m], seeds.lam[n]), 0.1)
        assert mc[m] == pytest.approx(total * seeds.intra[m], rel=1e-12)
    assert np.all(mc >= 0)


def test_center_distances_bounded(rng):
    seeds = random_seedset(rng, 30)
    seeds = seeds.__class__(**{**seeds.__dict__, "features": np.tile([0.0, 1.0], 15)[:30, None]
                               * np.ones((30, FEATURE_DIM))})
    out = kmeans_pp(seeds, 2)
    d = np.linalg.norm(out.centers[:, None] - out.centers[None], axis=-1)
    assert d.max() <= 1 + 1e-12


@pytest.mark.parametrize("n,kept", [(100, 80), (5, 4), (10, 8), (7, 6), (1, 1)])
def test_filter_counts(rng, n, kept):
    seeds = random_seedset(rng, n)
    seeds = seeds.__class__(**{**seeds.__dict__, "mc": rng.random(n)})
    out = filter_seeds(seeds, 0.8)
    assert len(out) == kept == math.ceil(0.8 * n - 1e-9)
    assert out.stage == "final"
    assert set(out.mc) == set(np.sort(seeds.mc)[::-1][:kept])


def test_filter_tie_break(rng):
    seeds = random_seedset(rng, 5)
    seeds = seeds.__class__(**{**seeds.__dict__, "mc": np.ones(5)})
    out = filter_seeds(seeds, 0.8)
    # all tied: order by (image, superpixel); image_index = [0,1,0,1,0], sp = [0,0,1,1,2]
    assert sorted(zip(out.image_index, out.superpixel_index)) == [(0, 0), (0, 1), (0, 2), (1, 0)]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 19), st.floats(0.0, 1.0))
def test_raising_intra_never_lowers_rank(seed, q, bump):
    rng = np.random.default_rng(seed)
    seeds = random_seedset(rng, 20)
    scored, _ = rank_seeds(seeds)
    raised = seeds.intra.copy()
    raised[q] = min(1.0, raised[q] + bump)
    scored2, _ = rank_seeds(seeds.__class__(**{**seeds.__dict__, "intra": raised}))
    rank = lambda mc: int(np.sum(mc > mc[q]))
    assert rank(scored2.mc) <= rank(scored.mc)


def test_rank_seeds_deterministic(rng):
    seeds = random_seedset(rng, 40, n_images=4)
    a_scored, a = rank_seeds(seeds, rng_seed=3)
    b_scored, b = rank_seeds(seeds, rng_seed=3)
    np.testing.assert_array_equal(a_scored.mc, b_scored.mc)
    np.testing.assert_array_equal(a.superpixel_index, b.superpixel_index)
    assert len(a) == 32
