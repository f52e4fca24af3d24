import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from candleseg.clustering import (
    KMeansOptions,
    SplitMix64,
    assign_labels,
    euclidean_distance,
    feature_matrix,
    kmeans,
    name_regions,
    segment_lab,
    update_centroids,
)
from candleseg.colorspace import LabImage
from candleseg.errors import DimensionMismatch, InfeasibleK

from oracles import brute_force_kmeans, partition_sse, same_partition


def test_splitmix_reference_sequence():
    # published first outputs for seed 0
    r = SplitMix64(0)
    assert [r.next_u64() for _ in range(3)] == [
        0xE220A8397B1DCDAF,
        0x6E789E6AA1B965F4,
        0x06C45D188009454F,
    ]


@given(st.integers(0, 2**64 - 1), st.integers(1, 1000))
def test_splitmix_below_in_range(seed, n):
    r = SplitMix64(seed)
    assert all(0 <= r.below(n) < n for _ in range(20))


def test_distance_examples():
    assert euclidean_distance([1, 2], [1, 2]) == 0
    assert euclidean_distance([0, 0], [3, 4]) == 5
    assert euclidean_distance([1, 2, 3], [4, 6, 3]) == 5
    with pytest.raises(DimensionMismatch):
        euclidean_distance([1, 2], [1, 2, 3])


vec = st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3)


@given(vec, vec)
def test_distance_symmetric_nonnegative(x, y):
    d = euclidean_distance(x, y)
    assert d >= 0 and d == euclidean_distance(y, x)
    assert (d == 0) == (x == y) or d < 1e-300


def test_assign_examples():
    assert assign_labels(np.array([[1.0], [5.0]]), np.array([[0.0]])).tolist() == [0, 0]
    assert assign_labels(np.array([[0.0], [10.0]]), np.array([[1.0], [9.0]])).tolist() == [0, 1]
    assert assign_labels(np.array([[5.0]]), np.array([[4.0], [6.0]])).tolist() == [0]


def test_update_examples():
    assert update_centroids(np.array([[0.0], [2.0]]), np.array([0, 0]), 1).tolist() == [[1.0]]
    pts = np.array([[0.0], [0.0], [10.0], [10.0]])
    assert update_centroids(pts, np.array([0, 0, 1, 1]), 2).tolist() == [[0.0], [10.0]]


def test_empty_cluster_reseeded_to_farthest_point():
    pts = np.array([[0.0], [1.0], [9.0]])
    c = update_centroids(pts, np.array([0, 0, 0]), 2)
    # centroid 0 is the mean 10/3; the farthest point from it is 9
    assert c[0, 0] == pytest.approx(10 / 3)
    assert c[1, 0] == 9.0


def test_kmeans_identical_points_k1():
    m = kmeans(np.full((6, 2), 3.5), 1, seed=4)
    assert m.centroids.tolist() == [[3.5, 3.5]]
    assert m.objective == 0 and m.iterations == 1


def test_kmeans_four_points():
    m = kmeans(np.array([[0.0], [1.0], [9.0], [10.0]]), 2, seed=0)
    assert sorted(m.centroids[:, 0].tolist()) == [0.5, 9.5]
    assert m.objective == pytest.approx(1.0, abs=1e-12)
    best, _ = brute_force_kmeans([[0], [1], [9], [10]], 2)
    assert best == pytest.approx(1.0)


def test_infeasible_k():
    with pytest.raises(InfeasibleK):
        kmeans(np.array([[1.0, 1.0], [1.0, 1.0], [2.0, 2.0]]), 3)


@st.composite
def datasets(draw):
    n = draw(st.integers(3, 60))
    d = draw(st.integers(1, 3))
    seed = draw(st.integers(0, 2**32 - 1))
    pts = np.random.default_rng(seed).normal(size=(n, d)) * draw(st.floats(0.1, 50))
    k = draw(st.integers(1, min(5, n)))
    return pts, k, draw(st.integers(0, 2**63))


@given(datasets())
def test_trace_non_increasing_and_fixed_point(case):
    pts, k, seed = case
    m = kmeans(pts, k, seed=seed, opts=KMeansOptions(n_init=2))
    assert np.all(np.diff(m.objective_trace) <= 1e-9)
    assert m.labels.max() < k
    if m.converged:
        # labels are nearest-centroid for the final centroids
        assert np.array_equal(assign_labels(pts, m.centroids), m.labels)
    assert m.objective == pytest.approx(partition_sse(pts.tolist(), m.labels.tolist(), k), rel=1e-9, abs=1e-9)


@given(datasets())
@settings(max_examples=20)
def test_deterministic(case):
    pts, k, seed = case
    assert kmeans(pts, k, seed=seed).same_as(kmeans(pts, k, seed=seed))


@st.composite
def separated(draw):
    n = draw(st.integers(4, 8))
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    split = draw(st.integers(1, n - 1))
    a = rng.uniform(0, 1, size=(split, 2))
    b = rng.uniform(0, 1, size=(n - split, 2)) + 10.0
    return np.vstack([a, b]), draw(st.integers(0, 1000))


@given(separated())
def test_small_instances_reach_brute_force_optimum(case):
    pts, seed = case
    m = kmeans(pts, 2, seed=seed)
    best, labels = brute_force_kmeans(pts.tolist(), 2)
    assert same_partition(m.labels.tolist(), labels)
    assert m.objective == pytest.approx(best, rel=1e-12)


@given(separated(), st.randoms(use_true_random=False))
def test_permutation_equivariance(case, rnd):
    pts, seed = case
    perm = list(range(len(pts)))
    rnd.shuffle(perm)
    a = kmeans(pts, 2, seed=seed)
    b = kmeans(pts[perm], 2, seed=seed)
    assert same_partition(a.labels[perm].tolist(), b.labels.tolist())
    ca = sorted(map(tuple, a.centroids.round(9)))
    cb = sorted(map(tuple, b.centroids.round(9)))
    assert np.allclose(ca, cb, atol=1e-9)


def three_color_lab():
    L = np.zeros((6, 9))
    a = np.zeros((6, 9))
    b = np.zeros((6, 9))
    L[:, 3:6], a[:, 3:6] = 50, 40
    L[:, 6:], b[:, 6:] = 90, -30
    return LabImage(L, a, b)


def test_segment_three_uniform_regions():
    seg = segment_lab(three_color_lab(), k=3, seed=1)
    lm = seg.label_map
    for cols in (slice(0, 3), slice(3, 6), slice(6, 9)):
        assert len(np.unique(lm[:, cols])) == 1
    assert len(np.unique(lm)) == 3
    assert seg.masks["background"].pixels[:, :3].all()
    assert seg.masks["yolk"].pixels[:, 3:6].all()
    assert seg.masks["egg"].pixels[:, 6:].all()


def test_segment_masks_partition_image():
    seg = segment_lab(three_color_lab(), k=3, seed=2)
    stack = np.stack([m.pixels for m in seg.masks.values()])
    assert np.all(stack.sum(axis=0) == 1)
    ids = sorted(i for v in seg.region_assignment.values() for i in v)
    assert ids == [0, 1, 2]


def test_segment_constant_is_infeasible():
    lab = LabImage(np.full((4, 4), 30.0), np.zeros((4, 4)), np.zeros((4, 4)))
    with pytest.raises(InfeasibleK):
        segment_lab(lab, k=3)


def test_ab_features_drop_lightness():
    fm = feature_matrix(three_color_lab(), "ab")
    assert fm.shape == (54, 2)
    assert feature_matrix(three_color_lab(), "Lab").shape == (54, 3)
    with pytest.raises(ValueError):
        feature_matrix(three_color_lab(), "L")


def test_name_regions_by_lightness():
    got = name_regions([70.0, 10.0, 40.0])
    assert got == {"background": (1,), "yolk": (2,), "egg": (0,)}


def test_phantom_regions(small_phantom):
    from candleseg.colorspace import rgb_to_lab
    from candleseg.phantom import iou

    seg = segment_lab(rgb_to_lab(small_phantom.image), k=3, seed=0)
    for name in ("background", "egg", "yolk"):
        assert iou(seg.masks[name], small_phantom.truth[name]) >= 0.95
