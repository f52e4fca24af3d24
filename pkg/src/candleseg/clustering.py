"""Lloyd's K-means over Lab pixel features and region naming of the clusters."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Sequence, Tuple

import numpy as np

from .colorspace import LabImage
from .errors import DimensionMismatch, InfeasibleK
from .raster import BinaryMask, GrayImage

MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 generator (Steele, Lea & Flood constants).

    state += 0x9E3779B97F4A7C15
    z = (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    out = z ^ (z >> 31)

    All arithmetic is modulo 2**64. Chosen over numpy's generators so the
    initial centroids are reproducible from the documented algorithm alone.
    """

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection, no modulo bias."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n


@dataclass(frozen=True)
class KMeansOptions:
    max_iters: int = 100
    tol: float = 1e-4
    n_init: int = 10

    def __post_init__(self):
        if self.n_init < 1:
            raise ValueError("n_init must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol < 0:
            raise ValueError("tol must be >= 0")


@dataclass(frozen=True, eq=False)
class ClusterModel:
    k: int
    centroids: np.ndarray  # (k, d)
    labels: np.ndarray  # (n,)
    objective_trace: Tuple[float, ...]
    iterations: int
    seed: int
    converged: bool
    objective: float

    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def same_as(self, other: "ClusterModel") -> bool:
        """Bit-for-bit equality of every field."""
        return (
            self.k == other.k
            and self.seed == other.seed
            and self.iterations == other.iterations
            and self.converged == other.converged
            and self.objective_trace == other.objective_trace
            and np.array_equal(self.centroids, other.centroids)
            and np.array_equal(self.labels, other.labels)
            and self.centroids.dtype == other.centroids.dtype
        )


def euclidean_distance(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionMismatch(f"dimension mismatch: {x.shape} vs {y.shape}")
    return math.sqrt(float(np.sum((x - y) ** 2)))


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """(n, k) squared distances. Monotone in the true distance, so argmin agrees."""
    out = np.empty((points.shape[0], centroids.shape[0]))
    for j, c in enumerate(centroids):
        diff = points - c
        out[:, j] = np.einsum("ij,ij->i", diff, diff)
    return out


def assign_labels(points, centroids) -> np.ndarray:
    """Nearest centroid per point; ties go to the lowest centroid index."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    centroids = np.atleast_2d(np.asarray(centroids, dtype=np.float64))
    if centroids.shape[0] < 1:
        raise ValueError("need at least one centroid")
    if points.shape[1] != centroids.shape[1]:
        raise DimensionMismatch(f"points have d={points.shape[1]}, centroids d={centroids.shape[1]}")
    return np.argmin(_sq_dists(points, centroids), axis=1)


def update_centroids(points, labels, k: int) -> np.ndarray:
    """Per-cluster means.

    An empty cluster is re-seeded to the point farthest from its own
    centroid; several empty clusters take successive farthest points in
    ascending cluster order.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return _weighted_update(points, np.ones(points.shape[0]), np.asarray(labels), k)


def _init_centroids(points: np.ndarray, k: int, rng: SplitMix64, distinct: np.ndarray) -> np.ndarray:
    """k distinct data points: uniform pixel draws, skipping repeated values."""
    n = points.shape[0]
    chosen = []
    for _ in range(32 * k):
        p = points[rng.below(n)]
        if not any(np.array_equal(p, c) for c in chosen):
            chosen.append(p)
            if len(chosen) == k:
                return np.array(chosen)
    # heavy duplication: draw without replacement from the distinct rows instead
    idx = list(range(distinct.shape[0]))
    for i in range(k):
        j = i + rng.below(len(idx) - i)
        idx[i], idx[j] = idx[j], idx[i]
    return distinct[idx[:k]].copy()


def _unique_rows(points: np.ndarray):
    """Distinct rows, inverse index and multiplicities.

    Columns are rank-encoded and the ranks packed into one int64 key, which
    sorts much faster than comparing raw row bytes.
    """
    ranks, sizes = [], []
    for j in range(points.shape[1]):
        vals, inv = np.unique(points[:, j], return_inverse=True)
        ranks.append(inv.ravel())
        sizes.append(len(vals))
    if math.prod(sizes) < 2**62:
        key = np.zeros(points.shape[0], dtype=np.int64)
        for r, size in zip(ranks, sizes):
            key = key * size + r
    else:
        key = np.ascontiguousarray(np.stack(ranks, axis=1)).view(np.dtype((np.void, 8 * len(ranks)))).ravel()
    _, first, inverse, counts = np.unique(key, return_index=True, return_inverse=True, return_counts=True)
    return points[first], inverse.ravel(), counts


def _lloyd(uniq, weights, centroids, k, opts):
    trace = []
    converged = False
    iterations = 0
    for _ in range(opts.max_iters):
        iterations += 1
        d2 = _sq_dists(uniq, centroids)
        labels = np.argmin(d2, axis=1)
        trace.append(float(np.dot(weights, d2[np.arange(len(labels)), labels])))
        new = _weighted_update(uniq, weights, labels, k)
        shift = float(np.max(np.sqrt(np.sum((new - centroids) ** 2, axis=1))))
        centroids = new
        if shift < opts.tol:
            converged = True
            break
    d2 = _sq_dists(uniq, centroids)
    labels = np.argmin(d2, axis=1)
    objective = float(np.dot(weights, d2[np.arange(len(labels)), labels]))
    return centroids, labels, tuple(trace), iterations, converged, objective


def _weighted_update(points, weights, labels, k):
    counts = np.bincount(labels, weights=weights, minlength=k)
    sums = np.stack(
        [np.bincount(labels, weights=weights * points[:, j], minlength=k) for j in range(points.shape[1])], axis=1
    )
    centroids = np.zeros((k, points.shape[1]))
    alive = counts > 0
    centroids[alive] = sums[alive] / counts[alive, None]
    empty = np.flatnonzero(~alive)
    if empty.size:
        diff = points - centroids[labels]
        d2 = np.einsum("ij,ij->i", diff, diff)
        for j in empty:
            i = int(np.argmax(d2))
            centroids[j] = points[i]
            d2[i] = -1.0
    return centroids


def kmeans(points, k: int, seed: int = 0, opts: KMeansOptions | None = None) -> ClusterModel:
    """Lloyd iterations from k distinct seeded-random data points.

    Each run stops when no centroid moves by ``opts.tol`` or more, or after
    ``opts.max_iters`` rounds; ``objective_trace[i]`` is the sum of squared
    distances after the i-th assignment step. ``opts.n_init`` runs draw
    their starts from one SplitMix64 stream and the lowest final objective
    wins (earliest run on ties).

    Identical rows always share a label, so Lloyd runs on the distinct rows
    weighted by multiplicity; the partition sequence is the same as on the
    raw points.
    """
    opts = opts or KMeansOptions()
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if k < 1:
        raise InfeasibleK("k must be positive")
    uniq, inverse, counts = _unique_rows(points)
    if uniq.shape[0] < k:
        raise InfeasibleK(f"k={k} exceeds the number of distinct points ({uniq.shape[0]})")
    weights = counts.astype(np.float64)
    rng = SplitMix64(seed)
    best = None
    for _ in range(opts.n_init):
        start = _init_centroids(points, k, rng, uniq)
        run = _lloyd(uniq, weights, start, k, opts)
        if best is None or run[5] < best[5]:
            best = run
    centroids, labels_u, trace, iterations, converged, objective = best
    labels = labels_u[inverse]
    centroids.flags.writeable = False
    labels.flags.writeable = False
    return ClusterModel(
        k=k,
        centroids=centroids,
        labels=labels,
        objective_trace=trace,
        iterations=iterations,
        seed=seed,
        converged=converged,
        objective=objective,
    )


# --------------------------------------------------------------------------
# segmentation of Lab images

FEATURE_MODES = ("Lab", "ab")
DEFAULT_REGION_ORDER = ("background", "yolk", "egg")


def feature_matrix(image: LabImage, mode: str = "Lab") -> np.ndarray:
    """(n, d) float64 features in row-major pixel order."""
    if mode == "Lab":
        planes = (image.L, image.a, image.b)
    elif mode == "ab":
        planes = (image.a, image.b)
    else:
        raise ValueError(f"feature_mode must be one of {FEATURE_MODES}, got {mode!r}")
    return np.stack([p.reshape(-1) for p in planes], axis=1).astype(np.float64)


@dataclass(frozen=True, eq=False)
class SegmentationResult:
    label_map: np.ndarray  # (height, width) cluster ids
    region_assignment: Dict[str, Tuple[int, ...]]
    masks: Dict[str, BinaryMask]
    model: ClusterModel
    cluster_lightness: Tuple[float, ...] = field(default=())

    @property
    def k(self) -> int:
        return self.model.k

    def cluster_mask(self, cluster: int) -> BinaryMask:
        return BinaryMask(self.label_map == cluster)

    def label_image(self) -> GrayImage:
        """Cluster ids scaled by 80 (by 255 // (k - 1) when k > 4) for viewing."""
        step = 80 if self.k <= 4 else 255 // (self.k - 1)
        return GrayImage((self.label_map.astype(np.int64) * step).astype(np.uint8))


def name_regions(lightness: Sequence[float], region_order: Sequence[str] = DEFAULT_REGION_ORDER):
    """Map region names to cluster ids by ascending cluster lightness.

    The first name takes the darkest cluster, the last name the brightest,
    and any middle names share the remaining clusters (one each when the
    counts match). Ties rank by cluster id.
    """
    k = len(lightness)
    names = list(region_order)
    if len(names) < 2 or len(set(names)) != len(names):
        raise ValueError(f"region_order needs >= 2 distinct names, got {names}")
    ranked = [int(i) for i in np.argsort(np.asarray(lightness), kind="stable")]
    out = {name: () for name in names}
    out[names[0]] = (ranked[0],)
    if k == 1:
        return out
    out[names[-1]] = (ranked[-1],)
    middle = ranked[1:-1]
    mids = names[1:-1]
    if mids:
        if len(mids) == len(middle):
            for name, c in zip(mids, middle):
                out[name] = (c,)
        else:
            out[mids[0]] = tuple(sorted(middle))
    return out


def segment_lab(
    image: LabImage,
    k: int = 3,
    seed: int = 0,
    opts: KMeansOptions | None = None,
    feature_mode: str = "Lab",
    region_order: Sequence[str] = DEFAULT_REGION_ORDER,
) -> SegmentationResult:
    """Cluster the pixels of ``image`` and name the clusters by mean L*.

    With the default ``region_order`` the darkest cluster is the
    background (the egg is back-lit in a dark room), the brightest the
    lit egg shell and the middle one the yolk.
    """
    feats = feature_matrix(image, feature_mode)
    model = kmeans(feats, k, seed=seed, opts=opts)
    label_map = model.labels.reshape(image.height, image.width).astype(np.uint8 if k <= 256 else np.int32)
    label_map.flags.writeable = False
    counts = np.bincount(model.labels, minlength=k)
    lsum = np.bincount(model.labels, weights=image.L.reshape(-1).astype(np.float64), minlength=k)
    lightness = tuple(float(s / c) if c else float("inf") for s, c in zip(lsum, counts))
    assignment = name_regions(lightness, region_order)
    masks = {
        name: BinaryMask(np.isin(label_map, np.array(ids, dtype=np.int64))) for name, ids in assignment.items()
    }
    return SegmentationResult(label_map, assignment, masks, model, lightness)
