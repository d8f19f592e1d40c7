import math

import numpy as np
import pytest

from cbiou.geometry import BoundingBox
from cbiou.refine import (InconsistentCluster, MissingFeatures, attach_features, cluster,
                          distance_matrix, refine, relabel, tracklet_distance)
from cbiou.tracklet import Tracklet


def make_tracklet(track_id, frames, features=None, x=0.0):
    frames = tuple(frames)
    boxes = tuple(BoundingBox(x, 0, 10, 10) for _ in frames)
    if features is not None:
        features = tuple(np.asarray(f, dtype=float) for f in features)
    return Tracklet(track_id, frames, boxes, features=features)


def unit(*components):
    vec = np.asarray(components, dtype=float)
    return vec / np.linalg.norm(vec)


def reference_cluster(tracklets, tau):
    """Independent step-by-step merge simulation (pure python, frozensets)."""

    def cosine(u, v):
        dot = sum(a * b for a, b in zip(u, v))
        nu = math.sqrt(sum(a * a for a in u))
        nv = math.sqrt(sum(b * b for b in v))
        return dot / (nu * nv)

    def pair_distance(a, b):
        if set(a.frames) & set(b.frames):
            return math.inf
        total = sum(1.0 - cosine(fa, fb) for fa in a.features for fb in b.features)
        return total / (len(a.features) * len(b.features))

    by_id = {t.id: t for t in tracklets}
    clusters = [frozenset([t.id]) for t in tracklets]
    while True:
        candidates = []
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                values = [pair_distance(by_id[a], by_id[b])
                          for a in clusters[i] for b in clusters[j]]
                if any(math.isinf(v) for v in values):
                    continue
                avg = sum(values) / len(values)
                if avg < tau:
                    candidates.append((avg, tuple(sorted((min(clusters[i]), min(clusters[j])))), i, j))
        if not candidates:
            break
        _, _, i, j = min(candidates, key=lambda c: c[:2])
        clusters[i] = clusters[i] | clusters[j]
        del clusters[j]
    return {t_id: min(members) for members in clusters for t_id in members}


class TestTrackletDistance:
    def test_temporal_overlap_is_infinite(self):
        a = make_tracklet(1, range(1, 11), [unit(1, 0)] * 10)
        b = make_tracklet(2, range(5, 16), [unit(1, 0)] * 11)
        assert tracklet_distance(a, b) == math.inf

    def test_identical_unit_vectors_give_zero(self):
        a = make_tracklet(1, [1, 2], [unit(1, 1)] * 2)
        b = make_tracklet(2, [5, 6], [unit(1, 1)] * 2)
        assert tracklet_distance(a, b) == pytest.approx(0.0, abs=1e-12)

    def test_hand_computed_double_sum(self):
        # pairs: (1,0)x(1,0) -> 0 and (0,1)x(1,0) -> 1; mean 0.5
        a = make_tracklet(1, [1, 2], [unit(1, 0), unit(0, 1)])
        b = make_tracklet(2, [5], [unit(1, 0)])
        assert tracklet_distance(a, b) == pytest.approx(0.5)

    def test_missing_features_raises(self):
        a = make_tracklet(1, [1])
        b = make_tracklet(2, [2], [unit(1, 0)])
        with pytest.raises(MissingFeatures):
            tracklet_distance(a, b)

    def test_symmetry_and_range(self):
        rng = np.random.default_rng(43)
        for _ in range(100):
            a = make_tracklet(1, [1, 2], rng.normal(size=(2, 4)))
            b = make_tracklet(2, [3, 4, 5], rng.normal(size=(3, 4)))
            d_ab = tracklet_distance(a, b)
            assert d_ab == tracklet_distance(b, a)
            assert 0.0 <= d_ab <= 2.0

    def test_scale_invariance(self):
        rng = np.random.default_rng(47)
        feats = rng.normal(size=(3, 5))
        a = make_tracklet(1, [1, 2, 3], feats)
        b = make_tracklet(2, [7, 8], rng.normal(size=(2, 5)))
        scaled = make_tracklet(1, [1, 2, 3], feats * 37.5)
        assert tracklet_distance(scaled, b) == pytest.approx(tracklet_distance(a, b), abs=1e-12)

    def test_distance_matrix_shape(self):
        tracklets = [
            make_tracklet(1, [1, 2], [unit(1, 0)] * 2),
            make_tracklet(2, [3, 4], [unit(1, 0)] * 2),
            make_tracklet(3, [4, 5], [unit(0, 1)] * 2),
        ]
        dist = distance_matrix(tracklets)
        assert dist.shape == (3, 3)
        assert (np.diag(dist) == 0).all()
        assert dist[1, 2] == math.inf and dist[2, 1] == math.inf
        assert np.allclose(dist, dist.T)


class TestCluster:
    def test_all_infinite_means_singletons(self):
        tracklets = [
            make_tracklet(1, [1, 2], [unit(1, 0)] * 2),
            make_tracklet(2, [2, 3], [unit(1, 0)] * 2),
            make_tracklet(3, [1, 3], [unit(1, 0)] * 2),
        ]
        assert cluster(tracklets, tau=0.4) == {1: 1, 2: 2, 3: 3}

    def test_two_close_tracklets_merge(self):
        a = make_tracklet(1, [1, 2], [unit(1, 0)] * 2)
        b = make_tracklet(2, [5, 6], [unit(1, 0.1)] * 2)
        assert tracklet_distance(a, b) < 0.4
        assert cluster([a, b], tau=0.4) == {1: 1, 2: 1}

    def test_greedy_trace_with_overlap_veto(self):
        # d(A,C) smallest so {A,C} merges first; B then blocked by C overlap
        a = make_tracklet(1, range(1, 6), [unit(1, 0, 0)] * 5)
        b = make_tracklet(2, range(10, 16), [unit(1, 0.2, 0)] * 6)
        c = make_tracklet(3, range(12, 21), [unit(1, 0.1, 0)] * 9)
        d_ab = tracklet_distance(a, b)
        d_ac = tracklet_distance(a, c)
        assert d_ac < d_ab < 0.4
        assert tracklet_distance(b, c) == math.inf
        assert cluster([a, b, c], tau=0.4) == {1: 1, 3: 1, 2: 2}

    def test_threshold_cuts_merge(self):
        a = make_tracklet(1, [1], [unit(1, 0)])
        b = make_tracklet(2, [5], [unit(0, 1)])
        assert tracklet_distance(a, b) == pytest.approx(1.0)
        assert cluster([a, b], tau=0.4) == {1: 1, 2: 2}
        assert cluster([a, b], tau=1.5) == {1: 1, 2: 1}

    def test_matches_reference_simulation(self):
        rng = np.random.default_rng(53)
        for _ in range(40):
            count = int(rng.integers(2, 7))
            tracklets = []
            for k in range(count):
                start = int(rng.integers(1, 30))
                length = int(rng.integers(1, 6))
                feats = rng.normal(size=(length, 3))
                tracklets.append(make_tracklet(k + 1, range(start, start + length), feats))
            tau = float(rng.uniform(0.2, 1.2))
            assert cluster(tracklets, tau) == reference_cluster(tracklets, tau)

    def test_threshold_monotonicity(self):
        rng = np.random.default_rng(59)
        for _ in range(20):
            tracklets = []
            for k in range(5):
                start = int(rng.integers(1, 40))
                feats = rng.normal(size=(2, 3))
                tracklets.append(make_tracklet(k + 1, [start, start + 1], feats))
            coarse = cluster(tracklets, tau=1.1)
            fine = cluster(tracklets, tau=0.3)
            # every fine cluster sits inside one coarse cluster
            for members in _groups(fine).values():
                assert len({coarse[m] for m in members}) == 1

    def test_propagates_missing_features(self):
        with pytest.raises(MissingFeatures):
            cluster([make_tracklet(1, [1]), make_tracklet(2, [2])], tau=0.4)


def _groups(labels):
    groups = {}
    for member, label in labels.items():
        groups.setdefault(label, []).append(member)
    return groups


class TestRelabel:
    def test_singletons_identity(self):
        tracklets = [
            make_tracklet(1, [1, 2], [unit(1, 0)] * 2),
            make_tracklet(2, [3], [unit(1, 0)]),
        ]
        merged = relabel(tracklets, {1: 1, 2: 2})
        assert [(t.id, t.frames) for t in merged] == [(1, (1, 2)), (2, (3,))]

    def test_union_of_frames(self):
        a = make_tracklet(1, range(1, 6), [unit(1, 0)] * 5)
        c = make_tracklet(3, range(12, 21), [unit(1, 0)] * 9)
        merged = relabel([a, c], {1: 1, 3: 1})
        assert len(merged) == 1
        assert merged[0].frames == tuple(range(1, 6)) + tuple(range(12, 21))
        assert len(merged[0]) == 14

    def test_min_id_rule(self):
        a = make_tracklet(7, [1], [unit(1, 0)])
        b = make_tracklet(3, [5], [unit(1, 0)])
        merged = relabel([a, b], {7: 3, 3: 3})
        assert [t.id for t in merged] == [3]

    def test_inconsistent_cluster_rejected(self):
        a = make_tracklet(1, [1, 2], [unit(1, 0)] * 2)
        b = make_tracklet(2, [2, 3], [unit(1, 0)] * 2)
        with pytest.raises(InconsistentCluster):
            relabel([a, b], {1: 1, 2: 1})

    def test_no_duplicated_frames_after_refine(self):
        rng = np.random.default_rng(61)
        tracklets = []
        for k in range(6):
            start = 1 + 4 * k + int(rng.integers(0, 2))
            feats = rng.normal(size=(3, 4))
            tracklets.append(make_tracklet(k + 1, range(start, start + 3), feats))
        for merged in refine(tracklets, tau=1.0):
            assert len(set(merged.frames)) == len(merged.frames)


class TestAttachFeatures:
    def test_attaches_by_frame_and_id(self):
        t = make_tracklet(4, [1, 2])
        table = {(1, 4): unit(1, 0), (2, 4): unit(0, 1)}
        (attached,) = attach_features([t], table)
        assert attached.features is not None
        assert np.allclose(attached.features[1], unit(0, 1))

    def test_missing_entry_raises(self):
        t = make_tracklet(4, [1, 2])
        with pytest.raises(MissingFeatures):
            attach_features([t], {(1, 4): unit(1, 0)})
