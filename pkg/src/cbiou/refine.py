"""Offline tracklet refinement: appearance-distance matrix between short-term
tracklets and a temporally-constrained agglomerative merge into long-term
identities.
"""

from __future__ import annotations

import math

import numpy as np

from .tracklet import Tracklet

DEFAULT_TAU = 0.4


class MissingFeatures(ValueError):
    """Raised when a tracklet without appearance features enters a distance."""


class InconsistentCluster(ValueError):
    """Raised when a cluster is asked to merge tracklets sharing a frame."""


def tracklet_distance(a: Tracklet, b: Tracklet) -> float:
    """Appearance distance between two tracklets.

    Infinite when their temporal ranges intersect (one identity cannot exist
    twice in a frame); otherwise the mean cosine distance over all feature
    pairs, in [0, 2].
    """
    if a.features is None or b.features is None:
        missing = a.id if a.features is None else b.id
        raise MissingFeatures(f"tracklet {missing} has no appearance features")
    if a.frame_set & b.frame_set:
        return math.inf
    if (b.id, b.frames) < (a.id, a.frames):
        # fix the accumulation order so the distance is exactly symmetric
        a, b = b, a
    fa = np.stack(a.features)
    fb = np.stack(b.features)
    fa = fa / np.linalg.norm(fa, axis=1, keepdims=True)
    fb = fb / np.linalg.norm(fb, axis=1, keepdims=True)
    return float(np.mean(1.0 - fa @ fb.T))


def distance_matrix(tracklets) -> np.ndarray:
    """Symmetric pairwise distance matrix, zero diagonal, inf on overlap."""
    n = len(tracklets)
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dist[i, j] = dist[j, i] = tracklet_distance(tracklets[i], tracklets[j])
    return dist


def cluster(tracklets, tau: float = DEFAULT_TAU) -> dict[int, int]:
    """Greedy agglomerative clustering under a temporal-overlap veto.

    Repeatedly merges the cluster pair with the smallest average pairwise
    tracklet distance below tau; a merge is forbidden outright when any
    tracklet pair across the two clusters overlaps in time, so every output
    cluster is temporally consistent. Ties break toward the lexicographically
    smallest (min id, min id) pair.

    Returns a mapping tracklet id -> cluster id, where the cluster id is the
    smallest member id.
    """
    tracklets = list(tracklets)
    dist = distance_matrix(tracklets)
    clusters: list[list[int]] = [[i] for i in range(len(tracklets))]

    def link(ca, cb):
        values = [dist[i, j] for i in ca for j in cb]
        if any(math.isinf(v) for v in values):
            return math.inf
        return sum(values) / len(values)

    def key(ca, cb):
        ids = sorted((min(tracklets[i].id for i in ca), min(tracklets[i].id for i in cb)))
        return tuple(ids)

    while len(clusters) > 1:
        best = None
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                d = link(clusters[a], clusters[b])
                if d >= tau:
                    continue
                candidate = (d, key(clusters[a], clusters[b]), a, b)
                if best is None or candidate[:2] < best[:2]:
                    best = candidate
        if best is None:
            break
        _, _, a, b = best
        clusters[a] = clusters[a] + clusters[b]
        del clusters[b]

    labels = {}
    for members in clusters:
        cluster_id = min(tracklets[i].id for i in members)
        for i in members:
            labels[tracklets[i].id] = cluster_id
    return labels


def relabel(tracklets, clustering: dict[int, int]) -> list[Tracklet]:
    """Fuse each cluster into one long-term tracklet.

    The merged tracklet takes the smallest member id and the union of frames
    and boxes; gaps between members stay unfilled. Raises InconsistentCluster
    when two members share a frame (violated clustering precondition).
    """
    by_cluster: dict[int, list[Tracklet]] = {}
    for t in tracklets:
        by_cluster.setdefault(clustering[t.id], []).append(t)

    merged = []
    for cluster_id, members in sorted(by_cluster.items()):
        members.sort(key=lambda t: t.id)
        rows = []
        for t in members:
            scores = t.scores if t.scores is not None else (1.0,) * len(t)
            feats = t.features if t.features is not None else (None,) * len(t)
            rows += list(zip(t.frames, t.boxes, scores, feats))
        rows.sort(key=lambda r: r[0])
        frames = [r[0] for r in rows]
        if len(set(frames)) != len(frames):
            dup = next(f for i, f in enumerate(frames[1:], 1) if f == frames[i - 1])
            raise InconsistentCluster(f"cluster {cluster_id} duplicates frame {dup}")
        features = tuple(r[3] for r in rows) if all(r[3] is not None for r in rows) else None
        merged.append(Tracklet(
            id=min(t.id for t in members),
            frames=tuple(frames),
            boxes=tuple(r[1] for r in rows),
            scores=tuple(r[2] for r in rows),
            features=features,
        ))
    return sorted(merged, key=lambda t: t.id)


def refine(tracklets, tau: float = DEFAULT_TAU) -> list[Tracklet]:
    """Cluster short-term tracklets by appearance and fuse each cluster."""
    tracklets = list(tracklets)
    if not tracklets:
        return []
    return relabel(tracklets, cluster(tracklets, tau))


def attach_features(tracklets, table: dict[tuple[int, int], np.ndarray]) -> list[Tracklet]:
    """Attach per-frame appearance vectors keyed by (frame, tracklet id).

    Every frame of every tracklet must be covered; raises MissingFeatures
    listing the first gap otherwise.
    """
    out = []
    for t in tracklets:
        feats = []
        for frame in t.frames:
            vec = table.get((frame, t.id))
            if vec is None:
                raise MissingFeatures(f"no embedding for frame {frame}, tracklet {t.id}")
            feats.append(np.asarray(vec, dtype=float))
        out.append(Tracklet(t.id, t.frames, t.boxes, t.scores, tuple(feats)))
    return out
