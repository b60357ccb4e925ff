"""Clusters, crossings, uniqueness events and color-restricted BFS paths.

Everything here works on a finite region.  Functions come in two flavors:
the public ones take a :class:`~wordperc.lattice.Configuration`, the
``*_array`` helpers take a precomputed state array so callers evaluating
several events on one block pay for the hashing once.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy import ndimage

from .lattice import NEIGHBOR_STEPS, Configuration, Region

_FACE6 = ndimage.generate_binary_structure(3, 1)


@dataclass(frozen=True)
class ClusterLabeling:
    """Connected components of one color inside a region.

    ``labels`` is an int array on the region (0 = other color); label ``k``
    is the k-th cluster in lexicographic order of its smallest site, so
    ``ids[k - 1]`` is that smallest site.
    """

    region: Region
    color: int
    labels: np.ndarray
    ids: tuple
    sizes: tuple
    bbox_lo: tuple
    bbox_hi: tuple

    @property
    def count(self) -> int:
        return len(self.ids)

    def label_of(self, s) -> int:
        if s not in self.region:
            return 0
        return int(self.labels[self.region.index(s)])

    def cluster_id(self, s):
        k = self.label_of(s)
        return self.ids[k - 1] if k else None

    def diameter(self, k: int) -> int:
        """L-infinity diameter of cluster ``k`` (1-based label)."""
        lo, hi = self.bbox_lo[k - 1], self.bbox_hi[k - 1]
        return max(b - a for a, b in zip(lo, hi))


def label_array(mask: np.ndarray) -> tuple:
    """Face-connected labels of a boolean array, renumbered in raster order."""
    labels, count = ndimage.label(mask, structure=_FACE6)
    if count == 0:
        return labels, 0
    flat = labels.ravel()
    present, first = np.unique(flat, return_index=True)
    first = first[present > 0]
    present = present[present > 0]
    order = np.argsort(first, kind="stable")
    remap = np.zeros(count + 1, dtype=labels.dtype)
    remap[present[order]] = np.arange(1, count + 1, dtype=labels.dtype)
    return remap[labels], count


def clusters_array(states: np.ndarray, region: Region, color: int) -> ClusterLabeling:
    labels, count = label_array(states == color)
    flat = labels.ravel()
    sizes = np.bincount(flat, minlength=count + 1)[1:]
    ids, lo, hi = [], [], []
    if count:
        _, first = np.unique(flat, return_index=True)
        first = first[1:] if flat.min() == 0 else first
        for k, sl in enumerate(ndimage.find_objects(labels)):
            idx = np.unravel_index(first[k], labels.shape)
            ids.append(tuple(int(i) + o for i, o in zip(idx, region.lo)))
            lo.append(tuple(s.start + o for s, o in zip(sl, region.lo)))
            hi.append(tuple(s.stop - 1 + o for s, o in zip(sl, region.lo)))
    return ClusterLabeling(
        region, color, labels, tuple(ids), tuple(int(s) for s in sizes), tuple(lo), tuple(hi)
    )


def clusters(config: Configuration, region: Region, color: int) -> ClusterLabeling:
    return clusters_array(config.states(region), region, color)


def spans_axis_array(mask: np.ndarray, axis: int = 1) -> bool:
    """True if one face-connected component of ``mask`` touches both extreme layers."""
    if not mask.take(0, axis=axis).any() or not mask.take(-1, axis=axis).any():
        return False
    labels, _ = ndimage.label(mask, structure=_FACE6)
    first = np.unique(labels.take(0, axis=axis))
    last = np.unique(labels.take(-1, axis=axis))
    common = np.intersect1d(first, last)
    return bool(common[common > 0].size)


def crossing(config: Configuration, region: Region) -> bool:
    """1-path inside ``region`` joining its minimal-y and maximal-y layers."""
    return spans_axis_array(config.states(region) == 1, axis=1)


def uniqueness_array(states: np.ndarray, t: int, color: int) -> bool:
    mask = states == color
    labels, count = ndimage.label(mask, structure=_FACE6)
    if count < 2:
        return True
    big = 0
    for sl in ndimage.find_objects(labels):
        if max(s.stop - s.start - 1 for s in sl) >= t:
            big += 1
            if big > 1:
                return False
    return True


def uniqueness(config: Configuration, region: Region, t: int, color: int) -> bool:
    """All ``color`` clusters of L-infinity diameter >= t in ``region`` coincide."""
    if t < 1:
        raise ValueError("t must be >= 1")
    return uniqueness_array(config.states(region), t, color)


def connects_to_layer_array(
    states: np.ndarray, source_index: tuple, color: int, axis: int, which: str
) -> bool:
    """Color path from ``source_index`` to an extreme layer, inside the array."""
    if states[source_index] != color:
        return False
    mask = states == color
    labels, _ = ndimage.label(mask, structure=_FACE6)
    k = labels[source_index]
    layer = labels.take(0 if which == "min" else -1, axis=axis)
    return bool((layer == k).any())


def bfs_path_array(
    allowed: np.ndarray,
    region: Region,
    sources: Iterable,
    targets: Iterable,
) -> Optional[list]:
    """Shortest path over ``allowed`` sites from any source to any target.

    Sources are enqueued in lexicographic order; neighbors are expanded in the
    order +x, -x, +y, -y, +z, -z.  Returns stored sites or None.
    """
    nx, ny, nz = allowed.shape
    strides = (ny * nz, nz, 1)
    flat_allowed = allowed.ravel()
    lo = region.lo

    def to_flat(s):
        return (s[0] - lo[0]) * strides[0] + (s[1] - lo[1]) * strides[1] + (s[2] - lo[2])

    target_set = {to_flat(s) for s in targets if s in region}
    if not target_set:
        return None
    parent = {}
    queue = deque()
    for s in sorted(set(sources)):
        if s not in region:
            continue
        f = to_flat(s)
        if flat_allowed[f] and f not in parent:
            parent[f] = -1
            queue.append((f, s[0] - lo[0], s[1] - lo[1], s[2] - lo[2]))
    dims = (nx, ny, nz)
    found = None
    while queue:
        f, i, j, k = queue.popleft()
        if f in target_set:
            found = f
            break
        for dx, dy, dz in NEIGHBOR_STEPS:
            a, b, c = i + dx, j + dy, k + dz
            if 0 <= a < dims[0] and 0 <= b < dims[1] and 0 <= c < dims[2]:
                g = f + dx * strides[0] + dy * strides[1] + dz
                if flat_allowed[g] and g not in parent:
                    parent[g] = f
                    queue.append((g, a, b, c))
    if found is None:
        return None
    path = []
    while found != -1:
        a, rem = divmod(found, strides[0])
        b, c = divmod(rem, strides[1])
        path.append((a + lo[0], b + lo[1], c + lo[2]))
        found = parent[found]
    return path[::-1]


def find_path(
    config: Configuration,
    region: Region,
    color: int,
    sources: Iterable,
    targets: Iterable,
    forbidden: Iterable = (),
) -> Optional[list]:
    """Deterministic shortest ``color`` path inside ``region`` avoiding ``forbidden``."""
    allowed = config.states(region) == color
    for s in forbidden:
        if s in region:
            allowed[region.index(s)] = False
    return bfs_path_array(allowed, region, sources, targets)
