"""Frontier vertices, the traced frontier curve and frontier events."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .grid_geometry import (FaceLabeling, PathOccupancy, Region, build_occupancy,
                            discrete_boundary_mask, face_components, union_occupancy,
                            disconnects, edges_of_path, _bbox)
from .sim import Walk


class EdgeGrid:
    """Stamped scratch buffers for lattice coordinates in [-half, half]."""

    def __init__(self, half: int, curve_cap: int | None = None):
        self.half = int(half)
        self.off = self.half + 4
        self.W = 2 * self.half + 9
        W = self.W
        self.E = np.zeros(2 * W * W, dtype=np.int32)
        self.V = np.zeros(W * W, dtype=np.int32)
        self.F = np.zeros(W * W, dtype=np.int32)
        self.queue = np.zeros(W * W, dtype=np.int64)
        self.cbuf = np.zeros((2, curve_cap or 4 * W + 1024), dtype=np.int64)
        self._stamp = 0

    def next_stamp(self) -> int:
        if self._stamp >= 2**31 - 2:
            self.E[:] = 0
            self.V[:] = 0
            self.F[:] = 0
            self._stamp = 0
        self._stamp += 1
        return self._stamp

    def trace(self, stamp: int, sx: int, sy: int, back: int) -> tuple[int, int, int]:
        """Trace the outer contour from (sx, sy); returns (L, nverts, vstamp)."""
        vstamp = self.next_stamp()
        while True:
            L, nv = K.trace_outer(self.E, stamp, self.off, self.W, sx, sy, back,
                                  self.V, vstamp, self.cbuf)
            if L >= 0:
                return L, nv, vstamp
            self.cbuf = np.zeros((2, 2 * self.cbuf.shape[1]), dtype=np.int64)
            vstamp = self.next_stamp()


_GRIDS: dict[int, EdgeGrid] = {}


def edge_grid(half: int) -> EdgeGrid:
    """Per-process scratch grid covering [-half, half]^2 (reused across samples)."""
    g = _GRIDS.get(half)
    if g is None:
        if len(_GRIDS) > 4:
            _GRIDS.clear()
        g = _GRIDS[half] = EdgeGrid(half)
    return g


@dataclass(eq=False)
class FrontierCurve:
    vertices: np.ndarray
    per_traversal_duration: float
    total_duration: float
    orientation: int = 1

    @property
    def half_edges(self) -> int:
        return len(self.vertices) - 1

    def signed_area(self) -> float:
        v = self.vertices
        return 0.5 * float((v[:-1, 0] * v[1:, 1] - v[1:, 0] * v[:-1, 1]).sum())

    def times(self) -> np.ndarray:
        return np.arange(len(self.vertices)) * self.per_traversal_duration


def traversal_duration(c1: float, scale_index: int) -> float:
    """c1 * e^{-4n/3} with e^n = 2^scale_index."""
    return c1 * 2.0 ** (-4.0 * scale_index / 3.0)


def frontier_vertices(occ: PathOccupancy, labeling: FaceLabeling | None = None) -> set[tuple[int, int]]:
    """Path vertices that are corners of an unbounded face."""
    return {tuple(v) for v in _frontier_mask_vertices(occ, labeling).tolist()}


def _frontier_mask_vertices(occ: PathOccupancy, labeling: FaceLabeling | None) -> np.ndarray:
    lab = face_components(occ) if labeling is None else labeling
    v = occ.vertices
    x0, y0 = lab.origin
    hit = np.zeros(len(v), dtype=bool)
    for dx, dy in ((-1, -1), (0, -1), (-1, 0), (0, 0)):
        hit |= lab.labels[v[:, 0] + dx - x0, v[:, 1] + dy - y0] == lab.unbounded_id
    return v[hit]


def is_frontier_point(occ: PathOccupancy, v, labeling: FaceLabeling | None = None) -> bool:
    v = (int(v[0]), int(v[1]))
    x0, y0, x1, y1 = occ.bbox
    if not (x0 < v[0] < x1 and y0 < v[1] < y1):
        return False
    if not np.any((occ.vertices[:, 0] == v[0]) & (occ.vertices[:, 1] == v[1])):
        return False
    lab = face_components(occ) if labeling is None else labeling
    return any(lab.label_of(v[0] + dx, v[1] + dy) == lab.unbounded_id
               for dx, dy in ((-1, -1), (0, -1), (-1, 0), (0, 0)))


def _start_vertex(verts: np.ndarray) -> tuple[int, int, int]:
    """Start vertex and a direction at it pointing into the unbounded face.

    The last vertex is used when it has maximal norm (always true for an
    exit-stopped walk); otherwise the lexicographically largest vertex.
    """
    n2 = (verts * verts).sum(axis=1)
    end = verts[-1]
    if n2[-1] >= n2.max():
        return int(end[0]), int(end[1]), int(K.outward_axis(int(end[0]), int(end[1])))
    i = np.lexsort((verts[:, 1], verts[:, 0]))[-1]
    return int(verts[i, 0]), int(verts[i, 1]), 0


def _local_grid(verts: np.ndarray) -> EdgeGrid:
    half = int(np.abs(verts).max()) + 2
    return EdgeGrid(half, 4 * len(verts) + 16)


def trace_contour(verts: np.ndarray, grid: EdgeGrid | None = None):
    """Outer contour of a vertex path: (curve vertices, distinct vertex count)."""
    verts = np.asarray(verts, dtype=np.int64)
    g = grid or _local_grid(verts)
    stamp = g.next_stamp()
    K.mark_vertices_path(verts[:, 0].copy(), verts[:, 1].copy(), 0, len(verts) - 1,
                         g.E, stamp, g.off, g.W)
    sx, sy, back = _start_vertex(verts)
    L, nv, _ = g.trace(stamp, sx, sy, back)
    return g.cbuf[:, : L + 1].T.copy(), nv


def trace_frontier_curve(walk: Walk, c1: float = 1.0, *, per_edge: bool = False) -> FrontierCurve:
    """Counterclockwise outer contour starting at the walk's exit vertex.

    Each directed boundary traversal lasts c1 * e^{-4n/3}; with per_edge the
    total duration counts every boundary edge once instead.
    """
    verts = walk.vertices
    curve, _ = trace_contour(verts)
    dur = traversal_duration(c1, walk.scale_index)
    if per_edge:
        total = len(edges_of_path(curve)) * dur
    else:
        total = (len(curve) - 1) * dur
    return FrontierCurve(curve, dur, total, 1)


# ------------------------------------------------------------- frontier disks

@dataclass(eq=False)
class FrontierDiskDecomposition:
    lambda1: np.ndarray
    omega: np.ndarray
    lambda2: np.ndarray
    disk: Region
    envelope: Region


def decompose_at_disk(walk: Walk, center, disk_radius: float,
                      envelope_radius: float) -> FrontierDiskDecomposition | None:
    """First/last-visit decomposition at the discrete boundary of the disk."""
    verts = walk.vertices
    ring = discrete_boundary_mask(verts, center, disk_radius)
    idx = np.flatnonzero(ring)
    if idx.size == 0:
        return None
    a, b = int(idx[0]), int(idx[-1])
    return FrontierDiskDecomposition(verts[: a + 1], verts[a: b + 1], verts[b:],
                                     Region.disk(center, disk_radius),
                                     Region.disk(center, envelope_radius))


def default_disk_radii(exit_radius: float) -> tuple[int, int]:
    return int(math.floor(exit_radius ** 0.75)), int(math.floor(exit_radius ** (5 / 6)))


def frontier_disk_event(walk: Walk, center, disk_radius: float, envelope_radius: float) -> bool:
    verts = walk.vertices
    c = np.asarray(center, dtype=float)
    inside = ((verts - c) ** 2).sum(axis=1) < disk_radius**2
    if not inside.any():
        return False
    dec = decompose_at_disk(walk, center, disk_radius, envelope_radius)
    if dec is None:
        return False
    if not dec.envelope.contains(dec.omega).all():
        return False
    arms = union_occupancy(build_occupancy(dec.lambda1), build_occupancy(dec.lambda2))
    ex = dec.disk.extent()
    x0, y0, x1, y1 = arms.bbox
    arms.bbox = (min(x0, math.floor(ex[0]) - 4), min(y0, math.floor(ex[1]) - 4),
                 max(x1, math.ceil(ex[2]) + 4), max(y1, math.ceil(ex[3]) + 4))
    return not disconnects(arms, dec.disk)


# ------------------------------------------------------------- separation

def _disk_occupancy(center, rho: int) -> PathOccupancy:
    """Closed lattice disk: vertices within rho, edges between them, and the
    faces whose four corners are within rho."""
    cx, cy = int(center[0]), int(center[1])
    r = int(rho)
    xs, ys = np.meshgrid(np.arange(cx - r, cx + r + 1), np.arange(cy - r, cy + r + 1), indexing="ij")
    pts = np.column_stack([xs.ravel(), ys.ravel()])
    inside = ((pts - (cx, cy)) ** 2).sum(axis=1) <= r * r
    v = pts[inside]
    s = {tuple(p) for p in v.tolist()}
    edges = [(x, y, 0) for x, y in s if (x + 1, y) in s] + [(x, y, 1) for x, y in s if (x, y + 1) in s]
    cells = [(x, y) for x, y in s if (x + 1, y) in s and (x, y + 1) in s and (x + 1, y + 1) in s]
    e = np.array(edges, dtype=np.int64).reshape(-1, 3)
    c = np.array(cells, dtype=np.int64).reshape(-1, 2)
    return PathOccupancy(v.astype(np.int64), e, _bbox(v), c)


def _origin_on_frontier(base: PathOccupancy, ends, rho: int) -> bool:
    for x in ends:
        if x[0] * x[0] + x[1] * x[1] < rho * rho:
            return False
    occ = union_occupancy(base, *[_disk_occupancy(x, rho) for x in ends])
    return is_frontier_point(occ, (0, 0))


def separation_quality(occ1: PathOccupancy, occ2: PathOccupancy, endpoints, m: float) -> float:
    """e^{-m} times the largest integer radius of the disks at the endpoints
    that keeps the origin on the frontier of the union."""
    base = union_occupancy(occ1, occ2)
    ends = [(int(p[0]), int(p[1])) for p in endpoints]
    if not _origin_on_frontier(base, ends, 0):
        return 0.0
    lo = 0
    hi = int(math.ceil(max(math.hypot(*p) for p in ends))) + 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _origin_on_frontier(base, ends, mid):
            lo = mid
        else:
            hi = mid
    return lo * math.exp(-m)
