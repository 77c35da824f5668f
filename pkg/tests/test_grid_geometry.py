import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frontier_lab.grid_geometry import (AnnulusSpec, Region, bad_disk_event, build_occupancy,
                                        crossing_segments, disconnects, extract_four_arms,
                                        face_components, four_arm_times, sausage_dilate, thicken,
                                        union_occupancy)
from frontier_lab.sim import Walk, make_rng, sample_walk_until_exit
from oracles import (brute_bad_disk, oracle_disk_disconnected, oracle_point_disconnected,
                     pixel_unbounded)

SQUARE = [(0, 0), (1, 0), (2, 0), (2, 1), (2, 2), (1, 2), (0, 2), (0, 1), (0, 0)]


def random_path(seed, n, start=(0, 0)):
    steps = np.random.default_rng(seed).integers(0, 4, n)
    return Walk(start, steps).vertices


def test_one_step_occupancy():
    occ = build_occupancy(np.array([[0, 0], [1, 0]]))
    assert occ.vertex_set == {(0, 0), (1, 0)}
    assert occ.edge_set == {((0, 0), (1, 0))}
    assert occ.bbox == (-2, -2, 3, 2)


def test_revisited_edge_counted_once():
    occ = build_occupancy(np.array([[0, 0], [1, 0], [0, 0], [1, 0]]))
    assert len(occ.edges) == 1


def test_square_loop_occupancy():
    occ = build_occupancy(np.array(SQUARE))
    assert len(occ.vertices) == 8
    assert len(occ.edges) == 8


def test_empty_edge_set_is_one_component():
    lab = face_components(build_occupancy(np.array([[0, 0]])))
    assert lab.n_components == 1


def test_square_loop_two_components():
    lab = face_components(build_occupancy(np.array(SQUARE)))
    assert lab.n_components == 2
    inner = {lab.label_of(i, j) for i in (0, 1) for j in (0, 1)}
    assert len(inner) == 1 and lab.unbounded_id not in inner


@pytest.mark.parametrize("seed", range(50))
def test_labeling_matches_pixel_oracle(seed):
    v = random_path(seed, 100)
    occ = build_occupancy(v)
    lab = face_components(occ)
    outside = pixel_unbounded(occ.vertex_set, occ.edge_set, occ.bbox)
    x0, y0, x1, y1 = occ.bbox
    for i in range(x0, x1):
        for j in range(y0, y1):
            assert (lab.label_of(i, j) == lab.unbounded_id) == outside((i, j))


def test_labeling_border_frame_single_component():
    lab = face_components(build_occupancy(random_path(3, 400)))
    frame = np.concatenate([lab.labels[0], lab.labels[-1], lab.labels[:, 0], lab.labels[:, -1]])
    assert set(frame.tolist()) == {lab.unbounded_id}


def test_square_disconnects_center():
    occ = build_occupancy(np.array(SQUARE), margin=4)
    assert disconnects(occ, Region.point((1, 1)))


def test_segment_disconnects_nothing():
    occ = build_occupancy(np.array([[x, 0] for x in range(6)]), margin=4)
    assert not disconnects(occ, Region.point((2, 1)))


def test_region_outside_bbox_is_an_error():
    occ = build_occupancy(np.array(SQUARE))
    with pytest.raises(ValueError):
        disconnects(occ, Region.point((40, 0)))


def _unvisited_vertex(v, rng):
    seen = {tuple(p) for p in v.tolist()}
    lo, hi = v.min(axis=0), v.max(axis=0)
    while True:
        p = (int(rng.integers(lo[0], hi[0] + 1)), int(rng.integers(lo[1], hi[1] + 1)))
        if p not in seen:
            return p


@pytest.mark.parametrize("seed", range(200))
def test_point_disconnection_matches_oracle(seed):
    v = random_path(1000 + seed, 200)
    p = _unvisited_vertex(v, np.random.default_rng(seed))
    occ = build_occupancy(v, margin=4)
    assert disconnects(occ, Region.point(p)) == oracle_point_disconnected(v.tolist(), p)


@pytest.mark.parametrize("seed", range(40))
def test_disk_disconnection_matches_oracle(seed):
    v = random_path(5000 + seed, 300)
    rng = np.random.default_rng(seed)
    c = v[rng.integers(len(v))] + rng.uniform(-1, 1, 2)
    r = float(rng.uniform(0.3, 2.0))
    occ = build_occupancy(v, margin=8)
    occ.bbox = (min(occ.bbox[0], int(c[0] - r) - 6), min(occ.bbox[1], int(c[1] - r) - 6),
                max(occ.bbox[2], int(c[0] + r) + 6), max(occ.bbox[3], int(c[1] + r) + 6))
    assert disconnects(occ, Region.disk(c, r)) == oracle_disk_disconnected(v.tolist(), tuple(c), r)


def _transform(v, k, shift):
    rot = np.array([[0, -1], [1, 0]])
    out = np.asarray(v)
    for _ in range(k):
        out = out @ rot.T
    return out + shift


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(0, 3), sx=st.integers(-20, 20), sy=st.integers(-20, 20))
def test_disconnects_invariant_under_lattice_symmetries(seed, k, sx, sy):
    v = random_path(seed, 150)
    p = np.array(_unvisited_vertex(v, np.random.default_rng(seed)))
    base = disconnects(build_occupancy(v, margin=4), Region.point(p))
    moved = disconnects(build_occupancy(_transform(v, k, (sx, sy)), margin=4),
                        Region.point(_transform(p[None], k, (sx, sy))[0]))
    assert base == moved


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_disconnects_monotone_in_edges(seed):
    v = random_path(seed, 120)
    extra = random_path(seed + 1, 120, start=tuple(v[-1]))
    p = _unvisited_vertex(np.vstack([v, extra]), np.random.default_rng(seed))
    a = build_occupancy(v, margin=4)
    b = union_occupancy(a, build_occupancy(extra, margin=4))
    if p in b.vertex_set:
        return
    lo = np.minimum(b.vertices.min(axis=0), p) - 4
    hi = np.maximum(b.vertices.max(axis=0), p) + 4
    a.bbox = b.bbox = (int(lo[0]), int(lo[1]), int(hi[0]), int(hi[1]))
    if disconnects(a, Region.point(p)):
        assert disconnects(b, Region.point(p))


def test_minimal_sausage_touches_edges():
    occ = build_occupancy(np.array([[0, 0], [1, 0]]))
    s = sausage_dilate(occ, 0.5, 2)
    cells = {tuple(c) for c in s.cells.tolist()}
    # half-resolution cells whose centre is within 1/2 of the segment
    assert cells == {(i, j) for i in range(-1, 3) for j in (-1, 0)}


def test_stadium_area():
    occ = build_occupancy(np.array([[0, 0], [1, 0]]))
    area = sausage_dilate(occ, 1.0, 8).area
    assert abs(area / (2 + math.pi) - 1) < 0.05


def test_stadium_area_converges_with_refinement():
    occ = build_occupancy(np.array([[0, 0], [1, 0]]))
    errs = [abs(sausage_dilate(occ, 1.0, q).area - (2 + math.pi)) for q in (4, 16, 64)]
    assert errs[2] < errs[0] and errs[2] < 0.02


def test_sausage_nested_in_delta():
    occ = build_occupancy(random_path(2, 30))
    small = {tuple(c) for c in sausage_dilate(occ, 0.5, 4).cells.tolist()}
    big = {tuple(c) for c in sausage_dilate(occ, 1.25, 4).cells.tolist()}
    assert small <= big and len(big) > len(small)


def test_sausage_rejects_bad_parameters():
    occ = build_occupancy(np.array([[0, 0], [1, 0]]))
    with pytest.raises(ValueError):
        sausage_dilate(occ, 1.0, 1)
    with pytest.raises(ValueError):
        sausage_dilate(occ, 0.1, 4)


def test_sausage_is_a_valid_occupancy():
    occ = build_occupancy(np.array(SQUARE))
    s = sausage_dilate(occ, 0.5, 4)
    lab = face_components(s)
    # the hole of the side-2 square survives a 1/2-sausage
    assert lab.label_of(4, 4) not in (-1, lab.unbounded_id)


@pytest.fixture(scope="module")
def exit_walk():
    return sample_walk_until_exit(make_rng(0, 3), (0, 0), 64)


def test_thicken_contains_walk(exit_walk):
    t = thicken(exit_walk, 3, 5)
    assert t.contains(exit_walk.vertices).all()


def test_thicken_single_scale(exit_walk):
    t = thicken(exit_walk, 4, 4, rule=lambda r: 1.5)
    assert len(t.pieces) == 1
    piece, rad = t.pieces[0]
    n2 = (piece * piece).sum(axis=1)
    assert n2[0] >= 64 and n2[-1] >= 256 and np.all(n2[1:-1] < 256)
    assert rad == 1.5


def test_thicken_monotone_in_r2(exit_walk):
    small, big = thicken(exit_walk, 2, 4), thicken(exit_walk, 2, 5)
    pts = np.random.default_rng(0).uniform(-64, 64, (4000, 2))
    assert np.all(big.contains(pts) >= small.contains(pts))


def test_thicken_requires_reach(exit_walk):
    with pytest.raises(ValueError):
        thicken(exit_walk, 3, 9)


ANN = AnnulusSpec((0.0, 0.0), 2.0, 6.0)


def test_ray_is_one_crossing():
    assert len(crossing_segments([(x, 0) for x in range(8)], ANN)) == 1


def test_out_in_out_is_three_crossings():
    path = [(x, 0) for x in range(8)] + [(x, 0) for x in range(6, -1, -1)] + [(x, 0) for x in range(1, 8)]
    segs = crossing_segments(path, ANN)
    assert len(segs) == 3
    assert len(crossing_segments(path[::-1], ANN)) == 3


def test_path_missing_annulus_has_no_crossings():
    assert crossing_segments([(20, 0), (21, 0), (21, 1)], ANN) == []


def test_crossing_through_segment_interior():
    # a chord passing within r of the centre between two lattice points
    path = [(6, 1), (-6, 1)]
    assert len(crossing_segments([(6, 1), (1, 1), (-6, 1)], ANN)) == 2
    assert len(crossing_segments(path, ANN)) == 2


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_crossing_count_reversal_invariant(seed):
    v = random_path(seed, 400)
    ann = AnnulusSpec((0.0, 0.0), 2.0, 7.0)
    assert len(crossing_segments(v, ann)) == len(crossing_segments(v[::-1], ann))


def test_annulus_validation():
    with pytest.raises(ValueError):
        AnnulusSpec((0, 0), 3, 3)
    with pytest.raises(ValueError):
        Region.annulus((0, 0), 0, 1)


def _line(a, b):
    (ax, ay), (bx, by) = a, b
    n = max(abs(bx - ax), abs(by - ay))
    return [(ax + (bx - ax) * i // n, ay + (by - ay) * i // n) for i in range(n + 1)]


def _zigzag(R, r):
    far = R + 2
    corners = [(-far, 0), (0, 0), (0, far), (0, 0), (far, 0), (0, 0), (0, -far)]
    legs = list(zip(corners[:-1], corners[1:]))
    pts = []
    for a, b in legs:
        seg = _line(a, b)
        pts.extend(seg if not pts else seg[1:])
    return np.array(pts)


def test_single_pass_has_no_four_arms():
    v = np.array(_line((-20, 0), (20, 0)))
    assert extract_four_arms(Walk.from_vertices(v), (0, 0), 4, 10) is None


def test_zigzag_gives_alternating_arms():
    R, r = 10, 4
    arms = extract_four_arms(Walk.from_vertices(_zigzag(R, r)), (0, 0), r, R)
    assert arms is not None
    ann = AnnulusSpec((0.0, 0.0), r, R)
    for k, arm in enumerate(arms):
        d = np.hypot(*arm.T.astype(float))
        first, last = d[0], d[-1]
        if k % 2 == 0:
            assert first >= R and last >= r and last < r + 1
        else:
            assert first >= r and first < r + 1 and last >= R
        assert len(crossing_segments(arm, ann)) == 1


def test_four_arm_times_ordered():
    t = four_arm_times(_zigzag(10, 4), (0, 0), 4, 10)
    assert list(t) == sorted(t)


def test_bad_disk_disjoint_parallel_arms():
    arms = [np.array([[x, y] for x in range(5)]) for y in (0, 2, 4, 6)]
    assert bad_disk_event(arms)


def test_bad_disk_common_vertex():
    arms = [np.array([[0, 0], [d[0], d[1]]]) for d in ((1, 0), (-1, 0), (0, 1), (0, -1))]
    assert not bad_disk_event(arms)


def test_bad_disk_absent_arms():
    assert not bad_disk_event(None)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_bad_disk_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    arms = [random_path(int(rng.integers(1 << 30)), int(rng.integers(1, 6)),
                        start=tuple(rng.integers(-3, 4, 2))) for _ in range(4)]
    assert bad_disk_event(arms) == brute_bad_disk(arms)


def test_edge_disjoint_variant_allows_vertex_contact():
    # every arm passes through the origin but no two share an edge
    arms = [np.array([[-1, 0], [0, 0]]), np.array([[1, 0], [0, 0]]),
            np.array([[0, 1], [0, 0]]), np.array([[0, -1], [0, 0]])]
    assert not bad_disk_event(arms)
    assert bad_disk_event(arms, edge_disjoint=True)
