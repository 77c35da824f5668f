import json
import re
from pathlib import Path

import numpy as np
import pytest

from frontier_lab.cli import main, parse_scales
from frontier_lab.frontier import trace_frontier_curve
from frontier_lab.grid_geometry import edges_of_path
from frontier_lab.render import render_svg
from frontier_lab.sim import Walk, make_rng, sample_walk_until_exit
from frontier_lab.walkfile import HEADER_SIZE, WalkFileError, decode_walk, encode_walk

DATA = Path(__file__).parent / "data"


def test_golden_three_steps():
    w = Walk.from_vertices([(0, 0), (1, 0), (1, 1), (0, 1)])
    assert encode_walk(w) == (DATA / "three_steps.frw").read_bytes()
    back = decode_walk((DATA / "three_steps.frw").read_bytes())
    assert back.vertices.tolist() == [[0, 0], [1, 0], [1, 1], [0, 1]]


def test_empty_walk_is_header_only():
    data = encode_walk(Walk((3, -4), np.zeros(0, np.uint8), 2))
    assert len(data) == HEADER_SIZE == 24
    w = decode_walk(data)
    assert len(w) == 0 and w.start == (3, -4) and w.scale_index == 2


def test_round_trips():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(0, 60))
        w = Walk(tuple(int(v) for v in rng.integers(-2**31, 2**31, 2)), rng.integers(0, 4, n).astype(np.uint8),
                 int(rng.integers(0, 20)))
        back = decode_walk(encode_walk(w))
        assert np.array_equal(back.steps, w.steps)
        assert (back.start, back.scale_index) == (w.start, w.scale_index)


@pytest.mark.parametrize("mutate,offset", [
    (lambda b: b[:2], 2),
    (lambda b: b"XXXX" + b[4:], 0),
    (lambda b: b[:10], 10),
    (lambda b: b[:4] + b"\x09\x00" + b[6:], 4),
    (lambda b: b[:-1], 24),
    (lambda b: b + b"\x00", 25),
    (lambda b: b[:-1] + b"\xd8", 24),
])
def test_decode_errors_report_offset(mutate, offset):
    good = (DATA / "three_steps.frw").read_bytes()
    with pytest.raises(WalkFileError) as e:
        decode_walk(mutate(good))
    assert e.value.offset == offset


def test_render_structure():
    w = sample_walk_until_exit(make_rng(11, 0), (0, 0), 16)
    c = trace_frontier_curve(w)
    svg = render_svg(w, c, annuli=[(0, 0, 4, 8)], boxes=[(6, 0, 8, 2)])
    assert svg.count("<path") == len(edges_of_path(w.vertices)) + 1
    d = re.search(r'class="frontier" d="([^"]*)"', svg).group(1)
    assert len(re.findall(r"[ML]", d)) == len(c.vertices)
    assert svg.count("<circle") == 2 and svg.count("<rect") == 1
    assert svg == render_svg(w, c, annuli=[(0, 0, 4, 8)], boxes=[(6, 0, 8, 2)])


def test_parse_scales():
    assert parse_scales("16..128") == [16, 32, 64, 128]
    assert parse_scales("8,32") == [8, 32]
    with pytest.raises(Exception):
        parse_scales("64..16")


def test_unknown_flag_is_usage_error(capsys):
    assert main(["simulate", "--bogus"]) == 2


def test_bad_config_key_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("nonsense: 1\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    err = json.loads(capsys.readouterr().err.splitlines()[0])
    assert err["error"] == "usage"


def test_simulate_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["simulate", "--radius", "32", "--seed", "5", "--out", str(out)]) == 0
    assert (a / "walk.frw").read_bytes() == (b / "walk.frw").read_bytes()
    assert (a / "simulate.json").read_text() == (b / "simulate.json").read_text()
    # the written walk renders and feeds back in
    assert main(["render", "--walk", str(a / "walk.frw"), "--out", str(a)]) == 0
    assert (a / "walk.svg").read_text().startswith("<svg")


def test_exponents_workers_byte_identical(tmp_path):
    outs = []
    for w in (1, 2):
        out = tmp_path / f"w{w}"
        assert main(["exponents", "--experiment", "two_arm", "--scales", "4..16", "--samples", "200",
                     "--seed", "3", "--workers", str(w), "--out", str(out)]) == 0
        outs.append((out / "two_arm.json").read_bytes())
    assert outs[0] == outs[1]
    assert main(["report", str(tmp_path / "w1")]) == 0


def test_metrics_and_measure(tmp_path):
    assert main(["metrics", "--radius", "16", "--seed", "1", "--seed2", "2", "--out", str(tmp_path)]) == 0
    assert main(["measure", "--radius", "32", "--seed", "1", "--out", str(tmp_path)]) == 0
    assert main(["report", str(tmp_path / "nothing")]) == 2
