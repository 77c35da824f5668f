"""Command-line front end.

    frontier-lab simulate --radius 64 --seed 1 --out runs/
    frontier-lab exponents --experiment one_arm --scales 16..512 --samples 100000 --seed 42
    frontier-lab measure --radius 256 --seed 3
    frontier-lab couple --scales 64..512 --samples 1000
    frontier-lab metrics --radius 64 --seed 1 --seed2 2
    frontier-lab render --radius 32 --seed 7
    frontier-lab report runs/

Exit status: 0 success, 1 runtime error, 2 usage error, 3 invalid run
(too many aborted samples).  Errors are also printed to stderr as a JSON record.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .estimators import EXPERIMENTS, default_config
from .estimators.experiments import ExperimentResult
from .frontier import trace_frontier_curve
from .grid_geometry import build_occupancy
from .measures import measure_to_csv, minkowski_content, occupation_measure
from .metrics import TimedPolyline, frechet_distance, hausdorff_distance, np_distance, resample_uniform
from .render import render_svg
from .sim import make_rng, sample_walk_until_exit
from .walkfile import read_walk, write_walk

EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_INVALID = 3


class UsageError(ValueError):
    pass


class InvalidRun(Exception):
    pass


def parse_scales(text: str) -> list[int]:
    """'16..512' (dyadic range) or '16,32,64'."""
    try:
        if ".." in text:
            a, b = (int(t) for t in text.split(".."))
            if a < 1 or b < a:
                raise ValueError
            out = []
            s = a
            while s <= b:
                out.append(s)
                s *= 2
            return out
        return [int(t) for t in text.split(",") if t]
    except ValueError:
        raise UsageError(f"bad scale list {text!r}") from None


def _parse_param(text: str):
    if "=" not in text:
        raise UsageError(f"--param expects key=value, got {text!r}")
    k, v = text.split("=", 1)
    return k, yaml.safe_load(v)


def load_config_file(path: str) -> dict:
    p = Path(path)
    try:
        data = yaml.safe_load(p.read_text())
    except (OSError, yaml.YAMLError) as e:
        raise UsageError(f"cannot read config file: {e}") from None
    if not isinstance(data, dict):
        raise UsageError("config file must hold a mapping")
    return data


def run_digest(command: str, options: dict) -> str:
    keep = {k: v for k, v in options.items() if k not in ("out", "workers", "config")}
    text = json.dumps({"command": command, **keep}, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode()).hexdigest()


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    p = out / name
    p.write_text(text)
    return p


def _meta(command: str, options: dict) -> dict:
    return {"artifact_version": __version__, "command": command,
            "config_digest": run_digest(command, options), "base_seed": options.get("seed")}


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _walk_from(options: dict, key: str = "seed"):
    if options.get("walk"):
        return read_walk(options["walk"])
    R = int(options["radius"])
    return sample_walk_until_exit(make_rng(int(options[key]), int(options.get("stream", 0))), (0, 0), R)


# ------------------------------------------------------------------ commands

def cmd_simulate(o: dict) -> int:
    walk = _walk_from(o)
    curve = trace_frontier_curve(walk, float(o["c1"]))
    out = Path(o["out"])
    out.mkdir(parents=True, exist_ok=True)
    write_walk(out / "walk.frw", walk)
    occ = build_occupancy(walk)
    summary = {**_meta("simulate", o), "steps": len(walk), "end": list(walk.end),
               "distinct_vertices": len(occ.vertices), "frontier_vertices": int(len(np.unique(curve.vertices, axis=0))),
               "frontier_half_edges": curve.half_edges, "total_duration": curve.total_duration,
               "signed_area": curve.signed_area()}
    _write(out, "simulate.json", _dump(summary))
    print(f"walk of {len(walk)} steps, {summary['frontier_vertices']} frontier vertices -> {out / 'walk.frw'}")
    return 0


def _experiment_config(name: str, o: dict):
    kw = {}
    if o.get("scales"):
        kw["scales"] = o["scales"]
    if o.get("samples"):
        kw["samples_per_scale"] = int(o["samples"])
    kw["base_seed"] = int(o.get("seed", 0))
    kw["workers"] = int(o.get("workers", 1))
    kw["params"] = dict(o.get("params") or {})
    try:
        return default_config(name, **kw)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _summary_line(r: ExperimentResult) -> str:
    if r.fit is None:
        return f"{r.experiment}: no fit (see JSON), valid={r.valid}"
    lo, hi = r.fit.bootstrap_ci
    return f"{r.experiment}: slope {r.fit.slope:.4f} CI [{lo:.4f}, {hi:.4f}] expected {r.expected} valid={r.valid}"


def cmd_exponents(o: dict) -> int:
    names = list(EXPERIMENTS) if o["experiment"] == "all" else [o["experiment"]]
    if o["experiment"] == "all":
        names.remove("bad_disk")
    out = Path(o["out"])
    invalid = False
    for name in names:
        if name not in EXPERIMENTS:
            raise UsageError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
        cfg = _experiment_config(name, o)
        res = EXPERIMENTS[name](cfg)
        results = res.values() if isinstance(res, dict) else [res]
        for r in results:
            _write(out, f"{r.experiment}.json", r.to_json())
            print(_summary_line(r))
            invalid |= not r.valid
    if invalid:
        raise InvalidRun("abort fraction above 1e-3 in at least one experiment")
    return 0


def cmd_measure(o: dict) -> int:
    walk = _walk_from(o)
    k = walk.scale_index
    occ = build_occupancy(walk)
    curve = trace_frontier_curve(walk)
    R = 2**k
    verts = {tuple(v) for v in np.unique(curve.vertices, axis=0).tolist() if v[0] ** 2 + v[1] ** 2 <= R * R}
    mu = occupation_measure(verts, k, float(o["c1"]))
    out = Path(o["out"])
    _write(out, "measure.csv", measure_to_csv(mu))
    eps = [float(e) for e in o["eps"]]
    mk = minkowski_content(_segments(curve.vertices), 4 / 3, eps, int(o["refine"]))
    summary = {**_meta("measure", o), "atoms": len(mu.points), "total_mass": mu.total_mass,
               "walk_vertices": len(occ.vertices),
               "minkowski": {"eps": list(mk.eps), "estimates": list(mk.estimates), "extrapolated": mk.extrapolated}}
    _write(out, "measure.json", _dump(summary))
    print(f"{len(mu.points)} atoms, total mass {mu.total_mass:.6g}, 4/3-content ~ {mk.extrapolated:.4g}")
    return 0


def _segments(v: np.ndarray) -> np.ndarray:
    return np.stack([v[:-1], v[1:]], axis=1).astype(float)


def cmd_couple(o: dict) -> int:
    cfg = _experiment_config("coupling", o)
    r = EXPERIMENTS["coupling"](cfg)
    _write(Path(o["out"]), "coupling.json", r.to_json())
    print(_summary_line(r))
    if not r.valid:
        raise InvalidRun("abort fraction above 1e-3")
    return 0


def cmd_metrics(o: dict) -> int:
    a = _walk_from(o, "seed")
    if o.get("walk2"):
        b = read_walk(o["walk2"])
    else:
        b = sample_walk_until_exit(make_rng(int(o["seed2"]), 0), (0, 0), int(o["radius"]))
    curves = []
    for w in (a, b):
        c = trace_frontier_curve(w, float(o["c1"]))
        tp = TimedPolyline.from_frontier_curve(c, 2.0 ** -w.scale_index)
        curves.append(resample_uniform(tp, int(o["points"])) if o["points"] else tp)
    tol = float(o["tol"])
    res = {**_meta("metrics", o), "tol": tol,
           "hausdorff": hausdorff_distance(curves[0].points, curves[1].points),
           "frechet": frechet_distance(curves[0], curves[1], tol),
           "np_distance": np_distance(curves[0], curves[1], tol)}
    _write(Path(o["out"]), "metrics.json", _dump(res))
    print(f"hausdorff {res['hausdorff']:.4f}  frechet {res['frechet']:.4f}  rho {res['np_distance']:.4f}")
    return 0


def cmd_render(o: dict) -> int:
    walk = _walk_from(o)
    curve = trace_frontier_curve(walk) if not o["no_frontier"] else None
    svg = render_svg(walk, curve)
    p = _write(Path(o["out"]), o["name"], svg)
    print(f"wrote {p}")
    return 0


def cmd_report(o: dict) -> int:
    root = Path(o["directory"])
    files = sorted(root.glob("*.json"))
    if not files:
        raise UsageError(f"no JSON results in {root}")
    lines = ["| experiment | slope | CI | expected | valid |", "|---|---|---|---|---|"]
    for f in files:
        d = json.loads(f.read_text())
        if "experiment" not in d:
            continue
        fit = d.get("fit") or {}
        ci = d.get("ci") or ["", ""]
        slope = f"{fit['slope']:.4f}" if fit else "-"
        cis = f"[{ci[0]:.4f}, {ci[1]:.4f}]" if fit else "-"
        lines.append(f"| {d['experiment']} | {slope} | {cis} | {json.dumps(d.get('expected'))} | {d.get('valid')} |")
    text = "\n".join(lines) + "\n"
    (root / "report.md").write_text(text)
    print(text, end="")
    return 0


COMMANDS = {"simulate": cmd_simulate, "exponents": cmd_exponents, "measure": cmd_measure,
            "couple": cmd_couple, "metrics": cmd_metrics, "render": cmd_render, "report": cmd_report}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="frontier-lab", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, walk=True):
        sp.add_argument("--config", help="YAML or JSON file with option defaults")
        sp.add_argument("--out", default="frontier_lab_out", help="output directory")
        sp.add_argument("--seed", type=int, default=0)
        if walk:
            sp.add_argument("--radius", type=int, default=64, help="exit radius in lattice units")
            sp.add_argument("--stream", type=int, default=0)
            sp.add_argument("--walk", help="read the walk from a WalkFile instead of sampling")
            sp.add_argument("--c1", type=float, default=1.0)

    s = sub.add_parser("simulate", help="sample one walk and write it as a WalkFile")
    common(s)

    s = sub.add_parser("exponents", help="run a named scaling experiment")
    common(s, walk=False)
    s.add_argument("--experiment", required=True, help=f"one of {', '.join(EXPERIMENTS)} or 'all'")
    s.add_argument("--scales", type=parse_scales)
    s.add_argument("--samples", type=int)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--param", action="append", type=_parse_param, default=[], metavar="KEY=VALUE")

    s = sub.add_parser("measure", help="occupation measure and Minkowski content of one frontier")
    common(s)
    s.add_argument("--eps", type=float, nargs="+", default=[8.0, 4.0, 2.0])
    s.add_argument("--refine", type=int, default=4)

    s = sub.add_parser("couple", help="Skorokhod coupling deviation experiment")
    common(s, walk=False)
    s.add_argument("--scales", type=parse_scales)
    s.add_argument("--samples", type=int)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--param", action="append", type=_parse_param, default=[], metavar="KEY=VALUE")

    s = sub.add_parser("metrics", help="distances between the frontier curves of two walks")
    common(s)
    s.add_argument("--seed2", type=int, default=1)
    s.add_argument("--walk2")
    s.add_argument("--tol", type=float, default=1e-2)
    s.add_argument("--points", type=int, default=200, help="resample each curve to this many points (0: keep)")

    s = sub.add_parser("render", help="SVG of a walk and its frontier")
    common(s)
    s.add_argument("--name", default="walk.svg")
    s.add_argument("--no-frontier", action="store_true")

    s = sub.add_parser("report", help="tabulate result JSON files in a directory")
    s.add_argument("directory")
    return p


def resolve_options(args: argparse.Namespace, parser: argparse.ArgumentParser) -> dict:
    o = vars(args).copy()
    if o.get("config"):
        file_opts = load_config_file(o["config"])
        sub_defaults = {a.dest: a.default for a in _subparser(parser, args.command)._actions}
        for k, v in file_opts.items():
            key = k.replace("-", "_")
            if key not in sub_defaults and key != "params":
                raise UsageError(f"unknown config key {k!r}")
            if key == "scales" and isinstance(v, str):
                v = parse_scales(v)
            if key == "params" or o.get(key) == sub_defaults.get(key):
                o[key] = v
    params = dict(o.get("params") or {})
    params.update(dict(o.pop("param", []) or []))
    if params or "param" in vars(args):
        o["params"] = params
    return o


def _subparser(parser, name):
    for a in parser._actions:
        if isinstance(a, argparse._SubParsersAction):
            return a.choices[name]
    raise KeyError(name)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        o = resolve_options(args, parser)
        return COMMANDS[args.command](o)
    except UsageError as e:
        _error("usage", str(e))
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except InvalidRun as e:
        _error("invalid_run", str(e))
        return EXIT_INVALID
    except Exception as e:  # noqa: BLE001 - reported as a machine-readable record
        _error(type(e).__name__, str(e))
        return EXIT_ERROR


def _error(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message, "artifact_version": __version__}), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
