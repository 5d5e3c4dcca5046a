"""Batch front-end: model configs in, plot-ready CSV/JSON out.

One JSON config document drives every subcommand; the listed CLI flags
override the corresponding config fields.  The CLI emits data only (no
plotting): CSV for tables, JSON for structured records, UTF-8 with LF
line endings, and shortest round-trip float formatting so identical runs
are byte-identical.

Exit codes: 0 success with results, 2 continuation first-step failure,
3 success with an empty result, 1 any error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import continuation as cont
from . import models
from .errors import ConvergenceError, FlutterSpecError
from .flutter import FlutterPoint, FlutterSearchSettings, find_flutter_points
from .operator import EigenPoint, ParametricOperator, Window, sigma_min
from .pseudospectrum import (Grid2D, compute_sigma_field, epsilon_pseudospectrum,
                             extract_contours, find_borderline_regions)

__all__ = ["RunConfig", "main", "cmd_flutter", "cmd_pseudo", "cmd_trace",
           "cmd_envelope", "cmd_damping_plot"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FIRST_STEP = 2
EXIT_EMPTY = 3

PATH_CSV_HEADER = "s,U,chi_R,chi_I,zeta,residual"
FIELD_CSV_HEADER = "U,chi_R,sigma_min"
CONTOUR_CSV_HEADER = "eps,polyline_id,vertex_id,U,chi_R"


def _fmt(x: float) -> str:
    return repr(float(x))


def _zeta_of(chi_R: float, chi_I: float) -> float:
    nrm = math.hypot(chi_R, chi_I)
    return chi_I / nrm if nrm > 0.0 else math.nan


@dataclass
class RunConfig:
    """Parsed run configuration; see the README for the JSON schema."""

    model: Dict[str, Any]
    window: Optional[Window] = None
    grid: Dict[str, int] = field(default_factory=lambda: {"u_count": 101, "w_count": 101})
    eps_list: List[float] = field(default_factory=lambda: [0.04, 0.08])
    borderline: Dict[str, Any] = field(default_factory=dict)
    flutter: Dict[str, Any] = field(default_factory=dict)
    continuation: Dict[str, Any] = field(default_factory=dict)
    natural: Dict[str, Any] = field(default_factory=dict)
    envelope: Dict[str, Any] = field(default_factory=dict)
    output_dir: Path = Path("out")
    direction: int = 1

    @classmethod
    def load(cls, path: Path, overrides: Dict[str, Any]) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        return cls.from_dict(doc, overrides, base_dir=path.parent)

    @classmethod
    def from_dict(cls, doc: Dict[str, Any], overrides: Dict[str, Any],
                  base_dir: Path = Path(".")) -> "RunConfig":
        model = doc.get("model")
        if isinstance(model, str):
            with open(base_dir / model, encoding="utf-8") as fh:
                model = json.load(fh)
        if not isinstance(model, dict):
            raise ValueError("config must supply a model object or model file path")

        win_doc = dict(doc.get("window") or {})
        for key, dst in (("u_min", "u_min"), ("u_max", "u_max"),
                         ("chi_r_min", "chi_r_min"), ("chi_r_max", "chi_r_max")):
            if overrides.get(key) is not None:
                win_doc[dst] = overrides[key]
        window = Window(**win_doc) if win_doc else None

        grid = dict(doc.get("grid") or {})
        if overrides.get("grid") is not None:
            grid = {"u_count": overrides["grid"], "w_count": overrides["grid"]}
        grid.setdefault("u_count", 101)
        grid.setdefault("w_count", 101)

        eps_list = list(doc.get("eps_list") or [0.04, 0.08])
        if overrides.get("eps") is not None:
            eps_list = overrides["eps"]

        continuation = dict(doc.get("continuation") or {})
        direction = int(continuation.pop("direction", doc.get("direction", 1)))
        if overrides.get("ds") is not None:
            continuation["ds"] = overrides["ds"]
        if overrides.get("direction") is not None:
            direction = overrides["direction"]

        envelope = dict(doc.get("envelope") or {})
        if overrides.get("zeta_max") is not None:
            envelope["zeta_max"] = overrides["zeta_max"]

        out_dir = Path(overrides.get("output_dir") or doc.get("output", {}).get("dir", "out"))
        return cls(model=model, window=window, grid=grid, eps_list=eps_list,
                   borderline=dict(doc.get("borderline") or {}),
                   flutter=dict(doc.get("flutter") or {}),
                   continuation=continuation, natural=dict(doc.get("natural") or {}),
                   envelope=envelope, output_dir=out_dir, direction=direction)


def build_model(doc: Dict[str, Any]) -> ParametricOperator:
    """Build a ParametricOperator from a kind-tagged model document."""
    doc = dict(doc)
    kind = doc.pop("kind", None)
    win_doc = doc.pop("window", None)
    kwargs = {"window": Window(**win_doc)} if win_doc else {}
    if kind == "trajectory":
        preset = doc.pop("preset", None)
        if preset == "restabilization":
            spec = models.reference_restabilization_spec()
        elif preset == "two_crossing":
            spec = models.two_crossing_spec()
        elif preset is None:
            mixing = doc.pop("mixing", None)
            spec = models.TrajectorySpec(
                modes=tuple(models.ModeTrajectory(tuple(m["omega_coeffs"]), tuple(m["g_coeffs"]))
                            for m in doc.pop("modes")),
                mixing=np.asarray(mixing, dtype=float) if mixing is not None else None)
        else:
            raise ValueError(f"unknown trajectory preset {preset!r}")
        return models.build_trajectory_operator(spec, **kwargs)
    if kind == "typical_section":
        return models.build_typical_section(models.TypicalSectionSpec(**doc), **kwargs)
    if kind == "normal":
        eig = [complex(e[0], e[1]) if isinstance(e, (list, tuple)) else complex(e)
               for e in doc.pop("eigenvalues")]
        return models.build_normal_operator(eig, **kwargs)
    if kind == "galerkin_wing":
        return models.build_galerkin_wing(models.GalerkinWingSpec(**doc), **kwargs)
    raise ValueError(f"unknown model kind {kind!r}")


def _write_text(path: Path, lines: Sequence[str]):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in lines:
            fh.write(line + "\n")


def _write_json(path: Path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _point_record(s: float, p: EigenPoint) -> Dict[str, Any]:
    return {"s": s, "U": p.U, "chi_R": p.chi_R, "chi_I": p.chi_I,
            "zeta": _zeta_of(p.chi_R, p.chi_I), "residual": p.residual,
            "x_re": [float(v) for v in p.x.real], "x_im": [float(v) for v in p.x.imag]}


def write_path_csv(path: Path, mode_path: cont.ModePath):
    lines = [PATH_CSV_HEADER]
    for s, p in zip(mode_path.s, mode_path.points):
        zeta = _zeta_of(p.chi_R, p.chi_I)
        lines.append(",".join(_fmt(v) for v in (s, p.U, p.chi_R, p.chi_I, zeta, p.residual)))
    _write_text(path, lines)


def write_path_json(path: Path, mode_path: cont.ModePath, model_doc: Dict[str, Any]):
    origin = mode_path.origin
    if isinstance(origin, FlutterPoint):
        origin_doc = {"type": "flutter", "U": origin.point.U, "chi_R": origin.point.chi_R,
                      "iterations": origin.iterations, "static": origin.static}
    elif isinstance(origin, EigenPoint):
        origin_doc = {"type": "point", "U": origin.U, "chi_R": origin.chi_R,
                      "chi_I": origin.chi_I}
    else:
        origin_doc = {"type": str(origin)}
    _write_json(path, {
        "origin": origin_doc,
        "direction": mode_path.direction,
        "parameterization_note": mode_path.parameterization_note,
        "termination_reason": mode_path.termination_reason,
        "scale": list(mode_path.scale),
        "notes": list(mode_path.notes),
        "model": model_doc,
        "points": [_point_record(s, p) for s, p in zip(mode_path.s, mode_path.points)],
    })


def read_path_file(path: Path) -> cont.ModePath:
    """Rebuild a ModePath from a path JSON (full) or path CSV (values only)."""
    if path.suffix.lower() == ".json":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        points, s = [], []
        for rec in doc["points"]:
            x = np.asarray(rec["x_re"], dtype=float) + 1j * np.asarray(rec["x_im"], dtype=float)
            points.append(EigenPoint(rec["chi_R"], rec["chi_I"], rec["U"], x, rec["residual"]))
            s.append(rec["s"])
        mp = cont.ModePath(points=points, s=s, origin=doc["origin"].get("type", "natural"),
                           direction=doc.get("direction", 1),
                           scale=tuple(doc.get("scale", (1.0, 1.0))),
                           termination_reason=doc.get("termination_reason"))
        mp.model_doc = doc.get("model")  # carried for operator rebuild
        return mp

    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != PATH_CSV_HEADER:
            raise ValueError(f"unexpected path CSV header {header!r}")
        points, s = [], []
        for line in fh:
            if not line.strip():
                continue
            sv, u, wr, wi, _zeta, res = (float(v) for v in line.strip().split(","))
            points.append(EigenPoint(wr, wi, u, np.array([1.0 + 0j]), res))
            s.append(sv)
    mp = cont.ModePath(points=points, s=s, origin="natural")
    mp.model_doc = None
    return mp


def _flutter_settings(cfg: RunConfig) -> FlutterSearchSettings:
    return FlutterSearchSettings(**cfg.flutter) if cfg.flutter else FlutterSearchSettings()


def _continuation_settings(cfg: RunConfig) -> cont.ContinuationSettings:
    kwargs = dict(cfg.continuation)
    if "scale" in kwargs and kwargs["scale"] is not None:
        kwargs["scale"] = tuple(kwargs["scale"])
    return cont.ContinuationSettings(**kwargs)


def _flutter_point_record(fp: FlutterPoint) -> Dict[str, Any]:
    p = fp.point
    return {"U": p.U, "chi_R": p.chi_R, "chi_I": p.chi_I, "residual": p.residual,
            "iterations": fp.iterations, "static": fp.static,
            "x_re": [float(v) for v in p.x.real], "x_im": [float(v) for v in p.x.imag],
            "window_history": [asdict(w) for w in fp.window_history]}


def cmd_flutter(cfg: RunConfig) -> int:
    op = build_model(cfg.model)
    window = cfg.window or op.window
    points = find_flutter_points(op, window, _flutter_settings(cfg))
    _write_json(cfg.output_dir / "flutter_points.json",
                {"window": asdict(window), "points": [_flutter_point_record(f) for f in points]})
    print(f"{len(points)} flutter point(s) -> {cfg.output_dir / 'flutter_points.json'}")
    return EXIT_OK if points else EXIT_EMPTY


def cmd_pseudo(cfg: RunConfig) -> int:
    op = build_model(cfg.model)
    window = cfg.window or op.window
    grid = Grid2D.over_window(window, cfg.grid["u_count"], cfg.grid["w_count"])
    fld = compute_sigma_field(op, grid)

    us, ws = grid.u_values(), grid.w_values()
    lines = [FIELD_CSV_HEADER]
    for i, u in enumerate(us):
        for j, w in enumerate(ws):
            lines.append(",".join((_fmt(u), _fmt(w), _fmt(fld.values[i, j]))))
    _write_text(cfg.output_dir / "sigma_field.csv", lines)

    lines = [CONTOUR_CSV_HEADER]
    for eps in cfg.eps_list:
        contour = extract_contours(fld, eps)
        for pid, pl in enumerate(contour.polylines):
            for vid, (u, w) in enumerate(pl):
                lines.append(",".join((_fmt(eps), str(pid), str(vid), _fmt(u), _fmt(w))))
    _write_text(cfg.output_dir / "contours.csv", lines)

    threshold = float(cfg.borderline.get("threshold", min(cfg.eps_list)))
    try:
        flutter_points = find_flutter_points(op, window, _flutter_settings(cfg))
    except FlutterSpecError as exc:
        print(f"flutter search for near_flutter flags failed: {exc}", file=sys.stderr)
        flutter_points = []
    exclusion = None
    if "exclusion_u" in cfg.borderline and "exclusion_chi_r" in cfg.borderline:
        exclusion = (float(cfg.borderline["exclusion_u"]),
                     float(cfg.borderline["exclusion_chi_r"]))
    regions = find_borderline_regions(fld, threshold, flutter_points, exclusion)
    _write_json(cfg.output_dir / "borderline.json", {
        "threshold": threshold,
        "flutter_points": [[fp.point.U, fp.point.chi_R] for fp in flutter_points],
        "regions": [{"center_U": r.center[0], "center_chi_R": r.center[1],
                     "min_sigma": r.min_sigma,
                     "extent": {"u_min": r.extent[0], "u_max": r.extent[1],
                                "chi_r_min": r.extent[2], "chi_r_max": r.extent[3]},
                     "near_flutter": r.near_flutter} for r in regions],
    })
    print(f"sigma field {fld.values.shape}, {len(cfg.eps_list)} eps level(s), "
          f"{len(regions)} borderline region(s) -> {cfg.output_dir}")
    return EXIT_OK


def _resolve_trace_start(cfg: RunConfig, op: ParametricOperator, args) -> Optional[object]:
    if args.start_point is not None:
        u, wr, wi = (float(v) for v in args.start_point.split(","))
        _, x = sigma_min(op, complex(wr, wi), u)
        guess = EigenPoint.from_vector(op, wr, wi, u, x)
        settings = _continuation_settings(cfg)
        return cont.solve_at_airspeed(op, u, guess, tol=settings.corrector_tol)
    window = cfg.window or op.window
    points = find_flutter_points(op, window, _flutter_settings(cfg))
    if not points:
        return None
    idx = args.start_index or 0
    if idx >= len(points):
        raise ValueError(f"start index {idx} out of range ({len(points)} flutter points)")
    return points[idx]


def cmd_trace(cfg: RunConfig, args) -> int:
    op = build_model(cfg.model)
    start = _resolve_trace_start(cfg, op, args)
    if start is None:
        print("no flutter point to start from", file=sys.stderr)
        return EXIT_EMPTY
    settings = _continuation_settings(cfg)
    try:
        path = cont.trace_path(op, start, direction=cfg.direction, settings=settings)
    except ConvergenceError as exc:
        print(f"first continuation step failed: {exc}", file=sys.stderr)
        return EXIT_FIRST_STEP
    write_path_csv(cfg.output_dir / "path.csv", path)
    write_path_json(cfg.output_dir / "path.json", path, cfg.model)
    print(f"{len(path.points)} path point(s), terminated: {path.termination_reason} "
          f"-> {cfg.output_dir}")
    return EXIT_OK


def cmd_envelope(path_file: Path, zeta_max: float, out_dir: Path) -> int:
    mode_path = read_path_file(path_file)
    op = build_model(mode_path.model_doc) if getattr(mode_path, "model_doc", None) else None
    crossings = cont.flight_envelope(mode_path, zeta_max, op=op)
    _write_json(out_dir / "envelope.json", {
        "zeta_max": zeta_max,
        "refined": op is not None,
        "crossings": [{"U_star": c.u_star, "side": c.side,
                       "bracket": list(c.bracket),
                       "zeta_check": (_zeta_of(c.point.chi_R, c.point.chi_I)
                                      if c.point is not None else None)}
                      for c in crossings],
    })
    print(f"{len(crossings)} crossing(s) -> {out_dir / 'envelope.json'}")
    return EXIT_OK if crossings else EXIT_EMPTY


def cmd_damping_plot(cfg: RunConfig) -> int:
    op = build_model(cfg.model)
    nat = cfg.natural
    for key in ("u_start", "u_end", "du", "seed_chi_r"):
        if key not in nat:
            raise ValueError(f"damping-plot requires config natural.{key}")
    settings = _continuation_settings(cfg)
    u0 = float(nat["u_start"])
    chi = complex(float(nat["seed_chi_r"]), float(nat.get("seed_chi_i", 0.0)))
    _, x = sigma_min(op, chi, u0)
    guess = EigenPoint.from_vector(op, chi.real, chi.imag, u0, x)
    try:
        seed = cont.solve_at_airspeed(op, u0, guess, tol=settings.corrector_tol)
        path = cont.natural_continuation(op, u0, float(nat["u_end"]), float(nat["du"]),
                                         seed, tol=settings.corrector_tol)
    except ConvergenceError as exc:
        print(f"seed solve failed: {exc}", file=sys.stderr)
        return EXIT_FIRST_STEP
    write_path_csv(cfg.output_dir / "damping_plot.csv", path)
    write_path_json(cfg.output_dir / "damping_plot.json", path, cfg.model)
    print(f"{len(path.points)} point(s), terminated: {path.termination_reason} "
          f"-> {cfg.output_dir}")
    return EXIT_OK


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, required=True, help="JSON run configuration")
    p.add_argument("--u-min", type=float, dest="u_min")
    p.add_argument("--u-max", type=float, dest="u_max")
    p.add_argument("--chi-r-min", type=float, dest="chi_r_min")
    p.add_argument("--chi-r-max", type=float, dest="chi_r_max")
    p.add_argument("--grid", type=int, help="grid count for both axes")
    p.add_argument("--eps", type=str, help="comma-separated epsilon levels")
    p.add_argument("--ds", type=float, help="arclength step (scaled units)")
    p.add_argument("--direction", type=int, choices=(-1, 1))
    p.add_argument("--zeta-max", type=float, dest="zeta_max")
    p.add_argument("--output-dir", type=Path, dest="output_dir")


def _overrides(args) -> Dict[str, Any]:
    out = {k: getattr(args, k, None) for k in
           ("u_min", "u_max", "chi_r_min", "chi_r_max", "grid", "ds", "direction",
            "zeta_max", "output_dir")}
    eps = getattr(args, "eps", None)
    out["eps"] = [float(v) for v in eps.split(",")] if eps else None
    return out


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="flutterspec",
        description="Pseudospectral flutter analysis: fields, flutter points, "
                    "continuation paths and envelopes.")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("flutter", "pseudo", "trace", "damping-plot"):
        p = sub.add_parser(name)
        _add_config_flags(p)
        if name == "trace":
            p.add_argument("--start-index", type=int, default=0,
                           help="flutter point index (sorted by U)")
            p.add_argument("--start-point", type=str,
                           help="explicit start triple 'U,chi_R,chi_I'")

    p_env = sub.add_parser("envelope")
    p_env.add_argument("path_file", type=Path, help="path CSV or JSON from trace/damping-plot")
    p_env.add_argument("--zeta-max", type=float, dest="zeta_max", required=True)
    p_env.add_argument("--output-dir", type=Path, dest="output_dir", default=Path("out"))

    args = parser.parse_args(argv)
    try:
        if args.command == "envelope":
            return cmd_envelope(args.path_file, args.zeta_max, args.output_dir)
        cfg = RunConfig.load(args.config, _overrides(args))
        if args.command == "flutter":
            return cmd_flutter(cfg)
        if args.command == "pseudo":
            return cmd_pseudo(cfg)
        if args.command == "trace":
            return cmd_trace(cfg, args)
        if args.command == "damping-plot":
            return cmd_damping_plot(cfg)
        raise ValueError(f"unknown command {args.command}")
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError,
            FlutterSpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
