"""gimg: command-line front end.

Exit status: 0 success, 1 validation or processing failure, 2 usage error.
Defaults can be overridden through GIMG_* environment variables (see ``gimg --help``).
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from collections import Counter
from pathlib import Path
from typing import Sequence

from .decoder import FIDELITY_ANCHOR_WEIGHT, DecodeError, decode
from .encoder import EncodeError, GridConfig, classify_and_split, encode
from .generator import GenerationError, Template, gen_corpus
from .grid import HEADER_MAGIC, EdgeType, TensorError, from_tensor, read_tensor, to_tensor, write_tensor
from .lsq import SolverError
from .metrics import MetricError, format_report, pattern_iou, stitch_graph_isomorphic
from .pattern import PatternError, parse_pattern, serialize_pattern
from .render import render_pattern, render_tensor
from .validate import format_report as violation_report
from .validate import repair, validate, validate_tensor

ENV = {
    "grid_size": ("GIMG_GRID_SIZE", int, 16),
    "origin": ("GIMG_ORIGIN", lambda s: tuple(float(v) for v in s.split(",")), (-64.0, -6.0)),
    "extent": ("GIMG_EXTENT", float, 128.0),
    "margin_cells": ("GIMG_MARGIN_CELLS", int, 1),
    "anchor_weight": ("GIMG_ANCHOR_WEIGHT", float, 1.0),
    "raster_res": ("GIMG_RASTER_RES", int, 512),
    "smooth": ("GIMG_SMOOTH", lambda s: s.strip().lower() in ("1", "true", "yes", "on"), False),
}


class UsageError(Exception):
    pass


class Failure(Exception):
    pass


def _defaults() -> dict:
    out = {}
    for key, (var, conv, default) in ENV.items():
        raw = os.environ.get(var)
        if raw is None:
            out[key] = default
            continue
        try:
            out[key] = conv(raw)
        except ValueError as exc:
            raise UsageError(f"invalid value for {var}: {raw!r}") from exc
        if key == "origin" and len(out[key]) != 2:
            raise UsageError(f"{var} must be 'x,y'")
    return out


def _origin(s: str) -> tuple[float, float]:
    try:
        x, y = (float(v) for v in s.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError("expected 'x,y'") from exc
    return x, y


def build_parser(d: dict) -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    env_help = "environment overrides: " + ", ".join(v[0] for v in ENV.values())
    parser = argparse.ArgumentParser(prog="gimg", description="Sewing pattern <-> GarmentImage tool.",
                                     epilog=env_help, formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    canvas = argparse.ArgumentParser(add_help=False)
    canvas.add_argument("--grid-size", type=int, default=d["grid_size"], help="cells per side (G)")
    canvas.add_argument("--origin", type=_origin, default=d["origin"], help="canvas lower-left corner 'x,y' in cm")
    canvas.add_argument("--extent", type=float, default=d["extent"], help="canvas side length in cm")
    canvas.add_argument("--margin-cells", type=int, default=d["margin_cells"], help="empty rows/columns kept at top/right")

    dec = argparse.ArgumentParser(add_help=False)
    dec.add_argument("--anchor-weight", type=float, default=d["anchor_weight"], help="anchor weight w of the decoding solve")
    dec.add_argument("--fidelity", action="store_true",
                     help=f"use the weak anchor weight {FIDELITY_ANCHOR_WEIGHT:g} instead of --anchor-weight")
    dec.add_argument("--smooth", action=argparse.BooleanOptionalAction, default=d["smooth"], help="boundary smoothing")

    res = argparse.ArgumentParser(add_help=False)
    res.add_argument("--raster-res", type=int, default=d["raster_res"], help="IoU raster resolution")

    p = sub.add_parser("encode", parents=[canvas], formatter_class=fmt, help="pattern -> tensor")
    p.add_argument("pattern")
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser("decode", parents=[canvas, dec], formatter_class=fmt, help="tensor -> pattern")
    p.add_argument("tensor")
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser("roundtrip", parents=[canvas, dec, res], formatter_class=fmt,
                       help="encode+decode a pattern, report IoU and stitch-graph match")
    p.add_argument("pattern")

    p = sub.add_parser("validate", formatter_class=fmt, help="check a tensor")
    p.add_argument("tensor")

    p = sub.add_parser("repair", formatter_class=fmt, help="apply repair rules to a tensor")
    p.add_argument("tensor")
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser("iou", parents=[res], formatter_class=fmt, help="compare two patterns")
    p.add_argument("pred")
    p.add_argument("gt")
    p.add_argument("-o", "--out", help="also write the report to this file")

    p = sub.add_parser("gen", formatter_class=fmt, help="generate a pattern corpus")
    p.add_argument("--template", required=True, type=lambda s: [Template(t.strip().upper()) for t in s.split(",")],
                   help="template name, or comma-separated names: " + ", ".join(t.value for t in Template))
    p.add_argument("--count", type=int, default=10, help="patterns per template")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True, help="output directory")

    p = sub.add_parser("render", parents=[canvas], formatter_class=fmt, help="pattern or tensor -> SVG")
    p.add_argument("input")
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser("info", formatter_class=fmt, help="summarize a tensor")
    p.add_argument("tensor")
    return parser


def _cfg(a) -> GridConfig:
    try:
        return GridConfig(a.grid_size, tuple(a.origin), a.extent, a.margin_cells)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _weight(a) -> float:
    return FIDELITY_ANCHOR_WEIGHT if a.fidelity else a.anchor_weight


def _read_pattern(path: str):
    return parse_pattern(Path(path).read_text())


def _load_gi(path: str, cfg: GridConfig | None = None):
    cfg = cfg or GridConfig()
    return from_tensor(read_tensor(path), cfg.origin, cfg.cell_size)


def _decode(gi, a):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        out = decode(gi, _weight(a), a.smooth)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return out


def cmd_encode(a) -> int:
    cfg = _cfg(a)
    try:
        gi = encode(_read_pattern(a.pattern), cfg)
    except EncodeError as exc:
        sys.stderr.write(violation_report(exc.violations))
        raise Failure(f"encode failed: {exc}") from exc
    write_tensor(to_tensor(gi), a.out)
    return 0


def cmd_decode(a) -> int:
    gi = _load_gi(a.tensor, _cfg(a))
    Path(a.out).write_text(serialize_pattern(_decode(gi, a)))
    return 0


def cmd_roundtrip(a) -> int:
    p = _read_pattern(a.pattern)
    cfg = _cfg(a)
    d = _decode(encode(p, cfg), a)
    gt = classify_and_split(p)
    matches, mean = pattern_iou(d, gt, a.raster_res)
    for m in matches:
        print(f"{m.pred or '-'} {m.gt or '-'} iou={m.iou:.4f}")
    print(f"mean iou={mean:.4f}")
    iso = stitch_graph_isomorphic(d, gt)
    print(f"stitch_graph: {'isomorphic' if iso else 'not isomorphic'}")
    return 0 if iso else 1


def cmd_validate(a) -> int:
    t = read_tensor(a.tensor)
    found = validate_tensor(t)
    if not found:
        found = validate(_load_gi(a.tensor))
    sys.stdout.write(violation_report(found))
    return 1 if found else 0


def cmd_repair(a) -> int:
    t = read_tensor(a.tensor)
    malformed = validate_tensor(t)
    if malformed:
        sys.stdout.write(violation_report(malformed))
        raise Failure("edge type channels are not one-hot; repair needs a well-formed tensor")
    gi = from_tensor(t)
    fixed, fixes = repair(gi)
    for f in fixes:
        print(f"fix rule={f.rule} layer={'fb'[f.layer]} edge=({f.edge[0]},{f.edge[1]},{f.edge[2]}) -> {f.new_type.name}")
    residual = validate(fixed)
    sys.stdout.write(violation_report(residual))
    write_tensor(to_tensor(fixed), a.out)
    return 1 if residual else 0


def cmd_iou(a) -> int:
    matches, mean = pattern_iou(_read_pattern(a.pred), _read_pattern(a.gt), a.raster_res)
    report = format_report(matches, mean)
    sys.stdout.write(report)
    if a.out:
        Path(a.out).write_text(report)
    return 0


def cmd_gen(a) -> int:
    if a.count < 1:
        raise UsageError("--count must be at least 1")
    entries = gen_corpus([(t, a.count) for t in a.template], a.seed, a.out)
    print(f"wrote {len(entries)} patterns to {a.out}")
    return 0


def cmd_render(a) -> int:
    head = Path(a.input).read_bytes()[:len(HEADER_MAGIC)]
    if head == HEADER_MAGIC.encode():
        cfg = _cfg(a)
        svg = render_tensor(_load_gi(a.input, cfg))
    else:
        svg = render_pattern(_read_pattern(a.input))
    Path(a.out).write_text(svg)
    return 0


def cmd_info(a) -> int:
    t = read_tensor(a.tensor)
    print(f"shape {'x'.join(str(n) for n in t.shape)}")
    malformed = validate_tensor(t)
    gi = from_tensor(t)
    for layer, name in ((0, "front"), (1, "back")):
        print(f"inside {name} {int(gi.inside[layer].sum())}")
    print(f"inside total {int(gi.inside.sum())}")
    hist = Counter(int(v) for v in gi.types.ravel())
    for et in EdgeType:
        print(f"edges {et.name} {hist.get(int(et), 0)}")
    if malformed:
        print(f"malformed edge groups {len(malformed)}")
    return 0


COMMANDS = {
    "encode": cmd_encode, "decode": cmd_decode, "roundtrip": cmd_roundtrip, "validate": cmd_validate,
    "repair": cmd_repair, "iou": cmd_iou, "gen": cmd_gen, "render": cmd_render, "info": cmd_info,
}


def run(argv: Sequence[str] | None = None) -> int:
    try:
        parser = build_parser(_defaults())
    except UsageError as exc:
        print(f"gimg: error: {exc}", file=sys.stderr)
        return 2
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[a.command](a)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"gimg: error: {exc}", file=sys.stderr)
        return 2
    except (Failure, PatternError, TensorError, EncodeError, DecodeError, SolverError,
            MetricError, GenerationError, OSError) as exc:
        print(f"gimg: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
