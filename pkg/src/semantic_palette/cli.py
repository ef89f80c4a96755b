"""Command-line interface.

Exit codes: 0 success, 1 invalid input or usage, 2 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import PaletteToolkitError
from .layout import HardLayout, hard_histogram
from .metrics import metrics_report
from .palette_model import DEFAULT_CANDIDATES, GmmModel, sample_palettes, select_components
from .synth import SynthesisConfig, gradcheck, run_edit, synthesize
from .transforms import EditRegion


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _parse_size(text: str) -> tuple[int, int]:
    try:
        h, w = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise PaletteToolkitError(f"size must look like HxW, got {text!r}") from None
    return h, w


def _parse_candidates(text: str) -> list[int]:
    if ".." in text:
        lo, hi = (int(v) for v in text.split(".."))
        return list(range(lo, hi + 1))
    return [int(v) for v in text.split(",")]


def _load_palette(arg: str) -> np.ndarray:
    """A palette given inline (JSON / CSV) or as a path to a file holding one."""
    text = arg
    if not arg.lstrip().startswith("[") and Path(arg).is_file():
        text = Path(arg).read_text()
    return io.parse_palettes(text)[0]


def _layouts_in(directory) -> list[HardLayout]:
    paths = sorted(Path(directory).glob("*.pgm"))
    if not paths:
        raise FileNotFoundError(f"no .pgm files in {directory}")
    return [io.load_label_map(p) for p in paths]


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_fit_palettes(args) -> int:
    layouts = _layouts_in(args.directory)
    classes = {lay.num_classes for lay in layouts}
    if len(classes) > 1:
        raise PaletteToolkitError(f"layouts mix class counts {sorted(classes)}")
    samples = np.stack([hard_histogram(lay) for lay in layouts])
    sel = select_components(samples, _parse_candidates(args.components), seed=args.seed)
    for m, value in sel.aic_table.items():
        print(f"components={m} aic={value:.6f}", file=sys.stderr)
    _emit(sel.model.to_json() + "\n", args.output)
    return 0


def cmd_sample_palettes(args) -> int:
    model = GmmModel.from_json(Path(args.model).read_text())
    palettes = sample_palettes(model, args.count, args.seed)
    _emit("".join(io.format_palette(p) + "\n" for p in palettes), args.output)
    return 0


def _config(args, height, width) -> SynthesisConfig:
    return SynthesisConfig(
        height,
        width,
        steps=args.steps,
        step_size=args.step_size,
        momentum=args.momentum,
        seed=args.seed,
        init_std=args.init_std,
        kl_stop=args.kl_stop,
        multiscale=getattr(args, "multiscale", False),
    )


def cmd_synthesize(args) -> int:
    t = _load_palette(args.palette)
    cfg = _config(args, *_parse_size(args.size))
    layout, _, trace = synthesize(t, cfg)
    io.save_label_map(args.output, layout, binary=args.binary)
    if args.trace:
        doc = trace.to_dict()
        doc["palette"] = [float(x) for x in t]
        doc["realized"] = [float(x) for x in hard_histogram(layout)]
        Path(args.trace).write_text(json.dumps(doc, indent=2) + "\n")
    return 0


def cmd_edit(args) -> int:
    layout = io.load_label_map(args.layout)
    region = EditRegion.parse(args.region)
    region.check(layout.shape)
    t = _load_palette(args.palette)
    if t.size == layout.num_classes:
        # crop proportions only: scale by the crop's share and append the background
        share = region.area / layout.labels.size
        t = np.append(share * t, 1.0 - share)
    cfg = _config(args, *layout.shape)
    outcome = run_edit(layout, region, t, cfg)
    io.save_label_map(args.output, outcome.layout, binary=args.binary)
    return 0


def cmd_metrics(args) -> int:
    t = _load_palette(args.target)
    layouts = _layouts_in(args.layouts)
    reference = _layouts_in(args.reference) if args.reference else None
    report = metrics_report(t, layouts, reference)
    _emit(json.dumps(report, indent=2) + "\n", args.output)
    return 0


def cmd_gradcheck(args) -> int:
    report = gradcheck(args.seed, args.classes, args.height, args.width)
    _emit(json.dumps(report, indent=2) + "\n", args.output)
    return 0 if report["passed"] else 1


def cmd_render(args) -> int:
    layout = io.load_label_map(args.layout)
    output = args.output or str(Path(args.layout).with_suffix(".ppm"))
    Path(output).write_bytes(io.render(layout))
    return 0


def _add_optimizer_flags(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--step-size", type=float, default=0.5)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--init-std", type=float, default=1.0)
    p.add_argument("--kl-stop", type=float, default=0.01)
    p.add_argument("--binary", action="store_true", help="write P5 instead of P2")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="semantic-palette", description="Palette-conditioned semantic layout toolkit.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("fit-palettes", help="fit a GMM to the class proportions of a layout corpus")
    p.add_argument("directory")
    p.add_argument("--components", default=f"{DEFAULT_CANDIDATES[0]}..{DEFAULT_CANDIDATES[-1]}",
                   help="candidate component counts, e.g. 1..10 or 1,2,4")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_fit_palettes)

    p = sub.add_parser("sample-palettes", help="draw palettes from a fitted model")
    p.add_argument("model")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_sample_palettes)

    p = sub.add_parser("synthesize", help="optimize a layout for a palette")
    p.add_argument("--palette", required=True, help="JSON array, CSV line, or a file holding one")
    p.add_argument("--size", required=True, help="HxW")
    p.add_argument("--multiscale", action="store_true")
    p.add_argument("--trace")
    p.add_argument("--output", "-o", default="layout.pgm")
    _add_optimizer_flags(p)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("edit", help="refill a rectangle of an existing layout")
    p.add_argument("layout")
    p.add_argument("--region", required=True, help="T,L,H,W")
    p.add_argument("--palette", required=True,
                   help="C+1 entries (last = background) or C crop proportions")
    p.add_argument("--output", "-o", default="edited.pgm")
    _add_optimizer_flags(p)
    p.set_defaults(func=cmd_edit)

    p = sub.add_parser("metrics", help="KL to a target palette and FSD to a reference set")
    p.add_argument("--target", required=True)
    p.add_argument("--layouts", required=True)
    p.add_argument("--reference")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("gradcheck", help="check analytic gradients against finite differences")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--height", type=int, default=4)
    p.add_argument("--width", type=int, default=4)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("render", help="colour a layout as PPM")
    p.add_argument("layout")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage() + "semantic-palette: error: a subcommand is required")
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"semantic-palette: {exc}", file=sys.stderr)
        return 2
    except (PaletteToolkitError, ValueError, KeyError) as exc:
        print(f"semantic-palette: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
