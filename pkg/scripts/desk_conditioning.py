"""Desk-scale conditioning experiment.

Synthesizes one layout per random palette and reports how closely the
realized class proportions follow the target (KL(target || realized)).

    python3 scripts/desk_conditioning.py --classes 5 --size 16x32 --runs 20
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from semantic_palette.synth import SynthesisConfig, synthesize


def random_palettes(count: int, classes: int, min_entry: float, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        t = rng.dirichlet(np.ones(classes))
        if t.min() >= min_entry:
            out.append(t)
    return out


def run(args) -> dict:
    height, width = (int(v) for v in args.size.lower().split("x"))
    rows = []
    for seed, t in enumerate(random_palettes(args.runs, args.classes, args.min_entry, args.palette_seed)):
        cfg = SynthesisConfig(height, width, steps=args.steps, seed=seed, multiscale=args.multiscale)
        start = time.perf_counter()
        _, _, trace = synthesize(t, cfg)
        last = trace.records[-1]
        rows.append({"seed": seed, "kl": last.kl, "steps": last.step, "seconds": time.perf_counter() - start})
        print(f"seed {seed:3d}  kl {last.kl:.4f}  steps {last.step:5d}  {rows[-1]['seconds']:.2f}s")
    kls = np.array([r["kl"] for r in rows])
    summary = {
        "runs": len(rows),
        "within_threshold": int((kls <= args.threshold).sum()),
        "threshold": args.threshold,
        "kl_median": float(np.median(kls)),
        "kl_max": float(kls.max()),
        "rows": rows,
    }
    print(f"{summary['within_threshold']}/{len(rows)} runs with KL <= {args.threshold} "
          f"(median {summary['kl_median']:.4f}, max {summary['kl_max']:.4f})")
    return summary


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--size", default="16x32")
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--min-entry", type=float, default=0.02)
    p.add_argument("--palette-seed", type=int, default=2024)
    p.add_argument("--threshold", type=float, default=0.05)
    p.add_argument("--multiscale", action="store_true")
    p.add_argument("--json", help="write the summary here")
    args = p.parse_args()
    summary = run(args)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(summary, fh, indent=2)


if __name__ == "__main__":
    main()
