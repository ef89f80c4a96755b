"""End-to-end palette pipeline on a synthetic corpus.

Builds a toy corpus of label maps whose class proportions come from two
regimes, fits a palette GMM (AIC picks the component count), samples new
palettes, synthesizes a layout for each and compares the generated
population to the corpus with KL and FSD.

    python3 scripts/palette_pipeline.py --corpus 60 --samples 20
"""

from __future__ import annotations

import argparse

import numpy as np

from semantic_palette.layout import HardLayout, hard_histogram
from semantic_palette.metrics import metrics_report
from semantic_palette.palette_model import sample_palettes, select_components
from semantic_palette.synth import SynthesisConfig, synthesize


def toy_corpus(n: int, shape: tuple[int, int], seed: int) -> list[HardLayout]:
    """Layouts drawn from two proportion regimes (e.g. 'sky-heavy' vs 'ground-heavy')."""
    rng = np.random.default_rng(seed)
    regimes = [np.array([6.0, 2.0, 1.0, 1.0]) * 8, np.array([1.0, 2.0, 6.0, 1.0]) * 8]
    out = []
    for i in range(n):
        p = rng.dirichlet(regimes[i % 2])
        out.append(HardLayout(rng.choice(p.size, size=shape, p=p), p.size))
    return out


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--corpus", type=int, default=60)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--size", default="16x16")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    height, width = (int(v) for v in args.size.lower().split("x"))

    corpus = toy_corpus(args.corpus, (height, width), args.seed)
    hists = np.stack([hard_histogram(lay) for lay in corpus])
    sel = select_components(hists, range(1, 5), seed=args.seed)
    for m, value in sel.aic_table.items():
        print(f"M={m}  AIC={value:10.2f}{'  <- chosen' if m == sel.n_components else ''}")

    generated, kls = [], []
    for i, t in enumerate(sample_palettes(sel.model, args.samples, args.seed)):
        layout, _, trace = synthesize(t, SynthesisConfig(height, width, seed=i))
        generated.append(layout)
        kls.append(trace.records[-1].kl)
    rep = metrics_report(hists.mean(axis=0), generated, reference=corpus)
    print(f"per-layout KL to its own palette: median {np.median(kls):.4f}, max {max(kls):.4f}")
    print(f"FSD(generated, corpus) = {rep['fsd']:.5f}")
    print("mean realized proportions:", np.round(rep["per_class_realized"], 3).tolist())
    print("mean corpus proportions:  ", np.round(hists.mean(axis=0), 3).tolist())


if __name__ == "__main__":
    main()
