import json
import subprocess
import sys

import numpy as np
import pytest

from semantic_palette import io
from semantic_palette.cli import main
from semantic_palette.layout import HardLayout


def write_corpus(directory, n=12, seed=0, shape=(6, 8), classes=3):
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    for i in range(n):
        probs = rng.dirichlet(np.full(classes, 3.0))
        labels = rng.choice(classes, size=shape, p=probs)
        io.save_label_map(directory / f"layout_{i:03d}.pgm", HardLayout(labels, classes))
    return directory


@pytest.fixture
def corpus(tmp_path):
    return write_corpus(tmp_path / "corpus")


def test_fit_and_sample(tmp_path, corpus, capsys):
    model = tmp_path / "model.json"
    assert main(["fit-palettes", str(corpus), "--components", "1..3", "-o", str(model)]) == 0
    err = capsys.readouterr().err
    assert "components=1 aic=" in err and "components=3 aic=" in err
    doc = json.loads(model.read_text())
    assert doc["dimension"] == 3
    out = tmp_path / "palettes.txt"
    assert main(["sample-palettes", str(model), "--count", "4", "--seed", "2", "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 4
    for line in lines:
        p = np.array(json.loads(line))
        assert p.min() >= 0 and abs(p.sum() - 1) < 1e-9


def test_fit_writes_stdout(corpus, capsys):
    assert main(["fit-palettes", str(corpus), "--components", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["components"][0]["weight"] == 1.0


def test_synthesize_one_hot(tmp_path):
    out = tmp_path / "layout.pgm"
    trace = tmp_path / "trace.json"
    assert main(["synthesize", "--palette", "[1,0]", "--size", "4x5", "-o", str(out), "--trace", str(trace)]) == 0
    layout = io.load_label_map(out, num_classes=2)
    assert layout.shape == (4, 5) and np.all(layout.labels == 0)
    doc = json.loads(trace.read_text())
    assert doc["steps_run"] == 0 and doc["palette"] == [1.0, 0.0]


def test_synthesize_palette_file_and_binary(tmp_path):
    pal = tmp_path / "palette.json"
    pal.write_text("[0.25, 0.25, 0.5]\n")
    out = tmp_path / "layout.pgm"
    assert main(["synthesize", "--palette", str(pal), "--size", "8x8", "--multiscale", "--binary", "-o", str(out)]) == 0
    assert out.read_bytes().startswith(b"P5")
    assert io.load_label_map(out, num_classes=3).shape == (8, 8)


def test_edit(tmp_path):
    src = tmp_path / "in.pgm"
    labels = np.zeros((8, 8), int)
    labels[4:] = 1
    io.save_label_map(src, HardLayout(labels, 3))
    out = tmp_path / "edited.pgm"
    # C crop proportions, background appended automatically
    assert main(["edit", str(src), "--region", "2,2,4,4", "--palette", "[0,0,1]", "-o", str(out)]) == 0
    edited = io.load_label_map(out, num_classes=3).labels
    assert np.all(edited[2:6, 2:6] == 2)
    keep = np.ones((8, 8), bool)
    keep[2:6, 2:6] = False
    assert np.array_equal(edited[keep], labels[keep])
    assert main(["edit", str(src), "--region", "2,2,4,4", "--palette", "[0,0,0.25,0.75]", "-o", str(out)]) == 0
    assert main(["edit", str(src), "--region", "6,6,4,4", "--palette", "[0,0,1]", "-o", str(out)]) == 1


def test_metrics_identical_dirs(tmp_path, corpus):
    out = tmp_path / "metrics.json"
    assert main(["metrics", "--target", "[0.3,0.3,0.4]", "--layouts", str(corpus), "--reference", str(corpus),
                 "-o", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["fsd"] == pytest.approx(0.0, abs=1e-12)
    assert doc["n_layouts"] == 12 and doc["kl"]["max"] >= doc["kl"]["mean"] >= 0


def test_gradcheck_cmd(capsys):
    assert main(["gradcheck", "--seed", "1"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["passed"] and report["seed"] == 1
    assert main(["gradcheck", "--height", "9", "--width", "9"]) == 1


def test_render(tmp_path):
    src = tmp_path / "two.pgm"
    io.save_label_map(src, HardLayout([[0, 1]], 2))
    assert main(["render", str(src)]) == 0
    ppm = (tmp_path / "two.ppm").read_bytes()
    assert ppm == io.render(HardLayout([[0, 1]], 2))
    assert ppm.startswith(b"P3")


def test_exit_codes(tmp_path, capsys):
    assert main(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err
    assert main([]) == 1
    assert main(["render", str(tmp_path / "missing.pgm")]) == 2
    assert main(["fit-palettes", str(tmp_path)]) == 2
    bad = tmp_path / "bad.pgm"
    bad.write_text("P7\n1 1\n1\n0\n")
    assert main(["render", str(bad)]) == 1
    assert main(["synthesize", "--palette", "[0.5,-0.1,0.6]", "--size", "2x2", "-o", str(tmp_path / "x.pgm")]) == 1
    assert main(["synthesize", "--palette", "[0.5,0.5]", "--size", "axb"]) == 1
    mixed = write_corpus(tmp_path / "mixed", n=2, classes=2)
    io.save_label_map(mixed / "z.pgm", HardLayout([[0, 2]], 3))
    assert main(["fit-palettes", str(mixed)]) == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "semantic_palette", "gradcheck", "--classes", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["classes"] == 2
