import numpy as np
import pytest
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:2d}. {name}: {detail}")


def central_differences(fn, x, h=1e-5):
    """Plain central-difference gradient of a scalar function."""
    out = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        xp = x.copy()
        xp[i] += h
        xm = x.copy()
        xm[i] -= h
        out[i] = (fn(xp) - fn(xm)) / (2 * h)
    return out


def random_palette(rng, c, min_entry=0.0):
    while True:
        t = rng.dirichlet(np.ones(c))
        if t.min() >= min_entry:
            return t


@st.composite
def feature_and_palette(draw, max_classes=5, max_side=8, scale=3.0):
    c = draw(st.integers(2, max_classes))
    h = draw(st.integers(1, max_side))
    w = draw(st.integers(1, max_side))
    f = draw(arrays(np.float64, (c, h, w), elements=st.floats(-scale, scale)))
    raw = draw(arrays(np.float64, c, elements=st.floats(0.0, 1.0)))
    if raw.sum() <= 1e-3:
        raw = raw + 1.0
    return f, raw / raw.sum()


@st.composite
def soft_masks(draw, max_classes=5, max_side=6):
    c = draw(st.integers(2, max_classes))
    h = draw(st.integers(1, max_side))
    w = draw(st.integers(1, max_side))
    raw = draw(arrays(np.float64, (c, h, w), elements=st.floats(0.0, 1.0)))
    raw = raw + 1e-3
    return raw / raw.sum(axis=0, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
