import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semantic_palette.errors import AllZeroColumnError, NonFiniteError, ShapeMismatchError, ZeroRowError
from semantic_palette.layout import argmax_labeling
from semantic_palette.saa import (
    TransportPlan,
    palette_weighting,
    pixel_normalize,
    residual_fusion,
    saa,
    sinkhorn,
    sinkhorn_step,
    spatial_softmax,
)

from conftest import feature_and_palette


def test_spatial_softmax_example():
    rho = spatial_softmax(np.array([[[0.0, np.log(3.0)]], [[0.0, 0.0]]]))
    np.testing.assert_allclose(rho[0], [[0.25, 0.75]], atol=1e-15)
    np.testing.assert_allclose(rho[1], [[0.5, 0.5]], atol=1e-15)


def test_spatial_softmax_uniform_and_large_values():
    np.testing.assert_allclose(spatial_softmax(np.zeros((3, 4, 5))), 1 / 20)
    rho = spatial_softmax(np.array([[[1000.0, 999.0]], [[-1000.0, -1000.0]]]))
    assert np.all(np.isfinite(rho))
    np.testing.assert_allclose(rho.sum(axis=(1, 2)), 1.0)


def test_spatial_softmax_rejects_non_finite():
    with pytest.raises(NonFiniteError):
        spatial_softmax(np.array([[[np.inf]], [[0.0]]]))


def test_palette_weighting_examples():
    omega = palette_weighting(np.full((2, 1, 2), 0.5), np.array([0.3, 0.7]))
    np.testing.assert_allclose(omega, [[[0.15, 0.15]], [[0.35, 0.35]]])
    rho = spatial_softmax(np.random.default_rng(0).normal(size=(3, 2, 2)))
    omega = palette_weighting(rho, np.array([0.0, 1.0, 0.0]))
    assert np.all(omega[[0, 2]] == 0)
    np.testing.assert_allclose(palette_weighting(rho, np.full(3, 1 / 3)), rho / 3)
    with pytest.raises(ShapeMismatchError):
        palette_weighting(rho, np.array([0.5, 0.5]))


def test_pixel_normalize_examples():
    m = pixel_normalize(np.array([[[0.15]], [[0.35]]]))
    np.testing.assert_allclose(m[:, 0, 0], [0.3, 0.7])
    t = np.array([0.2, 0.5, 0.3])
    m = pixel_normalize(palette_weighting(np.full((3, 2, 3), 1 / 6), t))
    np.testing.assert_allclose(m, np.broadcast_to(t[:, None, None], m.shape))
    omega = np.zeros((3, 2, 2))
    omega[1] = 0.25
    np.testing.assert_array_equal(pixel_normalize(omega)[1], 1.0)


def test_pixel_normalize_strict_mode():
    omega = np.zeros((2, 1, 2))
    omega[0, 0, 0] = 1.0
    m = pixel_normalize(omega)
    assert np.all(m[:, 0, 1] == 0)
    with pytest.raises(AllZeroColumnError):
        pixel_normalize(omega, strict=True)


def test_saa_uniform_case():
    rho, omega, m = saa(np.zeros((2, 3, 4)), [0.2, 0.8])
    np.testing.assert_allclose(m[0], 0.2)
    np.testing.assert_allclose(m[1], 0.8)
    assert np.all(argmax_labeling(m).labels == 1)


def test_saa_zero_target_class_is_absent():
    f = np.random.default_rng(1).normal(size=(2, 5, 5)) * 3
    _, _, m = saa(f, [0.0, 1.0])
    assert np.all(argmax_labeling(m).labels == 1)


def test_saa_budget_exact_random():
    rng = np.random.default_rng(7)
    t = rng.dirichlet(np.ones(3))
    _, omega, _ = saa(rng.normal(size=(3, 4, 4)), t)
    np.testing.assert_allclose(omega.sum(axis=(1, 2)), t, rtol=0, atol=1e-12)


@given(feature_and_palette(max_classes=8, max_side=10))
def test_saa_invariants(pair):
    f, t = pair
    rho, omega, m = saa(f, t)
    np.testing.assert_allclose(rho.sum(axis=(1, 2)), 1.0, atol=1e-9)
    np.testing.assert_allclose(omega.sum(axis=(1, 2)), t, atol=1e-9)
    assert abs(omega.sum() - 1.0) < 1e-9
    np.testing.assert_allclose(m.sum(axis=0), 1.0, atol=1e-9)
    # argmax commutes with the per-pixel normalization
    np.testing.assert_array_equal(np.argmax(m, axis=0), np.argmax(omega, axis=0))


@given(feature_and_palette(), st.integers(0, 2**32 - 1))
def test_saa_shift_invariance(pair, seed):
    f, t = pair
    shift = np.random.default_rng(seed).uniform(-50, 50, size=(f.shape[0], 1, 1))
    np.testing.assert_allclose(saa(f + shift, t).mask, saa(f, t).mask, atol=1e-9)


@given(feature_and_palette(max_classes=6), st.data())
def test_zero_budget_exclusion(pair, data):
    f, t = pair
    zero = data.draw(st.integers(0, t.size - 1))
    t = t.copy()
    t[zero] = 0.0
    if t.sum() == 0:
        t[(zero + 1) % t.size] = 1.0
    t = t / t.sum()
    labels = argmax_labeling(saa(f, t).mask).labels
    assert not np.any(labels == zero)


@given(feature_and_palette(max_classes=6, max_side=8))
def test_one_sinkhorn_step_is_saa(pair):
    f, t = pair
    plan = sinkhorn(f, t, k=1)
    np.testing.assert_allclose(plan.as_mask(*f.shape[1:]), saa(f, t).mask, rtol=0, atol=1e-9)


def test_sinkhorn_uniform_converges_in_one_step():
    t = np.array([0.1, 0.6, 0.3])
    plan = sinkhorn(np.zeros((3, 2, 3)), t, k=1)
    np.testing.assert_allclose(plan.data, np.broadcast_to(t[:, None] / 6, (3, 6)), atol=1e-15)
    assert plan.is_admissible(1e-15)


def test_sinkhorn_marginals_after_row_and_column_steps():
    rng = np.random.default_rng(5)
    t = rng.dirichlet(np.ones(4))
    plan = sinkhorn(rng.normal(size=(4, 4, 4)), t, k=3)
    # column step is last, so the pixel marginal is exact
    np.testing.assert_allclose(plan.data.sum(axis=0), 1 / 16, atol=1e-15)


def test_sinkhorn_converges_on_positive_plans():
    rng = np.random.default_rng(11)
    for _ in range(10):
        t = rng.dirichlet(np.ones(4))
        plan = sinkhorn(rng.normal(size=(4, 4, 4)), t, k=50)
        assert plan.row_residual() < 1e-6
        assert plan.column_residual() < 1e-6


def test_sinkhorn_fixed_point():
    rng = np.random.default_rng(2)
    t = rng.dirichlet(np.ones(3))
    P = sinkhorn(rng.normal(size=(3, 3, 3)), t, k=500).data
    assert TransportPlan(P, t).is_admissible(1e-13)
    np.testing.assert_allclose(sinkhorn_step(P, t), P, rtol=0, atol=1e-12)
    # an exact product plan
    Q = np.outer(t, np.full(9, 1 / 9))
    np.testing.assert_allclose(sinkhorn_step(Q, t), Q, rtol=0, atol=1e-15)


def test_sinkhorn_strict_mode():
    P = np.array([[0.0, 0.0], [1.0, 1.0]])
    with pytest.raises(ZeroRowError):
        sinkhorn_step(P, np.array([0.5, 0.5]), strict=True)
    with pytest.raises(ValueError):
        sinkhorn(np.zeros((2, 1, 1)), [0.5, 0.5], k=0)


def test_residual_fusion():
    rng = np.random.default_rng(4)
    feats = rng.normal(size=(5, 3, 4))
    mask = saa(rng.normal(size=(3, 3, 4)), [0.2, 0.3, 0.5]).mask
    np.testing.assert_array_equal(residual_fusion(feats, mask, np.zeros((5, 3))), feats)
    w = rng.normal(size=(5, 3))
    hard = np.zeros((3, 3, 4))
    hard[1] = 1
    out = residual_fusion(feats, hard, w)
    np.testing.assert_allclose(out, feats + w[:, 1][:, None, None])
    square = rng.normal(size=(3, 3, 4))
    np.testing.assert_allclose(residual_fusion(square, mask, np.eye(3)), square + mask)
    with pytest.raises(ShapeMismatchError):
        residual_fusion(feats, mask, np.zeros((3, 5)))
