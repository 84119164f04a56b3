import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otseg.errors import DegenerateEmbedding, FormatError
from otseg.latent import (CostMatrices, LatentModel, apply_prior, cost_matrices, embed, init_model,
                          load_checkpoint, save_checkpoint, temporal_prior)


def test_init_deterministic_and_unit():
    a = init_model(8, 6, 5, 4, seed=7)
    b = init_model(8, 6, 5, 4, seed=7)
    for name in ("w_img", "w_text", "prototypes"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    assert np.allclose(np.linalg.norm(a.prototypes, axis=1), 1.0, atol=1e-6)
    assert np.all(np.abs(a.w_img) <= 1 / np.sqrt(8))


def test_one_dimensional_prototypes():
    m = init_model(3, 3, 1, 2, seed=0)
    assert np.allclose(np.abs(m.prototypes), 1.0)


def test_embed_identity_head():
    m = LatentModel(np.eye(3), np.eye(3), np.eye(3), 0.1)
    x = np.array([[0.6, 0.8, 0.0]])
    z_img, _, _ = embed(m, x, np.array([[0.0, 0.0, 1.0]]))
    assert np.allclose(z_img, x)


def test_fusion_endpoints_and_sentinel(rng):
    m = init_model(4, 5, 6, 3, seed=1)
    x_img = rng.standard_normal((7, 4))
    x_text = rng.standard_normal((7, 5))
    x_text[2] = 0.0
    sentinel = np.zeros(7, bool)
    sentinel[2] = True
    z_img, z_text, z_f = embed(m, x_img, x_text, beta=1.0, sentinel=sentinel)
    assert np.array_equal(z_f, z_img)
    _, _, z_half = embed(m, x_img, x_text, beta=0.5, sentinel=sentinel)
    assert np.array_equal(z_half[2], z_img[2])
    assert np.all(z_text[2] == 0)
    assert np.allclose(np.linalg.norm(z_half, axis=1), 1.0, atol=1e-6)


def test_zero_projection_raises():
    m = init_model(3, 3, 4, 2, seed=0)
    with pytest.raises(DegenerateEmbedding):
        embed(m, np.zeros((2, 3)), np.ones((2, 3)))


def test_cosine_costs():
    A = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
    z = np.array([[1.0, 0.0]])
    c = cost_matrices(z, z, A, 0.5)
    assert c.c_img.tolist() == [[0.0, 1.0, 2.0]]


def test_fused_arithmetic():
    c_img = np.array([[0.2]])
    c_text = np.array([[0.6]])
    fused = 0.5 * c_img + 0.5 * c_text
    assert fused[0, 0] == pytest.approx(0.4)
    c = CostMatrices(c_img, c_text, fused, np.array([[0.3]]))
    assert apply_prior(c)[0, 0] == pytest.approx(0.7)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 30), st.integers(1, 6), st.integers(1, 8), st.floats(0, 1), st.integers(0, 10_000))
def test_cost_ranges_and_endpoints(T, K, L, beta, seed):
    rng = np.random.default_rng(seed)
    z_img = rng.standard_normal((T, L))
    z_img /= np.linalg.norm(z_img, axis=1, keepdims=True)
    z_text = rng.standard_normal((T, L))
    z_text /= np.linalg.norm(z_text, axis=1, keepdims=True)
    A = rng.standard_normal((K, L))
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    c = cost_matrices(z_img, z_text, A, beta)
    for m in (c.c_img, c.c_text, c.c_fused):
        assert m.min() >= -1e-12 and m.max() <= 2 + 1e-12
    assert np.array_equal(cost_matrices(z_img, z_text, A, 1.0).c_fused, c.c_img)
    assert np.array_equal(cost_matrices(z_img, z_text, A, 0.0).c_fused, c.c_text)


def test_sentinel_rows_fall_back_to_visual():
    z = np.array([[1.0, 0.0], [0.0, 1.0]])
    zt = np.array([[0.0, 1.0], [0.0, 0.0]])
    A = np.eye(2)
    c = cost_matrices(z, zt, A, 0.3, np.array([False, True]))
    assert np.array_equal(c.c_fused[1], c.c_img[1])


def test_prior_examples():
    assert np.all(temporal_prior(5, 3, 0.0, 0.04) == 0)
    assert np.allclose(temporal_prior(2, 2, 1.0, 1e-12), [[0, 1], [1, 0]])
    assert np.all(temporal_prior(6, 1, 1.0, 1.0) == 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 40), st.integers(2, 10), st.floats(0, 2), st.floats(0, 2), st.floats(1e-3, 1))
def test_prior_monotone_and_symmetric(T, K, r1, r2, radius):
    lo, hi = sorted((r1, r2))
    a = temporal_prior(T, K, lo, radius)
    b = temporal_prior(T, K, hi, radius)
    assert np.all(a >= 0) and np.all(a <= b + 1e-15)
    # a lone frame or prototype sits at position 0, so reversal needs T, K >= 2
    assert np.allclose(a, a[::-1, ::-1])


def test_checkpoint_round_trip(tmp_path):
    m = init_model(4, 3, 5, 2, seed=2)
    save_checkpoint(m, tmp_path / "ck")
    back = load_checkpoint(tmp_path / "ck")
    assert np.allclose(back.w_img, m.w_img, atol=1e-6)
    assert np.allclose(np.linalg.norm(back.prototypes, axis=1), 1, atol=1e-6)
    assert back.temperature == m.temperature


def test_corrupt_checkpoint(tmp_path):
    m = init_model(4, 3, 5, 2, seed=2)
    save_checkpoint(m, tmp_path / "ck")
    raw = (tmp_path / "ck" / "w_img.tsr").read_bytes()
    (tmp_path / "ck" / "w_img.tsr").write_bytes(raw[:-4])
    with pytest.raises(FormatError):
        load_checkpoint(tmp_path / "ck")
    (tmp_path / "ck" / "manifest.json").write_text("{}")
    with pytest.raises(FormatError):
        load_checkpoint(tmp_path / "ck")
