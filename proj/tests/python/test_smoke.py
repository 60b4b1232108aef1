"""Smoke tests for the compiled extension."""

import numpy as np
import pytest

import _unca as unca


@pytest.mark.parametrize(
    "filters,channels,n_params",
    [((2, 1, 1), 4, 68), ((2, 2, 2), 6, 150), ((4, 2, 2), 8, 264), ((4, 4, 4), 12, 588)],
)
def test_config_param_counts(filters, channels, n_params):
    cfg = unca.make_config(*filters)
    assert cfg.channels == channels
    assert cfg.n_params == n_params


def test_config_rejects_too_few_channels():
    with pytest.raises(ValueError):
        unca.make_config(1, 1, 1)


def test_seed_grid_range_and_determinism():
    cfg = unca.make_config(2, 1, 1)
    a = unca.seed_grid(24, 24, cfg, seed=3)
    b = unca.seed_grid(24, 24, cfg, seed=3)
    assert a.shape == (24, 24, 4)
    assert np.array_equal(a, b)
    assert a.min() >= -0.5
    assert a.max() <= 0.5


def test_zero_rule_rollout_is_identity():
    cfg = unca.make_config(2, 1, 1)
    grid = unca.seed_grid(16, 16, cfg, seed=1)
    w = np.zeros((16, 4))
    b = np.zeros(4)
    out = unca.rollout(grid, w, b, cfg, 10)
    assert np.array_equal(out, grid)


def test_to_rgb_clamps():
    grid = np.zeros((4, 4, 4))
    grid[0, 0, 0] = 1.7
    grid[0, 0, 1] = -0.3
    rgb = unca.to_rgb(grid)
    assert rgb.shape == (4, 4, 3)
    assert rgb[0, 0, 0] == 1.0
    assert rgb[0, 0, 1] == 0.0


def test_extract_features_counts():
    img = np.random.default_rng(0).random((8, 8, 3))
    levels = unca.extract_features(img, 1, 3)
    assert len(levels) == 1
    assert levels[0].shape == (36, 27)


def test_sinkhorn_self_divergence_is_zero():
    rng = np.random.default_rng(1)
    x = rng.random((12, 5))
    value, grad = unca.sinkhorn_divergence(x, x)
    assert abs(value) < 1e-8
    assert np.abs(grad).max() < 1e-8


def test_texture_loss_on_identical_images():
    rng = np.random.default_rng(2)
    img = rng.random((12, 12, 3))
    value, grad = unca.texture_loss(
        img, img, patch_size=3, n_levels=1, n_subsample=10**6
    )
    assert abs(value) < 1e-6
    assert grad.shape == img.shape


def test_quantize_roundtrip_bound():
    cfg = unca.make_config(2, 1, 1)
    rng = np.random.default_rng(3)
    w = rng.uniform(-0.3, 0.3, size=(16, 4))
    b = rng.uniform(-0.3, 0.3, size=4)
    q = unca.quantize(w, b, cfg)
    back = q["w_q"].astype(np.float64) * q["w_scale"]
    assert np.abs(back - w).max() <= q["w_scale"] / 2 + 1e-12


def test_model_file_roundtrip(tmp_path):
    cfg = unca.make_config(2, 1, 1)
    rng = np.random.default_rng(4)
    w = rng.uniform(-0.2, 0.2, size=(16, 4))
    b = rng.uniform(-0.2, 0.2, size=4)
    path = str(tmp_path / "m.unca")
    unca.save_model(w, b, cfg, path, quantized=True)
    assert (tmp_path / "m.unca").stat().st_size == 85
    loaded = unca.load_model(path)
    assert loaded["quantized"]
    assert loaded["config"].n_params == 68


def test_emitters_produce_source(tmp_path):
    cfg = unca.make_config(2, 1, 1)
    rng = np.random.default_rng(5)
    w = rng.uniform(-0.2, 0.2, size=(16, 4))
    b = rng.uniform(-0.2, 0.2, size=4)
    c_src = unca.emit_c(w, b, cfg)
    assert "ca_step" in c_src and "signed char W_Q" in c_src
    glsl = unca.emit_glsl(w, b, cfg)
    assert glsl.startswith("#version 300 es")


def test_png_roundtrip(tmp_path):
    rng = np.random.default_rng(6)
    img = np.round(rng.random((9, 7, 3)) * 255) / 255
    path = str(tmp_path / "img.png")
    unca.write_png(img, path)
    back = unca.read_png(path)
    assert np.allclose(back, img, atol=1e-12)
