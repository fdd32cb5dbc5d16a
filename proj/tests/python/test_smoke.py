import math

import numpy as np
import pytest

import rupnet


def tiny_config(size=16):
    c = rupnet.NetworkConfig()
    c.encoder_channels = [2, 4, 4]
    c.bridge_channels = 8
    c.decoder_channels = [4, 4, 2]
    c.image_size = size
    return c


def test_default_param_count():
    assert rupnet.param_count(rupnet.NetworkConfig()) == 461985


def test_config_json_round_trip():
    c = tiny_config()
    back = rupnet.NetworkConfig.from_json(c.to_json())
    assert back == c
    assert back.fingerprint() == c.fingerprint()
    c.image_size = 100
    with pytest.raises(rupnet.ConfigError):
        c.validate()


def test_infer_shape_and_range():
    net = rupnet.Network(tiny_config(), seed=3)
    x = np.random.default_rng(0).random((2, 3, 16, 16), dtype=np.float32)
    y = net.infer(x)
    assert y.shape == (2, 1, 16, 16)
    assert y.dtype == np.float32
    assert np.all((y > 0) & (y < 1))
    with pytest.raises(rupnet.ShapeError):
        net.infer(np.zeros((1, 3, 12, 12), dtype=np.float32))


def test_same_seed_same_weights():
    a = rupnet.Network(tiny_config(), seed=5).to_bytes()
    b = rupnet.Network(tiny_config(), seed=5).to_bytes()
    c = rupnet.Network(tiny_config(), seed=6).to_bytes()
    assert a == b
    assert a != c


def test_training_reduces_loss_and_checkpoint_round_trip(tmp_path):
    images, masks, ids = rupnet.synthetic(4, 16, seed=1)
    assert images.shape == (4, 3, 16, 16)
    assert masks.shape == (4, 1, 16, 16)
    assert len(ids) == 4
    assert set(np.unique(masks)) <= {0.0, 1.0}

    net = rupnet.Network(tiny_config(), seed=0)
    losses = [net.train_step(images, masks, lr=1e-2) for _ in range(30)]
    assert all(math.isfinite(v) for v in losses)
    assert losses[-1] < losses[0]

    path = tmp_path / "m.rupn"
    net.save(path)
    back = rupnet.Network.load(path)
    assert np.array_equal(back.infer(images), net.infer(images))

    raw = bytearray(net.to_bytes())
    raw[0] = ord("X")
    with pytest.raises(rupnet.CorruptCheckpoint):
        rupnet.Network.from_bytes(bytes(raw))


def test_losses_and_metrics():
    half = np.full((1, 1, 2, 2), 0.5, dtype=np.float32)
    t = np.array([1, 1, 0, 0], dtype=np.float32).reshape(1, 1, 2, 2)
    assert rupnet.bce_loss(half, t) == pytest.approx(math.log(2), rel=1e-6)
    assert rupnet.combined_loss(half, t) == pytest.approx(math.log(2) + 0.4, rel=1e-6)
    assert rupnet.dice_loss(t, t) == pytest.approx(0.0, abs=1e-9)

    m = rupnet.image_metrics(np.ones((1, 2, 2), np.float32), t.reshape(1, 2, 2))
    assert m["dsc"] == pytest.approx(2 / 3)
    assert m["iou"] == pytest.approx(0.5)
    assert m["f2"] == pytest.approx(2.5 / 3)
    empty = rupnet.image_metrics(np.zeros((1, 4, 4), np.float32), np.zeros((1, 4, 4), np.float32))
    assert all(v == 1.0 for v in empty.values())


def test_ops():
    x = np.array([1, 2], dtype=np.float32).reshape(1, 1, 1, 2)
    up = rupnet.ops.bilinear_upsample(x, 2)
    np.testing.assert_allclose(up[0, 0, 0], [1, 1.25, 1.75, 2], rtol=1e-6)
    p = rupnet.ops.maxpool2x2(np.arange(16, dtype=np.float32).reshape(1, 1, 4, 4))
    np.testing.assert_array_equal(p[0, 0], [[5, 7], [13, 15]])
    w = np.ones((1, 1, 3, 3), dtype=np.float32)
    y = rupnet.ops.conv2d(np.ones((1, 1, 3, 3), np.float32), w, np.array([0.5], np.float32))
    assert y[0, 0, 1, 1] == pytest.approx(9.5)
    assert y[0, 0, 0, 0] == pytest.approx(4.5)
    s = rupnet.ops.sigmoid(np.array([-1000.0, 0.0, 1000.0], np.float32))
    assert 0 < s[0] < 1e-6 and s[1] == pytest.approx(0.5) and 1 - 1e-6 < s[2] < 1


def test_gradcheck_passes():
    rows = rupnet.gradcheck(seed=1)
    assert {r["layer"] for r in rows} >= {"conv2d", "batchnorm", "end_to_end"}
    assert all(r["passed"] for r in rows)


def test_benchmark_fps():
    net = rupnet.Network(tiny_config(), seed=0)
    stats = rupnet.benchmark_fps(net, size=32, warmup=1, iters=3)
    assert stats["fps"] > 0
    with pytest.raises(rupnet.InvalidArgument):
        rupnet.benchmark_fps(net, size=30, warmup=0, iters=1)
