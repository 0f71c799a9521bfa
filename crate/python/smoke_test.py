"""Smoke test for the Python bindings.

Build and install the extension first, e.g.

    pip install maturin
    maturin develop --release -m crates/python/Cargo.toml

then run `python python/smoke_test.py`.
"""

import math
import tempfile
from pathlib import Path

import spectrum_anomaly_py as sa


def check_signal_chain():
    scene = sa.normal_scene(seed=3)
    assert len(scene) == sa.FRAME_LEN
    db = sa.spectrogram_db(scene)
    assert len(db) == 64 * 64
    lo, hi = sorted(db)[40], sorted(db)[-40]
    img = sa.spectrogram(scene, lo, hi)
    assert all(1e-3 <= p <= 1.0 for p in img)

    chirp = sa.chirp(-2e6, 2e6, 1e-3, 2e-3, 0.5)
    assert len(chirp) == sa.FRAME_LEN
    return img


def check_scores(img):
    assert sa.noise_attention(img, img) == 0.0
    shifted = [min(1.0, p + 0.01) for p in img]
    n = sa.noise_attention(img, shifted)
    r = sa.reconstruction_error(img, shifted)
    assert n >= r > 0.0

    points, auc = sa.roc_curve([0.1, 0.4, 0.35, 0.8], ["normal", "normal", "abnormal", "abnormal"])
    assert math.isclose(auc, 0.75)
    assert points[0][1:] == (0.0, 0.0) and points[-1][1:] == (1.0, 1.0)
    assert math.isclose(sa.auc_mann_whitney([0.1, 0.4, 0.35, 0.8], ["normal", "normal", "abnormal", "abnormal"]), 0.75)

    train = [[float(i), float(j)] for i in range(5) for j in range(5)]
    lof = sa.lof_scores(train, [[2.0, 2.0], [20.0, 20.0]], 3)
    assert lof[1] > lof[0]


def check_model():
    data = [[0.1 + 0.01 * ((i * 7 + j) % 13) for j in range(32)] for i in range(16)]
    vae, history = sa.Vae.train(data, hidden=[16], latent_dim=2, epochs=3, batch_size=4, seed=1)
    assert len(history) == 3 and all(math.isfinite(h) for h in history)
    out = vae.reconstruct(data[0])
    assert len(out) == 32 and all(0.0 <= v <= 1.0 for v in out)
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "model.vaem"
        vae.save(path)
        again = sa.Vae.load(path)
        assert again.reconstruct(data[0]) == out
        assert again.param_count == vae.param_count


def check_experiment():
    config = "\n".join([
        "seed = 5",
        "train_count = 16",
        "test_count = 8",
        "epochs = 1",
        "batch_size = 8",
        "hidden_widths = 16",
        "latent_dim = 2",
        "lof_k = 4",
    ])
    with tempfile.TemporaryDirectory() as tmp:
        aucs = dict(sa.run_experiment(config, tmp))
        assert "vae/noise_attention" in aucs
        assert all(0.0 <= a <= 1.0 for a in aucs.values())
        assert (Path(tmp) / "summary.txt").exists()

    with tempfile.TemporaryDirectory() as tmp:
        sa.synthesize(config, tmp)
        pixels, labels = sa.load_dataset(Path(tmp) / "test.spgd")
        assert len(pixels) == 8 and len(pixels[0]) == 64 * 64
        assert labels == ["normal", "abnormal"] * 4


def main():
    img = check_signal_chain()
    check_scores(img)
    check_model()
    check_experiment()
    print("smoke test passed")


if __name__ == "__main__":
    main()
