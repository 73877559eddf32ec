import subprocess

import pytest

from handuq_bridge.train import TrainSettings, train_toy_ensemble


@pytest.fixture(scope="session")
def synth_data(tmp_path_factory):
    """Noiseless synthetic dataset produced through the evaluation CLI."""
    out = tmp_path_factory.mktemp("synth") / "data"
    subprocess.run(
        [
            "handuq", "synth", "--out", str(out), "--seed", "3",
            "--dims", "64x64", "--k", "2", "--n-per-condition", "12",
            "--noise", "0", "--glove-shift", "0", "--overlap", "0", "--blur", "0",
        ],
        check=True,
        capture_output=True,
    )
    return out


@pytest.fixture(scope="session")
def trained_ensemble(tmp_path_factory, synth_data):
    """K=4 ensemble (2 per family) trained once and reused across tests."""
    model_dir = tmp_path_factory.mktemp("models")
    train_toy_ensemble(
        synth_data / "manifest.json",
        k=4,
        seeds=[0, 1, 2, 3],
        out_dir=model_dir,
        settings=TrainSettings(epochs=12),
    )
    return model_dir
