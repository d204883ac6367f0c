from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="session")
def configs_dir() -> Path:
    return ROOT / "configs"


def tiny_raw(**overrides) -> dict:
    """A three-class run small enough for unit tests (well under a second per stage)."""
    raw = {
        "seed": 3,
        "dataset": {
            "synth": {
                "counts": {"a": 300, "b": 300, "r": 60},
                "clusters": {
                    "a": [{"center": [0, 0, 0, 0, 0, 0], "spread": 0.5}],
                    "b": [{"center": [3, 3, 3, 0, 0, 0], "spread": 0.5}],
                    "r": [{"center": [0, 3, 0, 3, 0, 3], "spread": 0.5}],
                },
            }
        },
        "projector": {"latent_dim": 3, "epochs": 5, "batch_size": 64},
        "augmentation": {"plans": [{"class": "r", "fraction": 0.5}], "vae": {"epochs": 20}},
        "weights": {"explicit": {"r": 3}},
        "minority_classes": ["r"],
        "architecture": {"hidden": [16, 12, 8, 8]},
        "train": {"epochs": 3, "batch_size": 64},
    }
    raw.update(overrides)
    return raw


@pytest.fixture
def tiny_config():
    return tiny_raw
