import pytest

from helpers_trainer import HOLDOUT_SEEDS, TRAIN_SEEDS, gen_field

from srnz_trainer import TrainConfig, train


@pytest.fixture(autouse=True)
def _no_ambient_registry(monkeypatch):
    # subprocess calls inherit the environment; keep them hermetic
    monkeypatch.delenv("SRNZ_MODELS", raising=False)


@pytest.fixture(scope="session")
def train_dir(tmp_path_factory):
    """Ten same-family 129x129 fields, the smoke run's training set."""
    d = tmp_path_factory.mktemp("train-fields")
    for seed in TRAIN_SEEDS:
        gen_field(d, seed)
    return d


@pytest.fixture(scope="session")
def holdout_raws(tmp_path_factory):
    """Same-family fields with seeds disjoint from the training set."""
    d = tmp_path_factory.mktemp("holdout-fields")
    return [gen_field(d, seed)[1] for seed in HOLDOUT_SEEDS]


@pytest.fixture(scope="session")
def smoke(train_dir, tmp_path_factory):
    """One full (if short) training run, shared by the shipping tests.

    2000 iterations at the default crop/batch take a few minutes on a
    single core; everything downstream reuses this result.
    """
    config = TrainConfig(data_dir=str(train_dir), tier="weak", iterations=2000, seed=0)
    result = train(config)
    bundle_path = tmp_path_factory.mktemp("smoke") / "smoke-weak.srnb"
    bundle_path.write_bytes(result.bundle)
    return result, bundle_path
