"""Shared fixtures built on the bundle stubs (see bundle_stubs.py)."""
import pytest

from srnz.bundle import write_bundle
from srnz.registry import ModelRegistry

from bundle_stubs import duplication_graph, duplication_tensors


@pytest.fixture()
def dup_bundle(tmp_path):
    from srnz.bundle import load_bundle

    path = tmp_path / "dup.srnb"
    write_bundle(path, "weak", duplication_graph(), duplication_tensors())
    return load_bundle(path)


@pytest.fixture()
def dup_registry(tmp_path):
    path = tmp_path / "dup.srnb"
    write_bundle(path, "weak", duplication_graph(), duplication_tensors())
    registry = ModelRegistry(tmp_path / "registry")
    registry.add(path)
    return registry


@pytest.fixture()
def empty_registry(tmp_path):
    return ModelRegistry(tmp_path / "empty-registry")


@pytest.fixture(autouse=True)
def _no_ambient_registry(monkeypatch):
    # tests must not pick up a registry from the developer's environment
    monkeypatch.delenv("SRNZ_MODELS", raising=False)
