from __future__ import annotations

import pytest

from refgrader.bundle import build_tiny_bundle, load_bundle


@pytest.fixture(scope="session")
def tiny_bundle(tmp_path_factory):
    path = build_tiny_bundle(tmp_path_factory.mktemp("bundle"), seed=0)
    return load_bundle(path)
