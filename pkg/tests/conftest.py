import os

import pytest

from torbgp import _kernels
from torbgp.topology import AsGraph

# 1-2 peers; 1 provides 3 and 4; 2 provides 4; 3 and 4 provide 5
TOY5_EDGES = [(1, 2, 0), (1, 3, -1), (1, 4, -1), (2, 4, -1), (3, 5, -1), (4, 5, -1)]
TOY5_TEXT = "".join(f"{a}|{b}|{r}\n" for a, b, r in TOY5_EDGES)

BACKENDS = ["numpy"] + (["numba"] if _kernels.numba_backend is not None else [])


@pytest.fixture
def toy5():
    return AsGraph.from_edges(TOY5_EDGES)


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Route every kernel call through one backend for the duration of a test."""
    mod = _kernels.numpy_backend if request.param == "numpy" else _kernels.numba_backend
    monkeypatch.setattr(_kernels, "explore", mod.explore)
    monkeypatch.setattr(_kernels, "resilience", mod.resilience)
    return request.param


def pytest_collection_modifyitems(config, items):
    if os.environ.get("TORBGP_SNAPSHOT_DIR"):
        return
    skip = pytest.mark.skip(reason="set TORBGP_SNAPSHOT_DIR to run full-scale checks")
    for item in items:
        if "fullscale" in item.keywords:
            item.add_marker(skip)
