import numpy as np
import pytest

from groupbound import _backend

BACKENDS = ["python"]
try:
    _backend.get_kernels("cython")
    BACKENDS.insert(0, "cython")
except ImportError:  # pragma: no cover - extension not built
    pass


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path, monkeypatch):
    # Never touch the user's calibration cache from tests.
    monkeypatch.setenv("GROUPBOUND_CACHE", str(tmp_path / "calibration.json"))


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
