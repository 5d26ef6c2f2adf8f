import importlib

import numpy as np
import pytest

from tilecodes import kernel_backend
from tilecodes._kernels import _pyimpl
from tilecodes.sampling import rng_for

try:
    from tilecodes._kernels import _fastimpl
except ImportError:
    _fastimpl = None

BACKENDS = [_pyimpl] + ([_fastimpl] if _fastimpl is not None else [])


def test_backend_reported():
    assert kernel_backend in ("cython", "numpy")


@pytest.mark.parametrize("impl", BACKENDS)
def test_sliding_codes_1d_matches_reference(impl):
    rng = rng_for(1, "k")
    arr = rng.integers(1, 5, size=500).astype(np.int64)
    for w in (1, 3, 7):
        got = impl.sliding_codes_1d(arr, w, 4)
        ref = _pyimpl.sliding_codes_1d(arr, w, 4)
        assert np.array_equal(got, ref)


@pytest.mark.parametrize("impl", BACKENDS)
def test_sliding_codes_2d_matches_reference(impl):
    rng = rng_for(2, "k")
    arr = rng.integers(1, 4, size=(40, 40)).astype(np.int64)
    for h, w in ((1, 1), (3, 3), (3, 5)):
        got = impl.sliding_codes_2d(arr, h, w, 3)
        ref = _pyimpl.sliding_codes_2d(arr, h, w, 3)
        assert np.array_equal(got, ref)


@pytest.mark.parametrize("impl", BACKENDS)
def test_match_positions_agree(impl):
    rng = rng_for(3, "k")
    arr = rng.integers(1, 3, size=200).astype(np.int64)
    pat = arr[17:22].copy()
    cells = np.arange(5, dtype=np.int64).reshape(-1, 1)
    got = np.asarray(impl.match_positions(arr, cells, pat))
    ref = _pyimpl.match_positions(arr, cells, pat)
    assert np.array_equal(got, ref)
    assert [17] in got.tolist()


def test_forced_python_fallback(monkeypatch):
    monkeypatch.setenv("TILECODES_FORCE_PY", "1")
    import tilecodes._kernels as k
    importlib.reload(k)
    assert k.BACKEND == "numpy"
    monkeypatch.delenv("TILECODES_FORCE_PY")
    importlib.reload(k)
