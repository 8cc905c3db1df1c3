"""Backend agreement: the compiled kernels and the NumPy fallback must give
bit-identical tensor results and matching log-rank statistics."""
import numpy as np
import pytest

from eventsig._kernels import _pyref

try:
    from eventsig._kernels import _native
except ImportError:
    _native = None

needs_native = pytest.mark.skipif(_native is None, reason="native extension not built")


@needs_native
def test_chen_signature_bit_identical(rng):
    for _ in range(100):
        dim = int(rng.integers(1, 5))
        level = int(rng.integers(1, 6))
        n = int(rng.integers(1, 8))
        increments = rng.normal(size=(n, dim))
        native = _native.chen_signature(np.ascontiguousarray(increments), level)
        fallback = _pyref.chen_signature(increments, level)
        assert native.shape == fallback.shape
        assert np.array_equal(native, fallback)


@needs_native
def test_concat_product_bit_identical(rng):
    for _ in range(100):
        dim = int(rng.integers(1, 4))
        level = int(rng.integers(1, 5))
        size = sum(dim**k for k in range(level + 1))
        a, b = rng.normal(size=size), rng.normal(size=size)
        assert np.array_equal(
            _native.concat_product(a, b, dim, level),
            _pyref.concat_product(a, b, dim, level),
        )


@needs_native
def test_segment_exp_bit_identical(rng):
    for _ in range(50):
        dim = int(rng.integers(1, 6))
        level = int(rng.integers(1, 6))
        delta = rng.normal(size=dim)
        assert np.array_equal(
            _native.segment_exp(delta, level), _pyref.segment_exp(delta, level)
        )


@needs_native
def test_logrank_scan_matches(rng):
    for _ in range(100):
        m = int(rng.integers(4, 80))
        times = np.sort(rng.integers(1, 25, size=m).astype(float))
        events = rng.integers(0, 2, size=m).astype(np.uint8)
        values = rng.normal(size=m)
        n_thr = int(rng.integers(1, 6))
        thresholds = np.sort(rng.choice(values, size=min(n_thr, m), replace=False))
        s_n, nl_n, el_n = _native.logrank_scan(times, events, values, thresholds)
        s_p, nl_p, el_p = _pyref.logrank_scan(times, events, values, thresholds)
        assert np.allclose(s_n, s_p, atol=1e-12)
        assert np.array_equal(nl_n, nl_p)
        assert np.array_equal(el_n, el_p)


def test_pyref_selectable_by_env(tmp_path):
    import subprocess
    import sys

    out = subprocess.run(
        [sys.executable, "-c", "import eventsig; print(eventsig.KERNEL_BACKEND)"],
        env={"EVENTSIG_BACKEND": "python", "PATH": "/usr/bin:/bin"},
        capture_output=True,
        text=True,
    )
    assert out.stdout.strip() == "python"
