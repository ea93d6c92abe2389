"""Backend parity and kernel contract tests."""

import os
import subprocess
import sys

import numpy as np
import pytest

from resync import generate_pattern, kernels

from conftest import brute_force_reference

BACKENDS = kernels.available_backends()


def test_both_backends_present():
    # the build is expected to produce the compiled core; the numpy
    # fallback must exist regardless
    assert "python" in BACKENDS
    assert "compiled" in BACKENDS


@pytest.mark.parametrize("backend", BACKENDS)
def test_correlate_matches_reference(backend):
    mod = kernels.get_backend(backend)
    rng = np.random.default_rng(11)
    for _ in range(50):
        n_r = int(rng.integers(2, 256)) * 2
        pat = generate_pattern(int(rng.integers(0, 2**32)), n_r)
        bits = pat.bits()
        nd = int(rng.integers(1, 64))
        bins = rng.integers(0, n_r, size=nd).astype(np.int64)
        bins.sort()
        delta = int(rng.integers(bins.max() - n_r + 1, bins.min() + 1))
        want = 2 * int(bits[bins - delta].sum()) - nd
        got = mod.correlate(pat.packed, n_r, bins, delta)
        assert got == want


@pytest.mark.parametrize("backend", BACKENDS)
def test_sweep_matches_reference(backend):
    mod = kernels.get_backend(backend)
    rng = np.random.default_rng(12)
    for _ in range(80):
        n_r = int(rng.integers(32, 1024)) * 2
        pat = generate_pattern(int(rng.integers(0, 2**32)), n_r)
        delta_max = int(rng.integers(0, min(24, n_r // 4)))
        nd = int(rng.integers(1, 48))
        bins = rng.integers(delta_max, n_r - delta_max, size=nd).astype(np.int64)
        bins.sort()
        threshold = int(rng.integers(-nd, nd + 1))
        want = brute_force_reference(pat.bits(), bins, delta_max, threshold)
        got = mod.sweep(pat.packed, n_r, bins, delta_max, threshold)
        assert tuple(got) == want


def test_backend_parity_on_identical_inputs():
    if "compiled" not in BACKENDS:
        pytest.skip("compiled backend unavailable")
    rng = np.random.default_rng(13)
    pat = generate_pattern(99, 4096)
    for _ in range(40):
        nd = int(rng.integers(8, 200))
        dm = int(rng.integers(0, 64))
        bins = rng.integers(dm, 4096 - dm, size=nd).astype(np.int64)
        bins.sort()
        thr = int(rng.integers(0, nd))
        a = kernels.get_backend("python").sweep(pat.packed, 4096, bins, dm, thr)
        b = kernels.get_backend("compiled").sweep(pat.packed, 4096, bins, dm, thr)
        assert tuple(a) == tuple(b)


@pytest.mark.parametrize("backend", BACKENDS)
def test_correlate_bounds_check(backend):
    mod = kernels.get_backend(backend)
    pat = generate_pattern(1, 64)
    bins = np.array([0, 5], dtype=np.int64)
    with pytest.raises(ValueError):
        mod.correlate(pat.packed, 64, bins, 1)  # 0 - 1 < 0
    with pytest.raises(ValueError):
        mod.correlate(pat.packed, 64, np.array([63], dtype=np.int64), -1)


@pytest.mark.parametrize("backend", BACKENDS)
def test_sweep_margin_check(backend):
    mod = kernels.get_backend(backend)
    pat = generate_pattern(1, 64)
    with pytest.raises(ValueError):
        mod.sweep(pat.packed, 64, np.array([3], dtype=np.int64), 5, 0)
    with pytest.raises(ValueError):
        mod.sweep(pat.packed, 64, np.array([60], dtype=np.int64), 5, 0)


@pytest.mark.parametrize("backend", BACKENDS)
def test_empty_bins(backend):
    mod = kernels.get_backend(backend)
    pat = generate_pattern(1, 64)
    empty = np.empty(0, dtype=np.int64)
    assert mod.correlate(pat.packed, 64, empty, 0) == 0
    assert tuple(mod.sweep(pat.packed, 64, empty, 3, 0)) == (False, 0, 0, 0)


def test_get_backend_unknown():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_use_switches_active():
    before = kernels.active_name()
    try:
        kernels.use("python")
        assert kernels.active_name() == "python"
        assert kernels.active().name == "python"
    finally:
        kernels.use(before)


def test_env_override_selects_backend():
    env = dict(os.environ)
    env["RESYNC_BACKEND"] = "python"
    out = subprocess.run(
        [sys.executable, "-c", "from resync import kernels; print(kernels.active_name())"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


def test_env_override_bad_value_fails_import():
    env = dict(os.environ)
    env["RESYNC_BACKEND"] = "nope"
    out = subprocess.run(
        [sys.executable, "-c", "import resync"],
        env=env, capture_output=True, text=True,
    )
    assert out.returncode != 0
    assert "RESYNC_BACKEND" in out.stderr
