import subprocess
import sys

import numpy as np
import pytest

from tvmask.masking import kernels


needs_numba = pytest.mark.skipif(not kernels.HAS_NUMBA, reason="numba not installed")


def random_case(rng, n_max=128):
    n = int(rng.integers(2, n_max))
    weights = rng.uniform(0.05, 1.0, size=n)
    weights[rng.random(n) < 0.25] = 0.0
    eligible = int(np.count_nonzero(weights))
    if eligible == 0:
        weights[0] = 0.5
        eligible = 1
    count = int(rng.integers(1, eligible + 1))
    uniforms = rng.random(count)
    return weights, count, uniforms


@needs_numba
def test_backends_bit_identical():
    rng = np.random.default_rng(123)
    for _ in range(300):
        weights, count, uniforms = random_case(rng)
        a = kernels.sample_proportional(weights, count, uniforms, use_numba=False)
        b = kernels.sample_proportional(weights, count, uniforms, use_numba=True)
        np.testing.assert_array_equal(a, b)


@needs_numba
def test_backends_identical_at_uniform_edges():
    weights = np.array([0.3, 0.0, 0.7, 0.2])
    for u in (0.0, 1e-16, 0.5, 1.0 - 1e-16):
        a = kernels.sample_proportional(weights, 3, np.array([u, 0.5, 0.5]), use_numba=False)
        b = kernels.sample_proportional(weights, 3, np.array([u, 0.5, 0.5]), use_numba=True)
        np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("use_numba", [False, True])
def test_never_selects_zero_weight(use_numba):
    if use_numba and not kernels.HAS_NUMBA:
        pytest.skip("numba not installed")
    rng = np.random.default_rng(5)
    for _ in range(200):
        weights, count, uniforms = random_case(rng, n_max=32)
        out = kernels.sample_proportional(weights, count, uniforms, use_numba=use_numba)
        assert np.all(weights[out] > 0)
        assert len(set(out.tolist())) == count  # without replacement


def test_exhaustive_draw_returns_all():
    weights = np.array([0.0, 1.0, 2.0, 0.0, 3.0])
    out = kernels.sample_proportional(weights, 3, np.random.default_rng(0).random(3),
                                      use_numba=False)
    assert sorted(out.tolist()) == [1, 2, 4]


def test_count_zero():
    out = kernels.sample_proportional(np.array([1.0, 1.0]), 0, np.empty(0))
    assert out.size == 0


def test_overdraw_raises():
    with pytest.raises(ValueError):
        kernels.sample_proportional(np.array([1.0, 0.0]), 2, np.array([0.1, 0.2]))


def test_env_flag_disables_numba():
    code = (
        "import os; os.environ['TVMASK_NUMBA']='0'; "
        "from tvmask.masking import kernels; "
        "print(kernels.NUMBA_ENABLED)"
    )
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True)
    assert out.stdout.strip() == "False"
