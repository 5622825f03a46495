import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hocl.oscillator import OscillatorState, compatibility
from hocl.stability import (kernel_lipschitz, lr_schedule, lyapunov, min_compatibility, oscillatory_energy,
                            oscillatory_energy_grad, projected_lyapunov, separation_bound)


def test_coherent_energy():
    s = OscillatorState(np.full(50, 0.4), np.zeros(50), 2.0)
    v = lyapunov(s, np.zeros((50, 50)), 0.3)
    assert v.total == pytest.approx(-50.0, abs=1e-12)
    assert v.v_w == 0.0


@pytest.mark.parametrize("n", [3, 10, 50])
def test_evenly_spaced_energy(n):
    theta = np.arange(n) * 2 * np.pi / n
    assert oscillatory_energy(theta, 2.0) == pytest.approx(0.0, abs=1e-12)


def test_energy_matches_double_sum():
    theta = np.random.default_rng(0).uniform(0, 2 * np.pi, 9)
    ref = -2.0 / (2 * 9) * np.cos(theta[:, None] - theta[None, :]).sum()
    assert oscillatory_energy(theta, 2.0) == pytest.approx(ref, abs=1e-12)


@given(arrays(np.float64, st.integers(1, 20), elements=st.floats(0, 2 * math.pi)), st.floats(0.1, 5.0),
       st.floats(0.01, 2.0))
def test_lyapunov_decomposition_and_range(theta, K, lam):
    n = theta.size
    W = np.random.default_rng(n).normal(size=(n, n))
    v = lyapunov(OscillatorState(theta, np.zeros(n), K), W, lam)
    assert v.total == pytest.approx(v.v_theta + v.v_w, abs=1e-12)
    assert -K * n / 2 - 1e-9 <= v.v_theta <= K * n / 2
    assert v.v_w >= 0.0


def test_lyapunov_validation():
    s = OscillatorState(np.zeros(3), np.zeros(3), 1.0)
    with pytest.raises(ValueError):
        lyapunov(s, np.zeros((3, 3)), 0.0)
    with pytest.raises(ValueError):
        lyapunov(s, np.zeros((2, 2)), 0.3)


@given(arrays(np.float64, st.integers(2, 15), elements=st.floats(0, 2 * math.pi)))
def test_energy_gradient_matches_fd(theta):
    K = 1.7
    h = 1e-6
    fd = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        fd[i] = (oscillatory_energy(theta + e, K) - oscillatory_energy(theta - e, K)) / (2 * h)
    np.testing.assert_allclose(oscillatory_energy_grad(theta, K), fd, atol=1e-5)


def test_projected_examples():
    assert projected_lyapunov(0.0, 0.0, 2.0, 0.3) == pytest.approx(-1.0)
    assert projected_lyapunov(0.0, math.pi / 2, 2.0, 0.3) == pytest.approx(0.0, abs=1e-15)


def test_projected_grid_minimum():
    w = np.linspace(0, 1, 51)
    phi = np.linspace(-np.pi / 2, np.pi / 2, 61)
    V = projected_lyapunov(w[:, None], phi[None, :], 2.0, 0.3)
    i, j = np.unravel_index(np.argmin(V), V.shape)
    assert (w[i], phi[j]) == (0.0, 0.0)
    assert V[i, j] == pytest.approx(-1.0)


def test_kernel_lipschitz_values():
    assert kernel_lipschitz(1.0) == pytest.approx(math.exp(-0.5), abs=1e-15)
    assert kernel_lipschitz(2.0) == pytest.approx(math.exp(-0.5) / 4, abs=1e-15)


def kernel_max_slope(sigma):
    d = np.linspace(0.0, 10.0 * sigma, 2_000_001)
    return float(np.max(d / sigma**2 * compatibility(0.0, d, sigma)))


def test_kernel_lipschitz_matches_sampled_slope_unit_width():
    assert kernel_lipschitz(1.0) == pytest.approx(kernel_max_slope(1.0), abs=1e-4)


@pytest.mark.parametrize("sigma", [0.5, 2.0])
def test_kernel_lipschitz_off_by_sigma_for_other_widths(sigma):
    # the stated constant scales as 1/sigma^2 while the kernel's slope scales as 1/sigma
    assert kernel_lipschitz(sigma) * sigma == pytest.approx(kernel_max_slope(sigma), abs=1e-4)


def test_separation_bound_example():
    b = separation_bound(0.01, kernel_lipschitz(1.0), 2.0, 50, 0.01, 1.0)
    assert b == pytest.approx(0.01 / (100 * math.exp(-0.5) + 0.01), rel=1e-14)
    assert b == pytest.approx(1.649e-4, abs=1e-7)


def test_separation_bound_monotone_and_linear():
    l_c = kernel_lipschitz(1.0)
    bounds = [separation_bound(0.01, l_c, 2.0, n, 0.01, 1.0) for n in (10, 20, 40, 80)]
    assert all(a > b for a, b in zip(bounds, bounds[1:]))
    assert separation_bound(0.02, l_c, 2.0, 50, 0.01, 1.0) == pytest.approx(2 * separation_bound(0.01, l_c, 2.0, 50, 0.01, 1.0))
    with pytest.raises(ValueError):
        separation_bound(0.0, l_c, 2.0, 50, 0.01, 1.0)


def test_lr_schedule_examples():
    assert lr_schedule(0, 0.3, 0.2, 2 / 3, 1.0) == (0.3, 0.2)
    fast, slow = lr_schedule(7, 1.0, 1.0, 2 / 3, 1.0)
    assert fast == pytest.approx(0.25, abs=1e-15)
    assert slow == pytest.approx(0.125, abs=1e-15)


def test_lr_schedule_ratio_nondecreasing():
    ratios = [np.divide(*lr_schedule(t, 1.0, 0.5, 0.6, 0.9)) for t in range(200)]
    assert all(b >= a for a, b in zip(ratios, ratios[1:]))


def test_lr_schedule_validation():
    with pytest.raises(ValueError):
        lr_schedule(0, 1, 1, 0.5, 1.0)
    with pytest.raises(ValueError):
        lr_schedule(0, 1, 1, 0.9, 0.8)
    with pytest.raises(ValueError):
        lr_schedule(-1, 1, 1, 0.6, 1.0)


def test_min_compatibility():
    assert min_compatibility([0.0, 0.5, 1.0], 1.0) == pytest.approx(math.exp(-0.5))
