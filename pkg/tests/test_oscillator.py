import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hocl.graph import SparseGraph
from hocl.oscillator import (CouplingVariant, DegenerateNeighborhoodWarning, OscillatorState, compatibility,
                             euler_phase_step, local_attention, local_attention_matrix, local_order_parameter,
                             local_order_parameters, order_parameter, phase_drift, ssa_attention, wrap_phase)
from hocl.stability import oscillatory_energy_grad

ALL_VARIANTS = list(CouplingVariant)
phase_arrays = arrays(np.float64, st.integers(1, 30), elements=st.floats(0.0, 2 * math.pi))


def drift(phases, omega, variant, K=2.0, graph=None):
    st_ = OscillatorState(np.asarray(phases, float), np.asarray(omega, float), K)
    if variant is CouplingVariant.SPARSE_LOCAL and graph is None:
        graph = SparseGraph.complete(len(phases))
    return phase_drift(st_, variant, graph)


def test_state_validation():
    with pytest.raises(ValueError):
        OscillatorState(np.zeros(2), np.zeros(2), 0.0)
    with pytest.raises(ValueError):
        OscillatorState(np.zeros(2), np.zeros(2), 1.0, sigma_c=0.0)
    with pytest.raises(ValueError):
        OscillatorState(np.zeros(0), np.zeros(0), 1.0)


def test_centered_frequencies():
    s = OscillatorState.centered(np.zeros(5), np.array([1.0, 2.0, 3.0, 4.0, 10.0]), 1.0)
    assert abs(s.frequencies.mean()) < 1e-12


def test_compatibility_equal_is_one():
    assert compatibility(0.7, 0.7, 0.3) == 1.0


def test_compatibility_unit_gap():
    assert compatibility(0.0, 1.0, 1.0) == pytest.approx(math.exp(-0.5), abs=1e-15)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.1, 3))
def test_compatibility_symmetric(a, b, s):
    assert compatibility(a, b, s) == compatibility(b, a, s)


def test_order_parameter_coherent():
    r, psi = order_parameter(np.full(7, 1.3))
    assert r == pytest.approx(1.0, abs=1e-15)
    assert psi == pytest.approx(1.3)


@pytest.mark.parametrize("n", [2, 3, 7, 50])
def test_order_parameter_evenly_spaced(n):
    r, psi = order_parameter(np.arange(n) * 2 * np.pi / n)
    assert r < 1e-12
    assert psi == 0.0


def test_order_parameter_quarter_turn():
    r, psi = order_parameter(np.array([0.0, np.pi / 2]))
    assert r == pytest.approx(math.sqrt(2) / 2, abs=1e-15)
    assert psi == pytest.approx(math.pi / 4, abs=1e-15)


def test_order_parameter_empty():
    with pytest.raises(ValueError):
        order_parameter(np.zeros(0))


@given(phase_arrays, st.floats(-10, 10))
def test_order_parameter_range_and_shift_invariance(theta, c):
    r, _ = order_parameter(theta)
    assert 0.0 <= r <= 1.0
    assert order_parameter(theta + c)[0] == pytest.approx(r, abs=1e-12)


def test_local_order_singleton():
    assert local_order_parameter(np.array([0.3, 2.0]), [1]) == pytest.approx(1.0)


def test_local_order_all_indices_is_global():
    theta = np.random.default_rng(0).uniform(0, 2 * np.pi, 9)
    assert local_order_parameter(theta, range(9)) == pytest.approx(order_parameter(theta)[0], abs=1e-15)


def test_local_order_antiphase():
    assert local_order_parameter(np.array([0.0, np.pi]), [0, 1]) < 1e-15


def test_local_order_empty_warns():
    with pytest.warns(DegenerateNeighborhoodWarning):
        assert local_order_parameter(np.zeros(3), []) == 0.0


def test_local_order_parameters_vectorized():
    theta = np.random.default_rng(1).uniform(0, 2 * np.pi, 6)
    nb = [[0, 1], [1, 2, 3], [2], [0, 3, 4, 5], [4, 5], [0, 5]]
    g = SparseGraph.from_neighborhoods(nb)
    ref = [local_order_parameter(theta, n) for n in nb]
    np.testing.assert_allclose(local_order_parameters(theta, g), ref, atol=1e-15)


@pytest.mark.parametrize("variant", ALL_VARIANTS)
def test_drift_single_unit(variant):
    np.testing.assert_allclose(drift([1.0], [0.4], variant), [0.4])


@pytest.mark.parametrize("variant", ALL_VARIANTS)
def test_drift_synchronized_equals_omega(variant):
    omega = np.array([0.1, -0.2, 0.05, 0.3])
    np.testing.assert_allclose(drift(np.full(4, 2.0), omega, variant), omega, atol=1e-15)


@pytest.mark.parametrize("variant", ALL_VARIANTS)
def test_drift_antiphase_pair(variant):
    omega = np.array([0.3, -0.1])
    np.testing.assert_allclose(drift([0.0, np.pi], omega, variant), omega, atol=1e-15)


@given(phase_arrays)
def test_mean_field_drift_sum(theta):
    omega = np.linspace(-1, 1, theta.size)
    assert drift(theta, omega, CouplingVariant.MEAN_FIELD).sum() == pytest.approx(omega.sum(), abs=1e-9)


@given(arrays(np.float64, st.integers(2, 20), elements=st.floats(0.0, 2 * math.pi)), st.floats(0.5, 4.0))
def test_gradient_flow_identity(theta, K):
    # identical frequencies: drift_i = -N C0 r dV/dtheta_i
    n = theta.size
    d = drift(theta, np.zeros(n), CouplingVariant.ORDER_GATED, K=K)
    r, _ = order_parameter(theta)
    np.testing.assert_allclose(d, -n * 1.0 * r * oscillatory_energy_grad(theta, K), atol=1e-12)


def test_sparse_local_complete_graph_vs_order_gated_identical_freq():
    theta = np.random.default_rng(2).uniform(0, 2 * np.pi, 8)
    a = drift(theta, np.zeros(8), CouplingVariant.SPARSE_LOCAL)
    b = drift(theta, np.zeros(8), CouplingVariant.ORDER_GATED)
    np.testing.assert_allclose(a, b, atol=1e-13)


def test_sparse_local_needs_graph():
    s = OscillatorState(np.zeros(3), np.zeros(3), 1.0)
    with pytest.raises(ValueError):
        phase_drift(s, CouplingVariant.SPARSE_LOCAL)


def test_euler_scalar_step():
    s = euler_phase_step(OscillatorState(np.array([0.0]), np.array([1.0]), 1.0), 0.05, CouplingVariant.MEAN_FIELD)
    assert s.phases[0] == pytest.approx(0.05, abs=1e-15)


def test_euler_wraps():
    s = OscillatorState(np.array([2 * np.pi - 0.01]), np.array([1.0]), 1.0)
    out = euler_phase_step(s, 0.05, CouplingVariant.MEAN_FIELD)
    assert out.phases[0] == pytest.approx(0.04, abs=1e-12)


def test_euler_rejects_nonpositive_dt():
    s = OscillatorState(np.zeros(2), np.zeros(2), 1.0)
    with pytest.raises(ValueError):
        euler_phase_step(s, 0.0, CouplingVariant.MEAN_FIELD)


def test_euler_small_dt_limit():
    s = OscillatorState(np.array([0.5, 1.0]), np.array([0.1, 0.2]), 1.0)
    out = euler_phase_step(s, 1e-12, CouplingVariant.MEAN_FIELD)
    np.testing.assert_allclose(out.phases, s.phases, atol=1e-11)


@given(arrays(np.float64, 10, elements=st.floats(-100, 100)))
def test_wrap_phase_domain(theta):
    w = wrap_phase(theta)
    assert np.all((w >= 0) & (w < 2 * np.pi))


def test_ssa_identical_frequencies():
    assert ssa_attention(0.5, 0.5, 2.0, 0.8, 1.0) == pytest.approx(1.6)


def test_ssa_rectified_large_mismatch():
    assert ssa_attention(0.0, 2.5, 2.0, 1.0, 1.0) == 0.0


def test_ssa_incoherent_masks():
    assert ssa_attention(0.0, 0.1, 2.0, 0.0, 1.0) == 0.0


def test_local_attention_empty_row():
    g = SparseGraph.from_neighborhoods([[0, 1], [], [1, 2]])
    s = OscillatorState(np.zeros(3), np.zeros(3), 2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateNeighborhoodWarning)
        A = local_attention_matrix(s, g)
    assert np.all(A[1] == 0.0)


def test_local_attention_synchronized_complete():
    s = OscillatorState(np.full(4, 0.7), np.full(4, 0.2), 2.5)
    A = local_attention_matrix(s, SparseGraph.complete(4))
    np.testing.assert_allclose(A, np.full((4, 4), 2.5), atol=1e-14)


def test_local_attention_zero_outside_and_bounded():
    rng = np.random.default_rng(4)
    g = SparseGraph.from_neighborhoods([[0, 2], [1], [0, 2, 3], [3, 1]])
    s = OscillatorState(rng.uniform(0, 6, 4), rng.normal(0, 0.2, 4), 1.5)
    A = local_attention_matrix(s, g)
    mask = np.zeros((4, 4), dtype=bool)
    mask[g.rows(), g.indices] = True
    assert np.all(A[~mask] == 0.0)
    assert np.all((A >= 0) & (A <= 1.5))
    att = local_attention(s, g)
    assert att.values.shape == (g.nnz,)
