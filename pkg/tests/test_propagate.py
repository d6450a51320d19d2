import numpy as np
import pytest
import scipy.linalg

from cpbsim import (
    DeviceParams,
    PropagatorConfig,
    convergence_estimate,
    default_protocol,
    evolve,
    spectrum_trace,
    step_unitary,
    unitarity_defect,
)

COARSE = PropagatorConfig(time_step=1e-3)


def _random_hermitian(rng, n):
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return m + m.conj().T


def test_step_unitary_matches_expm():
    rng = np.random.default_rng(11)
    for _ in range(10):
        h = _random_hermitian(rng, 8)
        dt = rng.uniform(0.01, 0.5)
        np.testing.assert_allclose(
            step_unitary(h, dt), scipy.linalg.expm(-1j * h * dt), atol=1e-12
        )


def test_step_unitary_is_unitary():
    rng = np.random.default_rng(12)
    u = step_unitary(_random_hermitian(rng, 16), 0.3)
    assert unitarity_defect(u) < 1e-13


def test_evolve_unitary(u_forward):
    assert unitarity_defect(u_forward) < 1e-12


def test_evolve_composes_across_interior_cut(params, protocol):
    full = evolve(params, protocol, COARSE)
    cut = 0.31
    left = evolve(params, protocol, COARSE, 0.0, cut)
    right = evolve(params, protocol, COARSE, cut, protocol.duration)
    np.testing.assert_allclose(right @ left, full, atol=1e-8)


def test_evolve_handles_non_commensurate_window(params, protocol):
    # 0.2/3 is not an integer multiple of the step; the remainder step must
    # land the propagator exactly at t_stop and keep it unitary
    u = evolve(params, protocol, COARSE, 0.0, protocol.duration / 10.0)
    assert unitarity_defect(u) < 1e-12


def test_evolve_window_validation(params, protocol):
    with pytest.raises(ValueError):
        evolve(params, protocol, COARSE, -0.1, 0.5)
    with pytest.raises(ValueError):
        evolve(params, protocol, COARSE, 0.5, 0.5)
    with pytest.raises(ValueError):
        evolve(params, protocol, COARSE, 0.0, protocol.duration * 1.01)
    with pytest.raises(ValueError, match="too coarse"):
        evolve(params, protocol, PropagatorConfig(time_step=0.1))


def test_zero_tunneling_keeps_populations(params, protocol):
    frozen = DeviceParams(
        charging_energy=params.charging_energy,
        josephson_energy_total=0.0,
        asymmetry=params.asymmetry,
        n_charges=params.n_charges,
    )
    u = evolve(frozen, protocol, COARSE)
    np.testing.assert_allclose(np.abs(u) ** 2, np.eye(u.shape[0]), atol=1e-24)


def test_convergence_is_second_order(params, protocol):
    est_coarse = convergence_estimate(params, protocol, PropagatorConfig(1e-3))
    est_fine = convergence_estimate(params, protocol, PropagatorConfig(5e-4))
    assert est_coarse < 1e-4
    assert est_coarse / est_fine > 3.0


def test_spectrum_trace_layout(params, protocol):
    trace = spectrum_trace(params, protocol, 101)
    assert trace.times.size == 101
    assert trace.energies.shape == (101, params.n_charges)
    assert trace.times[0] == 0.0
    assert trace.times[-1] == pytest.approx(protocol.duration)
    np.testing.assert_array_equal(trace.energies[:, 0], np.zeros(101))
    assert np.all(np.diff(trace.energies, axis=1) >= 0.0)


def test_spectrum_crossings_without_tunneling(params):
    # no tunneling, no avoided crossings: the two lowest levels touch when
    # the gate sweeps through a half-integer charge bias
    frozen = DeviceParams(josephson_energy_total=0.0)
    trace = spectrum_trace(frozen, default_protocol(), 4001)
    gap = trace.energies[:, 1]
    assert gap.min() < 0.5
    with_tunneling = spectrum_trace(params, default_protocol(), 1001)
    assert with_tunneling.energies[:, 1].min() > 1.0


def test_spectrum_trace_validation(params, protocol):
    with pytest.raises(ValueError):
        spectrum_trace(params, protocol, 1)
