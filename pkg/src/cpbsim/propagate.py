"""Unitary propagation of a driven protocol and spectral diagnostics.

The integrator freezes the Hamiltonian at each step midpoint and applies the
exact exponential of the frozen matrix, so every step is exactly unitary and
the scheme is second-order accurate in the step size. The interval is tiled
with steps of exactly ``time_step`` plus one shorter remainder step when the
duration is not an integer multiple.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .drive import sample_drive
from .model import DeviceParams, build_hamiltonian

#: Step size (ns) used by the benchmark runs.
DEFAULT_TIME_STEP = 1e-4


@dataclass(frozen=True)
class PropagatorConfig:
    """Integrator settings. ``time_step`` in ns, must resolve the protocol."""

    time_step: float = DEFAULT_TIME_STEP

    def __post_init__(self) -> None:
        if not self.time_step > 0.0:
            raise ValueError("time_step must be positive")


@dataclass(frozen=True)
class SpectrumTrace:
    """Instantaneous spectrum along a protocol.

    ``energies[i, k]`` is the k-th eigenenergy at ``times[i]`` measured from
    the instantaneous ground energy, so column 0 is identically zero.
    """

    times: np.ndarray
    energies: np.ndarray


def step_unitary(h: np.ndarray, dt: float) -> np.ndarray:
    """Exact exponential exp(-i*h*dt) of a frozen Hermitian matrix."""
    energies, states = np.linalg.eigh(h)
    phases = np.exp(-1j * energies * dt)
    return (states * phases) @ states.conj().T


def _grid(span: float, dt: float):
    """Number of full steps and remainder length tiling ``span``."""
    n_full = int(np.floor(span / dt * (1.0 + 1e-12) + 1e-9))
    remainder = span - n_full * dt
    if remainder < 1e-9 * dt:
        remainder = 0.0
    return n_full, remainder

def evolve(
    params: DeviceParams,
    protocol,
    config: PropagatorConfig,
    t_start: float = 0.0,
    t_stop: float | None = None,
) -> np.ndarray:
    """Time-ordered propagator of the driven device over [t_start, t_stop].

    Later-time step factors multiply on the left. Defaults to the full
    protocol window. The step size must resolve the protocol: at least 100
    steps per duration are required.
    """
    duration = protocol.duration
    if t_stop is None:
        t_stop = duration
    if not 0.0 <= t_start < t_stop <= duration:
        raise ValueError("need 0 <= t_start < t_stop <= protocol duration")
    dt = config.time_step
    if dt > duration / 100.0:
        raise ValueError(
            f"time_step {dt} too coarse for duration {duration}; "
            "need at least 100 steps"
        )
    n_full, remainder = _grid(t_stop - t_start, dt)
    u = np.eye(params.n_charges, dtype=complex)
    for j in range(n_full):
        u = _apply_step(params, protocol, t_start + (j + 0.5) * dt, dt, u)
    if remainder > 0.0:
        u = _apply_step(
            params, protocol, t_start + n_full * dt + 0.5 * remainder, remainder, u
        )
    return u


def _apply_step(params, protocol, t_mid, dt, u):
    h = build_hamiltonian(params, sample_drive(protocol, t_mid))
    energies, states = np.linalg.eigh(h)
    phases = np.exp(-1j * energies * dt)
    return states @ (phases[:, None] * (states.conj().T @ u))


def unitarity_defect(u: np.ndarray) -> float:
    """Largest elementwise magnitude of U^dagger U - 1."""
    n = u.shape[0]
    return float(np.max(np.abs(u.conj().T @ u - np.eye(n))))


def spectrum_trace(params: DeviceParams, protocol, n_samples: int) -> SpectrumTrace:
    """Sample the instantaneous spectrum at n_samples points over the protocol."""
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    times = np.linspace(0.0, protocol.duration, n_samples)
    energies = np.empty((n_samples, params.n_charges))
    for i, t in enumerate(times):
        h = build_hamiltonian(params, sample_drive(protocol, float(t)))
        levels = np.linalg.eigvalsh(h)
        energies[i] = levels - levels[0]
    return SpectrumTrace(times=times, energies=energies)


def convergence_estimate(
    params: DeviceParams, protocol, config: PropagatorConfig
) -> float:
    """Largest transition-probability drift when the step size is halved.

    Compares |U|^2 entries between runs at ``time_step`` and ``time_step/2``;
    a self-consistency error estimate for the integrator.
    """
    coarse = np.abs(evolve(params, protocol, config)) ** 2
    fine = np.abs(evolve(params, protocol, PropagatorConfig(config.time_step / 2))) ** 2
    return float(np.max(np.abs(coarse - fine)))
