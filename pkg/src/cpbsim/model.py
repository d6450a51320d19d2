"""Charge-basis model of a flux-biased Cooper-pair box.

Conventions used throughout the package: hbar = 1, energies in rad/ns, time
in ns, external flux in units of the flux quantum. The charge basis is
truncated to an odd number of states N, with labels n running over
-(N-1)/2 .. (N-1)/2 (Cooper pairs on the island relative to neutrality).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

# k_B / hbar in rad/ns per kelvin, from CODATA-18 k_B = 1.380649e-23 J/K and
# hbar = 1.054571817e-34 J s. Unit-tested against an independent computation.
KB_OVER_HBAR = 130.920339127

#: Charge labels retained by the measurement-friendly 5-state window.
DEFAULT_SUBSPACE = (-2, -1, 0, 1, 2)


@dataclass(frozen=True)
class DeviceParams:
    """Static device parameters.

    Parameters
    ----------
    charging_energy : float
        E_C in rad/ns. Must be positive.
    josephson_energy_total : float
        Junction-sum Josephson energy in rad/ns. Non-negative.
    asymmetry : float
        Junction asymmetry in [0, 1]. Zero restores a time-reversal-symmetric
        device; the flux-tunable imaginary tunneling term scales with it.
    n_charges : int
        Charge-basis truncation N, odd and >= 5.
    """

    charging_energy: float = TWO_PI * 3.0
    josephson_energy_total: float = TWO_PI * 10.0
    asymmetry: float = 0.05
    n_charges: int = 51

    def __post_init__(self) -> None:
        if not self.charging_energy > 0.0:
            raise ValueError("charging_energy must be positive")
        if self.josephson_energy_total < 0.0:
            raise ValueError("josephson_energy_total must be non-negative")
        if not 0.0 <= self.asymmetry <= 1.0:
            raise ValueError("asymmetry must lie in [0, 1]")
        if self.n_charges < 5 or self.n_charges % 2 == 0:
            raise ValueError("n_charges must be odd and >= 5")


@dataclass(frozen=True)
class BiasPoint:
    """Instantaneous external bias: flux in flux quanta, gate charge in 2e."""

    flux: float
    gate_charge: float


@dataclass(frozen=True)
class EigenSystem:
    """Eigendecomposition with a fixed phase convention.

    ``energies`` ascending; ``states[:, k]`` is the k-th eigenvector with its
    largest-magnitude component rotated to be real and positive.
    """

    energies: np.ndarray
    states: np.ndarray


def charge_labels(params: DeviceParams) -> np.ndarray:
    """Integer charge labels of the truncated basis, ascending."""
    half = (params.n_charges - 1) // 2
    return np.arange(-half, half + 1)


def label_index(params: DeviceParams, label: int) -> int:
    """Row/column index of charge label ``label``."""
    half = (params.n_charges - 1) // 2
    if not -half <= label <= half:
        raise ValueError(f"charge label {label} outside truncation +-{half}")
    return int(label) + half


def josephson_energy(params: DeviceParams, flux: float) -> complex:
    """Complex flux-tunable tunneling energy.

    Real part cos(pi*flux), imaginary part asymmetry*sin(pi*flux), both
    scaled by the junction-sum energy. Evaluated through |flux| and
    conjugated for negative flux, so the conjugation law
    ``josephson_energy(-flux) == conj(josephson_energy(flux))`` holds with
    the exact same floating-point operations mirrored.
    """
    a = abs(flux)
    value = params.josephson_energy_total * complex(
        math.cos(math.pi * a), params.asymmetry * math.sin(math.pi * a)
    )
    return value if flux >= 0.0 else value.conjugate()


def beta_ratio(params: DeviceParams, flux: float) -> float:
    """|E_J| over the charging scale 4*E_C; << 1 means near-pure charge states."""
    return abs(josephson_energy(params, flux)) / (4.0 * params.charging_energy)


def build_hamiltonian(params: DeviceParams, bias: BiasPoint) -> np.ndarray:
    """Tridiagonal charge-basis Hamiltonian at a frozen bias point.

    Diagonal: 4*E_C*(n - n_g)^2. The tunneling term couples neighboring
    charge states with -E_J/2 on the (n, n+1) side and its conjugate below,
    so the matrix is Hermitian by construction.
    """
    n = charge_labels(params).astype(float)
    ej = josephson_energy(params, bias.flux)
    h = np.zeros((params.n_charges, params.n_charges), dtype=complex)
    np.fill_diagonal(h, 4.0 * params.charging_energy * (n - bias.gate_charge) ** 2)
    idx = np.arange(params.n_charges - 1)
    h[idx, idx + 1] = -0.5 * ej
    h[idx + 1, idx] = -0.5 * ej.conjugate()
    return h


def time_reverse_hamiltonian(h: np.ndarray) -> np.ndarray:
    """Antiunitary time-reversal image of ``h`` in the charge basis.

    The basis states are invariant under time reversal with unit phase, so
    the operation is plain elementwise conjugation (equivalently, transpose
    for a Hermitian matrix). Involutive to the bit.
    """
    return np.conj(h)


def hermiticity_defect(h: np.ndarray) -> float:
    """Largest elementwise magnitude of H - H^dagger."""
    return float(np.max(np.abs(h - h.conj().T)))


def eigensystem(h: np.ndarray) -> EigenSystem:
    """Eigendecomposition of a Hermitian operator, phases pinned.

    Each eigenvector is rotated so that its largest-magnitude component is
    real and positive, which makes the output deterministic across runs and
    LAPACK builds (up to roundoff).
    """
    defect = hermiticity_defect(h)
    scale = float(np.max(np.abs(h))) or 1.0
    if defect > 1e-10 * scale:
        raise ValueError(f"operator is not Hermitian (defect {defect:.3e})")
    energies, states = np.linalg.eigh(h)
    states = states.copy()
    for k in range(states.shape[1]):
        lead = states[np.argmax(np.abs(states[:, k])), k]
        mag = abs(lead)
        if mag > 0.0:
            states[:, k] *= lead.conjugate() / mag
    return EigenSystem(energies=energies, states=states)


def charge_operator(params: DeviceParams) -> np.ndarray:
    """Island charge-number operator (diagonal in the charge basis)."""
    return np.diag(charge_labels(params).astype(float))
