"""Polarization-qubit state algebra.

Basis ordering is ``|H> = (1, 0)``, ``|V> = (0, 1)``.  Pure states are
parametrized as ``cos(theta/2)|V> + exp(i phi) sin(theta/2)|H>``, so the
Bloch sphere has ``|V>`` at the north pole, ``|D>`` on +x and ``|R>`` on +y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidStateError

ATOL = 1e-10

KET_H = np.array([1.0, 0.0], dtype=complex)
KET_V = np.array([0.0, 1.0], dtype=complex)
KET_D = (KET_H + KET_V) / math.sqrt(2)
KET_R = (KET_H + 1j * KET_V) / math.sqrt(2)

KETS = {"H": KET_H, "V": KET_V, "D": KET_D, "R": KET_R}


@dataclass(frozen=True)
class PureQubit:
    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.theta <= math.pi):
            raise InvalidStateError(f"theta must lie in [0, pi], got {self.theta}")
        object.__setattr__(self, "phi", float(self.phi) % (2 * math.pi))

    def ket(self) -> np.ndarray:
        return math.cos(self.theta / 2) * KET_V + np.exp(1j * self.phi) * math.sin(self.theta / 2) * KET_H


def projector(ket: np.ndarray) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex)
    return np.outer(ket, ket.conj())


def basis_density(label: str) -> np.ndarray:
    """Density matrix of one of the tomography states H, V, D, R."""
    return projector(KETS[label])


def hermitize(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    return (m + m.conj().T) / 2


def validate_density(rho, atol: float = ATOL) -> np.ndarray:
    """Check Hermiticity, unit trace and positivity; return the symmetrized matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidStateError(f"density matrix must be square, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > atol:
        raise InvalidStateError("density matrix is not Hermitian")
    rho = hermitize(rho)
    if abs(np.trace(rho).real - 1.0) > atol:
        raise InvalidStateError(f"density matrix has trace {np.trace(rho).real}")
    if np.linalg.eigvalsh(rho).min() < -atol:
        raise InvalidStateError("density matrix has a negative eigenvalue")
    return rho


def psd_sqrt(m: np.ndarray, atol: float = ATOL) -> np.ndarray:
    """Square root of a positive semidefinite matrix via eigendecomposition.

    Eigenvalues in ``[-atol, 0)`` are clamped to zero; anything more negative
    raises :class:`InvalidStateError`.  Positive eigenvalues at the rounding
    level of the decomposition are zeroed as well, since their square roots
    (~1e-8) would otherwise leak into fidelities.
    """
    w, v = np.linalg.eigh(hermitize(m))
    if w.min() < -atol:
        raise InvalidStateError(f"matrix is not positive semidefinite (eigenvalue {w.min():.3g})")
    noise = 4 * len(w) * np.finfo(float).eps * max(abs(w).max(), 1.0)
    w = np.where(w > noise, w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def density_from_pure(state: PureQubit) -> np.ndarray:
    return projector(state.ket())


def bloch_from_density(rho) -> np.ndarray:
    rho = validate_density(rho)
    x = 2 * rho[0, 1].real
    y = -2 * rho[0, 1].imag
    z = (rho[1, 1] - rho[0, 0]).real
    return np.array([x, y, z])


def density_from_bloch(v) -> np.ndarray:
    x, y, z = (float(c) for c in v)
    if math.sqrt(x * x + y * y + z * z) > 1 + ATOL:
        raise InvalidStateError(f"Bloch vector norm exceeds 1: {(x, y, z)}")
    return 0.5 * np.array([[1 - z, x - 1j * y], [x + 1j * y, 1 + z]], dtype=complex)


def purity(rho) -> float:
    rho = np.asarray(rho, dtype=complex)
    return float(np.real(np.trace(rho @ rho)))


def state_fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``Tr sqrt(sqrt(rho) sigma sqrt(rho))`` (not squared)."""
    rho = validate_density(rho)
    sigma = validate_density(sigma)
    # Tr sqrt(sqrt(rho) sigma sqrt(rho)) equals the nuclear norm of sqrt(rho) sqrt(sigma)
    f = float(np.linalg.svd(psd_sqrt(rho) @ psd_sqrt(sigma), compute_uv=False).sum())
    return min(max(f, 0.0), 1.0)


# squared concurrence below this is rounding noise; its square root would be ~1e-8
CONCURRENCE_FLOOR = 64 * np.finfo(float).eps


def concurrence_from_reduced(rho_p) -> float:
    """Concurrence of a pure bipartite state from one of its reduced states."""
    c2 = 2.0 * (1.0 - purity(rho_p))
    return math.sqrt(c2) if c2 > CONCURRENCE_FLOOR else 0.0


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_json(obj: dict) -> np.ndarray:
    return np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
