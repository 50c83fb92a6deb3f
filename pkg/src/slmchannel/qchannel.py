"""Single-qubit CPTP channels: Kraus sets, Choi duals and the phase-flip fit.

A Kraus set is a plain list of 2x2 complex arrays.  Choi matrices use the
trace-one convention ``(I (x) E)(|Phi+><Phi+|)`` with the ancilla in the
first tensor slot, ``|Phi+> = (|HH> + |VV>)/sqrt(2)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InvalidChannelError, InvariantViolationError, ParameterError
from .qpolar import matrix_from_json, matrix_to_json, psd_sqrt, state_fidelity, validate_density

TWO_PI = 2 * math.pi

PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
PHI_MINUS = np.array([1, 0, 0, -1], dtype=complex) / math.sqrt(2)

SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]])

# Rotation exchanging the H/V axis with the D/A axis (Hadamard).
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)

P_GRID_STEP = 1e-3
A_GRID_POINTS = 256
REFINE_TOL = 1e-6


def _check_probability(name: str, value: float) -> float:
    value = float(value)
    if not (0.0 <= value <= 1.0):
        raise ParameterError(f"{name} must lie in [0, 1], got {value}")
    return value


def slm_uniform_channel(a: float, p: float) -> list[np.ndarray]:
    """Phase rotation by ``a`` on |H> followed by a phase flip of strength ``p``.

    The two identically zero operators are kept so the set has four members.
    """
    p = _check_probability("p", p)
    a = float(a) % TWO_PI
    ph = np.exp(1j * a)
    m0 = math.sqrt(1 - p) * np.diag([ph, 1.0])
    m1 = math.sqrt(p) * np.diag([ph, -1.0])
    zero = np.zeros((2, 2), dtype=complex)
    return [m0, m1, zero, zero.copy()]


def general_slm_channel(a_psi: float, p_eff: float) -> list[np.ndarray]:
    """Kraus set for an arbitrary mask, given the mean phase and effective flip strength."""
    return slm_uniform_channel(a_psi, p_eff)


def phase_flip_channel(q: float) -> list[np.ndarray]:
    q = _check_probability("q", q)
    return [math.sqrt(1 - q) * np.eye(2, dtype=complex), math.sqrt(q) * SIGMA_Z.copy()]


def bit_flip_channel(q: float) -> list[np.ndarray]:
    return conjugate_channel(phase_flip_channel(q), HADAMARD)


def completeness_defect(kraus: Sequence[np.ndarray]) -> float:
    """Operator norm of ``sum M^dagger M - I``."""
    total = sum(np.asarray(m).conj().T @ np.asarray(m) for m in kraus)
    return float(np.linalg.norm(total - np.eye(2), ord=2))


def _check_complete(kraus, tol: float) -> None:
    defect = completeness_defect(kraus)
    if defect > tol:
        raise InvariantViolationError(f"Kraus set is not trace preserving (defect {defect:.3g})")


def apply_channel(kraus: Sequence[np.ndarray], rho, tol: float = 1e-8) -> np.ndarray:
    _check_complete(kraus, tol)
    rho = np.asarray(rho, dtype=complex)
    out = np.zeros((2, 2), dtype=complex)
    for m in kraus:
        out += m @ rho @ m.conj().T
    return out


def conjugate_channel(kraus: Sequence[np.ndarray], u) -> list[np.ndarray]:
    """Return ``{U M U^dagger}``, the channel seen in a rotated basis."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or np.max(np.abs(u.conj().T @ u - np.eye(2))) > 1e-10:
        raise ParameterError("conjugating matrix must be a 2x2 unitary")
    return [u @ m @ u.conj().T for m in kraus]


def choi_from_kraus(kraus: Sequence[np.ndarray]) -> np.ndarray:
    _check_complete(kraus, 1e-8)
    choi = np.zeros((4, 4), dtype=complex)
    for m in kraus:
        w = np.kron(np.eye(2), m) @ PHI_PLUS
        choi += np.outer(w, w.conj())
    return choi


def choi_partial_trace_system(choi) -> np.ndarray:
    """Reduced ancilla state; equals I/2 for a trace-preserving map."""
    return np.einsum("asbs->ab", np.asarray(choi).reshape(2, 2, 2, 2))


def kraus_from_choi(choi, tol: float = 1e-10, check_tp: bool = True) -> list[np.ndarray]:
    """Canonical Kraus operators from the eigendecomposition of a Choi matrix.

    ``check_tp=False`` admits reconstructed (noisy) duals whose ancilla
    marginal drifts from I/2; the result is then only approximately complete.
    """
    choi = validate_density(choi, atol=1e-8)
    tp_defect = np.max(np.abs(choi_partial_trace_system(choi) - np.eye(2) / 2))
    if check_tp and tp_defect > 1e-6:
        raise InvalidChannelError(f"Choi matrix is not trace preserving (defect {tp_defect:.3g})")
    w, v = np.linalg.eigh(choi)
    kraus = []
    for lam, vec in zip(w[::-1], v[:, ::-1].T):
        if lam > tol:
            # vec[2*m + s] = K[s, m] / sqrt(2)
            kraus.append(math.sqrt(2 * lam) * vec.reshape(2, 2).T)
    return kraus


def channel_fidelity(c1, c2) -> float:
    return state_fidelity(c1, c2)


def channel_action_on_basis(kraus: Sequence[np.ndarray]) -> np.ndarray:
    """Images of |H><H|, |H><V|, |V><H|, |V><V| stacked into shape (4, 2, 2)."""
    out = []
    for i in range(2):
        for j in range(2):
            e = np.zeros((2, 2), dtype=complex)
            e[i, j] = 1
            out.append(sum(m @ e @ m.conj().T for m in kraus))
    return np.array(out)


# --- fitting ---------------------------------------------------------------


def _model_vectors(a):
    a = np.asarray(a, dtype=float)
    ph = np.exp(1j * a) / math.sqrt(2)
    zero = np.zeros_like(ph)
    edge = np.full_like(ph, 1 / math.sqrt(2))
    # (I (x) diag(e^{ia}, +-1)) |Phi+>
    plus = np.stack([ph, zero, zero, edge], axis=-1)
    minus = np.stack([ph, zero, zero, -edge], axis=-1)
    return plus, minus


def _outer(w):
    return w[..., :, None] * w[..., None, :].conj()


def model_choi(a, p) -> np.ndarray:
    """Choi matrices of ``slm_uniform_channel(a, p)``, broadcast over ``a`` and ``p``.

    Returns an array of shape ``broadcast(a, p).shape + (4, 4)``.
    """
    a, p = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(p, dtype=float))
    plus, minus = _model_vectors(a)
    return (1 - p)[..., None, None] * _outer(plus) + p[..., None, None] * _outer(minus)


def _model_choi_sqrt(a, p) -> np.ndarray:
    # the two model eigenvectors are orthogonal, so the square root is exact
    a, p = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(p, dtype=float))
    plus, minus = _model_vectors(a)
    return np.sqrt(1 - p)[..., None, None] * _outer(plus) + np.sqrt(p)[..., None, None] * _outer(minus)


def _fidelity_batch(sqrt_rho: np.ndarray, sqrt_sigmas: np.ndarray) -> np.ndarray:
    # nuclear norm of sqrt(rho) sqrt(sigma); singular values stay accurate
    # where eigenvalues of sqrt(rho) sigma sqrt(rho) would lose half their digits
    return np.linalg.svd(sqrt_rho @ sqrt_sigmas, compute_uv=False).sum(axis=-1)


def _golden_max(f: Callable[[float], float], lo: float, hi: float, tol: float) -> tuple[float, float]:
    """Maximize a unimodal scalar function on [lo, hi] by golden-section search."""
    invphi = (math.sqrt(5) - 1) / 2
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = f(d)
    # the endpoints themselves are candidates (optimum on the bracket edge)
    best = max([(fc, c), (fd, d), (f(lo), lo), (f(hi), hi)], key=lambda t: (t[0], -t[1]))
    return best[1], best[0]


@dataclass(frozen=True)
class PhaseFlipFit:
    p: float
    a: float
    fidelity: float

    def to_json(self) -> dict:
        return asdict(self)


def fit_phase_flip_family(
    choi,
    fit_phase: bool = False,
    a_fixed: Optional[float] = None,
) -> PhaseFlipFit:
    """Find the member of the ``slm_uniform_channel`` family closest to ``choi``.

    Closeness is the fidelity between Choi duals.  ``p`` is searched on
    ``[0, 1/2]``; with ``fit_phase`` the rotation angle is searched too,
    otherwise it is held at ``a_fixed``.  A coarse grid locates the basin and
    golden-section search refines each coordinate; exact grid ties go to the
    smallest ``p`` and then the smallest ``a``.
    """
    if fit_phase == (a_fixed is not None):
        raise ParameterError("give exactly one of fit_phase=True or a_fixed")
    rho = validate_density(choi, atol=1e-8)
    s = psd_sqrt(rho, atol=1e-8)

    p_grid = np.linspace(0.0, 0.5, int(round(0.5 / P_GRID_STEP)) + 1)
    if fit_phase:
        a_grid = np.arange(A_GRID_POINTS) * (TWO_PI / A_GRID_POINTS)
    else:
        a_grid = np.array([float(a_fixed) % TWO_PI])

    # p-major layout so argmax (first occurrence) implements the tie-break
    fid = _fidelity_batch(s, _model_choi_sqrt(a_grid[None, :], p_grid[:, None]))
    ip, ia = np.unravel_index(np.argmax(fid), fid.shape)
    p_best, a_best, f_best = float(p_grid[ip]), float(a_grid[ia]), float(fid[ip, ia])

    def fid_at(a, p):
        return float(_fidelity_batch(s, _model_choi_sqrt(a, p)))

    p_lo, p_hi = max(p_best - P_GRID_STEP, 0.0), min(p_best + P_GRID_STEP, 0.5)
    a_step = TWO_PI / A_GRID_POINTS
    for _ in range(20 if fit_phase else 1):
        p_new, f_new = _golden_max(lambda p: fid_at(a_best, p), p_lo, p_hi, REFINE_TOL)
        if f_new > f_best:
            p_best, f_best = p_new, f_new
        if not fit_phase:
            break
        a_new, f_new = _golden_max(lambda a: fid_at(a, p_best), a_best - a_step, a_best + a_step, REFINE_TOL)
        moved = abs(a_new - a_best)
        if f_new > f_best:
            a_best, f_best = a_new, f_new
        if moved < REFINE_TOL:
            break

    a_best %= TWO_PI
    if TWO_PI - a_best < REFINE_TOL:
        a_best = 0.0
    return PhaseFlipFit(p=p_best, a=a_best, fidelity=min(f_best, 1.0))


def kraus_to_json(kraus: Sequence[np.ndarray]) -> dict:
    return {"operators": [matrix_to_json(m) for m in kraus]}


def kraus_from_json(obj: dict) -> list[np.ndarray]:
    return [matrix_from_json(m) for m in obj["operators"]]


__all__ = [
    "PhaseFlipFit",
    "apply_channel",
    "bit_flip_channel",
    "channel_action_on_basis",
    "channel_fidelity",
    "choi_from_kraus",
    "choi_partial_trace_system",
    "completeness_defect",
    "conjugate_channel",
    "fit_phase_flip_family",
    "general_slm_channel",
    "kraus_from_choi",
    "kraus_from_json",
    "kraus_to_json",
    "model_choi",
    "phase_flip_channel",
    "slm_uniform_channel",
]
