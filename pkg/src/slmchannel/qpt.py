"""Single-qubit process tomography from coincidence counts.

Preparations and projections both run over the four states H, V, D, R.  The
count table is indexed ``counts[prep, proj]`` in that order.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InsufficientDataError, ParameterError
from .qchannel import apply_channel, choi_partial_trace_system, fit_phase_flip_family
from .qpolar import basis_density, bloch_from_density, hermitize, purity

BASIS = ("H", "V", "D", "R")

_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
_PAULI_Y = np.array([[0, -1j], [1j, 0]])
# |V> is the +z pole
_PAULI_Z = np.diag([-1.0, 1.0]).astype(complex)


@dataclass
class TomographySet:
    counts: np.ndarray
    nominal_per_setting: int
    seed: Optional[int] = None

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (4, 4):
            raise ParameterError(f"count table must be 4x4, got {self.counts.shape}")
        if (self.counts < 0).any():
            raise ParameterError("counts must be non-negative")

    def row(self, prep: str) -> np.ndarray:
        return self.counts[BASIS.index(prep)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["prep", "proj", "counts"])
        for i, prep in enumerate(BASIS):
            for j, proj in enumerate(BASIS):
                w.writerow([prep, proj, int(self.counts[i, j])])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, nominal_per_setting: int = 0, seed: Optional[int] = None) -> "TomographySet":
        counts = np.full((4, 4), -1, dtype=np.int64)
        for rec in csv.DictReader(io.StringIO(text)):
            counts[BASIS.index(rec["prep"]), BASIS.index(rec["proj"])] = int(rec["counts"])
        if (counts < 0).any():
            raise ParameterError("CSV does not contain all 16 (prep, proj) rows")
        return cls(counts, nominal_per_setting, seed)

    def to_json(self) -> dict:
        return {
            "counts": {p: dict(zip(BASIS, map(int, self.row(p)))) for p in BASIS},
            "nominal_per_setting": int(self.nominal_per_setting),
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TomographySet":
        counts = [[obj["counts"][p][q] for q in BASIS] for p in BASIS]
        return cls(counts, obj["nominal_per_setting"], obj.get("seed"))


def simulate_counts(
    kraus: Sequence[np.ndarray],
    n_per_setting: int,
    rng_seed: Optional[int] = None,
    noiseless: bool = False,
) -> TomographySet:
    """Forward model: Poisson counts with mean ``N * Tr(Pi rho_out)``."""
    if n_per_setting < 1:
        raise ParameterError("n_per_setting must be >= 1")
    probs = np.empty((4, 4))
    for i, prep in enumerate(BASIS):
        out = apply_channel(kraus, basis_density(prep))
        for j, proj in enumerate(BASIS):
            probs[i, j] = np.real(np.trace(basis_density(proj) @ out))
    means = n_per_setting * np.clip(probs, 0.0, None)
    if noiseless:
        counts = np.rint(means)
    else:
        counts = np.random.default_rng(rng_seed).poisson(means)
    return TomographySet(counts.astype(np.int64), n_per_setting, None if noiseless else rng_seed)


def project_to_physical(m) -> np.ndarray:
    """Nearest density matrix by eigenvalue clamping and trace renormalization."""
    w, v = np.linalg.eigh(hermitize(m))
    w = np.clip(w, 0.0, None)
    total = w.sum()
    if total <= 0.0:
        raise InsufficientDataError("matrix has no positive part to normalize")
    return hermitize((v * (w / total)) @ v.conj().T)


def _linear_state_estimate(row) -> np.ndarray:
    n_h, n_v, n_d, n_r = (float(c) for c in row)
    total = n_h + n_v
    if total <= 0:
        raise InsufficientDataError("no counts in the H/V projections")
    x = 2 * n_d / total - 1
    y = 2 * n_r / total - 1
    z = (n_v - n_h) / total
    return 0.5 * (np.eye(2) + x * _PAULI_X + y * _PAULI_Y + z * _PAULI_Z)


def state_from_counts(row) -> np.ndarray:
    """Reconstruct a polarization state from (n_H, n_V, n_D, n_R)."""
    return project_to_physical(_linear_state_estimate(row))


def output_states(t: TomographySet) -> dict[str, np.ndarray]:
    return {prep: state_from_counts(t.row(prep)) for prep in BASIS}


def choi_from_outputs(outs: dict[str, np.ndarray]) -> np.ndarray:
    e_hh, e_vv = outs["H"], outs["V"]
    e_hv = outs["D"] + 1j * outs["R"] - (1 + 1j) / 2 * (e_hh + e_vv)
    e_vh = e_hv.conj().T
    choi = np.zeros((4, 4), dtype=complex)
    for (m, n), image in {(0, 0): e_hh, (0, 1): e_hv, (1, 0): e_vh, (1, 1): e_vv}.items():
        unit = np.zeros((2, 2))
        unit[m, n] = 1
        choi += 0.5 * np.kron(unit, image)
    return project_to_physical(choi)


def choi_from_tomography(t: TomographySet) -> np.ndarray:
    return choi_from_outputs(output_states(t))


def tp_defect(choi) -> float:
    """Largest deviation of the ancilla marginal from I/2 (trace-preservation diagnostic)."""
    return float(np.max(np.abs(choi_partial_trace_system(choi) - np.eye(2) / 2)))


def derived_scalars(t: TomographySet, a_fixed: Optional[float] = None) -> dict[str, float]:
    """Fit and per-input state summaries for one count table.

    With ``a_fixed=None`` the rotation angle is fitted along with ``p``.
    """
    outs = output_states(t)
    fit = fit_phase_flip_family(choi_from_outputs(outs), fit_phase=a_fixed is None, a_fixed=a_fixed)
    scalars = {"p": fit.p, "a": fit.a, "fidelity": fit.fidelity}
    for prep, rho in outs.items():
        scalars[f"purity_{prep}"] = purity(rho)
        for axis, value in zip("xyz", bloch_from_density(rho)):
            scalars[f"bloch_{prep}_{axis}"] = float(value)
    return scalars


@dataclass
class ErrorReport:
    stats: dict[str, tuple[float, float]]
    trials: int
    seed: Optional[int]
    samples: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def mean(self, name: str) -> float:
        return self.stats[name][0]

    def std(self, name: str) -> float:
        return self.stats[name][1]

    def to_json(self) -> dict:
        out: dict = {k: {"mean": m, "std": s} for k, (m, s) in self.stats.items()}
        out["trials"] = self.trials
        out["seed"] = self.seed
        return out


def monte_carlo_errors(
    t: TomographySet,
    trials: int,
    rng_seed: Optional[int] = None,
    a_fixed: Optional[float] = None,
) -> ErrorReport:
    """Poisson-resample the observed counts and collect statistics of the derived scalars.

    Trial ``k`` draws from its own generator spawned from ``rng_seed``, so the
    report does not depend on evaluation order.
    """
    if trials < 2:
        raise ParameterError("trials must be >= 2")
    children = np.random.SeedSequence(rng_seed).spawn(trials)
    rows: list[dict[str, float]] = []
    for child in children:
        resampled = np.random.default_rng(child).poisson(t.counts)
        rows.append(derived_scalars(TomographySet(resampled, t.nominal_per_setting), a_fixed))
    samples = {k: np.array([r[k] for r in rows]) for k in rows[0]}
    stats = {k: (float(v.mean()), float(v.std(ddof=1))) for k, v in samples.items()}
    if a_fixed is not None:
        del stats["a"]
    return ErrorReport(stats, trials, rng_seed, samples)

