"""Phase masks, beam profiles and the channels they induce on polarization.

The SLM imprints ``a(x, y) = 2 pi g(x, y) / 255`` on the horizontal
component only.  Masks are stored as 8-bit gray levels; levels that stand in
for a non-integer gray value (``round(255/2) = 128`` for a pi shift) carry
their nominal value in ``Mask.nominal_levels`` so the analysis can use the
intended phase while files stay hardware-displayable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

from .errors import InvalidStateError, ParameterError
from .qchannel import general_slm_channel
from .qpolar import CONCURRENCE_FLOOR, PureQubit

SLM_WIDTH = 1920
SLM_HEIGHT = 1080
PIXEL_PITCH_UM = 8.0
DEFAULT_CELL_PX = 100

HALF_WAVE_NOMINAL = 255 / 2
HALF_WAVE_LEVEL = 128  # round(127.5)

NORM_TOL = 1e-9


def gray_to_phase(g: float) -> float:
    """Phase for a gray value in [0, 255]; fractional values are allowed."""
    g = float(g)
    if not (0.0 <= g <= 255.0):
        raise ParameterError(f"gray level must lie in [0, 255], got {g}")
    return 2 * math.pi * g / 255


@dataclass(frozen=True, eq=False)
class Mask:
    gray: np.ndarray
    pixel_pitch_um: float = PIXEL_PITCH_UM
    nominal_levels: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        g = np.asarray(self.gray)
        if g.ndim != 2 or min(g.shape) < 1:
            raise ParameterError(f"mask must be a non-empty 2D grid, got shape {g.shape}")
        if g.min() < 0 or g.max() > 255 or not np.all(np.equal(np.mod(g, 1), 0)):
            raise ParameterError("gray levels must be integers in [0, 255]")
        g = g.astype(np.uint8)
        g.flags.writeable = False
        object.__setattr__(self, "gray", g)
        object.__setattr__(self, "nominal_levels", {int(k): float(v) for k, v in self.nominal_levels.items()})

    @property
    def height(self) -> int:
        return self.gray.shape[0]

    @property
    def width(self) -> int:
        return self.gray.shape[1]

    def level_phases(self, ideal: bool = True) -> np.ndarray:
        """Lookup table of the phase for each of the 256 levels."""
        lut = 2 * np.pi * np.arange(256) / 255
        if ideal:
            for level, nominal in self.nominal_levels.items():
                lut[level] = gray_to_phase(nominal)
        return lut

    def phase(self, ideal: bool = True) -> np.ndarray:
        return self.level_phases(ideal)[self.gray]


def uniform_mask(g: float, width: int = SLM_WIDTH, height: int = SLM_HEIGHT) -> Mask:
    gray_to_phase(g)
    level = int(round(g))
    nominal = {} if level == g else {level: float(g)}
    return Mask(np.full((height, width), level, dtype=np.uint8), nominal_levels=nominal)


def random_phase_flip_mask(
    q: float,
    cell_px: int = DEFAULT_CELL_PX,
    width: int = SLM_WIDTH,
    height: int = SLM_HEIGHT,
    rng_seed: Optional[int] = None,
) -> Mask:
    """Tile square cells from the origin; each is a pi cell with probability ``q``.

    Pixels outside the last full cell in either direction stay at level 0.
    """
    if not (0.0 <= q <= 1.0):
        raise ParameterError(f"q must lie in [0, 1], got {q}")
    if cell_px < 1:
        raise ParameterError("cell_px must be >= 1")
    ny, nx = height // cell_px, width // cell_px
    flips = np.random.default_rng(rng_seed).random((ny, nx)) < q
    gray = np.zeros((height, width), dtype=np.uint8)
    cells = np.where(flips, HALF_WAVE_LEVEL, 0).astype(np.uint8)
    gray[: ny * cell_px, : nx * cell_px] = np.kron(cells, np.ones((cell_px, cell_px), dtype=np.uint8))
    return Mask(gray, nominal_levels={HALF_WAVE_LEVEL: HALF_WAVE_NOMINAL})


def cell_flips(mask: Mask, cell_px: int = DEFAULT_CELL_PX) -> np.ndarray:
    """Boolean grid of full cells carrying the pi level."""
    ny, nx = mask.height // cell_px, mask.width // cell_px
    corners = mask.gray[: ny * cell_px : cell_px, : nx * cell_px : cell_px]
    return corners == HALF_WAVE_LEVEL


def realized_fraction(mask: Mask, cell_px: int = DEFAULT_CELL_PX) -> float:
    flips = cell_flips(mask, cell_px)
    return float(flips.mean()) if flips.size else 0.0


@dataclass(frozen=True, eq=False)
class Wavefunction:
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.ndim != 2:
            raise ParameterError("wavefunction must be sampled on a 2D grid")
        norm = float(np.sum(np.abs(amp) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidStateError(f"wavefunction is not normalized (sum |psi|^2 = {norm})")
        amp.flags.writeable = False
        object.__setattr__(self, "amplitudes", amp)

    @property
    def shape(self) -> tuple[int, int]:
        return self.amplitudes.shape

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @classmethod
    def normalized(cls, amplitudes) -> "Wavefunction":
        amp = np.asarray(amplitudes, dtype=complex)
        return cls(amp / math.sqrt(np.sum(np.abs(amp) ** 2)))

    @classmethod
    def uniform(cls, width: int, height: int, rows: slice = slice(None), cols: slice = slice(None)) -> "Wavefunction":
        amp = np.zeros((height, width), dtype=complex)
        amp[rows, cols] = 1.0
        return cls.normalized(amp)

    @classmethod
    def full_cells(cls, width: int = SLM_WIDTH, height: int = SLM_HEIGHT, cell_px: int = DEFAULT_CELL_PX) -> "Wavefunction":
        """Uniform amplitude over the region tiled by full mask cells."""
        ny, nx = height // cell_px, width // cell_px
        if nx == 0 or ny == 0:
            raise ParameterError("screen holds no full cell")
        return cls.uniform(width, height, slice(0, ny * cell_px), slice(0, nx * cell_px))

    @classmethod
    def gaussian(cls, width: int, height: int, waist_px: float, center: Optional[tuple[float, float]] = None) -> "Wavefunction":
        cx, cy = center if center is not None else ((width - 1) / 2, (height - 1) / 2)
        y, x = np.mgrid[0:height, 0:width]
        return cls.normalized(np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / waist_px**2))

    def to_json(self) -> dict:
        h, w = self.shape
        return {
            "re": self.amplitudes.real.ravel().tolist(),
            "im": self.amplitudes.imag.ravel().tolist(),
            "width": w,
            "height": h,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Wavefunction":
        shape = (obj["height"], obj["width"])
        amp = np.asarray(obj["re"], dtype=float).reshape(shape) + 1j * np.asarray(obj["im"], dtype=float).reshape(shape)
        return cls(amp)


@dataclass(frozen=True)
class SpatialAverage:
    value: complex

    @property
    def magnitude(self) -> float:
        return abs(self.value)

    @property
    def phase(self) -> float:
        return math.atan2(self.value.imag, self.value.real) % (2 * math.pi)


def _check_pair(mask: Mask, psi: Wavefunction) -> None:
    if psi.shape != mask.gray.shape:
        raise ParameterError(f"mask is {mask.gray.shape} but wavefunction is {psi.shape}")


def spatial_phase_average(mask: Mask, psi: Wavefunction, ideal: bool = True) -> SpatialAverage:
    """Intensity-weighted mean of ``exp(i a(x, y))``.

    Weights are accumulated per gray level first (pairwise summation), so the
    result does not depend on how the grid is partitioned.
    """
    _check_pair(mask, psi)
    gray, intensity = mask.gray.ravel(), psi.intensity.ravel()
    lut = mask.level_phases(ideal)
    value = 0j
    for level in np.unique(gray):
        value += np.sum(intensity[gray == level]) * np.exp(1j * lut[level])
    return SpatialAverage(complex(value))


def p_effective(p: float, magnitude: float) -> float:
    return (1 - (1 - 2 * p) * magnitude) / 2


def effective_channel(mask: Mask, psi: Wavefunction, p: float, ideal: bool = True) -> list[np.ndarray]:
    if not (0.0 <= p <= 1.0):
        raise ParameterError(f"p must lie in [0, 1], got {p}")
    avg = spatial_phase_average(mask, psi, ideal)
    p_eff = min(max(p_effective(p, avg.magnitude), 0.0), 1.0)
    return general_slm_channel(avg.phase, p_eff)


def q_eff(p: float, q: float) -> float:
    for name, v in (("p", p), ("q", q)):
        if not (0.0 <= v <= 1.0):
            raise ParameterError(f"{name} must lie in [0, 1], got {v}")
    return (1 - (1 - 2 * p) * (1 - 2 * q)) / 2


def q_for_target(p: float, target: float) -> float:
    """Mask parameter ``q`` that yields an effective decoherence ``target`` given device ``p``."""
    if not (0.0 <= p < 0.5):
        raise ParameterError(f"p must lie in [0, 1/2), got {p}")
    if not (p <= target <= 0.5):
        raise ParameterError(f"target {target} is below the device floor p = {p}")
    return (1 - (1 - 2 * target) / (1 - 2 * p)) / 2


def reduced_state(alpha: PureQubit, average: complex, p: float = 0.0) -> np.ndarray:
    """Closed-form polarization state after the mask, optionally with device dephasing ``p``."""
    s2, c2 = math.sin(alpha.theta / 2) ** 2, math.cos(alpha.theta / 2) ** 2
    coh = np.exp(1j * alpha.phi) * average * (1 - 2 * p) * math.sin(alpha.theta) / 2
    return np.array([[s2, coh], [np.conj(coh), c2]], dtype=complex)


def joint_evolve_and_trace(mask: Mask, psi: Wavefunction, alpha: PureQubit, ideal: bool = True) -> np.ndarray:
    """Apply the mask pixel by pixel to psi (x) alpha and trace out position."""
    _check_pair(mask, psi)
    ket = alpha.ket()
    amp = psi.amplitudes.ravel()
    joint = np.empty((amp.size, 2), dtype=complex)
    joint[:, 0] = amp * np.exp(1j * mask.phase(ideal).ravel()) * ket[0]
    joint[:, 1] = amp * ket[1]
    return joint.T @ joint.conj()


def mask_concurrence(theta: float, mask: Mask, psi: Wavefunction, ideal: bool = True) -> float:
    mag = spatial_phase_average(mask, psi, ideal).magnitude
    loss = 1.0 - mag * mag
    return abs(math.sin(theta)) * math.sqrt(loss) if loss > CONCURRENCE_FLOOR else 0.0


# --- files -------------------------------------------------------------------


def write_pgm(mask: Mask, path) -> None:
    header = f"P5\n{mask.width} {mask.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + mask.gray.tobytes())


def read_pgm(path, nominal_levels: Optional[Mapping[int, float]] = None) -> Mask:
    data = Path(path).read_bytes()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end : end + 1].isspace():
            end += 1
        fields.append(data[pos:end])
        pos = end
    pos += 1  # single whitespace byte before the raster
    magic, width, height, maxval = fields[0], int(fields[1]), int(fields[2]), int(fields[3])
    if magic != b"P5" or maxval != 255:
        raise ParameterError("only 8-bit binary PGM (P5, maxval 255) is supported")
    gray = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos).reshape(height, width)
    return Mask(gray.copy(), nominal_levels=nominal_levels or {})


def mask_sidecar(mask: Mask, q: float, cell_px: int, seed: Optional[int]) -> dict:
    return {
        "q": q,
        "cell_px": cell_px,
        "seed": seed,
        "realized_fraction": realized_fraction(mask, cell_px),
        "width": mask.width,
        "height": mask.height,
        "pixel_pitch_um": mask.pixel_pitch_um,
        "nominal_levels": {str(k): v for k, v in mask.nominal_levels.items()},
    }


def load_mask(path) -> Mask:
    """Read a PGM mask together with its JSON sidecar, if one exists."""
    path = Path(path)
    sidecar = path.with_suffix(".json")
    nominal = {}
    if sidecar.exists():
        meta = json.loads(sidecar.read_text())
        nominal = {int(k): float(v) for k, v in meta.get("nominal_levels", {}).items()}
    return read_pgm(path, nominal)
