"""Command-line pipeline: ``slmchannel {qpt,sweep-q,maskgen,kraus-report,replay}``.

Every run is driven by one integer ``--seed``; each stochastic stage draws
from a generator derived from ``(seed, stage)``, and the derived integers are
written into the report so a run can be replayed exactly.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .errors import SLMChannelError
from .qchannel import (
    apply_channel,
    channel_fidelity,
    choi_from_kraus,
    fit_phase_flip_family,
    kraus_from_choi,
    kraus_to_json,
    phase_flip_channel,
    slm_uniform_channel,
)
from .qpolar import basis_density, bloch_from_density, matrix_from_json, matrix_to_json, purity
from .qpt import (
    BASIS,
    choi_from_tomography,
    monte_carlo_errors,
    output_states,
    simulate_counts,
    state_from_counts,
    tp_defect,
)
from .slm import (
    Wavefunction,
    effective_channel,
    load_mask,
    mask_sidecar,
    q_eff,
    q_for_target,
    random_phase_flip_mask,
    realized_fraction,
    spatial_phase_average,
    write_pgm,
)

log = logging.getLogger("slmchannel")

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 1, 2

STAGE_COUNTS, STAGE_MC, STAGE_MASK = 0, 1, 2

DEFAULT_N = 10_000
DEFAULT_TRIALS = 100


class SpecError(SLMChannelError, ValueError):
    """Unparseable channel specification or argument."""


# --- parsing -------------------------------------------------------------------

_PI_RE = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)?)\*?(?:pi|π)(?:/(\d+\.?\d*))?$")


def parse_angle(text: str) -> float:
    """Parse radians or a multiple of pi such as ``3pi/4``, ``-pi/2`` or ``0.5*pi``."""
    t = text.strip().replace(" ", "")
    m = _PI_RE.match(t)
    if m:
        coef = m.group(1)
        coef = 1.0 if coef in ("", "+") else -1.0 if coef == "-" else float(coef)
        return coef * math.pi / (float(m.group(2)) if m.group(2) else 1.0)
    try:
        return float(t)
    except ValueError:
        raise SpecError(f"cannot parse angle {text!r}") from None


def _parse_float(text: str, name: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise SpecError(f"cannot parse {name}={text!r}") from None


@dataclass
class ChannelSpec:
    """One of ``identity``, ``uniform:a=..,p=..``, ``pflip:q=..`` or ``mask:<path>,psi=..,p=..``."""

    kind: str
    text: str
    phases: tuple[float, ...] = (0.0,)
    p: float = 0.0
    q: float = 0.0
    mask_path: Optional[str] = None
    psi: str = "uniform"

    def members(self) -> list["ChannelSpec"]:
        """Split a multi-phase uniform spec into one spec per phase."""
        if len(self.phases) == 1:
            return [self]
        return [
            ChannelSpec("uniform", f"uniform:a={a!r},p={self.p!r}", (a,), self.p) for a in self.phases
        ]

    @property
    def a(self) -> float:
        return self.phases[0]

    def _mask_and_psi(self):
        mask = load_mask(self.mask_path)
        if self.psi == "uniform":
            sidecar = Path(self.mask_path).with_suffix(".json")
            cell_px = json.loads(sidecar.read_text()).get("cell_px") if sidecar.exists() else None
            if cell_px:
                psi = Wavefunction.full_cells(mask.width, mask.height, cell_px)
            else:
                psi = Wavefunction.uniform(mask.width, mask.height)
        else:
            psi = Wavefunction.from_json(json.loads(Path(self.psi).read_text()))
        return mask, psi

    def kraus(self) -> list[np.ndarray]:
        if self.kind in ("identity", "uniform"):
            return slm_uniform_channel(self.a, self.p)
        if self.kind == "pflip":
            return phase_flip_channel(self.q)
        mask, psi = self._mask_and_psi()
        return effective_channel(mask, psi, self.p)

    def nominal_phase(self) -> Optional[float]:
        """Rotation angle the fit should hold fixed, or None to fit it."""
        if self.kind == "identity":
            return None
        if self.kind == "uniform":
            return self.a
        if self.kind == "pflip":
            return 0.0
        mask, psi = self._mask_and_psi()
        return spatial_phase_average(mask, psi).phase


def _parse_phases(text: str, step: Optional[str]) -> tuple[float, ...]:
    if ".." not in text:
        return (parse_angle(text) % (2 * math.pi),)
    lo, hi = (parse_angle(t) for t in text.split("..", 1))
    d = parse_angle(step) if step else math.pi / 4
    if d <= 0 or hi < lo:
        raise SpecError(f"bad phase range {text!r}")
    n = int(math.floor((hi - lo) / d + 1e-9)) + 1
    return tuple((lo + k * d) % (2 * math.pi) for k in range(n))


def parse_channel_spec(text: str) -> ChannelSpec:
    text = text.strip()
    if text == "identity":
        return ChannelSpec("identity", text)
    kind, _, rest = text.partition(":")
    parts = [s for s in rest.split(",") if s]
    if kind == "mask":
        if not parts or "=" in parts[0]:
            raise SpecError("mask spec needs a path: mask:<path>,psi=<path|uniform>,p=<real>")
        path, parts = parts[0], parts[1:]
    kv = {}
    for part in parts:
        key, eq, value = part.partition("=")
        if not eq:
            raise SpecError(f"expected key=value in {part!r}")
        kv[key.strip()] = value.strip()
    try:
        if kind == "uniform":
            unknown = set(kv) - {"a", "p", "step"}
            if unknown or "a" not in kv:
                raise SpecError(f"uniform spec takes a=, p= (and step=), got {sorted(kv)}")
            phases = _parse_phases(kv["a"], kv.get("step"))
            return ChannelSpec("uniform", text, phases, _parse_float(kv.get("p", "0"), "p"))
        if kind == "pflip":
            if set(kv) != {"q"}:
                raise SpecError("pflip spec takes q=")
            return ChannelSpec("pflip", text, q=_parse_float(kv["q"], "q"))
        if kind == "mask":
            if set(kv) - {"psi", "p"}:
                raise SpecError("mask spec takes psi= and p=")
            return ChannelSpec("mask", text, p=_parse_float(kv.get("p", "0"), "p"), mask_path=path, psi=kv.get("psi", "uniform"))
    except KeyError as exc:
        raise SpecError(f"missing field {exc}") from None
    raise SpecError(f"unknown channel kind {kind!r}")


def parse_float_list(text: str) -> list[float]:
    """``0,0.1,0.2`` or an inclusive range ``start:stop:step``."""
    if ":" in text:
        lo, hi, step = (float(t) for t in text.split(":"))
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return [round(lo + k * step, 12) for k in range(n)]
    return [float(t) for t in text.split(",") if t.strip()]


def stage_seed(seed: int, *path: int) -> int:
    # offset by one: SeedSequence ignores trailing zero words, so (s, 1) and (s, 1, 0) would collide
    return int(np.random.SeedSequence([seed, *(k + 1 for k in path)]).generate_state(1)[0])


# --- output helpers --------------------------------------------------------------


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_json(path: Path, obj) -> None:
    path.write_text(_dumps(obj))


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    path.write_text(buf.getvalue())


def _fit_json(fit) -> dict:
    return {"p": fit.p, "a": fit.a, "fidelity": fit.fidelity}


# --- commands --------------------------------------------------------------------


def run_qpt_single(
    spec: ChannelSpec,
    n: int,
    seed: int,
    trials: int,
    noiseless: bool,
    fit_phase: bool,
    out_dir: Path,
) -> dict:
    kraus = spec.kraus()
    a_fixed = None if fit_phase else spec.nominal_phase()
    count_seed = stage_seed(seed, STAGE_COUNTS)
    mc_seed = stage_seed(seed, STAGE_MC)

    counts = simulate_counts(kraus, n, rng_seed=count_seed, noiseless=noiseless)
    outs = output_states(counts)
    choi = choi_from_tomography(counts)
    fit = fit_phase_flip_family(choi, fit_phase=a_fixed is None, a_fixed=a_fixed)
    source_choi = choi_from_kraus(kraus)

    errors = monte_carlo_errors(counts, trials, mc_seed, a_fixed=a_fixed) if trials >= 2 else None

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "counts.csv").write_text(counts.to_csv())
    count_json = counts.to_json()
    count_json["seed"] = None if noiseless else count_seed
    write_json(out_dir / "counts.json", count_json)
    write_json(out_dir / "choi.json", matrix_to_json(choi))

    rows, states = [], {}
    for prep in BASIS:
        rho = outs[prep]
        vec = bloch_from_density(rho)
        model = bloch_from_density(apply_channel(kraus, basis_density(prep)))
        std = [errors.std(f"bloch_{prep}_{ax}") if errors else 0.0 for ax in "xyz"]
        pur_std = errors.std(f"purity_{prep}") if errors else 0.0
        rows.append([prep, *vec, purity(rho), *std, pur_std, *model])
        states[prep] = {"bloch": vec.tolist(), "purity": purity(rho), "model_bloch": model.tolist()}
    write_csv(
        out_dir / "bloch.csv",
        ["input", "x", "y", "z", "purity", "x_std", "y_std", "z_std", "purity_std", "model_x", "model_y", "model_z"],
        rows,
    )

    report = {
        "tool": "slmchannel",
        "version": __version__,
        "command": "qpt",
        "channel": spec.text,
        "given": {"kind": spec.kind, "a": spec.a, "p": spec.p, "q": spec.q},
        "n_per_setting": n,
        "noiseless": noiseless,
        "fit_phase": a_fixed is None,
        "seed": seed,
        "seeds": {"counts": None if noiseless else count_seed, "monte_carlo": mc_seed if errors else None},
        "fit": _fit_json(fit),
        "fidelity_to_source": channel_fidelity(choi, source_choi),
        "tp_defect": tp_defect(choi),
        "states": states,
        "errors": errors.to_json() if errors else None,
    }
    return report


def cmd_qpt(
    spec_text: str,
    n: int = DEFAULT_N,
    seed: int = 0,
    trials: int = DEFAULT_TRIALS,
    noiseless: bool = False,
    fit_phase: bool = False,
    out_dir: Path = Path("out"),
) -> dict:
    spec = parse_channel_spec(spec_text)
    members = spec.members()
    if len(members) == 1:
        report = run_qpt_single(spec, n, seed, trials, noiseless, fit_phase, Path(out_dir))
    else:
        runs = []
        for k, member in enumerate(members):
            sub = Path(out_dir) / f"phase{k}"
            run = run_qpt_single(member, n, stage_seed(seed, 100 + k), trials, noiseless, fit_phase, sub)
            write_json(sub / "report.json", run)
            runs.append(run)
        ps = np.array([r["fit"]["p"] for r in runs])
        fs = np.array([r["fit"]["fidelity"] for r in runs])
        report = {
            "tool": "slmchannel",
            "version": __version__,
            "command": "qpt",
            "channel": spec.text,
            "seed": seed,
            "n_per_setting": n,
            "noiseless": noiseless,
            "phases": list(spec.phases),
            "runs": [f"phase{k}" for k in range(len(members))],
            "p_mean": float(ps.mean()),
            "p_std": float(ps.std(ddof=1)),
            "fidelity_mean": float(fs.mean()),
            "fidelity_std": float(fs.std(ddof=1)),
        }
    report["argv"] = _replay_argv("qpt", spec_text, n=n, seed=seed, trials=trials, noiseless=noiseless, fit_phase=fit_phase)
    write_json(Path(out_dir) / "report.json", report)
    return report


def sweep_records(
    qs: Sequence[float],
    p: float = 0.0,
    n: int = DEFAULT_N,
    seed: int = 0,
    trials: int = DEFAULT_TRIALS,
    input_state: str = "D",
    mode: str = "ideal",
    noiseless: bool = False,
    targets: bool = False,
    cell_px: int = 100,
    width: int = 1920,
    height: int = 1080,
) -> list[dict]:
    """Evolve ``input_state`` through the controllable phase-flip channel for each q.

    ``mode='ideal'`` uses the phase-flip channel with strength ``q_eff(p, q)``;
    ``mode='mask'`` draws a random mask per q and uses its realized fraction.
    Noiseless records are the exact channel output; otherwise counts are
    simulated and Monte Carlo errors attached.
    """
    if mode not in ("ideal", "mask"):
        raise SpecError(f"unknown sweep mode {mode!r}")
    rho_in = basis_density(input_state)
    psi = Wavefunction.full_cells(width, height, cell_px) if mode == "mask" else None
    records = []
    for k, value in enumerate(qs):
        q = q_for_target(p, value) if targets else value
        rec = {"q": q, "q_target": value if targets else None}
        if mode == "ideal":
            realized = q
            kraus = phase_flip_channel(q_eff(p, q))
        else:
            mask_seed = stage_seed(seed, STAGE_MASK, k)
            mask = random_phase_flip_mask(q, cell_px, width, height, rng_seed=mask_seed)
            realized = realized_fraction(mask, cell_px)
            kraus = effective_channel(mask, psi, p)
            rec["mask_seed"] = mask_seed
        rec["q_realized"] = realized
        rec["q_eff"] = q_eff(p, realized)
        rec["predicted_coh_re"] = (1 - 2 * rec["q_eff"]) * (rho_in[0, 1].real)
        if noiseless:
            rho = apply_channel(kraus, rho_in)
            errs = dict.fromkeys(("pop_H", "pop_V", "coh_re", "coh_im"), 0.0)
        else:
            count_seed = stage_seed(seed, STAGE_COUNTS, k)
            mc_seed = stage_seed(seed, STAGE_MC, k)
            counts = simulate_counts(kraus, n, rng_seed=count_seed)
            rho = output_states(counts)[input_state]
            errs = _state_errors(counts, input_state, trials, mc_seed)
            rec["count_seed"], rec["mc_seed"] = count_seed, mc_seed
        rec.update(
            pop_H=float(rho[0, 0].real),
            pop_V=float(rho[1, 1].real),
            coh_re=float(rho[0, 1].real),
            coh_im=float(rho[0, 1].imag),
        )
        rec.update({f"{k2}_err": v for k2, v in errs.items()})
        records.append(rec)
    return records


def _state_errors(counts, prep: str, trials: int, seed: int) -> dict[str, float]:
    if trials < 2:
        return dict.fromkeys(("pop_H", "pop_V", "coh_re", "coh_im"), 0.0)
    row = counts.row(prep)
    samples = []
    for child in np.random.SeedSequence(seed).spawn(trials):
        rho = state_from_counts(np.random.default_rng(child).poisson(row))
        samples.append([rho[0, 0].real, rho[1, 1].real, rho[0, 1].real, rho[0, 1].imag])
    std = np.asarray(samples).std(axis=0, ddof=1)
    return dict(zip(("pop_H", "pop_V", "coh_re", "coh_im"), map(float, std)))


SWEEP_FIELDS = [
    "q", "q_target", "q_realized", "q_eff",
    "pop_H", "pop_H_err", "pop_V", "pop_V_err",
    "coh_re", "coh_re_err", "coh_im", "coh_im_err",
    "predicted_coh_re",
]  # fmt: skip


def cmd_sweep_q(
    qs: Sequence[float],
    p: float = 0.0,
    n: int = DEFAULT_N,
    seed: int = 0,
    trials: int = DEFAULT_TRIALS,
    input_state: str = "D",
    mode: str = "ideal",
    noiseless: bool = False,
    targets: bool = False,
    cell_px: int = 100,
    out_dir: Path = Path("out"),
) -> list[dict]:
    records = sweep_records(qs, p, n, seed, trials, input_state, mode, noiseless, targets, cell_px)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(out_dir / "sweep.csv", SWEEP_FIELDS, ([r[f] if r[f] is not None else "" for f in SWEEP_FIELDS] for r in records))
    write_json(
        out_dir / "sweep.json",
        {
            "tool": "slmchannel",
            "version": __version__,
            "command": "sweep-q",
            "seed": seed,
            "p": p,
            "mode": mode,
            "input": input_state,
            "n_per_setting": n,
            "noiseless": noiseless,
            "records": records,
            "argv": _replay_argv(
                "sweep-q", ",".join(repr(v) for v in qs), p=p, n=n, seed=seed, trials=trials,
                input_state=input_state, mode=mode, noiseless=noiseless, targets=targets, cell_px=cell_px,
            ),
        },
    )
    return records


def cmd_maskgen(
    q: float,
    cell_px: int = 100,
    width: int = 1920,
    height: int = 1080,
    seed: int = 0,
    p: float = 0.0,
    out_path: Path = Path("mask.pgm"),
) -> dict:
    mask_seed = stage_seed(seed, STAGE_MASK)
    mask = random_phase_flip_mask(q, cell_px, width, height, rng_seed=mask_seed)
    psi = Wavefunction.full_cells(width, height, cell_px)
    avg = spatial_phase_average(mask, psi)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_pgm(mask, out_path)
    meta = mask_sidecar(mask, q, cell_px, mask_seed)
    meta.update(
        {
            "tool": "slmchannel",
            "version": __version__,
            "top_level_seed": seed,
            "spatial_average": {"re": avg.value.real, "im": avg.value.imag},
            "predicted": {
                "p0": {"p_eff": q_eff(0.0, meta["realized_fraction"]), "kraus": kraus_to_json(effective_channel(mask, psi, 0.0))},
                "p": {"p": p, "p_eff": q_eff(p, meta["realized_fraction"]), "kraus": kraus_to_json(effective_channel(mask, psi, p))},
            },
        }
    )
    write_json(out_path.with_suffix(".json"), meta)
    return meta


def _kraus_rows(label: str, kraus) -> list[list]:
    rows = []
    for i, m in enumerate(kraus):
        for r in range(2):
            for c in range(2):
                rows.append([label, f"M{i}", r, c, float(m[r, c].real), float(m[r, c].imag)])
    return rows


def _write_kraus_csvs(out_dir: Path, label: str, kraus) -> None:
    for i, m in enumerate(kraus):
        for part, values in (("re", m.real), ("im", m.imag)):
            write_csv(out_dir / f"kraus_{label}_M{i}_{part}.csv", ["col_H", "col_V"], [[float(v) for v in row] for row in values])


def cmd_kraus_report(source: str, out_dir: Path = Path("out")) -> dict:
    """Kraus matrices for a channel spec, or model vs fitted vs tomographic for a qpt report."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sets: dict[str, list[np.ndarray]] = {}
    path = Path(source)
    if path.suffix == ".json" and path.exists():
        report = json.loads(path.read_text())
        if "fit" not in report:
            raise SpecError("report has no fit; pass a single-channel qpt report")
        sets["model"] = parse_channel_spec(report["channel"]).kraus()
        sets["fitted"] = slm_uniform_channel(report["fit"]["a"], report["fit"]["p"])
        choi = matrix_from_json(json.loads((path.parent / "choi.json").read_text()))
        sets["tomography"] = kraus_from_choi(choi, check_tp=False)
    else:
        sets["model"] = parse_channel_spec(source).kraus()
    rows = []
    for label, kraus in sets.items():
        _write_kraus_csvs(out_dir, label, kraus)
        rows += _kraus_rows(label, kraus)
    write_csv(out_dir / "kraus_table.csv", ["source", "operator", "row", "col", "re", "im"], rows)
    summary = {label: kraus_to_json(k) for label, k in sets.items()}
    write_json(out_dir / "kraus.json", {"tool": "slmchannel", "version": __version__, "source": source, "sets": summary})
    return summary


# --- argparse ------------------------------------------------------------------------


def _replay_argv(command: str, positional: str, **opts) -> list[str]:
    argv = ["--seed", str(opts.pop("seed"))]
    if opts.pop("noiseless", False):
        argv.append("--noiseless")
    argv += [command, positional]
    for key, value in opts.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                argv.append(flag)
        else:
            argv += [flag, repr(value) if isinstance(value, float) else str(value)]
    return argv


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slmchannel", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=0, help="top-level RNG seed")
    parser.add_argument("--out-dir", type=Path, default=Path("out"))
    parser.add_argument("--noiseless", action="store_true", help="use expected counts instead of Poisson draws")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("qpt", help="simulate tomography of a channel and fit the phase-flip model")
    p.add_argument("channel", help="identity | uniform:a=3pi/4,p=0.08 | pflip:q=0.3 | mask:<pgm>,psi=uniform,p=0.08")
    p.add_argument("--n", type=int, default=DEFAULT_N, help="mean counts per (preparation, projection)")
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS, help="Monte Carlo resamples (0 to skip)")
    p.add_argument("--fit-phase", action="store_true", help="fit the rotation angle instead of fixing it")

    s = sub.add_parser("sweep-q", help="output state vs phase-flip parameter q")
    s.add_argument("qs", help="comma list or start:stop:step")
    s.add_argument("--p", type=float, default=0.0, help="intrinsic device dephasing")
    s.add_argument("--n", type=int, default=DEFAULT_N)
    s.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    s.add_argument("--input-state", choices=BASIS, default="D")
    s.add_argument("--mode", choices=("ideal", "mask"), default="ideal")
    s.add_argument("--targets", action="store_true", help="treat the list as target q_eff values and invert")
    s.add_argument("--cell-px", type=int, default=100)

    m = sub.add_parser("maskgen", help="write a random phase-flip mask as PGM plus JSON sidecar")
    m.add_argument("q", type=float)
    m.add_argument("--cell-px", type=int, default=100)
    m.add_argument("--width", type=int, default=1920)
    m.add_argument("--height", type=int, default=1080)
    m.add_argument("--p", type=float, default=0.0, help="device dephasing for the predicted channel")
    m.add_argument("--out", type=Path, default=None, help="PGM path (default <out-dir>/mask.pgm)")

    k = sub.add_parser("kraus-report", help="Kraus operator components as CSV")
    k.add_argument("source", help="channel spec or a qpt report.json")

    r = sub.add_parser("replay", help="re-run the command recorded in a report")
    r.add_argument("report", type=Path)
    return parser


def run(args: argparse.Namespace) -> None:
    if args.command == "qpt":
        rep = cmd_qpt(args.channel, args.n, args.seed, args.trials, args.noiseless, args.fit_phase, args.out_dir)
        if "fit" in rep:
            print(f"p = {rep['fit']['p']:.6f}  a = {rep['fit']['a']:.6f}  F = {rep['fit']['fidelity']:.8f}")
        else:
            print(f"mean p = {rep['p_mean']:.6f}  mean F = {rep['fidelity_mean']:.8f}")
    elif args.command == "sweep-q":
        recs = cmd_sweep_q(
            parse_float_list(args.qs), args.p, args.n, args.seed, args.trials, args.input_state,
            args.mode, args.noiseless, args.targets, args.cell_px, args.out_dir,
        )  # fmt: skip
        for rec in recs:
            print(f"q = {rec['q']:.4f}  pop_H = {rec['pop_H']:.6f}  Re c = {rec['coh_re']:.6f}  Im c = {rec['coh_im']:.6f}")
    elif args.command == "maskgen":
        out = args.out or args.out_dir / "mask.pgm"
        meta = cmd_maskgen(args.q, args.cell_px, args.width, args.height, args.seed, args.p, out)
        print(f"wrote {out}  realized fraction = {meta['realized_fraction']:.4f}")
    elif args.command == "kraus-report":
        cmd_kraus_report(args.source, args.out_dir)
        print(f"wrote Kraus tables to {args.out_dir}")
    elif args.command == "replay":
        report = json.loads(args.report.read_text())
        if "argv" not in report:
            raise SpecError("report does not record its invocation")
        replay = build_parser().parse_args(["--out-dir", str(args.out_dir), *report["argv"]])
        run(replay)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        run(args)
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except (SLMChannelError, ValueError, KeyError) as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
