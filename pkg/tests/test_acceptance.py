"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the collected lines are
repeated in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from slmchannel.cli import stage_seed, sweep_records
from slmchannel.qchannel import (
    apply_channel,
    bit_flip_channel,
    channel_fidelity,
    choi_from_kraus,
    completeness_defect,
    fit_phase_flip_family,
    general_slm_channel,
    kraus_from_choi,
    phase_flip_channel,
    slm_uniform_channel,
)
from slmchannel.qpolar import PureQubit, basis_density, concurrence_from_reduced, purity
from slmchannel.qpt import choi_from_tomography, simulate_counts
from slmchannel.slm import (
    Mask,
    Wavefunction,
    effective_channel,
    joint_evolve_and_trace,
    mask_concurrence,
    q_eff,
    q_for_target,
    random_phase_flip_mask,
    realized_fraction,
    reduced_state,
    spatial_phase_average,
)

from conftest import ACCEPTANCE_LINES, random_density, random_kraus

PHASES = [n * math.pi / 4 for n in range(8)]
P_DEVICE = 0.08


def report(number, checks, detail):
    """Record the verdict line and fail the test if any check is false."""
    failed = [name for name, ok in checks.items() if not ok]
    line = f"criterion {number}: {'PASS' if not failed else 'FAIL'}  {detail}"
    if failed:
        line += f"  failed: {', '.join(failed)}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert not failed, line


def test_criterion_1_noiseless_round_trip():
    start = time.perf_counter()
    dp, fid = [], []
    for a in PHASES:
        kraus = slm_uniform_channel(a, P_DEVICE)
        choi = choi_from_tomography(simulate_counts(kraus, 10_000, noiseless=True))
        fit = fit_phase_flip_family(choi, a_fixed=a)
        dp.append(abs(fit.p - P_DEVICE))
        fid.append(min(fit.fidelity, channel_fidelity(choi, choi_from_kraus(kraus))))
    elapsed = time.perf_counter() - start
    report(
        1,
        {"p within 1e-4": max(dp) <= 1e-4, "F >= 1-1e-6": min(fid) >= 1 - 1e-6, "runtime < 1 s": elapsed < 1.0},
        f"max|dp|={max(dp):.2e} min F={min(fid):.12f} time={elapsed:.2f}s",
    )


def test_criterion_2_noisy_fit_at_experimental_scale():
    # 100 independent Poisson experiments per phase; seeds fixed in advance from (0, phase, trial)
    start = time.perf_counter()
    ps, fs = [], []
    for k, a in enumerate(PHASES):
        kraus = slm_uniform_channel(a, P_DEVICE)
        for i in range(100):
            counts = simulate_counts(kraus, 10_000, rng_seed=stage_seed(0, k, i))
            fit = fit_phase_flip_family(choi_from_tomography(counts), a_fixed=a)
            ps.append(fit.p)
            fs.append(fit.fidelity)
    elapsed = time.perf_counter() - start
    p_mean, f_mean = float(np.mean(ps)), float(np.mean(fs))
    report(
        2,
        {"mean p in [0.07, 0.09]": 0.07 <= p_mean <= 0.09, "mean F >= 0.995": f_mean >= 0.995, "runtime < 30 s": elapsed < 30},
        f"mean p={p_mean:.5f}±{np.std(ps, ddof=1):.5f} mean F={f_mean:.5f}±{np.std(fs, ddof=1):.5f} time={elapsed:.1f}s",
    )


def test_criterion_3_purity():
    pur_d = [purity(apply_channel(slm_uniform_channel(a, P_DEVICE), basis_density("D"))) for a in PHASES]
    pur_hv = [purity(apply_channel(slm_uniform_channel(a, P_DEVICE), basis_density(b))) for a in PHASES for b in "HV"]
    report(
        3,
        {
            "D purity 0.8528±1e-6": max(abs(x - 0.8528) for x in pur_d) <= 1e-6,
            "D purity in [0.83, 0.96]": all(0.83 <= x <= 0.96 for x in pur_d),
            "H/V purity 1±1e-12": max(abs(x - 1) for x in pur_hv) <= 1e-12,
        },
        f"D: {pur_d[0]:.10f}  H/V worst dev={max(abs(x - 1) for x in pur_hv):.1e}",
    )


def test_criterion_4_coherence_vs_q():
    qs = [round(0.05 * k, 2) for k in range(11)]
    exact = sweep_records(qs, p=0.0, noiseless=True)
    dev_pop = max(max(abs(r["pop_H"] - 0.5), abs(r["pop_V"] - 0.5)) for r in exact)
    dev_re = max(abs(r["coh_re"] - (1 - 2 * q) / 2) for q, r in zip(qs, exact))
    dev_im = max(abs(r["coh_im"]) for r in exact)

    # random masks at N = 1e4; each point sits on the line at its realized fraction
    noisy = sweep_records(qs, p=0.0, n=10_000, seed=0, trials=100, mode="mask")
    z = []
    for r in noisy:
        line = (1 - 2 * r["q_realized"]) / 2
        z += [
            abs(r["coh_re"] - line) / r["coh_re_err"],
            abs(r["coh_im"]) / r["coh_im_err"],
            abs(r["pop_H"] - 0.5) / r["pop_H_err"],
        ]
    report(
        4,
        {
            "populations 0.5±1e-12": dev_pop <= 1e-12,
            "Re c = (1-2q)/2 ±1e-12": dev_re <= 1e-12,
            "Im c = 0 ±1e-12": dev_im <= 1e-12,
            "mask+counts within 3 sigma": max(z) <= 3,
        },
        f"noiseless devs {dev_pop:.1e}/{dev_re:.1e}/{dev_im:.1e}  worst |z|={max(z):.2f} over {len(z)} points",
    )


def test_criterion_5_mask_to_channel():
    fids = []
    for k, q in enumerate((0.0, 0.05, 0.2, 0.45, 0.5, 0.8, 1.0)):
        mask = random_phase_flip_mask(q, rng_seed=stage_seed(0, 5, k))
        kraus = effective_channel(mask, Wavefunction.full_cells(), 0.0)
        target = phase_flip_channel(realized_fraction(mask))
        fids.append(channel_fidelity(choi_from_kraus(kraus), choi_from_kraus(target)))
    report(5, {"F >= 1-1e-10": min(fids) >= 1 - 1e-10}, f"min F={min(fids):.15f}")


def test_criterion_6_oracle_equivalence():
    rng = np.random.default_rng(6)
    dev_rho = dev_c = 0.0
    for _ in range(1000):
        h, w = rng.integers(1, 9, size=2)
        mask = Mask(rng.integers(0, 256, size=(h, w)))
        psi = Wavefunction.normalized(rng.normal(size=(h, w)) + 1j * rng.normal(size=(h, w)))
        alpha = PureQubit(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi))
        rho = joint_evolve_and_trace(mask, psi, alpha)
        closed = reduced_state(alpha, spatial_phase_average(mask, psi).value)
        dev_rho = max(dev_rho, float(np.abs(rho - closed).max()))
        dev_c = max(dev_c, abs(concurrence_from_reduced(rho) - mask_concurrence(alpha.theta, mask, psi)))
    report(
        6,
        {"reduced state within 1e-10": dev_rho <= 1e-10, "concurrence within 1e-10": dev_c <= 1e-10},
        f"1000 triples: max|drho|={dev_rho:.1e} max|dC|={dev_c:.1e}",
    )


def test_criterion_7_channel_algebra():
    rng = np.random.default_rng(7)
    constructed = []
    for a in np.linspace(0, 2 * math.pi, 17):
        for p in np.linspace(0, 1, 11):
            constructed += [slm_uniform_channel(a, p), general_slm_channel(a, p)]
    for q in np.linspace(0, 1, 21):
        constructed += [phase_flip_channel(q), bit_flip_channel(q)]
    for k in range(5):
        mask = random_phase_flip_mask(0.3, rng_seed=k)
        constructed.append(effective_channel(mask, Wavefunction.full_cells(), 0.08))
    defect = max(completeness_defect(k) for k in constructed)

    round_trip = preserve = 0.0
    for _ in range(300):
        kraus = random_kraus(rng, int(rng.integers(1, 5)))
        back = kraus_from_choi(choi_from_kraus(kraus))
        rho = random_density(rng, rank=int(rng.integers(1, 3)))
        out = apply_channel(kraus, rho)
        round_trip = max(round_trip, float(np.abs(apply_channel(back, rho) - out).max()))
        w = np.linalg.eigvalsh(out)
        preserve = max(preserve, abs(np.trace(out).real - 1), float(np.abs(out - out.conj().T).max()), max(-w.min(), 0.0))
    report(
        7,
        {"completeness <= 1e-12": defect <= 1e-12, "round trip <= 1e-10": round_trip <= 1e-10, "CPTP preservation": preserve <= 1e-12},
        f"defect={defect:.1e} round trip={round_trip:.1e} trace/herm/psd={preserve:.1e}",
    )


def test_criterion_8_q_eff_inversion():
    targets = [0.1, 0.2, 0.3, 0.4]
    recs = sweep_records(targets, p=P_DEVICE, noiseless=True, targets=True)
    dev = max(abs(r["coh_re"] - (1 - 2 * t) / 2) for t, r in zip(targets, recs))
    qs = [q_for_target(P_DEVICE, t) for t in targets]
    bound = min(q_eff(P_DEVICE, q) - P_DEVICE for q in np.linspace(0, 1, 10_001))
    report(
        8,
        {"coherence within 1e-12": dev <= 1e-12, "q_eff >= p for all q": bound >= -1e-15},
        f"q={', '.join(f'{q:.5f}' for q in qs)}  max dev={dev:.1e}  min(q_eff-p)={bound:.1e}",
    )


def test_criterion_9_identity_control_substitute():
    choi = choi_from_kraus(slm_uniform_channel(0.07, 0.026))
    fit = fit_phase_flip_family(choi, fit_phase=True)
    report(
        9,
        {
            "p = 0.026": abs(fit.p - 0.026) <= 1e-6,
            "a = 0.07": abs(fit.a - 0.07) <= 1e-6,
            "F >= 1-1e-8": fit.fidelity >= 1 - 1e-8,
        },
        f"p={fit.p:.8f} a={fit.a:.8f} F={fit.fidelity:.12f}",
    )


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
