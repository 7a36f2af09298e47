"""Self-check suite behind ``zenobattery verify``.

``fast`` runs the kernel, model and engine invariants in a few seconds;
``full`` adds the long-run norm check and the dynamics and sweep reproductions.
"""
from __future__ import annotations

import io
import math
import time
from typing import Callable, NamedTuple

import numpy as np

from . import analysis, engine, model, qcore
from .model import ModelParams

SQRT2 = math.sqrt(2.0)
G = 0.01
CONFIGS = ((1.0, 1.0), (0.7, 1.0), (1.0, 2.0))


class CheckResult(NamedTuple):
    name: str
    ok: bool
    detail: str
    seconds: float


def _within(value: float, target: float, rel: float) -> bool:
    return abs(value - target) <= rel * abs(target)


def check_spectrum() -> tuple[bool, str]:
    w = qcore.herm_eig(model.build_hmc(ModelParams())).eigenvalues
    err = float(np.max(np.abs(w - np.array([-SQRT2, -SQRT2, SQRT2, SQRT2]))))
    return err < 1e-10, f"max eigenvalue error {err:.2e}"


def check_closed_form_spectrum() -> tuple[bool, str]:
    worst = 0.0
    for gamma, mu in CONFIGS + ((2.5, 0.3),):
        p = ModelParams(gamma=gamma, mu=mu)
        w = qcore.herm_eig(model.build_hmc(p)).eigenvalues
        worst = max(worst, float(np.max(np.abs(w - np.sort(p.eigenvalues)))))
    return worst < 1e-10, f"max deviation from closed form {worst:.2e}"


def check_eigenbasis() -> tuple[bool, str]:
    worst = 0.0
    for gamma, mu in CONFIGS:
        p = ModelParams(gamma=gamma, mu=mu)
        h = model.build_hmc(p)
        for v, lam in model.eigenbasis_mc(p):
            worst = max(worst, float(np.linalg.norm(h @ v - lam * v)))
    return worst < 1e-10, f"max residual |H v - lambda v| {worst:.2e}"


def check_unitarity() -> tuple[bool, str]:
    rng = np.random.default_rng(7)
    worst_u = worst_group = 0.0
    for dim in (2, 4, 8):
        for _ in range(10):
            a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            h = (a + a.conj().T) / 2
            t1, t2 = rng.uniform(0, 100, size=2)
            u1, u2 = qcore.propagator(h, t1), qcore.propagator(h, t2)
            worst_u = max(worst_u, qcore.unitarity_defect(u1))
            worst_group = max(worst_group, float(np.max(np.abs(u1 @ u2 - qcore.propagator(h, t1 + t2)))))
    ok = worst_u < 1e-9 and worst_group < 1e-9
    return ok, f"unitarity {worst_u:.2e}, group property {worst_group:.2e}"


def check_free_energy_conservation() -> tuple[bool, str]:
    p = ModelParams(omega1=SQRT2)
    h = model.build_hmcb(p)
    step = qcore.propagator(h, 1.0)
    psi = model.initial_state(p)
    e0 = qcore.expectation(psi, h)
    worst = 0.0
    for _ in range(2000):
        psi = step @ psi
        worst = max(worst, abs(qcore.expectation(psi, h) - e0))
    return worst < 1e-9, f"max |<H>(t) - <H>(0)| {worst:.2e}"


def _norm_after(n_pulses: int) -> float:
    p = ModelParams()
    run = engine.run_schedule(
        p, engine.PulseSchedule.of(engine.Phase.pulsed(n_pulses * 0.1, 0.1)), pulse_stride=n_pulses
    )
    return abs(float(np.linalg.norm(run.final_state)) - 1.0)


def check_norm_short() -> tuple[bool, str]:
    err = _norm_after(10_000)
    return err < 1e-9, f"norm drift after 1e4 pulses {err:.2e}"


def check_norm_long() -> tuple[bool, str]:
    err = _norm_after(1_000_000)
    return err < 1e-9, f"norm drift after 1e6 pulses {err:.2e}"


def check_floquet_eigenphase() -> tuple[bool, str]:
    worst = 0.0
    for gamma, mu in CONFIGS:
        p = ModelParams(gamma=gamma, mu=mu)
        t1 = model.rotation(p) @ model.KET1
        minus, plus = np.kron(t1, model.KET_MINUS), np.kron(t1, model.KET_PLUS)
        for tau in analysis.predict_peaks(p, 5):
            u = engine.floquet_operator(p, tau).matrix
            worst = max(
                worst,
                float(np.max(np.abs(u @ minus + minus))),
                float(np.max(np.abs(u @ plus + np.exp(-1j * p.lambda3 * tau) * plus))),
            )
    return worst < 1e-9, f"max eigen-relation error {worst:.2e}"


def check_stroboscopic_agreement() -> tuple[bool, str]:
    p = ModelParams(omega1=1 / SQRT2)
    tau = math.pi / (1000 * G)
    step = engine.run_schedule(p, engine.PulseSchedule.of(engine.Phase.pulsed(1000 * tau, tau))).series
    fast = engine.run_stroboscopic(p, tau, 1000)
    err = max(float(np.max(np.abs(step.eb - fast.eb))), float(np.max(np.abs(step.ec - fast.ec))))
    return err < 1e-9, f"max per-sample difference {err:.2e}"


def check_rabi_oracle() -> tuple[bool, str]:
    details, ok = [], True
    for regime, omega1, phase in (
        ("bare_resonant", SQRT2, engine.Phase.free(math.pi / G)),
        ("pulsed_dense_resonant", 1 / SQRT2, engine.Phase.pulsed(math.pi / G, math.pi / (1000 * G))),
    ):
        p = ModelParams(omega1=omega1)
        series = engine.run_schedule(p, engine.PulseSchedule.of(phase)).series
        _, eb = engine.rabi_oracle(p, regime, series.times)
        dev = float(np.max(np.abs(eb - series.eb))) / p.capacity
        ok &= dev < 0.03
        details.append(f"{regime} {dev:.2%}")
    return ok, ", ".join(details)


def check_fit_idempotence() -> tuple[bool, str]:
    p = ModelParams()
    a_true, t_true = 0.8 * p.capacity, 1234.5
    t = np.linspace(0.0, 3.0 * t_true, 601)
    ec = analysis.charging_model(t, a_true, t_true, p.lambda3)
    series = engine.EnergyTimeSeries(t, ec, p.lambda3 - ec, np.zeros(len(t), dtype=int), p.g)
    fit = analysis.fit_charging_curve(series, p)
    err = max(abs(fit.a - a_true) / a_true, abs(fit.t_charge - t_true) / t_true)
    return err < 1e-9 and fit.residual < 1e-9, f"relative error {err:.2e}, residual {fit.residual:.2e}"


def check_peak_prediction() -> tuple[bool, str]:
    got = [float(analysis.tau_scaled(analysis.predict_peaks(ModelParams(gamma=g_, mu=m_), 1)[0], G))
           for g_, m_ in CONFIGS]
    ok = abs(got[0] - 10 * SQRT2) < 1e-9 and abs(got[1] - 12.21) < 0.005 and abs(got[2] - 7.07) < 0.005
    return ok, "first peaks " + ", ".join(f"{x:.3f}" for x in got)


def check_csv_determinism() -> tuple[bool, str]:
    from . import cli

    outputs = []
    for _ in range(2):
        buf = io.StringIO()
        cli.write_simulation(buf, cli.build_config(["--scenario", "fig2c"]))
        outputs.append(buf.getvalue().encode("utf-8"))
    return outputs[0] == outputs[1], f"{len(outputs[0])} bytes per run"


def _first_max(series) -> tuple[float, float]:
    found = analysis.first_maximum(series)
    if found is None:
        return float(series.times[-1]), float(series.eb.max())
    return found


def check_fig2_dynamics() -> tuple[bool, str]:
    msgs, ok = [], True
    p = ModelParams(omega1=SQRT2)
    t, e = _first_max(engine.run_schedule(p, engine.PulseSchedule.of(engine.Phase.free(math.pi / G))).series)
    ok &= _within(t, math.pi / (SQRT2 * G), 0.02) and _within(e, 2 * SQRT2, 0.02)
    msgs.append(f"bare T={t * G / math.pi:.4f}pi/g")
    p = ModelParams(omega1=1 / SQRT2)
    sched = engine.PulseSchedule.of(engine.Phase.pulsed(math.pi / G, math.pi / (1000 * G)))
    t, e = _first_max(engine.run_schedule(p, sched).series)
    ok &= _within(t, math.pi / (2 * G), 0.02) and _within(e, SQRT2, 0.02)
    msgs.append(f"pulsed T={t * G / math.pi:.4f}pi/g")
    sched = engine.PulseSchedule.of(engine.Phase.pulsed(2 * math.pi / G, math.pi / (100 * G)))
    t, e = _first_max(engine.run_schedule(p, sched).series)
    ok &= _within(t * G / math.pi, SQRT2, 0.03) and _within(e, SQRT2, 0.03)
    msgs.append(f"slow T={t * G / math.pi:.4f}pi/g")
    return ok, ", ".join(msgs)


def check_charging_cycle() -> tuple[bool, str]:
    p = ModelParams(omega1=1 / SQRT2)
    half = math.pi / (2 * G)
    series = engine.run_schedule(p, engine.charging_cycle(half, half, math.pi / (1000 * G))).series
    drift = [float(np.ptp(series.eb[series.phase_index == k])) / SQRT2 for k in (0, 2)]
    charged = float(series.eb[series.phase_index == 1][-1])
    ok = max(drift) < 0.01 and _within(charged, SQRT2, 0.02)
    return ok, f"storing drift {max(drift):.2%}, charged to {charged / SQRT2:.2%}"


def check_fit_s2() -> tuple[bool, str]:
    p = ModelParams(omega1=1 / SQRT2)
    tau = 84 * math.pi / (1000 * G)
    series = engine.run_stroboscopic(p, tau, engine.pulsed_window(tau, analysis.default_window(p)))
    fit = analysis.fit_charging_curve(series, p)
    t_units, a_units = fit.t_charge / (math.pi / (2 * G)), fit.a / SQRT2
    ok = _within(t_units, 76.6, 0.05) and _within(a_units, 0.59, 0.05)
    return ok, f"T={t_units:.2f} pi/(2g), A={a_units:.3f} sqrt2"


def _scan(gamma: float, mu: float) -> analysis.ScanResult:
    p = ModelParams(gamma=gamma, mu=mu)
    taus, coarse = analysis.tau_grid(p)
    return analysis.scan_tau(p, taus, coarse=coarse)


def check_sweeps() -> tuple[bool, str]:
    ok, msgs = True, []
    fig3 = _scan(1.0, 1.0)
    matches = analysis.match_peaks(fig3)
    for n in (1, 2, 3):
        target = 2 * math.pi * n / SQRT2
        hit = any(m.within_one_step and abs(m.nearest_predicted - target) < 1e-9 for m in matches)
        ok &= hit
        msgs.append(f"n={n} {'found' if hit else 'missing'}")
    slope = fig3.valley_slope
    ok &= slope is not None and _within(slope, 110.0, 0.15)
    msgs.append(f"valley slope {slope if slope is None else round(slope, 2)}")
    for gamma, mu in ((0.7, 1.0), (1.0, 2.0)):
        scan = _scan(gamma, mu)
        first = analysis.match_peaks(scan)[:1]
        hit = bool(first) and first[0].within_one_step and first[0].nearest_predicted == scan.predicted_peaks[0]
        ok &= hit
        msgs.append(f"gamma={gamma},mu={mu} first peak {'ok' if hit else 'missing'}")
    return ok, ", ".join(msgs)


CHECKS: list[tuple[str, Callable[[], tuple[bool, str]], str]] = [
    ("spectrum", check_spectrum, "fast"),
    ("closed-form spectrum", check_closed_form_spectrum, "fast"),
    ("closed-form eigenbasis", check_eigenbasis, "fast"),
    ("propagator unitarity/group", check_unitarity, "fast"),
    ("free-phase energy conservation", check_free_energy_conservation, "fast"),
    ("norm over 1e4 pulses", check_norm_short, "fast"),
    ("floquet eigenphase", check_floquet_eigenphase, "fast"),
    ("stroboscopic vs stepwise", check_stroboscopic_agreement, "fast"),
    ("rabi oracle", check_rabi_oracle, "fast"),
    ("fit idempotence", check_fit_idempotence, "fast"),
    ("peak prediction", check_peak_prediction, "fast"),
    ("csv determinism", check_csv_determinism, "fast"),
    ("norm over 1e6 pulses", check_norm_long, "full"),
    ("fig2 dynamics", check_fig2_dynamics, "full"),
    ("charging cycle", check_charging_cycle, "full"),
    ("fit at tau=84", check_fit_s2, "full"),
    ("tau sweeps", check_sweeps, "full"),
]


def run_checks(level: str = "fast") -> list[CheckResult]:
    if level not in ("fast", "full"):
        raise ValueError(f"level must be 'fast' or 'full', got {level!r}")
    results = []
    for name, func, lvl in CHECKS:
        if lvl == "full" and level != "full":
            continue
        start = time.perf_counter()
        try:
            ok, detail = func()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(ok), detail, time.perf_counter() - start))
    return results
