"""Time evolution under free propagation interleaved with instantaneous pulses.

Pulses are zero-duration unitaries.  In a pulsed phase every inter-pulse step
is "propagate under the full Hamiltonian for tau, then apply the pulse", so a
phase of ``n`` pulses ends exactly on a pulse.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np
import scipy.linalg

from . import model, qcore
from .errors import RegimeMismatchError, ScheduleError
from .model import ModelParams

# relative slack when rounding a pulsed duration down to whole intervals
_ROUNDING_SLACK = 1e-9
_CHUNK = 1 << 15


@dataclasses.dataclass(frozen=True)
class Phase:
    """One segment of a schedule.  ``tau=None`` means free evolution."""

    duration: float
    tau: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ScheduleError(f"phase duration must be positive, got {self.duration!r}")
        if self.tau is not None:
            if not (math.isfinite(self.tau) and self.tau > 0):
                raise ScheduleError(f"inter-pulse interval must be positive, got {self.tau!r}")
            if self.n_pulses < 1:
                raise ScheduleError(
                    f"pulsed phase of duration {self.duration} is shorter than one interval tau={self.tau}"
                )

    @classmethod
    def free(cls, duration: float) -> "Phase":
        return cls(float(duration), None)

    @classmethod
    def pulsed(cls, duration: float, tau: float) -> "Phase":
        return cls(float(duration), float(tau))

    @property
    def is_pulsed(self) -> bool:
        return self.tau is not None

    @property
    def n_pulses(self) -> int:
        if self.tau is None:
            return 0
        return int(math.floor(self.duration / self.tau * (1.0 + _ROUNDING_SLACK)))

    @property
    def actual_duration(self) -> float:
        """Duration after rounding a pulsed phase down to whole intervals."""
        return self.n_pulses * self.tau if self.tau is not None else self.duration


@dataclasses.dataclass(frozen=True)
class PulseSchedule:
    phases: tuple[Phase, ...]

    def __post_init__(self):
        phases = tuple(self.phases)
        if not phases:
            raise ScheduleError("schedule has no phases")
        object.__setattr__(self, "phases", phases)

    @classmethod
    def of(cls, *phases: Phase) -> "PulseSchedule":
        return cls(tuple(phases))

    @property
    def duration(self) -> float:
        return sum(ph.actual_duration for ph in self.phases)


def charging_cycle(store: float, charge: float, tau: float) -> PulseSchedule:
    """Storing, pulsed charging, storing: the basic control cycle."""
    return PulseSchedule.of(Phase.free(store), Phase.pulsed(charge, tau), Phase.free(store))


@dataclasses.dataclass(frozen=True)
class EnergyTimeSeries:
    """Sampled charger and battery energies.

    ``phase_index`` tags each sample with the schedule phase it closes; the
    initial sample belongs to phase 0.
    """

    times: np.ndarray
    ec: np.ndarray
    eb: np.ndarray
    phase_index: np.ndarray
    g: float

    def __len__(self) -> int:
        return len(self.times)

    @property
    def gt_over_pi(self) -> np.ndarray:
        return self.g * self.times / math.pi


@dataclasses.dataclass(frozen=True)
class SimulationRun:
    series: EnergyTimeSeries
    final_state: np.ndarray
    phase_durations: tuple[float, ...]


@dataclasses.dataclass(frozen=True)
class FloquetOperator:
    matrix: np.ndarray
    tau: float


def default_free_dt(p: ModelParams) -> float:
    return math.pi / (200.0 * p.g)


def _series(p: ModelParams, times, states, phase_index) -> EnergyTimeSeries:
    states = np.asarray(states)
    return EnergyTimeSeries(
        times=np.asarray(times, dtype=float),
        ec=qcore.expectations(states, model.charger_energy_operator(p)),
        eb=qcore.expectations(states, model.battery_energy_operator(p)),
        phase_index=np.asarray(phase_index, dtype=int),
        g=p.g,
    )


def run_schedule(
    p: ModelParams,
    schedule: PulseSchedule,
    pulse_stride: int = 1,
    free_dt: float | None = None,
    psi0: np.ndarray | None = None,
) -> SimulationRun:
    """Evolve the initial state through every phase of ``schedule``.

    Args:
        p: model parameters.
        schedule: ordered phases.
        pulse_stride: in pulsed phases, sample every this many pulses (and at
            the end of the phase).
        free_dt: sampling interval in free phases; defaults to ``pi/(200 g)``.
        psi0: starting state, ``|v3>|0>`` by default.

    Returns:
        The sampled energies, the final state and the realised duration of
        each phase.
    """
    if not isinstance(schedule, PulseSchedule):
        schedule = PulseSchedule(tuple(schedule))
    if pulse_stride < 1:
        raise ScheduleError("pulse_stride must be at least 1")
    free_dt = default_free_dt(p) if free_dt is None else float(free_dt)
    if not free_dt > 0:
        raise ScheduleError("free_dt must be positive")

    h = model.build_hmcb(p)
    pulse = model.pulse_operator(p, 3)
    psi = model.initial_state(p) if psi0 is None else qcore.normalize(psi0)

    t = 0.0
    times, states, tags = [0.0], [psi], [0]
    for index, phase in enumerate(schedule.phases):
        if phase.is_pulsed:
            step = pulse @ qcore.propagator(h, phase.tau)
            n = phase.n_pulses
            for k in range(1, n + 1):
                psi = step @ psi
                if k % pulse_stride == 0 or k == n:
                    times.append(t + k * phase.tau)
                    states.append(psi)
                    tags.append(index)
            t += n * phase.tau
        else:
            n_full = int(math.floor(phase.duration / free_dt * (1.0 + _ROUNDING_SLACK)))
            step = qcore.propagator(h, free_dt)
            for k in range(1, n_full + 1):
                psi = step @ psi
                times.append(t + k * free_dt)
                states.append(psi)
                tags.append(index)
            rest = phase.duration - n_full * free_dt
            if rest > _ROUNDING_SLACK * phase.duration:
                psi = qcore.propagator(h, rest) @ psi
                times.append(t + phase.duration)
                states.append(psi)
                tags.append(index)
            t += phase.duration

    durations = tuple(ph.actual_duration for ph in schedule.phases)
    return SimulationRun(_series(p, times, states, tags), psi, durations)


def floquet_operator(p: ModelParams, tau: float, include_battery: bool = False) -> FloquetOperator:
    """One inter-pulse period: free propagation for ``tau`` followed by the pulse.

    Without the battery this is the 4x4 operator on modulator ⊗ charger; with
    it, the 8x8 step of the full coupled model.
    """
    if not (math.isfinite(tau) and tau > 0):
        raise ScheduleError(f"tau must be positive, got {tau!r}")
    if include_battery:
        u = model.pulse_operator(p, 3) @ qcore.propagator(model.build_hmcb(p), tau)
    else:
        u = model.pulse_operator(p, 2) @ qcore.propagator(model.build_hmc(p), tau)
    return FloquetOperator(u, float(tau))


def _unitary_eigh(u: np.ndarray) -> tuple[np.ndarray, np.ndarray] | None:
    """Unit-modulus eigenvalues and unitary eigenvectors of a unitary matrix.

    The complex Schur form of a normal matrix is diagonal, so its Schur
    vectors are orthonormal eigenvectors even inside degenerate eigenspaces.
    Returns ``None`` when the triangular factor is not diagonal to roundoff.
    """
    tri, z = scipy.linalg.schur(u, output="complex")
    if np.max(np.abs(np.triu(tri, 1))) > 1e-10:
        return None
    return np.angle(np.diag(tri)), z


def run_stroboscopic(
    p: ModelParams,
    tau: float,
    n_pulses: int,
    sample_stride: int = 1,
    psi0: np.ndarray | None = None,
) -> EnergyTimeSeries:
    """Pulse-boundary samples of a single pulsed phase of ``n_pulses`` intervals.

    The one-period operator is diagonalised once; the state after ``k``
    periods is then ``Z exp(i k phi) Z† psi0``, so the cost is independent
    of how many pulses separate two samples.
    """
    n_pulses = int(n_pulses)
    if n_pulses < 1:
        raise ScheduleError("n_pulses must be at least 1")
    if sample_stride < 1:
        raise ScheduleError("sample_stride must be at least 1")
    step = floquet_operator(p, tau, include_battery=True).matrix
    psi = model.initial_state(p) if psi0 is None else qcore.normalize(psi0)

    ks = np.arange(0, n_pulses + 1, sample_stride)
    if ks[-1] != n_pulses:
        ks = np.append(ks, n_pulses)

    decomposition = _unitary_eigh(step)
    if decomposition is None:
        return _stepwise_samples(p, step, psi, tau, ks)
    phases, z = decomposition
    coeffs = z.conj().T @ psi
    hc = model.charger_energy_operator(p)
    hb = model.battery_energy_operator(p)
    ec = np.empty(len(ks))
    eb = np.empty(len(ks))
    for start in range(0, len(ks), _CHUNK):
        block = ks[start : start + _CHUNK]
        amps = (coeffs * np.exp(1j * np.outer(block, phases))) @ z.T
        ec[start : start + len(block)] = qcore.expectations(amps, hc)
        eb[start : start + len(block)] = qcore.expectations(amps, hb)
    return EnergyTimeSeries(ks * float(tau), ec, eb, np.zeros(len(ks), dtype=int), p.g)


def _stepwise_samples(p, step, psi, tau, ks) -> EnergyTimeSeries:
    wanted = set(int(k) for k in ks)
    states = [psi] if 0 in wanted else []
    for k in range(1, int(ks[-1]) + 1):
        psi = step @ psi
        if k in wanted:
            states.append(psi)
    return _series(p, ks * float(tau), states, np.zeros(len(ks), dtype=int))


REGIMES = ("bare_resonant", "pulsed_dense_resonant")


def rabi_oracle(p: ModelParams, regime: str, t) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form two-level energy transfer under the rotating-wave approximation.

    ``bare_resonant``: no pulses, battery tuned to the ``v1 <-> v3`` gap,
    effective coupling ``g/sqrt2``.  ``pulsed_dense_resonant``: modulator
    frozen by dense pulsing, battery tuned to the effective charger gap
    ``lambda3``, effective coupling ``g``.

    Returns:
        ``(ec, eb)`` at time(s) ``t``, with ``eb = 2 omega1 sin^2(g_eff t)`` and
        ``ec = lambda3 - eb``.
    """
    if regime == "bare_resonant":
        expected, g_eff = p.bare_resonant_omega1, p.g / math.sqrt(2.0)
    elif regime == "pulsed_dense_resonant":
        expected, g_eff = p.resonant_omega1, p.g
    else:
        raise ValueError(f"unknown regime {regime!r}; choose from {REGIMES}")
    if abs(p.omega1 - expected) > 1e-9 * max(1.0, expected):
        raise RegimeMismatchError(
            f"{regime} requires omega1 = {expected:.12g}, got {p.omega1:.12g}"
        )
    t = np.asarray(t, dtype=float)
    eb = p.capacity * np.sin(g_eff * t) ** 2
    return p.lambda3 - eb, eb


def pulsed_window(tau: float, window: float) -> int:
    """Number of whole intervals ``tau`` that fit inside ``window``."""
    return int(math.floor(window / tau * (1.0 + _ROUNDING_SLACK)))

