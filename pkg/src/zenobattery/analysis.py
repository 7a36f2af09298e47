"""Charging capacity and charging time from energy curves, and sweeps over tau.

The charger energy of a charging run is modelled as

    E_c(t) = A/2 * (cos(pi t / T) - 1) + lambda3

where ``A`` is the energy deposited in the battery and ``T`` the first time
the battery is full.  Sweeping the inter-pulse interval ``tau`` exposes
isolated spikes of ``T`` at ``tau_n = 2 pi n / lambda4``.
"""
from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import least_squares

from . import engine
from .engine import EnergyTimeSeries
from .errors import (
    TooFewPointsError,
    TooFewSamplesError,
    TooFewValleysError,
)
from .model import ModelParams

MIN_SAMPLES = 50
SEED_FRACTION = 0.9
RELEASE_FRACTION = 0.5


@dataclasses.dataclass(frozen=True)
class FitResult:
    """Charging capacity ``a`` and first full-charge time ``t_charge``.

    When ``resolved`` is false the first maximum lies beyond the simulated
    window: ``t_charge`` is then the window end (a lower bound) and ``a`` the
    largest battery energy seen.
    """

    a: float
    t_charge: float
    residual: float
    resolved: bool

    @property
    def power(self) -> float:
        """Average charging power ``A / T``."""
        return self.a / self.t_charge


def tau_scaled(tau, g: float):
    """Interval in the plotting unit ``(1000/pi) g tau``."""
    return 1000.0 * g * np.asarray(tau, dtype=float) / math.pi


def tau_from_scaled(scaled, g: float):
    return math.pi * np.asarray(scaled, dtype=float) / (1000.0 * g)


def charging_model(t, a: float, t_charge: float, offset: float) -> np.ndarray:
    return 0.5 * a * (np.cos(math.pi * np.asarray(t) / t_charge) - 1.0) + offset


def _first_maximum(eb: np.ndarray) -> int | None:
    """Index of the first full-charge maximum of the battery energy.

    The first excursion above 90% of the window maximum is followed until the
    energy drops below half the window maximum; its largest sample (earliest
    on ties) is the maximum.  Small aliased ripple near the crest therefore
    cannot end the excursion early.  ``None`` if the excursion is still
    rising at the end of the window.
    """
    top = eb.max()
    if not top > 0:
        return None
    start = int(np.argmax(eb >= SEED_FRACTION * top))
    below = np.nonzero(eb[start:] < RELEASE_FRACTION * top)[0]
    stop = start + int(below[0]) if len(below) else len(eb)
    i = start + int(np.argmax(eb[start:stop]))
    return i if 0 < i < len(eb) - 1 else None


def first_maximum(series: EnergyTimeSeries) -> tuple[float, float] | None:
    """``(t, E_b)`` at the first full-charge maximum, or ``None`` if it lies past the window."""
    i = _first_maximum(np.asarray(series.eb, dtype=float))
    if i is None:
        return None
    return float(series.times[i]), float(series.eb[i])


def _parabolic_vertex(t: np.ndarray, y: np.ndarray, i: int) -> tuple[float, float]:
    (t0, t1, t2), (y0, y1, y2) = t[i - 1 : i + 2], y[i - 1 : i + 2]
    # Lagrange form: y = c2 (x-t1)^2 + c1 (x-t1) + y1
    d0, d2 = t0 - t1, t2 - t1
    s0, s2 = (y0 - y1) / d0, (y2 - y1) / d2
    c2 = (s2 - s0) / (d2 - d0)
    c1 = s0 - c2 * d0
    if c2 >= 0:
        return float(t1), float(y1)
    dx = min(max(-c1 / (2 * c2), d0), d2)
    return float(t1 + dx), float(y1 + c1 * dx + c2 * dx * dx)


def fit_charging_curve(series: EnergyTimeSeries, p: ModelParams) -> FitResult:
    """Extract ``(A, T)`` from one charging run.

    Seeds ``T`` at the first qualifying maximum of the battery energy
    (refined through a parabola on the three nearest samples), then refines
    ``A`` and ``T`` by least squares of the charger-energy model over the
    half-period ``[0, T_seed]``.

    Raises:
        TooFewSamplesError: fewer than 50 samples.
    """
    t = np.asarray(series.times, dtype=float)
    ec = np.asarray(series.ec, dtype=float)
    eb = np.asarray(series.eb, dtype=float)
    if len(t) < MIN_SAMPLES:
        raise TooFewSamplesError(f"need at least {MIN_SAMPLES} samples, got {len(t)}")
    offset = p.lambda3

    i = _first_maximum(eb)
    if i is None:
        a, t_end = float(eb.max()), float(t[-1])
        return FitResult(a, t_end, _rms(t, ec, a, t_end, offset), False)

    t_seed, a_seed = _parabolic_vertex(t, eb, i)
    in_window = t <= t_seed
    tw, ew = t[in_window], ec[in_window]
    a, t_fit = a_seed, t_seed
    if len(tw) >= 3:
        sol = least_squares(
            lambda x: charging_model(tw, x[0], x[1], offset) - ew,
            x0=[a_seed, t_seed],
            method="lm",
            x_scale=[max(a_seed, 1e-12), t_seed],
            xtol=1e-15,
            ftol=1e-15,
            gtol=1e-15,
        )
        a_ls, t_ls = (float(v) for v in sol.x)
        # a diverging refinement on a featureless curve keeps the seed
        if np.all(np.isfinite(sol.x)) and a_ls > 0 and 0.5 * t_seed < t_ls < 2.0 * t_seed:
            a, t_fit = a_ls, t_ls
    return FitResult(a, t_fit, _rms(tw, ew, a, t_fit, offset), True)


def _rms(t, ec, a, t_charge, offset) -> float:
    if a <= 0:
        return 0.0 if len(t) == 0 else float("inf")
    return float(np.sqrt(np.mean((charging_model(t, a, t_charge, offset) - ec) ** 2)) / a)


def predict_peaks(p: ModelParams, n_max: int) -> np.ndarray:
    """Intervals ``tau_n = 2 pi n / lambda4`` for ``n = 1..n_max``."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    return 2.0 * math.pi * np.arange(1, n_max + 1) / p.lambda4


class ValleyFit(NamedTuple):
    slope: float
    residual: float
    indices: tuple[int, ...]


@dataclasses.dataclass(frozen=True)
class ScanResult:
    """Fits over a grid of inter-pulse intervals.

    ``coarse`` marks the points of the base grid; the others refine the
    neighbourhood of predicted peaks.  ``valley_slope`` is ``T / tau`` through
    the valley minima in raw time units, i.e. the number of pulses per charge.
    """

    taus: np.ndarray
    fits: tuple[FitResult, ...]
    coarse: np.ndarray
    g: float
    window: float
    predicted_peaks: np.ndarray = dataclasses.field(default_factory=lambda: np.empty(0))
    detected_peaks: tuple[int, ...] = ()
    valley_slope: float | None = None
    valley_residual: float | None = None
    valley_indices: tuple[int, ...] = ()

    @property
    def t_charge(self) -> np.ndarray:
        return np.array([f.t_charge for f in self.fits])

    @property
    def capacity(self) -> np.ndarray:
        return np.array([f.a for f in self.fits])

    @property
    def resolved(self) -> np.ndarray:
        return np.array([f.resolved for f in self.fits], dtype=bool)

    @property
    def tau_scaled(self) -> np.ndarray:
        return tau_scaled(self.taus, self.g)


def tau_grid(
    p: ModelParams,
    start: float = 0.5,
    stop: float = 50.0,
    step: float = 0.25,
    refine: int = 5,
    halfwidth: float = 1.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Sweep grid in scaled units, refined around every predicted peak.

    The refined points lie on the lattice ``start + k step/refine``, so no
    point is placed on a predicted peak unless the lattice happens to hit it.

    Returns:
        ``(taus, coarse)``: raw intervals and the mask of base-grid points.
    """
    if not (step > 0 and stop >= start and refine >= 1):
        raise ValueError("grid needs step > 0, stop >= start and refine >= 1")
    n_coarse = int(round((stop - start) / step))
    fine = step / refine
    lattice = set(range(0, n_coarse * refine + 1, refine))
    if refine > 1:
        n_max = max(1, int(math.floor(tau_from_scaled(stop + halfwidth, p.g) * p.lambda4 / (2 * math.pi))))
        for s_n in tau_scaled(predict_peaks(p, n_max), p.g):
            lo = max(0, math.ceil((s_n - halfwidth - start) / fine - 1e-9))
            hi = min(n_coarse * refine, math.floor((s_n + halfwidth - start) / fine + 1e-9))
            lattice.update(range(lo, hi + 1))
    ks = np.array(sorted(lattice))
    taus = tau_from_scaled(start + ks * fine, p.g)
    return taus, ks % refine == 0


def _scan_point(args) -> FitResult:
    p, tau, window = args
    n = engine.pulsed_window(tau, window)
    if n < 1:
        raise ValueError(f"window {window} shorter than tau={tau}")
    return fit_charging_curve(engine.run_stroboscopic(p, tau, n), p)


def default_window(p: ModelParams) -> float:
    return 300.0 * math.pi / (2.0 * p.g)


def scan_tau(
    p: ModelParams,
    taus: Sequence[float],
    window: float | None = None,
    parallel: int = 1,
    coarse: Sequence[bool] | None = None,
) -> ScanResult:
    """Fit one stroboscopic run per interval and annotate peaks and valleys.

    Results follow the order of ``taus`` whatever ``parallel`` is.
    """
    taus = np.asarray(taus, dtype=float)
    if taus.ndim != 1 or len(taus) == 0:
        raise TooFewPointsError("tau grid is empty")
    if np.any(taus <= 0) or np.any(np.diff(taus) <= 0):
        raise ValueError("tau grid must be positive and strictly increasing")
    window = default_window(p) if window is None else float(window)
    if not window > 0:
        raise ValueError("window must be positive")
    coarse = np.ones(len(taus), dtype=bool) if coarse is None else np.asarray(coarse, dtype=bool)
    if coarse.shape != taus.shape:
        raise ValueError("coarse mask must match the grid")

    jobs = [(p, float(tau), window) for tau in taus]
    if parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            fits = tuple(pool.map(_scan_point, jobs, chunksize=max(1, len(jobs) // (4 * parallel))))
    else:
        fits = tuple(_scan_point(job) for job in jobs)

    n_max = max(1, int(math.floor(taus[-1] * p.lambda4 / (2 * math.pi))) + 1)
    scan = ScanResult(taus, fits, coarse, p.g, window, predicted_peaks=predict_peaks(p, n_max))
    if len(taus) >= 5:
        scan = dataclasses.replace(scan, detected_peaks=tuple(detect_peaks(scan)))
    try:
        valleys = fit_valleys(scan)
    except TooFewValleysError:
        return scan
    return dataclasses.replace(
        scan,
        valley_slope=valleys.slope,
        valley_residual=valleys.residual,
        valley_indices=valleys.indices,
    )


def _neighbour_median(values, pool, taus, i, k) -> float:
    pool = pool[pool != i]
    order = np.argsort(np.abs(taus[pool] - taus[i]), kind="stable")[:k]
    return float(np.median(values[pool[order]]))


def detect_peaks(scan: ScanResult, factor: float = 3.0, neighbours: int = 20) -> list[int]:
    """Indices of isolated spikes in the charging time.

    A point is flagged when its ``T`` is at least ``factor`` times the median
    over its ``neighbours`` nearest base-grid points, or when it is censored
    while its immediate neighbours are resolved.  Each run of consecutive
    flagged points is reported once, at its smallest capacity.

    Raises:
        TooFewPointsError: fewer than 5 grid points.
    """
    n = len(scan.taus)
    if n < 5:
        raise TooFewPointsError(f"peak detection needs at least 5 points, got {n}")
    t_charge, resolved, taus = scan.t_charge, scan.resolved, scan.taus
    pool = np.nonzero(scan.coarse)[0]
    if len(pool) <= neighbours:
        pool = np.arange(n)

    flagged = np.zeros(n, dtype=bool)
    for i in range(n):
        spike = t_charge[i] >= factor * _neighbour_median(t_charge, pool, taus, i, neighbours)
        around = [j for j in (i - 1, i + 1) if 0 <= j < n]
        censored = not resolved[i] and all(resolved[j] for j in around)
        flagged[i] = spike or censored

    capacity = scan.capacity
    peaks = []
    i = 0
    while i < n:
        if not flagged[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and flagged[j + 1]:
            j += 1
        run = np.arange(i, j + 1)
        # the capacity collapse pins the singular point; T plateaus around it
        peaks.append(int(run[np.lexsort((-t_charge[run], capacity[run]))[0]]))
        i = j + 1
    return peaks


def local_step(taus: np.ndarray, i: int) -> float:
    gaps = [taus[j + 1] - taus[j] for j in (i - 1, i) if 0 <= j < len(taus) - 1]
    return float(max(gaps))


class PeakMatch(NamedTuple):
    index: int
    tau: float
    nearest_predicted: float
    within_one_step: bool


def match_peaks(scan: ScanResult) -> list[PeakMatch]:
    """Pair every detected peak with the nearest predicted ``tau_n``."""
    out = []
    for i in scan.detected_peaks:
        tau = float(scan.taus[i])
        nearest = float(scan.predicted_peaks[np.argmin(np.abs(scan.predicted_peaks - tau))])
        out.append(PeakMatch(i, tau, nearest, abs(tau - nearest) <= local_step(scan.taus, i) * (1 + 1e-9)))
    return out


def _prominence(values: np.ndarray, j: int) -> float:
    """Depth of the valley at ``j`` below its lower enclosing crest.

    A side that reaches the end of the grid without meeting a lower point
    does not limit the depth.
    """
    sides = []
    for direction in (-1, 1):
        k, crest, closed = j + direction, values[j], False
        while 0 <= k < len(values):
            if values[k] < values[j]:
                closed = True
                break
            crest = max(crest, values[k])
            k += direction
        sides.append((crest, closed))
    closed_crests = [c for c, closed in sides if closed]
    crest = min(closed_crests) if closed_crests else max(c for c, _ in sides)
    return float(crest - values[j])


def fit_valleys(
    scan: ScanResult, prominence: float = 0.05, neighbours: int = 10
) -> ValleyFit:
    """Slope of ``T`` against ``tau`` through the valley minima, intercept zero.

    Valleys are strict local minima of ``T`` over the base grid, excluding
    censored points, whose depth is at least ``prominence`` times the median
    ``T`` of their ``neighbours`` nearest base-grid points.

    Raises:
        TooFewValleysError: fewer than three valleys.
    """
    idx = np.nonzero(scan.coarse)[0]
    taus, t_all, res_all = scan.taus[idx], scan.t_charge[idx], scan.resolved[idx]
    pool = np.arange(len(idx))
    valleys = []
    for j in range(1, len(idx) - 1):
        if not (res_all[j] and t_all[j] < t_all[j - 1] and t_all[j] < t_all[j + 1]):
            continue
        floor_ = prominence * _neighbour_median(t_all, pool, taus, j, neighbours)
        if _prominence(t_all, j) >= floor_:
            valleys.append(j)
    if len(valleys) < 3:
        raise TooFewValleysError(f"found {len(valleys)} valleys, need at least 3")
    x, y = taus[valleys], t_all[valleys]
    slope = float(np.dot(x, y) / np.dot(x, x))
    residual = float(np.sqrt(np.mean((y - slope * x) ** 2)))
    return ValleyFit(slope, residual, tuple(int(idx[j]) for j in valleys))
