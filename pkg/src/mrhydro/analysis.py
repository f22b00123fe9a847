"""Frequency-domain analysis: Bode data, bandwidth, margins, root locus.

All magnitude data is reported relative to the DC gain, which makes every
result here invariant to the (unknown) absolute current-to-force gain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tf import RationalTF, evaluate_at_jw, polynomial_roots

_SQRT_HALF = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class BodeTable:
    """Rows of (frequency Hz, magnitude dB re DC, unwrapped phase deg)."""

    freq_hz: np.ndarray
    mag_db: np.ndarray
    phase_deg: np.ndarray


@dataclass(frozen=True)
class RootLocusTrace:
    """Closed-loop poles along a strictly increasing gain sweep.

    `poles[i]` are the poles at `gains[i]`, ordered by continuity with the
    previous gain; the pole count equals the open-loop denominator degree.
    `note` is None for a complete trace, else a description of where the
    sweep was truncated.
    """

    gains: np.ndarray
    poles: np.ndarray  # shape (n_gains, n_poles), complex
    note: str | None = None


def bode(g: RationalTF, f_lo: float, f_hi: float, n: int = 500) -> BodeTable:
    """Log-spaced Bode table, magnitude normalized to DC, phase unwrapped.

    The unwrap seed is the principal phase (-180, 180] at the lowest grid
    frequency; continuing upward guarantees no +-360 deg jumps between rows.
    """
    if not (0.0 < f_lo < f_hi):
        raise ValueError("require 0 < f_lo < f_hi")
    if n < 2:
        raise ValueError("need at least two grid points")
    f = np.logspace(math.log10(f_lo), math.log10(f_hi), n)
    vals = evaluate_at_jw(g, f)
    dc = abs(g.dc_gain())
    if dc == 0.0:
        raise ValueError("DC gain is zero; relative magnitude undefined")
    mag_db = 20.0 * np.log10(np.abs(vals) / dc)
    phase_deg = np.degrees(np.unwrap(np.angle(vals)))
    return BodeTable(freq_hz=f, mag_db=mag_db, phase_deg=phase_deg)


def bandwidth_3db(g: RationalTF, f_lo: float = 0.01, f_hi: float = 1000.0,
                  n_coarse: int = 2000, f_tol: float = 1e-4) -> float:
    """Lowest frequency where |g| first drops below DC/sqrt(2).

    Coarse log sweep followed by bisection to `f_tol` Hz. Resonant peaks above
    the DC value never terminate the search; only the first downward crossing
    counts. Returns math.inf when there is no crossing below `f_hi`.
    """
    dc = abs(g.dc_gain())
    if dc == 0.0:
        raise ValueError("DC gain is zero; -3 dB level undefined")
    f = np.logspace(math.log10(f_lo), math.log10(f_hi), n_coarse)
    below = np.abs(evaluate_at_jw(g, f)) / dc < _SQRT_HALF
    if not below.any():
        return math.inf
    i = int(np.argmax(below))
    lo = f[i - 1] if i > 0 else f_lo * 1e-3
    hi = f[i]
    while hi - lo > f_tol:
        mid = 0.5 * (lo + hi)
        if abs(evaluate_at_jw(g, mid)) / dc < _SQRT_HALF:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def closed_loop_poles(g: RationalTF, gain: float) -> np.ndarray:
    """Poles of unity feedback around gain*g."""
    char = g.den + g.num.scaled(gain)
    return polynomial_roots(char)


def root_locus(g: RationalTF, gains) -> RootLocusTrace:
    """Closed-loop poles for each gain, branches ordered by continuity.

    Ordering uses greedy nearest-neighbor matching against the previous
    gain's poles, seeded with the open-loop poles. If the root finder fails
    at some gain the trace is truncated there and annotated.
    """
    gains = np.asarray(gains, dtype=float)
    if gains.size == 0 or np.any(gains <= 0.0) or np.any(np.diff(gains) <= 0.0):
        raise ValueError("gains must be positive and strictly increasing")
    prev = polynomial_roots(g.den)
    rows = []
    note = None
    for i, k in enumerate(gains):
        try:
            current = closed_loop_poles(g, k)
        except Exception as exc:  # root finder gave up at this gain
            note = f"truncated at gain {k:g}: {exc}"
            gains = gains[:i]
            break
        ordered = _match_to_previous(prev, current)
        rows.append(ordered)
        prev = ordered
    return RootLocusTrace(gains=gains, poles=np.array(rows), note=note)


def _match_to_previous(prev: np.ndarray, current: np.ndarray) -> np.ndarray:
    taken = np.zeros(len(current), dtype=bool)
    out = np.empty_like(current)
    for i, pr in enumerate(prev):
        d = np.abs(current - pr)
        d[taken] = np.inf
        j = int(np.argmin(d))
        taken[j] = True
        out[i] = current[j]
    return out


def default_gain_grid(g: RationalTF, n: int = 200) -> np.ndarray:
    """Log gain grid spanning [1e-3*k*, 10*k*] around the stability limit.

    When the loop never destabilizes within the search window the grid covers
    a fixed six-decade span instead.
    """
    k_star = max_stable_gain(g)
    if math.isinf(k_star):
        return np.logspace(-3.0, 3.0, n)
    return np.logspace(math.log10(k_star) - 3.0, math.log10(k_star) + 1.0, n)


def max_stable_gain(g: RationalTF, k_lo: float = 1e-6, k_hi: float = 1e6,
                    rel_tol: float = 1e-3) -> float:
    """Supremum of k for which unity feedback around k*g stays stable.

    Log-bisection of the stability predicate between `k_lo` and `k_hi`;
    returns math.inf if still stable at `k_hi` ("unbounded" for practical
    purposes). The open loop itself must be stable.
    """

    def stable(k: float) -> bool:
        return bool(np.all(closed_loop_poles(g, k).real < 0.0))

    if np.any(polynomial_roots(g.den).real >= 0.0):
        raise ValueError("open loop is unstable; gain search not supported")
    if not stable(k_lo):
        return 0.0
    if stable(k_hi):
        return math.inf
    lo, hi = k_lo, k_hi
    while hi / lo > 1.0 + rel_tol:
        mid = math.sqrt(lo * hi)
        if stable(mid):
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


def stability_margins(g: RationalTF, f_lo: float = 1e-3, f_hi: float = 1e4,
                      n: int = 4000) -> tuple[float, float]:
    """Classical (gain margin dB, phase margin deg) of the loop transfer g.

    Worst margin over all crossovers in the scanned band; math.inf for a
    margin whose crossover does not exist.
    """
    f = np.logspace(math.log10(f_lo), math.log10(f_hi), n)
    vals = evaluate_at_jw(g, f)
    mag = np.abs(vals)
    phase = np.degrees(np.unwrap(np.angle(vals)))

    gm_db = math.inf
    delta = phase + 180.0
    for i in np.nonzero(np.sign(delta[:-1]) * np.sign(delta[1:]) < 0)[0]:
        fc = _bisect_crossing(g, f[i], f[i + 1], phase[i],
                              lambda v, ref: _cont_phase_deg(v, ref) + 180.0)
        gm_db = min(gm_db, -20.0 * math.log10(abs(evaluate_at_jw(g, fc))))

    pm_deg = math.inf
    logm = np.log10(np.maximum(mag, 1e-300))
    for i in np.nonzero(np.sign(logm[:-1]) * np.sign(logm[1:]) < 0)[0]:
        fc = _bisect_crossing(g, f[i], f[i + 1], None,
                              lambda v, ref: math.log10(max(abs(v), 1e-300)))
        ref_phase = phase[i]
        pm_deg = min(pm_deg, 180.0 + _cont_phase_deg(evaluate_at_jw(g, fc), ref_phase))
    return gm_db, pm_deg


def _cont_phase_deg(value: complex, ref_deg: float | None) -> float:
    """Principal phase shifted by whole turns to sit nearest `ref_deg`."""
    ph = math.degrees(math.atan2(value.imag, value.real))
    if ref_deg is None:
        return ph
    while ph - ref_deg > 180.0:
        ph -= 360.0
    while ph - ref_deg < -180.0:
        ph += 360.0
    return ph


def _bisect_crossing(g: RationalTF, f_a: float, f_b: float, ref, fn) -> float:
    va = fn(evaluate_at_jw(g, f_a), ref)
    for _ in range(60):
        mid = math.sqrt(f_a * f_b)
        vm = fn(evaluate_at_jw(g, mid), ref)
        if va * vm <= 0.0:
            f_b = mid
        else:
            f_a, va = mid, vm
        if f_b / f_a < 1.0 + 1e-10:
            break
    return math.sqrt(f_a * f_b)


def resonance_peaks(g: RationalTF, f_lo: float, f_hi: float, n: int = 4000) -> list[float]:
    """Frequencies of local magnitude maxima of g on a log grid.

    Used to mask resonance neighborhoods when comparing analytical and
    estimated responses; only interior maxima count.
    """
    f = np.logspace(math.log10(f_lo), math.log10(f_hi), n)
    mag = np.abs(evaluate_at_jw(g, f))
    idx = np.nonzero((mag[1:-1] > mag[:-2]) & (mag[1:-1] > mag[2:]))[0] + 1
    return [float(f[i]) for i in idx]


def away_from_peaks(freqs: np.ndarray, peaks, frac: float = 0.10) -> np.ndarray:
    """Boolean mask of `freqs` outside +-frac bands around each peak."""
    mask = np.ones_like(freqs, dtype=bool)
    for fp in peaks:
        mask &= ~((freqs >= (1.0 - frac) * fp) & (freqs <= (1.0 + frac) * fp))
    return mask
