"""Time-domain simulation of the actuation line and its force controllers.

The plant is the three-mass line model plus the first-order clutch force lag,
integrated with fixed-step RK4 at an inner step that divides the controller
period. The controller runs at its own rate with zero-order-hold current
output clamped to the physical current range; three control laws are
provided: open-loop current feedforward, PI on the measured output force, and
PI on the measured line pressure with a reference scaling gain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal as _sp_signal

from .analysis import bandwidth_3db, stability_margins
from .params import (ActuationLineParams, BlockedLoad, CompliantLoad,
                     LoadImpedance, config_digest)
from .tf import (FrequencyResponse, Polynomial, RationalTF, force_response,
                 line_blocks, polynomial_roots, pressure_response)


class SimulationDivergence(RuntimeError):
    """The plant state became non-finite; message carries the first bad time."""


class MetricsError(ValueError):
    """The requested metric is undefined on the given window."""


# ---------------------------------------------------------------------------
# Plant
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlantState:
    """Positions/velocities of the three masses plus the lagged clutch force."""

    x1: float = 0.0   # m, reflected clutch-output / master translation
    v1: float = 0.0   # m/s
    x2: float = 0.0   # m, fluid displacement
    v2: float = 0.0   # m/s
    x3: float = 0.0   # m, output/load displacement (fixed 0 when blocked)
    v3: float = 0.0   # m/s
    f_mr: float = 0.0  # N, lagged clutch force (one-way: >= 0)

    def as_tuple(self):
        return (self.x1, self.v1, self.x2, self.v2, self.x3, self.v3, self.f_mr)


def plant_derivative(state, current: float, f_dist: float,
                     p: ActuationLineParams, z: LoadImpedance):
    """Time derivative of the plant state for a given applied current.

    The clutch transmits force in one direction only, so the force-lag state
    is not allowed to cross below zero: its derivative clamps at the
    boundary. With a blocked output the load coordinates are frozen and the
    external disturbance has no moving mass to act on.
    """
    x1, v1, x2, v2, x3, v3, f_mr = (state.as_tuple()
                                    if isinstance(state, PlantState) else tuple(state))
    pressure = p.k1 * (x1 - x2)
    force = p.k2 * (x2 - x3)
    df = (p.K_I * current - f_mr) / p.tau
    if f_mr <= 0.0 and df < 0.0:
        df = 0.0
    a1 = (f_mr - p.b1 * v1 - pressure) / p.m1
    a2 = (pressure - p.b2 * v2 - force) / p.m2
    if isinstance(z, BlockedLoad):
        dx3 = dv3 = 0.0
    else:
        dx3 = v3
        dv3 = (force - z.b3 * v3 - z.k3 * x3 + f_dist) / z.m3
    return (v1, a1, v2, a2, dx3, dv3, df)


def equilibrium_state(p: ActuationLineParams, z: LoadImpedance,
                      current: float) -> PlantState:
    """Static force balance for a constant current (zero-derivative state).

    A compliant load with zero spring rate has no static equilibrium; its
    position is set to zero there and the caller owns the consequences.
    """
    f = p.K_I * current
    if isinstance(z, BlockedLoad):
        x3 = 0.0
    else:
        x3 = f / z.k3 if z.k3 > 0.0 else 0.0
    x2 = x3 + f / p.k2
    x1 = x2 + f / p.k1
    return PlantState(x1=x1, x2=x2, x3=x3, f_mr=f)


def mechanical_energy(state: PlantState, p: ActuationLineParams,
                      z: LoadImpedance) -> float:
    """Kinetic plus spring potential energy stored in the line and load."""
    e = 0.5 * (p.m1 * state.v1**2 + p.m2 * state.v2**2)
    e += 0.5 * p.k1 * (state.x1 - state.x2)**2
    e += 0.5 * p.k2 * (state.x2 - state.x3)**2
    if isinstance(z, CompliantLoad):
        e += 0.5 * (z.m3 * state.v3**2 + z.k3 * state.x3**2)
    return e


def _span_blocked(sv, drive, h, n, pp, dist, j0):
    """Advance `n` RK4 sub-steps of size h with the output blocked."""
    x1, v1, x2, v2, _x3, _v3, fm = sv
    m1, b1, k1, m2, b2, k2, tau = pp
    h2 = 0.5 * h
    h6 = h / 6.0
    for _ in range(n):
        pr = k1 * (x1 - x2)
        fo = k2 * x2
        g = (drive - fm) / tau
        if fm <= 0.0 and g < 0.0:
            g = 0.0
        a1x, a1v = v1, (fm - b1 * v1 - pr) / m1
        b1x, b1v = v2, (pr - b2 * v2 - fo) / m2
        g1 = g
        X1 = x1 + h2 * a1x; V1 = v1 + h2 * a1v
        X2 = x2 + h2 * b1x; V2 = v2 + h2 * b1v
        FM = fm + h2 * g1
        pr = k1 * (X1 - X2); fo = k2 * X2
        g = (drive - FM) / tau
        if FM <= 0.0 and g < 0.0:
            g = 0.0
        a2x, a2v = V1, (FM - b1 * V1 - pr) / m1
        b2x, b2v = V2, (pr - b2 * V2 - fo) / m2
        g2 = g
        X1 = x1 + h2 * a2x; V1 = v1 + h2 * a2v
        X2 = x2 + h2 * b2x; V2 = v2 + h2 * b2v
        FM = fm + h2 * g2
        pr = k1 * (X1 - X2); fo = k2 * X2
        g = (drive - FM) / tau
        if FM <= 0.0 and g < 0.0:
            g = 0.0
        a3x, a3v = V1, (FM - b1 * V1 - pr) / m1
        b3x, b3v = V2, (pr - b2 * V2 - fo) / m2
        g3 = g
        X1 = x1 + h * a3x; V1 = v1 + h * a3v
        X2 = x2 + h * b3x; V2 = v2 + h * b3v
        FM = fm + h * g3
        pr = k1 * (X1 - X2); fo = k2 * X2
        g = (drive - FM) / tau
        if FM <= 0.0 and g < 0.0:
            g = 0.0
        a4x, a4v = V1, (FM - b1 * V1 - pr) / m1
        b4x, b4v = V2, (pr - b2 * V2 - fo) / m2
        g4 = g
        x1 += h6 * (a1x + 2.0 * a2x + 2.0 * a3x + a4x)
        v1 += h6 * (a1v + 2.0 * a2v + 2.0 * a3v + a4v)
        x2 += h6 * (b1x + 2.0 * b2x + 2.0 * b3x + b4x)
        v2 += h6 * (b1v + 2.0 * b2v + 2.0 * b3v + b4v)
        fm += h6 * (g1 + 2.0 * g2 + 2.0 * g3 + g4)
    return (x1, v1, x2, v2, 0.0, 0.0, fm)


def _span_compliant(sv, drive, h, n, pp, zz, dist, j0):
    """Advance `n` RK4 sub-steps; disturbance samples live on the half-step grid."""
    x1, v1, x2, v2, x3, v3, fm = sv
    m1, b1, k1, m2, b2, k2, tau = pp
    m3, b3, k3 = zz
    h2 = 0.5 * h
    h6 = h / 6.0
    for i in range(n):
        if dist is None:
            fd1 = fd2 = fd4 = 0.0
        else:
            j = j0 + 2 * i
            fd1 = dist[j]; fd2 = dist[j + 1]; fd4 = dist[j + 2]
        pr = k1 * (x1 - x2); fo = k2 * (x2 - x3)
        g = (drive - fm) / tau
        if fm <= 0.0 and g < 0.0:
            g = 0.0
        a1x, a1v = v1, (fm - b1 * v1 - pr) / m1
        b1x, b1v = v2, (pr - b2 * v2 - fo) / m2
        c1x, c1v = v3, (fo - b3 * v3 - k3 * x3 + fd1) / m3
        g1 = g
        X1 = x1 + h2 * a1x; V1 = v1 + h2 * a1v
        X2 = x2 + h2 * b1x; V2 = v2 + h2 * b1v
        X3 = x3 + h2 * c1x; V3 = v3 + h2 * c1v
        FM = fm + h2 * g1
        pr = k1 * (X1 - X2); fo = k2 * (X2 - X3)
        g = (drive - FM) / tau
        if FM <= 0.0 and g < 0.0:
            g = 0.0
        a2x, a2v = V1, (FM - b1 * V1 - pr) / m1
        b2x, b2v = V2, (pr - b2 * V2 - fo) / m2
        c2x, c2v = V3, (fo - b3 * V3 - k3 * X3 + fd2) / m3
        g2 = g
        X1 = x1 + h2 * a2x; V1 = v1 + h2 * a2v
        X2 = x2 + h2 * b2x; V2 = v2 + h2 * b2v
        X3 = x3 + h2 * c2x; V3 = v3 + h2 * c2v
        FM = fm + h2 * g2
        pr = k1 * (X1 - X2); fo = k2 * (X2 - X3)
        g = (drive - FM) / tau
        if FM <= 0.0 and g < 0.0:
            g = 0.0
        a3x, a3v = V1, (FM - b1 * V1 - pr) / m1
        b3x, b3v = V2, (pr - b2 * V2 - fo) / m2
        c3x, c3v = V3, (fo - b3 * V3 - k3 * X3 + fd2) / m3
        g3 = g
        X1 = x1 + h * a3x; V1 = v1 + h * a3v
        X2 = x2 + h * b3x; V2 = v2 + h * b3v
        X3 = x3 + h * c3x; V3 = v3 + h * c3v
        FM = fm + h * g3
        pr = k1 * (X1 - X2); fo = k2 * (X2 - X3)
        g = (drive - FM) / tau
        if FM <= 0.0 and g < 0.0:
            g = 0.0
        a4x, a4v = V1, (FM - b1 * V1 - pr) / m1
        b4x, b4v = V2, (pr - b2 * V2 - fo) / m2
        c4x, c4v = V3, (fo - b3 * V3 - k3 * X3 + fd4) / m3
        g4 = g
        x1 += h6 * (a1x + 2.0 * a2x + 2.0 * a3x + a4x)
        v1 += h6 * (a1v + 2.0 * a2v + 2.0 * a3v + a4v)
        x2 += h6 * (b1x + 2.0 * b2x + 2.0 * b3x + b4x)
        v2 += h6 * (b1v + 2.0 * b2v + 2.0 * b3v + b4v)
        x3 += h6 * (c1x + 2.0 * c2x + 2.0 * c3x + c4x)
        v3 += h6 * (c1v + 2.0 * c2v + 2.0 * c3v + c4v)
        fm += h6 * (g1 + 2.0 * g2 + 2.0 * g3 + g4)
    return (x1, v1, x2, v2, x3, v3, fm)


# ---------------------------------------------------------------------------
# Controllers, reference signals, disturbances
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OpenLoop:
    """Feedforward: current command = g1 * reference force."""

    g1: float  # A/N


@dataclass(frozen=True)
class ForcePI:
    """PI on the measured output force (non-collocated load-cell signal)."""

    kp: float  # A/N
    ki: float  # A/(N*s)


@dataclass(frozen=True)
class PressurePI:
    """PI on the measured line pressure; reference scaled by g2 first."""

    kp: float  # A/N
    ki: float  # A/(N*s)
    g2: float = 1.0  # pressure reference per unit force reference


Controller = OpenLoop | ForcePI | PressurePI


@dataclass(frozen=True)
class Step:
    """Reference step: y0 before t0, y1 from t0 on."""

    t0: float
    y0: float
    y1: float


@dataclass(frozen=True)
class LogChirp:
    """Logarithmic sine sweep f0 -> f1 over `duration`, then held at its end value.

    The phase is phi(t) = 2*pi*f0*T/ln(f1/f0) * ((f1/f0)^(t/T) - 1), so the
    instantaneous frequency is exactly f0 at t=0 and f1 at t=T.
    """

    f0: float
    f1: float
    duration: float
    amplitude: float
    center: float

    def __post_init__(self):
        if not 0.0 < self.f0 < self.f1:
            raise ValueError("require 0 < f0 < f1 (a log sweep cannot start at 0 Hz)")
        if self.duration <= 0.0:
            raise ValueError("duration must be > 0")

    def phase(self, t: float) -> float:
        r = self.f1 / self.f0
        tt = min(max(t, 0.0), self.duration)
        return 2.0 * math.pi * self.f0 * self.duration / math.log(r) * (
            r ** (tt / self.duration) - 1.0)


@dataclass(frozen=True)
class Mixed:
    """Step reference followed by a chirp from `chirp_start` on."""

    step: Step
    chirp: LogChirp
    chirp_start: float


@dataclass(frozen=True)
class MultisineDisturbance:
    """Seeded band-limited pseudo-random force: a sum of fixed sinusoids.

    Component frequencies are log-spaced across [f_lo, f_hi] and their
    amplitudes fall as 1/f^2 from f_lo, the red spectrum typical of
    human-motion and tool-feed disturbances (slow pushing dominates, with a
    tail up to f_hi). Phases are drawn once from the seeded generator, so
    the waveform is a pure function of this spec.
    """

    seed: int = 0
    n_components: int = 32
    f_lo: float = 0.2   # Hz
    f_hi: float = 10.0  # Hz
    amplitude: float = 1.0  # N at f_lo

    def sample(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        freqs = np.geomspace(self.f_lo, self.f_hi, self.n_components)
        phases = np.random.default_rng(self.seed).uniform(0.0, 2.0 * math.pi,
                                                          self.n_components)
        out = np.zeros_like(t)
        for fk, ph in zip(freqs, phases):
            out += (self.f_lo / fk) ** 2 * np.sin(2.0 * math.pi * fk * t + ph)
        return self.amplitude * out


@dataclass(frozen=True)
class ConstantWithDisturbance:
    """Constant reference force with an attached plant disturbance."""

    level: float
    disturbance: MultisineDisturbance


SignalSpec = Step | LogChirp | Mixed | ConstantWithDisturbance


def mixed_reference() -> Mixed:
    """Default tracking scenario: 50->250 N step at 1 s, then a 0.1-6 Hz,
    100 N amplitude chirp about 150 N starting at 3 s for 20 s."""
    return Mixed(step=Step(t0=1.0, y0=50.0, y1=250.0),
                 chirp=LogChirp(f0=0.1, f1=6.0, duration=20.0,
                                amplitude=100.0, center=150.0),
                 chirp_start=3.0)


def generate_signal(sig: SignalSpec, t: float) -> float:
    """Reference value at time t >= 0."""
    if isinstance(sig, Step):
        return sig.y1 if t >= sig.t0 else sig.y0
    if isinstance(sig, LogChirp):
        return sig.center + sig.amplitude * math.sin(sig.phase(t))
    if isinstance(sig, Mixed):
        if t < sig.chirp_start:
            return generate_signal(sig.step, t)
        return generate_signal(sig.chirp, t - sig.chirp_start)
    if isinstance(sig, ConstantWithDisturbance):
        return sig.level
    raise TypeError(f"unknown signal spec {sig!r}")


def signal_series(sig: SignalSpec, times) -> np.ndarray:
    return np.array([generate_signal(sig, float(t)) for t in np.asarray(times)])


# ---------------------------------------------------------------------------
# Simulation driver
# ---------------------------------------------------------------------------

@dataclass
class SimResult:
    """Uniformly sampled run record at the controller rate.

    `pressure` and `force` are recomputable from `states` at every sample;
    `current` holds the zero-order-hold command applied over [t_k, t_k+1).
    """

    times: np.ndarray
    reference: np.ndarray
    current: np.ndarray
    clutch_force: np.ndarray
    pressure: np.ndarray
    force: np.ndarray
    states: np.ndarray           # shape (n, 7): x1 v1 x2 v2 x3 v3 f_mr
    meta: dict = field(default_factory=dict)


def run_simulation(p: ActuationLineParams, z: LoadImpedance, ctrl: Controller,
                   sig: SignalSpec, duration: float, *,
                   sample_rate: float = 1500.0, n_substeps: int = 10,
                   clamp_current: bool = True,
                   initial_state: PlantState | None = None,
                   initial_integrator: float = 0.0,
                   disturbance: MultisineDisturbance | None = None) -> SimResult:
    """Integrate the plant under the given controller and reference.

    The controller runs at `sample_rate` with zero-order-hold current output;
    the plant advances with `n_substeps` RK4 steps per controller period. PI
    controllers use clamping anti-windup: the integrator freezes whenever the
    output saturates in the direction of the current error. Disturbances are
    sampled on the half-substep grid so every RK4 stage sees its exact value.
    """
    if duration <= 0.0 or sample_rate <= 0.0 or n_substeps < 1:
        raise ValueError("need duration > 0, sample_rate > 0, n_substeps >= 1")
    n_steps = int(round(duration * sample_rate))
    ts = 1.0 / sample_rate
    h = ts / n_substeps
    blocked = isinstance(z, BlockedLoad)
    pp = (p.m1, p.b1, p.k1, p.m2, p.b2, p.k2, p.tau)
    zz = None if blocked else (z.m3, z.b3, z.k3)

    if disturbance is None and isinstance(sig, ConstantWithDisturbance):
        disturbance = sig.disturbance
    dist_grid = None
    if disturbance is not None and not blocked:
        half_t = np.arange(2 * n_steps * n_substeps + 1) * (0.5 * h)
        dist_grid = disturbance.sample(half_t)

    sv = (initial_state or PlantState()).as_tuple()
    if blocked and (sv[4] != 0.0 or sv[5] != 0.0):
        raise ValueError("blocked load requires x3 = v3 = 0 in the initial state")

    times = np.arange(n_steps + 1) * ts
    ref_arr = np.empty(n_steps + 1)
    cur_arr = np.empty(n_steps + 1)
    fmr_arr = np.empty(n_steps + 1)
    prs_arr = np.empty(n_steps + 1)
    frc_arr = np.empty(n_steps + 1)
    states = np.empty((n_steps + 1, 7))

    integ = initial_integrator
    i_lo, i_hi = p.I_min, p.I_max
    isfinite = math.isfinite

    for k in range(n_steps + 1):
        t = times[k]
        ref = generate_signal(sig, t)
        x1, v1, x2, v2, x3, v3, fm = sv
        pressure = p.k1 * (x1 - x2)
        force = p.k2 * (x2 - x3)
        if not (isfinite(pressure) and isfinite(force) and isfinite(fm)):
            raise SimulationDivergence(f"non-finite plant state at t = {t:.6f} s")

        if isinstance(ctrl, OpenLoop):
            u = ctrl.g1 * ref
        else:
            if isinstance(ctrl, ForcePI):
                err = ref - force
                kp, ki = ctrl.kp, ctrl.ki
            else:
                err = ctrl.g2 * ref - pressure
                kp, ki = ctrl.kp, ctrl.ki
            u_raw = kp * err + integ
            if clamp_current:
                u = min(max(u_raw, i_lo), i_hi)
                windup = (u_raw > i_hi and err > 0.0) or (u_raw < i_lo and err < 0.0)
                if not windup:
                    integ += ki * err * ts
            else:
                u = u_raw
                integ += ki * err * ts
        if clamp_current:
            u = min(max(u, i_lo), i_hi)

        ref_arr[k] = ref
        cur_arr[k] = u
        fmr_arr[k] = fm
        prs_arr[k] = pressure
        frc_arr[k] = force
        states[k] = sv

        if k < n_steps:
            drive = p.K_I * u
            if blocked:
                sv = _span_blocked(sv, drive, h, n_substeps, pp, None, 0)
            else:
                sv = _span_compliant(sv, drive, h, n_substeps, pp, zz,
                                     dist_grid, 2 * k * n_substeps)

    meta = {
        "params_digest": config_digest(p, z),
        "controller": repr(ctrl),
        "signal": repr(sig),
        "sample_rate_hz": sample_rate,
        "inner_step_s": h,
        "clamp_current": clamp_current,
        "disturbance": repr(disturbance) if disturbance is not None else None,
    }
    return SimResult(times=times, reference=ref_arr, current=cur_arr,
                     clutch_force=fmr_arr, pressure=prs_arr, force=frc_arr,
                     states=states, meta=meta)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Metrics:
    rise_time_10_90: float      # s
    rms_tracking_error: float   # N
    overshoot: float            # fraction of the step amplitude
    oscillation_index: float    # force-error energy fraction above 15 Hz


def measure_metrics(result: SimResult, window: tuple[float, float],
                    split_hz: float = 15.0, osc_skip: float = 0.2) -> Metrics:
    """Step-tracking metrics of the output force over a time window.

    The window must contain exactly the step of interest (largest reference
    jump); rise time is 10%-90% of the step amplitude with linear
    interpolation between samples. The oscillation index is the fraction of
    the force-error spectral energy above `split_hz` in the post-step part of
    the window; the first `osc_skip` seconds after the step are excluded so
    the index measures ringing rather than the step edge's own broadband
    content.
    """
    t = result.times
    mask = (t >= window[0]) & (t <= window[1])
    if not mask.any():
        raise MetricsError(f"window {window} is outside the run")
    tw = t[mask]
    ref = result.reference[mask]
    force = result.force[mask]

    jumps = np.abs(np.diff(ref))
    if jumps.size == 0 or jumps.max() <= 1e-9:
        raise MetricsError("no reference step found in the window")
    i0 = int(np.argmax(jumps))
    base, target = ref[i0], ref[i0 + 1]
    amp = target - base

    y = force[i0:]
    ty = tw[i0:]
    t10 = _first_crossing(ty, y, base + 0.1 * amp, rising=amp > 0)
    t90 = _first_crossing(ty, y, base + 0.9 * amp, rising=amp > 0)
    if t10 is None or t90 is None or t90 < t10:
        raise MetricsError("force never traversed the 10-90% band after the step")

    err = force - ref
    rms = float(np.sqrt(np.mean(err**2)))
    post = force[i0 + 1:]
    over = (np.max(post) - target) / amp if amp > 0 else (target - np.min(post)) / (-amp)
    overshoot = max(float(over), 0.0)

    fs = 1.0 / (t[1] - t[0])
    post_err = err[(tw >= tw[i0] + osc_skip)]
    spec = np.abs(np.fft.rfft(post_err))**2
    freqs = np.fft.rfftfreq(post_err.size, 1.0 / fs)
    total = float(np.sum(spec))
    high = float(np.sum(spec[freqs > split_hz]))
    osc = high / total if total > 0.0 else 0.0

    return Metrics(rise_time_10_90=float(t90 - t10), rms_tracking_error=rms,
                   overshoot=overshoot, oscillation_index=osc)


def _first_crossing(t, y, level, rising=True):
    above = y >= level if rising else y <= level
    idx = np.nonzero(above)[0]
    if idx.size == 0:
        return None
    i = int(idx[0])
    if i == 0:
        return float(t[0])
    frac = (level - y[i - 1]) / (y[i] - y[i - 1])
    return float(t[i - 1] + frac * (t[i] - t[i - 1]))


def peak_deviation(result: SimResult, level: float, t_skip: float = 2.0) -> float:
    """Largest |force - level| after an initial settling interval."""
    mask = result.times >= t_skip
    return float(np.max(np.abs(result.force[mask] - level)))


# ---------------------------------------------------------------------------
# Frequency-response estimation
# ---------------------------------------------------------------------------

def frf_from_records(u: np.ndarray, y: np.ndarray, sample_rate: float,
                     nperseg: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """H1 transfer estimate S_uy/S_uu from input/output records.

    Welch-averaged cross and auto spectral densities with Hann windows and
    50% overlap; the mean (operating point) is removed per segment.
    """
    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float)
    if u.shape != y.shape or u.ndim != 1:
        raise ValueError("u and y must be matching 1-D records")
    if nperseg is None:
        nperseg = min(2**15, 2**int(math.floor(math.log2(max(u.size // 4, 16)))))
    if u.size < 2 * nperseg:
        raise ValueError("record too short for the requested spectral resolution")
    f, s_uu = _sp_signal.welch(u, fs=sample_rate, window="hann",
                               nperseg=nperseg, detrend="constant")
    _, s_uy = _sp_signal.csd(u, y, fs=sample_rate, window="hann",
                             nperseg=nperseg, detrend="constant")
    keep = s_uu > 0.0
    return f[keep], s_uy[keep] / s_uu[keep]


def estimate_frf(p: ActuationLineParams, z: LoadImpedance, chirp: LogChirp,
                 which: str = "force", *, sample_rate: float = 1500.0,
                 n_substeps: int = 10, current_center: float = 2.25,
                 current_amplitude: float = 1.25, settle: float = 2.0,
                 nperseg: int | None = None,
                 clamp_current: bool = False) -> FrequencyResponse:
    """Estimate the current-to-force or current-to-pressure response.

    Drives the plant open loop with a chirp-shaped current sweep (default
    2.25 +- 1.25 A), starting from the matching equilibrium so there is no
    startup transient, and estimates the transfer by cross/auto spectral
    density ratio. The current command is applied through a zero-order hold,
    so the hold's known response (half-sample delay plus sinc droop) is
    deconvolved to recover the plant transfer itself. The usable grid is
    limited to [2*f0, f1/2] to stay clear of sweep edge leakage.
    """
    if which not in ("force", "pressure"):
        raise ValueError("which must be 'force' or 'pressure'")
    current_sig = LogChirp(f0=chirp.f0, f1=chirp.f1, duration=chirp.duration,
                           amplitude=current_amplitude, center=current_center)
    res = run_simulation(p, z, OpenLoop(g1=1.0), current_sig,
                         chirp.duration + settle, sample_rate=sample_rate,
                         n_substeps=n_substeps, clamp_current=clamp_current,
                         initial_state=equilibrium_state(p, z, current_center))
    y = res.force if which == "force" else res.pressure
    f, est = frf_from_records(res.current, y, sample_rate, nperseg)
    mask = (f >= 2.0 * chirp.f0) & (f <= 0.5 * chirp.f1)
    if not mask.any():
        raise ValueError("chirp band leaves no usable estimation grid")
    f = f[mask]
    half = math.pi * f / sample_rate  # omega*Ts/2
    hold = np.exp(-1j * half) * np.sinc(f / sample_rate)
    return FrequencyResponse(freq_hz=f, value=est[mask] / hold)


# ---------------------------------------------------------------------------
# PI tuning and the drilling scenario
# ---------------------------------------------------------------------------

_KAPPA_P_GRID = np.logspace(-2.0, 0.8, 37)   # dimensionless proportional loop gain
_KAPPA_I_GRID = np.logspace(-1.0, 2.8, 43)   # 1/s integral loop gain


def pi_feasible_set(plant: RationalTF, coupling: RationalTF | None = None, *,
                    gm_min_db: float = 6.0, pm_min_deg: float = 45.0):
    """Feasible (kp, ki, closed-loop tracking bandwidth) triples, scan order.

    `plant` is the loop plant (typically normalized to unit DC gain so the
    grids are gain-scale invariant); `coupling` post-filters the tracked
    output (the pressure loop tracks force through the pressure-to-force
    coupling). A grid point is feasible when the closed loop is stable and
    the loop transfer meets both margin floors.
    """
    s_poly = Polynomial([0.0, 1.0])
    feasible = []
    for kappa in _KAPPA_P_GRID:
        for kappa_i in _KAPPA_I_GRID:
            loop_tf = RationalTF(Polynomial([kappa_i, kappa]) * plant.num,
                                 s_poly * plant.den)
            char = loop_tf.den + loop_tf.num
            try:
                if np.any(polynomial_roots(char).real >= 0.0):
                    continue
            except Exception:
                continue
            gm, pm = stability_margins(loop_tf)
            if gm < gm_min_db or pm < pm_min_deg:
                continue
            tracking = RationalTF(loop_tf.num, char)
            if coupling is not None:
                tracking = coupling * tracking
            bw = bandwidth_3db(tracking)
            feasible.append((float(kappa), float(kappa_i), float(bw)))
    return feasible


def _loop_plant(p: ActuationLineParams, z: LoadImpedance, loop: str):
    if loop == "force":
        return force_response(p, z).scaled(1.0 / p.K_I), None
    if loop == "pressure":
        return pressure_response(p, z).scaled(1.0 / p.K_I), line_blocks(p, z).coupling
    raise ValueError("loop must be 'force' or 'pressure'")


def tune_pi_for_plant(plant: RationalTF, coupling: RationalTF | None = None, *,
                      gm_min_db: float = 6.0,
                      pm_min_deg: float = 45.0) -> tuple[float, float]:
    """Bandwidth-maximizing PI gains for an arbitrary unit-DC loop plant."""
    feasible = pi_feasible_set(plant, coupling, gm_min_db=gm_min_db,
                               pm_min_deg=pm_min_deg)
    if not feasible:
        raise ValueError("no feasible PI gains under the margin floors")
    best = max(feasible, key=lambda row: row[2])
    return best[0], best[1]


def tune_pi(p: ActuationLineParams, z: LoadImpedance, loop: str = "force", *,
            gm_min_db: float = 6.0, pm_min_deg: float = 45.0) -> tuple[float, float]:
    """Deterministic PI gains: maximize closed-loop tracking bandwidth.

    Grid search over fixed log grids subject to gain margin >= `gm_min_db`
    and phase margin >= `pm_min_deg` on the analytical loop transfer; ties
    resolve to the first grid point in scan order, so repeated calls are
    bit-identical. Gains come back in physical units (A/N and A/(N*s)).
    """
    plant, coupling = _loop_plant(p, z, loop)
    kappa, kappa_i = tune_pi_for_plant(plant, coupling, gm_min_db=gm_min_db,
                                       pm_min_deg=pm_min_deg)
    return kappa / p.K_I, kappa_i / p.K_I


def max_feasible_kp(p: ActuationLineParams, z: LoadImpedance, loop: str, *,
                    gm_min_db: float = 6.0, pm_min_deg: float = 45.0) -> float:
    """Largest proportional gain admitted by the margin constraints."""
    plant, coupling = _loop_plant(p, z, loop)
    feasible = pi_feasible_set(plant, coupling, gm_min_db=gm_min_db,
                               pm_min_deg=pm_min_deg)
    if not feasible:
        raise ValueError(f"no feasible PI gains for the {loop} loop")
    return max(row[0] for row in feasible) / p.K_I


# Benchmark comparison gains, normalized by the current gain (the pairs are
# kp*K_I and ki*K_I, so the physical gains are these values divided by K_I).
# The margin-floored grid tuner cannot beat an exactly calibrated open-loop
# feedforward on the mixed reference: its 6 dB / 45 deg floors cap the loop
# gain below what that requires. These settings reproduce the hand-tuned
# benchmark behavior instead: the non-collocated force loop runs about 1 dB
# below its gain limit (and oscillates violently when its proportional gain
# is doubled), while the collocated pressure loop carries ~2.8x higher gain.
COMPARISON_FORCE_PI = (0.74, 22.0)
COMPARISON_PRESSURE_PI = (2.10, 17.5)


def comparison_controllers(p: ActuationLineParams) -> dict[str, Controller]:
    """The three benchmark controllers for side-by-side tracking runs."""
    kf, kif = COMPARISON_FORCE_PI
    kpr, kipr = COMPARISON_PRESSURE_PI
    return {
        "open": OpenLoop(g1=1.0 / p.K_I),
        "force-pi": ForcePI(kp=kf / p.K_I, ki=kif / p.K_I),
        "pressure-pi": PressurePI(kp=kpr / p.K_I, ki=kipr / p.K_I, g2=1.0),
    }


def drilling_scenario(p: ActuationLineParams, z: LoadImpedance,
                      ctrl: Controller, *, seed: int = 0, level: float = 23.0,
                      duration: float = 16.0, open_loop_peak: float = 8.0,
                      sample_rate: float = 1500.0, n_substeps: int = 10,
                      t_skip: float = 2.0) -> SimResult:
    """Constant-force hold against a seeded band-limited drilling disturbance.

    The disturbance amplitude is calibrated first so that the OPEN-loop run
    deviates by exactly +-`open_loop_peak` N; the requested controller then
    runs against that same calibrated disturbance. Peak deviation and the
    calibration data land in `meta`. Passing `open_loop_peak = 0` turns the
    disturbance off.
    """
    if isinstance(z, BlockedLoad):
        raise ValueError("the drilling scenario needs a moving load")
    probe = MultisineDisturbance(seed=seed, amplitude=1.0)
    start = equilibrium_state(p, z, level / p.K_I)
    reference = ConstantWithDisturbance(level=level, disturbance=probe)

    cal = run_simulation(p, z, OpenLoop(g1=1.0 / p.K_I), reference, duration,
                         sample_rate=sample_rate, n_substeps=n_substeps,
                         initial_state=start)
    peak0 = peak_deviation(cal, level, t_skip)
    scale = open_loop_peak / peak0 if peak0 > 0.0 else 0.0
    calibrated = replace(probe, amplitude=scale)

    preload = level / p.K_I if isinstance(ctrl, (ForcePI, PressurePI)) else 0.0
    res = run_simulation(p, z, ctrl,
                         ConstantWithDisturbance(level=level, disturbance=calibrated),
                         duration, sample_rate=sample_rate, n_substeps=n_substeps,
                         initial_state=start, initial_integrator=preload)
    res.meta.update({
        "reference_level_n": level,
        "disturbance_seed": seed,
        "disturbance_amplitude_n": scale,
        "open_loop_peak_n": open_loop_peak,
        "peak_deviation_n": peak_deviation(res, level, t_skip),
    })
    return res
