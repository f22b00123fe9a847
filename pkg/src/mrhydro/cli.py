"""Command-line interface.

Every command prints a one-line human summary, writes CSV with `#`-prefixed
provenance headers, renders a matplotlib figure next to the CSV (unless
--no-plot), and drops a small JSON manifest listing the produced files.

CSV bytes are fully deterministic for identical command + config + seed; the
manifest JSON carries the wall-clock timestamp instead. Exit codes: 0 on
success, 1 on runtime/numeric failure, 2 on usage or configuration errors.

Two transfer-function candidates are exposed under the stable labels used
throughout the outputs:

* ``hf`` - the direct drive-path response (no load-coupling factor); the
  time-domain cross-validation identifies it with the line-pressure channel.
* ``hp`` - the drive path times the pressure-to-force coupling; it matches
  the end-effector force channel.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import asdict

import numpy as np

from . import __version__, analysis, plots, sim, tf
from .params import (ActuationLineParams, BlockedLoad, CompliantLoad,
                     ConfigError, HardwareGeometry, ValidationError,
                     config_digest, derive_hydraulic_mass, load_config)

ENV_CONFIG = "MRHYDRO_CONFIG"
EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

# Built-in configuration for commands run without a config file: Table-style
# line parameters with a compliant load, and a current gain scaled so that
# bench-level force references (tens to hundreds of N) stay inside the
# 0-3.5 A current clamp.
BENCH_K_I = 100.0  # N/A


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _bench_config():
    return ActuationLineParams(K_I=BENCH_K_I), CompliantLoad(), HardwareGeometry()


def _resolve_config(args):
    path = getattr(args, "config", None) or os.environ.get(ENV_CONFIG)
    if path:
        params, load, geom = load_config(path)
        source = str(path)
    else:
        params, load, geom = _bench_config()
        source = "builtin-bench"
    choice = getattr(args, "load", None)
    if choice == "blocked":
        load = BlockedLoad()
    elif choice == "compliant" and not isinstance(load, CompliantLoad):
        load = CompliantLoad()
    return params, load, geom, source


def _load_tag(load) -> str:
    return "blocked" if isinstance(load, BlockedLoad) else "compliant"


class _Report:
    """Accumulates output files and writes headers/manifest consistently."""

    def __init__(self, args, params, load, source):
        self.params = params
        self.load = load
        self.source = source
        self.digest = config_digest(params, load)
        self.command = " ".join(args._argv)
        self.run_id = hashlib.sha256(
            f"{self.command}|{self.digest}|{__version__}".encode()).hexdigest()[:12]
        self.outputs: list[str] = []
        self.plot = not args.no_plot

    def header_lines(self, columns: str) -> list[str]:
        par = self.params
        par_txt = " ".join(f"{k}={getattr(par, k)!r}" for k in
                           ("m1", "b1", "k1", "m2", "b2", "k2", "tau", "K_I",
                            "I_min", "I_max"))
        if isinstance(self.load, BlockedLoad):
            load_txt = "blocked"
        else:
            load_txt = (f"compliant m3={self.load.m3!r} b3={self.load.b3!r} "
                        f"k3={self.load.k3!r}")
        return [f"# mrhydro {__version__}",
                f"# run_id: {self.run_id}",
                f"# command: {self.command}",
                f"# config: {self.digest} ({self.source})",
                f"# params: {par_txt}",
                f"# load: {load_txt}",
                f"# columns: {columns}"]

    def write_csv(self, path, columns: list[str], rows) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for line in self.header_lines(",".join(columns)):
                fh.write(line + "\n")
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(x if isinstance(x, str) else _fmt(x)
                                  for x in row) + "\n")
        self.outputs.append(str(path))

    def add_figure(self, path) -> None:
        self.outputs.append(str(path))

    def write_manifest(self, out_base) -> None:
        manifest = {
            "tool": f"mrhydro {__version__}",
            "run_id": self.run_id,
            "command": self.command,
            "config_digest": self.digest,
            "config_source": self.source,
            "params": asdict(self.params),
            "load": {"kind": _load_tag(self.load),
                     **(asdict(self.load) if isinstance(self.load, CompliantLoad) else {})},
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "outputs": self.outputs,
        }
        path = str(out_base) + ".manifest.json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")


def _stem(out: str) -> str:
    return out[:-4] if out.endswith(".csv") else out


_CANDIDATES = {"hf": tf.pressure_response, "hp": tf.force_response}
_CANDIDATE_NOTE = {"hf": "pressure channel", "hp": "force channel"}


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_bode(args) -> int:
    params, load, _, source = _resolve_config(args)
    rep = _Report(args, params, load, source)
    wanted = ("hf", "hp") if args.tf == "both" else (args.tf,)
    tables = {}
    for name in wanted:
        g = _CANDIDATES[name](params, load)
        tables[name] = analysis.bode(g, args.fmin, args.fmax, args.points)
    base = _stem(args.out)
    for name, tab in tables.items():
        path = f"{base}_{name}.csv" if len(tables) > 1 else args.out
        rep.write_csv(path, ["freq_hz", "mag_db", "phase_deg"],
                      zip(tab.freq_hz, tab.mag_db, tab.phase_deg))
    if rep.plot:
        fig = base + ".png"
        plots.save_bode_figure(tables, fig)
        rep.add_figure(fig)
    rep.write_manifest(base)
    names = ", ".join(f"{n} ({_CANDIDATE_NOTE[n]})" for n in tables)
    print(f"bode [{_load_tag(load)}]: wrote {len(tables)} table(s) for {names} "
          f"over {args.fmin:g}-{args.fmax:g} Hz")
    return EXIT_OK


def cmd_bandwidth(args) -> int:
    params, load, _, source = _resolve_config(args)
    rep = _Report(args, params, load, source)
    rows = []
    summary = []
    for name in ("hf", "hp"):
        g = _CANDIDATES[name](params, load)
        bw = analysis.bandwidth_3db(g)
        rows.append((name, _load_tag(load), bw))
        txt = ">= 1000 Hz" if math.isinf(bw) else f"{bw:.2f} Hz"
        summary.append(f"{name} ({_CANDIDATE_NOTE[name]}): {txt}")
    base = _stem(args.out)
    rep.write_csv(args.out, ["candidate", "load", "bandwidth_hz"],
                  [(n, l, b if math.isfinite(b) else 1000.0) for n, l, b in rows])
    if rep.plot:
        tables = {n: analysis.bode(_CANDIDATES[n](params, load), 0.1, 100.0, 400)
                  for n in ("hf", "hp")}
        fig = base + ".png"
        plots.save_bode_figure(tables, fig)
        rep.add_figure(fig)
    rep.write_manifest(base)
    print(f"bandwidth [{_load_tag(load)}]: " + "; ".join(summary))
    return EXIT_OK


def cmd_poles(args) -> int:
    params, load, _, source = _resolve_config(args)
    rep = _Report(args, params, load, source)
    rows = []
    pole_sets, zero_sets = {}, {}
    for name in ("hf", "hp"):
        g = _CANDIDATES[name](params, load)
        pls, zrs = tf.poles(g), tf.zeros(g)
        pole_sets[name], zero_sets[name] = pls, zrs
        rows += [(name, "pole", r.real, r.imag) for r in pls]
        rows += [(name, "zero", r.real, r.imag) for r in zrs]
    base = _stem(args.out)
    rep.write_csv(args.out, ["candidate", "kind", "re", "im"], rows)
    if rep.plot:
        fig = base + ".png"
        plots.save_pole_zero_figure(pole_sets, zero_sets, fig)
        rep.add_figure(fig)
    rep.write_manifest(base)
    worst = max(r.real for r in pole_sets["hf"])
    print(f"poles [{_load_tag(load)}]: {pole_sets['hf'].size} poles per candidate, "
          f"max Re = {worst:.3g} 1/s")
    return EXIT_OK


def cmd_rootlocus(args) -> int:
    params, load, _, source = _resolve_config(args)
    rep = _Report(args, params, load, source)
    builder = tf.force_response if args.loop == "force" else tf.pressure_response
    g = builder(params, load).scaled(1.0 / params.K_I)  # unit-DC loop
    gains = analysis.default_gain_grid(g, args.points)
    trace = analysis.root_locus(g, gains)
    rows = [(k, pole.real, pole.imag)
            for k, row in zip(trace.gains, trace.poles) for pole in row]
    base = _stem(args.out)
    rep.write_csv(args.out, ["gain", "pole_re", "pole_im"], rows)
    if rep.plot:
        fig = base + ".png"
        plots.save_root_locus_figure(trace, fig)
        rep.add_figure(fig)
    rep.write_manifest(base)
    k_star = analysis.max_stable_gain(g)
    k_txt = "unbounded" if math.isinf(k_star) else f"{k_star:.4g}"
    extra = f" ({trace.note})" if trace.note else ""
    print(f"rootlocus [{args.loop}, {_load_tag(load)}]: {trace.gains.size} gains, "
          f"max stable unit-DC gain {k_txt}{extra}")
    return EXIT_OK


def cmd_frf(args) -> int:
    params, load, _, source = _resolve_config(args)
    rep = _Report(args, params, load, source)
    chirp = sim.LogChirp(f0=args.f0, f1=args.f1, duration=args.duration,
                         amplitude=1.0, center=0.0)
    wanted = ("force", "pressure") if args.channel == "both" else (args.channel,)
    base = _stem(args.out)
    printed = []
    for channel in wanted:
        est = sim.estimate_frf(params, load, chirp, channel)
        model_tf = (tf.force_response if channel == "force"
                    else tf.pressure_response)(params, load)
        model = tf.evaluate_at_jw(model_tf, est.freq_hz)
        rows = zip(est.freq_hz,
                   20 * np.log10(np.abs(est.value)),
                   np.degrees(np.unwrap(np.angle(est.value))),
                   20 * np.log10(np.abs(model)),
                   np.degrees(np.unwrap(np.angle(model))))
        path = f"{base}_{channel}.csv" if len(wanted) > 1 else args.out
        rep.write_csv(path, ["freq_hz", "est_mag_db", "est_phase_deg",
                             "model_mag_db", "model_phase_deg"], rows)
        err = np.max(np.abs(np.abs(est.value) / np.abs(model) - 1.0))
        printed.append(f"{channel}: {est.freq_hz.size} points, "
                       f"worst |mag| mismatch {100 * err:.2f}%")
        if rep.plot:
            fig = f"{base}_{channel}.png" if len(wanted) > 1 else base + ".png"
            plots.save_frf_figure(
                est, tf.FrequencyResponse(est.freq_hz, model), fig,
                label=f"estimated {channel}")
            rep.add_figure(fig)
    rep.write_manifest(base)
    print(f"frf [{_load_tag(load)}]: " + "; ".join(printed))
    return EXIT_OK


def cmd_derive_params(args) -> int:
    geom = HardwareGeometry(hose_length=args.hose_length,
                            hose_inner_diameter=args.hose_diameter,
                            fluid_density=args.fluid_density,
                            cylinder_area=args.cylinder_area)
    params, load, _, source = _resolve_config(args)
    rep = _Report(args, params, load, source)
    m2 = derive_hydraulic_mass(geom)
    base = _stem(args.out)
    rep.write_csv(args.out, ["quantity", "value"],
                  [("reflected_hydraulic_mass_kg", m2),
                   ("hose_length_m", geom.hose_length),
                   ("hose_inner_diameter_m", geom.hose_inner_diameter),
                   ("fluid_density_kg_per_m3", geom.fluid_density),
                   ("cylinder_area_m2", geom.cylinder_area)])
    rep.write_manifest(base)
    print(f"derive-params: reflected hydraulic mass m2 = {m2:.3f} kg "
          f"(L={geom.hose_length:g} m, d={geom.hose_inner_diameter:g} m)")
    return EXIT_OK


def _build_controller(args, params, load):
    kind = args.controller
    defaults = sim.comparison_controllers(params)
    if kind == "open":
        return defaults["open"], "open"
    if args.kp is None and args.ki is None:
        ctrl = defaults[kind]
        print(f"{kind} gains: kp = {ctrl.kp:.6g} A/N, ki = {ctrl.ki:.6g} A/(N*s)")
        return ctrl, kind
    if args.kp is None or args.ki is None:
        raise ValidationError("--kp and --ki must be given together")
    if kind == "force-pi":
        return sim.ForcePI(kp=args.kp, ki=args.ki), kind
    return sim.PressurePI(kp=args.kp, ki=args.ki, g2=args.g2), kind


_SIGNAL_DURATIONS = {"step": 4.0, "chirp": 22.0, "mixed": 24.0, "drill": 16.0}


def _build_signal(name):
    if name == "step":
        return sim.Step(t0=1.0, y0=50.0, y1=250.0)
    if name == "chirp":
        return sim.LogChirp(f0=0.1, f1=6.0, duration=20.0, amplitude=100.0,
                            center=150.0)
    if name == "mixed":
        return sim.mixed_reference()
    raise ValueError(name)


def _trace_rows(res: sim.SimResult):
    for i in range(res.times.size):
        st = res.states[i]
        yield (res.times[i], res.reference[i], res.current[i],
               res.clutch_force[i], res.pressure[i], res.force[i],
               st[0], st[1], st[2], st[3], st[4], st[5])


_TRACE_COLUMNS = ["t_s", "reference_n", "current_a", "clutch_force_n",
                  "pressure_n", "force_n", "x1_m", "v1_mps", "x2_m", "v2_mps",
                  "x3_m", "v3_mps"]


def _metrics_rows(res: sim.SimResult, duration: float):
    rows = [("rms_tracking_error_n",
             float(np.sqrt(np.mean((res.force - res.reference) ** 2))))]
    try:
        m = sim.measure_metrics(res, (0.5, min(3.0, duration)))
        rows = [("rise_time_10_90_ms", m.rise_time_10_90 * 1e3),
                ("rms_tracking_error_n", m.rms_tracking_error),
                ("overshoot_fraction", m.overshoot),
                ("oscillation_index", m.oscillation_index)]
    except sim.MetricsError:
        pass
    if "peak_deviation_n" in res.meta:
        rows.append(("peak_deviation_n", res.meta["peak_deviation_n"]))
    return rows


def cmd_simulate(args) -> int:
    params, load, _, source = _resolve_config(args)
    rep = _Report(args, params, load, source)
    ctrl, label = _build_controller(args, params, load)
    duration = args.duration or _SIGNAL_DURATIONS[args.signal]
    if args.signal == "drill":
        if isinstance(load, BlockedLoad):
            raise ValidationError("drill scenario requires a compliant load")
        res = sim.drilling_scenario(params, load, ctrl, seed=args.seed,
                                    duration=duration)
    else:
        res = sim.run_simulation(params, load, ctrl, _build_signal(args.signal),
                                 duration)
    base = _stem(args.out)
    rep.write_csv(args.out, _TRACE_COLUMNS, _trace_rows(res))
    metrics = _metrics_rows(res, duration)
    rep.write_csv(base + "_metrics.csv", ["metric", "value"], metrics)
    if rep.plot:
        fig = base + ".png"
        plots.save_traces_figure({label: res}, fig)
        rep.add_figure(fig)
    rep.write_manifest(base)
    txt = ", ".join(f"{k} = {v:.4g}" for k, v in metrics)
    print(f"simulate [{label}, {args.signal}, {_load_tag(load)}]: {txt}")
    return EXIT_OK


def cmd_compare(args) -> int:
    params, load, _, source = _resolve_config(args)
    if isinstance(load, BlockedLoad):
        raise ValidationError("compare requires a compliant load")
    rep = _Report(args, params, load, source)
    duration = args.duration or _SIGNAL_DURATIONS["mixed"]
    reference = sim.mixed_reference()
    controllers = sim.comparison_controllers(params)
    kp_f, ki_f = controllers["force-pi"].kp, controllers["force-pi"].ki
    kp_p, ki_p = controllers["pressure-pi"].kp, controllers["pressure-pi"].ki
    base = _stem(args.out)
    results = {}
    table = []
    for label, ctrl in controllers.items():
        res = sim.run_simulation(params, load, ctrl, reference, duration)
        results[label] = res
        m = sim.measure_metrics(res, (0.5, reference.chirp_start))
        track = res.times >= reference.chirp_start
        rms_track = float(np.sqrt(np.mean((res.force - res.reference)[track] ** 2)))
        table.append((label, m.rise_time_10_90 * 1e3, rms_track, m.overshoot,
                      m.oscillation_index))
        rep.write_csv(f"{base}_{label}.csv", _TRACE_COLUMNS, _trace_rows(res))
    rep.write_csv(base + "_metrics.csv",
                  ["controller", "rise_time_ms", "rms_tracking_n",
                   "overshoot_fraction", "oscillation_index"], table)
    if rep.plot:
        fig = base + ".png"
        plots.save_traces_figure(results, fig)
        rep.add_figure(fig)
    rep.write_manifest(base)
    print(f"compare [mixed, {_load_tag(load)}]  "
          f"(force-pi kp={kp_f:.4g} ki={ki_f:.4g}; "
          f"pressure-pi kp={kp_p:.4g} ki={ki_p:.4g})")
    print(f"{'controller':<12} {'rise_ms':>9} {'rms_trk_N':>9} {'overshoot':>10} "
          f"{'osc_index':>10}")
    for label, rise, rms, over, osc in table:
        print(f"{label:<12} {rise:9.1f} {rms:9.2f} {over:10.3f} {osc:10.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser / entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mrhydro",
        description="Analysis and simulation of an MR-clutch + hydrostatic "
                    "actuation line.")
    parser.add_argument("--version", action="version",
                        version=f"mrhydro {__version__}")
    sub = parser.add_subparsers(dest="cmd", required=True)

    def common(sp, default_out):
        sp.add_argument("--config", help=f"config file (default: ${ENV_CONFIG} "
                                         "or built-in bench values)")
        sp.add_argument("--load", choices=["blocked", "compliant"],
                        help="override the load from the config")
        sp.add_argument("--out", default=default_out, help="output CSV path")
        sp.add_argument("--no-plot", action="store_true",
                        help="skip the PNG figure next to the CSV")

    sp = sub.add_parser("bode", help="frequency response tables")
    common(sp, "bode.csv")
    sp.add_argument("--tf", choices=["hf", "hp", "both"], default="both")
    sp.add_argument("--fmin", type=float, default=0.1)
    sp.add_argument("--fmax", type=float, default=100.0)
    sp.add_argument("--points", type=int, default=500)
    sp.set_defaults(func=cmd_bode)

    sp = sub.add_parser("bandwidth", help="-3 dB bandwidth of both candidates")
    common(sp, "bandwidth.csv")
    sp.set_defaults(func=cmd_bandwidth)

    sp = sub.add_parser("poles", help="poles/zeros of both candidates")
    common(sp, "poles.csv")
    sp.set_defaults(func=cmd_poles)

    sp = sub.add_parser("rootlocus", help="closed-loop pole sweep")
    common(sp, "rootlocus.csv")
    sp.add_argument("--loop", choices=["force", "pressure"], default="pressure")
    sp.add_argument("--points", type=int, default=200)
    sp.set_defaults(func=cmd_rootlocus)

    sp = sub.add_parser("frf", help="simulated chirp FRF vs analytical model")
    common(sp, "frf.csv")
    sp.add_argument("--channel", choices=["force", "pressure", "both"],
                    default="both")
    sp.add_argument("--f0", type=float, default=0.1)
    sp.add_argument("--f1", type=float, default=100.0)
    sp.add_argument("--duration", type=float, default=60.0)
    sp.set_defaults(func=cmd_frf)

    sp = sub.add_parser("derive-params", help="derived hydraulic quantities")
    common(sp, "derived.csv")
    sp.add_argument("--hose-length", type=float, default=1.0)
    sp.add_argument("--hose-diameter", type=float, default=0.0095)
    sp.add_argument("--fluid-density", type=float, default=1000.0)
    sp.add_argument("--cylinder-area", type=float, default=826e-6)
    sp.set_defaults(func=cmd_derive_params)

    sp = sub.add_parser("simulate", help="one controller, one reference")
    common(sp, "sim.csv")
    sp.add_argument("--controller", choices=["open", "force-pi", "pressure-pi"],
                    default="open")
    sp.add_argument("--signal", choices=["step", "chirp", "mixed", "drill"],
                    default="step")
    sp.add_argument("--duration", type=float, default=None)
    sp.add_argument("--kp", type=float, default=None,
                    help="PI proportional gain (default: tuned)")
    sp.add_argument("--ki", type=float, default=None,
                    help="PI integral gain (default: tuned)")
    sp.add_argument("--g2", type=float, default=1.0,
                    help="pressure reference per unit force reference")
    sp.add_argument("--seed", type=int, default=0, help="drill disturbance seed")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("compare", help="all three controllers, same reference")
    common(sp, "compare.csv")
    sp.add_argument("--signal", choices=["mixed"], default="mixed")
    sp.add_argument("--duration", type=float, default=None)
    sp.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args._argv = argv
    try:
        return args.func(args)
    except (ConfigError, ValidationError) as exc:
        print(f"mrhydro: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # numeric/runtime failures
        print(f"mrhydro: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
