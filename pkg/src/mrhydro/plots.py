"""Matplotlib rendering of the CSV artifacts, one figure per report.

Every CLI command that writes tabular data also drops a PNG next to it (the
CSV stays the authoritative, deterministic output; figures are a convenience
view). All functions take the in-memory data objects, not the CSV files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import BodeTable, RootLocusTrace
from .sim import SimResult
from .tf import FrequencyResponse

_DPI = 130


def save_bode_figure(tables: dict[str, BodeTable], path) -> None:
    fig, (ax_m, ax_p) = plt.subplots(2, 1, sharex=True, figsize=(6.4, 5.6))
    for label, tab in tables.items():
        ax_m.semilogx(tab.freq_hz, tab.mag_db, label=label)
        ax_p.semilogx(tab.freq_hz, tab.phase_deg, label=label)
    ax_m.axhline(-3.01, color="0.6", lw=0.8, ls="--")
    ax_m.set_ylabel("magnitude re DC [dB]")
    ax_p.set_ylabel("phase [deg]")
    ax_p.set_xlabel("frequency [Hz]")
    ax_m.grid(True, which="both", alpha=0.3)
    ax_p.grid(True, which="both", alpha=0.3)
    ax_m.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_root_locus_figure(trace: RootLocusTrace, path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 5.0))
    n_branches = trace.poles.shape[1] if trace.poles.size else 0
    for j in range(n_branches):
        branch = trace.poles[:, j]
        sc = ax.scatter(branch.real, branch.imag, c=np.log10(trace.gains),
                        s=6, cmap="viridis")
    if n_branches:
        ax.scatter(trace.poles[0].real, trace.poles[0].imag, marker="x",
                   c="k", s=60, label="lowest gain")
        fig.colorbar(sc, ax=ax, label="log10 gain")
    ax.axvline(0.0, color="r", lw=0.8, ls="--")
    ax.set_xlabel("Re [1/s]")
    ax.set_ylabel("Im [1/s]")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_traces_figure(results: dict[str, SimResult], path) -> None:
    fig, (ax_f, ax_i) = plt.subplots(2, 1, sharex=True, figsize=(7.2, 5.6),
                                     height_ratios=[2, 1])
    first = next(iter(results.values()))
    ax_f.plot(first.times, first.reference, "k--", lw=1.0, label="reference")
    for label, res in results.items():
        ax_f.plot(res.times, res.force, lw=0.9, label=label)
        ax_i.plot(res.times, res.current, lw=0.9, label=label)
    ax_f.set_ylabel("output force [N]")
    ax_i.set_ylabel("current [A]")
    ax_i.set_xlabel("time [s]")
    ax_f.grid(True, alpha=0.3)
    ax_i.grid(True, alpha=0.3)
    ax_f.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_frf_figure(est: FrequencyResponse, model: FrequencyResponse | None,
                    path, label: str = "estimated") -> None:
    fig, (ax_m, ax_p) = plt.subplots(2, 1, sharex=True, figsize=(6.4, 5.6))
    ax_m.semilogx(est.freq_hz, 20 * np.log10(np.abs(est.value)), label=label)
    ax_p.semilogx(est.freq_hz, np.degrees(np.unwrap(np.angle(est.value))),
                  label=label)
    if model is not None:
        ax_m.semilogx(model.freq_hz, 20 * np.log10(np.abs(model.value)),
                      "--", label="model")
        ax_p.semilogx(model.freq_hz, np.degrees(np.unwrap(np.angle(model.value))),
                      "--", label="model")
    ax_m.set_ylabel("magnitude [dB]")
    ax_p.set_ylabel("phase [deg]")
    ax_p.set_xlabel("frequency [Hz]")
    ax_m.grid(True, which="both", alpha=0.3)
    ax_p.grid(True, which="both", alpha=0.3)
    ax_m.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_pole_zero_figure(pole_sets: dict[str, np.ndarray],
                          zero_sets: dict[str, np.ndarray], path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 5.0))
    for label, pls in pole_sets.items():
        ax.scatter(pls.real, pls.imag, marker="x", s=50, label=f"poles {label}")
    for label, zrs in zero_sets.items():
        if zrs.size:
            ax.scatter(zrs.real, zrs.imag, marker="o", facecolors="none",
                       edgecolors="C1", s=50, label=f"zeros {label}")
    ax.axvline(0.0, color="r", lw=0.8, ls="--")
    ax.set_xlabel("Re [1/s]")
    ax.set_ylabel("Im [1/s]")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
