"""File outputs for experiment runs: delimited tables, figures, manifest.

Tables are written with a fixed float format so identical runs produce
byte-identical files.  Figures are rendered headlessly next to each table.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ambiguity import AmbiguityProfile
from .experiments import CurveTable, MultipathReport


@dataclass
class RunManifest:
    """Record of one CLI run: inputs, seed, and every emitted file."""

    subcommand: str
    config_path: str | None
    seed: int
    out_dir: str
    files: list[dict] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, path: Path) -> None:
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.files.append({"name": path.name, "sha256": digest})

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "run_manifest.json"
        payload = {
            "subcommand": self.subcommand,
            "config_path": self.config_path,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "files": self.files,
            "metadata": self.metadata,
        }
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return path


def write_table(table: CurveTable, path: Path) -> Path:
    path.write_text(table.csv_text())
    return path


def write_profile_csv(profile: AmbiguityProfile, path: Path) -> Path:
    lines = ["lag_samples,mag_db"]
    for lag, mag in zip(profile.lags, profile.magnitude_db):
        lines.append(f"{int(lag)},{mag:.12g}")
    path.write_text("\n".join(lines) + "\n")
    return path


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def render_mse_figure(table: CurveTable, path: Path) -> Path:
    plt = _pyplot()
    snr = table.column("snr_db")
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.semilogy(snr, table.column("mse_u0"), "o-", label="MSE of angle estimate")
    ax.semilogy(snr, table.column("mse_beta0"), "s-", label="MSE of gain estimate")
    ax.semilogy(snr, table.column("crlb"), "k--", label="angle bound")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("MSE")
    ax.grid(True, which="both", alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_ser_figure(table: CurveTable, path: Path) -> Path:
    plt = _pyplot()
    ebn0 = table.column("ebn0_db")
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for name in table.columns[1:]:
        values = table.column(name)
        shown = np.where(values > 0, values, np.nan)
        ax.semilogy(ebn0, shown, "o-", label=name.removeprefix("ser_"))
    ax.set_xlabel("Eb/N0 (dB)")
    ax.set_ylabel("SER")
    ax.grid(True, which="both", alpha=0.4)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_ambiguity_figure(profiles: dict[str, AmbiguityProfile],
                            path: Path, floor_db: float = -80.0) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.8, 4.2))
    for label, profile in profiles.items():
        ax.plot(profile.lags, np.maximum(profile.magnitude_db, floor_db),
                label=label, lw=0.8)
    ax.set_xlabel("lag (samples)")
    ax.set_ylabel("normalized correlation (dB)")
    ax.set_ylim(floor_db, 3)
    ax.grid(True, alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_multipath_figure(report: MultipathReport, path: Path) -> Path:
    plt = _pyplot()
    fig, axes = plt.subplots(1, 2, figsize=(9.5, 4.0))
    if report.example is not None:
        spectra = report.example["spectra_mag"]
        bins = np.arange(spectra.shape[-1])
        for n in range(spectra.shape[0]):
            axes[0].plot(bins, spectra[n], lw=0.9, label=f"rx antenna {n}")
        axes[0].set_title("per-antenna hop spectrum")
        axes[1].plot(bins, report.example["combined_mag"], lw=0.9, color="k")
        axes[1].set_title("incoherently combined")
        for ax in axes:
            ax.set_xlabel("DFT bin")
            ax.grid(True, alpha=0.4)
        axes[0].legend(fontsize=8)
    else:
        axes[0].text(0.5, 0.5, "no repaired fade observed", ha="center")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def write_multipath_outputs(report: MultipathReport, out_dir: Path) -> list[Path]:
    """Detection-rate table plus the spectra of the logged realization."""
    paths = []
    lines = ["receiver,errors,trials,error_rate"]
    for n, count in enumerate(report.error_counts):
        lines.append(f"antenna{n},{int(count)},{report.trials},"
                     f"{count / report.trials:.12g}")
    lines.append(f"combined,{report.combined_errors},{report.trials},"
                 f"{report.combined_rate:.12g}")
    table_path = out_dir / "multipath_detection.csv"
    table_path.write_text("\n".join(lines) + "\n")
    paths.append(table_path)

    if report.example is not None:
        spectra = report.example["spectra_mag"]
        header = ",".join(["bin"] + [f"mag_rx{n}" for n in range(spectra.shape[0])]
                          + ["mag_combined"])
        rows = [header]
        for b in range(spectra.shape[1]):
            cells = [str(b)] + [f"{spectra[n, b]:.12g}" for n in range(spectra.shape[0])]
            cells.append(f"{report.example['combined_mag'][b]:.12g}")
            rows.append(",".join(cells))
        spectra_path = out_dir / "multipath_spectra.csv"
        spectra_path.write_text("\n".join(rows) + "\n")
        paths.append(spectra_path)
    return paths
