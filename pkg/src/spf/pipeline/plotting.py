"""Four-panel spectrogram figure: original, monotonic, perturbed, perturbed envelope."""
from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .. import dsp, metrics, vocoder  # noqa: E402
from ..perturb import WarpFactor  # noqa: E402
from .builders import front_end, rhythm_envelope  # noqa: E402
from .config import Config  # noqa: E402

PANELS = (
    ("a", "Spectrogram"),
    ("b", "Monotonic spectrogram"),
    ("c", "Perturbed spectrogram"),
    ("d", "Perturbed spectral envelope"),
)

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def _db(mag, floor_db=-80.0):
    db = 20 * np.log10(np.maximum(mag, 1e-10))
    return np.maximum(db, db.max() + floor_db)


def _draw(ax, mag, cfg: dsp.FrameConfig, title):
    T = mag.shape[0]
    extent = (0, T * cfg.hop_length / cfg.sample_rate, 0, cfg.sample_rate / 2000)
    im = ax.imshow(_db(mag).T, origin="lower", aspect="auto", extent=extent, cmap="magma")
    ax.set_title(title)
    ax.set_ylabel("kHz")
    return im


def figure2_panels(x, cfg: Config | None = None, alpha: float | None = None, seed: int = 0):
    """The four magnitude matrices plus the waveforms behind (a) and (b)."""
    cfg = cfg or Config()
    fe = front_end(x, cfg, WarpFactor(cfg.fig_alpha if alpha is None else alpha), vocoder_seed=seed)
    mags = {
        "a": np.abs(dsp.stft(fe.x, cfg.frame).data),
        "b": np.abs(dsp.stft(fe.monotonic, cfg.frame).data),
        "c": fe.perturbed.data,
        "d": rhythm_envelope(fe, cfg).data,
    }
    return mags, fe


def figure2_metrics(mags, fe, cfg: Config) -> dict:
    vcfg = cfg.vocoder_config
    orig = vocoder.estimate_f0(fe.x, vcfg)
    mono = vocoder.estimate_f0(fe.monotonic, vcfg)
    energy = np.sum(mags["b"] ** 2, axis=1)
    active = energy > 1e-3 * energy.max() if energy.max() > 0 else np.ones_like(energy, bool)
    cen_b = metrics.spectral_centroid(mags["b"][active], cfg.frame).mean()
    cen_c = metrics.spectral_centroid(mags["c"][active], cfg.frame).mean()
    recep = dsp.real_cepstrum(dsp.MagnitudeSpectrogram(mags["d"], "linear", cfg.frame))
    ratio = dsp.quefrency_energy_ratio(recep.data, cfg.n_c)
    return {
        "alpha": fe.alpha.alpha,
        "f0_std_cents_a": metrics.voiced_f0_std_cents(orig),
        "f0_std_cents_b": metrics.voiced_f0_std_cents(mono),
        "centroid_hz_b": float(cen_b),
        "centroid_hz_c": float(cen_c),
        "envelope_quefrency_ratio_min": float(ratio.min()),
    }


def plot_figure2(x, cfg: Config | None = None, out_dir=".", alpha: float | None = None,
                 seed: int = 0) -> dict:
    """Write ``fig2.png``, ``fig2_<panel>.png`` and ``fig2_metrics.json`` into ``out_dir``."""
    cfg = cfg or Config()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mags, fe = figure2_panels(x, cfg, alpha, seed)
    paths = []
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(4, 1, figsize=(7, 9), sharex=True)
        for ax, (key, title) in zip(axes, PANELS):
            _draw(ax, mags[key], cfg.frame, f"({key}) {title}")
        axes[-1].set_xlabel("time (s)")
        fig.tight_layout()
        fig.savefig(out / "fig2.png")
        plt.close(fig)
        paths.append(out / "fig2.png")
        for key, title in PANELS:
            fig, ax = plt.subplots(figsize=(7, 2.6))
            _draw(ax, mags[key], cfg.frame, f"({key}) {title}")
            ax.set_xlabel("time (s)")
            fig.savefig(out / f"fig2_{key}.png")
            plt.close(fig)
            paths.append(out / f"fig2_{key}.png")
    m = figure2_metrics(mags, fe, cfg)
    (out / "fig2_metrics.json").write_text(json.dumps(m, indent=2, sort_keys=True) + "\n")
    return {"paths": [str(p) for p in paths], "metrics": m}
