"""Measurements used by the probes and the figure checks."""
from __future__ import annotations

import numpy as np
from scipy.signal import find_peaks

from . import dsp


def voiced_f0_std_cents(contour) -> float:
    """Std of voiced F0 in cents around its own geometric mean (nan if fewer than 2 voiced frames)."""
    f = contour.f0[contour.voiced]
    if f.size < 2:
        return float("nan")
    c = 1200.0 * np.log2(f)
    return float(np.std(c - c.mean()))


def spectral_centroid(mag: np.ndarray, cfg: dsp.FrameConfig) -> np.ndarray:
    """Per-frame centroid in Hz of a linear T x F magnitude matrix."""
    f = cfg.bin_frequencies()[: mag.shape[1]]
    total = mag.sum(axis=1)
    return np.divide(mag @ f, total, out=np.zeros_like(total), where=total > 0)


def formant_peaks(env: np.ndarray, count: int = 3, prominence_db: float = 3.0) -> np.ndarray:
    """Bins of the ``count`` most prominent peaks of a single envelope row, sorted by frequency."""
    db = 20 * np.log10(np.maximum(env, 1e-300))
    idx, props = find_peaks(db, prominence=prominence_db)
    top = idx[np.argsort(props["prominences"])[::-1][:count]]
    return np.sort(top)


def frame_energy(x, cfg: dsp.FrameConfig) -> np.ndarray:
    return np.sum(dsp.frame_signal(x, cfg, mode="constant") ** 2, axis=1)


def framewise_relative_difference(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """||a_t - b_t|| / ||a_t|| for each row."""
    na = np.linalg.norm(a, axis=1)
    d = np.linalg.norm(a - b, axis=1)
    return np.divide(d, na, out=np.full_like(d, np.inf), where=na > 0)


def snr_db(ref, est) -> float:
    ref = np.asarray(ref)
    err = ref - np.asarray(est)[: ref.size]
    return float(10 * np.log10(np.sum(ref ** 2) / max(np.sum(err ** 2), 1e-300)))
