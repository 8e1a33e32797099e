"""Vocal tract length perturbation as a frequency-axis warp of magnitude spectra."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dsp
from .dsp import FrameConfig, MagnitudeSpectrogram
from .errors import ConfigError, InvalidInput

ALPHA_LOW = 0.9
ALPHA_HIGH = 1.1


@dataclass(frozen=True)
class WarpFactor:
    alpha: float
    seed: object = None  # provenance only

    def __post_init__(self):
        if not ALPHA_LOW <= self.alpha <= ALPHA_HIGH:
            raise InvalidInput(f"alpha {self.alpha} outside [{ALPHA_LOW}, {ALPHA_HIGH}]")


@dataclass(frozen=True)
class WarpConfig:
    boundary_freq: float = 4800.0
    scheme: str = "piecewise-linear"

    def validate(self, sample_rate: float):
        if self.scheme != "piecewise-linear":
            raise ConfigError(f"unsupported warp scheme {self.scheme!r}")
        if not 0 < self.boundary_freq < sample_rate / 2:
            raise ConfigError(f"boundary_freq {self.boundary_freq} outside (0, Nyquist)")


def sample_alpha(rng: np.random.Generator, seed=None) -> WarpFactor:
    """One uniform draw on [0.9, 1.1]; ``seed`` is recorded for provenance."""
    return WarpFactor(float(rng.uniform(ALPHA_LOW, ALPHA_HIGH)), seed)


def _alpha(w) -> float:
    a = w.alpha if isinstance(w, WarpFactor) else float(w)
    if not ALPHA_LOW <= a <= ALPHA_HIGH:
        raise InvalidInput(f"alpha {a} outside [{ALPHA_LOW}, {ALPHA_HIGH}]")
    return a


def warp_frequency(f, alpha, nyquist, boundary=4800.0):
    """Piecewise-linear VTLP map.

    Below the input knee ``boundary * min(alpha, 1) / alpha`` frequencies scale
    by ``alpha``; above it a second line joins the knee to Nyquist, which maps
    to itself.  The map for ``1 / alpha`` is the exact inverse.
    """
    f = np.asarray(f, dtype=np.float64)
    knee = boundary * min(alpha, 1.0) / alpha
    upper = nyquist - (nyquist - boundary * min(alpha, 1.0)) / (nyquist - knee) * (nyquist - f)
    return np.where(f <= knee, alpha * f, upper)


def unwarp_frequency(g, alpha, nyquist, boundary=4800.0):
    """Inverse of :func:`warp_frequency`."""
    g = np.asarray(g, dtype=np.float64)
    out_knee = boundary * min(alpha, 1.0)
    knee = out_knee / alpha
    lower = g / alpha
    upper = nyquist - (nyquist - g) * (nyquist - knee) / (nyquist - out_knee)
    return np.where(g <= out_knee, lower, upper)


def vtlp_warp(spec: MagnitudeSpectrogram, w, cfg: WarpConfig | None = None) -> MagnitudeSpectrogram:
    """Warp every frame so that energy at ``f`` moves to ``warp_frequency(f)``.

    Output bin ``j`` reads the input at ``unwarp_frequency(f_j)`` by linear
    interpolation between neighbouring bins.
    """
    cfg = cfg or WarpConfig()
    if spec.scale != "linear":
        raise InvalidInput("vtlp_warp expects a linear magnitude spectrogram")
    alpha = _alpha(w)
    fc = spec.config
    cfg.validate(fc.sample_rate)
    if alpha == 1.0:
        return MagnitudeSpectrogram(spec.data.copy(), "linear", fc)
    nyq = fc.sample_rate / 2
    freqs = fc.bin_frequencies()[: spec.data.shape[1]]
    src = unwarp_frequency(freqs, alpha, nyq, cfg.boundary_freq) * fc.fft_size / fc.sample_rate
    src = np.clip(src, 0, spec.data.shape[1] - 1)
    i0 = np.floor(src).astype(int)
    i1 = np.minimum(i0 + 1, spec.data.shape[1] - 1)
    frac = src - i0
    out = spec.data[:, i0] * (1 - frac) + spec.data[:, i1] * frac
    return MagnitudeSpectrogram(out, "linear", fc)


def perturb_waveform(x, w, frame: FrameConfig | None = None,
                     cfg: WarpConfig | None = None, phase_iters: int = 0) -> np.ndarray:
    """Warp the magnitude of ``x`` and resynthesize with the original phase.

    The warped magnitude paired with the unwarped phase is not a consistent
    STFT, so the export smears harmonics.  ``phase_iters > 0`` runs that many
    Griffin-Lim refinements starting from the original phase.
    """
    frame = frame or FrameConfig()
    spec = dsp.stft(x, frame)
    warped = vtlp_warp(spec.magnitude(), w, cfg).data
    phase = np.exp(1j * np.angle(spec.data))
    y = dsp.istft(dsp.ComplexSpectrogram(warped * phase, frame, spec.n_samples))
    for _ in range(phase_iters):
        phase = np.exp(1j * np.angle(dsp.stft(y, frame).data))
        y = dsp.istft(dsp.ComplexSpectrogram(warped * phase, frame, spec.n_samples))
    return y
