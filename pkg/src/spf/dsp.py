"""Frame-based spectral primitives.

STFT/ISTFT with centred frames, a triangular mel filterbank, the real
cepstrum, the low-quefrency lifter and the envelope reconstruction that
inverts it.  Everything here is a pure function of its arguments; the
returned containers wrap numpy arrays that callers should treat as
read-only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import get_window

from .errors import ConfigError, InvalidInput

LOG_FLOOR = 1e-10


@dataclass(frozen=True)
class FrameConfig:
    sample_rate: int = 16000
    frame_length: int = 1024
    hop_length: int = 256
    fft_size: int = 1024
    window: str = "hann"

    def __post_init__(self):
        for name in ("sample_rate", "frame_length", "hop_length", "fft_size"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v <= 0:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if not self.hop_length <= self.frame_length <= self.fft_size:
            raise ConfigError(
                "need hop_length <= frame_length <= fft_size, got "
                f"{self.hop_length}, {self.frame_length}, {self.fft_size}")
        if self.fft_size & (self.fft_size - 1):
            raise ConfigError(f"fft_size must be a power of two, got {self.fft_size}")
        try:
            get_window(self.window, 8)
        except ValueError as exc:
            raise ConfigError(f"unknown window {self.window!r}") from exc

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1

    def n_frames(self, n_samples: int) -> int:
        return max(1, math.ceil(n_samples / self.hop_length))

    def bin_frequencies(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.sample_rate / self.fft_size

    def window_array(self) -> np.ndarray:
        """Periodic window of ``frame_length`` samples, zero-padded and centred in ``fft_size``."""
        w = get_window(self.window, self.frame_length, fftbins=True)
        off = (self.fft_size - self.frame_length) // 2
        out = np.zeros(self.fft_size)
        out[off:off + self.frame_length] = w
        return out


@dataclass(frozen=True)
class ComplexSpectrogram:
    data: np.ndarray  # T x (fft_size/2+1), complex
    config: FrameConfig
    n_samples: int = 0

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[1] != self.config.n_bins:
            raise InvalidInput(
                f"expected T x {self.config.n_bins} spectrum, got {self.data.shape}")
        if self.data.shape[0] < 1:
            raise InvalidInput("spectrogram has no frames")

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    def magnitude(self) -> "MagnitudeSpectrogram":
        return MagnitudeSpectrogram(np.abs(self.data), "linear", self.config)


@dataclass(frozen=True)
class MagnitudeSpectrogram:
    data: np.ndarray  # T x F
    scale: str = "linear"
    config: FrameConfig = field(default_factory=FrameConfig)

    def __post_init__(self):
        if self.scale not in ("linear", "log"):
            raise InvalidInput(f"scale must be 'linear' or 'log', got {self.scale!r}")
        if self.data.ndim != 2:
            raise InvalidInput(f"expected a 2-D matrix, got shape {self.data.shape}")
        if self.scale == "linear" and np.any(self.data < 0):
            raise InvalidInput("linear magnitudes must be nonnegative")

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class MelSpectrogram:
    data: np.ndarray  # T x n_mels, natural log
    n_mels: int
    fmin: float
    fmax: float


@dataclass(frozen=True)
class Cepstrum:
    data: np.ndarray  # T x fft_size, real
    config: FrameConfig
    imag_residue: float = 0.0  # max |imag| discarded by the inverse DFT


@dataclass(frozen=True)
class Lifter:
    n_c: int
    weights: np.ndarray

    @property
    def fft_size(self) -> int:
        return self.weights.shape[0]


def _as_signal(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidInput(f"expected a 1-D waveform, got shape {x.shape}")
    if x.size == 0:
        raise InvalidInput("empty signal")
    if not np.all(np.isfinite(x)):
        raise InvalidInput("signal contains NaN or infinite samples")
    return x


def frame_signal(x, cfg: FrameConfig, mode: str = "reflect") -> np.ndarray:
    """Return a T x fft_size matrix of centred frames (frame t centred on sample t*hop).

    The signal is padded by ``frame_length // 2`` on the left and as much as
    needed on the right so that exactly ``ceil(len(x) / hop)`` frames exist.
    """
    x = _as_signal(x)
    n = x.size
    T = cfg.n_frames(n)
    left = cfg.fft_size // 2
    right = max(0, (T - 1) * cfg.hop_length + cfg.fft_size - left - n)
    if mode == "reflect" and n < 2:
        mode = "constant"
    padded = np.pad(x, (left, right), mode=mode)
    view = np.lib.stride_tricks.sliding_window_view(padded, cfg.fft_size)
    return view[: (T - 1) * cfg.hop_length + 1 : cfg.hop_length]


def stft(x, cfg: FrameConfig | None = None) -> ComplexSpectrogram:
    cfg = cfg or FrameConfig()
    frames = frame_signal(x, cfg) * cfg.window_array()
    return ComplexSpectrogram(np.fft.rfft(frames, axis=1), cfg, int(np.size(x)))


def _nola_check(cfg: FrameConfig) -> np.ndarray:
    w2 = cfg.window_array() ** 2
    hop = cfg.hop_length
    acc = np.zeros(hop)
    for start in range(0, cfg.fft_size, hop):
        seg = w2[start:start + hop]
        acc[: seg.size] += seg
    if acc.min() <= 1e-10 * max(acc.max(), 1e-300):
        raise ConfigError(
            f"window {cfg.window!r} with hop {hop} does not overlap-add to a "
            "nonzero constant; ISTFT is undefined")
    return acc


def istft(spec: ComplexSpectrogram, length: int | None = None) -> np.ndarray:
    """Weighted overlap-add inverse of :func:`stft`.

    The synthesis window equals the analysis window and the result is divided
    by the overlap-added squared window, so any config whose squared window
    sums to a nonzero value everywhere reconstructs exactly.
    """
    cfg = spec.config
    _nola_check(cfg)
    n = length if length is not None else (spec.n_samples or spec.n_frames * cfg.hop_length)
    T = spec.n_frames
    w = cfg.window_array()
    frames = np.fft.irfft(spec.data, n=cfg.fft_size, axis=1) * w
    total = (T - 1) * cfg.hop_length + cfg.fft_size
    out = np.zeros(total)
    norm = np.zeros(total)
    w2 = w ** 2
    for t in range(T):
        s = t * cfg.hop_length
        out[s:s + cfg.fft_size] += frames[t]
        norm[s:s + cfg.fft_size] += w2
    left = cfg.fft_size // 2
    out = out[left:left + n]
    norm = norm[left:left + n]
    out = np.divide(out, norm, out=np.zeros_like(out), where=norm > 1e-10)
    if out.size < n:
        out = np.pad(out, (0, n - out.size))
    return out


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(cfg: FrameConfig, n_mels: int = 80, fmin: float = 90.0,
                   fmax: float = 7600.0) -> np.ndarray:
    """Triangular filters (peak 1) evenly spaced on the HTK mel scale, n_mels x n_bins."""
    if n_mels < 1:
        raise ConfigError("n_mels must be >= 1")
    if fmax > cfg.sample_rate / 2:
        raise ConfigError(f"fmax {fmax} exceeds Nyquist {cfg.sample_rate / 2}")
    if not 0 <= fmin < fmax:
        raise ConfigError(f"need 0 <= fmin < fmax, got {fmin}, {fmax}")
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    freqs = cfg.bin_frequencies()
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    up = (freqs - lo) / (mid - lo)
    down = (hi - freqs) / (hi - mid)
    return np.maximum(0.0, np.minimum(up, down))


def mel_project(mag: MagnitudeSpectrogram, n_mels: int = 80, fmin: float = 90.0,
                fmax: float = 7600.0, floor: float = LOG_FLOOR) -> MelSpectrogram:
    if mag.scale != "linear":
        raise InvalidInput("mel_project expects a linear-scale magnitude spectrogram")
    fb = mel_filterbank(mag.config, n_mels, fmin, fmax)
    if mag.data.shape[1] != fb.shape[1]:
        raise InvalidInput(
            f"magnitude has {mag.data.shape[1]} bins, filterbank expects {fb.shape[1]}")
    mel = np.log(np.maximum(mag.data @ fb.T, floor))
    return MelSpectrogram(mel, n_mels, fmin, fmax)


def _full_log_magnitude(mag: np.ndarray, fft_size: int, floor: float) -> np.ndarray:
    half = np.log(np.maximum(mag, floor))
    # bins fft_size/2+1 .. fft_size-1 mirror 1 .. fft_size/2-1
    return np.concatenate([half, half[:, -2:0:-1]], axis=1)


def real_cepstrum(spec, floor: float = LOG_FLOOR) -> Cepstrum:
    """Per-frame inverse DFT of the floored log magnitude.

    Accepts a :class:`ComplexSpectrogram` or a linear
    :class:`MagnitudeSpectrogram`.  The log magnitude is real and even, so the
    inverse transform is real up to round-off; the largest discarded
    imaginary part is kept in ``imag_residue``.
    """
    if isinstance(spec, ComplexSpectrogram):
        mag = np.abs(spec.data)
    elif isinstance(spec, MagnitudeSpectrogram):
        if spec.scale != "linear":
            raise InvalidInput("real_cepstrum needs linear magnitudes")
        mag = spec.data
    else:
        raise InvalidInput(f"unsupported spectrum type {type(spec).__name__}")
    cfg = spec.config
    if mag.shape[0] < 1:
        raise InvalidInput("empty spectrogram")
    if mag.shape[1] != cfg.n_bins:
        raise InvalidInput(f"expected {cfg.n_bins} bins, got {mag.shape[1]}")
    c = np.fft.ifft(_full_log_magnitude(mag, cfg.fft_size, floor), axis=1)
    residue = float(np.max(np.abs(c.imag))) if c.size else 0.0
    return Cepstrum(c.real.copy(), cfg, residue)


def make_lifter(n_c: int, fft_size: int, binarize: bool = False) -> Lifter:
    """Low-quefrency lifter ``0.5 u[n_c - i] + 0.5 u[n_c - i - 1]`` with u[0] = 1.

    Weights are mirrored so that ``w[i] == w[fft_size - i]``; that keeps the
    liftered cepstrum even and its DFT real.  ``binarize`` rounds the 0.5
    boundary weight up to 1.
    """
    if not (isinstance(n_c, (int, np.integer)) and 1 <= n_c < fft_size // 2):
        raise ConfigError(f"n_c must be an integer in [1, {fft_size // 2}), got {n_c!r}")
    i = np.arange(fft_size // 2 + 1)
    step = lambda k: (k >= 0).astype(np.float64)  # noqa: E731
    half = 0.5 * step(n_c - i) + 0.5 * step(n_c - i - 1)
    if binarize:
        half = np.ceil(half)
    w = np.concatenate([half, half[-2:0:-1]])
    return Lifter(int(n_c), w)


def lifter_cepstrum(c: Cepstrum, lifter: Lifter) -> Cepstrum:
    if c.data.shape[1] != lifter.fft_size:
        raise InvalidInput(
            f"cepstrum length {c.data.shape[1]} != lifter length {lifter.fft_size}")
    return Cepstrum(c.data * lifter.weights, c.config, c.imag_residue)


def envelope_from_cepstrum(c_l: Cepstrum) -> MagnitudeSpectrogram:
    cfg = c_l.config
    log_mag = np.fft.fft(c_l.data, axis=1).real[:, : cfg.n_bins]
    return MagnitudeSpectrogram(np.exp(log_mag), "linear", cfg)


def spectral_envelope(spec, n_c: int = 3, binarize: bool = False,
                      floor: float = LOG_FLOOR) -> MagnitudeSpectrogram:
    """Cepstrum, lifter, exponentiated DFT in one call."""
    cep = real_cepstrum(spec, floor)
    return envelope_from_cepstrum(
        lifter_cepstrum(cep, make_lifter(n_c, cep.config.fft_size, binarize)))


def quefrency_energy_ratio(cepstrum: np.ndarray, max_quefrency: int) -> np.ndarray:
    """Per-row share of cepstral energy at folded quefrency ``min(i, N - i) <= max_quefrency``."""
    c = np.atleast_2d(cepstrum)
    n = c.shape[1]
    i = np.arange(n)
    low = np.minimum(i, n - i) <= max_quefrency
    e = c ** 2
    total = e.sum(axis=1)
    return np.divide(e[:, low].sum(axis=1), total, out=np.ones_like(total), where=total > 0)
