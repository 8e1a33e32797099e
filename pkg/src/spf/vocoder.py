"""Analysis/synthesis vocoder used to build the monotonic utterance.

A deliberately small source-filter stack:

* F0 by normalized cross-correlation (NCCF) over a fixed window with
  parabolic peak refinement; a frame is voiced when the refined peak reaches
  ``voicing_threshold``; frames more than 0.3 octave off the local voiced
  median are re-picked or unvoiced.
* Spectral envelope by pitch-adaptive smoothing: the frame power spectrum is
  averaged over one harmonic spacing (F0 wide, or ``unvoiced_f0`` wide for
  unvoiced frames) and then cepstrally smoothed to ``envelope_order``
  coefficients.  The envelope is scaled so that unit-power excitation filtered
  by it reproduces the analysed power.
* Aperiodicity as ``1 - periodicity`` in a few bands, periodicity being the
  NCCF of the band-passed signal at the frame's pitch lag.
* Synthesis filters a band-limited pulse train (phase-accumulated from the
  per-sample interpolated F0) mixed with white noise in the STFT domain.

Frames share the STFT convention of :mod:`spf.dsp`, so frame ``t`` is
centred on sample ``t * hop_length`` and contours line up with spectrograms.
"""
from __future__ import annotations

import hashlib
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.signal import butter, sosfiltfilt

from . import dsp
from .dsp import FrameConfig
from .errors import ConfigError, InvalidInput

_CHUNK = 1024


@dataclass(frozen=True)
class VocoderConfig:
    frame: FrameConfig = field(default_factory=FrameConfig)
    f0_min: float = 71.0
    f0_max: float = 800.0
    voicing_threshold: float = 0.45
    envelope_order: int = 60
    band_edges: tuple = (1000.0, 2000.0, 4000.0)
    unvoiced_f0: float = 500.0
    silence_rms: float = 1e-5

    def __post_init__(self):
        nyq = self.frame.sample_rate / 2
        if not 0 < self.f0_min < self.f0_max < nyq:
            raise ConfigError(f"need 0 < f0_min < f0_max < {nyq}, got {self.f0_min}, {self.f0_max}")
        if not 0 < self.voicing_threshold < 1:
            raise ConfigError("voicing_threshold must lie in (0, 1)")
        if not 1 <= self.envelope_order < self.frame.fft_size // 2:
            raise ConfigError("envelope_order out of range")
        edges = tuple(float(e) for e in self.band_edges)
        if any(b <= a for a, b in zip(edges, edges[1:])) or (
                edges and not (0 < edges[0] and edges[-1] < nyq)):
            raise ConfigError(f"band_edges must increase strictly inside (0, {nyq})")
        object.__setattr__(self, "band_edges", edges)

    @property
    def n_bands(self) -> int:
        return len(self.band_edges) + 1

    def digest(self) -> str:
        return hashlib.sha256(repr(sorted(asdict(self).items())).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class PitchContour:
    f0: np.ndarray
    voiced: np.ndarray
    hop: int
    flat_warning: bool = False  # set by smooth_pitch when nothing was voiced

    def __post_init__(self):
        f0 = np.asarray(self.f0, dtype=np.float64)
        voiced = np.asarray(self.voiced, dtype=bool)
        if f0.shape != voiced.shape or f0.ndim != 1:
            raise InvalidInput("f0 and voiced must be 1-D arrays of equal length")
        if np.any((f0 > 0) != voiced):
            raise InvalidInput("f0 must be positive exactly on voiced frames")
        object.__setattr__(self, "f0", f0)
        object.__setattr__(self, "voiced", voiced)

    def __len__(self):
        return self.f0.size


@dataclass(frozen=True)
class Aperiodicity:
    ap: np.ndarray  # T x B, in [0, 1]
    band_edges: tuple


@dataclass(frozen=True)
class SpectralEnvelope:
    env: np.ndarray  # T x (fft_size/2+1), linear magnitude


@dataclass(frozen=True)
class AnalysisResult:
    pitch: PitchContour
    aperiodicity: Aperiodicity
    envelope: SpectralEnvelope
    config_hash: str
    n_samples: int

    def __post_init__(self):
        T = len(self.pitch)
        if self.aperiodicity.ap.shape[0] != T or self.envelope.env.shape[0] != T:
            raise InvalidInput("pitch, aperiodicity and envelope disagree on frame count")


def _segments(x, cfg: FrameConfig, window: int, max_lag: int, frames: slice):
    """Rows ``x[c - window//2 : c - window//2 + window + max_lag]`` for frame centres c."""
    left = window // 2
    T = cfg.n_frames(x.size)
    need = (T - 1) * cfg.hop_length + window + max_lag
    padded = np.pad(x, (left, max(0, need - left - x.size)))
    view = np.lib.stride_tricks.sliding_window_view(padded, window + max_lag)
    return view[::cfg.hop_length][:T][frames]


def nccf(x, cfg: VocoderConfig, frames: slice = slice(None)):
    """NCCF rows for lags 0..max_lag, plus the window energy of each frame.

    Returns ``(r, e0)`` where ``r`` is frames x (max_lag + 1).
    """
    fc = cfg.frame
    W = fc.frame_length
    max_lag = int(np.ceil(fc.sample_rate / cfg.f0_min)) + 1
    seg = _segments(x, fc, W, max_lag, frames)
    L = W + max_lag
    M = 1 << int(np.ceil(np.log2(L + W)))
    head = np.fft.rfft(seg[:, :W], M, axis=1)
    full = np.fft.rfft(seg, M, axis=1)
    num = np.fft.irfft(np.conj(head) * full, M, axis=1)[:, : max_lag + 1]
    sq = np.concatenate([np.zeros((seg.shape[0], 1)), np.cumsum(seg ** 2, axis=1)], axis=1)
    lags = np.arange(max_lag + 1)
    e_lag = sq[:, lags + W] - sq[:, lags]
    e0 = e_lag[:, :1]
    denom = np.sqrt(np.maximum(e0 * e_lag, 0.0))
    r = np.divide(num, denom, out=np.zeros_like(num), where=denom > 1e-20)
    return r, e0[:, 0]


def _pick_peaks(r, e0, cfg: VocoderConfig):
    sr = cfg.frame.sample_rate
    W = cfg.frame.frame_length
    lo = max(2, int(np.floor(sr / cfg.f0_max)))
    hi = min(r.shape[1] - 2, int(np.ceil(sr / cfg.f0_min)))
    T = r.shape[0]
    f0 = np.zeros(T)
    strength = np.zeros(T)
    lag = np.zeros(T)
    candidates = [None] * T
    band = r[:, lo:hi + 1]
    left = r[:, lo - 1:hi]
    right = r[:, lo + 1:hi + 2]
    is_peak = (band >= left) & (band > right)
    silence = e0 < W * cfg.silence_rms ** 2
    for t in range(T):
        k = np.nonzero(is_peak[t])[0] + lo
        if silence[t] or k.size == 0:
            continue
        a, b, c = r[t, k - 1], r[t, k], r[t, k + 1]
        den = a - 2 * b + c
        d = np.clip(np.divide(0.5 * (a - c), den, out=np.zeros_like(den), where=den < 0), -0.5, 0.5)
        peak = b - 0.25 * (a - c) * d
        freq = sr / (k + d)
        keep = (peak >= cfg.voicing_threshold) & (freq >= cfg.f0_min) & (freq <= cfg.f0_max)
        if not keep.any():
            continue
        candidates[t] = (k[keep] + d[keep], peak[keep])
        # shortest lag whose peak is close to the best one; guards against
        # picking a multiple of the true period
        j = np.nonzero(keep & (b >= 0.9 * b.max()))[0]
        if j.size == 0:
            continue
        j = j[0]
        f0[t], strength[t], lag[t] = freq[j], peak[j], k[j] + d[j]
    return f0, strength, lag, candidates


def _enforce_continuity(f0, lag, candidates, cfg: VocoderConfig, radius: int = 8,
                        tolerance: float = 0.3):
    """Repair octave jumps and isolated spurious picks.

    A voiced frame more than ``tolerance`` octaves from the median of its voiced
    neighbours (within ``radius`` frames) is re-picked from its own candidate
    peaks near that median, or unvoiced if none qualifies.
    """
    voiced = np.nonzero(f0 > 0)[0]
    if voiced.size < 3:
        return f0, lag
    sr = cfg.frame.sample_rate
    logf = np.log2(f0[voiced])
    fallback = np.median(logf)
    f0, lag = f0.copy(), lag.copy()
    for i, t in enumerate(voiced):
        lo, hi = np.searchsorted(voiced, [t - radius, t + radius + 1])
        nb = np.delete(logf[lo:hi], i - lo)
        ref = np.median(nb) if nb.size >= 3 else fallback
        if abs(logf[i] - ref) <= tolerance:
            continue
        cl, cv = candidates[t]
        ok = np.abs(np.log2(sr / cl) - ref) <= tolerance
        if ok.any():
            j = np.flatnonzero(ok)[np.argmax(cv[ok])]
            f0[t], lag[t] = sr / cl[j], cl[j]
        else:
            f0[t], lag[t] = 0.0, 0.0
    return f0, lag


def _track(x, cfg: VocoderConfig):
    """Per-frame F0 and fractional pitch lag (0 where unvoiced)."""
    T = cfg.frame.n_frames(x.size)
    f0 = np.zeros(T)
    lag = np.zeros(T)
    candidates = []
    for s in range(0, T, _CHUNK):
        r, e0 = nccf(x, cfg, slice(s, s + _CHUNK))
        f0[s:s + _CHUNK], _, lag[s:s + _CHUNK], cands = _pick_peaks(r, e0, cfg)
        candidates.extend(cands)
    return _enforce_continuity(f0, lag, candidates, cfg)


def estimate_f0(x, cfg: VocoderConfig | None = None) -> PitchContour:
    cfg = cfg or VocoderConfig()
    x = dsp._as_signal(x)
    f0, _ = _track(x, cfg)
    return PitchContour(f0, f0 > 0, cfg.frame.hop_length)


def _band_sos(cfg: VocoderConfig):
    sr = cfg.frame.sample_rate
    edges = cfg.band_edges
    sos = []
    for i in range(cfg.n_bands):
        lo = edges[i - 1] if i > 0 else None
        hi = edges[i] if i < len(edges) else None
        if lo is None:
            sos.append(butter(6, hi, "lowpass", fs=sr, output="sos"))
        elif hi is None:
            sos.append(butter(6, lo, "highpass", fs=sr, output="sos"))
        else:
            sos.append(butter(6, [lo, hi], "bandpass", fs=sr, output="sos"))
    return sos


def _periodicity_at(bands, cfg: VocoderConfig, lags):
    """NCCF of each band signal at each frame's fractional lag (0 where the lag is 0).

    ``bands`` is B x n; the result is T x B.  The cross-correlation is
    evaluated off the integer grid by applying a linear phase ramp to its
    spectrum; the lagged-window energy is linearly interpolated between
    integer lags.
    """
    fc = cfg.frame
    W = fc.frame_length
    max_lag = int(np.ceil(fc.sample_rate / cfg.f0_min)) + 2
    out = np.zeros((lags.size, len(bands)))
    idx = np.nonzero(lags > 0)[0]
    if idx.size == 0:
        return out
    M = 1 << int(np.ceil(np.log2(2 * W + max_lag)))
    k = np.arange(M // 2 + 1)
    scale = np.full(k.size, 2.0)
    scale[0] = 1.0
    scale[-1] = 1.0
    segs = [_segments(xb, fc, W, max_lag, slice(None)) for xb in bands]
    for s in range(0, idx.size, _CHUNK):
        rows = idx[s:s + _CHUNK]
        r = np.arange(rows.size)
        tau = lags[rows]
        ramp = scale * np.exp(2j * np.pi * np.outer(tau, k) / M)  # shared by all bands
        i = np.floor(tau).astype(int)
        f = tau - i
        for b, band_segs in enumerate(segs):
            seg = band_segs[rows]
            cross = np.conj(np.fft.rfft(seg[:, :W], M, axis=1)) * np.fft.rfft(seg, M, axis=1)
            num = np.sum((cross * ramp).real, axis=1) / M
            sq = np.concatenate([np.zeros((rows.size, 1)), np.cumsum(seg ** 2, axis=1)], axis=1)
            e_i = sq[r, i + W] - sq[r, i]
            e_j = sq[r, i + 1 + W] - sq[r, i + 1]
            den = np.sqrt(np.maximum(sq[:, W] * ((1 - f) * e_i + f * e_j), 0.0))
            out[rows, b] = np.divide(num, den, out=np.zeros_like(num), where=den > 1e-20)
    return out


def _smoothed_power(mag, f0_frames, cfg: VocoderConfig):
    """Average each frame's power spectrum over a band one F0 wide (rectangular, centred)."""
    fc = cfg.frame
    n_bins = fc.n_bins
    power = mag ** 2 / np.sum(fc.window_array() ** 2)
    width = np.where(f0_frames > 0, f0_frames, cfg.unvoiced_f0) * fc.fft_size / fc.sample_rate
    ext = n_bins - 1
    # mirror around DC and Nyquist so the average is defined at the edges
    full = np.concatenate([power[:, ext:0:-1], power, power[:, -2:-ext - 2:-1]], axis=1)
    cum = np.concatenate([np.zeros((full.shape[0], 1)), np.cumsum(full, axis=1)], axis=1)
    grid = np.arange(full.shape[1] + 1)
    k = np.arange(n_bins) + ext
    out = np.empty_like(power)
    for t in range(power.shape[0]):
        half = width[t] / 2
        hi = np.interp(k + 0.5 + half, grid, cum[t])
        lo = np.interp(k + 0.5 - half, grid, cum[t])
        out[t] = (hi - lo) / width[t]
    return out


def cepstral_smooth(log_spec, order):
    """Keep quefrencies ``|q| < order`` of a half-spectrum (T x n_bins) of log values."""
    n_bins = log_spec.shape[1]
    N = 2 * (n_bins - 1)
    full = np.concatenate([log_spec, log_spec[:, -2:0:-1]], axis=1)
    c = np.fft.ifft(full, axis=1).real
    q = np.arange(N)
    c[:, np.minimum(q, N - q) >= order] = 0.0
    return np.fft.fft(c, axis=1).real[:, :n_bins]


def analyze(x, cfg: VocoderConfig | None = None) -> AnalysisResult:
    cfg = cfg or VocoderConfig()
    x = dsp._as_signal(x)
    fc = cfg.frame
    T = fc.n_frames(x.size)
    f0, lags = _track(x, cfg)
    pitch = PitchContour(f0, f0 > 0, fc.hop_length)

    ap = np.ones((T, cfg.n_bands))
    frame_energy = np.sum(dsp.frame_signal(x, fc, mode="constant") ** 2, axis=1)
    bands = [sosfiltfilt(sos, x) if x.size > 60 else np.zeros_like(x) for sos in _band_sos(cfg)]
    per = _periodicity_at(bands, cfg, lags)
    for b, xb in enumerate(bands):
        band_energy = np.sum(dsp.frame_signal(xb, fc, mode="constant") ** 2, axis=1)
        audible = band_energy > 1e-6 * np.maximum(frame_energy, 1e-30)
        ap[:, b] = np.where(pitch.voiced & audible, np.clip(1.0 - per[:, b], 0.0, 1.0), 1.0)

    mag = np.abs(dsp.stft(x, fc).data)
    power = _smoothed_power(mag, f0, cfg)
    log_p = np.log(np.maximum(power, dsp.LOG_FLOOR ** 2))
    env = np.exp(0.5 * cepstral_smooth(log_p, cfg.envelope_order))
    return AnalysisResult(pitch, Aperiodicity(ap, cfg.band_edges), SpectralEnvelope(env),
                          cfg.digest(), int(x.size))


def smooth_pitch(p: PitchContour) -> PitchContour:
    """Replace every voiced F0 with the mean over voiced frames."""
    if not p.voiced.any():
        warnings.warn("pitch contour has no voiced frames; returned unchanged", RuntimeWarning,
                      stacklevel=2)
        return PitchContour(p.f0.copy(), p.voiced.copy(), p.hop, flat_warning=True)
    f0 = p.f0.copy()
    f0[p.voiced] = np.mean(p.f0[p.voiced])
    return PitchContour(f0, p.voiced.copy(), p.hop)


def sample_f0_track(p: PitchContour, n_samples: int) -> np.ndarray:
    """Per-sample F0: linear between voiced frame centres, zero where the nearest frame is unvoiced."""
    n = np.arange(n_samples)
    if not p.voiced.any():
        return np.zeros(n_samples)
    centres = np.arange(len(p)) * p.hop
    track = np.interp(n, centres[p.voiced], p.f0[p.voiced])
    nearest = np.clip(np.rint(n / p.hop).astype(int), 0, len(p) - 1)
    return np.where(p.voiced[nearest], track, 0.0)


def pulse_train(f0_track, sr) -> np.ndarray:
    """Unit-power band-limited pulses; phase accumulates only while voiced."""
    f0_track = np.asarray(f0_track, dtype=np.float64)
    inc = f0_track / sr
    phase = np.cumsum(inc)
    out = np.zeros(f0_track.size)
    hits = np.nonzero(np.floor(phase[1:]) > np.floor(phase[:-1]))[0] + 1
    half = 16
    d_base = np.arange(-half + 1, half + 1)
    for n in hits:
        if inc[n] <= 0:
            continue
        pos = n - (phase[n] - np.floor(phase[n])) / inc[n]
        c = int(np.floor(pos))
        idx = c + d_base
        d = idx - pos
        kernel = np.sinc(d) * (0.5 + 0.5 * np.cos(np.pi * d / half))
        ok = (idx >= 0) & (idx < out.size)
        out[idx[ok]] += np.sqrt(1.0 / inc[n]) * kernel[ok]
    return out


def _band_matrix(ap, band_edges, cfg: FrameConfig):
    freqs = cfg.bin_frequencies()
    band_of_bin = np.searchsorted(np.asarray(band_edges), freqs, side="right")
    return ap[:, band_of_bin]


def synthesize(p: PitchContour, a: Aperiodicity, e: SpectralEnvelope,
               cfg: VocoderConfig | None = None, n_samples: int | None = None,
               seed: int | np.random.Generator = 0) -> np.ndarray:
    cfg = cfg or VocoderConfig()
    fc = cfg.frame
    T = len(p)
    if a.ap.shape[0] != T or e.env.shape[0] != T:
        raise InvalidInput(
            f"frame counts differ: pitch {T}, aperiodicity {a.ap.shape[0]}, "
            f"envelope {e.env.shape[0]}")
    if e.env.shape[1] != fc.n_bins:
        raise InvalidInput(f"envelope has {e.env.shape[1]} bins, expected {fc.n_bins}")
    if a.ap.shape[1] != len(a.band_edges) + 1:
        raise InvalidInput("aperiodicity band count does not match its band edges")
    if p.hop != fc.hop_length:
        raise InvalidInput(f"pitch hop {p.hop} != frame hop {fc.hop_length}")
    n = n_samples if n_samples is not None else T * fc.hop_length
    if fc.n_frames(n) != T:
        raise InvalidInput(f"{n} samples imply {fc.n_frames(n)} frames, got {T}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    pulses = pulse_train(sample_f0_track(p, n), fc.sample_rate)
    noise = rng.standard_normal(n)
    P = dsp.stft(pulses, fc).data
    N = dsp.stft(noise, fc).data
    apk = np.clip(_band_matrix(a.ap, a.band_edges, fc), 0.0, 1.0)
    apk = np.where(p.voiced[:, None], apk, 1.0)
    Y = e.env * (np.sqrt(1.0 - apk) * P + np.sqrt(apk) * N)
    return dsp.istft(dsp.ComplexSpectrogram(Y, fc, n), n)


def monotonize(x, cfg: VocoderConfig | None = None, seed=0,
               analysis: AnalysisResult | None = None) -> np.ndarray:
    """Re-synthesize ``x`` with every voiced frame at the utterance's mean F0."""
    cfg = cfg or VocoderConfig()
    res = analysis if analysis is not None else analyze(x, cfg)
    return synthesize(smooth_pitch(res.pitch), res.aperiodicity, res.envelope, cfg,
                      res.n_samples, seed)


class SimpleVocoder:
    """Default backend wrapping the functions above."""

    name = "simple"

    def __init__(self, cfg: VocoderConfig | None = None):
        self.cfg = cfg or VocoderConfig()

    def analyze(self, x) -> AnalysisResult:
        return analyze(x, self.cfg)

    def synthesize(self, p, a, e, n_samples=None, seed=0):
        return synthesize(p, a, e, self.cfg, n_samples, seed)


class PyWorldVocoder:
    """Adapter over the ``pyworld`` binding, for A/B comparisons.

    Frames are resampled onto this package's frame grid so results are
    interchangeable with :class:`SimpleVocoder`.  Aperiodicity is collapsed to
    the configured bands by averaging.
    """

    name = "pyworld"

    def __init__(self, cfg: VocoderConfig | None = None):
        import pyworld  # noqa: F401  (optional dependency)

        self.cfg = cfg or VocoderConfig()
        self._pw = pyworld

    def analyze(self, x) -> AnalysisResult:
        fc = self.cfg.frame
        x = dsp._as_signal(x)
        period = 1000.0 * fc.hop_length / fc.sample_rate
        f0, t = self._pw.harvest(x, fc.sample_rate, f0_floor=self.cfg.f0_min,
                                 f0_ceil=self.cfg.f0_max, frame_period=period)
        sp = self._pw.cheaptrick(x, f0, t, fc.sample_rate, fft_size=fc.fft_size)
        ap = self._pw.d4c(x, f0, t, fc.sample_rate, fft_size=fc.fft_size)
        T = fc.n_frames(x.size)
        f0 = np.pad(f0, (0, max(0, T - f0.size)))[:T]
        sp = sp[:T] if sp.shape[0] >= T else np.vstack([sp, np.repeat(sp[-1:], T - sp.shape[0], 0)])
        ap = ap[:T] if ap.shape[0] >= T else np.vstack([ap, np.repeat(ap[-1:], T - ap.shape[0], 0)])
        band_of_bin = np.searchsorted(np.asarray(self.cfg.band_edges), fc.bin_frequencies(),
                                      side="right")
        ap_b = np.stack([ap[:, band_of_bin == b].mean(axis=1) for b in range(self.cfg.n_bands)], 1)
        pitch = PitchContour(np.where(f0 > 0, f0, 0.0), f0 > 0, fc.hop_length)
        return AnalysisResult(pitch, Aperiodicity(ap_b, self.cfg.band_edges),
                              SpectralEnvelope(np.sqrt(sp)), self.cfg.digest() + "-pw", x.size)

    def synthesize(self, p, a, e, n_samples=None, seed=0):
        return synthesize(p, a, e, self.cfg, n_samples, seed)


BACKENDS = {"simple": SimpleVocoder, "pyworld": PyWorldVocoder}


def get_vocoder(name: str = "simple", cfg: VocoderConfig | None = None):
    try:
        return BACKENDS[name](cfg)
    except KeyError:
        raise ConfigError(f"unknown vocoder backend {name!r}; choose from {sorted(BACKENDS)}")
