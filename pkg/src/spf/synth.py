"""Synthetic test signals: sines, formant vowels, vibrato and syllable envelopes."""
from __future__ import annotations

import numpy as np
from scipy.signal import freqz, lfilter

DEFAULT_FORMANTS = ((500.0, 80.0), (1500.0, 100.0), (2500.0, 120.0))


def sine(freq, duration, sr=16000, amp=0.5):
    t = np.arange(int(round(duration * sr))) / sr
    return amp * np.sin(2 * np.pi * freq * t)


def vibrato_f0(base, cents, rate, duration, sr=16000):
    """Per-sample F0 track oscillating ``cents`` around ``base`` at ``rate`` Hz."""
    t = np.arange(int(round(duration * sr))) / sr
    return base * 2.0 ** (cents * np.sin(2 * np.pi * rate * t) / 1200.0)


def glottal_pulses(f0, sr=16000):
    """Band-limited impulse train following a per-sample F0 track (0 = silent)."""
    f0 = np.asarray(f0, dtype=np.float64)
    phase = np.cumsum(f0 / sr)
    out = np.zeros(f0.size)
    crossings = np.nonzero(np.diff(np.floor(phase)) > 0)[0] + 1
    for n in crossings:
        if f0[n] <= 0:
            continue
        # fractional position where phase crossed the integer
        frac = (phase[n] - np.floor(phase[n])) / max(f0[n] / sr, 1e-12)
        _add_sinc(out, n - frac, np.sqrt(sr / f0[n]))
    return out


def _add_sinc(buf, pos, amp, half_width=16):
    c = int(np.floor(pos))
    idx = np.arange(c - half_width + 1, c + half_width + 1)
    d = idx - pos
    kernel = np.sinc(d) * (0.5 + 0.5 * np.cos(np.pi * d / half_width))
    ok = (idx >= 0) & (idx < buf.size)
    buf[idx[ok]] += amp * kernel[ok]


def formant_filter(formants=DEFAULT_FORMANTS, sr=16000):
    """Cascade of two-pole resonators, returned as (b, a) with unit DC gain."""
    a = np.array([1.0])
    for fc, bw in formants:
        r = np.exp(-np.pi * bw / sr)
        theta = 2 * np.pi * fc / sr
        a = np.convolve(a, [1.0, -2 * r * np.cos(theta), r * r])
    b = np.array([a.sum()])
    return b, a


def formant_peak_bins(formants=DEFAULT_FORMANTS, sr=16000, fft_size=1024):
    """Local maxima of the resonator cascade's magnitude response, in FFT bins."""
    b, a = formant_filter(formants, sr)
    _, h = freqz(b, a, worN=fft_size // 2 + 1, include_nyquist=True)
    mag = np.abs(h)
    peaks = np.nonzero((mag[1:-1] > mag[:-2]) & (mag[1:-1] >= mag[2:]))[0] + 1
    return peaks


def vowel(f0=125.0, duration=1.0, sr=16000, formants=DEFAULT_FORMANTS,
          amp=0.3, noise=0.0, seed=0):
    """Pulse train through a fixed formant cascade, normalised to peak ``amp``.

    ``f0`` is a scalar or a per-sample track; ``noise`` adds aspiration noise
    (relative RMS) before the formant filter.
    """
    n = int(round(duration * sr))
    track = np.broadcast_to(np.asarray(f0, dtype=np.float64), (n,)) if np.ndim(f0) == 0 \
        else np.asarray(f0, dtype=np.float64)[:n]
    src = glottal_pulses(track, sr)
    if noise > 0:
        rng = np.random.default_rng(seed)
        src = src + noise * np.sqrt(np.mean(src ** 2)) * rng.standard_normal(src.size)
    b, a = formant_filter(formants, sr)
    y = lfilter(b, a, src)
    peak = np.max(np.abs(y))
    return y * (amp / peak) if peak > 0 else y


def syllable_envelope(duration, sr=16000, syllables=4, gap=0.12, ramp=0.03):
    """Piecewise amplitude envelope: ``syllables`` equal bursts separated by silent gaps."""
    n = int(round(duration * sr))
    env = np.zeros(n)
    slot = duration / syllables
    for k in range(syllables):
        start = int((k * slot + gap / 2) * sr)
        stop = int(((k + 1) * slot - gap / 2) * sr)
        if stop <= start:
            continue
        seg = np.ones(stop - start)
        r = min(int(ramp * sr), seg.size // 2)
        if r > 0:
            seg[:r] = np.linspace(0, 1, r)
            seg[-r:] = np.linspace(1, 0, r)
        env[start:stop] = seg
    return env


def utterance(f0=125.0, duration=2.0, sr=16000, syllables=4, formants=DEFAULT_FORMANTS,
              noise=0.0, seed=0):
    """Vowel carrying a syllable-like amplitude envelope with pauses between bursts."""
    return vowel(f0, duration, sr, formants, noise=noise, seed=seed) * \
        syllable_envelope(duration, sr, syllables)
