"""Random segment-wise resampling along time."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InvalidInput

KINDS = ("mel", "envelope", "onehot", "concat")


@dataclass(frozen=True)
class ResampleConfig:
    seg_len_range: tuple = (19, 32)
    rate_range: tuple = (0.5, 1.5)
    interpolation: str = "linear"

    def __post_init__(self):
        lo, hi = self.seg_len_range
        r_lo, r_hi = self.rate_range
        if not (int(lo) == lo and int(hi) == hi and 1 <= lo <= hi):
            raise ConfigError(f"seg_len_range must be integers 1 <= min <= max, got {self.seg_len_range}")
        if not 0 < r_lo <= r_hi:
            raise ConfigError(f"rate_range must satisfy 0 < min <= max, got {self.rate_range}")
        if self.interpolation != "linear":
            raise ConfigError(f"unsupported interpolation {self.interpolation!r}")


@dataclass(frozen=True)
class FeatureSequence:
    """T x D frames plus where they came from.

    ``onehot_from`` marks the first column of a trailing one-hot block (0 for
    pure one-hot sequences, None when there is none).  ``source`` holds the
    fractional input-frame position each row was read from; for unresampled
    sequences it is simply ``arange(T)``.
    """

    data: np.ndarray
    kind: str = "mel"
    onehot_from: int | None = None
    source: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2 or data.shape[0] < 1:
            raise InvalidInput(f"feature sequence must be T x D with T >= 1, got {data.shape}")
        if self.kind not in KINDS:
            raise InvalidInput(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "onehot" and self.onehot_from is None:
            object.__setattr__(self, "onehot_from", 0)
        if self.source is None:
            object.__setattr__(self, "source", np.arange(data.shape[0], dtype=np.float64))
        object.__setattr__(self, "data", data)

    def __len__(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]


def segment_lengths(T: int, rng: np.random.Generator, seg_len_range) -> list[int]:
    lo, hi = seg_len_range
    out, total = [], 0
    while total < T:
        n = int(rng.integers(lo, hi + 1))
        n = min(n, T - total)
        out.append(n)
        total += n
    return out


def resampled_length(n: int, rate: float) -> int:
    return max(1, math.ceil(n * rate))


def _positions(n: int, m: int) -> np.ndarray:
    if m == 1 or n == 1:
        return np.zeros(m)
    return np.arange(m) * (n - 1) / (m - 1)


def random_resample(seq: FeatureSequence, rng: np.random.Generator,
                    cfg: ResampleConfig | None = None) -> FeatureSequence:
    """Stretch or squeeze consecutive random-length segments by random rates.

    Segment lengths are uniform integers in ``seg_len_range``; each segment of
    ``n`` frames becomes ``ceil(n * rate)`` frames with ``rate`` uniform in
    ``rate_range``, read by linear interpolation on a grid that keeps the
    segment's first and last frames.  Any one-hot block is snapped back to
    one-hot by argmax afterwards.
    """
    cfg = cfg or ResampleConfig()
    if not isinstance(seq, FeatureSequence) or len(seq) == 0:
        raise InvalidInput("random_resample needs a non-empty FeatureSequence")
    T = len(seq)
    lengths = segment_lengths(T, rng, cfg.seg_len_range)
    pos = []
    start = 0
    for n in lengths:
        rate = float(rng.uniform(*cfg.rate_range))
        pos.append(start + _positions(n, resampled_length(n, rate)))
        start += n
    p = np.concatenate(pos)
    i0 = np.floor(p).astype(int)
    i1 = np.minimum(i0 + 1, T - 1)
    frac = (p - i0)[:, None]
    data = seq.data
    out = data[i0] * (1 - frac) + data[i1] * frac
    if seq.onehot_from is not None:
        k = seq.onehot_from
        block = out[:, k:]
        snapped = np.zeros_like(block)
        snapped[np.arange(block.shape[0]), np.argmax(block, axis=1)] = 1
        out[:, k:] = snapped
    src = np.interp(p, np.arange(T), seq.source)
    return FeatureSequence(out, seq.kind, seq.onehot_from, src)
