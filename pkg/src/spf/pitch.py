"""Speaker pitch statistics, z-normalization, one-hot quantization and the
pitch-converter input assembly."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AlignmentError, InsufficientData, InvalidInput
from .resample import FeatureSequence, ResampleConfig, random_resample
from .vocoder import PitchContour

STD_FLOOR = 1e-3


@dataclass(frozen=True)
class SpeakerStats:
    speaker_id: str
    log_f0_mean: float
    log_f0_std: float
    frame_count: int

    def to_json(self) -> str:
        return json.dumps({"speaker_id": self.speaker_id, "log_f0_mean": self.log_f0_mean,
                           "log_f0_std": self.log_f0_std, "frame_count": self.frame_count},
                          indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SpeakerStats":
        d = json.loads(text)
        missing = {"speaker_id", "log_f0_mean", "log_f0_std", "frame_count"} - d.keys()
        if missing:
            raise InvalidInput(f"speaker stats missing fields {sorted(missing)}")
        return cls(str(d["speaker_id"]), float(d["log_f0_mean"]), float(d["log_f0_std"]),
                   int(d["frame_count"]))

    def save(self, path):
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "SpeakerStats":
        return cls.from_json(Path(path).read_text())


class StatsAccumulator:
    """Streaming mean/variance (Welford) with an associative ``merge``."""

    def __init__(self, count=0, mean=0.0, m2=0.0):
        self.count = count
        self.mean = mean
        self.m2 = m2

    def update(self, values):
        v = np.asarray(values, dtype=np.float64).ravel()
        if v.size:
            mean = float(v.mean())
            batch = StatsAccumulator(v.size, mean, float(np.sum((v - mean) ** 2)))
            merged = self.merge(batch)
            self.count, self.mean, self.m2 = merged.count, merged.mean, merged.m2
        return self

    def merge(self, other: "StatsAccumulator") -> "StatsAccumulator":
        n = self.count + other.count
        if n == 0:
            return StatsAccumulator()
        if self.count == 0:
            return StatsAccumulator(other.count, other.mean, other.m2)
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta ** 2 * self.count * other.count / n
        return StatsAccumulator(n, mean, m2)

    def finalize(self, speaker_id: str, std_floor: float = STD_FLOOR) -> SpeakerStats:
        if self.count == 0:
            raise InsufficientData(f"speaker {speaker_id!r} has no voiced frames")
        std = math.sqrt(max(self.m2, 0.0) / self.count)
        return SpeakerStats(speaker_id, float(self.mean), max(std, std_floor), int(self.count))


def _domain_values(f0, domain):
    if domain == "log":
        return np.log(f0)
    if domain == "linear":
        return np.asarray(f0, dtype=np.float64)
    raise InvalidInput(f"pitch domain must be 'log' or 'linear', got {domain!r}")


def accumulate(contour: PitchContour, acc: StatsAccumulator | None = None,
               domain: str = "log") -> StatsAccumulator:
    acc = acc or StatsAccumulator()
    return acc.update(_domain_values(contour.f0[contour.voiced], domain))


def compute_speaker_stats(contours, speaker_id: str, domain: str = "log",
                          std_floor: float = STD_FLOOR) -> SpeakerStats:
    """Mean and population std of log-F0 over every voiced frame of a speaker.

    In ``linear`` mode the same fields hold Hz statistics instead.
    """
    acc = StatsAccumulator()
    for c in contours:
        accumulate(c, acc, domain)
    return acc.finalize(speaker_id, std_floor)


@dataclass(frozen=True)
class NormalizedContour:
    z: np.ndarray  # 0 on unvoiced frames
    voiced: np.ndarray

    def __len__(self):
        return self.z.size


def normalize_contour(p: PitchContour, stats: SpeakerStats, domain: str = "log") -> NormalizedContour:
    z = np.zeros(len(p))
    z[p.voiced] = (_domain_values(p.f0[p.voiced], domain) - stats.log_f0_mean) / stats.log_f0_std
    return NormalizedContour(z, p.voiced.copy())


@dataclass(frozen=True)
class OneHotPitch:
    data: np.ndarray  # T x (n_bins + 1); last column flags unvoiced frames
    n_bins: int

    @property
    def bins(self) -> np.ndarray:
        """Bin index per frame; ``n_bins`` for unvoiced frames."""
        return np.argmax(self.data, axis=1)

    def as_sequence(self) -> FeatureSequence:
        return FeatureSequence(self.data.astype(np.float64), "onehot", 0)


def quantize_bins(z, n_bins=256, z_range=(-4.0, 4.0)) -> np.ndarray:
    z_min, z_max = z_range
    zc = np.clip(np.asarray(z, dtype=np.float64), z_min, z_max)
    idx = np.floor((zc - z_min) / (z_max - z_min) * n_bins).astype(int)
    return np.clip(idx, 0, n_bins - 1)


def quantize_onehot(zc: NormalizedContour, n_bins: int = 256,
                    z_range=(-4.0, 4.0)) -> OneHotPitch:
    if n_bins < 2:
        raise InvalidInput("n_bins must be >= 2")
    if not z_range[0] < z_range[1]:
        raise InvalidInput(f"empty z_range {z_range}")
    idx = np.where(zc.voiced, quantize_bins(zc.z, n_bins, z_range), n_bins)
    data = np.zeros((len(zc), n_bins + 1), dtype=np.float32)
    data[np.arange(len(zc)), idx] = 1
    return OneHotPitch(data, n_bins)


@dataclass(frozen=True)
class PitchConverterInput:
    data: np.ndarray  # T' x (d_spec + n_bins + 1)
    d_spec: int
    n_bins: int
    source: np.ndarray  # fractional source frame per output row

    @property
    def spectral(self):
        return self.data[:, : self.d_spec]

    @property
    def onehot(self):
        return self.data[:, self.d_spec:]


def align(a: int, b: int, max_slack: int = 2) -> int:
    if abs(a - b) > max_slack:
        raise AlignmentError(f"frame counts {a} and {b} differ by more than {max_slack}")
    return min(a, b)


def build_pitch_converter_input(spec_perturbed: FeatureSequence, p: OneHotPitch,
                                rng: np.random.Generator,
                                cfg: ResampleConfig | None = None,
                                max_slack: int = 2) -> PitchConverterInput:
    """Stack perturbed-spectrogram and one-hot pitch frames, then resample them jointly.

    Frame counts may differ by up to ``max_slack``; the longer input is truncated.
    """
    T = align(len(spec_perturbed), p.data.shape[0], max_slack)
    d_spec = spec_perturbed.width
    joint = np.hstack([spec_perturbed.data[:T], p.data[:T].astype(np.float64)])
    out = random_resample(FeatureSequence(joint, "concat", d_spec), rng, cfg)
    return PitchConverterInput(out.data, d_spec, p.n_bins, out.source)
