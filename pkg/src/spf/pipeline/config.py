"""Flat key = value configuration covering every tunable default.

Example file::

    # comments and blank lines are ignored
    n_c = 3
    rate_min = 0.5
    aperiodicity_bands = 1000, 2000, 4000

Unknown keys raise :class:`~spf.errors.ConfigError`.  ``SPF_SEED`` and
``SPF_THREADS`` in the environment override the file.
"""
from __future__ import annotations

import dataclasses
import hashlib
import os
from dataclasses import dataclass, fields
from pathlib import Path

from ..dsp import LOG_FLOOR, FrameConfig
from ..errors import ConfigError
from ..perturb import WarpConfig
from ..resample import ResampleConfig
from ..vocoder import VocoderConfig

# keys that cannot change any output byte
_NOT_HASHED = {"threads"}


@dataclass(frozen=True)
class Config:
    # framing
    sample_rate: int = 16000
    frame_length: int = 1024
    hop_length: int = 256
    fft_size: int = 1024
    window: str = "hann"
    # mel / cepstrum
    n_mels: int = 80
    fmin: float = 90.0
    fmax: float = 7600.0
    log_floor: float = LOG_FLOOR
    n_c: int = 3
    binarize_lifter: bool = False
    rhythm_full_resolution: bool = False
    # vocoder
    vocoder: str = "simple"
    f0_min: float = 71.0
    f0_max: float = 800.0
    voicing_threshold: float = 0.45
    envelope_order: int = 60
    aperiodicity_bands: tuple = (1000.0, 2000.0, 4000.0)
    unvoiced_f0: float = 500.0
    # VTLP
    warp_boundary: float = 4800.0
    fig_alpha: float = 0.95
    phase_iters: int = 0  # Griffin-Lim refinements for exported audio; 0 = original phase
    # random resampling
    seg_len_min: int = 19
    seg_len_max: int = 32
    rate_min: float = 0.5
    rate_max: float = 1.5
    # pitch representation
    n_bins: int = 256
    z_min: float = -4.0
    z_max: float = 4.0
    std_floor: float = 1e-3
    pitch_domain: str = "log"
    pitch_norm: str = "speaker"
    align_slack: int = 2
    # run
    seed: int = 0
    threads: int = 1
    # probe thresholds
    probe_f0_std_cents: float = 10.0
    probe_quefrency_ratio: float = 0.99
    probe_length_tolerance: float = 0.05
    probe_envelope_rel_diff: float = 0.10
    probe_raw_rel_diff: float = 0.50

    def __post_init__(self):
        if self.pitch_domain not in ("log", "linear"):
            raise ConfigError(f"pitch_domain must be log or linear, got {self.pitch_domain!r}")
        if self.pitch_norm not in ("speaker", "utterance"):
            raise ConfigError(f"pitch_norm must be speaker or utterance, got {self.pitch_norm!r}")
        if self.n_bins < 2:
            raise ConfigError("n_bins must be >= 2")
        if not self.z_min < self.z_max:
            raise ConfigError("z_min must be < z_max")
        if self.phase_iters < 0:
            raise ConfigError("phase_iters must be >= 0")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.std_floor <= 0 or self.log_floor <= 0:
            raise ConfigError("floors must be positive")
        if not 0.9 <= self.fig_alpha <= 1.1:
            raise ConfigError("fig_alpha must lie in [0.9, 1.1]")
        # build sub-configs eagerly so bad values fail at load time
        self.frame, self.vocoder_config, self.resample_config, self.warp_config
        self.warp_config.validate(self.sample_rate)
        if self.fmax > self.sample_rate / 2:
            raise ConfigError(f"fmax {self.fmax} exceeds Nyquist")
        if not 1 <= self.n_c < self.fft_size // 2:
            raise ConfigError(f"n_c must lie in [1, {self.fft_size // 2})")

    @property
    def frame(self) -> FrameConfig:
        return FrameConfig(self.sample_rate, self.frame_length, self.hop_length, self.fft_size,
                           self.window)

    @property
    def vocoder_config(self) -> VocoderConfig:
        return VocoderConfig(self.frame, self.f0_min, self.f0_max, self.voicing_threshold,
                             self.envelope_order, tuple(self.aperiodicity_bands), self.unvoiced_f0)

    @property
    def resample_config(self) -> ResampleConfig:
        return ResampleConfig((self.seg_len_min, self.seg_len_max), (self.rate_min, self.rate_max))

    @property
    def warp_config(self) -> WarpConfig:
        return WarpConfig(self.warp_boundary)

    @property
    def z_range(self):
        return (self.z_min, self.z_max)

    def replace(self, **changes) -> "Config":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        return "".join(f"{k} = {_format(v)}\n" for k, v in self.items())

    def items(self):
        return [(f.name, getattr(self, f.name)) for f in fields(self)]

    def digest(self) -> str:
        canon = "".join(f"{k}={_format(v)}\n" for k, v in self.items() if k not in _NOT_HASHED)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(_format(e) for e in v)
    return repr(v) if isinstance(v, float) else str(v)


def _parse(name: str, raw: str, default):
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return tuple(float(p) for p in raw.split(",") if p.strip())
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def parse_config(text: str, base: Config | None = None) -> Config:
    base = base or Config()
    defaults = dict(base.items())
    changes = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in defaults:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        changes[key] = _parse(key, value, defaults[key])
    return base.replace(**changes)


def load_config(path=None, env=None) -> Config:
    """Defaults, then the file at ``path`` (if any), then environment overrides."""
    cfg = parse_config(Path(path).read_text()) if path else Config()
    env = os.environ if env is None else env
    over = {}
    if env.get("SPF_SEED"):
        over["seed"] = _parse("SPF_SEED", env["SPF_SEED"], 0)
    if env.get("SPF_THREADS"):
        over["threads"] = _parse("SPF_THREADS", env["SPF_THREADS"], 0)
    return cfg.replace(**over) if over else cfg
