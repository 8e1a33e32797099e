"""Assembly of the four encoder inputs.

::

    x --analyze--> f, a, E --smooth f--> resynthesize --> x_mono
    x_mono --STFT--> |S_mono| --VTLP(alpha)--> |S_pert|
    S_c = R(mel(|S_pert|))
    S_r = R(envelope(lifter(cepstrum(|S_pert|))))        (mel-projected unless full resolution)
    P_r = R(onehot(normalize(f)))
    S_p = R([mel(|S_pert|) ; onehot(normalize(f))])

Each R call draws from its own generator so the three resampled inputs are
independent; :func:`seed_streams` derives all of them from a master seed and
the utterance id.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .. import dsp, pitch, vocoder
from ..dsp import MagnitudeSpectrogram, MelSpectrogram
from ..errors import StatsNotFound
from ..perturb import WarpFactor, sample_alpha, vtlp_warp
from ..pitch import OneHotPitch, PitchConverterInput, SpeakerStats
from ..resample import FeatureSequence, random_resample
from .config import Config

STREAMS = ("alpha", "vocoder", "content", "rhythm", "pitch", "converter")


def derive_seed(master_seed: int, utterance_id: str) -> int:
    digest = hashlib.sha256(f"{int(master_seed)}:{utterance_id}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def seed_streams(master_seed: int, utterance_id: str) -> dict:
    """One independent generator per randomized step, keyed by :data:`STREAMS`."""
    ss = np.random.SeedSequence(derive_seed(master_seed, utterance_id))
    return {name: np.random.default_rng(child) for name, child in zip(STREAMS, ss.spawn(len(STREAMS)))}


@dataclass
class FrontEnd:
    """Intermediate products shared by the builders for one utterance."""

    x: np.ndarray
    analysis: vocoder.AnalysisResult
    monotonic: np.ndarray
    alpha: WarpFactor
    perturbed: MagnitudeSpectrogram
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_frames(self):
        return self.perturbed.n_frames


def front_end(x, cfg: Config, alpha: WarpFactor | float | None = None,
              rng: np.random.Generator | None = None,
              vocoder_seed: int | np.random.Generator = 0) -> FrontEnd:
    """Monotonize ``x`` and warp its magnitude spectrogram.

    ``alpha`` is drawn from ``rng`` when not given.
    """
    if alpha is None:
        alpha = sample_alpha(rng if rng is not None else np.random.default_rng(cfg.seed))
    elif not isinstance(alpha, WarpFactor):
        alpha = WarpFactor(float(alpha))
    x = dsp._as_signal(x)
    voc = vocoder.get_vocoder(cfg.vocoder, cfg.vocoder_config)
    analysis = voc.analyze(x)
    mono = voc.synthesize(vocoder.smooth_pitch(analysis.pitch), analysis.aperiodicity,
                          analysis.envelope, analysis.n_samples, vocoder_seed)
    mono_mag = dsp.stft(mono, cfg.frame).magnitude()
    return FrontEnd(x, analysis, mono, alpha, vtlp_warp(mono_mag, alpha, cfg.warp_config))


def mel(mag: MagnitudeSpectrogram, cfg: Config) -> MelSpectrogram:
    return dsp.mel_project(mag, cfg.n_mels, cfg.fmin, cfg.fmax, cfg.log_floor)


def _front(x, rng, cfg, front):
    if front is not None:
        return front
    return front_end(x, cfg, rng=rng, vocoder_seed=rng)


def perturbed_mel(front: FrontEnd, cfg: Config) -> FeatureSequence:
    if "mel" not in front._cache:
        front._cache["mel"] = FeatureSequence(mel(front.perturbed, cfg).data, "mel")
    return front._cache["mel"]


def build_content_input(x, rng: np.random.Generator, cfg: Config | None = None,
                        front: FrontEnd | None = None) -> FeatureSequence:
    cfg = cfg or Config()
    front = _front(x, rng, cfg, front)
    return random_resample(perturbed_mel(front, cfg), rng, cfg.resample_config)


def rhythm_envelope(front: FrontEnd, cfg: Config) -> MagnitudeSpectrogram:
    """Low-quefrency envelope of the perturbed spectrogram, before resampling."""
    if "envelope" not in front._cache:
        front._cache["envelope"] = dsp.spectral_envelope(
            front.perturbed, cfg.n_c, cfg.binarize_lifter, cfg.log_floor)
    return front._cache["envelope"]


def build_rhythm_input(x, rng: np.random.Generator, cfg: Config | None = None,
                       front: FrontEnd | None = None) -> FeatureSequence:
    cfg = cfg or Config()
    front = _front(x, rng, cfg, front)
    env = rhythm_envelope(front, cfg)
    data = env.data if cfg.rhythm_full_resolution else mel(env, cfg).data
    return random_resample(FeatureSequence(data, "envelope"), rng, cfg.resample_config)


def onehot_pitch(contour: vocoder.PitchContour, stats: SpeakerStats | None,
                 cfg: Config) -> OneHotPitch:
    if cfg.pitch_norm == "utterance" or stats is None:
        stats = pitch.compute_speaker_stats([contour], "<utterance>", cfg.pitch_domain,
                                            cfg.std_floor)
    z = pitch.normalize_contour(contour, stats, cfg.pitch_domain)
    return pitch.quantize_onehot(z, cfg.n_bins, cfg.z_range)


def build_pitch_input(x, stats: SpeakerStats | None, rng: np.random.Generator,
                      cfg: Config | None = None, front: FrontEnd | None = None,
                      contour: vocoder.PitchContour | None = None) -> FeatureSequence:
    """R(one-hot(normalize(F0 of x))).

    ``stats`` may be None only in per-utterance normalization mode.
    """
    cfg = cfg or Config()
    if stats is None and cfg.pitch_norm == "speaker":
        raise StatsNotFound("speaker statistics are required in speaker normalization mode")
    if contour is None:
        contour = front.analysis.pitch if front is not None else \
            vocoder.estimate_f0(x, cfg.vocoder_config)
    onehot = onehot_pitch(contour, stats, cfg)
    return random_resample(onehot.as_sequence(), rng, cfg.resample_config)


@dataclass
class EncoderInputs:
    S: MelSpectrogram
    S_c: FeatureSequence
    S_r: FeatureSequence
    P_r: FeatureSequence
    S_p: PitchConverterInput
    provenance: dict

    def tensors(self) -> dict:
        return {"S": self.S.data, "S_c": self.S_c.data, "S_r": self.S_r.data,
                "P_r": self.P_r.data, "S_p": self.S_p.data}

    def check_widths(self, cfg: Config):
        env_dim = cfg.frame.n_bins if cfg.rhythm_full_resolution else cfg.n_mels
        expected = {"S": cfg.n_mels, "S_c": cfg.n_mels, "S_r": env_dim,
                    "P_r": cfg.n_bins + 1, "S_p": cfg.n_mels + cfg.n_bins + 1}
        for name, arr in self.tensors().items():
            if arr.shape[1] != expected[name]:
                raise AssertionError(f"{name} width {arr.shape[1]} != {expected[name]}")


def lookup_stats(stats_store, speaker_id):
    if stats_store is None:
        raise StatsNotFound(f"no statistics for speaker {speaker_id!r}")
    try:
        return stats_store[speaker_id]
    except KeyError:
        raise StatsNotFound(f"no statistics for speaker {speaker_id!r}") from None


def build_all(x, speaker_id: str, stats_store, seed_or_streams, cfg: Config | None = None,
              utterance_id: str = "") -> EncoderInputs:
    """All encoder inputs for one utterance.

    ``seed_or_streams`` is either a master seed (combined with
    ``utterance_id``) or a dict from :func:`seed_streams`.
    """
    cfg = cfg or Config()
    if isinstance(seed_or_streams, dict):
        streams, derived = seed_or_streams, None
    else:
        derived = derive_seed(int(seed_or_streams), utterance_id)
        streams = seed_streams(int(seed_or_streams), utterance_id)
    stats = None if cfg.pitch_norm == "utterance" else lookup_stats(stats_store, speaker_id)
    try:
        alpha = sample_alpha(streams["alpha"])
        front = front_end(x, cfg, alpha, vocoder_seed=streams["vocoder"])
        S = mel(dsp.stft(front.x, cfg.frame).magnitude(), cfg)
        S_c = build_content_input(x, streams["content"], cfg, front)
        S_r = build_rhythm_input(x, streams["rhythm"], cfg, front)
        onehot = onehot_pitch(front.analysis.pitch, stats, cfg)
        P_r = random_resample(onehot.as_sequence(), streams["pitch"], cfg.resample_config)
        S_p = pitch.build_pitch_converter_input(perturbed_mel(front, cfg), onehot,
                                                streams["converter"], cfg.resample_config,
                                                cfg.align_slack)
    except Exception as exc:
        if utterance_id:
            # same effect as BaseException.add_note, which needs 3.11
            exc.__notes__ = [*getattr(exc, "__notes__", []), f"while building inputs for {utterance_id!r}"]
        raise
    provenance = {"utterance_id": utterance_id, "speaker_id": speaker_id,
                  "seed": derived,
                  "alpha": alpha.alpha, "n_c": cfg.n_c, "config_hash": cfg.digest()}
    out = EncoderInputs(S, S_c, S_r, P_r, S_p, provenance)
    out.check_widths(cfg)
    return out
