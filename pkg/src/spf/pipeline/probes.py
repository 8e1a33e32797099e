"""Property probes over synthetic signals (or a real corpus).

Each ``probe_*`` function checks one front-end claim and returns a
:class:`ProbeResult`; :func:`run_probes` runs the battery and writes the
report as JSON, a tab-separated table and a PNG margin chart.
"""
from __future__ import annotations

import filecmp
import json
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import dsp, metrics, perturb, pitch, synth, vocoder
from ..resample import FeatureSequence, ResampleConfig, random_resample
from . import tensorio
from .audio import CorpusManifest, ingest, read_wav, write_wav
from .builders import build_rhythm_input, front_end, seed_streams
from .config import Config
from .corpus import run_corpus
from .plotting import plot_figure2


@dataclass
class ProbeResult:
    name: str
    criterion: int
    passed: bool
    values: dict
    thresholds: dict
    runtime_s: float = 0.0
    detail: str = ""

    def line(self) -> str:
        vals = ", ".join(f"{k}={_fmt(v)}" for k, v in self.values.items())
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.criterion:>2} {self.name}: {vals}"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _timed(fn):
    def wrapper(cfg: Config | None = None, **kw):
        cfg = cfg or Config()
        t0 = time.perf_counter()
        res = fn(cfg, **kw)
        res.runtime_s = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (list, tuple)):
        return [_jsonable(e) for e in v]
    return v


@_timed
def probe_pitch_removal(cfg: Config) -> ProbeResult:
    """Vibrato vowel -> monotonize -> re-analysed voiced F0 spread below the cents limit."""
    fs = cfg.sample_rate
    x = synth.vowel(synth.vibrato_f0(220.0, 50.0, 5.5, 2.0, fs), 2.0, fs)
    vcfg = cfg.vocoder_config
    t0 = time.perf_counter()
    res = vocoder.analyze(x, vcfg)
    y = vocoder.monotonize(x, vcfg, seed=0, analysis=res)
    elapsed = time.perf_counter() - t0
    smoothed = vocoder.smooth_pitch(res.pitch)
    spread = float(np.ptp(smoothed.f0[smoothed.voiced]))  # exact; np.var leaves rounding residue
    before = metrics.voiced_f0_std_cents(res.pitch)
    after = metrics.voiced_f0_std_cents(vocoder.estimate_f0(y, vcfg))
    th = cfg.probe_f0_std_cents
    ok = after < th and spread == 0.0 and elapsed < 5.0
    return ProbeResult("pitch_removal", 1, ok,
                       {"f0_std_cents_before": before, "f0_std_cents_after": after,
                        "smoothed_voiced_spread_hz": spread, "monotonize_s": elapsed},
                       {"f0_std_cents_after": f"< {th}", "smoothed_voiced_spread_hz": "== 0",
                        "monotonize_s": "< 5"})


@_timed
def probe_vtlp_direction(cfg: Config) -> ProbeResult:
    """Formant peaks of a 3-formant vowel move down for alpha 0.9, up for 1.1; alpha 1 is identity."""
    fs = cfg.sample_rate
    x = synth.vowel(125.0, 1.0, fs)
    res = vocoder.analyze(x, cfg.vocoder_config)
    env = res.envelope.env[res.pitch.voiced].mean(axis=0, keepdims=True)
    env_spec = dsp.MagnitudeSpectrogram(env, "linear", cfg.frame)
    base = metrics.formant_peaks(env[0])
    down = metrics.formant_peaks(perturb.vtlp_warp(env_spec, 0.9, cfg.warp_config).data[0])
    up = metrics.formant_peaks(perturb.vtlp_warp(env_spec, 1.1, cfg.warp_config).data[0])
    mag = dsp.stft(x, cfg.frame).magnitude()
    ident = float(np.max(np.abs(perturb.vtlp_warp(mag, 1.0, cfg.warp_config).data - mag.data)))
    ok = (base.size == down.size == up.size == 3 and bool(np.all(down < base))
          and bool(np.all(up > base)) and ident <= 1e-9)
    return ProbeResult("vtlp_direction", 2, ok,
                       {"peaks_alpha_1.0": base.tolist(), "peaks_alpha_0.9": down.tolist(),
                        "peaks_alpha_1.1": up.tolist(), "identity_max_abs_err": ident},
                       {"peaks_alpha_0.9": "all < alpha 1.0", "peaks_alpha_1.1": "all > alpha 1.0",
                        "identity_max_abs_err": "<= 1e-9"})


@_timed
def probe_alpha_distribution(cfg: Config, draws: int = 100_000) -> ProbeResult:
    rng = np.random.default_rng(cfg.seed)
    a = np.array([perturb.sample_alpha(rng).alpha for _ in range(draws)])
    ok = a.min() >= 0.9 and a.max() <= 1.1 and 0.995 <= a.mean() <= 1.005
    return ProbeResult("alpha_distribution", 3, bool(ok),
                       {"min": float(a.min()), "max": float(a.max()), "mean": float(a.mean()),
                        "draws": draws},
                       {"range": "[0.9, 1.1]", "mean": "[0.995, 1.005]"})


@_timed
def probe_lifter(cfg: Config) -> ProbeResult:
    """Lifter weights at n_c = 3 and low-quefrency concentration of the liftered envelope."""
    N = cfg.fft_size
    w = dsp.make_lifter(3, N).weights
    expected = np.zeros(N // 2 + 1)
    expected[:3] = 1.0
    expected[3] = 0.5
    weights_ok = bool(np.array_equal(w[: N // 2 + 1], expected))
    rng = np.random.default_rng(cfg.seed)
    frames = rng.standard_normal((10, cfg.frame.n_bins)) + 1j * rng.standard_normal((10, cfg.frame.n_bins))
    spec = dsp.ComplexSpectrogram(frames, cfg.frame)
    env = dsp.spectral_envelope(spec, 3)
    ratio = dsp.quefrency_energy_ratio(dsp.real_cepstrum(env).data, 3)
    th = cfg.probe_quefrency_ratio
    ok = weights_ok and ratio.min() >= th
    return ProbeResult("lifter", 4, ok,
                       {"weights_0_5": w[:6].tolist(), "quefrency_ratio_min": float(ratio.min())},
                       {"weights_0_5": "[1, 1, 1, 0.5, 0, 0]", "quefrency_ratio_min": f">= {th}"})


def pitch_pair(cfg: Config, duration: float = 2.0):
    """Same vowel and timing at 200 Hz and 300 Hz, equal RMS, ~20 dB harmonic-to-noise ratio."""
    fs = cfg.sample_rate
    a = synth.utterance(200.0, duration, fs, noise=0.1, seed=1)
    b = synth.utterance(300.0, duration, fs, noise=0.1, seed=1)
    return a, b * np.sqrt(np.mean(a ** 2) / np.mean(b ** 2))


@_timed
def probe_envelope_pitch_invariance(cfg: Config) -> ProbeResult:
    """S_r of a 200 Hz / 300 Hz pair should nearly coincide while raw spectrograms differ."""
    a, b = pitch_pair(cfg)
    out = []
    for sig in (a, b):
        streams = seed_streams(cfg.seed, "pitch-pair")  # identical alpha and resampling grid
        fe = front_end(sig, cfg, perturb.sample_alpha(streams["alpha"]),
                       vocoder_seed=streams["vocoder"])
        out.append(build_rhythm_input(sig, streams["rhythm"], cfg, fe))
    ra, rb = out
    lin_a = ra.data if cfg.rhythm_full_resolution else np.exp(ra.data)
    lin_b = rb.data if cfg.rhythm_full_resolution else np.exp(rb.data)
    energy = metrics.frame_energy(a, cfg.frame)
    active_src = energy > 0.01 * energy.max()
    active = active_src[np.clip(np.rint(ra.source).astype(int), 0, energy.size - 1)]
    env_diff = float(metrics.framewise_relative_difference(lin_a, lin_b)[active].mean())
    # diagnostic only: the same distance after removing each frame's log-mean gain (c0)
    def _shape(m):
        return m / np.exp(np.mean(np.log(m), axis=1, keepdims=True))
    shape_diff = float(metrics.framewise_relative_difference(_shape(lin_a), _shape(lin_b))[active].mean())
    A = np.abs(dsp.stft(a, cfg.frame).data)
    B = np.abs(dsp.stft(b, cfg.frame).data)
    raw_diff = float(metrics.framewise_relative_difference(A, B)[active_src].mean())
    ok = env_diff < cfg.probe_envelope_rel_diff and raw_diff > cfg.probe_raw_rel_diff
    return ProbeResult("envelope_pitch_invariance", 5, ok,
                       {"S_r_rel_diff": env_diff, "raw_rel_diff": raw_diff,
                        "S_r_rel_diff_gain_removed": shape_diff},
                       {"S_r_rel_diff": f"< {cfg.probe_envelope_rel_diff}",
                        "raw_rel_diff": f"> {cfg.probe_raw_rel_diff}"})


@_timed
def probe_resample_contract(cfg: Config, runs: int = 1000) -> ProbeResult:
    rng = np.random.default_rng(cfg.seed)
    T = 100
    seq = FeatureSequence(rng.standard_normal((T, 8)), "mel")
    rcfg = cfg.resample_config
    unit = ResampleConfig(rcfg.seg_len_range, (1.0, 1.0))
    identity = bool(np.array_equal(random_resample(seq, np.random.default_rng(1), unit).data, seq.data))
    b1 = random_resample(seq, np.random.default_rng(7), rcfg).data.tobytes()
    b2 = random_resample(seq, np.random.default_rng(7), rcfg).data.tobytes()
    lengths = np.array([len(random_resample(seq, np.random.default_rng(s), rcfg)) for s in range(runs)])
    mean_dev = float(abs(lengths.mean() - T) / T)
    bins = rng.integers(0, 16, T)
    oh = np.zeros((T, 17))
    oh[np.arange(T), bins] = 1
    oh_out = random_resample(FeatureSequence(oh, "onehot"), np.random.default_rng(3), rcfg).data
    onehot_ok = bool(np.all(oh_out.sum(axis=1) == 1) and np.all((oh_out == 0) | (oh_out == 1)))
    ramp = FeatureSequence(np.arange(T, dtype=float)[:, None], "mel")
    r = random_resample(ramp, np.random.default_rng(5), rcfg)
    order_ok = bool(np.all(np.diff(r.data[:, 0]) >= 0) and np.all(np.diff(r.source) >= 0))
    tol = cfg.probe_length_tolerance
    ok = identity and b1 == b2 and mean_dev <= tol and onehot_ok and order_ok
    return ProbeResult("resample_contract", 6, ok,
                       {"identity": identity, "deterministic": b1 == b2,
                        "mean_length": float(lengths.mean()), "mean_length_rel_dev": mean_dev,
                        "onehot_valid": onehot_ok, "order_preserved": order_ok},
                       {"mean_length_rel_dev": f"<= {tol}"})


@_timed
def probe_joint_alignment(cfg: Config) -> ProbeResult:
    """Each S_p row's spectral and one-hot parts must come from the same source frame."""
    T, d = 120, 4
    n_bins = max(cfg.n_bins, T)
    spec = np.tile(np.arange(T, dtype=float)[:, None], (1, d))  # column value = frame index
    oh = np.zeros((T, n_bins + 1), dtype=np.float32)
    oh[np.arange(T), np.arange(T)] = 1  # bin = frame index
    sp = pitch.build_pitch_converter_input(FeatureSequence(spec, "mel"), pitch.OneHotPitch(oh, n_bins),
                                           np.random.default_rng(cfg.seed), cfg.resample_config)
    src = sp.source
    spec_ok = bool(np.allclose(sp.spectral[:, 0], src, atol=1e-9))
    i = np.floor(src + 1e-12).astype(int)
    nearest = i + ((src - i) > 0.5)
    onehot_ok = bool(np.array_equal(np.argmax(sp.onehot, axis=1), nearest))
    width_ok = sp.data.shape[1] == d + n_bins + 1
    return ProbeResult("joint_alignment", 7, spec_ok and onehot_ok and width_ok,
                       {"frames": sp.data.shape[0], "spectral_matches_source": spec_ok,
                        "onehot_matches_source": onehot_ok, "width": sp.data.shape[1]},
                       {"width": f"== {d + n_bins + 1}"})


@_timed
def probe_cepstral_algebra(cfg: Config) -> ProbeResult:
    rng = np.random.default_rng(cfg.seed)
    Y = rng.standard_normal((16, cfg.frame.n_bins)) + 1j * rng.standard_normal((16, cfg.frame.n_bins))
    spec = dsp.ComplexSpectrogram(Y, cfg.frame)
    cep = dsp.real_cepstrum(spec)
    allpass = dsp.Lifter(0, np.ones(cfg.fft_size))
    env = dsp.envelope_from_cepstrum(dsp.lifter_cepstrum(cep, allpass)).data
    rel = float(np.max(np.abs(env - np.abs(Y)) / np.abs(Y)))
    ok = rel < 1e-6 and cep.imag_residue < 1e-9
    return ProbeResult("cepstral_algebra", 8, ok,
                       {"max_rel_err": rel, "imag_residue": cep.imag_residue},
                       {"max_rel_err": "< 1e-6", "imag_residue": "< 1e-9"})


@_timed
def probe_round_trips(cfg: Config) -> ProbeResult:
    fs = cfg.sample_rate
    noise = np.random.default_rng(cfg.seed).standard_normal(2 * fs)
    snr = metrics.snr_db(noise, dsp.istft(dsp.stft(noise, cfg.frame)))
    f0 = 125.0
    x = synth.vowel(f0, 1.0, fs)
    vcfg = cfg.vocoder_config
    res = vocoder.analyze(x, vcfg)
    y = vocoder.synthesize(res.pitch, res.aperiodicity, res.envelope, vcfg, res.n_samples, 0)
    res2 = vocoder.analyze(y, vcfg)
    v = res2.pitch.voiced & res.pitch.voiced
    f0_err = float(np.max(np.abs(res2.pitch.f0[v] / res.pitch.f0[v] - 1))) if v.any() else float("inf")
    designed = synth.formant_peak_bins(sr=fs, fft_size=cfg.fft_size)
    found = metrics.formant_peaks(res2.envelope.env[v].mean(axis=0), len(designed))
    bin_err = int(np.max(np.abs(found - designed))) if found.size == designed.size else 10 ** 6
    ok = snr > 40 and f0_err <= 0.03 and bin_err <= 1
    return ProbeResult("round_trips", 9, ok,
                       {"istft_snr_db": snr, "f0_max_rel_err": f0_err,
                        "formant_bins_designed": designed.tolist(), "formant_bins_found": found.tolist(),
                        "formant_bin_err": bin_err},
                       {"istft_snr_db": "> 40", "f0_max_rel_err": "<= 0.03", "formant_bin_err": "<= 1"})


def synthetic_corpus(root, cfg: Config, speakers=(("spk_a", 120.0), ("spk_b", 210.0)),
                     per_speaker: int = 2, duration: float = 1.0):
    """Write a small speaker/utterance tree of synthetic vowels as 16-bit WAVs."""
    root = Path(root)
    fs = cfg.sample_rate
    for s, (spk, base) in enumerate(speakers):
        for u in range(per_speaker):
            f0 = synth.vibrato_f0(base * (1 + 0.05 * u), 40.0, 4.5 + u, duration, fs)
            x = synth.utterance(f0, duration, fs, syllables=2 + u, noise=0.05, seed=10 * s + u)
            write_wav(root / spk / f"utt{u:02d}.wav", x, fs)
    return root


def _tree_identical(a: Path, b: Path) -> bool:
    fa = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    fb = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    if fa != fb:
        return False
    return all(filecmp.cmp(a / p, b / p, shallow=False) for p in fa)


@_timed
def probe_determinism_and_figure(cfg: Config, workdir=None) -> ProbeResult:
    """Two ``inputs`` runs give identical trees; the four figure panels show the expected effects."""
    if workdir is not None:
        Path(workdir).mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        tmp = Path(tmp)
        synthetic_corpus(tmp / "corpus", cfg)
        manifest = ingest(tmp / "corpus", cfg.digest())
        s1 = run_corpus(manifest, cfg, tmp / "run1")
        s2 = run_corpus(manifest, cfg, tmp / "run2")
        identical = _tree_identical(tmp / "run1", tmp / "run2") and not s1["failed"] and not s2["failed"]
        x = synth.utterance(synth.vibrato_f0(220.0, 50.0, 5.0, 2.0, cfg.sample_rate), 2.0,
                            cfg.sample_rate, noise=0.05)
        fig = plot_figure2(x, cfg, tmp / "fig")
        pngs = all(Path(p).stat().st_size > 0 for p in fig["paths"])
    m = fig["metrics"]
    th = cfg.probe_f0_std_cents
    flat = m["f0_std_cents_b"] < th and m["f0_std_cents_a"] > m["f0_std_cents_b"]
    lower = m["centroid_hz_c"] < m["centroid_hz_b"]
    smooth = m["envelope_quefrency_ratio_min"] >= cfg.probe_quefrency_ratio
    ok = identical and pngs and len(fig["paths"]) == 5 and flat and lower and smooth
    return ProbeResult("determinism_and_figure", 10, ok,
                       {"byte_identical": identical, "panels_written": len(fig["paths"]) - 1, **m},
                       {"f0_std_cents_b": f"< {th} and < f0_std_cents_a",
                        "centroid_hz_c": "< centroid_hz_b",
                        "envelope_quefrency_ratio_min": f">= {cfg.probe_quefrency_ratio}"})


SYNTHETIC_PROBES = (
    probe_pitch_removal,
    probe_vtlp_direction,
    probe_alpha_distribution,
    probe_lifter,
    probe_envelope_pitch_invariance,
    probe_resample_contract,
    probe_joint_alignment,
    probe_cepstral_algebra,
    probe_round_trips,
    probe_determinism_and_figure,
)


@dataclass
class ProbeReport:
    criteria: list = field(default_factory=list)
    voiced_f0_std_cents: float = float("nan")
    centroid_shift_sign_accuracy: float = float("nan")
    envelope_quefrency_energy_ratio: float = float("nan")
    resample_length_stats: dict = field(default_factory=dict)
    per_utterance: list = field(default_factory=list)
    total_runtime_s: float = 0.0
    runtime_limit_s: float = 60.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria) and self.total_runtime_s < self.runtime_limit_s

    def to_dict(self):
        d = asdict(self)
        d["passed"] = self.passed
        return json.loads(json.dumps(d, default=_jsonable))

    def lines(self):
        out = [c.line() for c in self.criteria]
        ok = self.total_runtime_s < self.runtime_limit_s
        out.append(f"[{'PASS' if ok else 'FAIL'}]    suite_runtime: "
                   f"{self.total_runtime_s:.2f} s (limit {self.runtime_limit_s:.0f} s)")
        return out

    def write(self, path):
        """Write ``path`` (JSON), ``path.tsv`` and ``path.png`` side by side."""
        path = Path(path)
        tensorio.atomic_write(path, (json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n").encode())
        rows = ["criterion\tname\tpassed\truntime_s\tvalues"]
        for c in self.criteria:
            vals = ";".join(f"{k}={_fmt(v)}" for k, v in c.values.items())
            rows.append(f"{c.criterion}\t{c.name}\t{int(c.passed)}\t{c.runtime_s:.3f}\t{vals}")
        tensorio.atomic_write(path.with_suffix(".tsv"), ("\n".join(rows) + "\n").encode())
        _plot_report(self, path.with_suffix(".png"))
        return path


def _plot_report(report: ProbeReport, path):
    import matplotlib.pyplot as plt

    from .plotting import STYLE

    if not report.criteria:
        return
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6, 0.35 * len(report.criteria) + 1))
        names = [f"{c.criterion}. {c.name}" for c in report.criteria]
        colors = ["tab:green" if c.passed else "tab:red" for c in report.criteria]
        ax.barh(names, [c.runtime_s for c in report.criteria], color=colors)
        ax.invert_yaxis()
        ax.set_xlabel("runtime (s); green = pass, red = fail")
        fig.savefig(path)
        plt.close(fig)


def corpus_metrics(manifest: CorpusManifest, cfg: Config, limit: int | None = None,
                   resample_draws: int = 100):
    """Per-utterance probe metrics on real audio.

    ``resampled_frames`` is the mean output length over ``resample_draws`` seeded draws.
    """
    rows = []
    vcfg = cfg.vocoder_config
    for entry in manifest.entries[:limit]:
        x = read_wav(manifest.path_of(entry), cfg.sample_rate)
        fe = front_end(x, cfg, 1.0, vocoder_seed=0)
        mono_std = metrics.voiced_f0_std_cents(vocoder.estimate_f0(fe.monotonic, vcfg))
        mono = dsp.stft(fe.monotonic, cfg.frame).magnitude()
        base = metrics.spectral_centroid(mono.data, cfg.frame).mean()
        signs = []
        for a, sign in ((0.9, -1), (1.1, 1)):
            c = metrics.spectral_centroid(perturb.vtlp_warp(mono, a, cfg.warp_config).data,
                                          cfg.frame).mean()
            signs.append(np.sign(c - base) == sign)
        env = dsp.spectral_envelope(mono, cfg.n_c, cfg.binarize_lifter, cfg.log_floor)
        ratio = dsp.quefrency_energy_ratio(dsp.real_cepstrum(env).data, cfg.n_c).min()
        seq = FeatureSequence(np.zeros((mono.n_frames, 1)), "mel")
        rng = seed_streams(cfg.seed, entry.utterance_id)["content"]
        n_out = float(np.mean([len(random_resample(seq, rng, cfg.resample_config))
                               for _ in range(resample_draws)]))
        rows.append({"utterance_id": entry.utterance_id, "voiced_f0_std_cents": mono_std,
                     "centroid_sign_correct": float(np.mean(signs)),
                     "envelope_quefrency_ratio": float(ratio),
                     "frames": mono.n_frames, "resampled_frames_mean": n_out})
    return rows


def run_probes(cfg: Config | None = None, manifest: CorpusManifest | None = None,
               synthetic: bool = True, report_path=None, workdir=None,
               probes=SYNTHETIC_PROBES) -> ProbeReport:
    cfg = cfg or Config()
    report = ProbeReport()
    t0 = time.perf_counter()
    if synthetic:
        for probe in probes:
            kw = {"workdir": workdir} if probe is probe_determinism_and_figure else {}
            try:
                report.criteria.append(probe(cfg, **kw))
            except Exception as exc:  # a crashing probe is a failed probe
                report.criteria.append(ProbeResult(probe.__name__.removeprefix("probe_"), 0, False,
                                                   {}, {}, detail=f"{type(exc).__name__}: {exc}"))
        by_name = {c.name: c for c in report.criteria}
        if "pitch_removal" in by_name:
            report.voiced_f0_std_cents = by_name["pitch_removal"].values.get("f0_std_cents_after", np.nan)
        if "lifter" in by_name:
            report.envelope_quefrency_energy_ratio = by_name["lifter"].values.get("quefrency_ratio_min", np.nan)
        if "vtlp_direction" in by_name:
            report.centroid_shift_sign_accuracy = float(by_name["vtlp_direction"].passed)
        if "resample_contract" in by_name:
            v = by_name["resample_contract"].values
            report.resample_length_stats = {"input_length": 100, "mean_length": v.get("mean_length"),
                                            "mean_rel_dev": v.get("mean_length_rel_dev")}
    if manifest is not None:
        rows = corpus_metrics(manifest, cfg)
        report.per_utterance = rows
        if rows:
            stds = np.array([r["voiced_f0_std_cents"] for r in rows], dtype=float)
            report.voiced_f0_std_cents = float(np.nanmax(stds)) if np.isfinite(stds).any() else float("nan")
            report.centroid_shift_sign_accuracy = float(np.mean([r["centroid_sign_correct"] for r in rows]))
            report.envelope_quefrency_energy_ratio = float(min(r["envelope_quefrency_ratio"] for r in rows))
            frames = np.array([r["frames"] for r in rows], dtype=float)
            out = np.array([r["resampled_frames_mean"] for r in rows], dtype=float)
            report.resample_length_stats = {"input_frames": float(frames.sum()),
                                            "output_frames": float(out.sum()),
                                            "rel_dev": float(abs(out.sum() - frames.sum()) / frames.sum())}
            report.criteria.append(_corpus_verdict(report, cfg))
    report.total_runtime_s = time.perf_counter() - t0
    if report_path is not None:
        report.write(report_path)
    return report


def _corpus_verdict(report: ProbeReport, cfg: Config) -> ProbeResult:
    checks = {
        "voiced_f0_std_cents": report.voiced_f0_std_cents < cfg.probe_f0_std_cents,
        "centroid_shift_sign_accuracy": report.centroid_shift_sign_accuracy == 1.0,
        "envelope_quefrency_energy_ratio": report.envelope_quefrency_energy_ratio >= cfg.probe_quefrency_ratio,
        "resample_length": report.resample_length_stats["rel_dev"] <= cfg.probe_length_tolerance,
    }
    return ProbeResult("corpus", 0, all(checks.values()),
                       {"voiced_f0_std_cents": report.voiced_f0_std_cents,
                        "centroid_shift_sign_accuracy": report.centroid_shift_sign_accuracy,
                        "envelope_quefrency_energy_ratio": report.envelope_quefrency_energy_ratio,
                        "resample_rel_dev": report.resample_length_stats["rel_dev"]},
                       {"voiced_f0_std_cents": f"< {cfg.probe_f0_std_cents}",
                        "centroid_shift_sign_accuracy": "== 1",
                        "envelope_quefrency_energy_ratio": f">= {cfg.probe_quefrency_ratio}",
                        "resample_rel_dev": f"<= {cfg.probe_length_tolerance}"})


if os.environ.get("SPF_PROBE_DEBUG"):  # pragma: no cover
    import logging

    logging.basicConfig(level=logging.DEBUG)
