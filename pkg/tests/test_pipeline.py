import hashlib
import json
import shutil
import struct
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.io import wavfile

from spf import dsp, metrics, synth, vocoder
from spf.cli import main
from spf.errors import ConfigError, InvalidInput, StatsNotFound
from spf.pipeline import tensorio
from spf.pipeline.audio import CorpusManifest, ingest, read_wav, write_wav
from spf.pipeline.builders import (build_all, build_content_input, build_pitch_input,
                                   build_rhythm_input, derive_seed, front_end, mel, seed_streams)
from spf.pipeline.config import Config, load_config, parse_config
from spf.pipeline.corpus import compute_corpus_stats, load_stats, run_corpus, save_stats
from spf.pipeline.plotting import plot_figure2
from spf.pipeline.probes import _tree_identical
from spf.pitch import SpeakerStats

FS = 16000


class TestConfig:
    def test_defaults(self, cfg):
        assert (cfg.sample_rate, cfg.frame_length, cfg.hop_length, cfg.fft_size) == (16000, 1024, 256, 1024)
        assert (cfg.n_mels, cfg.fmin, cfg.fmax, cfg.n_c, cfg.n_bins) == (80, 90.0, 7600.0, 3, 256)
        assert cfg.resample_config.seg_len_range == (19, 32)
        assert cfg.vocoder_config.band_edges == (1000.0, 2000.0, 4000.0)

    def test_parse(self):
        text = "# comment\n\nn_c = 5\nrate_min=0.6\naperiodicity_bands = 500, 3000\nbinarize_lifter = true\n"
        c = parse_config(text)
        assert c.n_c == 5 and c.rate_min == 0.6 and c.binarize_lifter is True
        assert c.vocoder_config.band_edges == (500.0, 3000.0)

    def test_text_round_trip(self, cfg):
        changed = cfg.replace(n_c=4, pitch_domain="linear", seed=9)
        assert parse_config(changed.to_text()) == changed

    @pytest.mark.parametrize("text", ["bogus = 1", "n_c = three", "no equals sign", "n_c = 0",
                                      "pitch_norm = corpus", "fmax = 9000", "rate_min = 2\nrate_max = 1"])
    def test_errors(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)

    def test_env_overrides(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("seed = 3\nthreads = 1\n")
        c = load_config(p, env={"SPF_SEED": "11", "SPF_THREADS": "4"})
        assert c.seed == 11 and c.threads == 4
        assert load_config(p, env={}).seed == 3

    def test_digest(self, cfg):
        assert cfg.digest() == Config().digest()
        assert cfg.replace(threads=8).digest() == cfg.digest()
        assert cfg.replace(seed=1).digest() != cfg.digest()
        assert cfg.replace(n_c=4).digest() != cfg.digest()


class TestTensorIO:
    def test_golden_bytes(self):
        a = np.array([[1.0, -2.0, 0.5]], dtype=np.float32)
        expected = (b"SPF0" + (1).to_bytes(2, "little") + (2).to_bytes(2, "little")
                    + (1).to_bytes(8, "little") + (3).to_bytes(8, "little")
                    + struct.pack("<3f", 1.0, -2.0, 0.5))
        assert tensorio.encode(a) == expected

    @pytest.mark.parametrize("shape", [(0,), (7,), (3, 4), (2, 3, 5)])
    def test_round_trip(self, shape, tmp_path):
        a = np.random.default_rng(0).standard_normal(shape).astype(np.float32)
        tensorio.save(tmp_path / "a.spf", a)
        np.testing.assert_array_equal(tensorio.load(tmp_path / "a.spf"), a)

    def test_bad_magic(self):
        with pytest.raises(InvalidInput):
            tensorio.decode(b"NOPE" + bytes(20))

    def test_truncated(self):
        buf = tensorio.encode(np.ones((2, 2)))
        with pytest.raises(InvalidInput):
            tensorio.decode(buf[:-1])

    def test_bad_version(self):
        buf = bytearray(tensorio.encode(np.ones(2)))
        buf[4:6] = (9).to_bytes(2, "little")
        with pytest.raises(InvalidInput):
            tensorio.decode(bytes(buf))

    def test_atomic_write_leaves_no_temp(self, tmp_path):
        tensorio.atomic_write(tmp_path / "d" / "x.bin", b"abc")
        assert [p.name for p in (tmp_path / "d").iterdir()] == ["x.bin"]


class TestAudio:
    def test_round_trip(self, tmp_path):
        x = synth.sine(440.0, 0.25, FS, amp=0.5)
        write_wav(tmp_path / "a.wav", x, FS)
        y = read_wav(tmp_path / "a.wav", FS)
        assert np.max(np.abs(x - y)) <= 1 / 32768

    def test_resamples_other_rates(self, tmp_path):
        sr = 22050
        t = np.arange(sr) / sr
        wavfile.write(tmp_path / "b.wav", sr, (0.3 * 32767 * np.sin(2 * np.pi * 1000 * t)).astype(np.int16))
        y = read_wav(tmp_path / "b.wav", FS)
        assert y.size == FS
        mag = np.abs(dsp.stft(y).data).mean(axis=0)
        assert np.argmax(mag) == 64

    def test_ingest(self, manifest, corpus_root):
        assert [e.utterance_id for e in manifest.entries] == ["spk_a/utt00", "spk_a/utt01",
                                                               "spk_b/utt00", "spk_b/utt01"]
        assert manifest.speakers() == ["spk_a", "spk_b"]
        assert all(not Path(e.file_path).is_absolute() for e in manifest.entries)
        manifest.validate()

    def test_ingest_skips_bad_files(self, tmp_path):
        root = tmp_path / "c"
        write_wav(root / "s1" / "ok.wav", synth.sine(200.0, 0.2), FS)
        wavfile.write(root / "s1" / "stereo.wav", FS, np.zeros((100, 2), np.int16))
        wavfile.write(root / "s1" / "float.wav", FS, np.zeros(100, np.float32))
        (root / "s1" / "junk.wav").write_bytes(b"not a wav")
        (root / "s1" / "notes.txt").write_text("ignored")
        m = ingest(root)
        assert [e.utterance_id for e in m.entries] == ["s1/ok"]
        assert sorted(s["file_path"] for s in m.skipped) == ["s1/float.wav", "s1/junk.wav", "s1/stereo.wav"]
        assert all(s["reason"] for s in m.skipped)

    def test_bad_root(self, tmp_path):
        with pytest.raises(OSError):
            ingest(tmp_path / "missing")

    def test_manifest_round_trip(self, manifest, tmp_path):
        manifest.save(tmp_path / "m.json")
        assert CorpusManifest.load(tmp_path / "m.json") == manifest

    def test_duplicate_ids(self, manifest):
        with pytest.raises(InvalidInput):
            CorpusManifest(manifest.corpus_root, "", manifest.entries + manifest.entries[:1])


@pytest.fixture(scope="module")
def vib():
    return synth.utterance(synth.vibrato_f0(220.0, 50.0, 5.5, 2.0, FS), 2.0, FS, noise=0.05)


@pytest.fixture(scope="module")
def vib_stats(vib):
    c = vocoder.estimate_f0(vib)
    from spf.pitch import compute_speaker_stats
    return {"spk": compute_speaker_stats([c], "spk")}


class TestBuilders:
    def test_derive_seed_oracle(self):
        d = hashlib.sha256(b"7:spk/utt").digest()
        assert derive_seed(7, "spk/utt") == int.from_bytes(d[:8], "little")
        assert derive_seed(7, "a") != derive_seed(7, "b") != derive_seed(8, "b")

    def test_streams_are_independent(self):
        s = seed_streams(0, "u")
        draws = {k: g.random() for k, g in s.items()}
        assert len(set(draws.values())) == len(draws)
        assert seed_streams(0, "u")["rhythm"].random() == draws["rhythm"]

    def test_widths(self, vib, vib_stats, cfg):
        out = build_all(vib, "spk", vib_stats, 0, cfg, "spk/u")
        t = out.tensors()
        assert t["S"].shape[1] == t["S_c"].shape[1] == t["S_r"].shape[1] == 80
        assert t["P_r"].shape[1] == 257 and t["S_p"].shape[1] == 80 + 257
        assert set(out.provenance) >= {"seed", "alpha", "n_c", "config_hash"}
        assert out.provenance["seed"] == derive_seed(0, "spk/u")

    def test_full_resolution_rhythm(self, vib, vib_stats, cfg):
        out = build_all(vib, "spk", vib_stats, 0, cfg.replace(rhythm_full_resolution=True), "spk/u")
        assert out.S_r.data.shape[1] == cfg.frame.n_bins

    def test_deterministic(self, vib, vib_stats, cfg):
        a = build_all(vib, "spk", vib_stats, 5, cfg, "spk/u").tensors()
        b = build_all(vib, "spk", vib_stats, 5, cfg, "spk/u").tensors()
        assert all(a[k].tobytes() == b[k].tobytes() for k in a)

    def test_degenerate_content_is_monotonic_mel(self, vib, cfg):
        unit = cfg.replace(rate_min=1.0, rate_max=1.0)
        fe = front_end(vib, unit, 1.0, vocoder_seed=0)
        s_c = build_content_input(vib, np.random.default_rng(0), unit, fe)
        expected = mel(dsp.stft(fe.monotonic, unit.frame).magnitude(), unit).data
        np.testing.assert_array_equal(s_c.data, expected)

    def test_content_spectrogram_has_flat_pitch(self, vib, cfg):
        alpha = 0.95
        fe = front_end(vib, cfg, alpha, vocoder_seed=0)
        c = dsp.real_cepstrum(fe.perturbed).data
        voiced = vocoder.smooth_pitch(fe.analysis.pitch)
        q = FS / (voiced.f0[voiced.voiced][0] * alpha)  # expected period after warping
        lo, hi = int(q * 2 ** -0.4), int(q * 2 ** 0.4)
        rows = np.nonzero(voiced.voiced)[0]
        rows = rows[(rows > 2) & (rows < c.shape[0] - 3)]
        k = np.argmax(c[rows, lo:hi], axis=1) + lo
        a, b, d = c[rows, k - 1], c[rows, k], c[rows, k + 1]
        f = FS / (k + 0.5 * (a - d) / (a - 2 * b + d))
        assert metrics.voiced_f0_std_cents(vocoder.PitchContour(f, f > 0, 256)) < 10

    def test_rhythm_low_quefrency(self, vib, cfg):
        fe = front_end(vib, cfg, 0.97, vocoder_seed=0)
        env = dsp.spectral_envelope(fe.perturbed, cfg.n_c)
        assert dsp.quefrency_energy_ratio(dsp.real_cepstrum(env).data, 3).min() >= 0.99

    def test_rhythm_silence_padding_is_local(self, cfg):
        x = synth.vowel(150.0, 0.5, FS)
        pad = 8 * cfg.hop_length
        xp = np.concatenate([np.zeros(pad), x, np.zeros(pad)])
        full = cfg.replace(rhythm_full_resolution=True, rate_min=1.0, rate_max=1.0)
        fe = front_end(xp, full, 1.0, vocoder_seed=0)
        s_r = build_rhythm_input(xp, np.random.default_rng(0), full, fe).data
        edges = np.concatenate([s_r[:3], s_r[-3:]])
        assert edges.max() < 1e-6 * s_r[12:-12].max(axis=1).min()

    def test_missing_stats(self, vib, cfg):
        with pytest.raises(StatsNotFound):
            build_pitch_input(vib, None, np.random.default_rng(0), cfg)
        with pytest.raises(StatsNotFound):
            build_all(vib, "nobody", {}, 0, cfg, "nobody/u")

    def test_utterance_mode_needs_no_stats(self, vib, cfg):
        out = build_all(vib, "nobody", None, 0, cfg.replace(pitch_norm="utterance"), "nobody/u")
        assert out.P_r.data.shape[1] == 257

    def test_error_carries_utterance_context(self, cfg):
        with pytest.raises(InvalidInput) as info:
            build_all(np.array([np.nan, 1.0]), "spk", {"spk": SpeakerStats("spk", 5, 0.1, 3)}, 0, cfg, "spk/bad")
        assert any("spk/bad" in n for n in getattr(info.value, "__notes__", []))


class TestCorpus:
    def test_stats_round_trip(self, manifest, cfg, tmp_path):
        stats = compute_corpus_stats(manifest, cfg)
        assert set(stats) == {"spk_a", "spk_b"}
        assert stats["spk_a"].log_f0_mean < stats["spk_b"].log_f0_mean
        save_stats(stats, tmp_path)
        assert load_stats(tmp_path) == stats

    def test_parallel_stats_match_serial(self, manifest, cfg):
        assert compute_corpus_stats(manifest, cfg) == compute_corpus_stats(manifest, cfg.replace(threads=3))

    def test_run_is_deterministic_and_resumable(self, manifest, cfg, tmp_path):
        s1 = run_corpus(manifest, cfg, tmp_path / "a")
        assert s1 == {"total": 4, "written": 4, "skipped": 0, "failed": []}
        run_corpus(manifest, cfg.replace(threads=2), tmp_path / "b")
        assert _tree_identical(tmp_path / "a", tmp_path / "b")
        before = {p: p.stat().st_mtime_ns for p in (tmp_path / "a").rglob("*.spf")}
        s2 = run_corpus(manifest, cfg, tmp_path / "a")
        assert s2["skipped"] == 4 and s2["written"] == 0
        assert before == {p: p.stat().st_mtime_ns for p in (tmp_path / "a").rglob("*.spf")}

    def test_partial_output_is_redone(self, manifest, cfg, tmp_path):
        run_corpus(manifest, cfg, tmp_path)
        victim = tmp_path / "inputs" / "spk_a" / "utt00" / "S_r.spf"
        victim.unlink()
        s = run_corpus(manifest, cfg, tmp_path)
        assert s["written"] == 1 and victim.exists()

    def test_outputs_match_declared_widths(self, manifest, cfg, tmp_path):
        run_corpus(manifest, cfg, tmp_path)
        index = json.loads((tmp_path / "index.json").read_text())
        assert len(index["utterances"]) == 4
        widths = {"S": 80, "S_c": 80, "S_r": 80, "P_r": 257, "S_p": 337}
        for u in index["utterances"]:
            d = tmp_path / u["dir"]
            meta = json.loads((d / "meta.json").read_text())
            assert meta["config_hash"] == cfg.digest()
            for name, w in widths.items():
                a = tensorio.load(d / f"{name}.spf")
                assert a.shape[1] == w and list(a.shape) == meta["shapes"][name]

    def test_refuses_other_config(self, manifest, cfg, tmp_path):
        run_corpus(manifest, cfg, tmp_path)
        with pytest.raises(ConfigError):
            run_corpus(manifest, cfg.replace(n_c=4), tmp_path)
        with pytest.raises(ConfigError):
            run_corpus(manifest, cfg.replace(seed=1), tmp_path)

    def test_adding_an_utterance_leaves_others_unchanged(self, corpus_root, cfg, tmp_path):
        root = tmp_path / "corpus"
        shutil.copytree(corpus_root, root)
        run_corpus(ingest(root), cfg, tmp_path / "a")
        write_wav(root / "spk_b" / "utt99.wav", synth.utterance(180.0, 1.0, FS, seed=99), FS)
        run_corpus(ingest(root), cfg, tmp_path / "b")
        for name in ("S_c", "S_r", "P_r", "S_p"):
            a = (tmp_path / "a" / "inputs" / "spk_a" / "utt00" / f"{name}.spf").read_bytes()
            b = (tmp_path / "b" / "inputs" / "spk_a" / "utt00" / f"{name}.spf").read_bytes()
            assert a == b

    def test_failures_are_reported(self, corpus_root, cfg, tmp_path):
        root = tmp_path / "corpus"
        shutil.copytree(corpus_root, root)
        write_wav(root / "mute" / "silent.wav", np.zeros(FS // 2), FS)
        s = run_corpus(ingest(root), cfg, tmp_path / "out")
        assert s["written"] == 4
        assert [f["utterance_id"] for f in s["failed"]] == ["mute/silent"]


@pytest.mark.slow
def test_throughput_is_linear(tmp_path, cfg):
    def build(minutes, utt_s=10.0):
        root = tmp_path / f"c{minutes}"
        for i in range(int(minutes * 60 / utt_s)):
            f0 = synth.vibrato_f0(110 + 40 * (i % 3), 40, 5, utt_s, FS)
            x = synth.utterance(f0, utt_s, FS, syllables=20, noise=0.05, seed=i)
            write_wav(root / f"spk{i % 3}" / f"u{i:03d}.wav", x, FS)
        return ingest(root)

    times = {}
    for minutes in (1, 10):
        m = build(minutes)
        t0 = time.perf_counter()
        s = run_corpus(m, cfg, tmp_path / f"o{minutes}")
        times[minutes] = time.perf_counter() - t0
        assert not s["failed"]
    print(f"throughput: 1 min {times[1]:.1f} s, 10 min {times[10]:.1f} s, ratio {times[10] / times[1]:.2f}")
    assert times[10] / times[1] < 15


def test_plot_figure2(vib, cfg, tmp_path):
    res = plot_figure2(vib, cfg, tmp_path)
    names = sorted(Path(p).name for p in res["paths"])
    assert names == ["fig2.png", "fig2_a.png", "fig2_b.png", "fig2_c.png", "fig2_d.png"]
    assert all(Path(p).read_bytes()[:8] == b"\x89PNG\r\n\x1a\n" for p in res["paths"])
    m = json.loads((tmp_path / "fig2_metrics.json").read_text())
    assert m["alpha"] == 0.95
    assert m["f0_std_cents_b"] < 10 < m["f0_std_cents_a"]
    assert m["centroid_hz_c"] < m["centroid_hz_b"]
    assert m["envelope_quefrency_ratio_min"] >= 0.99


class TestCli:
    def test_full_flow(self, corpus_root, tmp_path, capsys, monkeypatch):
        monkeypatch.delenv("SPF_SEED", raising=False)
        m = tmp_path / "m.json"
        assert main(["ingest", str(corpus_root), "--out", str(m)]) == 0
        assert "spk_a/utt00\tspk_a" in capsys.readouterr().out
        assert main(["stats", str(m), "--out", str(tmp_path / "stats")]) == 0
        assert sorted(p.name for p in (tmp_path / "stats").iterdir()) == ["spk_a.json", "spk_b.json"]
        assert main(["inputs", str(m), "--out", str(tmp_path / "o"), "--seed", "3"]) == 0
        assert json.loads((tmp_path / "o" / "run.json").read_text())["seed"] == 3
        assert main(["inputs", str(m), "--out", str(tmp_path / "o"), "--seed", "4"]) == 2

    def test_inputs_exit_nonzero_on_failure(self, corpus_root, tmp_path):
        root = tmp_path / "c"
        shutil.copytree(corpus_root, root)
        write_wav(root / "mute" / "silent.wav", np.zeros(FS // 2), FS)
        m = tmp_path / "m.json"
        ingest(root).save(m)
        assert main(["inputs", str(m), "--out", str(tmp_path / "o")]) == 1

    def test_audio_commands(self, corpus_root, tmp_path, capsys):
        wav = corpus_root / "spk_a" / "utt00.wav"
        assert main(["monotonize", str(wav), "--out", str(tmp_path / "m.wav")]) == 0
        assert main(["perturb", str(wav), "--alpha", "0.9", "--out", str(tmp_path / "p.wav")]) == 0
        assert main(["perturb", str(wav), "--alpha", "1.3", "--out", str(tmp_path / "q.wav")]) == 2
        for name in ("m.wav", "p.wav"):
            assert read_wav(tmp_path / name).size == read_wav(wav).size
        assert main(["plot-fig2", str(wav), "--out", str(tmp_path / "fig")]) == 0
        assert "centroid_hz_c\t" in capsys.readouterr().out
        assert (tmp_path / "fig" / "fig2.png").exists()

    def test_config_errors(self, tmp_path, corpus_root, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("unknown_key = 1\n")
        assert main(["--config", str(bad), "ingest", str(corpus_root)]) == 2
        assert "unknown key" in capsys.readouterr().err

    def test_config_file_applies(self, tmp_path, corpus_root):
        c = tmp_path / "c.cfg"
        c.write_text("seed = 42\n")
        m = tmp_path / "m.json"
        main(["ingest", str(corpus_root), "--out", str(m)])
        assert main(["--config", str(c), "inputs", str(m), "--out", str(tmp_path / "o")]) == 0
        assert json.loads((tmp_path / "o" / "run.json").read_text())["seed"] == 42

    def test_probes_report(self, tmp_path, manifest, capsys):
        m = tmp_path / "m.json"
        manifest.save(m)
        rc = main(["probes", "--manifest", str(m), "--report", str(tmp_path / "r" / "report.json")])
        out = capsys.readouterr().out
        assert "corpus" in out
        report = json.loads((tmp_path / "r" / "report.json").read_text())
        assert len(report["per_utterance"]) == 4
        assert (tmp_path / "r" / "report.tsv").read_text().startswith("criterion\tname")
        assert (tmp_path / "r" / "report.png").exists()
        assert rc == (0 if report["passed"] else 1)
