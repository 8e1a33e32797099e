"""Corpus-level passes: per-speaker statistics, then per-utterance encoder inputs."""
from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .. import pitch, vocoder
from ..errors import ConfigError, InsufficientData
from ..pitch import SpeakerStats, StatsAccumulator
from . import tensorio
from .audio import CorpusManifest, read_wav
from .builders import build_all
from .config import Config

log = logging.getLogger(__name__)

TENSOR_NAMES = ("S", "S_c", "S_r", "P_r", "S_p")


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", name)


def _map(fn, items, threads):
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def compute_corpus_stats(manifest: CorpusManifest, cfg: Config) -> dict:
    """Per-speaker log-F0 statistics; parallel map, reduced in manifest order."""
    vcfg = cfg.vocoder_config

    def one(entry):
        x = read_wav(manifest.path_of(entry), cfg.sample_rate)
        return pitch.accumulate(vocoder.estimate_f0(x, vcfg), domain=cfg.pitch_domain)

    partials = _map(one, manifest.entries, cfg.threads)
    per_speaker = {}
    for entry, acc in zip(manifest.entries, partials):
        per_speaker[entry.speaker_id] = per_speaker.get(entry.speaker_id, StatsAccumulator()).merge(acc)
    out = {}
    for spk in sorted(per_speaker):
        try:
            out[spk] = per_speaker[spk].finalize(spk, cfg.std_floor)
        except InsufficientData as exc:
            log.warning("%s", exc)
    return out


def save_stats(stats: dict, out_dir):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for spk, s in stats.items():
        tensorio.atomic_write(out_dir / f"{_safe(spk)}.json", (s.to_json() + "\n").encode())


def load_stats(stats_dir) -> dict:
    out = {}
    for p in sorted(Path(stats_dir).glob("*.json")):
        s = SpeakerStats.load(p)
        out[s.speaker_id] = s
    return out


def _utt_dir(out_dir: Path, utterance_id: str) -> Path:
    return out_dir / "inputs" / Path(*[_safe(p) for p in utterance_id.split("/")])


def _is_complete(d: Path, config_hash: str) -> bool:
    meta = d / "meta.json"
    if not meta.exists() or not all((d / f"{n}.spf").exists() for n in TENSOR_NAMES):
        return False
    return json.loads(meta.read_text()).get("config_hash") == config_hash


def _claim_output_dir(out_dir: Path, cfg: Config):
    run = out_dir / "run.json"
    record = {"config_hash": cfg.digest(), "seed": cfg.seed}
    if run.exists():
        prev = json.loads(run.read_text())
        if prev != record:
            raise ConfigError(
                f"{out_dir} holds outputs for config {prev.get('config_hash')} seed "
                f"{prev.get('seed')}; refusing to mix with {record['config_hash']} seed "
                f"{record['seed']} (use a fresh directory)")
    else:
        tensorio.atomic_write(run, (json.dumps(record, indent=2, sort_keys=True) + "\n").encode())


def run_corpus(manifest: CorpusManifest, cfg: Config, out_dir) -> dict:
    """Stats pass then inputs pass.  Completed utterances are skipped on re-runs.

    Returns a summary dict; ``summary["failed"]`` lists utterances that raised.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _claim_output_dir(out_dir, cfg)
    config_hash = cfg.digest()

    stats = compute_corpus_stats(manifest, cfg) if cfg.pitch_norm == "speaker" else {}
    save_stats(stats, out_dir / "stats")

    def one(entry):
        d = _utt_dir(out_dir, entry.utterance_id)
        if _is_complete(d, config_hash):
            return entry, "skipped", None
        try:
            x = read_wav(manifest.path_of(entry), cfg.sample_rate)
            inputs = build_all(x, entry.speaker_id, stats, cfg.seed, cfg, entry.utterance_id)
        except Exception as exc:
            log.error("%s failed: %s", entry.utterance_id, exc)
            return entry, "failed", f"{type(exc).__name__}: {exc}"
        shapes = {}
        for name, arr in inputs.tensors().items():
            tensorio.save(d / f"{name}.spf", arr)
            shapes[name] = list(arr.shape)
        meta = dict(inputs.provenance, shapes=shapes)
        tensorio.atomic_write(d / "meta.json", (json.dumps(meta, indent=2, sort_keys=True) + "\n").encode())
        return entry, "done", None

    results = _map(one, manifest.entries, cfg.threads)
    failed = [{"utterance_id": e.utterance_id, "error": err} for e, st, err in results if st == "failed"]

    index = []
    for entry in manifest.entries:
        d = _utt_dir(out_dir, entry.utterance_id)
        if _is_complete(d, config_hash):
            meta = json.loads((d / "meta.json").read_text())
            index.append({"utterance_id": entry.utterance_id, "speaker_id": entry.speaker_id,
                          "dir": d.relative_to(out_dir).as_posix(), "alpha": meta["alpha"],
                          "shapes": meta["shapes"]})
    tensorio.atomic_write(out_dir / "index.json",
                          (json.dumps({"config_hash": config_hash, "seed": cfg.seed,
                                       "utterances": index}, indent=2, sort_keys=True) + "\n").encode())
    return {"total": len(results),
            "written": sum(st == "done" for _, st, _ in results),
            "skipped": sum(st == "skipped" for _, st, _ in results),
            "failed": failed}
