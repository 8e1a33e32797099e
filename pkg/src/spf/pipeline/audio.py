"""WAV intake and corpus manifests."""
from __future__ import annotations

import json
import logging
import warnings
from dataclasses import asdict, dataclass, field
from math import gcd
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from ..errors import InvalidInput
from .tensorio import atomic_write

log = logging.getLogger(__name__)


class UnsupportedAudio(InvalidInput):
    pass


def read_wav(path, target_sr: int = 16000) -> np.ndarray:
    """Read a mono 16-bit PCM WAV as float64 in [-1, 1), resampled to ``target_sr``."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", wavfile.WavFileWarning)
        try:
            sr, data = wavfile.read(path)
        except ValueError as exc:
            raise UnsupportedAudio(f"{path}: {exc}") from exc
    if data.dtype != np.int16:
        raise UnsupportedAudio(f"{path}: expected 16-bit PCM, got {data.dtype}")
    if data.ndim != 1:
        raise UnsupportedAudio(f"{path}: expected mono, got {data.shape[1]} channels")
    if data.size == 0:
        raise UnsupportedAudio(f"{path}: no samples")
    x = data.astype(np.float64) / 32768.0
    if sr != target_sr:
        g = gcd(int(sr), int(target_sr))
        x = resample_poly(x, target_sr // g, sr // g)
    return x


def write_wav(path, x, sr: int = 16000):
    pcm = np.clip(np.round(np.asarray(x) * 32768.0), -32768, 32767).astype(np.int16)
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp")
    path.parent.mkdir(parents=True, exist_ok=True)
    wavfile.write(tmp, sr, pcm)
    tmp.replace(path)


def probe_wav(path):
    """(sample_rate, n_samples) for a conforming file; raises UnsupportedAudio otherwise."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", wavfile.WavFileWarning)
        try:
            sr, data = wavfile.read(path, mmap=True)
        except (ValueError, OSError) as exc:
            raise UnsupportedAudio(str(exc)) from exc
    if data.dtype != np.int16:
        raise UnsupportedAudio(f"expected 16-bit PCM, got {data.dtype}")
    if data.ndim != 1:
        raise UnsupportedAudio(f"expected mono, got {data.shape[1]} channels")
    if data.shape[0] == 0:
        raise UnsupportedAudio("no samples")
    return int(sr), int(data.shape[0])


@dataclass(frozen=True)
class ManifestEntry:
    utterance_id: str
    speaker_id: str
    file_path: str  # relative to the corpus root
    duration_s: float
    sample_rate: int


@dataclass
class CorpusManifest:
    corpus_root: str
    config_hash: str
    entries: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    def __post_init__(self):
        ids = [e.utterance_id for e in self.entries]
        if len(ids) != len(set(ids)):
            raise InvalidInput("duplicate utterance ids in manifest")

    def path_of(self, entry: ManifestEntry) -> Path:
        return Path(self.corpus_root) / entry.file_path

    def speakers(self):
        return sorted({e.speaker_id for e in self.entries})

    def to_dict(self):
        return {"corpus_root": self.corpus_root, "config_hash": self.config_hash,
                "entries": [asdict(e) for e in self.entries], "skipped": self.skipped}

    def save(self, path):
        atomic_write(path, (json.dumps(self.to_dict(), indent=2) + "\n").encode())

    @classmethod
    def load(cls, path) -> "CorpusManifest":
        d = json.loads(Path(path).read_text())
        return cls(d["corpus_root"], d.get("config_hash", ""),
                   [ManifestEntry(**e) for e in d["entries"]], d.get("skipped", []))

    def validate(self):
        """Raise if any listed file is missing or no longer readable."""
        for e in self.entries:
            probe_wav(self.path_of(e))


def ingest(corpus_root, config_hash: str = "") -> CorpusManifest:
    """Scan ``<root>/<speaker>/*.wav`` into a manifest; bad files are skipped with a reason."""
    root = Path(corpus_root)
    if not root.is_dir():
        raise OSError(f"corpus root {root} is not a readable directory")
    entries, skipped = [], []
    for spk_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for wav in sorted(p for p in spk_dir.rglob("*") if p.suffix.lower() == ".wav"):
            rel = wav.relative_to(root).as_posix()
            try:
                sr, n = probe_wav(wav)
            except UnsupportedAudio as exc:
                log.warning("skipping %s: %s", rel, exc)
                skipped.append({"file_path": rel, "reason": str(exc)})
                continue
            stem = wav.relative_to(spk_dir).with_suffix("").as_posix()
            entries.append(ManifestEntry(f"{spk_dir.name}/{stem}", spk_dir.name, rel,
                                         round(n / sr, 6), sr))
    return CorpusManifest(str(root.resolve()), config_hash, entries, skipped)
