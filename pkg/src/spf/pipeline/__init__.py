"""Corpus ingestion, encoder-input assembly, persistence, plotting and probes."""
from .builders import EncoderInputs, build_all, derive_seed, seed_streams
from .config import Config, load_config, parse_config

__all__ = ["Config", "EncoderInputs", "build_all", "derive_seed", "load_config", "parse_config",
           "seed_streams"]
