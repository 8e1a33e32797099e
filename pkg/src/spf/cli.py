"""``spf`` command-line entry point."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import SpfError

log = logging.getLogger("spf")


def _config(args):
    from .pipeline.config import load_config

    return load_config(args.config)


def _dump(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


def cmd_ingest(args, cfg):
    from .pipeline.audio import ingest

    manifest = ingest(args.root, cfg.digest())
    if args.out:
        manifest.save(args.out)
    print("utterance_id\tspeaker_id\tduration_s\tsample_rate")
    for e in manifest.entries:
        print(f"{e.utterance_id}\t{e.speaker_id}\t{e.duration_s}\t{e.sample_rate}")
    for s in manifest.skipped:
        log.warning("skipped %s: %s", s["file_path"], s["reason"])
    if not args.out:
        log.info("no --out given; manifest not saved")
    return 0


def cmd_stats(args, cfg):
    from .pipeline.audio import CorpusManifest
    from .pipeline.corpus import compute_corpus_stats, save_stats

    stats = compute_corpus_stats(CorpusManifest.load(args.manifest), cfg)
    save_stats(stats, args.out)
    print("speaker_id\tlog_f0_mean\tlog_f0_std\tframe_count")
    for s in stats.values():
        print(f"{s.speaker_id}\t{s.log_f0_mean:.6f}\t{s.log_f0_std:.6f}\t{s.frame_count}")
    return 0


def cmd_inputs(args, cfg):
    from .pipeline.audio import CorpusManifest
    from .pipeline.corpus import run_corpus

    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    summary = run_corpus(CorpusManifest.load(args.manifest), cfg, args.out)
    _dump(summary)
    return 1 if summary["failed"] else 0


def cmd_monotonize(args, cfg):
    from .pipeline.audio import read_wav, write_wav
    from .pipeline.builders import front_end

    x = read_wav(args.wav, cfg.sample_rate)
    fe = front_end(x, cfg, 1.0, vocoder_seed=cfg.seed)
    write_wav(args.out, fe.monotonic, cfg.sample_rate)
    return 0


def cmd_perturb(args, cfg):
    from .perturb import WarpFactor, perturb_waveform
    from .pipeline.audio import read_wav, write_wav

    x = read_wav(args.wav, cfg.sample_rate)
    iters = cfg.phase_iters if args.phase_iters is None else args.phase_iters
    y = perturb_waveform(x, WarpFactor(args.alpha), cfg.frame, cfg.warp_config, iters)
    write_wav(args.out, y, cfg.sample_rate)
    return 0


def cmd_plot_fig2(args, cfg):
    from .pipeline.audio import read_wav
    from .pipeline.plotting import plot_figure2

    x = read_wav(args.wav, cfg.sample_rate)
    res = plot_figure2(x, cfg, args.out, args.alpha, seed=cfg.seed)
    print("metric\tvalue")
    for k, v in sorted(res["metrics"].items()):
        print(f"{k}\t{v}")
    return 0


def cmd_probes(args, cfg):
    from .pipeline.audio import CorpusManifest
    from .pipeline.probes import run_probes

    manifest = CorpusManifest.load(args.manifest) if args.manifest else None
    synthetic = args.synthetic or manifest is None
    report = run_probes(cfg, manifest, synthetic, args.report)
    for line in report.lines():
        print(line)
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spf", description="Disentangling front end: features, perturbation, probes.")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="scan a <speaker>/<*.wav> tree into a manifest")
    s.add_argument("root")
    s.add_argument("--out", help="manifest JSON path")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("stats", help="per-speaker log-F0 statistics")
    s.add_argument("manifest")
    s.add_argument("--out", default="stats", help="directory for <speaker>.json files")
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("inputs", help="write encoder input tensors for every utterance")
    s.add_argument("manifest")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, help="master seed (overrides config and SPF_SEED)")
    s.set_defaults(func=cmd_inputs)

    s = sub.add_parser("monotonize", help="flatten the F0 contour of a WAV")
    s.add_argument("wav")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_monotonize)

    s = sub.add_parser("perturb", help="apply VTLP with a fixed warp factor")
    s.add_argument("wav")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--phase-iters", type=int,
                   help="Griffin-Lim refinements after the original-phase ISTFT (default: config phase_iters)")
    s.set_defaults(func=cmd_perturb)

    s = sub.add_parser("plot-fig2", help="four-panel spectrogram figure")
    s.add_argument("wav")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--alpha", type=float, help="warp factor (default: fig_alpha from config)")
    s.set_defaults(func=cmd_plot_fig2)

    s = sub.add_parser("probes", help="run the property probe battery")
    s.add_argument("--synthetic", action="store_true", help="run the synthetic suite (default without --manifest)")
    s.add_argument("--manifest", help="also compute per-utterance metrics on this corpus")
    s.add_argument("--report", required=True, help="JSON report path (.tsv and .png written alongside)")
    s.set_defaults(func=cmd_probes)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        return args.func(args, cfg)
    except (SpfError, OSError) as exc:
        print(f"spf: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
