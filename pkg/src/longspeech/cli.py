"""Command line entry point: every pipeline stage as a subcommand.

Subcommands are thin shells over the library modules. Human-readable output
goes to stdout, structured JSON logs to stderr, and machine-readable results
to the paths named by flags. Exit codes: 0 success, 1 usage or configuration
error, 2 data error, 3 backend or train-hook error.
"""

from __future__ import annotations

import argparse
import json
import logging
import shlex
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields
from pathlib import Path

from .alignment import Transcript, align_texts, corpus_wer
from .audio import load_wav, resample_linear, slice_clip, write_wav
from .backends import BackendFailure
from .config import PipelineConfig
from .errors import ConfigError, LongSpeechError, TrainHookFailure
from .inference import (
    long_hypothesis_from_json,
    long_hypothesis_to_json,
    transcribe_long,
)
from .manifest import ManifestEntry, read_manifest, write_manifest
from .segmentation import (
    STRATEGY_VAD,
    SegmentationConfig,
    even_segments,
    load_vad_marks,
    vad_segments,
)
from .selftrain import (
    ACCEPT_ID_ZERO,
    ACCEPT_WER_ZERO,
    REJECT,
    DataPool,
    pool_stats,
    pseudo_key,
    pseudo_manifest_entry,
    run_iteration,
    run_selftrain,
    screen,
    segment_algo_a,
    segment_algo_b,
    segment_wav_path,
)

try:
    from importlib.metadata import PackageNotFoundError, version
    __version__ = version("longspeech")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0+unknown"

_LOG = logging.getLogger("longspeech")


class _JsonFormatter(logging.Formatter):
    def format(self, record):
        doc = {"level": record.levelname.lower(), "event": record.getMessage()}
        doc.update(getattr(record, "fields", {}))
        return json.dumps(doc, ensure_ascii=False, default=str)


def _setup_logging():
    if not _LOG.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(_JsonFormatter())
        _LOG.addHandler(handler)
        _LOG.setLevel(logging.INFO)
        _LOG.propagate = False


def _log(event: str, **fields_):
    _LOG.info(event, extra={"fields": fields_})


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; the contract here is exit 1."""

    def error(self, message):
        raise _UsageError(message)


def _add_config_flags(p: argparse.ArgumentParser):
    """Flags mirroring PipelineConfig; unset flags leave the config alone."""
    p.add_argument("--config", metavar="PATH", help="YAML pipeline configuration")
    p.add_argument("--l-max", type=float, dest="l_max_s", metavar="SECONDS")
    p.add_argument("--sample-rate", type=int, dest="sample_rate_hz", metavar="HZ")
    p.add_argument("--strategy", choices=["even", "vad"])
    p.add_argument("--casing", choices=["AU", "FU"])
    p.add_argument("--dedup", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--keep-duplicates", action="store_true", default=None,
                   help="disable dedup so repeated mints pile up in the pool")
    p.add_argument("--pack", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--max-iterations", type=int, dest="max_iterations")
    p.add_argument("--workers", type=int)
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--state", dest="state_path", metavar="PATH")
    p.add_argument("--beam", type=int, dest="beam_size")
    p.add_argument("--prompt-depth", type=int, choices=[0, 1, 2], dest="prompt_depth")
    p.add_argument("--backend-command", metavar="CMD")
    p.add_argument("--mock-manifest", metavar="PATH")
    p.add_argument("--mock-substitution-rate", type=float, dest="mock_substitution_rate")
    p.add_argument("--mock-insertion-rate", type=float, dest="mock_insertion_rate")
    p.add_argument("--mock-deletion-rate", type=float, dest="mock_deletion_rate")
    p.add_argument("--mock-jitter", type=float, dest="mock_timestamp_jitter_s")
    p.add_argument("--mock-seed", type=int, dest="mock_seed")
    p.add_argument("--vad-command", metavar="CMD")
    p.add_argument("--train-hook", metavar="CMD")
    p.add_argument("--manual", action="store_true", default=None)
    p.add_argument("--timeout", type=float, dest="timeout_s", metavar="SECONDS")


_CONFIG_FIELDS = tuple(f.name for f in fields(PipelineConfig))


def _effective_config(args) -> PipelineConfig:
    if getattr(args, "config", None):
        cfg = PipelineConfig.from_file(args.config)
    else:
        cfg = PipelineConfig()
    overrides = {name: getattr(args, name) for name in _CONFIG_FIELDS
                 if hasattr(args, name)}
    if getattr(args, "keep_duplicates", None):
        overrides["dedup"] = False
    return cfg.override(**overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="longspeech",
                     description="Segment, transcribe, screen, and curate long speech.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("resample", help="convert a WAV to a target sample rate")
    p.add_argument("--audio", required=True)
    p.add_argument("--rate", type=int, help="target rate; defaults to sample_rate_hz")
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(handler=cmd_resample)

    p = sub.add_parser("segment", help="compute segmentation spans for one WAV")
    p.add_argument("--audio", required=True)
    p.add_argument("--marks", help="JSON speech marks to use instead of running a VAD")
    p.add_argument("--out", help="write spans JSON here instead of stdout")
    _add_config_flags(p)
    p.set_defaults(handler=cmd_segment)

    p = sub.add_parser("transcribe-long",
                       help="chunked transcription for every manifest entry")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="hypothesis JSONL")
    _add_config_flags(p)
    p.set_defaults(handler=cmd_transcribe_long)

    p = sub.add_parser("wer", help="score a hypothesis file against references")
    p.add_argument("--ref", required=True, help="reference manifest JSONL")
    p.add_argument("--hyp", required=True,
                   help="hypothesis JSONL (transcribe-long output or a manifest)")
    p.add_argument("--json", dest="json_out", help="also write results as JSON here")
    _add_config_flags(p)
    p.set_defaults(handler=cmd_wer)

    p = sub.add_parser("screen", help="categorize hypotheses for pseudo-labeling")
    p.add_argument("--ref", required=True, help="reference manifest JSONL")
    p.add_argument("--hyp", required=True, help="hypothesis JSONL")
    p.add_argument("--out", required=True, help="decisions JSONL")
    _add_config_flags(p)
    p.set_defaults(handler=cmd_screen)

    p = sub.add_parser("mint", help="cut accepted hypotheses into training segments")
    p.add_argument("--long", required=True, dest="long_manifest",
                   help="manifest of the source long utterances")
    p.add_argument("--hyp", required=True, help="hypothesis JSONL")
    p.add_argument("--decisions", required=True, help="screen output JSONL")
    p.add_argument("--manifest-out", required=True, help="minted entries JSONL")
    p.add_argument("--iteration", type=int, default=1)
    _add_config_flags(p)
    p.set_defaults(handler=cmd_mint)

    p = sub.add_parser("iterate", help="run one full screen-and-mint iteration")
    p.add_argument("--long", required=True, dest="long_manifest")
    p.add_argument("--labeled", help="initial labeled manifest")
    p.add_argument("--manifest-out", help="training manifest (default: OUTPUT_DIR/train.jsonl)")
    _add_config_flags(p)
    p.set_defaults(handler=cmd_iterate)

    p = sub.add_parser("selftrain", help="run the full iterative loop")
    p.add_argument("--long", required=True, dest="long_manifest")
    p.add_argument("--labeled", help="initial labeled manifest")
    p.add_argument("--manifest-out", help="training manifest (default: OUTPUT_DIR/train.jsonl)")
    p.add_argument("--reports", help="reports JSONL (default: OUTPUT_DIR/reports.jsonl)")
    _add_config_flags(p)
    p.set_defaults(handler=cmd_selftrain)

    p = sub.add_parser("pool", help="inspect the training pool")
    pool_sub = p.add_subparsers(dest="pool_command", required=True, metavar="ACTION")
    ps = pool_sub.add_parser("stats", help="summarize a training manifest")
    ps.add_argument("--manifest", required=True)
    _add_config_flags(ps)
    ps.set_defaults(handler=cmd_pool_stats)

    return parser


def cmd_resample(args, cfg: PipelineConfig) -> int:
    clip = load_wav(Path(args.audio))
    target = args.rate if args.rate else cfg.sample_rate_hz
    out = resample_linear(clip, target)
    write_wav(out, Path(args.out))
    _log("resampled", audio=args.audio, out=args.out,
         source_hz=clip.sample_rate_hz, target_hz=target, n_samples=len(out.samples))
    return 0


def cmd_segment(args, cfg: PipelineConfig) -> int:
    clip = load_wav(Path(args.audio))
    seg_cfg = SegmentationConfig(l_max_s=cfg.l_max_s, sample_rate_hz=clip.sample_rate_hz)
    if cfg.strategy == STRATEGY_VAD:
        marks = load_vad_marks(args.marks) if args.marks else cfg.build_vad().detect(clip)
        result = vad_segments(clip, marks, seg_cfg)
    else:
        result = even_segments(clip, seg_cfg)
    sr = clip.sample_rate_hz
    doc = {
        "audio": str(args.audio),
        "sample_rate_hz": sr,
        "n_samples": len(clip.samples),
        "strategy_used": result.strategy_used,
        "spans": [[s.start_sample, s.end_sample] for s in result.spans],
        "spans_s": [[s.start_sample / sr, s.end_sample / sr] for s in result.spans],
    }
    rendered = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(rendered + "\n", encoding="utf-8")
    else:
        print(rendered)
    _log("segmented", audio=args.audio, n_spans=len(result.spans),
         strategy_used=result.strategy_used)
    return 0


def cmd_transcribe_long(args, cfg: PipelineConfig) -> int:
    entries = read_manifest(args.manifest)
    backend = cfg.build_backend(fallback_entries=entries)
    vad_source = cfg.build_vad() if cfg.strategy == STRATEGY_VAD else None
    decode = cfg.decode_options()

    def work(entry: ManifestEntry):
        try:
            clip = load_wav(Path(entry.audio))
            seg_cfg = SegmentationConfig(l_max_s=cfg.l_max_s,
                                         sample_rate_hz=clip.sample_rate_hz)
            hyp = transcribe_long(clip, backend, cfg.strategy, seg_cfg, decode,
                                  utterance_id=entry.id, vad_source=vad_source)
            return long_hypothesis_to_json(hyp, clip.sample_rate_hz), None
        except BackendFailure as exc:
            return {"id": entry.id, "error": str(exc)}, "backend"
        except (LongSpeechError, FileNotFoundError, OSError) as exc:
            return {"id": entry.id, "error": f"{type(exc).__name__}: {exc}"}, "data"

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(work, entries))
    else:
        results = [work(e) for e in entries]

    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as f:
        for doc, _ in results:
            f.write(json.dumps(doc, ensure_ascii=False) + "\n")

    n_backend = sum(1 for _, kind in results if kind == "backend")
    n_data = sum(1 for _, kind in results if kind == "data")
    _log("transcribed", manifest=args.manifest, out=args.out,
         n_utterances=len(entries), n_backend_errors=n_backend, n_data_errors=n_data)
    return 3 if n_backend else 0


def _read_hypothesis_texts(path) -> dict[str, str]:
    """id -> text from either hypothesis JSONL or a plain manifest."""
    texts: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            doc = json.loads(line)
            if "error" in doc and "full_text" not in doc:
                continue
            texts[str(doc["id"])] = str(doc.get("full_text", doc.get("text", "")))
    return texts


def cmd_wer(args, cfg: PipelineConfig) -> int:
    refs = read_manifest(args.ref)
    hyp_texts = _read_hypothesis_texts(args.hyp)
    rows = []
    missing = []
    for entry in refs:
        if entry.id not in hyp_texts:
            missing.append(entry.id)
            continue
        rows.append((entry.id, align_texts(entry.text, hyp_texts[entry.id])))
    overall = corpus_wer([r for _, r in rows])

    width = max([len("utterance")] + [len(i) for i, _ in rows])
    print(f"{'utterance':<{width}}  {'n_ref':>5}  {'sub':>4}  {'del':>4}  "
          f"{'ins':>4}  {'wer':>7}")
    for utt_id, r in rows:
        print(f"{utt_id:<{width}}  {r.n_ref:>5}  {r.substitutions:>4}  "
              f"{r.deletions:>4}  {r.insertions:>4}  {r.wer:>7.4f}")
    print(f"{'corpus':<{width}}  {sum(r.n_ref for _, r in rows):>5}  "
          f"{sum(r.substitutions for _, r in rows):>4}  "
          f"{sum(r.deletions for _, r in rows):>4}  "
          f"{sum(r.insertions for _, r in rows):>4}  {overall:>7.4f}")

    if args.json_out:
        doc = {
            "corpus_wer": overall,
            "n_scored": len(rows),
            "missing": missing,
            "utterances": [
                {"id": utt_id, "n_ref": r.n_ref, "n_hyp": r.n_hyp,
                 "correct": r.correct, "substitutions": r.substitutions,
                 "deletions": r.deletions, "insertions": r.insertions, "wer": r.wer}
                for utt_id, r in rows
            ],
        }
        Path(args.json_out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.json_out).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    _log("wer", corpus_wer=overall, n_scored=len(rows), n_missing=len(missing))
    return 0


def _read_hypotheses(path) -> list:
    hyps = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            doc = json.loads(line)
            if "error" in doc and "full_text" not in doc:
                continue
            hyps.append(long_hypothesis_from_json(doc))
    return hyps


def cmd_screen(args, cfg: PipelineConfig) -> int:
    refs = {e.id: e for e in read_manifest(args.ref)}
    counts = {ACCEPT_WER_ZERO: 0, ACCEPT_ID_ZERO: 0, REJECT: 0}
    skipped = 0
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as f:
        for hyp, _sr in _read_hypotheses(args.hyp):
            ref_entry = refs.get(hyp.utterance_id)
            if ref_entry is None:
                skipped += 1
                continue
            decision = screen(Transcript.from_text(ref_entry.text), hyp)
            a = decision.alignment
            counts[decision.category] = counts.get(decision.category, 0) + 1
            f.write(json.dumps({
                "id": hyp.utterance_id,
                "category": decision.category,
                "wer": a.wer,
                "n_ref": a.n_ref,
                "n_hyp": a.n_hyp,
                "correct": a.correct,
                "substitutions": a.substitutions,
                "deletions": a.deletions,
                "insertions": a.insertions,
            }, ensure_ascii=False) + "\n")
    _log("screened", out=args.out, skipped_without_reference=skipped, **counts)
    return 0


def cmd_mint(args, cfg: PipelineConfig) -> int:
    long_map = {e.id: e for e in read_manifest(args.long_manifest)}
    hyp_map = {h.utterance_id: (h, sr) for h, sr in _read_hypotheses(args.hyp)}
    state_path = Path(cfg.state_path) if cfg.state_path else None
    if state_path is not None and state_path.exists():
        pool = DataPool.load_state(state_path)
    else:
        pool = DataPool(dedup=cfg.dedup)
    output_dir = Path(cfg.output_dir)

    n_minted = 0
    with open(args.decisions, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            dec = json.loads(line)
            if dec["category"] not in (ACCEPT_WER_ZERO, ACCEPT_ID_ZERO):
                continue
            utt_id = str(dec["id"])
            hyp, sr = hyp_map[utt_id]
            source = long_map[utt_id]
            seg_cfg = SegmentationConfig(l_max_s=cfg.l_max_s, sample_rate_hz=sr)
            if dec["category"] == ACCEPT_WER_ZERO:
                segments = segment_algo_a(hyp, seg_cfg, casing=cfg.casing,
                                          pack=cfg.pack, iteration=args.iteration)
            else:
                segments = segment_algo_b(hyp, Transcript.from_text(source.text),
                                          seg_cfg, casing=cfg.casing,
                                          pack=cfg.pack, iteration=args.iteration)
            clip = load_wav(Path(source.audio))
            for seg in segments:
                wav_path = segment_wav_path(output_dir, seg)
                write_wav(slice_clip(clip, seg.span), wav_path)
                entry = pseudo_manifest_entry(seg, wav_path, sr, speaker=source.speaker)
                if pool.add_pseudo(entry, pseudo_key(seg)):
                    n_minted += 1

    write_manifest(pool.labeled_entries, args.manifest_out)
    if state_path is not None:
        pool.save_state(state_path)
    _log("minted", manifest_out=args.manifest_out, n_minted=n_minted,
         duplicate_keys=pool.duplicate_key_count)
    return 0


def _load_pool(cfg: PipelineConfig, long_entries, labeled_path, manifest_out: Path,
               state_path: Path) -> DataPool:
    labeled = read_manifest(labeled_path) if labeled_path else []
    if state_path.exists():
        base = read_manifest(manifest_out) if manifest_out.exists() else labeled
        pool = DataPool.load_state(state_path, labeled_entries=base)
    else:
        pool = DataPool(labeled, [e.id for e in long_entries], dedup=cfg.dedup)
    pool.register(e.id for e in long_entries)
    return pool


def cmd_iterate(args, cfg: PipelineConfig) -> int:
    long_entries = read_manifest(args.long_manifest)
    output_dir = Path(cfg.output_dir)
    manifest_out = Path(args.manifest_out or output_dir / "train.jsonl")
    state_path = Path(cfg.state_path or output_dir / "state.json")
    pool = _load_pool(cfg, long_entries, args.labeled, manifest_out, state_path)
    backend = cfg.build_backend(fallback_entries=long_entries)
    vad_source = cfg.build_vad() if cfg.strategy == STRATEGY_VAD else None

    report = run_iteration(pool, long_entries, backend, cfg.loop_config(),
                           cfg.seg_config(), cfg.decode_options(),
                           vad_source=vad_source)
    pool.iteration = report.iteration
    write_manifest(pool.labeled_entries, manifest_out)
    pool.save_state(state_path)
    print(json.dumps(report.to_json(), indent=2))
    _log("iterated", iteration=report.iteration, manifest_out=str(manifest_out),
         state=str(state_path), n_segments_added=report.n_segments_added)
    return 0


def cmd_selftrain(args, cfg: PipelineConfig) -> int:
    long_entries = read_manifest(args.long_manifest)
    output_dir = Path(cfg.output_dir)
    manifest_out = Path(args.manifest_out or output_dir / "train.jsonl")
    state_path = Path(cfg.state_path or output_dir / "state.json")
    reports_path = Path(args.reports or output_dir / "reports.jsonl")
    pool = _load_pool(cfg, long_entries, args.labeled, manifest_out, state_path)
    vad_source = cfg.build_vad() if cfg.strategy == STRATEGY_VAD else None

    config_path = getattr(args, "config", None)

    def backend_provider(iteration: int):
        # re-read the config file each round so a train hook that rewrites
        # it can hand the loop a fresh teacher
        live = PipelineConfig.from_file(config_path) if config_path else cfg
        return live.build_backend(fallback_entries=long_entries)

    train_hook = shlex.split(cfg.train_hook) if cfg.train_hook else None
    reports = run_selftrain(pool, long_entries, backend_provider, cfg.loop_config(),
                            cfg.seg_config(), cfg.decode_options(),
                            vad_source=vad_source, train_hook=train_hook,
                            manual=cfg.manual, state_path=state_path,
                            manifest_path=manifest_out)

    reports_path.parent.mkdir(parents=True, exist_ok=True)
    with open(reports_path, "a", encoding="utf-8") as f:
        for report in reports:
            f.write(json.dumps(report.to_json()) + "\n")
    for report in reports:
        print(json.dumps(report.to_json()))
    _log("selftrain_done", iterations_run=len(reports), manifest_out=str(manifest_out),
         state=str(state_path), pool_size=len(pool.labeled_entries))
    return 0


def cmd_pool_stats(args, cfg: PipelineConfig) -> int:
    stats = pool_stats(read_manifest(args.manifest))
    print(json.dumps(stats, indent=2))
    return 0


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    try:
        cfg = _effective_config(args)
        _log("config", command=args.command, **cfg.to_dict())
        return args.handler(args, cfg)
    except (_UsageError, ConfigError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (BackendFailure, TrainHookFailure) as exc:
        _log("backend_error", error=str(exc))
        return 3
    except (LongSpeechError, FileNotFoundError, OSError, ValueError, KeyError,
            json.JSONDecodeError) as exc:
        _log("data_error", error=f"{type(exc).__name__}: {exc}")
        return 2


def entrypoint():
    sys.exit(main())
