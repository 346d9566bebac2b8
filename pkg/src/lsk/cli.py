"""Command-line orchestration for all pipeline stages.

Subcommands: window, diarize, finalize, normalize, score-wer, score-der,
simulate.  Configuration lives in one JSON file (unknown keys rejected at
every level); command-line flags override file values, and the LSK_SEED
environment variable overrides the configured seed.  Every output file is
written atomically and accompanied by a ``<output>.manifest.json`` naming
the config hash and input digests.

Exit codes: 0 success, 1 validation failure, 2 I/O or usage failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .audio_vad import VadConfig, energy_vad, load_wav
from .clustering import (
    DbscanConfig,
    SpectralConfig,
    cosine_affinity,
    dbscan_cluster,
    labels_to_diarization,
    plda_affinity,
    plda_fit,
    spectral_cluster,
)
from .errors import ParseError, ValidationError
from .interchange import (
    AudioMeta,
    Diarization,
    WindowTranscript,
    atomic_write_text,
    read_embeddings_json,
    read_labeled_vectors_json,
    read_rttm,
    read_segments_json,
    read_transcripts_json,
    write_embeddings_json,
    write_labeled_vectors_json,
    write_rttm,
    write_segments_json,
    write_transcripts_json,
)
from .metrics import DerConfig, der, wer
from .resegment import HmmConfig, viterbi_resegment
from .simulator import preset, simulate
from .textnorm import NormConfig, normalize, tokenize_words
from .windowing import WindowingConfig, build_windows

SEED_ENV_VAR = "LSK_SEED"


@dataclass(frozen=True)
class Paths:
    out_dir: str | None = None


@dataclass(frozen=True)
class PipelineConfig:
    windowing: WindowingConfig = WindowingConfig()
    vad: VadConfig = VadConfig()
    spectral: SpectralConfig = SpectralConfig()
    dbscan: DbscanConfig = DbscanConfig()
    hmm: HmmConfig = HmmConfig()
    der: DerConfig = DerConfig()
    norm: NormConfig = NormConfig()
    paths: Paths = Paths()


_CONFIG_SECTIONS = {
    "windowing": WindowingConfig,
    "vad": VadConfig,
    "spectral": SpectralConfig,
    "dbscan": DbscanConfig,
    "hmm": HmmConfig,
    "der": DerConfig,
    "norm": NormConfig,
    "paths": Paths,
}


def _build_section(cls, data: dict, where: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ValidationError(f"config section {where!r}: unknown keys {unknown}")
    kwargs = dict(data)
    if cls is NormConfig and "zero_width_set" in kwargs:
        kwargs["zero_width_set"] = frozenset(int(cp) for cp in kwargs["zero_width_set"])
    return cls(**kwargs)


def load_pipeline_config(path: str | os.PathLike | None) -> PipelineConfig:
    """Load the pipeline config JSON; missing file sections fall to defaults."""
    if path is None:
        return PipelineConfig()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: config must be a JSON object")
    unknown = sorted(set(data) - set(_CONFIG_SECTIONS))
    if unknown:
        raise ValidationError(f"{path}: unknown config keys {unknown}")
    kwargs = {}
    for key, cls in _CONFIG_SECTIONS.items():
        section = data.get(key, {})
        if not isinstance(section, dict):
            raise ValidationError(f"{path}: config section {key!r} must be an object")
        kwargs[key] = _build_section(cls, section, key)
    return PipelineConfig(**kwargs)


def _jsonable(value):
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: _jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, frozenset):
        return sorted(value)
    if isinstance(value, tuple):
        return list(value)
    return value


def config_hash(cfg: PipelineConfig) -> str:
    canonical = json.dumps(_jsonable(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _digest(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def write_manifest(output: Path, cfg: PipelineConfig, inputs: list[Path],
                   timings: dict[str, float], outputs: list[Path]) -> None:
    payload = {
        "tool_version": __version__,
        "config_hash": config_hash(cfg),
        "inputs": {str(p): _digest(p) for p in inputs},
        "timings_s": {k: round(v, 6) for k, v in timings.items()},
        "outputs": [str(p) for p in outputs],
    }
    atomic_write_text(
        Path(str(output) + ".manifest.json"),
        json.dumps(payload, ensure_ascii=False, indent=2) + "\n",
    )


def _resolve_seed(flag_value: int | None, config_value: int) -> int:
    if flag_value is not None:
        return flag_value
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ValidationError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from exc
    return config_value


def _out_dir(args, cfg: PipelineConfig) -> Path:
    if getattr(args, "out_dir", None):
        return Path(args.out_dir)
    if cfg.paths.out_dir:
        return Path(cfg.paths.out_dir)
    return Path(".")


def _run_parallel(fn, items: list, jobs: int) -> None:
    if jobs <= 1 or len(items) <= 1:
        for item in items:
            fn(item)
        return
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        for future in [pool.submit(fn, item) for item in items]:
            future.result()


def _safe_audio_id(stem: str) -> str:
    cleaned = "".join("_" if c.isspace() else c for c in stem)
    return cleaned or "audio"


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_window(args) -> int:
    cfg = load_pipeline_config(args.config)
    out_dir = _out_dir(args, cfg)
    inputs = [Path(p) for p in args.inputs]
    if args.out and len(inputs) > 1:
        raise ValidationError("--out is only valid with a single input; use --out-dir")

    def process(path: Path) -> None:
        timings: dict[str, float] = {}
        t0 = time.perf_counter()
        if path.suffix.lower() == ".wav":
            waveform = load_wav(path, _safe_audio_id(path.stem))
            audio_id = waveform.audio_id
            duration = waveform.duration
            regions = energy_vad(waveform, cfg.vad)
            timings["vad"] = time.perf_counter() - t0
        else:
            meta, regions = read_segments_json(path)
            audio_id = meta.audio_id
            duration = meta.duration
            timings["read"] = time.perf_counter() - t0
        t1 = time.perf_counter()
        windows = build_windows(regions, duration, cfg.windowing)
        timings["windowing"] = time.perf_counter() - t1
        out = Path(args.out) if args.out else out_dir / f"{path.stem}.windows.json"
        out.parent.mkdir(parents=True, exist_ok=True)
        write_transcripts_json(audio_id, [WindowTranscript(w, "") for w in windows], out)
        write_manifest(out, cfg, [path], timings, [out])

    _run_parallel(process, inputs, args.jobs)
    return 0


def cmd_diarize(args) -> int:
    cfg = load_pipeline_config(args.config)
    out_dir = _out_dir(args, cfg)
    inputs = [Path(p) for p in args.embeddings]
    if args.out and len(inputs) > 1:
        raise ValidationError("--out is only valid with a single input; use --out-dir")
    if args.method == "plda-spectral" and not args.plda_train:
        print("error: method 'plda-spectral' requires --plda-train", file=sys.stderr)
        return 2

    seed = _resolve_seed(args.seed, cfg.spectral.seed)
    spectral_cfg = dataclasses.replace(cfg.spectral, seed=seed)
    plda_model = None
    if args.method == "plda-spectral":
        plda_model = plda_fit(read_labeled_vectors_json(args.plda_train))

    def process(path: Path) -> None:
        timings: dict[str, float] = {}
        t0 = time.perf_counter()
        emb = read_embeddings_json(path)
        timings["read"] = time.perf_counter() - t0
        t1 = time.perf_counter()
        if len(emb) == 0:
            diarization = Diarization(audio_id=emb.audio_id, turns=())
        else:
            if args.method == "spectral":
                labels, _ = spectral_cluster(cosine_affinity(emb), spectral_cfg)
            elif args.method == "dbscan":
                labels = dbscan_cluster(emb, cfg.dbscan)
            else:
                labels, _ = spectral_cluster(plda_affinity(emb, plda_model), spectral_cfg)
            timings["cluster"] = time.perf_counter() - t1
            if args.refine == "vbx-lite":
                t2 = time.perf_counter()
                labels = viterbi_resegment(emb, labels, cfg.hmm)
                timings["refine"] = time.perf_counter() - t2
            diarization = labels_to_diarization(emb, labels)
        out = Path(args.out) if args.out else out_dir / f"{path.stem}.rttm"
        out.parent.mkdir(parents=True, exist_ok=True)
        write_rttm(diarization, out)
        inputs_used = [path] + ([Path(args.plda_train)] if args.plda_train else [])
        write_manifest(out, cfg, inputs_used, timings, [out])

    _run_parallel(process, inputs, args.jobs)
    return 0


def cmd_finalize(args) -> int:
    cfg = load_pipeline_config(args.config)
    t0 = time.perf_counter()
    audio_id, windows = read_transcripts_json(args.transcripts)
    ordered = sorted(windows, key=lambda wt: (wt.window.core_start, wt.window.core_end))
    text = normalize(" ".join(wt.text for wt in ordered), cfg.norm)
    timings = {"finalize": time.perf_counter() - t0}
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        atomic_write_text(out, text + "\n")
        write_manifest(out, cfg, [Path(args.transcripts)], timings, [out])
    else:
        print(text)
    return 0


def cmd_normalize(args) -> int:
    cfg = load_pipeline_config(args.config)
    print(normalize(sys.stdin.read(), cfg.norm))
    return 0


def cmd_score_wer(args) -> int:
    cfg = load_pipeline_config(args.config)
    ref_text = Path(args.ref).read_text(encoding="utf-8")
    hyp_text = Path(args.hyp).read_text(encoding="utf-8")
    report = wer(
        tokenize_words(normalize(ref_text, cfg.norm)),
        tokenize_words(normalize(hyp_text, cfg.norm)),
    )
    print(json.dumps({
        "wer": None if report.undefined else report.wer,
        "substitutions": report.substitutions,
        "deletions": report.deletions,
        "insertions": report.insertions,
        "ref_words": report.ref_words,
        "undefined": report.undefined,
    }, ensure_ascii=False))
    return 0


def cmd_score_der(args) -> int:
    cfg = load_pipeline_config(args.config)
    der_cfg = DerConfig(
        collar_s=cfg.der.collar_s if args.collar is None else args.collar,
        score_overlap=cfg.der.score_overlap and not args.no_overlap,
    )
    report = der(read_rttm(args.ref), read_rttm(args.hyp), der_cfg)
    print(json.dumps({
        "der": report.der,
        "missed": report.missed,
        "false_alarm": report.false_alarm,
        "confusion": report.confusion,
        "total_ref_speech": report.total_ref_speech,
        "collar_s": report.collar_s,
        "score_overlap": report.score_overlap,
    }, ensure_ascii=False))
    return 0


def cmd_simulate(args) -> int:
    cfg = load_pipeline_config(args.config)
    seed = _resolve_seed(args.seed, 0)
    sim_cfg = preset(args.preset, seed)
    t0 = time.perf_counter()
    ref, emb, regions = simulate(sim_cfg)
    timings = {"simulate": time.perf_counter() - t0}

    out_dir = _out_dir(args, cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    base = out_dir / ref.audio_id
    meta = AudioMeta(audio_id=ref.audio_id, sample_rate=16000,
                     duration=sim_cfg.duration_s)
    segments_path = Path(f"{base}.segments.json")
    embeddings_path = Path(f"{base}.embeddings.json")
    rttm_path = Path(f"{base}.ref.rttm")
    labeled_path = Path(f"{base}.labeled.json")

    write_segments_json(meta, regions, segments_path)
    write_embeddings_json(emb, embeddings_path)
    write_rttm(ref, rttm_path)
    labeled = [(entry.vector, turn.speaker) for entry, turn in zip(emb.entries, ref.turns)]
    write_labeled_vectors_json(labeled, labeled_path)

    outputs = [segments_path, embeddings_path, rttm_path, labeled_path]
    write_manifest(segments_path, cfg, [], timings, outputs)
    print(json.dumps({"audio_id": ref.audio_id, "outputs": [str(p) for p in outputs]}))
    return 0


# ---------------------------------------------------------------------------
# Parser / entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lsk",
        description="Long-form multi-speaker speech toolkit",
    )
    parser.add_argument("--version", action="version", version=f"lsk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, jobs=False):
        p.add_argument("--config", help="pipeline config JSON", default=None)
        if jobs:
            p.add_argument("--jobs", type=int, default=1,
                           help="max recordings processed in parallel")

    p = sub.add_parser("window", help="build padded decoding windows from WAV or Segments-JSON")
    p.add_argument("inputs", nargs="+", help="WAV or Segments-JSON files")
    p.add_argument("--out", help="output Transcripts-JSON (single input only)")
    p.add_argument("--out-dir", help="output directory for multiple inputs")
    add_common(p, jobs=True)
    p.set_defaults(func=cmd_window)

    p = sub.add_parser("diarize", help="cluster speaker embeddings into an RTTM")
    p.add_argument("--embeddings", nargs="+", required=True, help="Embeddings-JSON files")
    p.add_argument("--method", choices=("spectral", "dbscan", "plda-spectral"),
                   default="spectral")
    p.add_argument("--plda-train", help="labeled vectors JSON for PLDA fitting")
    p.add_argument("--refine", choices=("none", "vbx-lite"), default="none")
    p.add_argument("--out", help="output RTTM (single input only)")
    p.add_argument("--out-dir", help="output directory for multiple inputs")
    p.add_argument("--seed", type=int, default=None)
    add_common(p, jobs=True)
    p.set_defaults(func=cmd_diarize)

    p = sub.add_parser("finalize", help="concatenate + normalize a filled Transcripts-JSON")
    p.add_argument("transcripts", help="filled Transcripts-JSON")
    p.add_argument("--out", help="write the transcript here instead of stdout")
    add_common(p)
    p.set_defaults(func=cmd_finalize)

    p = sub.add_parser("normalize", help="normalize text from stdin to stdout")
    add_common(p)
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("score-wer", help="word error rate of hyp text vs ref text")
    p.add_argument("ref")
    p.add_argument("hyp")
    add_common(p)
    p.set_defaults(func=cmd_score_wer)

    p = sub.add_parser("score-der", help="diarization error rate of hyp RTTM vs ref RTTM")
    p.add_argument("ref")
    p.add_argument("hyp")
    p.add_argument("--collar", type=float, default=None)
    p.add_argument("--no-overlap", action="store_true",
                   help="exclude reference overlap regions from scoring")
    add_common(p)
    p.set_defaults(func=cmd_score_der)

    p = sub.add_parser("simulate", help="generate a synthetic conversation")
    p.add_argument("--preset", choices=("easy", "hard"), default="easy")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", required=True)
    add_common(p)
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
