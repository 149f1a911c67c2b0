"""Command-line entry point wiring the library into reproducible commands.

Outputs are written atomically (temp file, then rename).  Structured reports
carry a ``meta`` block (command, seed, timestamp) next to a deterministic
``data`` block, so identical inputs and seed produce byte-identical data.
Errors are emitted as one JSON object on stderr; exit codes: 0 success,
1 computation error, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from datetime import datetime, timezone

from . import __version__
from .annotation import AnnotationError, AnnotationService, AnnotationStore
from .classifier import (
    ClassifierError,
    LinearBagOfWordsClassifier,
    TrainingConfig,
    load_model,
    load_predictions,
    save_model,
    save_predictions,
)
from .corpus import (
    CorpusError,
    LabelSet,
    build_samples,
    canonicalize_sample,
    corpus_stats,
    ingest_document,
    load_corpus,
    load_split,
    save_corpus,
    save_split,
    split_dataset,
)
from .extents import ExtentConfig, extent_batch, load_extents, save_extents
from .metrics import (
    MetricsError,
    adversarial_eval,
    agreement_report,
    class_histograms,
    confidence_breakdown,
    emit_report,
    f1_scores,
    histogram_csv,
    load_adversarial_groups,
)
from .server import make_server
from .syntax import stage_assignment

DATA_DIR_ENV = "EXTENTLAB_DATA_DIR"

EXIT_OK = 0
EXIT_COMPUTE = 1
EXIT_USAGE = 2


def _resolve(path: str) -> str:
    root = os.environ.get(DATA_DIR_ENV)
    if root and not os.path.isabs(path):
        return os.path.join(root, path)
    return path


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_save(path: str, save) -> None:
    """Run a save(path)-style writer against a temp file, then rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    os.close(fd)
    try:
        save(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_report(path: str, data: dict, command: str, seed=None, format: str = "structured") -> None:
    if format == "tabular":
        raise MetricsError("tabular emission goes through emit_report with a report object")
    payload = {
        "meta": {
            "command": command,
            "seed": seed,
            "created_at": datetime.now(timezone.utc).isoformat(),
            "version": __version__,
        },
        "data": data,
    }
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _emit_error(code: str, message: str) -> None:
    print(json.dumps({"code": code, "message": message}), file=sys.stderr)


def _require_file(path: str) -> str:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    return path


def _load_samples(corpus_path: str):
    """Corpus file -> canonicalized samples; cross-sentence mentions counted."""
    documents = load_corpus(_require_file(corpus_path))
    samples = []
    skipped = 0
    for doc in documents:
        result = build_samples(doc)
        skipped += result.skipped_cross_sentence
        samples.extend(canonicalize_sample(s) for s in result.samples)
    return documents, samples, skipped


def _label_set(samples) -> LabelSet:
    labels = sorted({s.label for s in samples if s.label is not None})
    if not labels:
        raise CorpusError("no labeled samples in corpus")
    return LabelSet(tuple(labels))


def _split_samples(samples, split, name: str):
    return [s for s in samples if split.assignment.get(s.sample_id) == name]


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_ingest(args) -> int:
    documents = []
    with open(_require_file(args.input), "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {line_number}: {exc.msg}") from exc
            documents.append(ingest_document(raw))
    _atomic_save(args.out, lambda tmp: save_corpus(documents, tmp))
    n_samples = sum(len(build_samples(d).samples) for d in documents)
    print(json.dumps({"documents": len(documents), "samples": n_samples, "out": args.out}))
    return EXIT_OK


def cmd_split(args) -> int:
    _, samples, _ = _load_samples(args.corpus)
    base = load_split(_require_file(args.base)).assignment if args.base else None
    ratio = tuple(float(r) for r in args.ratio.split(","))
    assignment = split_dataset(samples, base_split=base, ratio=ratio, seed=args.seed)
    _atomic_save(args.out, lambda tmp: save_split(assignment, tmp))
    print(json.dumps({"counts": dict(assignment.counts()), "out": args.out}))
    return EXIT_OK


def cmd_stats(args) -> int:
    _, samples, skipped = _load_samples(args.corpus)
    report = corpus_stats(samples)
    data = report.to_dict()
    data["skipped_cross_sentence"] = skipped
    _write_report(args.out, data, "stats", seed=None)
    if args.csv:
        table = {genre: sub["labels"] for genre, sub in data["per_genre"].items()}
        _atomic_write(args.csv, histogram_csv(table))
    print(json.dumps({"n_samples": report.n_samples, "out": args.out}))
    return EXIT_OK


def cmd_train(args) -> int:
    _, samples, _ = _load_samples(args.corpus)
    split = load_split(_require_file(args.split))
    labeled = [s for s in samples if s.label is not None]
    label_set = _label_set(labeled)
    train = _split_samples(labeled, split, "train")
    dev = _split_samples(labeled, split, "dev")
    config = TrainingConfig()
    if args.config:
        with open(_require_file(args.config), "r", encoding="utf-8") as fh:
            config = TrainingConfig.from_dict(json.load(fh))
    if args.seed is not None:
        config.seed = args.seed
    model = LinearBagOfWordsClassifier(label_set, decider_id=args.decider_id)
    report = model.fit(train, dev, config)
    save_model(model, args.model)
    _write_report(
        os.path.join(args.model, "training_report.json"),
        {"report": report.to_dict(), "config": config.to_dict(), "n_train": len(train), "n_dev": len(dev)},
        "train",
        seed=config.seed,
    )
    print(json.dumps({"best_dev_f1": report.best_dev_f1, "best_epoch": report.best_epoch, "model": args.model}))
    return EXIT_OK


def cmd_eval(args) -> int:
    model = load_model(_require_file(args.model))
    _, samples, _ = _load_samples(args.corpus)
    split = load_split(_require_file(args.split))
    subset = [s for s in _split_samples(samples, split, args.split_name) if s.label is not None]
    if not subset:
        raise MetricsError(f"no labeled samples in split {args.split_name!r}")
    predictions = {s.sample_id: model.predict_subset(s, s.all_tokens) for s in subset}
    gold = [s.label for s in subset]
    pred = [predictions[s.sample_id].predicted for s in subset]
    report = f1_scores(gold, pred, model.label_set)
    if args.format == "tabular":
        _atomic_write(args.out, emit_report(report, "tabular"))
    else:
        _write_report(args.out, report.to_dict(), "eval", seed=args.seed)
    if args.predictions_out:
        save_predictions(predictions, args.predictions_out)
    print(json.dumps({"micro_f1": report.micro_f1, "macro_f1": report.macro_f1, "n": len(subset)}))
    return EXIT_OK


def cmd_extents(args) -> int:
    model = load_model(_require_file(args.model))
    _, samples, _ = _load_samples(args.corpus)
    if args.split:
        split = load_split(_require_file(args.split))
        samples = _split_samples(samples, split, args.split_name)
    config = ExtentConfig(theta=args.theta, beam_width=args.beam_width, max_steps=args.max_steps)
    pa_map = {s.sample_id: stage_assignment(s) for s in samples}
    results = extent_batch(model, samples, pa_map, config, mode=args.mode)
    _atomic_save(args.out, lambda tmp: save_extents(results, tmp))
    failures = sum(1 for r in results if hasattr(r, "error"))
    print(json.dumps({"extents": len(results) - failures, "failures": failures, "out": args.out}))
    return EXIT_OK


def cmd_agree(args) -> int:
    a = load_extents(_require_file(args.extents_a))
    b = load_extents(_require_file(args.extents_b))
    report = agreement_report(a, b)
    if args.format == "tabular":
        _atomic_write(args.out, emit_report(report, "tabular"))
    else:
        _write_report(args.out, report.to_dict(), "agree", seed=None)
    print(json.dumps({"label_agreement": report.label_agreement, "out": args.out}))
    return EXIT_OK


def cmd_breakdown(args) -> int:
    extent_list = load_extents(_require_file(args.extents))
    predictions = load_predictions(_require_file(args.predictions))
    _, samples, _ = _load_samples(args.corpus)
    by_id = {s.sample_id: s for s in samples}
    ids = [e.sample_id for e in extent_list]
    missing = [sid for sid in ids if sid not in by_id]
    if missing:
        raise MetricsError(f"extents reference unknown samples: {missing[:5]}")
    unpredicted = [sid for sid in ids if sid not in predictions]
    if unpredicted:
        raise MetricsError(
            f"predictions missing for {len(unpredicted)} extent sample(s), e.g. {unpredicted[:3]}; "
            "run eval with --predictions-out over the same samples the extents cover"
        )
    table = confidence_breakdown(
        {e.sample_id: e for e in extent_list},
        {sid: predictions[sid] for sid in ids},
        {sid: by_id[sid].label for sid in ids},
        {sid: len(by_id[sid].sentence) for sid in ids},
    )
    if args.format == "tabular":
        _atomic_write(args.out, emit_report(table, "tabular"))
    else:
        _write_report(args.out, table.to_dict(), "breakdown", seed=None)
    print(json.dumps({"rows": len(table.rows), "out": args.out}))
    return EXIT_OK


def cmd_histograms(args) -> int:
    extent_list = load_extents(_require_file(args.extents))
    _, samples, _ = _load_samples(args.corpus)
    table = class_histograms(extent_list, {s.sample_id: s for s in samples})
    _write_report(args.out, table, "histograms", seed=None)
    if args.csv:
        _atomic_write(args.csv, histogram_csv(table))
    print(json.dumps({"groups": sorted(table), "out": args.out}))
    return EXIT_OK


def cmd_adversarial(args) -> int:
    model = load_model(_require_file(args.model))
    groups = load_adversarial_groups(_require_file(args.groups))
    report = adversarial_eval(model, groups)
    if args.format == "tabular":
        _atomic_write(args.out, emit_report(report, "tabular"))
    else:
        _write_report(args.out, report.to_dict(), "adversarial", seed=None)
    print(
        json.dumps(
            {"groups": len(report.groups), "accuracy_mean": report.accuracy_mean, "rejected": len(report.rejected)}
        )
    )
    return EXIT_OK


def cmd_serve(args) -> int:
    model = load_model(_require_file(args.model))
    _, samples, _ = _load_samples(args.corpus)
    store = AnnotationStore(args.store)
    service = AnnotationService(samples, store, model, k=args.k)
    host, _, port = args.listen.partition(":")
    server = make_server(service, host or "127.0.0.1", int(port or 0))
    server.verbose = args.verbose
    address = f"http://{server.server_address[0]}:{server.server_address[1]}"
    print(json.dumps({"listening": address, "samples": len(service.samples)}), flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _data_path(value: str) -> str:
    return _resolve(value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="extentlab", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="align raw standoff records into a corpus file")
    p.add_argument("--input", required=True, type=_data_path)
    p.add_argument("--out", required=True, type=_data_path)
    p.set_defaults(run=cmd_ingest)

    p = sub.add_parser("split", help="assign samples to train/dev/test")
    p.add_argument("--corpus", required=True, type=_data_path)
    p.add_argument("--base", type=_data_path, default=None)
    p.add_argument("--ratio", default="0.8,0.1,0.1")
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--out", required=True, type=_data_path)
    p.set_defaults(run=cmd_split)

    p = sub.add_parser("stats", help="label and syntactic-class histograms")
    p.add_argument("--corpus", required=True, type=_data_path)
    p.add_argument("--out", required=True, type=_data_path)
    p.add_argument("--csv", type=_data_path, default=None)
    p.set_defaults(run=cmd_stats)

    p = sub.add_parser("train", help="train the reference classifier")
    p.add_argument("--corpus", required=True, type=_data_path)
    p.add_argument("--split", required=True, type=_data_path)
    p.add_argument("--model", required=True, type=_data_path)
    p.add_argument("--config", type=_data_path, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--decider-id", default=None)
    p.set_defaults(run=cmd_train)

    p = sub.add_parser("eval", help="F1 report for a model on a split")
    p.add_argument("--model", required=True, type=_data_path)
    p.add_argument("--corpus", required=True, type=_data_path)
    p.add_argument("--split", required=True, type=_data_path)
    p.add_argument("--split-name", default="test", choices=("train", "dev", "test"))
    p.add_argument("--out", required=True, type=_data_path)
    p.add_argument("--predictions-out", type=_data_path, default=None)
    p.add_argument("--format", default="structured", choices=("structured", "tabular"))
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(run=cmd_eval)

    p = sub.add_parser("extents", help="compute semantic extents for a model")
    p.add_argument("--model", required=True, type=_data_path)
    p.add_argument("--corpus", required=True, type=_data_path)
    p.add_argument("--split", type=_data_path, default=None)
    p.add_argument("--split-name", default="test", choices=("train", "dev", "test"))
    p.add_argument("--mode", default="expanding", choices=("expanding", "reductive"))
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--beam-width", type=int, default=3)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--out", required=True, type=_data_path)
    p.set_defaults(run=cmd_extents)

    p = sub.add_parser("agree", help="agreement between two extent files")
    p.add_argument("--extents-a", required=True, type=_data_path)
    p.add_argument("--extents-b", required=True, type=_data_path)
    p.add_argument("--out", required=True, type=_data_path)
    p.add_argument("--format", default="structured", choices=("structured", "tabular"))
    p.set_defaults(run=cmd_agree)

    p = sub.add_parser("breakdown", help="confidence/F1 per extent category")
    p.add_argument("--extents", required=True, type=_data_path)
    p.add_argument("--predictions", required=True, type=_data_path)
    p.add_argument("--corpus", required=True, type=_data_path)
    p.add_argument("--out", required=True, type=_data_path)
    p.add_argument("--format", default="structured", choices=("structured", "tabular"))
    p.set_defaults(run=cmd_breakdown)

    p = sub.add_parser("histograms", help="semantic-class histograms per sample group")
    p.add_argument("--extents", required=True, type=_data_path)
    p.add_argument("--corpus", required=True, type=_data_path)
    p.add_argument("--out", required=True, type=_data_path)
    p.add_argument("--csv", type=_data_path, default=None)
    p.set_defaults(run=cmd_histograms)

    p = sub.add_parser("adversarial", help="evaluate a model on adversarial groups")
    p.add_argument("--model", required=True, type=_data_path)
    p.add_argument("--groups", required=True, type=_data_path)
    p.add_argument("--out", required=True, type=_data_path)
    p.add_argument("--format", default="structured", choices=("structured", "tabular"))
    p.set_defaults(run=cmd_adversarial)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("--corpus", required=True, type=_data_path)
    p.add_argument("--model", required=True, type=_data_path)
    p.add_argument("--store", required=True, type=_data_path)
    p.add_argument("--listen", default="127.0.0.1:8765")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(run=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.run(args)
    except FileNotFoundError as exc:
        _emit_error("missing_input", f"input path not found: {exc}")
        return EXIT_USAGE
    except (CorpusError, ClassifierError, MetricsError, AnnotationError, ValueError) as exc:
        _emit_error("computation_error", str(exc))
        return EXIT_COMPUTE
    except OSError as exc:
        _emit_error("io_error", str(exc))
        return EXIT_USAGE
    except Exception as exc:  # CLI boundary: surface anything else as an error object
        _emit_error("internal_error", f"{type(exc).__name__}: {exc}")
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
