"""Command-line entry point for the pipeline.

Commands: synth, pretrain, train, loop, eval, compare, predict. Every
command resolves its configuration the same way (built-in defaults, then
--config file, then flags), echoes the resolved configuration into the
output directory, and exits with a code that identifies the failure class:

    0  success
    2  configuration error (bad flag, bad config file, bad field value)
    3  data error (missing or malformed input files)
    4  degenerate training state
    5  checkpoint format error

The sealed truth file written by ``synth`` (.truth.jsonl) is read by
nothing in this module except the ``compare`` command's scoring step;
training code never sees it.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import runconfig
from .corpus import (
    Document,
    LabelSet,
    Vocabulary,
    load_jsonl,
    load_labels,
    load_vocabulary,
    save_vocabulary,
    split,
    synth_corpus,
    tokenize,
    write_jsonl,
    write_labels,
)
from .encoder import load_model, save_model
from .errors import (
    CheckpointFormatError,
    ConfigError,
    DataError,
    DegenerateBatchError,
    DegenerateStateError,
    ParameterError,
)
from .metrics import confusion, render_json, render_text, report
from .plots import save_compare_chart, save_confusion_heatmap, save_loop_curves
from .runconfig import RunConfig
from .selftrain import (
    LoopState,
    make_initial_state,
    predict_batch,
    pretrain_encoder,
    run_loop,
    train_al_only,
    train_crl_only,
    train_head,
)

TRUTH_FILENAME = ".truth.jsonl"
_COMPARE_ROW_ORDER = ("CRL+", "CRL", "Active Learning")
_METRIC_KEYS = ("accuracy", "precision", "recall", "f_measure")


# plumbing -------------------------------------------------------------------


def _progress(message: str) -> None:
    print(message, file=sys.stderr, flush=True)


def _prepare_out_dir(cfg: RunConfig, force: bool) -> Path:
    if not cfg.out_dir:
        raise ConfigError("out_dir is required (set --out-dir or out_dir in the config)")
    out = Path(cfg.out_dir)
    if out.exists():
        if not out.is_dir():
            raise ConfigError(f"out_dir exists and is not a directory: {out}")
        if any(out.iterdir()) and not force:
            raise ConfigError(
                f"out_dir {out} already contains files; pass --force to write anyway"
            )
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo_config(cfg: RunConfig, out: Path) -> None:
    (out / "resolved.cfg").write_text(runconfig.render(cfg), encoding="utf-8")


def _require(path_str: str, what: str) -> Path:
    if not path_str:
        raise ConfigError(f"{what} is required")
    path = Path(path_str)
    if not path.exists():
        raise DataError(f"missing {what}: {path}")
    return path


def _load_label_set(cfg: RunConfig) -> LabelSet:
    return load_labels(_require(cfg.labels, "labels file"))


def _read_documents(path: Path, label_set: LabelSet) -> List[Document]:
    return load_jsonl(path, label_set)


def _split_gold(docs: Sequence[Document]) -> Tuple[List[Document], List[Document]]:
    gold = [d for d in docs if d.label is not None]
    pool = [d for d in docs if d.label is None]
    return gold, pool


def _build_vocab(cfg: RunConfig, docs: Sequence[Document]) -> Vocabulary:
    # Vocabulary comes from document text only; unlabeled text is fair game.
    return Vocabulary.build((d.text for d in docs), min_freq=cfg.min_freq)


def _vocab_for_checkpoint(args, checkpoint: Path) -> Vocabulary:
    vocab_path = Path(args.vocab) if getattr(args, "vocab", None) else checkpoint.parent / "vocab.txt"
    return load_vocabulary(_require(str(vocab_path), "vocabulary file"))


def _read_report_rows(path: Path) -> List[dict]:
    rows = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return rows


def _eval_rows(
    state: LoopState,
    pool: Sequence[Document],
    batch,
    truth: Dict[str, str],
    label_set: LabelSet,
) -> Dict[str, float]:
    pred, _ = predict_batch(state.model, state.head, batch)
    truth_idx = np.fromiter(
        (label_set.index(truth[d.id]) for d in pool), dtype=np.int64, count=len(pool)
    )
    o = report(confusion(truth_idx, pred, len(label_set)), label_set.names).overall
    return {
        "accuracy": o.accuracy,
        "precision": o.precision,
        "recall": o.recall,
        "f_measure": o.f_measure,
    }


# commands -------------------------------------------------------------------


def cmd_synth(cfg: RunConfig, args) -> int:
    out = _prepare_out_dir(cfg, args.force)
    result = synth_corpus(cfg.synth_config())
    parts = split(result.documents, cfg.split_ratios(), seed=cfg.seed)
    write_jsonl(parts.train, out / "train.jsonl")
    write_jsonl(parts.val, out / "val.jsonl")
    write_jsonl(parts.test, out / "test.jsonl")
    write_labels(result.label_set, out / "labels.txt")
    with (out / TRUTH_FILENAME).open("w", encoding="utf-8") as fh:
        for doc in result.documents:
            fh.write(json.dumps({"id": doc.id, "label": result.truth[doc.id]}) + "\n")
    _echo_config(cfg, out)
    n_gold = sum(1 for d in result.documents if d.label is not None)
    print(
        f"wrote {len(parts.train)}/{len(parts.val)}/{len(parts.test)} "
        f"train/val/test documents ({n_gold} gold-labeled) to {out}"
    )
    return 0


def cmd_pretrain(cfg: RunConfig, args) -> int:
    out = _prepare_out_dir(cfg, args.force)
    label_set = _load_label_set(cfg)
    docs = _read_documents(_require(cfg.data, "data file"), label_set)
    gold, _ = _split_gold(docs)
    vocab = _build_vocab(cfg, docs)
    model = pretrain_encoder(
        gold, vocab, label_set, cfg.encoder_config(len(vocab)), cfg.seed, cfg.loop_config()
    )
    save_model(model, out / "encoder.crlp")
    save_vocabulary(vocab, out / "vocab.txt")
    _echo_config(cfg, out)
    print(f"pretrained encoder on {len(gold)} gold documents -> {out / 'encoder.crlp'}")
    return 0


def cmd_train(cfg: RunConfig, args) -> int:
    out = _prepare_out_dir(cfg, args.force)
    label_set = _load_label_set(cfg)
    checkpoint = _require(args.checkpoint, "checkpoint")
    model, _ = load_model(checkpoint)
    vocab = _vocab_for_checkpoint(args, checkpoint)
    docs = _read_documents(_require(cfg.data, "data file"), label_set)
    gold, _ = _split_gold(docs)
    frozen, head = train_head(model, gold, vocab, label_set, cfg.seed, cfg.loop_config())
    save_model(frozen, out / "model.crlp", head=head)
    save_vocabulary(vocab, out / "vocab.txt")
    _echo_config(cfg, out)
    print(f"trained head on {len(gold)} gold documents -> {out / 'model.crlp'}")
    return 0


def cmd_loop(cfg: RunConfig, args) -> int:
    out = _prepare_out_dir(cfg, args.force)
    label_set = _load_label_set(cfg)
    docs = _read_documents(_require(cfg.data, "data file"), label_set)
    gold, pool = _split_gold(docs)
    val_docs: List[Document] = []
    if cfg.val_data:
        val_docs = _read_documents(_require(cfg.val_data, "validation file"), label_set)
    vocab = _build_vocab(cfg, docs)
    state = make_initial_state(
        gold, pool, val_docs, vocab, label_set, cfg.encoder_config(len(vocab)), cfg.seed
    )
    report_path = out / "report.jsonl"
    state = run_loop(state, cfg.loop_config(), report_path=report_path, checkpoint_dir=out)
    save_vocabulary(vocab, out / "vocab.txt")
    rows = _read_report_rows(report_path)
    save_loop_curves(rows, out / "loop_curves.png")
    _echo_config(cfg, out)
    last = state.history[-1]
    final_ckpt = out / f"iter_{last.iteration}.crlp"
    print(
        f"stopped after iteration {last.iteration}: {last.labeled_count} labeled, "
        f"val accuracy {last.val_accuracy:.4f}, final checkpoint {final_ckpt}"
    )
    return 0


def cmd_eval(cfg: RunConfig, args) -> int:
    out = _prepare_out_dir(cfg, args.force)
    label_set = _load_label_set(cfg)
    checkpoint = _require(args.checkpoint, "checkpoint")
    model, head = load_model(checkpoint)
    if head is None:
        raise DataError(
            f"checkpoint {checkpoint} has no classification head; "
            "evaluate a checkpoint written by 'train' or 'loop'"
        )
    vocab = _vocab_for_checkpoint(args, checkpoint)
    docs = _read_documents(_require(args.input, "input file"), label_set)
    unlabeled = sorted(d.id for d in docs if d.label is None)
    if unlabeled:
        raise DataError(
            f"evaluation needs gold labels on every document; missing on: "
            f"{', '.join(unlabeled[:5])}"
            + (f" and {len(unlabeled) - 5} more" if len(unlabeled) > 5 else "")
        )
    batch = tokenize(docs, vocab, model.config.max_len, label_set)
    pred, _ = predict_batch(model, head, batch)
    cm = confusion(batch.labels, pred, len(label_set))
    rep = report(cm, label_set.names)
    text = render_text(rep)
    (out / "report.txt").write_text(text + "\n", encoding="utf-8")
    (out / "report.json").write_text(render_json(rep) + "\n", encoding="utf-8")
    save_confusion_heatmap(cm, label_set.names, out / "confusion.png")
    _echo_config(cfg, out)
    print(text)
    return 0


def cmd_predict(cfg: RunConfig, args) -> int:
    out = _prepare_out_dir(cfg, args.force)
    label_set = _load_label_set(cfg)
    checkpoint = _require(args.checkpoint, "checkpoint")
    model, head = load_model(checkpoint)
    if head is None:
        raise DataError(
            f"checkpoint {checkpoint} has no classification head; "
            "prediction needs one (see 'train' or 'loop')"
        )
    vocab = _vocab_for_checkpoint(args, checkpoint)
    docs = _read_documents(_require(args.input, "input file"), label_set)
    batch = tokenize(docs, vocab, model.config.max_len, label_set)
    pred, conf = predict_batch(model, head, batch)
    out_path = out / "predictions.jsonl"
    with out_path.open("w", encoding="utf-8") as fh:
        for doc, p, c in zip(docs, pred, conf):
            fh.write(
                json.dumps(
                    {"id": doc.id, "label": label_set.names[int(p)], "confidence": float(c)}
                )
                + "\n"
            )
    _echo_config(cfg, out)
    print(f"wrote {len(docs)} predictions to {out_path}")
    return 0


def cmd_compare(cfg: RunConfig, args) -> int:
    out = _prepare_out_dir(cfg, args.force)
    runs_dir = out / "runs"
    runs_dir.mkdir(exist_ok=True)
    per_seed: Dict[str, List[Dict[str, float]]] = {name: [] for name in _COMPARE_ROW_ORDER}

    for k in range(cfg.seeds):
        seed = cfg.seed + k
        result = synth_corpus(dataclasses.replace(cfg.synth_config(), seed=seed))
        parts = split(result.documents, cfg.split_ratios(), seed=seed)
        gold, pool = _split_gold(parts.train)
        vocab = Vocabulary.build((d.text for d in parts.train), min_freq=cfg.min_freq)
        enc = cfg.encoder_config(len(vocab))
        loop_cfg = cfg.loop_config()
        pool_batch = tokenize(pool, vocab, enc.max_len, result.label_set)

        def _report_path(model_name: str) -> Path:
            slug = model_name.lower().replace("+", "plus").replace(" ", "-")
            return runs_dir / f"{slug}-seed{seed}.report.jsonl"

        started = time.perf_counter()
        state = make_initial_state(gold, pool, parts.val, vocab, result.label_set, enc, seed)
        state = run_loop(state, loop_cfg, report_path=_report_path("CRL+"))
        per_seed["CRL+"].append(
            _eval_rows(state, pool, pool_batch, result.truth, result.label_set)
        )
        _progress(
            f"[compare] CRL+ seed={seed}: {state.iteration} iterations, "
            f"{time.perf_counter() - started:.0f}s"
        )

        started = time.perf_counter()
        state = train_crl_only(
            gold, parts.val, vocab, result.label_set, enc, seed, loop_cfg,
            report_path=_report_path("CRL"),
        )
        per_seed["CRL"].append(
            _eval_rows(state, pool, pool_batch, result.truth, result.label_set)
        )
        _progress(f"[compare] CRL seed={seed}: {time.perf_counter() - started:.0f}s")

        started = time.perf_counter()
        state = train_al_only(
            gold, pool, parts.val, vocab, result.label_set, enc, seed, loop_cfg,
            report_path=_report_path("Active Learning"),
        )
        per_seed["Active Learning"].append(
            _eval_rows(state, pool, pool_batch, result.truth, result.label_set)
        )
        _progress(
            f"[compare] Active Learning seed={seed}: {state.iteration} iterations, "
            f"{time.perf_counter() - started:.0f}s"
        )

    rows = []
    for name in _COMPARE_ROW_ORDER:
        medians = {
            key: float(np.median([r[key] for r in per_seed[name]])) for key in _METRIC_KEYS
        }
        rows.append({"model": name, **medians})

    text = _render_compare_text(rows, cfg.seeds)
    (out / "compare.txt").write_text(text + "\n", encoding="utf-8")
    (out / "compare.json").write_text(
        json.dumps({"seeds": cfg.seeds, "rows": rows, "per_seed": per_seed},
                   indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    with (out / "compare.csv").open("w", encoding="utf-8") as fh:
        fh.write("model," + ",".join(_METRIC_KEYS) + "\n")
        for row in rows:
            fh.write(row["model"] + "," + ",".join(repr(row[k]) for k in _METRIC_KEYS) + "\n")
    save_compare_chart(rows, out / "compare.png")
    _echo_config(cfg, out)
    print(text)
    return 0


def _render_compare_text(rows: Sequence[dict], seeds: int) -> str:
    header = ("Model", "Accuracy", "Precision", "Recall", "F-measure")
    name_width = max(len(header[0]), max(len(str(r["model"])) for r in rows))
    lines = []
    if seeds > 1:
        lines.append(f"median over {seeds} seeds")
    lines.append(
        f"{header[0]:<{name_width}}  " + "  ".join(f"{h:>9}" for h in header[1:])
    )
    for row in rows:
        cells = "  ".join(f"{100 * row[k]:>9.2f}" for k in _METRIC_KEYS)
        lines.append(f"{row['model']:<{name_width}}  {cells}")
    return "\n".join(lines)


# argument parsing -----------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--force", action="store_true",
                        help="write into a non-empty output directory")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config field (repeatable)")
    for flag, dest, kind in (
        ("--seed", "seed", int),
        ("--threads", "threads", int),
        ("--out-dir", "out_dir", str),
        ("--data", "data", str),
        ("--val-data", "val_data", str),
        ("--labels", "labels", str),
    ):
        parser.add_argument(flag, dest=dest, type=kind, default=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crlplus",
        description="Contrastive pre-training with expert-free self-training.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic corpus")
    _add_common(p)
    p.add_argument("--n", dest="n_total", type=int, default=argparse.SUPPRESS)
    p.add_argument("--labeled-frac", dest="labeled_fraction", type=float,
                   default=argparse.SUPPRESS)
    p.add_argument("--noise", dest="template_noise", type=float, default=argparse.SUPPRESS)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pretrain", help="contrastive phase only: train an encoder")
    _add_common(p)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("train", help="head phase only: fit a head on a frozen encoder")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vocab", help="vocabulary file (default: vocab.txt beside checkpoint)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("loop", help="full self-training loop")
    _add_common(p)
    p.add_argument("--max-iters", dest="max_iterations", type=int, default=argparse.SUPPRESS)
    p.add_argument("--threshold", dest="confidence_threshold", type=float,
                   default=argparse.SUPPRESS)
    p.set_defaults(func=cmd_loop)

    p = sub.add_parser("eval", help="score a checkpoint against gold labels")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True, help="JSONL of gold-labeled documents")
    p.add_argument("--vocab", help="vocabulary file (default: vocab.txt beside checkpoint)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="benchmark CRL+ against CRL and AL baselines")
    _add_common(p)
    p.add_argument("--seeds", dest="seeds", type=int, default=argparse.SUPPRESS)
    p.add_argument("--n", dest="n_total", type=int, default=argparse.SUPPRESS)
    p.add_argument("--labeled-frac", dest="labeled_fraction", type=float,
                   default=argparse.SUPPRESS)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("predict", help="emit per-document label and confidence")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True, help="JSONL of documents")
    p.add_argument("--vocab", help="vocabulary file (default: vocab.txt beside checkpoint)")
    p.set_defaults(func=cmd_predict)

    return parser


_NON_CONFIG_DESTS = {"command", "config", "force", "set", "func", "checkpoint", "input", "vocab"}


def _flag_overrides(args: argparse.Namespace) -> Dict[str, object]:
    values: Dict[str, object] = {}
    for key, value in vars(args).items():
        if key not in _NON_CONFIG_DESTS:
            values[key] = value
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = (part.strip() for part in item.split("=", 1))
        values[key] = runconfig.coerce(key, raw)
    return values


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        file_values = runconfig.parse_config_file(args.config) if args.config else None
        cfg = runconfig.resolve(file_values, _flag_overrides(args))
        return args.func(cfg, args)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (DegenerateStateError, DegenerateBatchError) as exc:
        print(f"degenerate training state: {exc}", file=sys.stderr)
        return 4
    except CheckpointFormatError as exc:
        print(f"checkpoint format error: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
