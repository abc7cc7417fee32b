"""Expert-free self-training loop.

Each iteration: (1) contrastive pre-training of the encoder on the current
labeled set, using dropout views as augmentation; (2) encoder frozen, linear
head trained with cross-entropy on the frozen embeddings; (3) the unlabeled
pool is scored and every document whose max softmax probability clears the
confidence threshold is promoted into the labeled set as a pseudo-labeled
sample; (4) validation metrics are recorded. The loop stops at the first
of: the iteration cap, an iteration that promotes nothing, or a target
validation metric being reached.

Two reference baselines reuse the same engine: ``train_crl_only`` is one
iteration with promotion disabled (contrastive pre-training plus head), and
``train_al_only`` replaces phases (1)+(2) with end-to-end cross-entropy
training of the unfrozen encoder, keeping the promotion loop identical.

Promotions are permanent: a pseudo-labeled document is never re-scored,
demoted, or relabeled. Pseudo-labels participate in later contrastive
phases exactly like gold labels.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .contrastive import LossConfig, build_batch, supcon_loss
from .corpus import (
    PROVENANCE_PSEUDO,
    Document,
    LabelSet,
    TokenizedBatch,
    Vocabulary,
    tokenize,
)
from .encoder import (
    EncoderConfig,
    EncoderModel,
    augment_views,
    classify,
    encode,
    freeze_encoder,
    init_encoder,
    init_head,
    save_model,
)
from .errors import DegenerateBatchError, DegenerateStateError, ParameterError
from .metrics import confusion, overall
from .numerics import ParamSet, SeededRng, Tensor, cross_entropy, sgd_step, value_and_grad

TARGET_METRIC_NAMES = ("accuracy", "precision_weighted", "recall_weighted", "f1_weighted")

# Embedding passes run in fixed-size slices to bound graph memory.
_EMBED_CHUNK = 256

# Substream tags; every phase of every iteration draws from its own stream.
_STREAM_ENCODER_INIT = (0, 0)
_STREAM_HEAD_INIT = (0, 1)
_STREAM_CONTRASTIVE = 1
_STREAM_HEAD = 2
_STREAM_AL = 3


@dataclass(frozen=True)
class TargetMetric:
    """Early-stop rule: stop once the named validation metric reaches value."""

    name: str
    value: float

    def __post_init__(self):
        if self.name not in TARGET_METRIC_NAMES:
            raise ParameterError(
                f"target metric must be one of {TARGET_METRIC_NAMES}, got {self.name!r}"
            )
        if not (0.0 < self.value <= 1.0):
            raise ParameterError(f"target value must be in (0, 1], got {self.value}")


@dataclass
class LoopConfig:
    """Loop hyperparameters; defaults favor the desk-scale benchmark.

    A confidence_threshold above 1.0 is legal and means "never promote",
    which is how the contrastive-plus-head baseline is expressed through
    the same engine.

    steps_per_epoch decouples the optimizer budget from the labeled-set
    size: with only a few dozen gold documents a natural epoch is one or
    two batches, far too few SGD steps to move a randomly initialized
    model. When set, every training phase runs exactly that many sampled
    batches per epoch instead of one shuffled pass, so the contrastive,
    head, and end-to-end phases all see the same step budget.
    """

    confidence_threshold: float = 0.95
    max_iterations: int = 10
    contrastive_epochs: int = 5
    head_epochs: int = 5
    steps_per_epoch: Optional[int] = None
    batch_size: int = 32
    n_views: int = 2
    classes_per_batch: int = 4
    lr_contrastive: float = 0.1
    lr_head: float = 0.5
    lr_encoder: float = 0.05
    grad_clip: Optional[float] = 1.0
    warm_start: bool = True
    max_promotions: Optional[int] = None
    target_metric: Optional[TargetMetric] = None
    loss: LossConfig = field(default_factory=LossConfig)

    def __post_init__(self):
        if not (self.confidence_threshold > 0.5):
            raise ParameterError(
                "confidence_threshold must exceed 0.5 (a promoted label should at "
                f"least beat a coin flip), got {self.confidence_threshold}"
            )
        if self.max_iterations < 1:
            raise ParameterError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.contrastive_epochs < 0 or self.head_epochs < 0:
            raise ParameterError("epoch counts must be >= 0")
        if self.steps_per_epoch is not None and self.steps_per_epoch < 1:
            raise ParameterError(
                f"steps_per_epoch must be >= 1 or None, got {self.steps_per_epoch}"
            )
        if self.batch_size < 2:
            raise ParameterError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.n_views < 2:
            raise ParameterError(f"n_views must be >= 2, got {self.n_views}")
        if self.classes_per_batch < 2:
            raise ParameterError(f"classes_per_batch must be >= 2, got {self.classes_per_batch}")
        for name in ("lr_contrastive", "lr_head", "lr_encoder"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be > 0")
        if self.grad_clip is not None and self.grad_clip <= 0:
            raise ParameterError(f"grad_clip must be > 0 or None, got {self.grad_clip}")
        if self.max_promotions is not None and self.max_promotions < 1:
            raise ParameterError(f"max_promotions must be >= 1 or None, got {self.max_promotions}")


@dataclass(frozen=True)
class Promotion:
    doc_id: str
    label: str
    confidence: float


@dataclass
class IterationRecord:
    """Everything observed in one iteration.

    ``pool_predictions`` holds the model's prediction and confidence for
    every document that was still unlabeled when the iteration scored the
    pool; evaluation code uses it to compare promoted-subset accuracy with
    whole-pool accuracy against sealed truth.
    """

    iteration: int
    labeled_count: int
    promoted_count: int
    mean_promotion_confidence: float
    val_accuracy: float
    val_precision_weighted: float
    val_recall_weighted: float
    val_f1_weighted: float
    wall_seconds: float
    promotions: List[Promotion] = field(default_factory=list, repr=False)
    pool_predictions: Dict[str, Tuple[str, float]] = field(default_factory=dict, repr=False)

    def report_row(self) -> dict:
        """The machine-readable per-iteration report object."""
        return {
            "iteration": self.iteration,
            "labeled_count": self.labeled_count,
            "promoted_count": self.promoted_count,
            "mean_promotion_confidence": self.mean_promotion_confidence,
            "val_accuracy": self.val_accuracy,
            "val_precision_weighted": self.val_precision_weighted,
            "val_recall_weighted": self.val_recall_weighted,
            "val_f1_weighted": self.val_f1_weighted,
            "wall_seconds": self.wall_seconds,
        }


@dataclass
class LoopState:
    """Mutable run state plus the fixed run context (vocab, splits, seed)."""

    labeled: List[Document]
    unlabeled: List[Document]
    model: EncoderModel
    head: ParamSet
    iteration: int
    history: List[IterationRecord]
    vocab: Vocabulary = field(repr=False, default=None)
    label_set: LabelSet = field(repr=False, default=None)
    val_batch: Optional[TokenizedBatch] = field(repr=False, default=None)
    pool_batch: Optional[TokenizedBatch] = field(repr=False, default=None)
    pool_rows: Dict[str, int] = field(repr=False, default_factory=dict)
    seed: int = 0


def make_initial_state(
    gold: Sequence[Document],
    unlabeled: Sequence[Document],
    val: Sequence[Document],
    vocab: Vocabulary,
    label_set: LabelSet,
    encoder_config: EncoderConfig,
    seed: int,
) -> LoopState:
    """Fresh model and head, tokenized pools, iteration counter at zero."""
    root = SeededRng(seed)
    model = init_encoder(encoder_config, root.derive(*_STREAM_ENCODER_INIT))
    head = init_head(encoder_config, len(label_set), root.derive(*_STREAM_HEAD_INIT))
    pool_docs = list(unlabeled)
    pool_batch = (
        tokenize(pool_docs, vocab, encoder_config.max_len, label_set) if pool_docs else None
    )
    val_docs = list(val)
    val_batch = (
        tokenize(val_docs, vocab, encoder_config.max_len, label_set) if val_docs else None
    )
    return LoopState(
        labeled=list(gold),
        unlabeled=pool_docs,
        model=model,
        head=head,
        iteration=0,
        history=[],
        vocab=vocab,
        label_set=label_set,
        val_batch=val_batch,
        pool_batch=pool_batch,
        pool_rows={doc.id: row for row, doc in enumerate(pool_docs)},
        seed=seed,
    )


def _check_precondition(labeled: Sequence[Document], label_set: LabelSet) -> None:
    """Contrastive training needs >= 2 classes with >= 2 samples each."""
    counts: Dict[str, int] = {}
    for doc in labeled:
        if doc.label is not None:
            counts[doc.label] = counts.get(doc.label, 0) + 1
    rich = sorted(name for name, n in counts.items() if n >= 2)
    if len(rich) < 2:
        poor = sorted(f"{name}={n}" for name, n in counts.items() if n < 2)
        raise DegenerateStateError(
            "need at least 2 classes with at least 2 labeled samples each; "
            f"sufficient classes: {rich or 'none'}; insufficient: {poor or 'none'}"
        )


def _labeled_batch(state: LoopState) -> Tuple[TokenizedBatch, np.ndarray]:
    batch = tokenize(state.labeled, state.vocab, state.model.config.max_len, state.label_set)
    return batch, batch.labels.copy()


def _balanced_rows(
    labels: np.ndarray, batch_size: int, classes_per_batch: int, gen: np.random.Generator
) -> np.ndarray:
    """Rows for one contrastive step: a few classes, evenly represented.

    Classes are drawn uniformly among those present; documents are drawn
    with replacement inside each class, so a three-document class can still
    fill its share. Views later multiply every row, which guarantees each
    anchor at least one positive.
    """
    present = np.unique(labels)
    k = min(classes_per_batch, len(present))
    chosen = gen.choice(len(present), size=k, replace=False)
    per_class = math.ceil(batch_size / k)
    rows: List[int] = []
    for ci in np.sort(chosen):
        members = np.flatnonzero(labels == present[ci])
        picks = gen.integers(0, len(members), size=per_class)
        rows.extend(int(members[p]) for p in picks)
    return np.asarray(rows, dtype=np.int64)


def _contrastive_phase(
    state: LoopState, cfg: LoopConfig, batch: TokenizedBatch, labels: np.ndarray,
    phase_rng: SeededRng,
) -> ParamSet:
    """Phase (1): encoder parameters trained with the contrastive loss."""
    params = state.model.params
    if params.any_frozen():
        # A warm start hands over the frozen encoder of the previous
        # iteration; training requires reconstruction, not an unfreeze API.
        params = params.clone(unfreeze=True)
    steps = cfg.steps_per_epoch or max(1, math.ceil(len(labels) / cfg.batch_size))
    for epoch in range(cfg.contrastive_epochs):
        for step in range(steps):
            sample_gen = phase_rng.derive(epoch, step, 0).generator()
            view_rng = phase_rng.derive(epoch, step, 1)
            rows = _balanced_rows(labels, cfg.batch_size, cfg.classes_per_batch, sample_gen)
            sub = batch.take(rows)
            sub_labels = labels[rows]

            def loss_fn(ps: ParamSet) -> Tensor:
                views, index_map = augment_views(
                    state.model, sub, cfg.n_views, view_rng, params=ps
                )
                return supcon_loss(build_batch(views, sub_labels[index_map]), cfg.loss)

            try:
                _, grads = value_and_grad(loss_fn, params)
            except DegenerateBatchError as exc:
                warnings.warn(f"skipping contrastive step (loss 0): {exc}", stacklevel=2)
                continue
            params = sgd_step(params, grads, lr=cfg.lr_contrastive, clip=cfg.grad_clip)
    return params


def embed_documents(model: EncoderModel, batch: TokenizedBatch) -> np.ndarray:
    """Deterministic pooled embeddings, computed in bounded slices."""
    if len(batch) == 0:
        return np.zeros((0, model.config.d_model), dtype=np.float32)
    slices = []
    for start in range(0, len(batch), _EMBED_CHUNK):
        rows = range(start, min(start + _EMBED_CHUNK, len(batch)))
        slices.append(encode(model, batch.take(rows)).data.copy())
    return np.concatenate(slices, axis=0)


def _head_phase(
    state: LoopState, cfg: LoopConfig, embeddings: np.ndarray, labels: np.ndarray,
    phase_rng: SeededRng,
) -> ParamSet:
    """Phase (2): cross-entropy training of the head on frozen embeddings.

    With steps_per_epoch set, batches are class-balanced over every class
    present, the same way the contrastive phase balances them. Uniform
    sampling would let the majority class set the head's confidence scale,
    and a max-softmax promotion threshold would then only ever clear for
    that class. Without the knob the phase makes plain shuffled passes.
    """
    head = state.head
    n = len(labels)
    steps = cfg.steps_per_epoch or max(1, math.ceil(n / cfg.batch_size))
    for epoch in range(cfg.head_epochs):
        perm = phase_rng.derive(epoch).generator().permutation(n)
        for step in range(steps):
            if cfg.steps_per_epoch is None:
                rows = perm[step * cfg.batch_size : (step + 1) * cfg.batch_size]
            else:
                gen = phase_rng.derive(epoch, step).generator()
                rows = _balanced_rows(labels, cfg.batch_size, len(state.label_set), gen)
            if rows.size == 0:
                continue
            emb = Tensor(embeddings[rows])
            y = labels[rows]

            def loss_fn(ps: ParamSet) -> Tensor:
                return cross_entropy(classify(ps, emb), y)

            _, grads = value_and_grad(loss_fn, head)
            head = sgd_step(head, grads, lr=cfg.lr_head, clip=cfg.grad_clip)
    return head


def _al_phase(
    state: LoopState, cfg: LoopConfig, batch: TokenizedBatch, labels: np.ndarray,
    phase_rng: SeededRng,
) -> Tuple[ParamSet, ParamSet]:
    """Baseline phase: end-to-end cross-entropy, encoder unfrozen, dropout on."""
    merged = ParamSet.merged(state.model.params, state.head)
    if merged.any_frozen():
        merged = merged.clone(unfreeze=True)
    n = len(labels)
    steps = cfg.steps_per_epoch or max(1, math.ceil(n / cfg.batch_size))
    for epoch in range(cfg.head_epochs):
        perm = phase_rng.derive(epoch, 0).generator().permutation(n)
        for step in range(steps):
            if cfg.steps_per_epoch is None:
                rows = perm[step * cfg.batch_size : (step + 1) * cfg.batch_size]
            else:
                gen = phase_rng.derive(epoch, step, 0).generator()
                rows = gen.choice(n, size=min(cfg.batch_size, n), replace=False)
            if rows.size == 0:
                continue
            sub = batch.take(rows)
            y = labels[rows]
            drop_rng = phase_rng.derive(epoch, step, 1)

            def loss_fn(ps: ParamSet) -> Tensor:
                emb = encode(state.model, sub, rng=drop_rng, params=ps)
                return cross_entropy(classify(ps, emb), y)

            _, grads = value_and_grad(loss_fn, merged)
            merged = sgd_step(merged, grads, lr=cfg.lr_encoder, clip=cfg.grad_clip)
    return merged.subset("encoder."), merged.subset("head.")


def predict_batch(
    model: EncoderModel, head: ParamSet, batch: TokenizedBatch
) -> Tuple[np.ndarray, np.ndarray]:
    """Class indices and max-softmax confidences; computed in float64."""
    embeddings = embed_documents(model, batch)
    logits = (
        embeddings.astype(np.float64) @ head["head.weight"].data.astype(np.float64)
        + head["head.bias"].data.astype(np.float64)
    )
    z = np.exp(logits - logits.max(axis=1, keepdims=True))
    probs = z / z.sum(axis=1, keepdims=True)
    return probs.argmax(axis=1), probs.max(axis=1)


def _validate(state: LoopState) -> Tuple[float, float, float, float]:
    if state.val_batch is None or len(state.val_batch) == 0:
        return 0.0, 0.0, 0.0, 0.0
    pred, _ = predict_batch(state.model, state.head, state.val_batch)
    cm = confusion(state.val_batch.labels, pred, len(state.label_set))
    o = overall(cm)
    return o.accuracy, o.precision, o.recall, o.f_measure


def _run_iteration(state: LoopState, cfg: LoopConfig, al_mode: bool) -> LoopState:
    _check_precondition(state.labeled, state.label_set)
    started = time.perf_counter()
    iteration = state.iteration + 1
    root = SeededRng(state.seed)

    if cfg.warm_start:
        model = EncoderModel(config=state.model.config, params=state.model.params)
        head = state.head
    else:
        model = init_encoder(state.model.config, root.derive(*_STREAM_ENCODER_INIT))
        head = init_head(state.model.config, len(state.label_set), root.derive(*_STREAM_HEAD_INIT))
    working = dataclasses.replace(state, model=model, head=head)

    batch, labels = _labeled_batch(working)
    if al_mode:
        enc_params, head = _al_phase(
            working, cfg, batch, labels, root.derive(_STREAM_AL, iteration)
        )
        model = EncoderModel(config=model.config, params=enc_params)
    else:
        enc_params = _contrastive_phase(
            working, cfg, batch, labels, root.derive(_STREAM_CONTRASTIVE, iteration)
        )
        model = freeze_encoder(EncoderModel(config=model.config, params=enc_params))
        working = dataclasses.replace(working, model=model)
        embeddings = embed_documents(model, batch)
        head = _head_phase(
            working, cfg, embeddings, labels, root.derive(_STREAM_HEAD, iteration)
        )

    # Phase (3): score what is still unlabeled, promote confident predictions.
    pool_predictions: Dict[str, Tuple[str, float]] = {}
    promotions: List[Promotion] = []
    if state.unlabeled:
        rows = [state.pool_rows[doc.id] for doc in state.unlabeled]
        pred, conf = predict_batch(model, head, state.pool_batch.take(rows))
        for doc, p, c in zip(state.unlabeled, pred, conf):
            pool_predictions[doc.id] = (state.label_set.names[int(p)], float(c))
        candidates = [
            Promotion(doc_id=doc.id, label=state.label_set.names[int(p)], confidence=float(c))
            for doc, p, c in zip(state.unlabeled, pred, conf)
            if float(c) >= cfg.confidence_threshold
        ]
        candidates.sort(key=lambda pr: (-pr.confidence, pr.doc_id))
        promotions = candidates[: cfg.max_promotions] if cfg.max_promotions else candidates

    promoted_ids = {pr.doc_id for pr in promotions}
    by_id = {doc.id: doc for doc in state.unlabeled}
    new_labeled = list(state.labeled) + [
        Document(
            id=pr.doc_id,
            text=by_id[pr.doc_id].text,
            label=pr.label,
            provenance=PROVENANCE_PSEUDO,
            source_iteration=iteration,
        )
        for pr in promotions
    ]
    new_unlabeled = [doc for doc in state.unlabeled if doc.id not in promoted_ids]

    next_state = dataclasses.replace(
        state,
        labeled=new_labeled,
        unlabeled=new_unlabeled,
        model=model,
        head=head,
        iteration=iteration,
    )
    acc, prec, rec, f1 = _validate(next_state)
    record = IterationRecord(
        iteration=iteration,
        labeled_count=len(new_labeled),
        promoted_count=len(promotions),
        mean_promotion_confidence=(
            float(np.mean([pr.confidence for pr in promotions])) if promotions else 0.0
        ),
        val_accuracy=acc,
        val_precision_weighted=prec,
        val_recall_weighted=rec,
        val_f1_weighted=f1,
        wall_seconds=time.perf_counter() - started,
        promotions=promotions,
        pool_predictions=pool_predictions,
    )
    next_state.history = state.history + [record]
    return next_state


def run_iteration(state: LoopState, cfg: LoopConfig) -> LoopState:
    """One contrastive + head + promotion iteration; returns the new state."""
    return _run_iteration(state, cfg, al_mode=False)


def _check_boundary_invariants(before: LoopState, after: LoopState) -> None:
    labeled_ids = {d.id for d in after.labeled}
    unlabeled_ids = {d.id for d in after.unlabeled}
    overlap = labeled_ids & unlabeled_ids
    if overlap:
        raise DegenerateStateError(f"labeled/unlabeled overlap: {sorted(overlap)[:5]}")
    if len(after.labeled) < len(before.labeled):
        raise DegenerateStateError("labeled set shrank across an iteration")
    before_labels = {d.id: d.label for d in before.labeled}
    for doc in after.labeled:
        if doc.id in before_labels and doc.label != before_labels[doc.id]:
            raise DegenerateStateError(f"document {doc.id} was relabeled")


def _loop(
    state: LoopState,
    cfg: LoopConfig,
    al_mode: bool,
    report_path=None,
    checkpoint_dir=None,
) -> LoopState:
    report_fh = Path(report_path).open("w", encoding="utf-8") if report_path else None
    if checkpoint_dir is not None:
        checkpoint_dir = Path(checkpoint_dir)
        checkpoint_dir.mkdir(parents=True, exist_ok=True)
    try:
        for _ in range(cfg.max_iterations):
            previous = state
            state = _run_iteration(state, cfg, al_mode)
            _check_boundary_invariants(previous, state)
            record = state.history[-1]
            if report_fh is not None:
                report_fh.write(json.dumps(record.report_row()) + "\n")
                report_fh.flush()
            if checkpoint_dir is not None:
                save_model(
                    state.model, checkpoint_dir / f"iter_{record.iteration}.crlp", head=state.head
                )
            if record.promoted_count == 0:
                break
            target = cfg.target_metric
            if target is not None:
                reached = {
                    "accuracy": record.val_accuracy,
                    "precision_weighted": record.val_precision_weighted,
                    "recall_weighted": record.val_recall_weighted,
                    "f1_weighted": record.val_f1_weighted,
                }[target.name] >= target.value
                if reached:
                    break
    finally:
        if report_fh is not None:
            report_fh.close()
    return state


def run_loop(
    state: LoopState, cfg: LoopConfig, report_path=None, checkpoint_dir=None
) -> LoopState:
    """Iterate until the cap, a zero-promotion iteration, or the target metric.

    When ``report_path`` is given, one JSON object per executed iteration is
    appended as it completes; ``checkpoint_dir`` receives iter_<n>.crlp files.
    """
    return _loop(state, cfg, al_mode=False, report_path=report_path,
                 checkpoint_dir=checkpoint_dir)


def train_crl_only(
    labeled: Sequence[Document],
    val: Sequence[Document],
    vocab: Vocabulary,
    label_set: LabelSet,
    encoder_config: EncoderConfig,
    seed: int,
    cfg: LoopConfig,
    report_path=None,
    checkpoint_dir=None,
) -> LoopState:
    """Contrastive pre-training plus frozen-encoder head, no self-training.

    Definitionally one loop iteration with an unreachable promotion
    threshold; given the same seed and labeled set it reproduces
    ``run_loop(max_iterations=1, confidence_threshold>1)`` bit for bit.
    """
    state = make_initial_state(labeled, (), val, vocab, label_set, encoder_config, seed)
    coerced = dataclasses.replace(cfg, max_iterations=1, confidence_threshold=2.0)
    return _loop(state, coerced, al_mode=False, report_path=report_path,
                 checkpoint_dir=checkpoint_dir)


def train_al_only(
    gold: Sequence[Document],
    unlabeled: Sequence[Document],
    val: Sequence[Document],
    vocab: Vocabulary,
    label_set: LabelSet,
    encoder_config: EncoderConfig,
    seed: int,
    cfg: LoopConfig,
    report_path=None,
    checkpoint_dir=None,
) -> LoopState:
    """Plain self-training baseline: end-to-end cross-entropy, no contrastive
    phase, no freezing; loop mechanics and promotion rule unchanged."""
    state = make_initial_state(gold, unlabeled, val, vocab, label_set, encoder_config, seed)
    return _loop(state, cfg, al_mode=True, report_path=report_path,
                 checkpoint_dir=checkpoint_dir)


def pretrain_encoder(
    gold: Sequence[Document],
    vocab: Vocabulary,
    label_set: LabelSet,
    encoder_config: EncoderConfig,
    seed: int,
    cfg: LoopConfig,
) -> EncoderModel:
    """The contrastive phase alone: a trained, unfrozen encoder, no head.

    Draws from the same substreams as the first loop iteration, so a loop
    run with the same seed trains an identical encoder in its phase (1).
    """
    _check_precondition(gold, label_set)
    state = make_initial_state(gold, (), (), vocab, label_set, encoder_config, seed)
    batch, labels = _labeled_batch(state)
    params = _contrastive_phase(
        state, cfg, batch, labels, SeededRng(seed).derive(_STREAM_CONTRASTIVE, 1)
    )
    return EncoderModel(config=encoder_config, params=params)


def train_head(
    model: EncoderModel,
    gold: Sequence[Document],
    vocab: Vocabulary,
    label_set: LabelSet,
    seed: int,
    cfg: LoopConfig,
) -> Tuple[EncoderModel, ParamSet]:
    """The head phase alone: freeze the given encoder, fit the linear head.

    Embeddings are computed once, deterministically, before any head update;
    the returned encoder is the frozen copy the head was fit against.
    """
    _check_precondition(gold, label_set)
    root = SeededRng(seed)
    frozen = freeze_encoder(model)
    state = make_initial_state(gold, (), (), vocab, label_set, model.config, seed)
    state = dataclasses.replace(state, model=frozen)
    batch, labels = _labeled_batch(state)
    embeddings = embed_documents(frozen, batch)
    head = _head_phase(state, cfg, embeddings, labels, root.derive(_STREAM_HEAD, 1))
    return frozen, head
