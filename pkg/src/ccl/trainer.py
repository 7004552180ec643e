"""Scoring-model training, cyclical curriculum training, baselines, comparisons.

Every method shares one epoch loop: each epoch picks a subset of the training
split (the selection rule differs per method), shuffles it into mini-batches
and applies one Adam step per batch. Test accuracy is recorded periodically
and a run is scored by its maximum.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import nnet
from .exceptions import InvalidParamsError
from .schedule import ScheduleParams, constant_sizes, cyclical_sizes, monotonic_sizes
from .selection import (
    losses_to_scores,
    sample_balanced,
    sample_without_replacement,
    subset_size,
    top_k_by_rank,
)
from .stats import loss_distribution_diagnostics, verdict

log = logging.getLogger(__name__)

METHODS = ("vanilla", "ccl", "anti_ccl", "rand_ccl", "cl", "anti_cl", "rand_cl")
CYCLICAL_SCORE_MODES = {"ccl": "curriculum", "anti_ccl": "anti", "rand_ccl": "uniform"}

# independent random streams derived from one seed
_RUN_STREAM = 1
_RANK_STREAM = 2


class ScheduleLengthMismatch(InvalidParamsError):
    pass


class InsufficientSeedsError(InvalidParamsError):
    pass


@dataclass
class TrainConfig:
    hidden: tuple = (64, 64)
    batch_size: int = 128
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    sp: float = 0.25
    ep: float = 1.0
    alpha: float = 0.5
    methods: tuple = ("vanilla", "ccl")
    eval_interval: int | None = None
    seeds: tuple = (0,)
    epoch_multiplier: int = 3
    patience: int = 2
    monitor: str = "val_accuracy"
    max_epochs: int = 200
    cl_stages: int = 3
    class_balanced: bool = False
    score_seed_offset: int = 10_000
    diagnostics: bool = False

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        self.methods = tuple(self.methods)
        self.seeds = tuple(int(s) for s in self.seeds)
        if self.batch_size < 1:
            raise InvalidParamsError("batch_size must be >= 1")
        if self.eval_interval is not None and self.eval_interval < 1:
            raise InvalidParamsError("eval_interval must be >= 1")
        if not self.seeds:
            raise InvalidParamsError("at least one seed is required")
        if not self.methods:
            raise InvalidParamsError("at least one method is required")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise InvalidParamsError(f"unknown methods {sorted(unknown)}")
        if len(set(self.methods)) != len(self.methods):
            raise InvalidParamsError("methods must not repeat")
        if self.epoch_multiplier < 1 or self.patience < 1 or self.max_epochs < 1:
            raise InvalidParamsError("epoch_multiplier, patience and max_epochs must be >= 1")
        if self.monitor not in ("val_accuracy", "val_loss"):
            raise InvalidParamsError(f"unknown monitor {self.monitor!r}")
        if self.cl_stages < 1:
            raise InvalidParamsError("cl_stages must be >= 1")
        ScheduleParams(self.sp, self.ep, self.alpha, 1)

    def layer_specs(self, n_features, n_classes):
        return nnet.layer_chain([n_features, *self.hidden, n_classes])

    def adam_kwargs(self):
        return dict(lr=self.lr, beta1=self.beta1, beta2=self.beta2, eps=self.eps)


@dataclass
class RunResult:
    method: str
    seed: int
    trace: list
    epochs_used: int
    epoch_sizes: list
    model: nnet.ModelState = field(repr=False)
    batches: list | None = field(default=None, repr=False)
    diagnostics: list | None = field(default=None, repr=False)

    @property
    def max_test_accuracy(self):
        return max(acc for _, acc in self.trace)


class EarlyStopping:
    """Stop once the monitored score has not improved for ``patience`` epochs."""

    def __init__(self, patience=2):
        self.patience = patience
        self.best = -np.inf
        self.best_epoch = 0
        self.epoch = 0

    def update(self, score):
        self.epoch += 1
        if score > self.best:
            self.best = score
            self.best_epoch = self.epoch
        return self.epoch - self.best_epoch >= self.patience


def _epoch_loop(dataset, config, model, fractions, select, rng, track=None, record_batches=False):
    X, y = dataset.train
    N = X.shape[0]
    kw = config.adam_kwargs()
    trace, sizes, batches, diags = [], [], [] if record_batches else None, []
    updates = 0
    for epoch, frac in enumerate(fractions):
        k = subset_size(frac, N)
        idx = np.asarray(select(k, rng))
        if idx.size != k:
            raise RuntimeError(f"selector returned {idx.size} indices, expected {k}")
        sizes.append(k)
        order = rng.permutation(idx)
        for start in range(0, k, config.batch_size):
            b = order[start : start + config.batch_size]
            if record_batches:
                batches.append(b)
            model = nnet.adam_step(model, nnet.gradients(model, X[b], y[b]), **kw)
            updates += 1
            if track is not None and config.eval_interval and updates % config.eval_interval == 0:
                trace.append((updates, track(model)))
        if track is not None and (not trace or trace[-1][0] != updates):
            trace.append((updates, track(model)))
        if config.diagnostics:
            diags.append((epoch, loss_distribution_diagnostics(nnet.per_sample_losses(model, X, y))))
    return model, trace, sizes, batches, diags


def _test_tracker(dataset, eval_set=None):
    X_test, y_test = dataset.test if eval_set is None else eval_set
    if X_test.shape[0] == 0:
        raise InvalidParamsError("dataset has no test split")
    return lambda model: nnet.accuracy(model, X_test, y_test)


def _x_dims(dataset):
    return dataset.X.shape[1], dataset.n_classes


def _run_stream(seed):
    return np.random.default_rng([seed, _RUN_STREAM])


def train_scoring_model(dataset, config, seed):
    """Vanilla training on the full train split with early stopping.

    ``config.monitor`` selects validation accuracy (default) or validation
    loss as the early-stopping score. Returns ``(model, epochs_used)``; ``epochs_used`` is the epoch at which
    training stopped, capped at ``config.max_epochs``.
    """
    X_val, y_val = dataset.val
    if X_val.shape[0] == 0:
        raise InvalidParamsError("scoring model needs a validation split")
    model = nnet.init_model(config.layer_specs(*_x_dims(dataset)), seed)
    N = dataset.train[0].shape[0]
    uniform = np.full(N, 1.0 / N)
    rng = _run_stream(seed)
    stopper = EarlyStopping(config.patience)
    select = lambda k, r: sample_without_replacement(uniform, k, r)  # noqa: E731
    for epoch in range(1, config.max_epochs + 1):
        model, *_ = _epoch_loop(dataset, config, model, [1.0], select, rng)
        if config.monitor == "val_loss":
            score = -nnet.mean_loss(model, X_val, y_val)
        else:
            score = nnet.accuracy(model, X_val, y_val)
        if stopper.update(score):
            return model, epoch
    return model, config.max_epochs


def extract_scores(model, dataset, mode="curriculum"):
    """Selection probabilities for the train split from the model's per-sample losses."""
    X, y = dataset.train
    return losses_to_scores(nnet.per_sample_losses(model, X, y), mode)


def train_ccl(dataset, config, scores, schedule, seed, epochs_used=None, method="ccl",
              init_state=None, record_batches=False, eval_set=None):
    """Train a fresh model, sampling each epoch's subset in proportion to ``scores``.

    ``schedule`` gives the per-epoch fraction of the train split. When
    ``epochs_used`` (the scoring model's epoch count) is given the schedule
    must be ``epoch_multiplier`` times as long. Accuracy is tracked on the
    test split unless ``eval_set=(X, y)`` is given.
    """
    schedule = list(schedule)
    if epochs_used is not None and len(schedule) != config.epoch_multiplier * epochs_used:
        raise ScheduleLengthMismatch(
            f"schedule has {len(schedule)} epochs, expected "
            f"{config.epoch_multiplier} x {epochs_used}"
        )
    scores = np.asarray(scores, dtype=np.float64)
    N = dataset.train[0].shape[0]
    if scores.shape != (N,):
        raise InvalidParamsError(f"need {N} scores, got {scores.shape}")
    model = (
        init_state.fresh_optimizer() if init_state is not None
        else nnet.init_model(config.layer_specs(*_x_dims(dataset)), seed)
    )
    if config.class_balanced and method != "vanilla":
        labels = dataset.train[1]
        select = lambda k, r: sample_balanced(scores, k, labels, r)  # noqa: E731
    else:
        select = lambda k, r: sample_without_replacement(scores, k, r)  # noqa: E731
    model, trace, sizes, batches, diags = _epoch_loop(
        dataset, config, model, schedule, select, _run_stream(seed),
        track=_test_tracker(dataset, eval_set), record_batches=record_batches,
    )
    return RunResult(method, seed, trace, len(schedule), sizes, model, batches,
                     diags if config.diagnostics else None)


def train_vanilla(dataset, config, seed, epochs, init_state=None, record_batches=False,
                  eval_set=None):
    """Every train sample once per epoch, through the same path as :func:`train_ccl`."""
    N = dataset.train[0].shape[0]
    return train_ccl(
        dataset, config, losses_to_scores(np.ones(N), "uniform"), constant_sizes(1.0, epochs),
        seed, method="vanilla", init_state=init_state, record_batches=record_batches,
        eval_set=eval_set,
    )


def train_fixed_rank(dataset, config, rank, epochs, seed, method="cl", init_state=None,
                     direction="increasing", eval_set=None):
    """Stepwise curriculum: the top of a fixed ranking, growing over ``cl_stages`` plateaus."""
    rank = np.asarray(rank)
    stages = min(config.cl_stages, epochs)
    schedule = monotonic_sizes(1.0 / stages, 1.0, epochs, stages, direction)
    labels = dataset.train[1] if config.class_balanced else None
    model = (
        init_state.fresh_optimizer() if init_state is not None
        else nnet.init_model(config.layer_specs(*_x_dims(dataset)), seed)
    )
    select = lambda k, r: top_k_by_rank(rank, k, labels)  # noqa: E731
    model, trace, sizes, _, diags = _epoch_loop(
        dataset, config, model, schedule, select, _run_stream(seed),
        track=_test_tracker(dataset, eval_set),
    )
    return RunResult(method, seed, trace, epochs, sizes, model, None,
                     diags if config.diagnostics else None)


def train_method(dataset, config, method, seed, losses, scoring_epochs, init_state=None,
                 eval_set=None):
    """Run one named method for ``epoch_multiplier * scoring_epochs`` epochs.

    ``losses`` are the scoring model's per-sample train losses; they give the
    cyclical methods their selection probabilities and the fixed-rank
    methods their ordering.
    """
    if method not in METHODS:
        raise InvalidParamsError(f"unknown method {method!r}")
    T = config.epoch_multiplier * scoring_epochs
    kw = dict(init_state=init_state, eval_set=eval_set)
    if method == "vanilla":
        return train_vanilla(dataset, config, seed, T, **kw)
    if method in CYCLICAL_SCORE_MODES:
        scores = losses_to_scores(losses, CYCLICAL_SCORE_MODES[method])
        schedule = cyclical_sizes(config.sp, config.ep, config.alpha, T)
        return train_ccl(dataset, config, scores, schedule, seed, epochs_used=scoring_epochs,
                         method=method, **kw)
    if method == "cl":
        rank = np.argsort(losses, kind="stable")
    elif method == "anti_cl":
        rank = np.argsort(-np.asarray(losses), kind="stable")
    else:
        rank = np.random.default_rng([seed, _RANK_STREAM]).permutation(len(losses))
    return train_fixed_rank(dataset, config, rank, T, seed, method, **kw)


@dataclass
class SeedRuns:
    seed: int
    scoring_epochs: int
    losses: np.ndarray
    runs: dict


def run_seed(dataset, config, seed, scores=None):
    """All configured methods for one seed, sharing initial weights and one scoring model.

    The scoring model uses ``seed + config.score_seed_offset``. Externally
    produced ``scores`` replace the self-taught ones (their inverses stand
    in for losses); the scoring model is still trained to fix the epoch
    budget.
    """
    scorer, E = train_scoring_model(dataset, config, seed + config.score_seed_offset)
    X, y = dataset.train
    if scores is None:
        losses = nnet.per_sample_losses(scorer, X, y)
    else:
        scores = np.asarray(scores, dtype=np.float64)
        if scores.shape != (X.shape[0],):
            raise InvalidParamsError(f"need {X.shape[0]} external scores, got {scores.shape}")
        losses = 1.0 / scores
    init = nnet.init_model(config.layer_specs(*_x_dims(dataset)), seed)
    log.info("seed %d: scoring model stopped at epoch %d, training %d epochs",
             seed, E, config.epoch_multiplier * E)
    runs = {m: train_method(dataset, config, m, seed, losses, E, init_state=init)
            for m in config.methods}
    return SeedRuns(seed, E, losses, runs)


@dataclass
class ComparisonReport:
    methods: tuple
    seeds: tuple
    scores: dict
    comparisons: dict
    scoring_epochs: dict
    runs: list = field(default_factory=list, repr=False)
    losses: dict = field(default_factory=dict, repr=False)

    def mean(self, method):
        return float(np.mean(self.scores[method]))

    def std(self, method):
        s = self.scores[method]
        return float(np.std(s, ddof=1)) if len(s) > 1 else 0.0

    def table_rows(self):
        """Rows of the comparison table: one column per method."""
        rows = [["statistic", *self.methods]]
        rows.append(["mean", *[_fmt(self.mean(m)) for m in self.methods]])
        rows.append(["std", *[_fmt(self.std(m)) for m in self.methods]])
        for key in ("t", "p", "verdict"):
            row = [key]
            for m in self.methods:
                c = self.comparisons.get(m)
                row.append("" if c is None else (c[key] if key == "verdict" else _fmt(c[key])))
            rows.append(row)
        for i, seed in enumerate(self.seeds):
            rows.append([f"seed_{seed}", *[_fmt(self.scores[m][i]) for m in self.methods]])
        return rows


def _fmt(x):
    return "%.10g" % x


def _run_seed_args(args):
    return run_seed(*args)


def run_experiment(dataset, config, jobs=1, scores=None):
    """Every method for every seed, then a t-test of each method against vanilla.

    Seeds run in parallel worker processes when ``jobs > 1``; the result does
    not depend on ``jobs``.
    """
    comparing = "vanilla" in config.methods and len(config.methods) > 1
    if comparing and len(config.seeds) < 2:
        raise InsufficientSeedsError("t-tests need at least two seeds")
    args = [(dataset, config, s, scores) for s in config.seeds]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_seed = list(pool.map(_run_seed_args, args))
    else:
        per_seed = [run_seed(*a) for a in args]

    scores = {m: [sr.runs[m].max_test_accuracy for sr in per_seed] for m in config.methods}
    comparisons = {}
    if comparing:
        for m in config.methods:
            if m == "vanilla":
                continue
            v, t, p = verdict(scores[m], scores["vanilla"])
            comparisons[m] = dict(t=t, p=p, verdict=v)
    return ComparisonReport(
        methods=config.methods,
        seeds=config.seeds,
        scores=scores,
        comparisons=comparisons,
        scoring_epochs={sr.seed: sr.scoring_epochs for sr in per_seed},
        runs=[sr.runs[m] for sr in per_seed for m in config.methods],
        losses={sr.seed: sr.losses for sr in per_seed},
    )
