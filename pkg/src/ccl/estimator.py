"""scikit-learn style classifier trained with a cyclical curriculum."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.model_selection import train_test_split
from sklearn.preprocessing import LabelEncoder
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_is_fitted, validate_data

from . import nnet
from .datasets import Dataset
from .exceptions import InvalidParamsError
from .schedule import ScheduleParams
from .selection import losses_to_scores
from .trainer import METHODS, TrainConfig, train_method, train_scoring_model


class CyclicalCurriculumClassifier(ClassifierMixin, BaseEstimator):
    """MLP classifier trained by self-taught cyclical curriculum learning.

    ``fit`` holds out ``validation_fraction`` of the data (stratified), trains
    a scoring model of the same architecture with early stopping on it,
    scores each training sample by its inverse loss, then trains the final
    model for ``epoch_multiplier`` times as many epochs with ``method``.

    Parameters
    ----------
    method : str, default="ccl"
        One of ``vanilla``, ``ccl``, ``anti_ccl``, ``rand_ccl``, ``cl``,
        ``anti_cl``, ``rand_cl``.
    hidden : tuple of int, default=(64, 64)
    sp, ep, alpha : float
        Cyclical schedule: smallest and largest training fraction, and the
        per-epoch shrink factor.
    monitor : {"val_accuracy", "val_loss"}
        Early-stopping score of the scoring model.
    random_state : int, default=0
        Seeds initial weights, batching and the validation split.

    Attributes
    ----------
    classes_ : ndarray
    model_ : ModelState
        Final network parameters.
    scores_ : ndarray
        Selection probabilities of the training rows (curriculum mode).
    schedule_ : list of float
        Fraction of the training rows used in each epoch of the final run.
    scoring_epochs_ : int
    history_ : list of (update, validation accuracy)
    """

    def __init__(self, method="ccl", hidden=(64, 64), batch_size=32, lr=1e-3, sp=0.25, ep=1.0,
                 alpha=0.5, epoch_multiplier=3, patience=2, monitor="val_accuracy",
                 max_epochs=200, eval_interval=None, class_balanced=False,
                 validation_fraction=0.1, random_state=0):
        self.method = method
        self.hidden = hidden
        self.batch_size = batch_size
        self.lr = lr
        self.sp = sp
        self.ep = ep
        self.alpha = alpha
        self.epoch_multiplier = epoch_multiplier
        self.patience = patience
        self.monitor = monitor
        self.max_epochs = max_epochs
        self.eval_interval = eval_interval
        self.class_balanced = class_balanced
        self.validation_fraction = validation_fraction
        self.random_state = random_state

    def _config(self):
        if self.method not in METHODS:
            raise InvalidParamsError(f"unknown method {self.method!r}")
        ScheduleParams(self.sp, self.ep, self.alpha, 1)
        return TrainConfig(
            hidden=tuple(self.hidden), batch_size=self.batch_size, lr=self.lr, sp=self.sp,
            ep=self.ep, alpha=self.alpha, methods=(self.method,), seeds=(self.random_state,),
            epoch_multiplier=self.epoch_multiplier, patience=self.patience,
            monitor=self.monitor, max_epochs=self.max_epochs, eval_interval=self.eval_interval,
            class_balanced=self.class_balanced,
        )

    def fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=np.float64)
        config = self._config()
        if not 0.0 < self.validation_fraction < 1.0:
            raise InvalidParamsError("validation_fraction must be in (0, 1)")
        check_classification_targets(y)
        enc = LabelEncoder().fit(y)
        self.classes_ = enc.classes_
        C = self.classes_.size
        if C < 2:
            raise ValueError(f"{C} class in y; need at least two classes")
        codes = enc.transform(y)
        # every class needs a row on both sides of the split
        n_val = max(int(round(self.validation_fraction * len(codes))), C)
        if len(codes) - n_val < C or np.bincount(codes).min() < 2:
            raise ValueError(
                f"n_samples={len(codes)} is too small for a stratified validation split "
                f"with {C} classes; every class needs at least two samples"
            )
        tr, va = train_test_split(np.arange(len(codes)), test_size=n_val,
                                  random_state=self.random_state, stratify=codes)
        tags = np.full(len(codes), "train", dtype="<U5")
        tags[va] = "val"
        data = Dataset.from_arrays(X, codes, self.classes_.size, tags)

        seed = self.random_state
        scorer, E = train_scoring_model(data, config, seed + config.score_seed_offset)
        X_tr, y_tr = data.train
        losses = nnet.per_sample_losses(scorer, X_tr, y_tr)
        run = train_method(data, config, self.method, seed, losses, E, eval_set=data.val)

        self.model_ = run.model
        self.scores_ = losses_to_scores(losses, "curriculum")
        self.schedule_ = [s / X_tr.shape[0] for s in run.epoch_sizes]
        self.scoring_epochs_ = E
        self.history_ = run.trace
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return nnet.forward(self.model_, X)

    def predict(self, X):
        proba = self.predict_proba(X)
        return self.classes_[np.argmax(proba, axis=1)]
