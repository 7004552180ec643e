"""Loss-based selection probabilities and weighted sampling without replacement."""
from __future__ import annotations

import csv
import itertools
import math

import numpy as np

from .exceptions import EmptyInputError, InvalidParamsError, ParseError

LOSS_EPS = 1e-8

__all__ = [
    "LOSS_EPS",
    "losses_to_scores",
    "subset_size",
    "sample_without_replacement",
    "sample_without_replacement_batch",
    "inclusion_frequencies",
    "sample_sequential",
    "inclusion_probabilities_bruteforce",
    "balanced_counts",
    "top_k_by_rank",
    "load_scores_csv",
    "save_scores_csv",
]


def losses_to_scores(losses, mode="curriculum", eps=LOSS_EPS):
    """Turn per-sample losses into selection probabilities.

    ``curriculum`` weights each sample by its inverse loss (easy samples are
    favoured), ``anti`` by the loss itself, ``uniform`` equally. Losses are
    clamped below at ``eps`` so the result is strictly positive.
    """
    losses = np.asarray(losses, dtype=np.float64).ravel()
    if losses.size == 0:
        raise EmptyInputError("no losses given")
    clamped = np.maximum(losses, eps)
    if mode == "curriculum":
        k = 1.0 / clamped
    elif mode == "anti":
        k = clamped
    elif mode == "uniform":
        k = np.ones_like(clamped)
    else:
        raise InvalidParamsError(f"unknown score mode {mode!r}")
    return k / k.sum()


def subset_size(fraction, N):
    """Number of samples for a dataset fraction: round half up, clamped to [1, N]."""
    k = math.floor(fraction * N + 0.5)
    return int(min(max(k, 1), N))


def _check_k(k, N):
    if int(k) != k or not 1 <= k <= N:
        raise InvalidParamsError(f"k must be an integer in [1, {N}], got {k}")


def sample_without_replacement(scores, k, rng):
    """Draw ``k`` distinct indices with probability proportional to ``scores``.

    The draw is distributed exactly like successive weighted draws with
    renormalisation after each removal. It is implemented with exponential
    keys: index ``i`` gets key ``E_i / r_i`` with ``E_i ~ Exp(1)`` and the
    ``k`` smallest keys win. For ``k == N`` every index is returned and the
    generator is not advanced.

    Returns the selected indices in draw order.
    """
    scores = np.asarray(scores, dtype=np.float64)
    N = scores.size
    _check_k(k, N)
    if k == N:
        return np.arange(N)
    keys = rng.standard_exponential(N) / scores
    chosen = np.argpartition(keys, k - 1)[:k]
    return chosen[np.argsort(keys[chosen], kind="stable")]


def sample_without_replacement_batch(scores, k, trials, rng):
    """``trials`` independent draws of :func:`sample_without_replacement` at once.

    Row ``i`` equals the ``i``-th of ``trials`` consecutive single calls on the
    same generator. Returns an array of shape ``(trials, k)``.
    """
    scores = np.asarray(scores, dtype=np.float64)
    N = scores.size
    _check_k(k, N)
    if k == N:
        return np.tile(np.arange(N), (trials, 1))
    keys = rng.standard_exponential((trials, N)) / scores
    chosen = np.argpartition(keys, k - 1, axis=1)[:, :k]
    order = np.argsort(np.take_along_axis(keys, chosen, axis=1), axis=1, kind="stable")
    return np.take_along_axis(chosen, order, axis=1)


def inclusion_frequencies(scores, k, trials, rng):
    """Empirical per-index inclusion frequencies over ``trials`` draws."""
    draws = sample_without_replacement_batch(scores, k, trials, rng)
    counts = np.bincount(draws.ravel(), minlength=np.asarray(scores).size)
    return counts / trials


def sample_sequential(scores, k, rng):
    """Literal successive-draw sampler: pick one index, remove it, renormalise.

    O(N k); kept as a reference for :func:`sample_without_replacement`.
    """
    scores = np.asarray(scores, dtype=np.float64)
    N = scores.size
    _check_k(k, N)
    remaining = scores.copy()
    out = np.empty(k, dtype=np.intp)
    for j in range(k):
        cdf = np.cumsum(remaining)
        u = rng.random() * cdf[-1]
        i = int(np.searchsorted(cdf, u, side="right"))
        i = min(i, N - 1)
        while remaining[i] == 0.0:
            i -= 1
        out[j] = i
        remaining[i] = 0.0
    return out


def inclusion_probabilities_bruteforce(scores, k):
    """Exact inclusion probabilities of the successive-draw scheme.

    Enumerates every ordered sequence of ``k`` distinct draws. Only for small
    problems (N <= 12, k <= 6).
    """
    scores = np.asarray(scores, dtype=np.float64)
    N = scores.size
    if N > 12 or k > 6:
        raise InvalidParamsError("brute-force enumeration limited to N <= 12 and k <= 6")
    _check_k(k, N)
    p = scores / scores.sum()
    incl = np.zeros(N)
    for seq in itertools.permutations(range(N), k):
        prob = 1.0
        mass = 1.0
        for i in seq:
            prob *= p[i] / mass
            mass -= p[i]
        for i in seq:
            incl[i] += prob
    if k == N:
        incl[:] = 1.0
    return incl


def balanced_counts(labels, k):
    """Split ``k`` across classes in proportion to their frequency in ``labels``.

    Largest-remainder rounding; every per-class count is within one of its
    exact quota and the counts sum to ``k``.
    """
    labels = np.asarray(labels)
    classes, counts = np.unique(labels, return_counts=True)
    quota = counts * (k / labels.size)
    base = np.floor(quota).astype(int)
    short = k - base.sum()
    order = np.argsort(-(quota - base), kind="stable")
    base[order[:short]] += 1
    return dict(zip(classes.tolist(), np.minimum(base, counts).tolist()))


def sample_balanced(scores, k, labels, rng):
    """Class-balanced variant of :func:`sample_without_replacement`."""
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    _check_k(k, scores.size)
    picked = []
    for c, kc in balanced_counts(labels, k).items():
        if kc == 0:
            continue
        idx = np.flatnonzero(labels == c)
        picked.append(idx[sample_without_replacement(scores[idx], kc, rng)])
    return np.concatenate(picked)


def top_k_by_rank(rank, k, labels=None):
    """First ``k`` indices of a fixed ranking, optionally class-balanced.

    ``rank`` is an ordering of all indices, most-preferred first.
    """
    rank = np.asarray(rank)
    _check_k(k, rank.size)
    if labels is None:
        return rank[:k].copy()
    labels = np.asarray(labels)
    ranked_labels = labels[rank]
    picked = []
    for c, kc in balanced_counts(labels, k).items():
        picked.append(rank[ranked_labels == c][:kc])
    return np.concatenate(picked)


def save_scores_csv(path, scores):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "score"])
        for i, s in enumerate(np.asarray(scores, dtype=np.float64)):
            writer.writerow([i, repr(float(s))])


def load_scores_csv(path, n=None):
    """Read a two-column ``index,score`` file and return normalised scores.

    Indices must cover ``0..N-1`` exactly once; scores must be positive.
    """
    rows = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError("empty score file", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError("expected two columns", line=lineno)
            try:
                i, s = int(row[0]), float(row[1])
            except ValueError:
                raise ParseError(f"non-numeric entry {row!r}", line=lineno) from None
            if i in rows:
                raise ParseError(f"duplicate index {i}", line=lineno)
            if not s > 0 or not math.isfinite(s):
                raise ParseError(f"score must be positive and finite, got {s}", line=lineno)
            rows[i] = s
    if not rows:
        raise ParseError("score file has no rows")
    N = len(rows)
    if sorted(rows) != list(range(N)):
        raise ParseError("indices must be exactly 0..N-1")
    if n is not None and N != n:
        raise ParseError(f"score file has {N} rows, dataset has {n}")
    scores = np.array([rows[i] for i in range(N)])
    return scores / scores.sum()
