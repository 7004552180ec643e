"""Per-epoch dataset-size schedules.

A schedule is a list of fractions of the training set, one per epoch. The
cyclical schedule grows the fraction by ``1/alpha`` per epoch from ``sp`` up
to ``ep`` and shrinks it by ``alpha`` back down to ``sp``, repeatedly.
"""
from __future__ import annotations

from dataclasses import dataclass

from .exceptions import InvalidParamsError

__all__ = [
    "ScheduleParams",
    "cyclical_sizes",
    "constant_sizes",
    "monotonic_sizes",
]


@dataclass(frozen=True)
class ScheduleParams:
    sp: float
    ep: float
    alpha: float
    T: int

    def __post_init__(self):
        if not 0.0 < self.sp <= 1.0:
            raise InvalidParamsError(f"sp must be in (0, 1], got {self.sp}")
        if not 0.0 < self.ep <= 1.0:
            raise InvalidParamsError(f"ep must be in (0, 1], got {self.ep}")
        if self.sp > self.ep:
            raise InvalidParamsError("sp must be ≤ ep")
        if not 0.0 < self.alpha <= 1.0:
            raise InvalidParamsError(f"alpha must be in (0, 1], got {self.alpha}")
        if int(self.T) != self.T or self.T < 1:
            raise InvalidParamsError(f"T must be a positive integer, got {self.T}")


def cyclical_sizes(sp, ep=None, alpha=None, T=None):
    """Cyclical dataset fractions for ``T`` epochs.

    Accepts either a :class:`ScheduleParams` or the four values positionally.

    The run is treated as rising while the last appended fraction is strictly
    greater than the one before it; at ``sp`` the fraction always rises and
    at ``ep`` it always falls.

    >>> cyclical_sizes(0.25, 1.0, 0.5, 7)
    [0.25, 0.5, 1.0, 0.5, 0.25, 0.5, 1.0]
    """
    params = sp if isinstance(sp, ScheduleParams) else ScheduleParams(sp, ep, alpha, T)
    sp, ep, alpha = params.sp, params.ep, params.alpha

    sizes = [sp]
    n = sp
    for _ in range(1, int(params.T)):
        rising = len(sizes) >= 2 and sizes[-1] > sizes[-2]
        if n == sp or (rising and n != ep):
            n = min(n * (1.0 / alpha), ep)
        else:
            n = max(n * alpha, sp)
        sizes.append(n)
    return sizes


def constant_sizes(p, T):
    if not 0.0 < p <= 1.0:
        raise InvalidParamsError(f"p must be in (0, 1], got {p}")
    if int(T) != T or T < 1:
        raise InvalidParamsError(f"T must be a positive integer, got {T}")
    return [float(p)] * int(T)


def monotonic_sizes(sp, ep, T, stages, direction="increasing"):
    """Step schedule of ``stages`` plateaus linearly spaced from ``sp`` to ``ep``.

    Plateaus are ``T // stages`` epochs long; the last one absorbs the
    remainder. ``direction="decreasing"`` reverses the sequence.
    """
    if not (0.0 < sp <= 1.0 and 0.0 < ep <= 1.0) or sp > ep:
        raise InvalidParamsError("need 0 < sp <= ep <= 1")
    if int(T) != T or T < 1:
        raise InvalidParamsError(f"T must be a positive integer, got {T}")
    if int(stages) != stages or not 1 <= stages <= T:
        raise InvalidParamsError(f"stages must be an integer in [1, T], got {stages}")
    if direction not in ("increasing", "decreasing"):
        raise InvalidParamsError(f"unknown direction {direction!r}")

    T, stages = int(T), int(stages)
    if stages == 1:
        levels = [ep]
    else:
        step = (ep - sp) / (stages - 1)
        levels = [sp + i * step for i in range(stages - 1)] + [ep]
    width = T // stages
    sizes = []
    for i, level in enumerate(levels):
        length = width if i < stages - 1 else T - width * (stages - 1)
        sizes.extend([level] * length)
    if direction == "decreasing":
        sizes.reverse()
    return sizes
