"""Small validation helpers shared by the parameter dataclasses."""

from __future__ import annotations


def check_prob(name: str, p) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {p}")
    return p


def check_interval(
    name: str,
    interval,
    *,
    minimum: float | None = None,
    positive: bool = False,
) -> tuple[float, float]:
    """Validate a (lo, hi) real interval with lo <= hi."""
    try:
        lo, hi = (float(x) for x in interval)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{name} must be a (lo, hi) pair, got {interval!r}") from exc
    if lo > hi:
        raise ValueError(f"{name} is not well-ordered: {lo} > {hi}")
    if positive and lo <= 0.0:
        raise ValueError(f"{name} must be > 0, got lower bound {lo}")
    if minimum is not None and lo < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got lower bound {lo}")
    return (lo, hi)


def check_triple(name: str, values, *, probs: bool = False, nonnegative: bool = False):
    try:
        t = tuple(float(x) for x in values)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{name} must be a triple of reals, got {values!r}") from exc
    if len(t) != 3:
        raise ValueError(f"{name} must have exactly 3 entries, got {len(t)}")
    for x in t:
        if probs and not 0.0 <= x <= 1.0:
            raise ValueError(f"{name} entries must be in [0, 1], got {x}")
        if nonnegative and x < 0.0:
            raise ValueError(f"{name} entries must be >= 0, got {x}")
    return t
