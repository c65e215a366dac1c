"""Robust aggregation against periodic image insertion.

Inserted pictures show up as temporally isolated samples. Each strategy here
exploits that signature after classification, without looking at the
pictures themselves:

* :func:`reject_isolated_frames` drops a sample that disagrees with two
  neighbours which agree with each other.
* :func:`filter_min_run` keeps only samples inside runs of identical labels
  of length ``m`` or more, failing open when nothing would survive.
* :func:`aggregate_duration_weighted` scores video labels by how much of the
  timeline each shot covers rather than how many samples it holds.

Strategies compose in that order (``combo``).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Protocol, Sequence

import numpy as np

from .labeler import LabelScore, l1, rank_scores

__all__ = [
    "Aggregation",
    "DefenseParams",
    "parse_defense",
    "defense_name",
    "reject_isolated_frames",
    "filter_min_run",
    "aggregate_duration_weighted",
]


class Aggregation(str, Enum):
    COUNT = "count-weighted"
    DURATION = "duration-weighted"
    MIN_RUN = "min-run"
    ISOLATED = "isolated-frame-reject"
    COMBO = "combo"


@dataclass(frozen=True)
class DefenseParams:
    min_run: int = 2
    isolation: float = 0.4

    def __post_init__(self):
        if self.min_run < 1:
            raise ValueError("min_run must be at least 1")
        if not 0 < self.isolation < 2:
            raise ValueError("isolation threshold must lie in (0, 2)")


def parse_defense(text: str) -> tuple[Aggregation, DefenseParams]:
    """Parse ``none|duration|minrun:<m>|isolated:<k>|combo``."""
    name, _, arg = text.strip().partition(":")
    try:
        if name == "none" and not arg:
            return Aggregation.COUNT, DefenseParams()
        if name == "duration" and not arg:
            return Aggregation.DURATION, DefenseParams()
        if name == "combo" and not arg:
            return Aggregation.COMBO, DefenseParams()
        if name == "minrun":
            return Aggregation.MIN_RUN, DefenseParams(min_run=int(arg) if arg else 2)
        if name == "isolated":
            return Aggregation.ISOLATED, DefenseParams(isolation=float(arg) if arg else 0.4)
    except ValueError as exc:
        raise ValueError(f"invalid defense {text!r}: {exc}") from exc
    raise ValueError(f"unknown defense {text!r}")


def defense_name(aggregation: Aggregation, params: DefenseParams) -> str:
    """Inverse of :func:`parse_defense`."""
    if aggregation is Aggregation.MIN_RUN:
        return f"minrun:{params.min_run}"
    if aggregation is Aggregation.ISOLATED:
        return f"isolated:{params.isolation:g}"
    return {
        Aggregation.COUNT: "none",
        Aggregation.DURATION: "duration",
        Aggregation.COMBO: "combo",
    }[aggregation]


def reject_isolated_frames(features: Sequence[np.ndarray], isolation: float) -> list[bool]:
    """Keep-mask: False for samples that are outliers between two similar neighbours.

    Endpoints are always kept; with fewer than three samples nothing is rejected.
    """
    n = len(features)
    keep = [True] * n
    for i in range(1, n - 1):
        prev, cur, nxt = features[i - 1], features[i], features[i + 1]
        if l1(prev, nxt) <= isolation and l1(cur, prev) > isolation and l1(cur, nxt) > isolation:
            keep[i] = False
    return keep


def filter_min_run(labels: Sequence[str], min_run: int) -> tuple[list[bool], bool]:
    """Keep-mask of samples in label runs of length >= ``min_run``.

    Returns ``(keep, fail_open)``. When no sample survives, everything is
    kept and ``fail_open`` is True.
    """
    if min_run < 1:
        raise ValueError("min_run must be at least 1")
    n = len(labels)
    keep = [False] * n
    start = 0
    for i in range(1, n + 1):
        if i == n or labels[i] != labels[start]:
            if i - start >= min_run:
                keep[start:i] = [True] * (i - start)
            start = i
    if n and not any(keep):
        return [True] * n, True
    return keep, False


class _ShotLike(Protocol):
    start: Fraction | float
    end: Fraction | float
    labels: Sequence[LabelScore]


def aggregate_duration_weighted(
    shots: Sequence[_ShotLike], total_duration: Fraction | float | None = None
) -> list[LabelScore]:
    """Video labels from each shot's top label, weighted by shot duration."""
    if total_duration is None:
        total_duration = sum((s.end - s.start for s in shots), Fraction(0))
    total = float(total_duration)
    scores: dict[str, float] = {}
    for shot in shots:
        if not shot.labels:
            continue
        top = shot.labels[0]
        weight = float(shot.end - shot.start) * top.confidence
        scores[top.label] = scores.get(top.label, 0.0) + weight
    return rank_scores({k: v / total for k, v in scores.items()})
