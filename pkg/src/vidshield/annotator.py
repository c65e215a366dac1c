"""Simulated video annotation service.

The pipeline samples frames at a fixed rate, labels each sample, splits the
sample sequence into shots wherever consecutive histograms jump, and then
reports labels per shot and for the whole video. Only the sampled frames are
ever looked at under the default (count-weighted) aggregation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .defense import (
    Aggregation,
    DefenseParams,
    aggregate_duration_weighted,
    filter_min_run,
    reject_isolated_frames,
)
from .labeler import LabelModel, LabelScore, classify, extract_features, l1, rank_scores
from .video_io import Frame, VideoClip, as_fraction

__all__ = [
    "AnnotatorConfig",
    "Sample",
    "Shot",
    "AnnotationResult",
    "sample_times",
    "sample_frames",
    "detect_shots",
    "annotate",
]


@dataclass(frozen=True)
class AnnotatorConfig:
    sample_rate: Fraction = Fraction(1)
    shot_threshold: float = 0.4
    top_k_video: int = 7
    top_k_shot: int = 3
    aggregation: Aggregation = Aggregation.COUNT
    defense: DefenseParams = field(default_factory=DefenseParams)

    def __post_init__(self):
        object.__setattr__(self, "sample_rate", as_fraction(self.sample_rate))
        object.__setattr__(self, "aggregation", Aggregation(self.aggregation))
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if not 0 < self.shot_threshold < 2:
            raise ValueError("shot_threshold must lie in (0, 2)")
        if self.top_k_video < 1 or self.top_k_shot < 1:
            raise ValueError("top_k values must be at least 1")


@dataclass(frozen=True)
class Sample:
    time: Fraction
    index: int
    features: np.ndarray
    scores: tuple[LabelScore, ...]

    @property
    def top(self) -> LabelScore:
        return self.scores[0]


@dataclass(frozen=True)
class Shot:
    start: Fraction
    end: Fraction
    labels: tuple[LabelScore, ...]

    @property
    def duration(self) -> Fraction:
        return self.end - self.start


@dataclass(frozen=True)
class AnnotationResult:
    video_labels: tuple[LabelScore, ...]
    shots: tuple[Shot, ...]
    shot_changes: tuple[Fraction, ...]
    # set when the min-run filter removed every sample and was bypassed
    defense_fail_open: bool = False

    def to_dict(self) -> dict:
        def labels(ls):
            return [{"description": s.label, "confidence": s.confidence} for s in ls]

        doc = {
            "videoLabels": labels(self.video_labels),
            "shots": [
                {"startTime": float(s.start), "endTime": float(s.end), "labels": labels(s.labels)}
                for s in self.shots
            ],
            "shotChanges": [float(t) for t in self.shot_changes],
        }
        if self.defense_fail_open:
            doc["defenseFailOpen"] = True
        return doc

    def to_json(self) -> str:
        """Canonical wire form, shared by the CLI and the HTTP service."""
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "AnnotationResult":
        def labels(ls):
            return tuple(LabelScore(d["description"], float(d["confidence"])) for d in ls)

        shots = tuple(
            Shot(Fraction(s["startTime"]), Fraction(s["endTime"]), labels(s["labels"]))
            for s in doc["shots"]
        )
        return cls(
            video_labels=labels(doc["videoLabels"]),
            shots=shots,
            shot_changes=tuple(Fraction(t) for t in doc["shotChanges"]),
            defense_fail_open=bool(doc.get("defenseFailOpen", False)),
        )


def sample_times(clip: VideoClip, rate: Fraction | float) -> list[tuple[Fraction, int]]:
    """``(t, frame_index)`` for t = 0, 1/rate, 2/rate, ... < duration."""
    rate = as_fraction(rate)
    if rate <= 0:
        raise ValueError("rate must be positive")
    duration = clip.duration
    out = []
    k = 0
    while (t := k / rate) < duration:
        out.append((t, math.floor(t * clip.fps)))
        k += 1
    return out


def sample_frames(clip: VideoClip, rate: Fraction | float) -> list[tuple[Fraction, Frame]]:
    return [(t, clip.frame(i)) for t, i in sample_times(clip, rate)]


def detect_shots(features: Sequence[np.ndarray], threshold: float) -> list[int]:
    """Indices ``i + 1`` where ``L1(f[i], f[i + 1]) > threshold``."""
    return [i + 1 for i in range(len(features) - 1) if l1(features[i], features[i + 1]) > threshold]


def _refine_boundary(
    clip: VideoClip, left: Sample, right: Sample, threshold: float
) -> Fraction:
    """Time of the first frame after ``left`` whose histogram departs from it.

    Such a frame exists at or before ``right.index`` because the coarse
    detector already saw the jump there.
    """
    for j in range(left.index + 1, right.index + 1):
        if l1(extract_features(clip.data[j]), left.features) > threshold:
            return j / clip.fps
    return right.time


def _score_samples(samples: Sequence[Sample], top_k: int) -> tuple[LabelScore, ...]:
    scores: dict[str, float] = {}
    for s in samples:
        scores[s.top.label] = scores.get(s.top.label, 0.0) + s.top.confidence
    n = len(samples)
    return tuple(rank_scores({k: v / n for k, v in scores.items()})[:top_k])


def _select(samples: Sequence[Sample], keep: Sequence[bool]) -> list[Sample]:
    return [s for s, k in zip(samples, keep) if k]


def annotate(clip: VideoClip, model: LabelModel, config: AnnotatorConfig | None = None) -> AnnotationResult:
    """Run the whole victim pipeline on ``clip``.

    Duration-weighted aggregation (alone or in ``combo``) additionally
    localises each detected shot change to the exact frame between the two
    samples that straddle it, so a one-frame picture yields a one-frame shot.
    That step reads non-sampled frames; every other mode does not.
    """
    config = config or AnnotatorConfig()
    agg = config.aggregation
    samples = []
    for t, idx in sample_times(clip, config.sample_rate):
        feats = extract_features(clip.data[idx])
        samples.append(Sample(t, idx, feats, tuple(classify(model, feats))))

    fail_open = False
    if agg in (Aggregation.ISOLATED, Aggregation.COMBO):
        keep = reject_isolated_frames([s.features for s in samples], config.defense.isolation)
        samples = _select(samples, keep)
    if agg in (Aggregation.MIN_RUN, Aggregation.COMBO):
        keep, fail_open = filter_min_run([s.top.label for s in samples], config.defense.min_run)
        samples = _select(samples, keep)

    refine = agg in (Aggregation.DURATION, Aggregation.COMBO)
    cuts = detect_shots([s.features for s in samples], config.shot_threshold)
    changes = []
    for i in cuts:
        if refine:
            changes.append(_refine_boundary(clip, samples[i - 1], samples[i], config.shot_threshold))
        else:
            changes.append(samples[i].time)

    edges = [0] + cuts + [len(samples)]
    times = [Fraction(0)] + changes + [clip.duration]
    shots = tuple(
        Shot(times[j], times[j + 1], _score_samples(samples[edges[j] : edges[j + 1]], config.top_k_shot))
        for j in range(len(edges) - 1)
    )

    if refine:
        video = tuple(aggregate_duration_weighted(shots, clip.duration)[: config.top_k_video])
    else:
        video = _score_samples(samples, config.top_k_video)
    return AnnotationResult(video, shots, tuple(changes), fail_open)
