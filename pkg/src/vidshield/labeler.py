"""Per-frame colour-histogram features and a nearest-centroid labeler."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InsufficientLabels
from .video_io import Frame

__all__ = [
    "N_BINS",
    "DEFAULT_TEMPERATURE",
    "LabelScore",
    "LabelModel",
    "extract_features",
    "train",
    "classify",
    "l1",
    "rank_scores",
]

N_BINS = 64
DEFAULT_TEMPERATURE = 0.05


@dataclass(frozen=True)
class LabelScore:
    label: str
    confidence: float


def rank_scores(scores: Mapping[str, float]) -> list[LabelScore]:
    """Order by descending score, ties broken by ascending label."""
    return [LabelScore(k, v) for k, v in sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))]


def l1(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.abs(np.asarray(a) - np.asarray(b)).sum())


def extract_features(frame: Frame | np.ndarray) -> np.ndarray:
    """4x4x4 joint RGB histogram, L1-normalised to sum to one.

    Bin index is ``(R >> 6) * 16 + (G >> 6) * 4 + (B >> 6)``.
    """
    px = frame.pixels if isinstance(frame, Frame) else np.asarray(frame)
    q = (px >> 6).astype(np.intp)
    idx = q[..., 0] * 16 + q[..., 1] * 4 + q[..., 2]
    counts = np.bincount(idx.ravel(), minlength=N_BINS)
    return counts / idx.size


@dataclass(frozen=True)
class LabelModel:
    """Label prototypes in histogram space plus the softmax temperature.

    ``labels`` is kept sorted so the prototype matrix row order never depends
    on insertion order.
    """

    labels: tuple[str, ...]
    prototypes: np.ndarray
    temperature: float = DEFAULT_TEMPERATURE

    def __post_init__(self):
        protos = np.array(self.prototypes, dtype=np.float64)
        if len(self.labels) < 2:
            raise InsufficientLabels("a model needs at least two labels")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("duplicate labels")
        if protos.shape != (len(self.labels), N_BINS):
            raise ValueError(f"prototype matrix must be ({len(self.labels)}, {N_BINS})")
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        if (protos < 0).any() or not np.allclose(protos.sum(axis=1), 1.0, rtol=0, atol=1e-9):
            raise ValueError("prototypes must be non-negative and sum to one")
        order = sorted(range(len(self.labels)), key=lambda i: self.labels[i])
        protos = protos[order]
        protos.flags.writeable = False
        object.__setattr__(self, "labels", tuple(self.labels[i] for i in order))
        object.__setattr__(self, "prototypes", protos)

    @classmethod
    def from_mapping(
        cls, prototypes: Mapping[str, Sequence[float]], temperature: float = DEFAULT_TEMPERATURE
    ) -> "LabelModel":
        labels = tuple(prototypes)
        return cls(labels, np.array([prototypes[k] for k in labels]), temperature)

    def prototype(self, label: str) -> np.ndarray:
        return self.prototypes[self.labels.index(label)]

    def to_json(self) -> str:
        doc = {
            "temperature": self.temperature,
            "prototypes": {k: [float(x) for x in p] for k, p in zip(self.labels, self.prototypes)},
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str | bytes) -> "LabelModel":
        doc = json.loads(text)
        try:
            return cls.from_mapping(doc["prototypes"], float(doc["temperature"]))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed model document: {exc}") from exc


def train(
    refs: Iterable[tuple[str, Frame]], temperature: float = DEFAULT_TEMPERATURE
) -> LabelModel:
    """Build one prototype per label: the re-normalised mean reference histogram."""
    feats: dict[str, list[np.ndarray]] = {}
    for label, image in refs:
        feats.setdefault(label, []).append(extract_features(image))
    if len(feats) < 2:
        raise InsufficientLabels(f"need at least 2 distinct labels, got {len(feats)}")
    protos = {}
    for label, fs in feats.items():
        mean = np.mean(fs, axis=0)
        protos[label] = mean / mean.sum()
    return LabelModel.from_mapping(protos, temperature)


def classify(model: LabelModel, features: np.ndarray) -> list[LabelScore]:
    """Softmax over negative L1 distances to every prototype, ranked."""
    dist = np.abs(model.prototypes - np.asarray(features, dtype=np.float64)).sum(axis=1)
    # shifting by the minimum keeps the largest exponent at exactly 1
    logits = -(dist - dist.min()) / model.temperature
    weights = [math.exp(x) for x in logits]
    total = math.fsum(weights)
    return rank_scores({label: w / total for label, w in zip(model.labels, weights)})
