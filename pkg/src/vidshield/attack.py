"""Periodic image insertion.

One adversary picture is placed into the clip at instants
``phase + k * period`` (seconds, on the original timeline). In ``replace``
mode it overwrites the frame showing at that instant; in ``insert`` mode it
is spliced in just before that frame, lengthening the clip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from .video_io import Frame, VideoClip, as_fraction, fit_image

__all__ = ["AttackMode", "AttackConfig", "target_indices", "apply_attack", "insertion_rate"]


class AttackMode(str, Enum):
    REPLACE = "replace"
    INSERT = "insert"


@dataclass(frozen=True)
class AttackConfig:
    """Where and how to place the picture.

    ``phase`` is reduced modulo ``period`` on construction.
    """

    image: Frame
    period: Fraction
    phase: Fraction = Fraction(0)
    mode: AttackMode = AttackMode.REPLACE

    def __post_init__(self):
        period = as_fraction(self.period)
        phase = as_fraction(self.phase)
        if period <= 0:
            raise ValueError("period must be positive")
        if phase < 0:
            raise ValueError("phase must be non-negative")
        object.__setattr__(self, "period", period)
        object.__setattr__(self, "phase", phase % period)
        object.__setattr__(self, "mode", AttackMode(self.mode))


def target_indices(cfg: AttackConfig, clip: VideoClip) -> list[int]:
    """Frame index ``floor(t_k * fps)`` for every target instant before the clip ends.

    Several instants can land on one frame when the period is shorter than a
    frame; each is listed.
    """
    out = []
    duration = clip.duration
    t = cfg.phase
    while t < duration:
        out.append(math.floor(t * clip.fps))
        t += cfg.period
    return out


def apply_attack(clip: VideoClip, cfg: AttackConfig) -> VideoClip:
    picture = fit_image(cfg.image, clip.width, clip.height).pixels
    targets = target_indices(cfg, clip)
    if cfg.mode is AttackMode.REPLACE:
        data = clip.data.copy()
        data[sorted(set(targets))] = picture
        return VideoClip(data, clip.fps)

    frames = list(clip.data)
    # back to front so earlier indices stay valid
    for idx in sorted(targets, reverse=True):
        frames.insert(idx, picture)
    return VideoClip(np.stack(frames), clip.fps)


def insertion_rate(cfg: AttackConfig, clip: VideoClip) -> float:
    """Fraction of frames in the attacked clip that are the adversary's picture."""
    targets = target_indices(cfg, clip)
    if cfg.mode is AttackMode.REPLACE:
        return float(Fraction(len(set(targets)), clip.frame_count))
    return float(Fraction(len(targets), clip.frame_count + len(targets)))
