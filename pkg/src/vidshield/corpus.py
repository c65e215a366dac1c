"""Deterministic synthetic videos with known scene structure.

Every label owns one cell of the 4x4x4 RGB histogram grid. Scenes and
reference pictures only ever use colours from the interior of their label's
cell, snapped to fixed points of the YUV round trip, so clips survive a
Y4M write/parse cycle pixel-exactly and labels stay histogram-separable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidSpec
from .video_io import Frame, VideoClip, as_fraction, snap_to_fixed_point

__all__ = [
    "Texture",
    "SceneSpec",
    "CorpusSpec",
    "GroundTruthSegment",
    "DEFAULT_PALETTES",
    "CONTENT_LABELS",
    "IMAGE_LABELS",
    "default_corpus_spec",
    "generate_clip",
    "generate_reference_images",
    "ground_truth_to_json",
]

# Scene labels stand in for the content of benign footage; image labels for
# the adversary's pictures (car, building, food plate, laptop).
DEFAULT_PALETTES: dict[str, tuple[int, int, int]] = {
    "animal": (160, 96, 32),
    "forest": (32, 160, 32),
    "ocean": (32, 96, 224),
    "car": (224, 32, 32),
    "building": (160, 160, 160),
    "food-plate": (224, 224, 96),
    "laptop": (32, 32, 32),
}
CONTENT_LABELS = ("animal", "forest", "ocean")
IMAGE_LABELS = ("car", "building", "food-plate", "laptop")

_MARGIN = 8  # keeps channel values away from histogram cell edges
_SHADE = 20
_BLOCK_COUNT = 4


class Texture(str, Enum):
    FLAT = "flat"
    GRADIENT = "gradient"
    MOVING_BLOCKS = "moving-blocks"


@dataclass(frozen=True)
class SceneSpec:
    label: str
    duration: Fraction
    palette: tuple[int, int, int]
    texture: Texture = Texture.FLAT
    motion_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "duration", as_fraction(self.duration))
        object.__setattr__(self, "texture", Texture(self.texture))
        object.__setattr__(self, "palette", tuple(int(c) for c in self.palette))
        if self.duration <= 0:
            raise InvalidSpec(f"scene {self.label!r} has non-positive duration")
        if len(self.palette) != 3 or not all(0 <= c <= 255 for c in self.palette):
            raise InvalidSpec(f"scene {self.label!r} palette must be an RGB triple")


@dataclass(frozen=True)
class CorpusSpec:
    scenes: tuple[SceneSpec, ...]
    fps: Fraction = Fraction(25)
    width: int = 64
    height: int = 64
    rng_seed: int = 0
    name: str = "clip"

    def __post_init__(self):
        object.__setattr__(self, "scenes", tuple(self.scenes))
        object.__setattr__(self, "fps", as_fraction(self.fps))
        if not self.scenes:
            raise InvalidSpec("corpus needs at least one scene")
        if self.fps <= 0 or self.width < 1 or self.height < 1:
            raise InvalidSpec("fps and frame size must be positive")

    @property
    def duration(self) -> Fraction:
        return sum((s.duration for s in self.scenes), Fraction(0))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "scenes": [
                {
                    "label": s.label,
                    "duration": str(s.duration),
                    "palette": list(s.palette),
                    "texture": s.texture.value,
                    "motion_seed": s.motion_seed,
                }
                for s in self.scenes
            ],
            "fps": f"{self.fps.numerator}/{self.fps.denominator}",
            "width": self.width,
            "height": self.height,
            "seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "CorpusSpec":
        try:
            scenes = []
            for s in doc["scenes"]:
                palette = s.get("palette")
                if palette is None:
                    palette = _palette_for(s["label"], None)
                scenes.append(
                    SceneSpec(
                        label=s["label"],
                        duration=s["duration"],
                        palette=tuple(palette),
                        texture=s.get("texture", "flat"),
                        motion_seed=int(s.get("motion_seed", 0)),
                    )
                )
            return cls(
                scenes=tuple(scenes),
                fps=doc.get("fps", 25),
                width=int(doc.get("width", 64)),
                height=int(doc.get("height", 64)),
                rng_seed=int(doc.get("seed", 0)),
                name=str(doc.get("name", "clip")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidSpec):
                raise
            raise InvalidSpec(f"malformed corpus spec: {exc}") from exc


@dataclass(frozen=True)
class GroundTruthSegment:
    label: str
    start: Fraction
    end: Fraction


def default_corpus_spec(seed: int = 0) -> CorpusSpec:
    """60 s at 25 fps, 64x64, three 20 s scenes."""
    textures = (Texture.MOVING_BLOCKS, Texture.GRADIENT, Texture.MOVING_BLOCKS)
    scenes = tuple(
        SceneSpec(label, Fraction(20), DEFAULT_PALETTES[label], tex, motion_seed=i)
        for i, (label, tex) in enumerate(zip(CONTENT_LABELS, textures))
    )
    return CorpusSpec(scenes=scenes, fps=Fraction(25), width=64, height=64, rng_seed=seed, name="default")


def _cell_bounds(color: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lo = (np.asarray(color, dtype=np.int64) >> 6) << 6
    return lo + _MARGIN, lo + 63 - _MARGIN


def _in_cell(base: np.ndarray, colors: np.ndarray) -> np.ndarray:
    """Clamp ``colors`` into the interior of ``base``'s histogram cell and snap."""
    lo, hi = _cell_bounds(base)
    clamped = np.clip(np.asarray(colors, dtype=np.int64), lo, hi).astype(np.uint8)
    return snap_to_fixed_point(clamped)


def _render_scene(
    scene: SceneSpec, n_frames: int, width: int, height: int, rng: np.random.Generator
) -> np.ndarray:
    base = np.array(scene.palette, dtype=np.int64)
    out = np.empty((n_frames, height, width, 3), dtype=np.uint8)
    if scene.texture is Texture.FLAT:
        out[:] = _in_cell(base, base)
        return out

    if scene.texture is Texture.GRADIENT:
        # horizontal ramp that scrolls one pixel per frame
        ramp = np.linspace(-_SHADE, _SHADE, width).round().astype(np.int64)
        colors = _in_cell(base, base[None, :] + ramp[:, None])  # (width, 3)
        for t in range(n_frames):
            out[t] = np.roll(colors, t, axis=0)[None, :, :]
        return out

    background = _in_cell(base, base)
    accent = _in_cell(base, base + _SHADE if base.mean() < 128 else base - _SHADE)
    size = max(1, min(width, height) // 5)
    pos = rng.integers(0, [height, width], size=(_BLOCK_COUNT, 2))
    vel = rng.choice([-2, -1, 1, 2], size=(_BLOCK_COUNT, 2))
    rows = np.arange(size)
    for t in range(n_frames):
        frame = out[t]
        frame[:] = background
        p = (pos + vel * t) % [height, width]
        for r0, c0 in p:
            rr = (r0 + rows) % height
            cc = (c0 + rows) % width
            frame[np.ix_(rr, cc)] = accent
    return out


def generate_clip(spec: CorpusSpec) -> tuple[VideoClip, list[GroundTruthSegment]]:
    """Render the scenes back to back; identical specs give identical pixels."""
    counts = []
    for scene in spec.scenes:
        n = scene.duration * spec.fps
        if n.denominator != 1 or n < 1:
            raise InvalidSpec(
                f"scene {scene.label!r}: duration {scene.duration} s at {spec.fps} fps "
                "is not a whole number of frames"
            )
        counts.append(int(n))

    parts = []
    truth = []
    start = Fraction(0)
    for scene, n in zip(spec.scenes, counts):
        rng = np.random.default_rng([spec.rng_seed, scene.motion_seed])
        parts.append(_render_scene(scene, n, spec.width, spec.height, rng))
        truth.append(GroundTruthSegment(scene.label, start, start + scene.duration))
        start += scene.duration
    return VideoClip(np.concatenate(parts), spec.fps), truth


def ground_truth_to_json(truth: Sequence[GroundTruthSegment]) -> str:
    doc = [{"label": g.label, "start_s": float(g.start), "end_s": float(g.end)} for g in truth]
    return json.dumps(doc, indent=2) + "\n"


def _palette_for(label: str, palettes: Mapping[str, Sequence[int]] | None) -> tuple[int, int, int]:
    table = DEFAULT_PALETTES if palettes is None else {**DEFAULT_PALETTES, **palettes}
    if label not in table:
        raise InvalidSpec(f"no palette known for label {label!r}")
    return tuple(int(c) for c in table[label])


def generate_reference_images(
    labels: Sequence[str],
    per_label: int,
    seed: int = 0,
    *,
    width: int = 64,
    height: int = 64,
    palettes: Mapping[str, Sequence[int]] | None = None,
) -> list[tuple[str, Frame]]:
    """Reference pictures per label, from the same colour family as its scenes."""
    if per_label < 1:
        raise InvalidSpec("per_label must be at least 1")
    out = []
    for li, label in enumerate(labels):
        base = np.array(_palette_for(label, palettes), dtype=np.int64)
        rng = np.random.default_rng([seed, li])
        for k in range(per_label):
            jitter = rng.integers(-_SHADE // 2, _SHADE // 2 + 1, size=3)
            texture = list(Texture)[int(rng.integers(len(Texture)))]
            scene = SceneSpec(
                label,
                Fraction(1),
                tuple(int(c) for c in _in_cell(base, base + jitter)),
                texture,
                motion_seed=k,
            )
            pixels = _render_scene(scene, 1, width, height, rng)[0]
            out.append((label, Frame(pixels)))
    return out
