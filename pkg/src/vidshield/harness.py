"""Attack metrics and parameter sweeps."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Collection, Sequence

from .annotator import AnnotationResult, AnnotatorConfig, annotate
from .attack import AttackConfig, AttackMode, apply_attack, insertion_rate
from .corpus import DEFAULT_PALETTES, IMAGE_LABELS, default_corpus_spec, generate_clip, generate_reference_images
from .defense import parse_defense
from .errors import InvalidSpec, LabelSetEmpty
from .labeler import LabelModel, train
from .video_io import Frame, VideoClip, as_fraction

__all__ = [
    "AttackMetrics",
    "SweepSpec",
    "SweepRow",
    "CSV_COLUMNS",
    "evaluate",
    "run_sweep",
    "rows_to_csv",
    "rows_to_json",
    "default_model",
    "default_sweep_spec",
]

CSV_COLUMNS = (
    "clip",
    "image",
    "mode",
    "period_s",
    "phase_s",
    "defense",
    "flipped",
    "top_conf",
    "shot_domination",
    "insertion_rate",
    "shots_base",
    "shots_atk",
)


@dataclass(frozen=True)
class AttackMetrics:
    video_label_flipped: bool
    top_confidence: float
    shot_domination: float
    insertion_rate: float
    shot_count_baseline: int
    shot_count_attacked: int


def evaluate(
    clip: VideoClip,
    image_labels: Collection[str],
    attacked: AnnotationResult,
    baseline: AnnotationResult,
    cfg: AttackConfig,
) -> AttackMetrics:
    """Compare an attacked annotation against the clean one.

    ``clip`` is the original (unattacked) clip; it only feeds the insertion
    rate. Both results must come from the same annotator configuration.
    """
    image_labels = set(image_labels)
    if not image_labels:
        raise LabelSetEmpty("the inserted image needs at least one label")
    top = attacked.video_labels[0] if attacked.video_labels else None
    dominated = sum(1 for s in attacked.shots if s.labels and s.labels[0].label in image_labels)
    return AttackMetrics(
        video_label_flipped=top is not None and top.label in image_labels,
        top_confidence=top.confidence if top else 0.0,
        shot_domination=dominated / len(attacked.shots) if attacked.shots else 0.0,
        insertion_rate=insertion_rate(cfg, clip),
        shot_count_baseline=len(baseline.shots),
        shot_count_attacked=len(attacked.shots),
    )


@dataclass(frozen=True)
class SweepSpec:
    """Cartesian sweep over clips, pictures, modes, periods, phases and defenses.

    ``clips`` are ``(name, clip)`` pairs; ``images`` are ``(name, labels,
    picture)`` triples. ``model`` is the victim's labeler.
    """

    clips: Sequence[tuple[str, VideoClip]]
    images: Sequence[tuple[str, frozenset[str], Frame]]
    model: LabelModel
    periods: Sequence[Fraction] = (Fraction(1, 2), Fraction(1), Fraction(2), Fraction(4))
    phases: Sequence[Fraction] = (Fraction(0), Fraction(1, 4), Fraction(1, 2))
    modes: Sequence[AttackMode] = (AttackMode.REPLACE, AttackMode.INSERT)
    defenses: Sequence[str] = ("none", "duration", "minrun:2", "isolated:0.4", "combo")
    annotator: AnnotatorConfig = field(default_factory=AnnotatorConfig)

    def validate(self) -> None:
        for name in ("clips", "images", "periods", "phases", "modes", "defenses"):
            if not getattr(self, name):
                raise InvalidSpec(f"sweep {name} list is empty")


@dataclass(frozen=True)
class SweepRow:
    clip: str
    image: str
    mode: str
    period_s: float
    phase_s: float
    defense: str
    flipped: bool
    top_conf: float
    shot_domination: float
    insertion_rate: float
    shots_base: int
    shots_atk: int


def run_sweep(spec: SweepSpec) -> list[SweepRow]:
    """Evaluate every cell; rows come out in (clip, image, mode, period, phase, defense) order."""
    spec.validate()
    defenses = [(name, parse_defense(name)) for name in spec.defenses]
    rows = []
    for clip_name, clip in spec.clips:
        baselines = {}
        for name, (agg, params) in defenses:
            cfg = _with_defense(spec.annotator, agg, params)
            baselines[name] = (cfg, annotate(clip, spec.model, cfg))
        for image_name, labels, picture in spec.images:
            for mode in spec.modes:
                for period in spec.periods:
                    for phase in spec.phases:
                        atk = AttackConfig(picture, as_fraction(period), as_fraction(phase), AttackMode(mode))
                        attacked_clip = apply_attack(clip, atk)
                        for name, _ in defenses:
                            cfg, base = baselines[name]
                            m = evaluate(clip, labels, annotate(attacked_clip, spec.model, cfg), base, atk)
                            rows.append(
                                SweepRow(
                                    clip=clip_name,
                                    image=image_name,
                                    mode=atk.mode.value,
                                    period_s=float(period),
                                    phase_s=float(phase),
                                    defense=name,
                                    flipped=m.video_label_flipped,
                                    top_conf=m.top_confidence,
                                    shot_domination=m.shot_domination,
                                    insertion_rate=m.insertion_rate,
                                    shots_base=m.shot_count_baseline,
                                    shots_atk=m.shot_count_attacked,
                                )
                            )
    return rows


def _with_defense(base: AnnotatorConfig, agg, params) -> AnnotatorConfig:
    return AnnotatorConfig(
        sample_rate=base.sample_rate,
        shot_threshold=base.shot_threshold,
        top_k_video=base.top_k_video,
        top_k_shot=base.top_k_shot,
        aggregation=agg,
        defense=params,
    )


def _csv_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        d = asdict(row)
        writer.writerow([_csv_value(d[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def rows_to_json(rows: Sequence[SweepRow]) -> str:
    return json.dumps([asdict(r) for r in rows], indent=2) + "\n"


def default_model(seed: int = 0, per_label: int = 3) -> LabelModel:
    """Labeler trained on reference pictures for every default label."""
    return train(generate_reference_images(list(DEFAULT_PALETTES), per_label, seed))


def default_sweep_spec(seed: int = 0) -> SweepSpec:
    """The default corpus clip attacked with one picture per image label.

    Attack pictures use a different seed from the training references.
    """
    clip, _ = generate_clip(default_corpus_spec(seed))
    pictures = generate_reference_images(IMAGE_LABELS, 1, seed + 1)
    return SweepSpec(
        clips=[("default", clip)],
        images=[(label, frozenset({label}), img) for label, img in pictures],
        model=default_model(seed),
    )
