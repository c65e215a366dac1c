"""vidshield: periodic image-insertion attacks on a simulated video annotator.

The victim samples one frame per second, labels it with a colour-histogram
nearest-centroid classifier, detects shot changes between samples and
aggregates labels per shot and per video. :mod:`vidshield.attack` splices a
picture into the clip at a low periodic rate; :mod:`vidshield.defense`
provides aggregation rules that resist it; :mod:`vidshield.harness` measures
both.
"""

from .annotator import AnnotationResult, AnnotatorConfig, Shot, annotate, detect_shots, sample_frames
from .attack import AttackConfig, AttackMode, apply_attack, insertion_rate
from .corpus import CorpusSpec, SceneSpec, Texture, default_corpus_spec, generate_clip, generate_reference_images
from .defense import Aggregation, DefenseParams
from .harness import AttackMetrics, SweepSpec, default_model, evaluate, run_sweep
from .labeler import LabelModel, LabelScore, classify, extract_features, train
from .video_io import Frame, Image, VideoClip, fit_image, parse_ppm, parse_y4m, write_ppm, write_y4m

__version__ = "0.1.0"

__all__ = [
    "AnnotationResult",
    "AnnotatorConfig",
    "Shot",
    "annotate",
    "detect_shots",
    "sample_frames",
    "AttackConfig",
    "AttackMode",
    "apply_attack",
    "insertion_rate",
    "CorpusSpec",
    "SceneSpec",
    "Texture",
    "default_corpus_spec",
    "generate_clip",
    "generate_reference_images",
    "Aggregation",
    "DefenseParams",
    "AttackMetrics",
    "SweepSpec",
    "default_model",
    "evaluate",
    "run_sweep",
    "LabelModel",
    "LabelScore",
    "classify",
    "extract_features",
    "train",
    "Frame",
    "Image",
    "VideoClip",
    "fit_image",
    "parse_ppm",
    "parse_y4m",
    "write_ppm",
    "write_y4m",
]
