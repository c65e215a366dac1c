"""Command-line entry point: ``vidshield <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

from . import corpus as corpus_mod
from .annotator import AnnotatorConfig, annotate
from .attack import AttackConfig, AttackMode, apply_attack
from .defense import parse_defense
from .errors import VidshieldError
from .harness import SweepSpec, default_sweep_spec, evaluate, rows_to_csv, rows_to_json, run_sweep
from .labeler import DEFAULT_TEMPERATURE, LabelModel, train
from .service import MODEL_ENV_VAR, DEFAULT_MAX_BODY, ServiceConfig, create_app, model_path_from_env
from .video_io import as_fraction, parse_ppm, parse_y4m, write_ppm, write_y4m

log = logging.getLogger("vidshield")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(2, f"{self.prog}: error: {message} (try --help)\n")


class _CliError(Exception):
    pass


def _fraction(text: str):
    try:
        value = as_fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    return value


def _defense(text: str):
    try:
        return parse_defense(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _csv_list(kind):
    def parse(text: str):
        return [kind(item) for item in text.split(",") if item.strip()]

    return parse


def _add_annotator_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sample-rate", type=_fraction, default=as_fraction(1), help="samples per second")
    p.add_argument("--threshold", type=float, default=0.4, help="shot-change L1 threshold")
    p.add_argument("--top-k-video", type=int, default=7)
    p.add_argument("--top-k-shot", type=int, default=3)
    p.add_argument(
        "--defense",
        type=_defense,
        default=parse_defense("none"),
        metavar="none|duration|minrun:<m>|isolated:<k>|combo",
    )


def _annotator_config(args) -> AnnotatorConfig:
    agg, params = args.defense
    return AnnotatorConfig(
        sample_rate=args.sample_rate,
        shot_threshold=args.threshold,
        top_k_video=args.top_k_video,
        top_k_shot=args.top_k_shot,
        aggregation=agg,
        defense=params,
    )


def _model_path(args) -> Path:
    path = args.model or model_path_from_env()
    if path is None:
        raise _CliError(f"no model given (use --model or set {MODEL_ENV_VAR})")
    return Path(path)


def _load_model(args) -> LabelModel:
    return LabelModel.from_json(_model_path(args).read_text())


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen_corpus(args) -> int:
    if args.spec:
        spec = corpus_mod.CorpusSpec.from_dict(json.loads(Path(args.spec).read_text()))
        if args.seed is not None:
            spec = corpus_mod.CorpusSpec(spec.scenes, spec.fps, spec.width, spec.height, args.seed, spec.name)
    else:
        spec = corpus_mod.default_corpus_spec(args.seed or 0)
    seed = spec.rng_seed
    out = Path(args.out)
    (out / "refs").mkdir(parents=True, exist_ok=True)
    (out / "images").mkdir(exist_ok=True)

    clip, truth = corpus_mod.generate_clip(spec)
    (out / f"{spec.name}.y4m").write_bytes(write_y4m(clip))
    (out / "groundtruth.json").write_text(corpus_mod.ground_truth_to_json(truth))
    (out / "corpus.json").write_text(json.dumps(spec.to_dict(), indent=2) + "\n")

    labels = list(dict.fromkeys([*corpus_mod.DEFAULT_PALETTES, *(s.label for s in spec.scenes)]))
    palettes = {s.label: s.palette for s in spec.scenes if s.label not in corpus_mod.DEFAULT_PALETTES}
    refs = corpus_mod.generate_reference_images(
        labels, args.per_label, seed, width=spec.width, height=spec.height, palettes=palettes
    )
    manifest = []
    counters: dict[str, int] = {}
    for label, image in refs:
        k = counters[label] = counters.get(label, -1) + 1
        rel = f"refs/{label}_{k}.ppm"
        (out / rel).write_bytes(write_ppm(image))
        manifest.append({"label": label, "path": rel})
    (out / "refs.json").write_text(json.dumps(manifest, indent=2) + "\n")

    # attack pictures come from a different seed than the training references
    for label, image in corpus_mod.generate_reference_images(
        corpus_mod.IMAGE_LABELS, 1, seed + 1, width=spec.width, height=spec.height
    ):
        (out / "images" / f"{label}.ppm").write_bytes(write_ppm(image))
    log.info("wrote corpus %s to %s", spec.name, out)
    return 0


def cmd_train(args) -> int:
    manifest_path = Path(args.refs)
    entries = json.loads(manifest_path.read_text())
    refs = []
    for entry in entries:
        path = manifest_path.parent / entry["path"]
        refs.append((entry["label"], parse_ppm(path.read_bytes())))
    model = train(refs, temperature=args.temperature)
    _write_text(args.out, model.to_json())
    return 0


def cmd_annotate(args) -> int:
    model = _load_model(args)
    clip = parse_y4m(Path(args.input).read_bytes())
    _write_text(args.out, annotate(clip, model, _annotator_config(args)).to_json())
    return 0


def _attack_config(args) -> AttackConfig:
    image = parse_ppm(Path(args.image).read_bytes())
    return AttackConfig(image, args.period, args.phase, AttackMode(args.mode))


def cmd_attack(args) -> int:
    clip = parse_y4m(Path(args.input).read_bytes())
    attacked = apply_attack(clip, _attack_config(args))
    Path(args.out).write_bytes(write_y4m(attacked))
    return 0


def cmd_evaluate(args) -> int:
    model = _load_model(args)
    clip = parse_y4m(Path(args.input).read_bytes())
    atk = _attack_config(args)
    config = _annotator_config(args)
    labels = args.label or [Path(args.image).stem]
    metrics = evaluate(
        clip, labels, annotate(apply_attack(clip, atk), model, config), annotate(clip, model, config), atk
    )
    _write_text(args.out, json.dumps(asdict(metrics), indent=2) + "\n")
    return 0


def cmd_sweep(args) -> int:
    base = default_sweep_spec(args.seed)
    spec = SweepSpec(
        clips=base.clips,
        images=base.images,
        model=base.model,
        periods=args.periods or base.periods,
        phases=args.phases or base.phases,
        modes=args.modes or base.modes,
        defenses=args.defenses or base.defenses,
    )
    rows = run_sweep(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(rows_to_csv(rows))
    (out / "sweep.json").write_text(rows_to_json(rows))
    log.info("wrote %d rows to %s", len(rows), out)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    config = ServiceConfig(
        host=args.host,
        port=args.port,
        model_path=_model_path(args),
        annotator=_annotator_config(args),
        max_body=args.max_body,
    )
    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vidshield", description="Image-insertion attack workbench.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-corpus", help="render a synthetic clip plus reference pictures")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--spec", help="corpus spec JSON (default: 60 s, 3 scenes)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--per-label", type=int, default=3)
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("train", help="fit the labeler on reference pictures")
    p.add_argument("--refs", required=True, help="manifest JSON: [{label, path}, ...]")
    p.add_argument("--out", required=True)
    p.add_argument("--temperature", type=float, default=DEFAULT_TEMPERATURE)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("annotate", help="annotate a Y4M clip")
    p.add_argument("--model")
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    _add_annotator_flags(p)
    p.set_defaults(func=cmd_annotate)

    for name, func, help_text in (
        ("attack", cmd_attack, "insert a picture periodically into a clip"),
        ("evaluate", cmd_evaluate, "attack a clip and report metrics"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--input", required=True)
        p.add_argument("--image", required=True, help="PPM picture to insert")
        p.add_argument("--period", type=_fraction, required=True, help="seconds between insertions")
        p.add_argument("--phase", type=_fraction, default=as_fraction(0))
        p.add_argument("--mode", choices=[m.value for m in AttackMode], default="replace")
        p.set_defaults(func=func)
        if name == "attack":
            p.add_argument("--out", required=True)
        else:
            p.add_argument("--model")
            p.add_argument("--label", action="append", help="label(s) of the inserted picture")
            p.add_argument("--out")
            _add_annotator_flags(p)

    p = sub.add_parser("sweep", help="run the attack/defense grid on the default corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--periods", type=_csv_list(as_fraction))
    p.add_argument("--phases", type=_csv_list(as_fraction))
    p.add_argument("--modes", type=_csv_list(AttackMode))
    p.add_argument("--defenses", type=_csv_list(str))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("serve", help="serve the annotator over HTTP")
    p.add_argument("--model")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--max-body", type=int, default=DEFAULT_MAX_BODY)
    _add_annotator_flags(p)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (VidshieldError, _CliError, OSError, ValueError, KeyError) as exc:
        kind = type(exc).__name__
        print(f"vidshield: error: {kind}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
