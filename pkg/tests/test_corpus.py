from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import pytest

from vidshield.corpus import (
    CONTENT_LABELS,
    DEFAULT_PALETTES,
    IMAGE_LABELS,
    CorpusSpec,
    SceneSpec,
    default_corpus_spec,
    generate_clip,
    generate_reference_images,
    ground_truth_to_json,
)
from vidshield.errors import InvalidSpec
from vidshield.labeler import classify, extract_features, l1
from vidshield.video_io import write_y4m


def cell(rgb):
    return tuple(int(c) >> 6 for c in rgb)


def test_flat_red_scene():
    spec = CorpusSpec(scenes=[SceneSpec("red-thing", 2, (255, 0, 0), "flat")], fps=25, width=8, height=8)
    clip, truth = generate_clip(spec)
    assert clip.frame_count == 50
    assert all(np.array_equal(clip.data[0], f) for f in clip.data)
    # every pixel lies in the red histogram cell
    assert np.all(clip.data[..., 0] >= 192) and np.all(clip.data[..., 1:] < 64)
    assert [(g.label, g.start, g.end) for g in truth] == [("red-thing", 0, 2)]


def test_default_clip_layout(default_clip, ground_truth):
    assert default_clip.frame_count == 1500
    assert (default_clip.width, default_clip.height, default_clip.fps) == (64, 64, Fraction(25))
    assert [(g.label, g.start, g.end) for g in ground_truth] == [
        ("animal", 0, 20),
        ("forest", 20, 40),
        ("ocean", 40, 60),
    ]
    # scene boundaries at frames 500 and 1000
    feats = [extract_features(default_clip.data[i]) for i in (499, 500, 999, 1000)]
    assert l1(feats[0], feats[1]) == pytest.approx(2.0)
    assert l1(feats[2], feats[3]) == pytest.approx(2.0)


def test_textures_vary_pixels_but_not_histograms(default_clip):
    # moving blocks and scrolling gradients change pixels frame to frame
    for start in (0, 500, 1000):
        a, b = default_clip.data[start], default_clip.data[start + 1]
        assert not np.array_equal(a, b)
        assert l1(extract_features(a), extract_features(b)) <= 0.4


def test_determinism():
    a, _ = generate_clip(default_corpus_spec(3))
    b, _ = generate_clip(default_corpus_spec(3))
    assert write_y4m(a) == write_y4m(b)
    c, _ = generate_clip(default_corpus_spec(4))
    assert write_y4m(a) != write_y4m(c)


@pytest.mark.parametrize(
    "scenes",
    [[], [SceneSpec("x", Fraction(1, 3), (0, 0, 0))]],
)
def test_invalid_specs(scenes):
    with pytest.raises(InvalidSpec):
        generate_clip(CorpusSpec(scenes=scenes, fps=25))


def test_nonpositive_duration():
    with pytest.raises(InvalidSpec):
        SceneSpec("x", 0, (0, 0, 0))


def test_spec_json_round_trip():
    spec = default_corpus_spec(9)
    assert CorpusSpec.from_dict(spec.to_dict()) == spec


def test_spec_from_dict_uses_default_palette():
    spec = CorpusSpec.from_dict({"scenes": [{"label": "ocean", "duration": 2}], "fps": "25/1"})
    assert spec.scenes[0].palette == DEFAULT_PALETTES["ocean"]
    with pytest.raises(InvalidSpec):
        CorpusSpec.from_dict({"scenes": [{"label": "unknown", "duration": 2}]})


def test_ground_truth_json(ground_truth):
    assert '"start_s": 20.0' in ground_truth_to_json(ground_truth)


class TestReferenceImages:
    def test_count_and_determinism(self):
        a = generate_reference_images(["animal"], 3, seed=5)
        b = generate_reference_images(["animal"], 3, seed=5)
        assert len(a) == 3 and all(l == "animal" for l, _ in a)
        assert all(x == y for (_, x), (_, y) in zip(a, b))

    def test_per_label_zero(self):
        with pytest.raises(InvalidSpec):
            generate_reference_images(["animal"], 0)

    def test_closer_to_own_scene(self, default_clip):
        scene_a = extract_features(default_clip.data[10])  # animal
        scene_b = extract_features(default_clip.data[510])  # forest
        for _, img in generate_reference_images(["animal"], 3, seed=2):
            f = extract_features(img)
            assert l1(f, scene_a) < l1(f, scene_b)

    def test_prototype_separation(self, model):
        for a, b in itertools.combinations(model.labels, 2):
            assert l1(model.prototype(a), model.prototype(b)) >= 0.5

    def test_palettes_occupy_distinct_cells(self):
        cells = [cell(c) for c in DEFAULT_PALETTES.values()]
        assert len(set(cells)) == len(cells)


def test_separability_on_every_frame(default_clip, ground_truth, model):
    """Nearest-centroid labels every un-attacked frame correctly."""
    fps = default_clip.fps
    for g in ground_truth:
        for i in range(int(g.start * fps), int(g.end * fps)):
            assert classify(model, extract_features(default_clip.data[i]))[0].label == g.label


def test_temperature_calibration(default_clip, model):
    # same-palette match vs disjoint palettes should give >= 0.99 confidence
    for i in (0, 600, 1200):
        assert classify(model, extract_features(default_clip.data[i]))[0].confidence >= 0.99
    for label, img in generate_reference_images(IMAGE_LABELS + CONTENT_LABELS, 2, seed=11):
        top = classify(model, extract_features(img))[0]
        assert top.label == label and top.confidence >= 0.99
