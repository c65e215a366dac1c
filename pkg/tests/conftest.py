from __future__ import annotations

import pytest

from vidshield.corpus import IMAGE_LABELS, default_corpus_spec, generate_clip, generate_reference_images
from vidshield.harness import default_model


@pytest.fixture(scope="session")
def default_corpus():
    return generate_clip(default_corpus_spec(0))


@pytest.fixture(scope="session")
def default_clip(default_corpus):
    return default_corpus[0]


@pytest.fixture(scope="session")
def ground_truth(default_corpus):
    return default_corpus[1]


@pytest.fixture(scope="session")
def model():
    return default_model(0)


@pytest.fixture(scope="session")
def attack_images():
    """One picture per image label, distinct from the training references."""
    return dict(generate_reference_images(IMAGE_LABELS, 1, seed=1))


@pytest.fixture(scope="session")
def car(attack_images):
    return attack_images["car"]


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS, key=lambda k: (k[:2], k)):
            terminalreporter.write_line(RESULTS[key])
