import numpy as np
import pytest

from irisct.dataio import SynthEyeSpec, sample_spec, subject_spec, synth_eye, write_synthetic_corpus
from irisct.normalize import mid_strip, rubber_sheet
from irisct.segment import Circle, Segmentation, isolate_collarette, segment


def eye_strip(subject, sample=0, seed=0):
    """Strip of one synthetic capture, through the full front end."""
    spec = sample_spec(subject_spec(subject, seed), subject, sample, seed)
    img = synth_eye(spec, 320, 280)
    return mid_strip(rubber_sheet(img, segment(img)))


def truth_segmentation(spec: SynthEyeSpec, shape, fraction=0.5):
    """Segmentation built from generator ground truth with a full mask."""
    pupil, iris = Circle(*spec.pupil), Circle(*spec.iris)
    return Segmentation(pupil, iris, isolate_collarette(pupil, iris, fraction), (),
                        np.ones(shape, dtype=bool))


@pytest.fixture(scope="session")
def strips():
    return [eye_strip(s, k, seed=3) for s in range(4) for k in range(2)]


@pytest.fixture(scope="session")
def strip(strips):
    return strips[0]


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    """10 subjects x 6 samples in the default layout (3 per session)."""
    root = tmp_path_factory.mktemp("corpus")
    index = write_synthetic_corpus(root, n_subjects=10, n_samples=6, seed=7)
    return root, index


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def corpus_samples(corpus):
    from irisct.evaluation import prepare_samples

    samples, failures = prepare_samples(corpus[1])
    assert not failures
    return samples


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
