import numpy as np
import pytest

from irisct.evaluation import EvalReport, MethodRow, _best_threshold, _split, evaluate_samples
from irisct.features import METHODS, VECTOR_LENGTHS


@pytest.fixture(scope="module")
def report(corpus_samples):
    return evaluate_samples(corpus_samples, METHODS, seed=7)


def test_length_column_matches_reference(report):
    assert [r.method for r in report.rows] == list(METHODS)
    for r in report.rows:
        assert r.vector_length == VECTOR_LENGTHS[r.method]
        assert 0 <= r.accuracy_pct <= 100


def test_projection_rows_report_clipped_length(report):
    for m in ("PCA", "ICA"):
        assert report.row(m).effective_length == 29    # 30 training vectors


def test_comparison_counts(report):
    assert report.intra_count == 10 * 15
    assert report.inter_count == 60 * 59 // 2 - 150


def test_binary_separation(report):
    assert report.intra.mean() < report.inter.mean()
    assert report.verification_accuracy >= 0.95


def test_session_split(corpus_samples, report):
    flags = _split(corpus_samples)
    assert sum(flags) == 30
    assert all(s.session == 1 for s, f in zip(corpus_samples, flags) if f)
    assert report.rows[0].n_train == report.rows[0].n_test == 30


def test_single_session_split_halves_each_subject():
    class S:
        def __init__(self, subject):
            self.subject, self.session = subject, 1
    samples = [S(a) for a in "aaabbbb"]
    assert _split(samples) == [True, True, False, True, True, False, False]


def test_deterministic_except_timing(corpus_samples, report):
    again = evaluate_samples(corpus_samples, METHODS, seed=7)
    assert again.rows_csv(timing=False) == report.rows_csv(timing=False)
    np.testing.assert_array_equal(again.intra, report.intra)


def test_csv_and_histograms(report, tmp_path):
    header = report.rows_csv().splitlines()[0]
    assert header.endswith("mean_extract_ms")
    assert "mean_extract_ms" not in report.rows_csv(timing=False)
    paths = report.write(tmp_path)
    hist = paths["intra"].read_text().splitlines()
    assert hist[0] == "bin_lo,bin_hi,count" and len(hist) == 51
    assert sum(int(line.split(",")[2]) for line in hist[1:]) == 150


def test_unknown_method(corpus_samples):
    with pytest.raises(ValueError):
        evaluate_samples(corpus_samples, ["SIFT"])


def test_one_subject_rejected(corpus_samples):
    with pytest.raises(ValueError):
        evaluate_samples(corpus_samples[:6], ["BINARY"])


def test_best_threshold_separates():
    t = _best_threshold(np.array([0.1, 0.2]), np.array([0.5, 0.6]))
    assert 0.2 <= t < 0.5


def test_empty_report():
    r = EvalReport()
    assert np.isnan(r.verification_accuracy)
    assert "failed images: 0" in r.summary()
    with pytest.raises(KeyError):
        r.row("BINARY")
    r.rows.append(MethodRow("GLOBAL", 24, 24, "ED", 50.0, 1, 1, 0.1))
    assert r.rows_csv(timing=False).splitlines()[1] == "GLOBAL,24,24,ED,50.0000,1,1"
