import json
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from irisct.cli import main
from irisct.dataio import write_synthetic_corpus
from irisct.templates import read_records


@pytest.fixture(scope="module")
def small(tmp_path_factory):
    root = tmp_path_factory.mktemp("small")
    index = write_synthetic_corpus(root, n_subjects=3, n_samples=4, seed=2)
    return root, index


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_segment_prints_circles_and_writes_overlay(small, tmp_path, capsys):
    image = small[1].entries[0].path
    code, out, _ = run(capsys, "segment", image, "--out", tmp_path)
    assert code == 0
    info = json.loads(out)
    assert info["pupil"]["r"] < info["collarette"]["r"] <= info["iris"]["r"]
    assert info["usable_pixels"] > 0
    assert Image.open(info["overlay"]).size == (320, 280)


def test_normalize_writes_matrices(small, tmp_path, capsys):
    image = small[1].entries[0].path
    assert run(capsys, "normalize", image, "--out", tmp_path)[0] == 0
    stem = Path(image).stem
    assert np.loadtxt(tmp_path / f"{stem}_norm.txt").shape == (20, 240)
    assert np.loadtxt(tmp_path / f"{stem}_strip.txt").shape == (8, 240)
    assert np.loadtxt(tmp_path / f"{stem}_strip_mask.txt").shape == (8, 240)


@pytest.mark.parametrize("method, length", [("nlac", 48), ("binary", 2520), ("glcm21", 21), ("global", 24)])
def test_extract_record_length(small, capsys, method, length):
    code, out, _ = run(capsys, "extract", "--method", method, small[1].entries[0].path)
    assert code == 0
    cols = out.strip().split("\t")
    assert cols[2] == method.upper() and int(cols[3]) == length


@pytest.mark.parametrize("method", ["binary", "nlac", "combined", "glcm21", "local", "pca"])
def test_enroll_then_identify_self(small, tmp_path, capsys, method):
    root, index = small
    db = tmp_path / "store.tsv"
    code, out, _ = run(capsys, "enroll", root, "--db", db, "--method", method)
    assert code == 0 and "enrolled 12 templates" in out
    assert len(read_records(db)) == 12
    extra = ["--basis", f"{db}.pca.basis"] if method == "pca" else []
    entry = index.entries[5]
    code, out, _ = run(capsys, "identify", entry.path, "--db", db, "--method", method, *extra)
    assert code == 0
    fields = dict(part.split("=") for part in out.strip().split("\t"))
    assert fields["subject"] == entry.subject_id
    assert float(fields["distance"]) == 0


def test_enroll_appends(small, tmp_path, capsys):
    root, _ = small
    db = tmp_path / "store.tsv"
    for _ in range(2):
        assert run(capsys, "enroll", root, "--db", db, "--method", "global")[0] == 0
    records = read_records(db)
    assert len(records) == 24
    assert [r.to_line() for r in records[:12]] == [r.to_line() for r in records[12:]]


def test_evaluate_outputs(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    code, out, _ = run(capsys, "evaluate", "--corpus", corpus, "--synthetic", "4x4",
                       "--methods", "binary,global,nlac", "--out", tmp_path / "rep", "--seed", "7")
    assert code == 0
    rows = (tmp_path / "rep" / "report.csv").read_text().splitlines()
    lengths = {r.split(",")[0]: int(r.split(",")[1]) for r in rows[1:]}
    assert lengths == {"BINARY": 2520, "GLOBAL": 24, "NLAC": 48}
    assert "intra comparisons: 24" in out
    assert (tmp_path / "rep" / "inter_hist.csv").exists()


def test_ga_select_outputs(small, tmp_path, capsys):
    root, _ = small
    code, out, _ = run(capsys, "ga-select", "--corpus", root, "--generations", "3",
                       "--out", tmp_path, "--seed", "1")
    assert code == 0
    mask = (tmp_path / "ga_mask.hex").read_text().strip()
    assert len(mask) == 150 and out.splitlines()[0] == mask
    history = (tmp_path / "ga_history.csv").read_text().splitlines()
    assert history[0] == "generation,best_scalar,best_error,best_count" and len(history) == 4


def test_config_file_and_warning(small, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("radial_res = 24\n")
    with pytest.warns(RuntimeWarning):
        code, out, _ = run(capsys, "normalize", small[1].entries[0].path, "--out", tmp_path,
                           "--config", cfg)
    assert code == 0
    assert np.loadtxt(tmp_path / f"{Path(small[1].entries[0].path).stem}_norm.txt").shape == (24, 240)


def test_exit_codes(tmp_path, small, capsys):
    assert run(capsys, "extract", "--method", "binary", tmp_path / "absent.bmp")[0] == 3
    (tmp_path / "junk.png").write_bytes(b"not an image")
    code, _, err = run(capsys, "extract", "--method", "binary", tmp_path / "junk.png")
    assert code == 4 and err.count("\n") == 1
    blank = tmp_path / "blank.png"
    Image.fromarray(np.full((280, 320), 128, dtype=np.uint8)).save(blank)
    assert run(capsys, "segment", blank, "--out", tmp_path)[0] == 5
    path = small[1].entries[0].path
    assert run(capsys, "extract", "--method", "sift", path)[0] == 2
    assert run(capsys, "extract", "--method", "pca", path)[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["extract"])
    assert exc.value.code == 2


def test_seeded_runs_reproducible(tmp_path, capsys):
    outs = []
    for k in range(2):
        code, out, _ = run(capsys, "evaluate", "--corpus", tmp_path / f"c{k}", "--synthetic", "3x4",
                           "--methods", "ga600,binary", "--out", tmp_path / f"r{k}", "--seed", "5")
        assert code == 0
        outs.append([line.rsplit(",", 1)[0] for line in
                     (tmp_path / f"r{k}" / "report.csv").read_text().splitlines()])
    assert outs[0] == outs[1]
