"""Command-line interface: ``irisct <command> ...``.

Commands
    segment    boundaries and usable-pixel mask of one eye image
    normalize  20x240 rubber-sheet matrix and the 8x240 mid strip
    extract    one template record (tab-separated) on stdout
    enroll     append templates for a whole dataset to a store
    identify   best-matching enrolled subject for one image
    evaluate   accuracy report and intra/inter distance histograms
    ga-select  genetic feature-subset search over the 600 coarse bits
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .classify import N_LOCAL, euclidean, hamming, trit_distance
from .config import RunConfig, load_config
from .dataio import DEFAULT_LAYOUT, GrayImage, load_image, save_image, scan_dataset, write_synthetic_corpus
from .errors import CorruptImage, IrisError, UnsupportedFormat
from .evaluation import evaluate, prepare_samples
from .features import METHODS, extract, feat_ga600, fit_projection, nlac_probe, projection_input
from .gaselect import centroid_classifier, run_ga, svm_classifier
from .normalize import mid_strip, rubber_sheet
from .segment import segment
from .templates import TemplateRecord, append_records, load_basis, read_records, save_basis

EXIT_USAGE, EXIT_MISSING, EXIT_FORMAT, EXIT_PIPELINE = 2, 3, 4, 5

REPORT_HELP = """\
report.csv columns: method, vector_length (nominal), effective_length (used),
classifier, accuracy_pct, n_train, n_test, mean_extract_ms (timing).
intra_hist.csv / inter_hist.csv columns: bin_lo, bin_hi, count (BINARY HD).
"""
HISTORY_HELP = "history CSV columns: generation, best_scalar, best_error, best_count"


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg = cfg.updated(seed=args.seed)
    if (cfg.radial_res, cfg.angular_res) != (20, 240):
        warnings.warn("non-default radial/angular resolution: vector lengths will differ from the "
                      "reference table", RuntimeWarning)
    return cfg


def _strip_for(path, cfg: RunConfig):
    img = load_image(path)
    seg = segment(img, cfg.segment_config())
    norm = rubber_sheet(img, seg, cfg.radial_res, cfg.angular_res)
    return img, seg, norm, mid_strip(norm)


def _basis(args, method):
    if method not in ("PCA", "ICA"):
        return None
    if not args.basis:
        raise ValueError(f"{method} needs --basis FILE (written by enroll)")
    return load_basis(args.basis)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_segment(args) -> int:
    cfg = _config(args)
    img = load_image(args.image)
    seg = segment(img, cfg.segment_config())
    info = {
        "pupil": asdict(seg.pupil),
        "iris": asdict(seg.iris),
        "collarette": asdict(seg.collarette),
        "eyelid_lines": [{"a": l.a, "b": l.b, "c": l.c, "side": l.side} for l in seg.eyelid_lines],
        "usable_pixels": int(seg.noise_mask.sum()),
    }
    out = Path(args.out)
    stem = Path(args.image).stem
    overlay = img.pixels.astype(float).copy()
    overlay[seg.noise_mask] = 0.5 * overlay[seg.noise_mask] + 127.5
    yy, xx = np.mgrid[0: img.height, 0: img.width]
    for c in (seg.pupil, seg.iris, seg.collarette):
        ring = np.abs(np.hypot(xx - c.cx, yy - c.cy) - c.r) < 0.6
        overlay[ring] = 255
    save_image(GrayImage(np.clip(np.rint(overlay), 0, 255).astype(np.uint8)), out / f"{stem}_overlay.png")
    info["overlay"] = str(out / f"{stem}_overlay.png")
    print(json.dumps(info, indent=2))
    return 0


def cmd_normalize(args) -> int:
    cfg = _config(args)
    _, _, norm, strip = _strip_for(args.image, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.image).stem
    files = {
        f"{stem}_norm.txt": norm.data, f"{stem}_norm_mask.txt": norm.mask.astype(int),
        f"{stem}_strip.txt": strip.data, f"{stem}_strip_mask.txt": strip.mask.astype(int),
    }
    for name, arr in files.items():
        np.savetxt(out / name, arr, fmt="%.6f" if arr.dtype.kind == "f" else "%d")
        print(out / name)
    return 0


def cmd_extract(args) -> int:
    cfg = _config(args)
    method = args.method.upper()
    _, _, _, strip = _strip_for(args.image, cfg)
    fv = extract(method, strip, _basis(args, method))
    subject = args.subject or Path(args.image).stem
    sample = args.sample or Path(args.image).stem
    print(TemplateRecord.from_feature(subject, sample, fv).to_line())
    return 0


def cmd_enroll(args) -> int:
    cfg = _config(args)
    method = args.method.upper()
    index = scan_dataset(args.dataset, args.layout)
    samples, failures = prepare_samples(index, cfg)
    basis = None
    if method in ("PCA", "ICA"):
        if args.basis and Path(args.basis).exists():
            basis = load_basis(args.basis)
        else:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                basis = fit_projection(np.stack([projection_input(s.strip) for s in samples]),
                                       method, cfg.projection_k, seed=cfg.seed)
            target = args.basis or f"{args.db}.{method.lower()}.basis"
            save_basis(target, basis)
            print(f"basis written to {target} (k={basis.k})", file=sys.stderr)
    records = [TemplateRecord.from_feature(s.subject, s.sample, extract(method, s.strip, basis))
               for s in samples]
    n = append_records(args.db, records)
    for path, kind, msg in failures:
        print(f"skipped {path}: {kind}: {msg}", file=sys.stderr)
    print(f"enrolled {n} templates ({index.summary()}, {len(failures)} failed)")
    return 0


def _distance(method, probe_strip, probe, gallery):
    if method == "NLAC":
        p = nlac_probe(probe_strip, gallery)
        return hamming(p.payload, gallery.payload, p.mask, gallery.mask)
    if probe.kind == "bit":
        return hamming(probe.payload, gallery.payload, probe.mask, gallery.mask)
    if probe.kind == "trit":
        return trit_distance(probe.payload, gallery.payload, probe.mask, gallery.mask)
    if method == "COMBINED":
        # rank by the trit prefix; the real suffix only breaks ties
        n = N_LOCAL
        d_local = trit_distance(probe.payload[:n], gallery.payload[:n], probe.mask[:n], gallery.mask[:n])
        return d_local + 1e-9 * euclidean(probe.payload[n:], gallery.payload[n:])
    return euclidean(probe.payload, gallery.payload)


def cmd_identify(args) -> int:
    cfg = _config(args)
    method = args.method.upper()
    records = [r for r in read_records(args.db) if r.method == method]
    if not records:
        raise ValueError(f"no {method} templates in {args.db}")
    _, _, _, strip = _strip_for(args.image, cfg)
    probe = extract(method, strip, _basis(args, method))
    scored = [(_distance(method, strip, probe, r.to_feature()), i) for i, r in enumerate(records)]
    best_d, best_i = min(scored)
    rec = records[best_i]
    print(f"subject={rec.subject_id}\tsample={rec.sample_id}\tdistance={best_d:.6f}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    corpus = Path(args.corpus)
    if args.synthetic:
        n_sub, n_samp = (int(v) for v in args.synthetic.lower().split("x"))
        write_synthetic_corpus(corpus, n_sub, n_samp, seed=cfg.seed)
    index = scan_dataset(corpus, args.layout)
    methods = [m.strip().upper() for m in args.methods.split(",")] if args.methods else list(METHODS)
    report = evaluate(index, methods, cfg, cfg.seed)
    paths = report.write(args.out)
    for path, kind, msg in report.failures:
        print(f"skipped {path}: {kind}: {msg}", file=sys.stderr)
    print(report.rows_csv(), end="")
    print(report.summary())
    for name, p in paths.items():
        print(f"{name}: {p}")
    return 0


def cmd_ga_select(args) -> int:
    cfg = _config(args)
    if args.generations is not None:
        cfg = cfg.updated(ga_generations=args.generations)
    index = scan_dataset(args.corpus, args.layout)
    samples, failures = prepare_samples(index, cfg)
    X = np.stack([feat_ga600(s.strip).payload for s in samples]).astype(float)
    y = np.array([s.subject for s in samples])
    kind = args.classifier or cfg.ga_classifier
    clf = centroid_classifier() if kind == "centroid" else svm_classifier(cfg.svm_c)
    result = run_ga(X, y, cfg.ga_params(), classifier=clf)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["generation,best_scalar,best_error,best_count"]
    lines += [f"{g},{s:.6f},{e:.6f},{c}" for g, s, e, c in result.rows]
    (out / "ga_history.csv").write_text("\n".join(lines) + "\n")
    (out / "ga_mask.hex").write_text(result.best.hex() + "\n")
    print(result.best.hex())
    print(f"selected {result.best.n_selected} of {cfg.ga_gene_len} bits, validation error "
          f"{result.best.error_rate:.4f}, scalar {result.best.scalar:.6f}")
    print(f"history: {out / 'ga_history.csv'}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value configuration file")
    common.add_argument("--seed", type=int, help="seed for every random choice")

    p = argparse.ArgumentParser(prog="irisct", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    method_help = f"one of {', '.join(METHODS)} (case-insensitive)"

    s = sub.add_parser("segment", parents=[common], help="locate boundaries and masks")
    s.add_argument("image")
    s.add_argument("--out", default=".", help="directory for the overlay image")
    s.set_defaults(func=cmd_segment)

    s = sub.add_parser("normalize", parents=[common], help="rubber-sheet and mid strip")
    s.add_argument("image")
    s.add_argument("--out", default=".", help="directory for the matrix files")
    s.set_defaults(func=cmd_normalize)

    s = sub.add_parser("extract", parents=[common], help="print one template record")
    s.add_argument("image")
    s.add_argument("--method", required=True, help=method_help)
    s.add_argument("--basis", help="projection basis file (PCA/ICA)")
    s.add_argument("--subject")
    s.add_argument("--sample")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("enroll", parents=[common], help="append templates for a dataset")
    s.add_argument("dataset")
    s.add_argument("--db", required=True, help="template store (appended)")
    s.add_argument("--method", required=True, help=method_help)
    s.add_argument("--layout", default=DEFAULT_LAYOUT)
    s.add_argument("--basis", help="basis file to use or create (PCA/ICA)")
    s.set_defaults(func=cmd_enroll)

    s = sub.add_parser("identify", parents=[common], help="closest enrolled subject")
    s.add_argument("image")
    s.add_argument("--db", required=True)
    s.add_argument("--method", required=True, help=method_help)
    s.add_argument("--basis", help="projection basis file (PCA/ICA)")
    s.set_defaults(func=cmd_identify)

    s = sub.add_parser("evaluate", parents=[common], help="accuracy report and histograms",
                       epilog=REPORT_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    s.add_argument("--corpus", required=True, help="dataset root")
    s.add_argument("--methods", help="comma-separated methods (default: all)")
    s.add_argument("--layout", default=DEFAULT_LAYOUT)
    s.add_argument("--out", default="report", help="output directory for the CSV files")
    s.add_argument("--synthetic", metavar="SUBJECTSxSAMPLES",
                   help="first render a synthetic corpus of this size into --corpus")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("ga-select", parents=[common], help="genetic subset selection",
                       epilog=HISTORY_HELP)
    s.add_argument("--corpus", required=True)
    s.add_argument("--layout", default=DEFAULT_LAYOUT)
    s.add_argument("--out", default="ga")
    s.add_argument("--generations", type=int)
    s.add_argument("--classifier", choices=("centroid", "svm"))
    s.set_defaults(func=cmd_ga_select)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"irisct: file not found: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (UnsupportedFormat, CorruptImage) as exc:
        print(f"irisct: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except IrisError as exc:
        print(f"irisct: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    except (ValueError, KeyError) as exc:
        print(f"irisct: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
