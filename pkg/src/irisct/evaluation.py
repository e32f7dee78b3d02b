"""End-to-end evaluation: segment, normalize, extract, classify, report.

Samples from session 1 form the gallery/training set and the rest are
probes.  Each method is scored by the matcher that suits its payload:

    LOCAL     nearest gallery template by masked trit distance
    GLOBAL    nearest gallery template by Euclidean distance
    COMBINED  local/global cascade
    BINARY    nearest gallery template by fractional Hamming distance
    others    one-vs-rest SVM on standardized features

BINARY additionally yields all-pairs intra/inter-class distance
distributions over every sample.
"""

from __future__ import annotations

import io
import csv
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classify import (BINARY_THRESHOLD, hamming, svm_predict, svm_train, trit_distance)
from .config import RunConfig
from .dataio import DatasetIndex, load_image
from .errors import IrisError
from .features import (METHODS, VECTOR_LENGTHS, feat_binary, feat_combined, feat_ga600,
                       feat_global, feat_local, feat_nlac, extract, fit_projection,
                       n_significant, nlac_coefficients, projection_input, significant_indices,
                       FeatureVector)
from .gaselect import centroid_classifier, run_ga, svm_classifier
from .normalize import Strip, mid_strip, rubber_sheet
from .segment import segment

__all__ = ["Sample", "MethodRow", "EvalReport", "prepare_samples", "evaluate", "evaluate_samples"]

CLASSIFIER_KIND = {
    "LOCAL": "HD", "GLOBAL": "ED", "COMBINED": "HD+ED", "BINARY": "HD",
    "GLCM21": "SVM", "GLCM56": "SVM", "NLAC": "SVM", "GA600": "SVM",
    "AAD": "SVM", "PCA": "SVM", "ICA": "SVM",
}
ROW_COLUMNS = ("method", "vector_length", "effective_length", "classifier",
               "accuracy_pct", "n_train", "n_test", "mean_extract_ms")
TIMING_COLUMNS = ("mean_extract_ms",)


@dataclass
class Sample:
    subject: str
    sample: str
    session: int
    strip: Strip


@dataclass
class MethodRow:
    method: str
    vector_length: int
    effective_length: int
    classifier: str
    accuracy_pct: float
    n_train: int
    n_test: int
    mean_extract_ms: float


@dataclass
class EvalReport:
    rows: list = field(default_factory=list)
    intra: np.ndarray = field(default_factory=lambda: np.zeros(0))
    inter: np.ndarray = field(default_factory=lambda: np.zeros(0))
    threshold: float = BINARY_THRESHOLD
    failures: list = field(default_factory=list)    # (path, error class, message)

    @property
    def intra_count(self) -> int:
        return int(self.intra.size)

    @property
    def inter_count(self) -> int:
        return int(self.inter.size)

    @property
    def verification_accuracy(self) -> float:
        total = self.intra.size + self.inter.size
        if total == 0:
            return float("nan")
        good = np.sum(self.intra <= self.threshold) + np.sum(self.inter > self.threshold)
        return float(good / total)

    def row(self, method: str) -> MethodRow:
        for r in self.rows:
            if r.method == method:
                return r
        raise KeyError(method)

    def rows_csv(self, timing: bool = True) -> str:
        cols = [c for c in ROW_COLUMNS if timing or c not in TIMING_COLUMNS]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.rows:
            vals = []
            for c in cols:
                v = getattr(r, c)
                vals.append(f"{v:.4f}" if isinstance(v, float) else v)
            w.writerow(vals)
        return buf.getvalue()

    def histogram_csv(self, which: str, bins: int = 50) -> str:
        data = {"intra": self.intra, "inter": self.inter}[which]
        counts, edges = np.histogram(data, bins=bins, range=(0.0, 1.0))
        lines = ["bin_lo,bin_hi,count"]
        lines += [f"{edges[i]:.2f},{edges[i + 1]:.2f},{int(counts[i])}" for i in range(bins)]
        return "\n".join(lines) + "\n"

    def summary(self) -> str:
        parts = [f"intra comparisons: {self.intra_count}", f"inter comparisons: {self.inter_count}"]
        if self.intra.size and self.inter.size:
            parts += [f"mean intra HD: {self.intra.mean():.4f}", f"mean inter HD: {self.inter.mean():.4f}",
                      f"verification accuracy at {self.threshold}: {100 * self.verification_accuracy:.2f}%"]
        parts.append(f"failed images: {len(self.failures)}")
        return "\n".join(parts)

    def write(self, out_dir) -> dict:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {"report": out / "report.csv", "intra": out / "intra_hist.csv",
                 "inter": out / "inter_hist.csv"}
        paths["report"].write_text(self.rows_csv())
        paths["intra"].write_text(self.histogram_csv("intra"))
        paths["inter"].write_text(self.histogram_csv("inter"))
        return paths


def prepare_samples(index: DatasetIndex, config: RunConfig | None = None):
    """Load, segment and normalize every image; returns (samples, failures)."""
    config = config or RunConfig()
    seg_cfg = config.segment_config()
    samples, failures = [], []
    for entry in index:
        try:
            img = load_image(entry.path)
            seg = segment(img, seg_cfg)
            strip = mid_strip(rubber_sheet(img, seg, config.radial_res, config.angular_res))
        except (IrisError, OSError, ValueError) as exc:
            failures.append((entry.path, type(exc).__name__, str(exc)))
            continue
        samples.append(Sample(entry.subject_id, entry.sample_id, entry.session, strip))
    return samples, failures


def evaluate(index: DatasetIndex, methods=METHODS, config: RunConfig | None = None,
             seed: int | None = None) -> EvalReport:
    config = config or RunConfig()
    samples, failures = prepare_samples(index, config)
    report = evaluate_samples(samples, methods, config, seed)
    report.failures = failures
    return report


def _split(samples):
    sessions = {s.session for s in samples}
    if len(sessions) > 1:
        first = min(sessions)
        return [s.session == first for s in samples]
    # single session: first half of each subject's samples trains
    seen, flags = {}, []
    totals = {}
    for s in samples:
        totals[s.subject] = totals.get(s.subject, 0) + 1
    for s in samples:
        k = seen.get(s.subject, 0)
        flags.append(k < -(-totals[s.subject] // 2))
        seen[s.subject] = k + 1
    return flags


def _timed(fn, strips):
    out, total = [], 0.0
    for st in strips:
        t0 = time.perf_counter()
        out.append(fn(st))
        total += time.perf_counter() - t0
    return out, 1000.0 * total / max(len(strips), 1)


def _standardize(train, test):
    mu = train.mean(axis=0)
    sd = train.std(axis=0)
    sd[sd == 0] = 1.0
    return (train - mu) / sd, (test - mu) / sd


def _nearest(dist_fn, gallery, probes):
    picks = []
    for p in probes:
        d = [dist_fn(p, g) for g in gallery]
        picks.append(int(np.argmin(d)))
    return picks


def _best_threshold(intra, inter):
    """Threshold with the most correct accept/reject decisions (ties: smallest)."""
    values = np.unique(np.concatenate([intra, inter]))
    if values.size == 0:
        return 0.0
    cands = np.concatenate([[values[0] - 1e-9], (values[:-1] + values[1:]) / 2, [values[-1]]])
    scores = [np.sum(intra <= t) + np.sum(inter > t) for t in cands]
    return float(cands[int(np.argmax(scores))])


def _masked_distance(fn):
    def dist(a: FeatureVector, b: FeatureVector):
        return fn(a.payload, b.payload, a.mask, b.mask)
    return dist


def evaluate_samples(samples, methods=METHODS, config: RunConfig | None = None,
                     seed: int | None = None) -> EvalReport:
    config = config or RunConfig()
    seed = config.seed if seed is None else seed
    methods = [m.upper() for m in methods]
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ValueError(f"unknown methods {sorted(unknown)}")
    if len({s.subject for s in samples}) < 2:
        raise ValueError("evaluation needs at least two subjects")
    flags = _split(samples)
    train = [s for s, f in zip(samples, flags) if f]
    test = [s for s, f in zip(samples, flags) if not f]
    y_train = np.array([s.subject for s in train])
    y_test = np.array([s.subject for s in test])
    tr_strips = [s.strip for s in train]
    te_strips = [s.strip for s in test]
    report = EvalReport(threshold=config.binary_threshold)

    def accuracy(pred):
        return 100.0 * float(np.mean(np.asarray(pred) == y_test)) if len(y_test) else float("nan")

    def svm_accuracy(Xtr, Xte):
        Xtr, Xte = _standardize(np.asarray(Xtr, float), np.asarray(Xte, float))
        model = svm_train(Xtr, y_train, C=config.svm_c, kernel=config.svm_kernel)
        return accuracy(np.atleast_1d(svm_predict(model, Xte)))

    for method in methods:
        eff = VECTOR_LENGTHS[method]
        if method in ("LOCAL", "BINARY", "GLOBAL"):
            fn = {"LOCAL": feat_local, "BINARY": feat_binary, "GLOBAL": feat_global}[method]
            gal, _ = _timed(fn, tr_strips)
            prb, ms = _timed(fn, te_strips)
            if method == "GLOBAL":
                dist = lambda a, b: float(np.linalg.norm(a.payload - b.payload))
            else:
                dist = _masked_distance(hamming if method == "BINARY" else trit_distance)
            acc = accuracy(y_train[_nearest(dist, gal, prb)])
        elif method == "COMBINED":
            gal, _ = _timed(feat_combined, tr_strips)
            prb, ms = _timed(feat_combined, te_strips)
            acc = accuracy(_cascade_identify(gal, prb, y_train, config))
        elif method in ("PCA", "ICA"):
            Xtr = np.stack([projection_input(st) for st in tr_strips])
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                basis = fit_projection(Xtr, method, config.projection_k, seed=seed)
            eff = basis.k
            ftr = [extract(method, st, basis).payload for st in tr_strips]
            fte, ms = _timed(lambda st: extract(method, st, basis), te_strips)
            acc = svm_accuracy(ftr, [f.payload for f in fte])
        elif method == "NLAC":
            # one index set for all: the largest mean-magnitude training coefficients
            mags = np.mean([np.abs(nlac_coefficients(st)) for st in tr_strips], axis=0)
            n_pix = tr_strips[0].n_pixel if tr_strips else 0
            idx = significant_indices(mags, n_significant(n_pix, config.nlac_percent))
            ftr = [feat_nlac(st, idx).payload for st in tr_strips]
            fte, ms = _timed(lambda st: feat_nlac(st, idx), te_strips)
            acc = svm_accuracy(ftr, [f.payload for f in fte])
        elif method == "GA600":
            Xtr = np.stack([feat_ga600(st).payload for st in tr_strips]).astype(float)
            fte, ms = _timed(feat_ga600, te_strips)
            Xte = np.stack([f.payload for f in fte]).astype(float)
            clf = centroid_classifier() if config.ga_classifier == "centroid" else svm_classifier(config.svm_c)
            result = run_ga(Xtr, y_train, config.ga_params(seed), classifier=clf)
            cols = result.best.genes.astype(bool)
            if not cols.any():
                cols[:] = True
            eff = int(cols.sum())
            acc = svm_accuracy(Xtr[:, cols], Xte[:, cols])
        else:
            ftr = [extract(method, st).payload for st in tr_strips]
            fte, ms = _timed(lambda st: extract(method, st), te_strips)
            acc = svm_accuracy(ftr, [f.payload for f in fte])
        report.rows.append(MethodRow(method, VECTOR_LENGTHS[method], eff, CLASSIFIER_KIND[method],
                                     acc, len(train), len(test), ms))

    if "BINARY" in methods:
        codes = [feat_binary(s.strip) for s in samples]
        intra, inter = [], []
        for i in range(len(samples)):
            for j in range(i + 1, len(samples)):
                d = hamming(codes[i].payload, codes[j].payload, codes[i].mask, codes[j].mask)
                (intra if samples[i].subject == samples[j].subject else inter).append(d)
        report.intra, report.inter = np.array(intra), np.array(inter)
    return report


def _cascade_identify(gallery, probes, y_gallery, config: RunConfig):
    n_local = VECTOR_LENGTHS["LOCAL"]

    def local_d(a, b):
        return trit_distance(a.payload[:n_local], b.payload[:n_local], a.mask[:n_local], b.mask[:n_local])

    def global_d(a, b):
        return float(np.linalg.norm(a.payload[n_local:] - b.payload[n_local:]))

    # tune the global threshold on gallery pairs
    intra, inter = [], []
    for i in range(len(gallery)):
        for j in range(i + 1, len(gallery)):
            (intra if y_gallery[i] == y_gallery[j] else inter).append(global_d(gallery[i], gallery[j]))
    t_global = _best_threshold(np.array(intra), np.array(inter))

    picks = []
    for p in probes:
        dl = np.array([local_d(p, g) for g in gallery])
        if np.any(dl <= config.cascade_lo):
            picks.append(y_gallery[int(np.argmin(dl))])
            continue
        gray = np.flatnonzero((dl > config.cascade_lo) & (dl < config.cascade_hi))
        dg = np.array([global_d(p, gallery[k]) for k in gray])
        ok = gray[dg <= t_global] if gray.size else gray
        if ok.size:
            picks.append(y_gallery[ok[np.argmin([global_d(p, gallery[k]) for k in ok])]])
        else:
            picks.append(None)
    return np.array(picks, dtype=object)
