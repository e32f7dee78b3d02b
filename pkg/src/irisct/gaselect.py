"""Genetic search for a small, accurate subset of the 600 coarse-scale bits.

Each chromosome is a 600-bit mask; a set bit keeps that feature.  Fitness
trades the wrapped classifier's validation error against the fraction of
features kept, and lower is better.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .classify import svm_predict, svm_train
from .errors import DegenerateLabels, DegenerateSplit

__all__ = [
    "GAParams",
    "Chromosome",
    "GAResult",
    "svm_classifier",
    "centroid_classifier",
    "stratified_split",
    "evaluate_fitness",
    "roulette_select",
    "run_ga",
]

Classifier = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class GAParams:
    pop_size: int = 108
    gene_len: int = 600
    p_crossover: float = 0.65
    p_mutation: float = 0.002
    n_generations: int = 110
    weights: tuple = (0.9, 0.1)     # (error, feature count)
    rng_seed: int = 0
    elitism: int = 1
    train_fraction: float = 0.7

    def __post_init__(self):
        w_err, w_count = self.weights
        if w_err <= 0 or w_count <= 0 or abs(w_err + w_count - 1.0) > 1e-9:
            raise ValueError("weights must be positive and sum to 1")
        if self.pop_size < 2 or self.gene_len < 2 or self.n_generations < 1:
            raise ValueError("population, gene length and generations must be positive")
        if not (0 <= self.p_crossover <= 1 and 0 <= self.p_mutation <= 1):
            raise ValueError("probabilities must lie in [0, 1]")
        if not 0 <= self.elitism < self.pop_size:
            raise ValueError("elitism must be smaller than the population")


@dataclass(frozen=True)
class Chromosome:
    genes: np.ndarray
    error_rate: float = float("nan")
    n_selected: int = 0
    scalar: float = float("nan")

    def hex(self) -> str:
        return np.packbits(self.genes.astype(np.uint8)).tobytes().hex()


@dataclass
class GAResult:
    best: Chromosome
    history: list = field(default_factory=list)   # best-so-far scalar per generation
    rows: list = field(default_factory=list)      # (generation, scalar, error, count)


def svm_classifier(C: float = 1.0, kernel: str = "linear") -> Classifier:
    def fit_predict(Xtr, ytr, Xte):
        if np.unique(ytr).size < 2:
            return np.full(len(Xte), ytr[0])
        return np.atleast_1d(svm_predict(svm_train(Xtr, ytr, C=C, kernel=kernel), Xte))
    return fit_predict


def centroid_classifier() -> Classifier:
    """Nearest class mean by squared Euclidean distance (cheap GA wrapper)."""
    def fit_predict(Xtr, ytr, Xte):
        classes = np.unique(ytr)
        means = np.stack([Xtr[ytr == c].mean(axis=0) for c in classes])
        d = (np.sum(Xte ** 2, axis=1)[:, None] - 2 * Xte @ means.T
             + np.sum(means ** 2, axis=1)[None, :])
        return classes[np.argmin(d, axis=1)]
    return fit_predict


def stratified_split(labels, train_fraction: float = 0.7, rng=None):
    """Per-class shuffled split; returns (train_idx, valid_idx).

    Each class keeps at least one training sample, and one validation
    sample whenever it has two or more.
    """
    rng = np.random.default_rng(rng)
    labels = np.asarray(labels)
    train, valid = [], []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(idx.size)]
        n_train = int(round(train_fraction * idx.size))
        n_train = min(max(n_train, 1), max(idx.size - 1, 1))
        train += idx[:n_train].tolist()
        valid += idx[n_train:].tolist()
    return np.sort(train), np.sort(valid)


def evaluate_fitness(genes, train, valid, params: GAParams, classifier: Classifier | None = None,
                     cache: dict | None = None) -> Chromosome:
    """Score one mask: ``w_err * error + w_count * selected / gene_len``.

    ``train`` and ``valid`` are ``(X, y)`` pairs.  An empty mask scores 1.
    """
    genes = np.asarray(genes, dtype=np.uint8).reshape(-1)
    if genes.size != params.gene_len:
        raise ValueError(f"chromosome has {genes.size} genes, expected {params.gene_len}")
    key = genes.tobytes()
    if cache is not None and key in cache:
        return cache[key]
    Xtr, ytr = train
    Xva, yva = valid
    if Xtr.shape[1] != params.gene_len:
        raise ValueError(f"feature matrix has {Xtr.shape[1]} columns, expected {params.gene_len}")
    missing = set(np.unique(yva).tolist()) - set(np.unique(ytr).tolist())
    if missing:
        raise DegenerateSplit(f"classes {sorted(missing)} have no training samples")
    count = int(genes.sum())
    if count == 0:
        result = Chromosome(genes, 1.0, 0, 1.0)
    else:
        classifier = classifier or svm_classifier()
        cols = genes.astype(bool)
        pred = classifier(Xtr[:, cols], ytr, Xva[:, cols])
        error = float(np.mean(pred != yva)) if len(yva) else 0.0
        w_err, w_count = params.weights
        result = Chromosome(genes, error, count, w_err * error + w_count * count / params.gene_len)
    if cache is not None:
        cache[key] = result
    return result


def roulette_select(pop, rng) -> Chromosome:
    """Draw one chromosome with weight ``max(scalar) + 1e-9 - scalar``."""
    if not pop:
        raise ValueError("empty population")
    scalars = np.array([c.scalar for c in pop])
    weights = scalars.max() + 1e-9 - scalars
    return pop[int(rng.choice(len(pop), p=weights / weights.sum()))]


def run_ga(X, labels, params: GAParams | None = None, classifier: Classifier | None = None,
           split=None) -> GAResult:
    """Generational GA with elitism, single-point crossover and bit-flip mutation.

    ``split`` overrides the stratified train/validation split with explicit
    ``(train_idx, valid_idx)``.  The run is deterministic for a given seed.
    """
    params = params or GAParams()
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels)
    if np.unique(labels).size < 2:
        raise DegenerateLabels("GA selection needs at least two classes")
    rng = np.random.default_rng(params.rng_seed)
    tr, va = split if split is not None else stratified_split(labels, params.train_fraction, rng)
    train, valid = (X[tr], labels[tr]), (X[va], labels[va])
    cache: dict = {}
    L = params.gene_len

    def score(genes):
        return evaluate_fitness(genes, train, valid, params, classifier, cache)

    pop = [score(rng.integers(0, 2, L, dtype=np.uint8)) for _ in range(params.pop_size)]
    best = min(pop, key=lambda c: c.scalar)
    result = GAResult(best)
    for gen in range(params.n_generations):
        if gen > 0:
            ranked = sorted(pop, key=lambda c: c.scalar)
            children = [c for c in ranked[: params.elitism]]
            while len(children) < params.pop_size:
                a = roulette_select(pop, rng).genes
                b = roulette_select(pop, rng).genes
                if rng.random() < params.p_crossover:
                    cut = int(rng.integers(1, L))
                    a, b = (np.concatenate([a[:cut], b[cut:]]), np.concatenate([b[:cut], a[cut:]]))
                for child in (a, b):
                    if len(children) >= params.pop_size:
                        break
                    flips = rng.random(L) < params.p_mutation
                    children.append(score(np.where(flips, 1 - child, child).astype(np.uint8)))
            pop = children
        gen_best = min(pop, key=lambda c: c.scalar)
        if gen_best.scalar < best.scalar:
            best = gen_best
        result.history.append(best.scalar)
        result.rows.append((gen, best.scalar, best.error_rate, best.n_selected))
    result.best = best
    return result
