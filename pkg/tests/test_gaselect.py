import numpy as np
import pytest
from scipy import stats

from irisct.errors import DegenerateLabels, DegenerateSplit
from irisct.gaselect import (
    Chromosome,
    GAParams,
    centroid_classifier,
    evaluate_fitness,
    roulette_select,
    run_ga,
    stratified_split,
    svm_classifier,
)


def planted(seed=1, n=200, flip=0.2):
    """600 random bits per sample; only columns 0-9 carry the label."""
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)
    X = rng.integers(0, 2, (n, 600)).astype(float)
    X[:, :10] = (y[:, None] ^ (rng.random((n, 10)) < flip)).astype(float)
    return X, y


def separable(n=60, seed=0):
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1, 2], n // 3)
    X = rng.normal(0, 0.1, (n, 600)) + y[:, None] * 1.0
    return X, y


def chrom(scalar):
    return Chromosome(np.zeros(4, dtype=np.uint8), scalar=scalar)


# ---------------------------------------------------------------- parameters

def test_defaults():
    p = GAParams()
    assert (p.pop_size, p.gene_len, p.p_crossover, p.p_mutation, p.n_generations) == (108, 600, 0.65, 0.002, 110)
    assert p.weights == (0.9, 0.1)


@pytest.mark.parametrize("kwargs", [dict(weights=(0.5, 0.6)), dict(weights=(1.0, 0.0)),
                                    dict(pop_size=1), dict(p_mutation=1.5), dict(elitism=108)])
def test_invalid_params(kwargs):
    with pytest.raises(ValueError):
        GAParams(**kwargs)


# ---------------------------------------------------------------- roulette

def test_roulette_single():
    only = chrom(0.3)
    assert roulette_select([only], np.random.default_rng(0)) is only


def test_roulette_prefers_lower_scalar():
    pop = [chrom(0.1), chrom(0.9)]
    rng = np.random.default_rng(0)
    picks = sum(roulette_select(pop, rng) is pop[0] for _ in range(100_000))
    assert picks / 100_000 >= 0.999


def test_roulette_uniform_on_ties():
    pop = [chrom(0.5) for _ in range(5)]
    rng = np.random.default_rng(1)
    slot = {id(c): k for k, c in enumerate(pop)}
    counts = np.zeros(5)
    for _ in range(100_000):
        counts[slot[id(roulette_select(pop, rng))]] += 1
    assert stats.chisquare(counts).pvalue > 0.01


def test_roulette_empty():
    with pytest.raises(ValueError):
        roulette_select([], np.random.default_rng(0))


# ---------------------------------------------------------------- fitness

def test_all_ones_on_separable_data():
    X, y = separable()
    tr, va = stratified_split(y, 0.7, 0)
    p = GAParams()
    c = evaluate_fitness(np.ones(600), (X[tr], y[tr]), (X[va], y[va]), p, centroid_classifier())
    assert c.error_rate == 0 and c.n_selected == 600
    assert c.scalar == pytest.approx(0.1)


def test_all_ones_with_svm_wrapper():
    X, y = separable(30)
    tr, va = stratified_split(y, 0.7, 0)
    c = evaluate_fitness(np.ones(600), (X[tr], y[tr]), (X[va], y[va]), GAParams(), svm_classifier())
    assert c.error_rate == 0


def test_all_zero_scores_one():
    X, y = separable()
    c = evaluate_fitness(np.zeros(600), (X, y), (X, y), GAParams())
    assert (c.scalar, c.n_selected) == (1.0, 0)


def test_fewer_features_lower_scalar():
    X, y = separable()
    tr, va = stratified_split(y, 0.7, 0)
    p = GAParams()
    few = np.zeros(600)
    few[:50] = 1
    many = np.zeros(600)
    many[:400] = 1
    a = evaluate_fitness(few, (X[tr], y[tr]), (X[va], y[va]), p, centroid_classifier())
    b = evaluate_fitness(many, (X[tr], y[tr]), (X[va], y[va]), p, centroid_classifier())
    assert a.error_rate == b.error_rate == 0
    assert a.scalar < b.scalar


def test_missing_class_in_train():
    X, y = separable()
    train = (X[y != 2], y[y != 2])
    with pytest.raises(DegenerateSplit):
        evaluate_fitness(np.ones(600), train, (X, y), GAParams())


def test_wrong_gene_length():
    X, y = separable()
    with pytest.raises(ValueError):
        evaluate_fitness(np.ones(599), (X, y), (X, y), GAParams())


def test_fitness_cache_reused():
    X, y = separable()
    cache = {}
    calls = []

    def counting(Xtr, ytr, Xte):
        calls.append(1)
        return centroid_classifier()(Xtr, ytr, Xte)

    for _ in range(3):
        evaluate_fitness(np.ones(600), (X, y), (X, y), GAParams(), counting, cache)
    assert len(calls) == 1


def test_stratified_split_covers_every_class():
    y = np.repeat(np.arange(10), 6)
    tr, va = stratified_split(y, 0.7, 3)
    assert set(y[tr]) == set(y[va]) == set(range(10))
    assert len(tr) + len(va) == 60 and not set(tr) & set(va)


def test_chromosome_hex():
    genes = np.zeros(600, dtype=np.uint8)
    genes[0] = genes[599] = 1
    h = Chromosome(genes).hex()
    assert len(h) == 150 and h.startswith("80") and h.endswith("01")


# ---------------------------------------------------------------- full runs

def test_planted_features_recovered():
    # each planted bit is weak on its own, so all ten are worth keeping
    X, y = planted(n=400, flip=0.3)
    split = stratified_split(y, 0.7, 0)
    p = GAParams(rng_seed=0)
    result = run_ga(X, y, p, centroid_classifier(), split=split)
    best = result.best
    assert best.genes[:10].sum() >= 8
    assert best.genes.size == 600 and best.n_selected == int(best.genes.sum())
    tr, va = split
    ones = evaluate_fitness(np.ones(600), (X[tr], y[tr]), (X[va], y[va]), p, centroid_classifier())
    assert best.scalar < ones.scalar
    assert np.all(np.diff(result.history) <= 0)
    assert len(result.history) == 110


def test_run_is_deterministic():
    X, y = planted(n=80)
    p = GAParams(pop_size=20, n_generations=8, rng_seed=5)
    a = run_ga(X, y, p, centroid_classifier())
    b = run_ga(X, y, p, centroid_classifier())
    np.testing.assert_array_equal(a.best.genes, b.best.genes)
    assert a.history == b.history


def test_selection_pressure_beats_drift():
    # crossover and symmetric mutation keep the expected popcount at 300, so
    # under pure drift the chosen mask would hold 300 bits on average
    X, y = planted(n=80)
    counts = [run_ga(X, y, GAParams(pop_size=20, n_generations=30, rng_seed=s),
                     centroid_classifier()).best.n_selected for s in range(20)]
    assert stats.ttest_1samp(counts, 300, alternative="less").pvalue < 0.05


def test_single_class_rejected():
    X, _ = planted(n=40)
    with pytest.raises(DegenerateLabels):
        run_ga(X, np.zeros(40), GAParams(pop_size=4, n_generations=1))
