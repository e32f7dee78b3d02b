"""Feature extractors over contourlet coefficients of the iris strip.

Every extractor maps a :class:`~irisct.normalize.Strip` to a
:class:`FeatureVector` whose length is fixed by the method:

    GLCM21 21   GLCM56 56   LOCAL 2520   GLOBAL 24   COMBINED 2544
    BINARY 2520 NLAC 48     GA600 600    AAD 1280    PCA/ICA k

The two-level pyramid uses directions (2, 4) and the three-level pyramid
(2, 4, 8), finest level first.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import floor

import numpy as np
from scipy import ndimage

from .contourlet import ContourletPyramid, PyramidConfig, ct_decompose, ns_directional_bands
from .errors import DimMismatch, EmptyOverlap, InsufficientData
from .normalize import Strip

__all__ = [
    "METHODS",
    "VECTOR_LENGTHS",
    "FeatureVector",
    "GLCM",
    "GLCM_OFFSETS",
    "glcm_compute",
    "haralick7",
    "quantize8",
    "two_level",
    "three_level",
    "coefficient_mask",
    "local_extrema_code",
    "n_significant",
    "significant_indices",
    "aad",
    "ProjectionBasis",
    "fit_projection",
    "projection_input",
    "feat_glcm21",
    "feat_glcm56",
    "feat_local",
    "feat_global",
    "feat_combined",
    "feat_binary",
    "feat_nlac",
    "nlac_coefficients",
    "nlac_probe",
    "ga_feature_source",
    "feat_ga600",
    "feat_aad",
    "feat_project",
    "extract",
]

METHODS = ("GLCM21", "GLCM56", "LOCAL", "GLOBAL", "COMBINED", "BINARY",
           "NLAC", "GA600", "AAD", "PCA", "ICA")
VECTOR_LENGTHS = {
    "GLCM21": 21, "GLCM56": 56, "LOCAL": 2520, "GLOBAL": 24, "COMBINED": 2544,
    "BINARY": 2520, "NLAC": 48, "GA600": 600, "AAD": 1280, "PCA": 1100, "ICA": 1100,
}
TWO_LEVEL = PyramidConfig(dirs_per_level=(2, 4))
THREE_LEVEL = PyramidConfig(dirs_per_level=(2, 4, 8))
NLAC_PERCENT = 2.5
GA_SLICE = 600


@dataclass
class FeatureVector:
    """Method-tagged payload.

    ``kind`` is ``real``, ``bit`` or ``trit``.  ``mask`` marks usable entries
    (true = valid) and ``aux`` carries method-specific side data, namely the
    coefficient indices an NLAC template was sampled at.
    """

    method: str
    kind: str
    payload: np.ndarray
    mask: np.ndarray | None = None
    aux: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("real", "bit", "trit"):
            raise ValueError(f"unknown payload kind {self.kind!r}")
        dtype = float if self.kind == "real" else np.int8
        self.payload = np.asarray(self.payload, dtype=dtype).reshape(-1)
        if self.kind == "bit" and np.any((self.payload != 0) & (self.payload != 1)):
            raise ValueError("bit payload must contain only 0 and 1")
        if self.kind == "trit" and np.any(np.abs(self.payload) > 1):
            raise ValueError("trit payload must contain only -1, 0, 1")
        if self.mask is not None:
            self.mask = np.asarray(self.mask, dtype=bool).reshape(-1)
            if self.mask.size != self.payload.size:
                raise DimMismatch("mask length differs from payload length")
        if self.aux is not None:
            self.aux = np.asarray(self.aux, dtype=np.int64).reshape(-1)

    @property
    def length(self) -> int:
        return self.payload.size

    def __eq__(self, other):
        if not isinstance(other, FeatureVector):
            return NotImplemented

        def same(a, b):
            return (a is None and b is None) or (
                a is not None and b is not None and np.array_equal(a, b))

        return (self.method == other.method and self.kind == other.kind
                and np.array_equal(self.payload, other.payload)
                and same(self.mask, other.mask) and same(self.aux, other.aux))


def two_level(strip: Strip) -> ContourletPyramid:
    return ct_decompose(strip.data, TWO_LEVEL)


def three_level(strip: Strip) -> ContourletPyramid:
    return ct_decompose(strip.data, THREE_LEVEL)


# ---------------------------------------------------------------------------
# co-occurrence texture
# ---------------------------------------------------------------------------

GLCM_LEVELS = 8
# distance one at 0, 45 and 90 degrees, as (row, col) steps; up is -row
GLCM_OFFSETS = ((0, 1), (-1, 1), (-1, 0))


@dataclass(frozen=True)
class GLCM:
    """Normalized co-occurrence matrix with 1-based gray-level indices."""

    p: np.ndarray

    @property
    def _levels(self):
        return np.arange(1, self.p.shape[0] + 1, dtype=float)

    @property
    def mu_x(self) -> float:
        return float(self._levels @ self.p.sum(axis=1))

    @property
    def mu_y(self) -> float:
        return float(self._levels @ self.p.sum(axis=0))

    @property
    def sigma_x(self) -> float:
        return float(np.sqrt(max(((self._levels - self.mu_x) ** 2) @ self.p.sum(axis=1), 0.0)))

    @property
    def sigma_y(self) -> float:
        return float(np.sqrt(max(((self._levels - self.mu_y) ** 2) @ self.p.sum(axis=0), 0.0)))


def _glcm_counts(m, dy, dx):
    rows, cols = m.shape
    y0, y1 = max(0, -dy), min(rows, rows - dy)
    x0, x1 = max(0, -dx), min(cols, cols - dx)
    counts = np.zeros((GLCM_LEVELS, GLCM_LEVELS))
    if y1 <= y0 or x1 <= x0:
        return counts
    a = m[y0:y1, x0:x1].ravel()
    b = m[y0 + dy: y1 + dy, x0 + dx: x1 + dx].ravel()
    np.add.at(counts, (a, b), 1.0)
    return counts


def glcm_compute(m, offset=GLCM_OFFSETS) -> GLCM:
    """Co-occurrence of ``(m[y, x], m[y+dy, x+dx])`` pairs.

    ``offset`` is one ``(dy, dx)`` pair or a sequence of pairs whose counts
    are pooled before normalizing.
    """
    m = np.asarray(m)
    if m.ndim != 2:
        raise ValueError("GLCM input must be a 2-D matrix")
    if m.size and (m.min() < 0 or m.max() >= GLCM_LEVELS or not np.issubdtype(m.dtype, np.integer)):
        raise ValueError("GLCM input must hold integers 0..7")
    offsets = [offset] if np.ndim(offset) == 1 else list(offset)
    counts = np.zeros((GLCM_LEVELS, GLCM_LEVELS))
    for dy, dx in offsets:
        if dy == 0 and dx == 0:
            raise ValueError("GLCM offset must be nonzero")
        counts += _glcm_counts(m, int(dy), int(dx))
    total = counts.sum()
    if total == 0:
        raise EmptyOverlap(f"offsets {offsets} leave no pixel pairs in a {m.shape} matrix")
    return GLCM(counts / total)


HARALICK_NAMES = ("energy", "contrast", "correlation", "homogeneity",
                  "autocorrelation", "dissimilarity", "inertia")


def haralick7(g: GLCM) -> np.ndarray:
    """Energy, contrast, correlation, homogeneity, autocorrelation,
    dissimilarity and inertia of a GLCM, with levels indexed from 1.

    Correlation is reported as 0 when either marginal has zero spread.
    """
    p = g.p
    i = np.arange(1, p.shape[0] + 1, dtype=float)[:, None]
    j = np.arange(1, p.shape[1] + 1, dtype=float)[None, :]
    diff = i - j
    energy = np.sum(p * p)
    # sum over n of n^2 * P(|i - j| = n) is the same double sum
    contrast = np.sum(diff ** 2 * p)
    autocorr = np.sum(i * j * p)
    sx, sy = g.sigma_x, g.sigma_y
    correlation = 0.0 if sx * sy <= 1e-12 else (autocorr - g.mu_x * g.mu_y) / (sx * sy)
    homogeneity = np.sum(p / (1.0 + diff ** 2))
    dissimilarity = np.sum(np.abs(diff) * p)
    inertia = np.sum(diff ** 2 * p)
    return np.array([energy, contrast, correlation, homogeneity, autocorr, dissimilarity, inertia])


def quantize8(m) -> np.ndarray:
    """Bin values linearly over [min, max] into levels 0..7 (constant -> 0)."""
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise ValueError("quantize8 needs finite values")
    lo, hi = m.min(), m.max()
    if hi <= lo:
        return np.zeros(m.shape, dtype=np.int64)
    q = np.floor((m - lo) / (hi - lo) * GLCM_LEVELS).astype(np.int64)
    return np.clip(q, 0, GLCM_LEVELS - 1)


# coefficients this small relative to the strip are transform round-off
ROUNDOFF = 1e-10


def _texture(m, scale: float) -> np.ndarray:
    m = np.where(np.abs(m) <= ROUNDOFF * scale, 0.0, m)
    return haralick7(glcm_compute(quantize8(m), GLCM_OFFSETS))


def _scale(strip: Strip) -> float:
    return float(np.max(np.abs(strip.data))) if strip.data.size else 0.0


def glcm21_matrices(pyr: ContourletPyramid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three stacked matrices: 4x120, 16x120 and their 20x120 union.

    The 4x120 matrix holds the four coarser-level subbands, one per row;
    the 16x120 matrix stacks the two finest-level 8x120 subbands.
    """
    coarse = np.vstack([b.reshape(1, -1) for b in pyr.bands[1]])
    fine = np.vstack(pyr.bands[0])
    return coarse, fine, np.vstack([coarse, fine])


def feat_glcm21(strip: Strip) -> FeatureVector:
    mats = glcm21_matrices(two_level(strip))
    scale = _scale(strip)
    return FeatureVector("GLCM21", "real", np.concatenate([_texture(m, scale) for m in mats]))


def feat_glcm56(strip: Strip) -> FeatureVector:
    pyr = three_level(strip)
    scale = _scale(strip)
    return FeatureVector("GLCM56", "real", np.concatenate([_texture(b, scale) for b in pyr.bands[2]]))


# ---------------------------------------------------------------------------
# local / global / binary codes
# ---------------------------------------------------------------------------

_RING = np.ones((3, 3), dtype=bool)
_RING[1, 1] = False


def local_extrema_code(block) -> np.ndarray:
    """+1 at positive strict local maxima, -1 at negative strict local minima.

    Neighbours are the in-bounds 8-neighbourhood of each sample.
    """
    a = np.asarray(block, dtype=float)
    nb_max = ndimage.maximum_filter(a, footprint=_RING, mode="constant", cval=-np.inf)
    nb_min = ndimage.minimum_filter(a, footprint=_RING, mode="constant", cval=np.inf)
    code = np.zeros(a.shape, dtype=np.int8)
    code[(a > nb_max) & (a > 0)] = 1
    code[(a < nb_min) & (a < 0)] = -1
    return code


def pyramid_trits(pyr: ContourletPyramid) -> np.ndarray:
    return np.concatenate([local_extrema_code(b).reshape(-1) for _, _, b in pyr.blocks()])


def coefficient_mask(pyr: ContourletPyramid, strip_mask) -> np.ndarray:
    """Per-coefficient validity in canonical order.

    The strip mask is reduced to each block's grid by requiring every
    strip pixel of the cell to be valid, then eroded by one cell so that a
    coefficient near invalid pixels is dropped as well.
    """
    strip_mask = np.asarray(strip_mask, dtype=bool)
    rows, cols = strip_mask.shape
    out = []
    for scale, pos in pyr.anchors():
        gr, gc = -(-rows // scale), -(-cols // scale)
        padded = np.ones((gr * scale, gc * scale), dtype=bool)
        padded[:rows, :cols] = strip_mask
        cell = padded.reshape(gr, scale, gc, scale).all(axis=(1, 3))
        cell = _erode_periodic_cols(cell)
        out.append(cell[pos[:, 0], pos[:, 1]])
    return np.concatenate(out)


def _erode_periodic_cols(cell):
    padded = np.concatenate([cell[:, -1:], cell, cell[:, :1]], axis=1)
    eroded = ndimage.binary_erosion(padded, structure=np.ones((3, 3), dtype=bool), border_value=1)
    return eroded[:, 1:-1]


def feat_local(strip: Strip) -> FeatureVector:
    pyr = two_level(strip)
    return FeatureVector("LOCAL", "trit", pyramid_trits(pyr), mask=coefficient_mask(pyr, strip.mask))


def feat_global(strip: Strip) -> FeatureVector:
    """Mean and population variance of the 4 + 8 coarser directional subbands.

    Subbands are taken in canonical order (coarsest level first).
    """
    pyr = three_level(strip)
    stats = []
    for level in (2, 1):
        for band in pyr.bands[level]:
            stats += [band.mean(), band.var()]
    return FeatureVector("GLOBAL", "real", np.array(stats))


def feat_combined(strip: Strip) -> FeatureVector:
    local, glob = feat_local(strip), feat_global(strip)
    payload = np.concatenate([local.payload.astype(float), glob.payload])
    mask = np.concatenate([local.mask, np.ones(glob.length, dtype=bool)])
    return FeatureVector("COMBINED", "real", payload, mask=mask)


def feat_binary(strip: Strip) -> FeatureVector:
    pyr = two_level(strip)
    bits = (pyr.flatten() > 0).astype(np.int8)
    return FeatureVector("BINARY", "bit", bits, mask=coefficient_mask(pyr, strip.mask))


def n_significant(n_pixel: int, percent: float = NLAC_PERCENT) -> int:
    """Number of coefficients kept: n_pixel * percent / 100, halves away from zero."""
    value = n_pixel * percent / 100.0
    return int(floor(abs(value) + 0.5)) * (1 if value >= 0 else -1)


def significant_indices(coeffs, n: int) -> np.ndarray:
    """Indices of the ``n`` largest-magnitude entries, ascending.

    Ties are broken toward the lower index.
    """
    coeffs = np.asarray(coeffs, dtype=float).reshape(-1)
    order = np.argsort(-np.abs(coeffs), kind="stable")[:n]
    return np.sort(order)


def _centred(strip: Strip) -> np.ndarray:
    valid = strip.data[strip.mask] if strip.mask.any() else strip.data
    return strip.data - valid.mean()


def nlac_coefficients(strip: Strip) -> np.ndarray:
    """Canonical two-level coefficients of the mean-centred strip."""
    return ct_decompose(_centred(strip), TWO_LEVEL).flatten()


def feat_nlac(strip: Strip, indices=None) -> FeatureVector:
    """Sign bits of the most significant two-level coefficients of the
    mean-centred strip.

    Without ``indices`` the strip's own top coefficients are used and their
    positions are stored in ``aux``; with ``indices`` the bits are read at
    those positions instead (used to compare a probe at a gallery's set).
    """
    # centred first: on raw intensities the largest coefficients are all
    # positive lowpass samples and their sign bits carry no information
    pyr = ct_decompose(_centred(strip), TWO_LEVEL)
    coeffs = pyr.flatten()
    if indices is None:
        indices = significant_indices(coeffs, n_significant(strip.n_pixel))
    indices = np.asarray(indices, dtype=np.int64)
    mask = coefficient_mask(pyr, strip.mask)[indices]
    return FeatureVector("NLAC", "bit", (coeffs[indices] > 0).astype(np.int8), mask=mask, aux=indices)


def nlac_probe(strip: Strip, gallery: FeatureVector) -> FeatureVector:
    return feat_nlac(strip, indices=gallery.aux)


def ga_feature_source(strip: Strip) -> np.ndarray:
    """Sign bits of the 600 coarse-scale coefficients (lowpass + second level)."""
    coeffs = two_level(strip).flatten()[:GA_SLICE]
    return (coeffs > 0).astype(np.int8)


def feat_ga600(strip: Strip) -> FeatureVector:
    return FeatureVector("GA600", "bit", ga_feature_source(strip))


# ---------------------------------------------------------------------------
# average absolute deviation
# ---------------------------------------------------------------------------

AAD_BLOCKS = 160


def aad(block) -> float:
    """Mean absolute deviation from the block mean."""
    block = np.asarray(block, dtype=float)
    return float(np.mean(np.abs(block - block.mean())))


def feat_aad(strip: Strip) -> FeatureVector:
    """AAD over 160 row-major blocks of each full-resolution third-level band."""
    bands = ns_directional_bands(strip.data, level=3, n_dirs=8, boundary=TWO_LEVEL.boundary)
    values = []
    for band in bands:
        blocks = band.reshape(AAD_BLOCKS, -1)
        values.append(np.mean(np.abs(blocks - blocks.mean(axis=1, keepdims=True)), axis=1))
    return FeatureVector("AAD", "real", np.concatenate(values))


# ---------------------------------------------------------------------------
# PCA / ICA projections
# ---------------------------------------------------------------------------

@dataclass
class ProjectionBasis:
    kind: str                   # "PCA" or "ICA"
    mean: np.ndarray            # (d,)
    components: np.ndarray      # (k, d), one component per row
    eigenvalues: np.ndarray | None = None
    converged: bool = True
    requested_k: int | None = None

    @property
    def k(self) -> int:
        return self.components.shape[0]

    @property
    def d(self) -> int:
        return self.components.shape[1]

    def project(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.d:
            raise DimMismatch(f"input has {x.size} values, basis expects {self.d}")
        return self.components @ (x - self.mean)


def _fix_signs(rows):
    # largest-magnitude entry of each row made positive
    idx = np.argmax(np.abs(rows), axis=1)
    signs = np.sign(rows[np.arange(len(rows)), idx])
    signs[signs == 0] = 1
    return rows * signs[:, None]


def fit_projection(training, kind: str = "PCA", k: int = 1100, seed: int = 0,
                   max_iter: int = 400, tol: float = 1e-6) -> ProjectionBasis:
    """Fit a PCA or ICA basis to row vectors.

    ``k`` larger than ``min(d, n - 1)`` is clipped with a warning.  ICA
    whitens with PCA, then runs the symmetric fixed-point iteration with a
    log-cosh contrast; hitting ``max_iter`` returns the current basis with
    ``converged=False``.
    """
    kind = kind.upper()
    if kind not in ("PCA", "ICA"):
        raise ValueError(f"kind must be PCA or ICA, got {kind!r}")
    X = np.asarray(training, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise InsufficientData("need at least two training vectors of equal length")
    n, d = X.shape
    limit = min(d, n - 1)
    use_k = int(k)
    if use_k > limit:
        warnings.warn(f"{kind}: requested k={k} exceeds data rank bound {limit}; using k={limit}",
                      RuntimeWarning, stacklevel=2)
        use_k = limit
    if use_k < 1:
        raise InsufficientData("k must be at least 1")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:use_k]
    evals = np.clip(evals[order], 0.0, None)
    pcs = _fix_signs(evecs[:, order].T)
    if kind == "PCA":
        return ProjectionBasis("PCA", mean, pcs, eigenvalues=evals, requested_k=int(k))

    if np.any(evals <= 1e-12 * max(evals.max(), 1e-300)):
        raise InsufficientData("ICA needs k directions with nonzero variance")
    whiten = pcs / np.sqrt(evals)[:, None]           # (k, d)
    Z = Xc @ whiten.T                                 # (n, k), unit covariance
    rng = np.random.default_rng(seed)
    W = _sym_decorrelate(rng.standard_normal((use_k, use_k)))
    converged = False
    for _ in range(max_iter):
        proj = Z @ W.T
        g = np.tanh(proj)
        g_prime = 1.0 - g ** 2
        W_new = (g.T @ Z) / n - g_prime.mean(axis=0)[:, None] * W
        W_new = _sym_decorrelate(W_new)
        gap = np.max(np.abs(np.abs(np.sum(W_new * W, axis=1)) - 1.0))
        W = W_new
        if gap < tol:
            converged = True
            break
    if not converged:
        warnings.warn("ICA fixed-point iteration did not converge", RuntimeWarning, stacklevel=2)
    return ProjectionBasis("ICA", mean, _fix_signs(W @ whiten), eigenvalues=evals,
                           converged=converged, requested_k=int(k))


def _sym_decorrelate(W):
    s, u = np.linalg.eigh(W @ W.T)
    s = np.clip(s, 1e-300, None)
    return (u / np.sqrt(s)) @ u.T @ W


def projection_input(strip: Strip) -> np.ndarray:
    """Flattened third-level subbands (canonical order): 8 x 15 = 120 values."""
    pyr = three_level(strip)
    return np.concatenate([b.reshape(-1) for b in pyr.bands[2]])


def feat_project(strip: Strip, basis: ProjectionBasis) -> FeatureVector:
    return FeatureVector(basis.kind, "real", basis.project(projection_input(strip)))


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

_EXTRACTORS = {
    "GLCM21": feat_glcm21,
    "GLCM56": feat_glcm56,
    "LOCAL": feat_local,
    "GLOBAL": feat_global,
    "COMBINED": feat_combined,
    "BINARY": feat_binary,
    "NLAC": feat_nlac,
    "GA600": feat_ga600,
    "AAD": feat_aad,
}


def extract(method: str, strip: Strip, basis: ProjectionBasis | None = None) -> FeatureVector:
    """Run the extractor named ``method`` (case-insensitive)."""
    method = method.upper()
    if method in ("PCA", "ICA"):
        if basis is None or basis.kind != method:
            raise ValueError(f"{method} extraction needs a fitted {method} basis")
        return feat_project(strip, basis)
    try:
        return _EXTRACTORS[method](strip)
    except KeyError:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}") from None
