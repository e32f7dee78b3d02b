"""Contourlet transform: Laplacian pyramid followed by a directional filter bank.

Both stages use the Cohen-Daubechies-Feauveau 9/7 biorthogonal pair.  The
Laplacian pyramid applies it separably; the directional filter bank (DFB)
applies its McClellan-transformed version as a two-channel quincunx fan
filter bank, arranged as a binary tree with shearing at the third level
(Bamberger-Smith construction).

The DFB is evaluated on the periodic sample grid directly.  Every channel of
the tree is a coset of a sublattice of the torus ``Z_m x Z_n``; a split keeps
the even and odd cosets of the channel lattice and the fan filters are
polynomials in a neighbour operator ``T`` that maps one coset onto the other.
For any such ``T`` the pair

    analysis  (P_h(T), P_g(-T)),   synthesis (P_g(T), P_h(-T))

is perfectly reconstructing, because ``P_h(t) P_g(t) + P_h(-t) P_g(-t) = 2``.
That identity is all the reconstruction relies on, so it holds to rounding
error for every grid size the tree can split.

Orientation convention: a plane wave ``cos(w1*i + w2*j)`` over row index i
and column index j has angle ``atan2(w1, w2)`` folded into [0, 180) degrees.
Subbands are always returned in ascending order of that angle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np
from numpy.polynomial import chebyshev, polynomial
from scipy import ndimage

from .errors import (
    DimMismatch,
    MalformedPyramid,
    TooSmall,
    UnsupportedDirectionCount,
)

__all__ = [
    "ANALYSIS_97",
    "SYNTHESIS_97",
    "PyramidConfig",
    "ContourletPyramid",
    "biorthogonal_97",
    "lp_decompose",
    "lp_reconstruct",
    "dfb_decompose",
    "dfb_reconstruct",
    "dfb_orientations",
    "dfb_anchors",
    "ct_decompose",
    "ct_reconstruct",
    "ns_directional_bands",
]


# ---------------------------------------------------------------------------
# 9/7 filters
# ---------------------------------------------------------------------------

def _compose_y(poly_y: np.ndarray) -> np.ndarray:
    """Rewrite a polynomial in y = sin^2(w/2) as a polynomial in t = cos(w)."""
    out = np.zeros(1)
    for k, c in enumerate(poly_y):
        out = polynomial.polyadd(out, c * polynomial.polypow([0.5, -0.5], k))
    return out


def biorthogonal_97() -> tuple[np.ndarray, np.ndarray]:
    """Return the CDF 9/7 lowpass pair as polynomials in ``t = cos(w)``.

    Coefficients are in ascending powers.  The analysis filter (9 taps) and
    synthesis filter (7 taps) both have DC gain sqrt(2) and satisfy
    ``A(t) S(t) + A(-t) S(-t) = 2``.  They come from splitting the degree-3
    Daubechies polynomial between its real root and its complex pair.
    """
    daub = np.array([comb(3 + k, k) for k in range(4)], dtype=float)
    roots = np.roots(daub[::-1])
    real_root = roots[np.abs(roots.imag) < 1e-9].real[0]
    complex_pair = roots[np.abs(roots.imag) > 1e-9]
    linear = np.array([1.0, -1.0 / real_root])
    quad = np.real(np.poly(complex_pair))[::-1]
    quad = quad / quad[0]
    cos2 = polynomial.polypow([0.5, 0.5], 2)  # cos^4(w/2)
    analysis = np.sqrt(2.0) * polynomial.polymul(cos2, _compose_y(quad))
    synthesis = np.sqrt(2.0) * polynomial.polymul(cos2, _compose_y(linear))
    return analysis, synthesis


def _taps(poly_t: np.ndarray) -> np.ndarray:
    c = chebyshev.poly2cheb(poly_t)
    return np.concatenate([c[:0:-1] / 2.0, [c[0]], c[1:] / 2.0])


_POLY_A, _POLY_S = biorthogonal_97()
ANALYSIS_97 = _taps(_POLY_A)
SYNTHESIS_97 = _taps(_POLY_S)

_MODES = {"symmetric": "mirror", "periodic": "wrap"}


# ---------------------------------------------------------------------------
# Laplacian pyramid
# ---------------------------------------------------------------------------

def _check_boundary(boundary):
    if len(boundary) != 2 or any(b not in _MODES for b in boundary):
        raise ValueError(f"boundary must be a pair from {sorted(_MODES)}, got {boundary!r}")


def _separable(x, taps, boundary):
    y = ndimage.correlate1d(x, taps, axis=0, mode=_MODES[boundary[0]])
    return ndimage.correlate1d(y, taps, axis=1, mode=_MODES[boundary[1]])


def _expand(low, shape, boundary):
    up = np.zeros(shape)
    up[::2, ::2] = low
    return _separable(up, SYNTHESIS_97, boundary)


def lp_decompose(x, boundary=("symmetric", "symmetric")):
    """One Laplacian pyramid level.

    Returns ``(lowpass, bandpass)`` where lowpass has shape
    ``(ceil(r/2), ceil(c/2))`` and bandpass has the input shape.
    ``boundary`` selects the extension per axis (rows, cols).
    """
    _check_boundary(boundary)
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or min(x.shape) < 2:
        raise TooSmall(f"Laplacian pyramid needs a 2-D array with both sides >= 2, got {x.shape}")
    low = _separable(x, ANALYSIS_97, boundary)[::2, ::2]
    band = x - _expand(low, x.shape, boundary)
    return low, band


def lp_reconstruct(lowpass, bandpass, boundary=("symmetric", "symmetric")):
    _check_boundary(boundary)
    lowpass = np.asarray(lowpass, dtype=float)
    bandpass = np.asarray(bandpass, dtype=float)
    expected = tuple(-(-s // 2) for s in bandpass.shape)
    if lowpass.shape != expected:
        raise DimMismatch(f"lowpass {lowpass.shape} does not match bandpass {bandpass.shape}")
    return bandpass + _expand(lowpass, bandpass.shape, boundary)


# ---------------------------------------------------------------------------
# Directional filter bank
# ---------------------------------------------------------------------------

_QUINCUNX = np.array([[1, 1], [1, -1]])
# Third-level shears, indexed by the second-level channel (tree order).
# Each one aligns a fan boundary with the bisector of that channel's wedge.
_SHEARS = (
    np.array([[1, 0], [-1, 1]]),
    np.array([[1, 0], [1, 1]]),
    np.array([[1, -1], [0, 1]]),
    np.array([[1, 1], [0, 1]]),
)
# tree index of the channel covering each wedge, in ascending angle
_ANGULAR_ORDER = {1: (1, 0), 2: (2, 0, 1, 3), 3: (5, 4, 1, 0, 2, 3, 6, 7)}
_LEVELS = {2: 1, 4: 2, 8: 3}


def dfb_orientations(n_dirs: int) -> np.ndarray:
    """Centre angle in degrees of each subband returned by :func:`dfb_decompose`."""
    levels = _dir_levels(n_dirs)
    if levels == 1:
        return np.array([0.0, 90.0])
    width = 180.0 / n_dirs
    return width / 2 + width * np.arange(n_dirs)


def _dir_levels(n_dirs):
    try:
        return _LEVELS[int(n_dirs)]
    except (KeyError, TypeError, ValueError):
        raise UnsupportedDirectionCount(f"n_dirs must be one of 2, 4, 8; got {n_dirs!r}") from None


def _coset_mask(shape, origin, basis):
    """Boolean mask of ``origin + <basis columns>`` on the torus of ``shape``."""
    mask = np.zeros(shape, dtype=bool)
    mask[0, 0] = True
    steps = [tuple(basis[:, 0]), tuple(basis[:, 1])]
    steps += [(-a, -b) for a, b in steps]
    while True:
        grown = mask.copy()
        for step in steps:
            grown |= np.roll(mask, step, axis=(0, 1))
        if grown.sum() == mask.sum():
            break
        mask = grown
    return np.roll(mask, tuple(origin), axis=(0, 1))


@dataclass(frozen=True)
class _Split:
    even: np.ndarray            # bool over parent samples
    taps: tuple                 # ((parent index array, weight), ...)


@dataclass(frozen=True)
class _Plan:
    shape: tuple
    levels: tuple               # per level, one _Split per channel (tree order)
    leaves: tuple               # positions (N, 2) of each leaf, tree order
    root_positions: np.ndarray


def _try_split(shape, positions, grid, origin, basis):
    """Split a channel into two cosets; returns (split, children) or None."""
    candidates = (
        # quincunx fan split: neighbours along both basis vectors
        (basis @ _QUINCUNX, basis[:, 0],
         ((basis[:, 1], 0.25), (-basis[:, 1], 0.25), (basis[:, 0], -0.25), (-basis[:, 0], -0.25))),
        # degenerate grids: one-dimensional 9/7 split along a basis vector
        (basis @ np.diag([2, 1]), basis[:, 0], ((basis[:, 0], 0.5), (-basis[:, 0], 0.5))),
        (basis @ np.diag([1, 2]), basis[:, 1], ((basis[:, 1], 0.5), (-basis[:, 1], 0.5))),
    )
    n = len(positions)
    for child_basis, odd_step, neighbours in candidates:
        even_mask = _coset_mask(shape, origin, child_basis)
        even = even_mask[positions[:, 0], positions[:, 1]]
        if 2 * even.sum() != n:
            continue
        taps = []
        for step, weight in neighbours:
            moved = (positions + step) % np.array(shape)
            idx = grid[moved[:, 0], moved[:, 1]]
            if (idx < 0).any():
                break
            taps.append((idx, weight))
        else:
            odd_origin = (np.asarray(origin) + odd_step) % np.array(shape)
            children = ((tuple(origin), child_basis), (tuple(odd_origin), child_basis))
            return _Split(even=even, taps=tuple(taps)), children
    return None


@lru_cache(maxsize=64)
def _build_plan(shape, levels):
    shape = tuple(int(s) for s in shape)
    full = np.argwhere(np.ones(shape, dtype=bool))
    channels = [((0, 0), np.eye(2, dtype=int), full)]
    plan_levels = []
    for level in range(levels):
        splits, next_channels = [], []
        for ci, (origin, basis, positions) in enumerate(channels):
            if level == 2:
                basis = basis @ _SHEARS[ci]
            grid = -np.ones(shape, dtype=int)
            grid[positions[:, 0], positions[:, 1]] = np.arange(len(positions))
            result = _try_split(shape, positions, grid, origin, basis)
            if result is None:
                return None
            split, children = result
            splits.append(split)
            next_channels.append((children[0][0], children[0][1], positions[split.even]))
            next_channels.append((children[1][0], children[1][1], positions[~split.even]))
        plan_levels.append(tuple(splits))
        channels = next_channels
    return _Plan(shape=shape, levels=tuple(plan_levels),
                 leaves=tuple(p for _, _, p in channels), root_positions=full)


def _padded_shape(shape, levels):
    """Smallest grid >= shape on which the tree splits cleanly."""
    step = 2 ** levels
    return tuple(-(-s // step) * step for s in shape)


def _plan_for(shape, levels):
    plan = _build_plan(tuple(shape), levels)
    if plan is None:
        plan = _build_plan(_padded_shape(shape, levels), levels)
    return plan


def _poly_apply(coeffs, taps, x, sign=1.0):
    """Evaluate ``sum_k coeffs[k] (sign*T)^k x`` by Horner's rule."""
    y = coeffs[-1] * x
    for c in coeffs[-2::-1]:
        y = sign * sum(w * y[idx] for idx, w in taps) + c * x
    return y


def _leaf_layout(positions):
    rows = positions[:, 0]
    uniq, counts = np.unique(rows, return_counts=True)
    if np.all(counts == counts[0]):
        return (len(uniq), int(counts[0]))
    return (1, len(positions))


def dfb_decompose(x, n_dirs: int) -> list[np.ndarray]:
    """Critically sampled directional decomposition into ``n_dirs`` subbands.

    Subbands are 2-D arrays whose samples are laid out by their anchor
    position on the input grid (row-major), ordered by ascending
    orientation.  Grids the tree cannot split are padded symmetrically to
    the next multiple of ``n_dirs``; in that case the subbands hold the
    padded sample count and :func:`dfb_reconstruct` crops back.
    """
    levels = _dir_levels(n_dirs)
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise DimMismatch("dfb_decompose expects a 2-D array")
    plan = _plan_for(x.shape, levels)
    if plan.shape != x.shape:
        pad = [(0, p - s) for p, s in zip(plan.shape, x.shape)]
        x = np.pad(x, pad, mode="symmetric")
    values = [x.reshape(-1)]
    for splits in plan.levels:
        nxt = []
        for v, split in zip(values, splits):
            nxt.append(_poly_apply(_POLY_A, split.taps, v)[split.even])
            nxt.append(_poly_apply(_POLY_S, split.taps, v, sign=-1.0)[~split.even])
        values = nxt
    order = _ANGULAR_ORDER[levels]
    return [values[k].reshape(_leaf_layout(plan.leaves[k])) for k in order]


def dfb_anchors(shape, n_dirs: int) -> list[np.ndarray]:
    """Grid position ``(row, col)`` of every sample of each output subband.

    Positions follow the same order as the flattened subbands.  When the
    grid needed padding, positions in the padding are clipped to the edge.
    """
    levels = _dir_levels(n_dirs)
    shape = tuple(int(s) for s in shape)
    plan = _plan_for(shape, levels)
    limit = np.array(shape) - 1
    return [np.minimum(plan.leaves[k], limit) for k in _ANGULAR_ORDER[levels]]


def dfb_reconstruct(subbands, shape) -> np.ndarray:
    """Invert :func:`dfb_decompose` for an input of the given ``shape``."""
    levels = _dir_levels(len(subbands))
    shape = tuple(int(s) for s in shape)
    plan = _plan_for(shape, levels)
    order = _ANGULAR_ORDER[levels]
    values = [None] * len(subbands)
    for pos, k in enumerate(order):
        band = np.asarray(subbands[pos], dtype=float).reshape(-1)
        if band.size != len(plan.leaves[k]):
            raise DimMismatch(
                f"subband {pos} has {band.size} samples, expected {len(plan.leaves[k])} for shape {shape}")
        values[k] = band
    for splits in reversed(plan.levels):
        merged = []
        for ci, split in enumerate(splits):
            n = split.even.size
            u0 = np.zeros(n)
            u1 = np.zeros(n)
            u0[split.even] = values[2 * ci]
            u1[~split.even] = values[2 * ci + 1]
            merged.append(_poly_apply(_POLY_S, split.taps, u0)
                          + _poly_apply(_POLY_A, split.taps, u1, sign=-1.0))
        values = merged
    out = values[0].reshape(plan.shape)
    return out[: shape[0], : shape[1]]


# ---------------------------------------------------------------------------
# Pyramidal directional filter bank
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PyramidConfig:
    """Direction counts per level, finest first, and boundary handling.

    The default boundary is symmetric across rows and periodic across
    columns, which suits normalized iris strips (angle runs along columns).
    """

    dirs_per_level: tuple = (2, 4, 8)
    boundary: tuple = ("symmetric", "periodic")

    def __post_init__(self):
        dirs = tuple(int(d) for d in self.dirs_per_level)
        if not dirs:
            raise ValueError("dirs_per_level must not be empty")
        for d in dirs:
            _dir_levels(d)
        _check_boundary(self.boundary)
        object.__setattr__(self, "dirs_per_level", dirs)
        object.__setattr__(self, "boundary", tuple(self.boundary))

    @property
    def levels(self) -> int:
        return len(self.dirs_per_level)

    @classmethod
    def with_levels(cls, levels: int, **kwargs) -> "PyramidConfig":
        return cls(dirs_per_level=(2, 4, 8)[:levels], **kwargs)


@dataclass
class ContourletPyramid:
    lowpass: np.ndarray
    bands: list                 # bands[level][direction], level 0 = finest
    config: PyramidConfig
    source_dims: tuple
    band_dims: list = field(default_factory=list)  # bandpass grid per level

    def coefficient_count(self) -> int:
        return self.lowpass.size + sum(b.size for level in self.bands for b in level)

    def blocks(self):
        """Yield ``(level, direction, array)`` in canonical order.

        Level -1 marks the lowpass residual.  Canonical order is the coarsest
        lowpass first, then levels coarse-to-fine, directions ascending.
        """
        yield -1, 0, self.lowpass
        for level in range(len(self.bands) - 1, -1, -1):
            for d, band in enumerate(self.bands[level]):
                yield level, d, band

    def anchors(self):
        """Yield ``(scale, positions)`` per block in canonical order.

        ``positions`` are (row, col) on the block's own grid, which is the
        source grid subsampled by ``scale``.
        """
        yield 2 ** len(self.bands), np.argwhere(np.ones(self.lowpass.shape, dtype=bool))
        for level in range(len(self.bands) - 1, -1, -1):
            for pos in dfb_anchors(self.band_dims[level], len(self.bands[level])):
                yield 2 ** level, pos

    def flatten(self) -> np.ndarray:
        return np.concatenate([b.reshape(-1) for _, _, b in self.blocks()])

    def with_vector(self, vec) -> "ContourletPyramid":
        """Copy of this pyramid with coefficients replaced from a canonical vector."""
        vec = np.asarray(vec, dtype=float)
        if vec.size != self.coefficient_count():
            raise MalformedPyramid(f"vector has {vec.size} entries, pyramid holds {self.coefficient_count()}")
        pos = 0
        lowpass = None
        bands = [[None] * len(level) for level in self.bands]
        for level, d, block in self.blocks():
            chunk = vec[pos: pos + block.size].reshape(block.shape)
            pos += block.size
            if level < 0:
                lowpass = chunk
            else:
                bands[level][d] = chunk
        return ContourletPyramid(lowpass, bands, self.config, self.source_dims, list(self.band_dims))


def ct_decompose(x, config: PyramidConfig | None = None) -> ContourletPyramid:
    """Contourlet decomposition: LP level by level, DFB on each bandpass."""
    config = config or PyramidConfig()
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or min(x.shape) < 2 ** config.levels:
        raise TooSmall(f"{x.shape} too small for a {config.levels}-level pyramid")
    current = x
    bands, dims = [], []
    for n_dirs in config.dirs_per_level:
        low, band = lp_decompose(current, config.boundary)
        dims.append(band.shape)
        bands.append(dfb_decompose(band, n_dirs))
        current = low
    return ContourletPyramid(current, bands, config, x.shape, dims)


def ct_reconstruct(p: ContourletPyramid) -> np.ndarray:
    config = p.config
    if len(p.bands) != config.levels:
        raise MalformedPyramid(f"{len(p.bands)} band levels for a {config.levels}-level config")
    dims, shape = [], tuple(p.source_dims)
    for _ in range(config.levels):
        dims.append(shape)
        shape = tuple(-(-s // 2) for s in shape)
    if p.lowpass.shape != shape:
        raise MalformedPyramid(f"lowpass {p.lowpass.shape}, expected {shape}")
    current = np.asarray(p.lowpass, dtype=float)
    for level in range(config.levels - 1, -1, -1):
        if len(p.bands[level]) != config.dirs_per_level[level]:
            raise MalformedPyramid(f"level {level} has {len(p.bands[level])} subbands")
        try:
            band = dfb_reconstruct(p.bands[level], dims[level])
        except DimMismatch as exc:
            raise MalformedPyramid(str(exc)) from exc
        current = lp_reconstruct(current, band, config.boundary)
    return current


# ---------------------------------------------------------------------------
# Non-subsampled variant (full-resolution directional bands)
# ---------------------------------------------------------------------------

def _fan_response(coeffs, basis, w1, w2, sign):
    nu1 = basis[0, 0] * w1 + basis[1, 0] * w2
    nu2 = basis[0, 1] * w1 + basis[1, 1] * w2
    t = (np.cos(nu2) - np.cos(nu1)) / 2.0
    return polynomial.polyval(sign * t, coeffs)


def ns_directional_bands(x, level: int, n_dirs: int,
                         boundary=("symmetric", "periodic")) -> list[np.ndarray]:
    """Full-resolution directional bands of one pyramid level.

    The bandpass of ``level`` (1-based, finest = 1) is formed with the
    undecimated (a trous) 9/7 pyramid, then split by the DFB's equivalent
    directional filters dilated to that level's sampling.  Every band keeps
    the input shape; subbands follow :func:`dfb_decompose`'s ordering.
    """
    levels = _dir_levels(n_dirs)
    x = np.asarray(x, dtype=float)
    _check_boundary(boundary)
    r, c = x.shape
    ext = x
    if boundary[0] == "symmetric":
        ext = np.concatenate([ext, ext[::-1]], axis=0)
    if boundary[1] == "symmetric":
        ext = np.concatenate([ext, ext[:, ::-1]], axis=1)
    w1 = 2 * np.pi * np.fft.fftfreq(ext.shape[0])[:, None]
    w2 = 2 * np.pi * np.fft.fftfreq(ext.shape[1])[None, :]
    spectrum = np.fft.fft2(ext)

    def lowpass(scale):
        return (polynomial.polyval(np.cos(scale * w1), _POLY_A)
                * polynomial.polyval(np.cos(scale * w2), _POLY_A) / 2.0)

    approx = np.ones_like(w1 * w2)
    for j in range(level - 1):
        approx = approx * lowpass(2 ** j)
    band = approx * (1.0 - lowpass(2 ** (level - 1)))
    d1, d2 = 2 ** (level - 1) * w1, 2 ** (level - 1) * w2

    responses = []
    for k in range(2 ** levels):
        path = [(k >> (levels - 1 - s)) & 1 for s in range(levels)]
        resp = np.ones_like(band)
        for s, branch in enumerate(path):
            # channel lattice basis at stage s: I, Q, then Q.Q.shear
            basis = np.eye(2, dtype=int)
            if s >= 1:
                basis = _QUINCUNX
            if s == 2:
                basis = _QUINCUNX @ _QUINCUNX @ _SHEARS[2 * path[0] + path[1]]
            if branch == 0:
                resp = resp * _fan_response(_POLY_A, basis, d1, d2, 1.0)
            else:
                resp = resp * _fan_response(_POLY_S, basis, d1, d2, -1.0)
        responses.append(resp)
    out = []
    for k in _ANGULAR_ORDER[levels]:
        y = np.real(np.fft.ifft2(spectrum * band * responses[k]))
        out.append(y[:r, :c])
    return out
