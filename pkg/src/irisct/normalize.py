"""Rubber-sheet unwrapping of the collarette band and the mid-strip crop."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .dataio import GrayImage
from .errors import DegenerateGeometry, TooFewRows
from .segment import Segmentation

__all__ = ["NormalizedIris", "Strip", "rubber_sheet", "sample_grid", "mid_strip", "STRIP_ROWS"]

# 1-based rows 5..12 of the normalized image
STRIP_ROWS = slice(4, 12)


@dataclass
class NormalizedIris:
    data: np.ndarray    # (radial_res, angular_res), values in [0, 1]
    mask: np.ndarray    # True = valid sample

    @property
    def radial_res(self) -> int:
        return self.data.shape[0]

    @property
    def angular_res(self) -> int:
        return self.data.shape[1]


@dataclass
class Strip:
    data: np.ndarray    # 8 x angular_res
    mask: np.ndarray

    @property
    def n_pixel(self) -> int:
        return self.data.size

    @classmethod
    def from_array(cls, data, mask=None) -> "Strip":
        data = np.asarray(data, dtype=float)
        if mask is None:
            mask = np.ones(data.shape, dtype=bool)
        return cls(data, np.asarray(mask, dtype=bool))


def rubber_sheet(img: GrayImage, seg: Segmentation, radial_res: int = 20,
                 angular_res: int = 240) -> NormalizedIris:
    """Sample the band between the pupil and collarette boundaries.

    Column j follows the ray at angle ``2*pi*j/angular_res`` from the pupil
    centre (x to the right, y down); row i interpolates linearly from the
    pupil boundary (i = 0) to the collarette boundary (i = radial_res - 1).
    The first and last rows lie on the boundaries and are marked invalid,
    as are samples on noise-masked or out-of-image pixels.
    """
    if radial_res < 13:
        raise TooFewRows(f"radial_res {radial_res} < 13 leaves no room for rows 5-12")
    xs, ys = sample_grid(seg, radial_res, angular_res)
    pixels = img.as_float()
    h, w = pixels.shape
    data = ndimage.map_coordinates(pixels, [ys, xs], order=1, mode="nearest") / 255.0

    inside = (xs >= 0) & (xs <= w - 1) & (ys >= 0) & (ys <= h - 1)
    mask = inside.copy()
    if seg.noise_mask is not None:
        ri = np.clip(np.rint(ys).astype(int), 0, h - 1)
        ci = np.clip(np.rint(xs).astype(int), 0, w - 1)
        mask &= seg.noise_mask[ri, ci]
    mask[0, :] = False
    mask[-1, :] = False
    data = np.where(mask, np.clip(data, 0.0, 1.0), 0.0)
    return NormalizedIris(data, mask)


def sample_grid(seg: Segmentation, radial_res: int = 20, angular_res: int = 240):
    """Source coordinates ``(xs, ys)`` of every rubber-sheet sample.

    Both arrays have shape (radial_res, angular_res).
    """
    if angular_res < 8:
        raise ValueError(f"angular_res must be >= 8, got {angular_res}")
    p, c = seg.pupil, seg.collarette
    theta = 2 * np.pi * np.arange(angular_res) / angular_res
    cos, sin = np.cos(theta), np.sin(theta)
    inner_x, inner_y = p.cx + p.r * cos, p.cy + p.r * sin
    # collarette boundary point along the pupil-centred ray
    ox, oy = p.cx - c.cx, p.cy - c.cy
    proj = ox * cos + oy * sin
    disc = proj ** 2 - (ox ** 2 + oy ** 2 - c.r ** 2)
    if np.any(disc <= 0):
        raise DegenerateGeometry("pupil centre lies outside the collarette")
    reach = -proj + np.sqrt(disc)
    if np.any(reach <= p.r):
        raise DegenerateGeometry("collarette radius does not exceed the pupil radius")
    outer_x, outer_y = p.cx + reach * cos, p.cy + reach * sin

    s = np.linspace(0.0, 1.0, radial_res)[:, None]
    xs = (1 - s) * inner_x + s * outer_x
    ys = (1 - s) * inner_y + s * outer_y
    return xs, ys


def mid_strip(n: NormalizedIris) -> Strip:
    """Rows 5 through 12 (1-based) with their masks."""
    if n.radial_res < 12:
        raise TooFewRows(f"need at least 12 rows, got {n.radial_res}")
    return Strip(n.data[STRIP_ROWS].copy(), n.mask[STRIP_ROWS].copy())
