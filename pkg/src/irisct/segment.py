"""Pupil/iris localisation, collarette isolation and occlusion masking."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .dataio import GrayImage
from .errors import NoBoundaryFound

__all__ = [
    "Circle",
    "EyelidLine",
    "Segmentation",
    "SegmentConfig",
    "locate_pupil_iris",
    "detect_eyelids",
    "detect_eyelashes",
    "isolate_collarette",
    "annulus_mask",
    "segment",
]


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"circle radius must be positive, got {self.r}")


@dataclass(frozen=True)
class EyelidLine:
    """Line ``a*x + b*y = c`` with the clipped side (``upper`` or ``lower``)."""

    a: float
    b: float
    c: float
    side: str

    def y_at(self, x: float) -> float:
        return (self.c - self.a * x) / self.b


@dataclass
class Segmentation:
    pupil: Circle
    iris: Circle
    collarette: Circle
    eyelid_lines: tuple = ()
    noise_mask: np.ndarray | None = None


@dataclass(frozen=True)
class SegmentConfig:
    r_min: float = 15.0
    r_max: float = 130.0
    id_sigma: float = 1.5
    id_floor: float = 4.0
    collarette_fraction: float = 0.5
    hough_vote_floor: int = 40
    eyelid_margin: float = 2.0
    gabor_threshold: float = 75.0
    variance_threshold: float = 6.0
    eyelash_window: int = 5


N_ANGLES = 64


# ---------------------------------------------------------------------------
# integro-differential operator
# ---------------------------------------------------------------------------

def _ring_means(img, centers, radii, angles):
    """Mean intensity on circles: result[c, r] over the given angles."""
    cx = centers[:, 0][:, None, None]
    cy = centers[:, 1][:, None, None]
    rr = radii[None, :, None]
    xs = cx + rr * np.cos(angles)[None, None, :]
    ys = cy + rr * np.sin(angles)[None, None, :]
    vals = ndimage.map_coordinates(img, [ys.ravel(), xs.ravel()], order=1, mode="nearest")
    return vals.reshape(xs.shape).mean(axis=2)


def _id_response(img, centers, radii, angles, sigma):
    """Gaussian-smoothed radial derivative of the contour mean."""
    means = _ring_means(img, centers, radii, angles)
    step = radii[1] - radii[0]
    deriv = np.gradient(means, step, axis=1)
    return ndimage.gaussian_filter1d(deriv, sigma, axis=1, mode="nearest"), means


def _peak(response, radii):
    """Best (candidate, sub-sample radius, value) with parabolic refinement."""
    flat = int(np.argmax(response))
    ci, ri = np.unravel_index(flat, response.shape)
    value = response[ci, ri]
    r = radii[ri]
    if 0 < ri < len(radii) - 1:
        y0, y1, y2 = response[ci, ri - 1: ri + 2]
        denom = y0 - 2 * y1 + y2
        if denom < 0:
            r = r + 0.5 * (y0 - y2) / denom * (radii[1] - radii[0])
    return ci, float(r), float(value)


def _grid(cx, cy, half, step):
    offs = np.arange(-half, half + 1e-9, step)
    gx, gy = np.meshgrid(cx + offs, cy + offs)
    return np.column_stack([gx.ravel(), gy.ravel()])


def _search(img, centers, radii, angles, sigma, valid=None):
    resp, means = _id_response(img, centers, radii, angles, sigma)
    if valid is not None:
        resp = np.where(valid(means, radii), resp, -np.inf)
    return resp


def locate_pupil_iris(img: GrayImage, r_min: float = 15.0, r_max: float = 130.0,
                      sigma: float = 1.5, floor: float = 4.0) -> tuple[Circle, Circle]:
    """Find pupil and iris boundaries with the integro-differential operator.

    The pupil is searched first over dark image locations; the iris centre is
    then constrained to lie within 15 px of the pupil centre and its contour
    integral uses the lateral arcs only, which eyelids rarely cover.
    """
    if not r_min < r_max:
        raise ValueError("r_min must be smaller than r_max")
    x = img.as_float()
    h, w = x.shape
    smooth = ndimage.gaussian_filter(x, 2.0)
    lo, med = smooth.min(), np.median(smooth)
    if med - lo < 1e-6:
        raise NoBoundaryFound("image has no contrast")
    dark_level = lo + 0.35 * (med - lo)
    all_angles = 2 * np.pi * np.arange(N_ANGLES) / N_ANGLES

    # pupil: coarse over dark pixels, then refine around the best hit
    ys, xs = np.nonzero(smooth[::4, ::4] <= dark_level)
    centers = np.column_stack([xs * 4.0, ys * 4.0])
    if len(centers) > 1500:
        centers = centers[:: int(np.ceil(len(centers) / 1500))]
    pupil_r_max = min(r_max, 0.5 * min(h, w))
    radii = np.arange(r_min, pupil_r_max + 1e-9, 1.0)
    if len(radii) < 3:
        raise ValueError("radius range too narrow")

    def dark_inside(means, rad):
        # the contour three samples inside must still be dark
        inner = np.concatenate([np.full((means.shape[0], 3), -np.inf), means[:, :-3]], axis=1)
        return inner <= dark_level

    best = None
    for half, step, pool in ((0, 4.0, centers), (4, 1.0, None), (1, 0.25, None)):
        if pool is None:
            pool = _grid(best[0], best[1], half, step)
        resp = _search(smooth if step == 4.0 else x, pool, radii, all_angles, sigma, dark_inside)
        ci, r, val = _peak(resp, radii)
        best = (pool[ci, 0], pool[ci, 1], r, val)
    px, py, pr, pval = best
    if not np.isfinite(pval) or pval < floor:
        raise NoBoundaryFound(f"pupil boundary response {pval:.2f} below floor {floor}")
    pupil = Circle(float(px), float(py), float(pr))

    # iris: lateral arcs, centre within 15 px of the pupil centre
    lateral = all_angles[(np.abs(np.cos(all_angles)) >= np.cos(np.pi / 4) - 1e-9)]
    iris_radii = np.arange(max(pr + 6.0, 1.35 * pr), r_max + 1e-9, 1.0)
    if len(iris_radii) < 3:
        raise NoBoundaryFound("no room for an iris boundary outside the pupil")
    best = None
    for half, step in ((14, 2.0), (2, 0.5), (0.5, 0.25)):
        cx0, cy0 = (px, py) if best is None else best[:2]
        pool = _grid(cx0, cy0, half, step)
        pool = pool[np.hypot(pool[:, 0] - px, pool[:, 1] - py) <= 15.0]
        resp = _search(x, pool, iris_radii, lateral, sigma)
        ci, r, val = _peak(resp, iris_radii)
        best = (pool[ci, 0], pool[ci, 1], r, val)
    icx, icy, ir, ival = best
    if ival < floor:
        raise NoBoundaryFound(f"iris boundary response {ival:.2f} below floor {floor}")
    iris = Circle(float(icx), float(icy), float(ir))
    if np.hypot(px - icx, py - icy) >= ir:
        raise NoBoundaryFound("pupil centre falls outside the detected iris")
    return pupil, iris


def isolate_collarette(pupil: Circle, iris: Circle, fraction: float = 0.5) -> Circle:
    """Circle around the pupil centre at ``fraction`` of the pupil-iris band."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    return Circle(pupil.cx, pupil.cy, pupil.r + fraction * (iris.r - pupil.r))


def annulus_mask(shape, inner: Circle, outer: Circle) -> np.ndarray:
    yy, xx = np.mgrid[0: shape[0], 0: shape[1]]
    return (np.hypot(xx - inner.cx, yy - inner.cy) > inner.r) & (
        np.hypot(xx - outer.cx, yy - outer.cy) <= outer.r)


# ---------------------------------------------------------------------------
# eyelids
# ---------------------------------------------------------------------------

def _hough_lines(points, weights, thetas, rho_res=1.0):
    """Accumulate ``x cos t + y sin t = rho`` votes; returns (votes, theta, rho)."""
    if len(points) == 0:
        return 0.0, None, None
    rhos = points[:, 0:1] * np.cos(thetas)[None, :] + points[:, 1:2] * np.sin(thetas)[None, :]
    bins = np.rint(rhos / rho_res).astype(int)
    offset = bins.min()
    acc = np.zeros((len(thetas), bins.max() - offset + 1))
    for t in range(len(thetas)):
        np.add.at(acc[t], bins[:, t] - offset, weights)
    t, b = np.unravel_index(int(np.argmax(acc)), acc.shape)
    return float(acc[t, b]), float(thetas[t]), float((b + offset) * rho_res)


def detect_eyelids(img: GrayImage, seg: Segmentation, vote_floor: int = 40,
                   margin: float = 2.0) -> tuple[tuple, np.ndarray]:
    """Fit the upper and lower eyelid lines inside the iris.

    Edge points are horizontal edges (strong vertical gradient) strictly
    inside the iris, above or below the pupil.  Returns ``(lines, occluded)``
    where ``occluded`` is true above the upper clip line and below the lower
    one; each clip line is horizontal, through the point where the fitted
    line meets the iris circle nearest the pupil, moved ``margin`` px toward
    the pupil.
    """
    x = ndimage.gaussian_filter(img.as_float(), 1.0)
    gy = ndimage.sobel(x, axis=0) / 8.0
    h, w = x.shape
    yy, xx = np.mgrid[0:h, 0:w]
    p, i = seg.pupil, seg.iris
    inside = np.hypot(xx - i.cx, yy - i.cy) < i.r - 4
    away = np.hypot(xx - p.cx, yy - p.cy) > p.r + 4
    # thin edges: keep vertical-gradient maxima along each column
    mag = np.abs(gy)
    thin = (mag >= np.roll(mag, 1, axis=0)) & (mag >= np.roll(mag, -1, axis=0))
    strong = thin & (mag > 12.0)
    thetas = np.deg2rad(np.arange(60, 121, 1.0))   # near-horizontal lines
    occluded = np.zeros((h, w), dtype=bool)
    lines = []
    for side, region, sign in (("upper", yy < p.cy, 1.0), ("lower", yy > p.cy, -1.0)):
        # lid above the iris: bright skin over darker iris, gradient < 0 going down
        sel = inside & away & region & strong & (sign * gy < 0)
        pts = np.column_stack([xx[sel], yy[sel]]).astype(float)
        votes, theta, rho = _hough_lines(pts, np.ones(len(pts)), thetas)
        if votes < vote_floor:
            continue
        a, b, c = np.cos(theta), np.sin(theta), rho
        line = EyelidLine(float(a), float(b), float(c), side)
        lines.append(line)
        # intersections with the iris circle; keep the one nearest the pupil
        ys = _line_circle_ys(line, i)
        if not ys:
            ys = [line.y_at(i.cx)]
        if side == "upper":
            clip = max(ys) + margin
            occluded |= yy <= clip
        else:
            clip = min(ys) - margin
            occluded |= yy >= clip
    return tuple(lines), occluded


def _line_circle_ys(line: EyelidLine, circle: Circle) -> list[float]:
    # parametrise by x: y = (c - a x) / b, substitute into the circle equation
    a, b, c = line.a, line.b, line.c
    k, m = -a / b, c / b
    A = 1 + k * k
    B = 2 * (k * (m - circle.cy) - circle.cx)
    C = circle.cx ** 2 + (m - circle.cy) ** 2 - circle.r ** 2
    disc = B * B - 4 * A * C
    if disc < 0:
        return []
    xs = [(-B + s * np.sqrt(disc)) / (2 * A) for s in (-1, 1)]
    return [k * xv + m for xv in xs]


# ---------------------------------------------------------------------------
# eyelashes
# ---------------------------------------------------------------------------

def _even_gabor(sigma=1.0, wavelength=4.0):
    half = int(np.ceil(3 * sigma))
    t = np.arange(-half, half + 1, dtype=float)
    k = np.exp(-0.5 * (t / sigma) ** 2) * np.cos(2 * np.pi * t / wavelength)
    return k - k.mean()


def detect_eyelashes(img: GrayImage, gabor_threshold: float = 75.0, variance_threshold: float = 6.0,
                     window: int = 5, region: np.ndarray | None = None) -> np.ndarray:
    """Mask eyelash pixels.

    A pixel is flagged when the even 1-D Gabor response along its row is
    strongly negative (a thin dark line crossing the row), or when the
    intensity variance in a ``window`` x ``window`` neighbourhood is small
    while the local mean is darker than the median (clumped lashes).
    ``region`` limits the output and the median to a subset of pixels.
    """
    if gabor_threshold <= 0 or variance_threshold <= 0:
        raise ValueError("thresholds must be positive")
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be a positive odd size")
    x = img.as_float()
    response = ndimage.correlate1d(x, _even_gabor(), axis=1, mode="reflect")
    separable = response < -gabor_threshold
    mean = ndimage.uniform_filter(x, window, mode="reflect")
    var = np.maximum(ndimage.uniform_filter(x * x, window, mode="reflect") - mean ** 2, 0.0)
    median = np.median(x if region is None else x[region])
    multiple = (var < variance_threshold) & (mean < median)
    mask = separable | multiple
    if region is not None:
        mask &= region
    return mask


# ---------------------------------------------------------------------------
# full segmentation
# ---------------------------------------------------------------------------

def segment(img: GrayImage, config: SegmentConfig | None = None) -> Segmentation:
    """Boundaries, collarette and the usable-pixel mask for one eye image."""
    cfg = config or SegmentConfig()
    pupil, iris = locate_pupil_iris(img, cfg.r_min, cfg.r_max, cfg.id_sigma, cfg.id_floor)
    collarette = isolate_collarette(pupil, iris, cfg.collarette_fraction)
    seg = Segmentation(pupil, iris, collarette)
    lines, occluded = detect_eyelids(img, seg, cfg.hough_vote_floor, cfg.eyelid_margin)
    region = annulus_mask(img.pixels.shape, pupil, collarette)
    lashes = detect_eyelashes(img, cfg.gabor_threshold, cfg.variance_threshold,
                              cfg.eyelash_window, region=annulus_mask(img.pixels.shape, pupil, iris))
    seg.eyelid_lines = lines
    seg.noise_mask = region & ~occluded & ~lashes
    return seg
