"""Image loading, dataset indexing and a synthetic eye renderer."""

from __future__ import annotations

import glob
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from .errors import CorruptImage, EmptyDataset, SpecOutOfBounds, UnsupportedFormat

__all__ = [
    "GrayImage",
    "load_image",
    "save_image",
    "DatasetEntry",
    "DatasetIndex",
    "scan_dataset",
    "DEFAULT_LAYOUT",
    "SynthEyeSpec",
    "synth_eye",
    "write_synthetic_corpus",
    "subject_spec",
]

_SUFFIXES = {".pgm": "PPM", ".bmp": "BMP", ".png": "PNG"}


@dataclass(frozen=True)
class GrayImage:
    """8-bit grayscale image stored as a (height, width) uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValueError(f"expected a 2-D pixel array, got shape {px.shape}")
        if px.dtype != np.uint8:
            if px.size and (px.min() < 0 or px.max() > 255):
                raise ValueError("pixel values must lie in 0..255")
            px = px.astype(np.uint8)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def as_float(self) -> np.ndarray:
        return self.pixels.astype(float)

    def __eq__(self, other):
        return isinstance(other, GrayImage) and np.array_equal(self.pixels, other.pixels)

    def __hash__(self):
        return hash(self.pixels.tobytes())


def load_image(path) -> GrayImage:
    """Read an 8-bit PGM, BMP or PNG file.

    RGB files are accepted when all three channels are equal; anything else
    (16-bit, colour, other containers) raises UnsupportedFormat.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(str(path))
    try:
        img = Image.open(path)
    except UnidentifiedImageError as exc:
        if path.suffix.lower() in _SUFFIXES:
            raise CorruptImage(f"{path}: unreadable {path.suffix} data") from exc
        raise UnsupportedFormat(f"{path}: not a recognised image") from exc
    with img:
        if img.format not in ("PPM", "BMP", "PNG"):
            raise UnsupportedFormat(f"{path}: format {img.format} not supported")
        try:
            img.load()
        except (OSError, SyntaxError, ValueError) as exc:
            raise CorruptImage(f"{path}: {exc}") from exc
        mode = img.mode
        if mode in ("L", "1"):
            arr = np.asarray(img.convert("L"))
        elif mode in ("P", "RGB", "RGBA"):
            rgb = np.asarray(img.convert("RGB"))
            if not (np.array_equal(rgb[..., 0], rgb[..., 1]) and np.array_equal(rgb[..., 0], rgb[..., 2])):
                raise UnsupportedFormat(f"{path}: colour image (channels differ)")
            arr = rgb[..., 0]
        else:
            raise UnsupportedFormat(f"{path}: pixel mode {mode} is not 8-bit gray")
    return GrayImage(np.array(arr, dtype=np.uint8))


def save_image(img: GrayImage, path) -> None:
    """Write ``img`` losslessly; the format follows the file suffix."""
    path = Path(path)
    fmt = _SUFFIXES.get(path.suffix.lower())
    if fmt is None:
        raise UnsupportedFormat(f"cannot write {path.suffix!r}; use .pgm, .bmp or .png")
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(img.pixels, dtype=np.uint8), mode="L").save(path, format=fmt)


# ---------------------------------------------------------------------------
# dataset index
# ---------------------------------------------------------------------------

# CASIA v1 keeps each eye as <subject>/<session>/<subject>_<session>_<sample>.bmp
DEFAULT_LAYOUT = "{subject}/{session}/{subject}_{session}_{sample}.bmp"
_FIELDS = ("subject", "session", "sample")


@dataclass(frozen=True)
class DatasetEntry:
    subject_id: str
    sample_id: str
    session: int
    path: str


@dataclass(frozen=True)
class DatasetIndex:
    entries: tuple = field(default_factory=tuple)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def subjects(self) -> list[str]:
        return sorted({e.subject_id for e in self.entries})

    def summary(self) -> str:
        return f"{len(self.subjects)} subjects, {len(self.entries)} samples"


def _layout_regex(layout: str) -> re.Pattern:
    parts = re.split(r"(\{subject\}|\{session\}|\{sample\})", layout)
    seen = set()
    out = []
    for part in parts:
        name = part[1:-1] if part in {"{%s}" % f for f in _FIELDS} else None
        if name is None:
            out.append(re.escape(part))
        elif name in seen:
            out.append(f"(?P={name})")
        else:
            seen.add(name)
            out.append(f"(?P<{name}>[^/]+)")
    missing = set(_FIELDS) - seen - {"session"}
    if missing:
        raise ValueError(f"layout {layout!r} lacks placeholder(s) {sorted(missing)}")
    return re.compile("".join(out))


def scan_dataset(root, layout: str = DEFAULT_LAYOUT) -> DatasetIndex:
    """Index every file under ``root`` whose relative path matches ``layout``.

    ``layout`` uses ``{subject}``, ``{session}`` and ``{sample}`` placeholders
    (session is optional and defaults to 1).  Entries are sorted by
    (subject, session, sample).
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(str(root))
    pattern = _layout_regex(layout)
    globbed = layout
    for name in _FIELDS:
        globbed = globbed.replace("{%s}" % name, "*")
    entries = {}
    for hit in sorted(glob.glob(os.path.join(glob.escape(str(root)), globbed))):
        rel = Path(hit).relative_to(root).as_posix()
        m = pattern.fullmatch(rel)
        if m is None or not Path(hit).is_file():
            continue
        groups = m.groupdict()
        session_text = groups.get("session") or "1"
        try:
            session = int(session_text)
        except ValueError:
            continue
        key = (groups["subject"], groups["sample"])
        if key in entries:
            raise ValueError(f"duplicate subject/sample {key} at {hit}")
        entries[key] = DatasetEntry(groups["subject"], groups["sample"], session, hit)
    if not entries:
        raise EmptyDataset(f"no files under {root} match {layout!r}")
    ordered = sorted(entries.values(), key=lambda e: (e.subject_id, e.session, e.sample_id))
    return DatasetIndex(tuple(ordered))


# ---------------------------------------------------------------------------
# synthetic eyes
# ---------------------------------------------------------------------------

PUPIL_LEVEL = 25.0
IRIS_LEVEL = 110.0
IRIS_CONTRAST = 35.0
SCLERA_LEVEL = 200.0
LID_LEVEL = 180.0
LASH_LEVEL = 10.0


@dataclass(frozen=True)
class SynthEyeSpec:
    """Ground truth for one rendered eye.

    Circles are ``(cx, cy, r)`` in pixels.  ``rotation`` turns the iris
    texture (radians) about the pupil centre.  ``noise_seed`` drives sensor
    noise and eyelash streaks independently of the texture.
    """

    pupil: tuple
    iris: tuple
    texture_seed: int = 0
    noise_level: float = 0.0
    eyelid_occlusion: float = 0.0
    rotation: float = 0.0
    noise_seed: int = 0
    eyelid_tilt: float = 0.0

    def __post_init__(self):
        px, py, pr = self.pupil
        ix, iy, ir = self.iris
        if not 0.0 <= self.noise_level <= 1.0:
            raise SpecOutOfBounds(f"noise_level {self.noise_level} outside [0, 1]")
        if not 0.0 <= self.eyelid_occlusion <= 1.0:
            raise SpecOutOfBounds(f"eyelid_occlusion {self.eyelid_occlusion} outside [0, 1]")
        if pr <= 0 or ir <= pr:
            raise SpecOutOfBounds("need 0 < pupil radius < iris radius")
        if np.hypot(px - ix, py - iy) + pr >= ir:
            raise SpecOutOfBounds("pupil circle must lie strictly inside the iris circle")

    def scaled(self, factor: float, about=(0.0, 0.0)) -> "SynthEyeSpec":
        ax, ay = about

        def move(c):
            return (ax + (c[0] - ax) * factor, ay + (c[1] - ay) * factor, c[2] * factor)

        return replace(self, pupil=move(self.pupil), iris=move(self.iris))


_TEXTURE_GRID = (64, 512)     # (radial, angular) texture samples


def _texture_field(seed: int) -> np.ndarray:
    """Unit-variance band-limited random field over (rho, theta), periodic in theta."""
    rng = np.random.default_rng(seed)
    nr, nt = _TEXTURE_GRID
    # the radial axis is mirrored so the field has no seam in rho either
    white = rng.standard_normal((2 * nr, nt))
    fr = np.fft.fftfreq(2 * nr)[:, None] * 2 * nr / 2      # cycles per unit rho
    ft = np.fft.fftfreq(nt)[None, :] * nt                   # cycles per turn
    # broad mid-band emphasis peaking at 2 radial and 10 angular cycles per
    # turn; slow enough on the pixel grid that bilinear resampling stays
    # accurate, broad enough to keep many independent texture features
    radial = np.exp(-0.5 * ((np.abs(fr) - 2.0) / 3.0) ** 2)
    angular = np.exp(-0.5 * ((np.abs(ft) - 10.0) / 12.0) ** 2)
    field_ = np.real(np.fft.ifft2(np.fft.fft2(white) * radial * angular))[:nr]
    field_ -= field_.mean()
    return field_ / field_.std()


def _texture_at(field_, rho, theta):
    nr, nt = field_.shape
    rows = np.clip(rho, 0.0, 1.0) * (nr - 1)
    cols = (theta % (2 * np.pi)) / (2 * np.pi) * nt
    padded = np.concatenate([field_, field_[:, :1]], axis=1)
    return ndimage.map_coordinates(padded, [rows, cols], order=1, mode="nearest")


def _coverage(signed_distance):
    """Fraction of a pixel covered by the region ``signed_distance < 0``."""
    return np.clip(0.5 - signed_distance, 0.0, 1.0)


def synth_eye(spec: SynthEyeSpec, width: int, height: int, supersample: int = 2) -> GrayImage:
    """Render a synthetic eye; a pure function of its arguments."""
    px, py, pr = spec.pupil
    ix, iy, ir = spec.iris
    if ix - ir < 0 or iy - ir < 0 or ix + ir > width - 1 or iy + ir > height - 1:
        raise SpecOutOfBounds(f"iris circle {spec.iris} does not fit in {width}x{height}")
    s = int(supersample)
    offsets = (np.arange(s) + 0.5) / s - 0.5
    ys = (np.arange(height)[:, None] + offsets[None, :]).reshape(-1)
    xs = (np.arange(width)[:, None] + offsets[None, :]).reshape(-1)
    Y, X = np.meshgrid(ys, xs, indexing="ij")

    field_ = _texture_field(spec.texture_seed)
    dxp, dyp = X - px, Y - py
    rp_dist = np.hypot(dxp, dyp)
    theta = np.arctan2(dyp, dxp)
    # distance from pupil centre to the iris boundary along each ray
    ox, oy = px - ix, py - iy
    proj = ox * np.cos(theta) + oy * np.sin(theta)
    ray_iris = -proj + np.sqrt(np.maximum(proj ** 2 - (ox ** 2 + oy ** 2 - ir ** 2), 0.0))
    rho = (rp_dist - pr) / np.maximum(ray_iris - pr, 1e-9)
    texture = IRIS_LEVEL + IRIS_CONTRAST * _texture_at(field_, rho, theta - spec.rotation)

    in_pupil = _coverage(rp_dist - pr)
    in_iris = _coverage(np.hypot(X - ix, Y - iy) - ir)
    img = SCLERA_LEVEL * (1 - in_iris) + texture * in_iris
    img = img * (1 - in_pupil) + PUPIL_LEVEL * in_pupil

    e = spec.eyelid_occlusion
    band = ir - pr
    upper = iy - ir + 2 * min(e, 0.5) * band
    lower = iy + ir - 2 * max(e - 0.5, 0.0) * band
    tilt = spec.eyelid_tilt * (X - ix)
    lid = np.maximum(_coverage(Y - (upper + tilt)), _coverage((lower + tilt) - Y))
    img = img * (1 - lid) + LID_LEVEL * lid

    img = img.reshape(height, s, width, s).mean(axis=(1, 3))

    if spec.noise_level > 0:
        rng = np.random.default_rng(spec.noise_seed)
        img = _draw_lashes(img, rng, spec, int(round(20 * spec.noise_level)), upper)
        img = img + rng.normal(0.0, 10.0 * spec.noise_level, img.shape)
    return GrayImage(np.clip(np.rint(img), 0, 255).astype(np.uint8))


def _draw_lashes(img, rng, spec, count, lid_y):
    """Thin dark streaks hanging from the upper lid across the iris."""
    ix, iy, ir = spec.iris
    h, w = img.shape
    out = img.copy()
    for _ in range(count):
        x0 = ix + rng.uniform(-0.8, 0.8) * ir
        y0 = max(lid_y, iy - ir) + rng.uniform(-4, 2)
        length = rng.uniform(10, 30)
        slant = rng.uniform(-0.25, 0.25)
        for t in np.arange(0.0, length, 0.5):
            y = int(round(y0 + t))
            x = int(round(x0 + slant * t))
            if 0 <= y < h and 0 <= x < w:
                out[y, x] = LASH_LEVEL
    return out


# ---------------------------------------------------------------------------
# synthetic corpus
# ---------------------------------------------------------------------------

def subject_spec(subject: int, seed: int = 0, width: int = 320, height: int = 280) -> SynthEyeSpec:
    """Base (session-independent) eye for one synthetic subject."""
    rng = np.random.default_rng([seed, subject])
    pr = rng.uniform(32, 40)
    ir = rng.uniform(100, 112)
    cx, cy = width / 2 + rng.uniform(-6, 6), height / 2 + rng.uniform(-6, 6)
    off = rng.uniform(-3, 3, size=2)
    return SynthEyeSpec(
        pupil=(cx + off[0], cy + off[1], pr),
        iris=(cx, cy, ir),
        texture_seed=int(rng.integers(2 ** 31)),
    )


def sample_spec(base: SynthEyeSpec, subject: int, sample: int, seed: int = 0,
                noise_level: float = 0.15) -> SynthEyeSpec:
    """One capture of a subject: small shift, fresh noise, light eyelid cover."""
    rng = np.random.default_rng([seed, subject, sample, 1])
    dx, dy = rng.integers(-3, 4, size=2)

    def move(c):
        return (c[0] + dx, c[1] + dy, c[2])

    return replace(
        base,
        pupil=move(base.pupil),
        iris=move(base.iris),
        noise_level=noise_level,
        eyelid_occlusion=float(rng.uniform(0.0, 0.2)),
        noise_seed=int(rng.integers(2 ** 31)),
    )


def write_synthetic_corpus(root, n_subjects: int = 10, n_samples: int = 6, seed: int = 0,
                           width: int = 320, height: int = 280, noise_level: float = 0.15,
                           train_samples: int = 3) -> DatasetIndex:
    """Render a corpus in the default layout and return its index.

    The first ``train_samples`` captures of each subject go in session 1,
    the rest in session 2.
    """
    root = Path(root)
    for s in range(n_subjects):
        base = subject_spec(s, seed, width, height)
        for k in range(n_samples):
            spec = sample_spec(base, s, k, seed, noise_level)
            session = 1 if k < train_samples else 2
            subject = f"{s + 1:03d}"
            path = root / DEFAULT_LAYOUT.format(subject=subject, session=session, sample=k + 1)
            save_image(synth_eye(spec, width, height), path)
    return scan_dataset(root, DEFAULT_LAYOUT)
