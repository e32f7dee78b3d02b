from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from irisct.dataio import GrayImage, SynthEyeSpec, synth_eye
from irisct.errors import NoBoundaryFound
from irisct.segment import (
    Circle,
    EyelidLine,
    Segmentation,
    annulus_mask,
    detect_eyelashes,
    detect_eyelids,
    isolate_collarette,
    locate_pupil_iris,
    segment,
)

SPEC = SynthEyeSpec(pupil=(160, 140, 30), iris=(160, 140, 90), texture_seed=7)


def truth(spec):
    p, i = Circle(*spec.pupil), Circle(*spec.iris)
    return Segmentation(p, i, isolate_collarette(p, i))


def drawn_upper(spec):
    e = spec.eyelid_occlusion
    return spec.iris[1] - spec.iris[2] + 2 * min(e, 0.5) * (spec.iris[2] - spec.pupil[2])


def drawn_lower(spec):
    e = spec.eyelid_occlusion
    return spec.iris[1] + spec.iris[2] - 2 * max(e - 0.5, 0.0) * (spec.iris[2] - spec.pupil[2])


# ---------------------------------------------------------------- boundaries

def test_radii_recovered():
    pupil, iris = locate_pupil_iris(synth_eye(SPEC, 320, 280), 15, 130)
    assert 29 <= pupil.r <= 31
    assert 88 <= iris.r <= 92


def test_uniform_image_has_no_boundary():
    with pytest.raises(NoBoundaryFound):
        locate_pupil_iris(GrayImage(np.full((280, 320), 128, dtype=np.uint8)), 15, 130)


def test_offset_pupil_centre():
    spec = replace(SPEC, pupil=(165, 140, 30))
    pupil, iris = locate_pupil_iris(synth_eye(spec, 320, 280), 15, 130)
    gap = np.hypot(pupil.cx - iris.cx, pupil.cy - iris.cy)
    assert 3 <= gap <= 7
    assert abs(pupil.cx - 165) <= 2 and abs(iris.cx - 160) <= 2


def test_radius_bounds_validated():
    with pytest.raises(ValueError):
        locate_pupil_iris(synth_eye(SPEC, 320, 280), 50, 40)


def test_segmentation_invariants():
    spec = replace(SPEC, noise_level=0.15, noise_seed=2, eyelid_occlusion=0.15)
    img = synth_eye(spec, 320, 280)
    seg = segment(img)
    assert seg.pupil.r < seg.collarette.r <= seg.iris.r
    assert np.hypot(seg.pupil.cx - seg.iris.cx, seg.pupil.cy - seg.iris.cy) < seg.iris.r
    outside = ~annulus_mask(img.pixels.shape, seg.pupil, seg.collarette)
    assert not seg.noise_mask[outside].any()
    assert seg.noise_mask.any()


# ---------------------------------------------------------------- eyelids

def test_no_occlusion_no_lines():
    img = synth_eye(SPEC, 320, 280)
    lines, occluded = detect_eyelids(img, truth(SPEC))
    assert lines == ()
    assert not occluded.any()


def test_upper_lid_line_near_chord():
    spec = replace(SPEC, eyelid_occlusion=0.3)
    img = synth_eye(spec, 320, 280)
    lines, _ = detect_eyelids(img, truth(spec))
    assert [l.side for l in lines] == ["upper"]
    y = lines[0].y_at(spec.iris[0])
    assert abs(y - drawn_upper(spec)) <= 3


def test_upper_lid_with_segmented_circles():
    spec = replace(SPEC, eyelid_occlusion=0.3, noise_level=0.15, noise_seed=5)
    seg = segment(synth_eye(spec, 320, 280))
    upper = [l for l in seg.eyelid_lines if l.side == "upper"]
    assert len(upper) == 1
    assert abs(upper[0].y_at(spec.iris[0]) - drawn_upper(spec)) <= 3


def test_full_occlusion_two_lines_cover_lids():
    spec = replace(SPEC, eyelid_occlusion=1.0)
    img = synth_eye(spec, 320, 280)
    seg = truth(spec)
    lines, occluded = detect_eyelids(img, seg)
    assert sorted(l.side for l in lines) == ["lower", "upper"]
    yy, xx = np.mgrid[0:280, 0:320]
    in_iris = np.hypot(xx - 160, yy - 140) <= 90
    drawn = in_iris & ((yy < drawn_upper(spec)) | (yy > drawn_lower(spec)))
    assert occluded[drawn].all()


@pytest.mark.parametrize("e", [0.1, 0.2, 0.4])
def test_lid_position_tracks_occlusion(e):
    spec = replace(SPEC, eyelid_occlusion=e)
    lines, _ = detect_eyelids(synth_eye(spec, 320, 280), truth(spec))
    upper = [l for l in lines if l.side == "upper"]
    assert len(upper) == 1
    assert abs(upper[0].y_at(160) - drawn_upper(spec)) <= 3


def test_masked_area_monotone_in_occlusion():
    areas = []
    for e in (0.0, 0.1, 0.2, 0.3, 0.4, 0.6, 0.8, 1.0):
        spec = replace(SPEC, eyelid_occlusion=e)
        img = synth_eye(spec, 320, 280)
        seg = truth(spec)
        _, occluded = detect_eyelids(img, seg)
        region = annulus_mask(img.pixels.shape, seg.pupil, seg.iris)
        areas.append(int((occluded & region).sum()))
    assert all(b >= a for a, b in zip(areas, areas[1:]))


def test_eyelid_line_evaluation():
    line = EyelidLine(0.0, 1.0, 50.0, "upper")
    assert line.y_at(123.0) == 50.0


# ---------------------------------------------------------------- eyelashes

def test_vertical_streak_masked():
    px = np.full((64, 64), 200, dtype=np.uint8)
    px[:, 30] = 20
    mask = detect_eyelashes(GrayImage(px))
    assert mask[:, 30].mean() >= 0.9
    assert mask[:, :20].sum() == 0


def test_constant_image_empty_mask():
    assert not detect_eyelashes(GrayImage(np.full((64, 64), 90, dtype=np.uint8))).any()


def test_clean_eye_few_false_lashes():
    for seed in range(5):
        spec = SynthEyeSpec(pupil=(160, 140, 35), iris=(160, 140, 100), texture_seed=seed)
        img = synth_eye(spec, 320, 280)
        region = annulus_mask(img.pixels.shape, Circle(160, 140, 38), Circle(160, 140, 97))
        assert detect_eyelashes(img, region=region)[region].mean() < 0.01


def test_dark_uniform_patch_masked_by_variance_rule():
    rng = np.random.default_rng(0)
    px = rng.integers(80, 180, (64, 64)).astype(np.uint8)
    px[20:40, 20:40] = 30
    mask = detect_eyelashes(GrayImage(px))
    assert mask[25:35, 25:35].all()


def test_eyelash_argument_checks():
    img = GrayImage(np.zeros((16, 16), dtype=np.uint8))
    with pytest.raises(ValueError):
        detect_eyelashes(img, window=4)
    with pytest.raises(ValueError):
        detect_eyelashes(img, gabor_threshold=0)


def test_lashes_on_noisy_eye_are_masked():
    # lash streaks darken the iris far beyond the sensor noise (sigma 5)
    kept, total = 0, 0
    for seed in range(4):
        spec = replace(SPEC, noise_level=0.5, noise_seed=seed, eyelid_occlusion=0.2)
        img = synth_eye(spec, 320, 280)
        clean = synth_eye(replace(spec, noise_level=0.0), 320, 280)
        lash = (clean.as_float() - img.as_float() > 60) & annulus_mask(
            img.pixels.shape, Circle(160, 140, 34), Circle(160, 140, 86))
        assert lash.sum() > 20
        usable = segment(img).noise_mask[lash]
        assert usable.mean() < 0.25
        kept, total = kept + usable.sum(), total + lash.sum()
    assert kept / total < 0.15


# ---------------------------------------------------------------- collarette

@pytest.mark.parametrize("pr, ir, frac, expected", [(30, 90, 0.5, 60), (30, 90, 1.0, 90), (40, 100, 0.5, 70)])
def test_collarette_radius(pr, ir, frac, expected):
    c = isolate_collarette(Circle(160, 140, pr), Circle(160, 140, ir), frac)
    assert c.r == pytest.approx(expected)
    assert (c.cx, c.cy) == (160, 140)


def test_collarette_fraction_range():
    with pytest.raises(ValueError):
        isolate_collarette(Circle(0, 0, 1), Circle(0, 0, 2), 0.0)


@given(st.floats(1, 60), st.floats(1, 60), st.floats(0.001, 0.999))
def test_collarette_strictly_between(pr, band, frac):
    c = isolate_collarette(Circle(0, 0, pr), Circle(0, 0, pr + band), frac)
    assert pr < c.r < pr + band


def test_circle_radius_positive():
    with pytest.raises(ValueError):
        Circle(0, 0, 0)
