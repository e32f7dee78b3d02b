"""
Feature vectors and matching on a small synthetic corpus
========================================================

Extract every feature type from a few eyes, then compare binary codes of the
same and of different subjects with the fractional Hamming distance.
"""

# %%
import itertools

import numpy as np

from irisct.classify import BINARY_THRESHOLD, cascade_match, hamming, threshold_match
from irisct.dataio import sample_spec, subject_spec, synth_eye
from irisct.features import METHODS, extract, fit_projection, projection_input
from irisct.normalize import mid_strip, rubber_sheet
from irisct.segment import segment


def strip_of(subject, sample):
    img = synth_eye(sample_spec(subject_spec(subject), subject, sample), 320, 280)
    return mid_strip(rubber_sheet(img, segment(img)))


strips = {(s, k): strip_of(s, k) for s in range(4) for k in range(3)}

# %%
basis = {kind: fit_projection([projection_input(x) for x in strips.values()], kind, k=8)
         for kind in ("PCA", "ICA")}
one = strips[0, 0]
for method in METHODS:
    fv = extract(method, one, basis.get(method))
    print(f"{method:9s} {fv.kind:5s} length {fv.length}")

# %%
codes = {key: extract("BINARY", x) for key, x in strips.items()}
for (a, ca), (b, cb) in itertools.combinations(codes.items(), 2):
    d = hamming(ca.payload, cb.payload, ca.mask, cb.mask)
    same = "same " if a[0] == b[0] else "other"
    if a[1] == 0 and b[1] in (0, 1):
        print(same, a, b, f"HD {d:.3f}", threshold_match(d).decision)
print("threshold", BINARY_THRESHOLD)

# %%
# The cascade decides on the trit prefix when it is clear-cut and falls back
# to the Euclidean distance of the 24 global statistics in between.  The
# global threshold is set halfway between same- and other-subject means.
combined = {key: extract("COMBINED", x) for key, x in strips.items()}
same, other = [], []
for (a, ca), (b, cb) in itertools.combinations(combined.items(), 2):
    d = np.linalg.norm(ca.payload[2520:] - cb.payload[2520:])
    (same if a[0] == b[0] else other).append(d)
t_global = float(0.5 * (np.mean(same) + np.mean(other)))
print(f"global distance: same {np.mean(same):.3f}, other {np.mean(other):.3f}")
for probe, gallery in (((0, 0), (0, 1)), ((0, 0), (2, 0))):
    cp, cg = combined[probe], combined[gallery]
    print(probe, gallery, cascade_match(cp.payload, cg.payload, t_global=t_global,
                                        mask_probe=cp.mask, mask_gallery=cg.mask))
