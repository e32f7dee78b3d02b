"""Independent reference computations.

Each oracle is written from the defining formula with plain loops or a
different numerical route than the library, so agreement is meaningful.
"""

import numpy as np

# Published CDF 9/7 lowpass taps (centre first), sqrt(2) normalization.
CDF97_ANALYSIS = (0.852698679009, 0.377402855613, -0.110624404418, -0.023849465020, 0.037828455507)
CDF97_SYNTHESIS = (0.788485616406, 0.418092273222, -0.040689417609, -0.064538882629)


def glcm_pairs(m, offsets):
    """Pair counting by enumeration of every (y, x) and every offset."""
    m = np.asarray(m)
    rows, cols = m.shape
    counts = np.zeros((8, 8))
    for dy, dx in offsets:
        for y in range(rows):
            for x in range(cols):
                yy, xx = y + dy, x + dx
                if 0 <= yy < rows and 0 <= xx < cols:
                    counts[m[y, x], m[yy, xx]] += 1
    return counts / counts.sum()


def haralick_loops(p):
    """The seven statistics by literal double sums, gray levels 1..G."""
    G = p.shape[0]
    energy = contrast = autocorr = homog = dissim = inertia = 0.0
    px = [sum(p[i][j] for j in range(G)) for i in range(G)]
    py = [sum(p[i][j] for i in range(G)) for j in range(G)]
    mu_x = sum((i + 1) * px[i] for i in range(G))
    mu_y = sum((j + 1) * py[j] for j in range(G))
    sd_x = np.sqrt(sum((i + 1 - mu_x) ** 2 * px[i] for i in range(G)))
    sd_y = np.sqrt(sum((j + 1 - mu_y) ** 2 * py[j] for j in range(G)))
    for i in range(G):
        for j in range(G):
            v = p[i][j]
            a, b = i + 1, j + 1
            energy += v * v
            autocorr += a * b * v
            homog += v / (1 + (a - b) ** 2)
            dissim += abs(a - b) * v
            inertia += (a - b) ** 2 * v
    # contrast as printed: sum over n of n^2 times P(|i - j| = n)
    for n in range(G):
        p_n = sum(p[i][j] for i in range(G) for j in range(G) if abs(i - j) == n)
        contrast += n * n * p_n
    corr = 0.0 if sd_x * sd_y == 0 else (autocorr - mu_x * mu_y) / (sd_x * sd_y)
    return np.array([energy, contrast, corr, homog, autocorr, dissim, inertia])


def quantize_loops(m):
    m = np.asarray(m, dtype=float)
    lo, hi = m.min(), m.max()
    out = np.zeros(m.shape, dtype=int)
    if hi == lo:
        return out
    width = (hi - lo) / 8
    for idx, v in np.ndenumerate(m):
        k = 0
        while k < 7 and v >= lo + (k + 1) * width:
            k += 1
        out[idx] = k
    return out


def euclid_loops(a, b):
    return sum((float(x) - float(y)) ** 2 for x, y in zip(a, b)) ** 0.5


def pca_svd(X, k):
    """Principal axes and variances from the SVD of the centred data."""
    X = np.asarray(X, dtype=float)
    Xc = X - X.mean(axis=0)
    _, s, vt = np.linalg.svd(Xc, full_matrices=False)
    return vt[:k], (s[:k] ** 2) / (len(X) - 1)


def aad_loops(block):
    vals = [float(v) for v in np.ravel(block)]
    m = sum(vals) / len(vals)
    return sum(abs(v - m) for v in vals) / len(vals)
