"""Contourlet-based iris recognition.

Pipeline stages, one module each:

    dataio      image files, dataset indexing, synthetic eyes
    segment     pupil/iris boundaries, collarette, eyelid and eyelash masks
    normalize   rubber-sheet unwrapping and the 8-row mid strip
    contourlet  Laplacian pyramid + directional filter bank
    features    eleven feature extractors and PCA/ICA bases
    gaselect    genetic feature-subset selection
    classify    distance matchers, cascade, SVM, evaluation entry point
"""

__version__ = "0.1.0"
