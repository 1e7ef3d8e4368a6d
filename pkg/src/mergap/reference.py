"""Published reference values the toolkit is built to reproduce.

These numbers come from previously reported experiments on the five
supported corpora (EmoMusic ``E``, DEAM ``D``, PMEmo ``P``, WTC ``W1``,
WCMED ``W2``). They are frozen here so that full-pipeline runs on the real
audio can be compared against them; nothing in the library derives from
them. Each cell is {"avg", "arousal", "valence"} unless noted.

The real corpora are not bundled, so the comparisons that use these values
live behind environment-gated tests and the CLI's report output.
"""

from __future__ import annotations

DATASET_CLIP_COUNTS = {"E": 744, "D": 1802, "P": 767, "W1": 288, "W2": 200}

#: Deterministic 8/1/1 split sizes implied by the clip counts above.
EXPECTED_SPLIT_SIZES = {
    "E": {"train": 595, "val": 74, "test": 75},
    "D": {"train": 1441, "val": 180, "test": 181},
    "P": {"train": 613, "val": 77, "test": 77},
    "W1": {"train": 230, "val": 29, "test": 29},
    "W2": {"train": 160, "val": 20, "test": 20},
}


def _cell(avg: float, arousal: float, valence: float) -> dict:
    return {"avg": avg, "arousal": arousal, "valence": valence}


#: In-domain test R2 on corpus E for different input representations.
#: Stat descriptors are mean/std with derivatives; embeddings are
#: time-pooled activations of the named pretrained models.
FEATURE_COMPARISON_R2 = {
    "chroma_stat": _cell(0.259, 0.261, 0.258),
    "mfcc_stat": _cell(0.499, 0.579, 0.419),
    "midlevel": _cell(0.384, 0.387, 0.382),
    "encodec": _cell(0.448, 0.527, 0.370),
    "music2latent": _cell(0.574, 0.606, 0.542),
    "mert": _cell(0.614, 0.656, 0.572),
    "jukebox": _cell(0.674, 0.708, 0.640),
}

#: Cross-dataset generalization grid with the strongest embedding
#: (time-pooled jukebox activations): (train corpus, eval corpus) -> R2.
#: Diagonal cells score the held-out test split, off-diagonal cells the
#: full other corpus.
CROSS_DATASET_R2_REFERENCE = {
    ("E", "E"): _cell(0.67, 0.71, 0.64),
    ("E", "D"): _cell(0.44, 0.53, 0.36),
    ("E", "P"): _cell(-0.32, -0.55, -0.09),
    ("E", "W1"): _cell(0.05, 0.23, -0.13),
    ("E", "W2"): _cell(-0.26, 0.16, -0.68),
    ("D", "E"): _cell(0.45, 0.49, 0.42),
    ("D", "D"): _cell(0.61, 0.63, 0.59),
    ("D", "P"): _cell(-0.45, -0.51, -0.38),
    ("D", "W1"): _cell(0.14, 0.29, -0.01),
    ("D", "W2"): _cell(-0.17, 0.06, -0.40),
    ("P", "E"): _cell(0.04, -0.08, 0.17),
    ("P", "D"): _cell(-0.12, 0.02, -0.27),
    ("P", "P"): _cell(0.61, 0.72, 0.51),
    ("P", "W1"): _cell(0.02, -0.02, 0.05),
    ("P", "W2"): _cell(-0.62, -0.24, -1.01),
    ("W1", "E"): _cell(0.29, 0.22, 0.36),
    ("W1", "D"): _cell(0.45, 0.61, 0.29),
    ("W1", "P"): _cell(-0.62, -1.56, 0.33),
    ("W1", "W1"): _cell(0.85, 0.88, 0.82),
    ("W1", "W2"): _cell(-0.15, 0.58, -0.88),
    ("W2", "E"): _cell(-0.84, -1.12, -0.56),
    ("W2", "D"): _cell(0.04, 0.18, -0.10),
    ("W2", "P"): _cell(-0.62, -0.92, -0.31),
    ("W2", "W1"): _cell(0.17, 0.23, 0.11),
    ("W2", "W2"): _cell(0.81, 0.75, 0.87),
}

#: Pairwise divergences, unordered corpus pairs. "data" compares embedding
#: clouds, "annot" the normalized valence/arousal label clouds; "w1" is the
#: sliced transport distance, "js" the mean per-dimension Jensen-Shannon
#: divergence in bits.
DIVERGENCE_REFERENCE = {
    ("D", "E"): {"data_w1": 0.03, "data_js": 0.02, "annot_w1": 0.05, "annot_js": 0.13},
    ("P", "E"): {"data_w1": 0.20, "data_js": 0.15, "annot_w1": 0.11, "annot_js": 0.03},
    ("P", "D"): {"data_w1": 0.19, "data_js": 0.14, "annot_w1": 0.10, "annot_js": 0.16},
    ("W1", "E"): {"data_w1": 0.37, "data_js": 0.25, "annot_w1": 0.12, "annot_js": 0.49},
    ("W1", "D"): {"data_w1": 0.45, "data_js": 0.31, "annot_w1": 0.18, "annot_js": 0.47},
    ("W1", "P"): {"data_w1": 0.37, "data_js": 0.26, "annot_w1": 0.15, "annot_js": 0.60},
    ("W2", "E"): {"data_w1": 1.71, "data_js": 0.46, "annot_w1": 0.14, "annot_js": 0.02},
    ("W2", "D"): {"data_w1": 1.74, "data_js": 0.47, "annot_w1": 0.19, "annot_js": 0.05},
    ("W2", "P"): {"data_w1": 1.71, "data_js": 0.46, "annot_w1": 0.15, "annot_js": 0.11},
    ("W2", "W1"): {"data_w1": 1.59, "data_js": 0.43, "annot_w1": 0.13, "annot_js": 0.51},
}

#: Combined-training comparison. Runs are (features, train corpus) with
#: features "base" (jukebox embedding) or "fused" (embedding + chroma
#: stats) and train corpus "E" or the combination of E, P and W1.
#: Targets: the in-domain test split, full D, and full W2.
FINAL_EXPERIMENT_REFERENCE = {
    ("base", "E"): {
        "in_domain": _cell(0.674, 0.708, 0.640),
        "D": _cell(0.454, 0.490, 0.418),
        "W2": _cell(-0.835, -1.115, -0.555),
    },
    ("base", "E+P+W1"): {
        "in_domain": _cell(0.632, 0.685, 0.580),
        "D": _cell(0.619, 0.618, 0.620),
        "W2": _cell(0.082, 0.336, -0.172),
    },
    ("fused", "E"): {
        "in_domain": _cell(0.651, 0.692, 0.610),
        "D": _cell(0.479, 0.528, 0.430),
        "W2": _cell(0.002, 0.232, -0.228),
    },
    ("fused", "E+P+W1"): {
        "in_domain": _cell(0.684, 0.745, 0.622),
        "D": _cell(0.830, 0.826, 0.835),
        "W2": _cell(0.277, 0.366, 0.188),
    },
}

#: External baselines quoted for context on corpus E (arousal, valence).
CITED_BASELINE_R2 = {
    "hand_crafted": {"arousal": 0.54, "valence": 0.07},
    "openl3": {"arousal": 0.67, "valence": 0.56},
}

#: Mean / population variance of pairwise inter-centroid distances in the
#: 2-D projection of all five corpora, one entry per input representation
#: (same keys as FEATURE_COMPARISON_R2).
PROJECTION_CENTROID_STATS_REFERENCE = {
    "chroma_stat": {"mean": 28.23, "variance": 255.39},
    "mfcc_stat": {"mean": 55.97, "variance": 862.96},
    "midlevel": {"mean": 32.04, "variance": 194.23},
    "encodec": {"mean": 52.49, "variance": 758.53},
    "music2latent": {"mean": 67.16, "variance": 1490.04},
    "mert": {"mean": 69.76, "variance": 1534.43},
    "jukebox": {"mean": 70.77, "variance": 1388.54},
}


def max_abs_deviation(observed: dict, reference: dict) -> float:
    """Largest |observed - reference| over the keys of ``reference``.

    Walks nested dicts with parallel structure; missing observed keys
    raise KeyError so silent partial comparisons cannot pass.
    """
    worst = 0.0
    for key, ref in reference.items():
        obs = observed[key]
        if isinstance(ref, dict):
            worst = max(worst, max_abs_deviation(obs, ref))
        else:
            worst = max(worst, abs(float(obs) - float(ref)))
    return worst


def within(observed: dict, reference: dict, atol: float) -> bool:
    return max_abs_deviation(observed, reference) <= atol
