"""Numeric kernel backend selection.

The compiled extension is preferred when present; set MERGAP_PURE_KERNELS=1
to force the NumPy fallback (useful for benchmarking and debugging).
"""

import os

from . import _pure

if os.environ.get("MERGAP_PURE_KERNELS"):
    _impl = _pure
    BACKEND = "pure"
else:
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _pure
        BACKEND = "pure"

pairwise_sq_dists = _impl.pairwise_sq_dists
kmeans_assign = _impl.kmeans_assign
tsne_grad = _impl.tsne_grad

__all__ = ["BACKEND", "pairwise_sq_dists", "kmeans_assign", "tsne_grad"]
