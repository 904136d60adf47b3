"""Joint candidate detection on confidence maps.

A candidate is a strict local maximum: its value must be >= all 8 in-grid
neighbors and strictly greater than at least one of them, so plateaus (and
in particular constant maps) produce nothing.  Surviving peaks are
thresholded at tau and thinned per joint category with a greedy Chebyshev
non-maximum suppression where higher-scoring peaks win and equal scores fall
back to row-major order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .maps import ConfidenceMapSet


@dataclass(frozen=True)
class JointCandidate:
    """One detected joint hypothesis at an integer grid position (x, y)."""

    joint_id: int
    position: tuple[int, int]
    score: float

    def sort_key(self) -> tuple:
        """Canonical ordering: joint id, descending score, row-major position."""
        x, y = self.position
        return (self.joint_id, -self.score, y, x)


@dataclass(frozen=True)
class DetectorParams:
    tau: float = 0.1
    nms_radius: int = 3

    def __post_init__(self) -> None:
        if not 0.0 < self.tau < 1.0:
            raise ParameterError("tau must lie in (0, 1), got %g" % self.tau)
        if not (isinstance(self.nms_radius, int) and self.nms_radius >= 1):
            raise ParameterError("nms_radius must be an integer >= 1, got %r" % (self.nms_radius,))


_NEIGHBOR_SHIFTS = [(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0)]


def _strict_local_maxima(planes: np.ndarray) -> np.ndarray:
    """Mask of pixels >= all 8 in-grid neighbors and > at least one of them.

    Works on a whole (K, H, W) stack.  Out-of-grid neighbors never veto (the
    -inf pad) and never serve as the strict witness (the +inf pad), so a 1x1
    plane has no maxima.
    """
    k, h, w = planes.shape
    lo = np.pad(planes, ((0, 0), (1, 1), (1, 1)), constant_values=-np.inf)
    hi = np.pad(planes, ((0, 0), (1, 1), (1, 1)), constant_values=np.inf)
    ge_all = np.ones((k, h, w), dtype=bool)
    gt_any = np.zeros((k, h, w), dtype=bool)
    for dy, dx in _NEIGHBOR_SHIFTS:
        window = (slice(None), slice(1 + dy, 1 + dy + h), slice(1 + dx, 1 + dx + w))
        ge_all &= planes >= lo[window]
        gt_any |= planes > hi[window]
    ge_all &= gt_any
    return ge_all


def detect_candidates(conf: ConfidenceMapSet, params: DetectorParams | None = None) -> list[JointCandidate]:
    """Extract thresholded, suppression-thinned peaks from every joint map.

    The output is sorted by (joint_id, descending score, row-major position)
    and does not depend on how the maps are traversed internally.
    """
    params = params or DetectorParams()
    radius = params.nms_radius
    mask = _strict_local_maxima(conf.values)
    mask &= conf.values >= np.float64(params.tau)
    js, ys, xs = np.nonzero(mask)
    scores = conf.values[js, ys, xs]
    per_joint: dict[int, list[tuple[float, int, int]]] = {}
    for j, y, x, s in zip(js.tolist(), ys.tolist(), xs.tolist(), scores.tolist()):
        per_joint.setdefault(j, []).append((-s, y, x))
    out: list[JointCandidate] = []
    for j in sorted(per_joint):
        peaks = per_joint[j]
        peaks.sort()
        kept: list[tuple[float, int, int]] = []
        for neg_score, y, x in peaks:
            close = any(
                max(abs(y - ky), abs(x - kx)) <= radius for _, ky, kx in kept
            )
            if not close:
                kept.append((neg_score, y, x))
        out.extend(
            JointCandidate(joint_id=j, position=(x, y), score=-neg_score)
            for neg_score, y, x in kept
        )
    return out
