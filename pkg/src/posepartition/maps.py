"""Ground-truth map synthesis and map-space losses.

Two map families are produced from an annotated scene, both evaluated at
integer pixel centers:

* confidence maps: one channel per joint category holding, at pixel p,
  max_i exp(-|p - p_j^i|^2 / sigma^2) over persons i.  The squared distance
  is divided by sigma^2 directly (no factor 2), the kernel has full support
  (no truncation), and overlapping persons combine by pointwise max, so the
  value at an annotated integer position is exactly 1.0.

* regression maps: one 2-vector channel per joint category.  Inside the
  disk of radius `radius` around person i's joint j, the vector points from
  the pixel to that person's centroid, scaled by 1/Z where Z is the canvas
  diagonal.  Pixels covered by several persons store the mean of the
  non-zero contributions; pixels covered by none store (0, 0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ParameterError
from .scene import Scene, person_centroid


@dataclass(frozen=True)
class ForwardParams:
    """Knobs of the map synthesis forward model."""

    sigma: float = 7.0
    radius: float = 7.0
    tau: float = 0.1

    def __post_init__(self) -> None:
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ParameterError("sigma must be positive, got %g" % self.sigma)
        if not (self.radius >= 0 and math.isfinite(self.radius)):
            raise ParameterError("radius must be non-negative, got %g" % self.radius)
        if not 0.0 < self.tau < 1.0:
            raise ParameterError("tau must lie in (0, 1), got %g" % self.tau)


def _freeze(values, shape_tail: tuple[int, ...], what: str) -> np.ndarray:
    # Adopts the input: an already-float32 C-contiguous array is frozen in
    # place rather than copied, so builders can hand over scratch arrays.
    arr = np.ascontiguousarray(values, dtype=np.float32)
    expected_ndim = 3 + len(shape_tail)
    if arr.ndim != expected_ndim:
        raise DimensionError(
            "%s must have %d dims (K, H, W%s), got shape %s"
            % (what, expected_ndim, ", 2" if shape_tail else "", arr.shape)
        )
    if shape_tail and arr.shape[3:] != shape_tail:
        raise DimensionError("%s trailing dims must be %s, got %s" % (what, shape_tail, arr.shape[3:]))
    if 0 in arr.shape:
        raise DimensionError("%s has an empty dimension: %s" % (what, arr.shape))
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ConfidenceMapSet:
    """Per-joint confidence maps, shape (K, H, W) float32, read-only."""

    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _freeze(self.values, (), "confidence maps"))

    @property
    def num_joints(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class RegressionMapSet:
    """Per-joint centroid offset maps, shape (K, H, W, 2) float32, read-only.

    The last axis holds (x, y) offset components, already divided by the
    canvas diagonal so magnitudes stay within 1 for in-canvas centroids.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _freeze(self.values, (2,), "regression maps"))

    @property
    def num_joints(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    @property
    def norm_factor(self) -> float:
        """Canvas diagonal length used to (un)scale the stored offsets."""
        return math.hypot(self.height, self.width)


def build_confidence_maps(scene: Scene, params: ForwardParams | None = None) -> ConfidenceMapSet:
    """Synthesize ground-truth confidence maps for every joint category.

    Each person's joint deposits an untruncated Gaussian bump; persons
    combine by pointwise max so peak heights never wash out in crowds.
    """
    params = params or ForwardParams()
    scene.validate()
    k, h, w = scene.num_joints, scene.height, scene.width
    out = np.zeros((k, h, w), dtype=np.float32)
    xs = np.arange(w, dtype=np.float32)
    ys = np.arange(h, dtype=np.float32)
    neg_inv = np.float32(-1.0 / (params.sigma * params.sigma))
    scratch = np.empty((h, w), dtype=np.float32)
    for person in scene.persons:
        for j, pos in enumerate(person.joints):
            if pos is None:
                continue
            dx2 = np.square(xs - np.float32(pos[0]))
            dy2 = np.square(ys - np.float32(pos[1]))
            np.add(dy2[:, None], dx2[None, :], out=scratch)
            scratch *= neg_inv
            np.exp(scratch, out=scratch)
            np.maximum(out[j], scratch, out=out[j])
    return ConfidenceMapSet(out)


def build_regression_maps(scene: Scene, params: ForwardParams | None = None) -> RegressionMapSet:
    """Synthesize dense joint-to-centroid offset maps.

    Only pixels within `radius` (Euclidean) of an annotated joint carry a
    vector.  Where disks of several persons overlap, the map stores the mean
    of the non-zero contributions (a person whose centroid coincides with
    the pixel contributes a zero vector and is not counted).
    """
    params = params or ForwardParams()
    scene.validate()
    k, h, w = scene.num_joints, scene.height, scene.width
    z = scene.norm_factor
    sums = np.zeros((k, h, w, 2), dtype=np.float64)
    counts = np.zeros((k, h, w), dtype=np.int32)
    r = params.radius
    r2 = r * r
    ri = math.floor(r)
    # Disk geometry relative to an integer joint position, reused for the
    # common all-integer annotations.
    rel = np.arange(-ri, ri + 1, dtype=np.float64)
    rel_d2 = rel[:, None] ** 2 + rel[None, :] ** 2
    int_mask = rel_d2 <= r2
    for person in scene.persons:
        cx, cy = person_centroid(person)
        for j, pos in enumerate(person.joints):
            if pos is None:
                continue
            x0, y0 = pos
            integral = x0 == int(x0) and y0 == int(y0)
            if integral:
                xlo = max(0, int(x0) - ri)
                xhi = min(w - 1, int(x0) + ri)
                ylo = max(0, int(y0) - ri)
                yhi = min(h - 1, int(y0) + ri)
            else:
                xlo = max(0, math.ceil(x0 - r))
                xhi = min(w - 1, math.floor(x0 + r))
                ylo = max(0, math.ceil(y0 - r))
                yhi = min(h - 1, math.floor(y0 + r))
            if xlo > xhi or ylo > yhi:
                continue
            xs = np.arange(xlo, xhi + 1, dtype=np.float64)
            ys = np.arange(ylo, yhi + 1, dtype=np.float64)
            if integral:
                sy = slice(ylo - (int(y0) - ri), yhi + 1 - (int(y0) - ri))
                sx = slice(xlo - (int(x0) - ri), xhi + 1 - (int(x0) - ri))
                inside = int_mask[sy, sx]
            else:
                inside = (ys[:, None] - y0) ** 2 + (xs[None, :] - x0) ** 2 <= r2
            offx = np.broadcast_to((cx - xs)[None, :] / z, inside.shape)
            offy = np.broadcast_to((cy - ys)[:, None] / z, inside.shape)
            nonzero = inside & ((offx != 0.0) | (offy != 0.0))
            window = sums[j, ylo : yhi + 1, xlo : xhi + 1]
            window[..., 0] += np.where(nonzero, offx, 0.0)
            window[..., 1] += np.where(nonzero, offy, 0.0)
            counts[j, ylo : yhi + 1, xlo : xhi + 1] += nonzero
    # Pixels covered once (the usual case) already hold their value; only
    # overlap pixels need the mean.
    overlap = counts > 1
    if overlap.any():
        sums[overlap] /= counts[overlap, None]
    return RegressionMapSet(sums.astype(np.float32))


def map_loss(pred, target) -> float:
    """Sum of squared differences between two map sets of the same kind.

    Accumulation happens in float64 over the row-major element order so the
    result is deterministic.
    """
    if type(pred) is not type(target):
        raise DimensionError(
            "cannot compare %s against %s" % (type(pred).__name__, type(target).__name__)
        )
    if pred.values.shape != target.values.shape:
        raise DimensionError(
            "map shapes differ: %s vs %s" % (pred.values.shape, target.values.shape)
        )
    diff = pred.values.astype(np.float64) - target.values.astype(np.float64)
    return float(np.sum(diff * diff))


@dataclass(frozen=True)
class LossBreakdown:
    """Confidence and offset losses plus their weighted combination."""

    joint_loss: float
    regression_loss: float
    combined: float


def combined_loss(
    pred_conf: ConfidenceMapSet,
    target_conf: ConfidenceMapSet,
    pred_reg: RegressionMapSet,
    target_reg: RegressionMapSet,
    alpha: float = 1.0,
) -> LossBreakdown:
    """Joint confidence loss plus alpha times the offset regression loss."""
    if not (alpha >= 0 and math.isfinite(alpha)):
        raise ParameterError("alpha must be non-negative, got %g" % alpha)
    jl = map_loss(pred_conf, target_conf)
    rl = map_loss(pred_reg, target_reg)
    return LossBreakdown(joint_loss=jl, regression_loss=rl, combined=jl + alpha * rl)
