"""Candidate partitioning by centroid voting.

Every joint candidate casts a vote for its person's centroid by following
the regression map: vote = position + Z * offset, with Z the canvas
diagonal.  Votes are grouped by agglomerative average-linkage clustering
with an absolute merge cutoff; each resulting cluster is one person
hypothesis (a partition) scored by the log vote density at its center.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .detect import JointCandidate
from .errors import ParameterError, PartitionScoreError
from .maps import RegressionMapSet


@dataclass(frozen=True)
class Vote:
    """A candidate's predicted centroid location in pixel coordinates."""

    source: JointCandidate
    point: tuple[float, float]


@dataclass(frozen=True)
class ClusterParams:
    """Average-linkage clustering controls.

    link_threshold is an absolute pixel distance: clusters merge while the
    smallest average linkage stays at or below it.  weights optionally
    rescales each joint category's contribution to vote densities.
    """

    link_threshold: float
    weights: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if not (self.link_threshold > 0 and math.isfinite(self.link_threshold)):
            raise ParameterError("link_threshold must be positive, got %g" % self.link_threshold)
        if self.weights is not None:
            if any(w < 0 or not math.isfinite(w) for w in self.weights):
                raise ParameterError("vote weights must be finite and non-negative")

    def weight_of(self, joint_id: int) -> float:
        if self.weights is None:
            return 1.0
        if not 0 <= joint_id < len(self.weights):
            raise ParameterError("no weight for joint id %d" % joint_id)
        return self.weights[joint_id]


def default_link_threshold(norm_factor: float) -> float:
    """Merge cutoff used when none is configured: 10% of the canvas diagonal."""
    return 0.1 * norm_factor


@dataclass(frozen=True)
class Partition:
    """One person hypothesis: member candidates, vote center, log density."""

    members: tuple[JointCandidate, ...]
    centroid: tuple[float, float]
    score: float


def embed(candidates: Sequence[JointCandidate], reg: RegressionMapSet) -> list[Vote]:
    """Map candidates to centroid votes via the regression maps."""
    z = reg.norm_factor
    votes = []
    for cand in candidates:
        x, y = cand.position
        if not (0 <= cand.joint_id < reg.num_joints):
            raise ParameterError("candidate joint id %d outside regression maps" % cand.joint_id)
        if not (0 <= x < reg.width and 0 <= y < reg.height):
            raise ParameterError("candidate position (%d, %d) outside the grid" % (x, y))
        tx = float(reg.values[cand.joint_id, y, x, 0])
        ty = float(reg.values[cand.joint_id, y, x, 1])
        votes.append(Vote(source=cand, point=(x + z * tx, y + z * ty)))
    return votes


def vote_density(point: tuple[float, float], votes: Sequence[Vote], params: ClusterParams) -> float:
    """Unnormalized vote density at a location.

    Sum over votes of weight(joint) * exp(-squared pixel distance).  The
    exponential has unit variance by construction, so the value is only
    meaningful relative to other locations.
    """
    px, py = point
    total = 0.0
    for vote in votes:
        w = params.weight_of(vote.source.joint_id)
        if w == 0.0:
            continue
        dx = vote.point[0] - px
        dy = vote.point[1] - py
        total += w * math.exp(-(dx * dx + dy * dy))
    return total


def _canonical_order(votes: Sequence[Vote]) -> list[int]:
    """Vote indices sorted by their source candidate's canonical key."""
    return sorted(range(len(votes)), key=lambda i: votes[i].source.sort_key())


def cluster_votes(votes: Sequence[Vote], params: ClusterParams) -> list[Partition]:
    """Group votes into person hypotheses by average-linkage clustering.

    Merging continues while the minimum average linkage between clusters is
    at or below params.link_threshold.  Equal-distance merges are broken by
    the smallest (id, id) pair, where a cluster's id is the canonical rank of
    its first member (candidates ordered by joint id, descending score,
    row-major position), which makes the outcome independent of input order.
    """
    n = len(votes)
    if n == 0:
        return []
    order = _canonical_order(votes)
    pts = np.array([votes[i].point for i in order], dtype=np.float64)

    # Cluster state keyed by canonical id (the id of a merged cluster is its
    # smallest member id).  Linkage lives in a symmetric matrix updated with
    # the average-linkage recurrence; inactive rows and the diagonal are inf,
    # so a row-major argmin lands on the smallest-distance pair with the
    # smallest (id, id) tie-break for free.
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    dist = np.full((n, n), np.inf)
    if n > 1:
        diffs = pts[:, None, :] - pts[None, :, :]
        d = np.sqrt(np.sum(diffs * diffs, axis=2))
        np.fill_diagonal(d, np.inf)
        dist = d

    while len(members) > 1:
        flat = int(np.argmin(dist))
        a, b = divmod(flat, n)
        d_min = dist[a, b]
        if not (d_min <= params.link_threshold):
            break
        na, nb = len(members[a]), len(members[b])
        merged = (na * dist[a, :] + nb * dist[b, :]) / (na + nb)
        merged[a] = np.inf
        merged[b] = np.inf
        dist[a, :] = merged
        dist[:, a] = merged
        dist[b, :] = np.inf
        dist[:, b] = np.inf
        members[a].extend(members[b])
        del members[b]

    partitions = []
    all_votes = list(votes)
    for cid in sorted(members):
        canon = members[cid]
        cluster_pts = pts[canon]
        cx = float(np.mean(cluster_pts[:, 0]))
        cy = float(np.mean(cluster_pts[:, 1]))
        density = vote_density((cx, cy), all_votes, params)
        score = math.log(density) if density > 0.0 else -math.inf
        cands = tuple(votes[order[i]].source for i in sorted(canon))
        partitions.append(Partition(members=cands, centroid=(cx, cy), score=score))
    return partitions


def partition_score(partitions: Sequence[Partition]) -> float:
    """Total log vote density over partitions.

    This is the assignment-independent part of the decode energy.  A
    partition whose density underflowed to zero carries a -inf score, which
    is rejected here because downstream energies would be meaningless.
    """
    total = 0.0
    for i, part in enumerate(partitions):
        if not math.isfinite(part.score):
            raise PartitionScoreError("partition %d has zero vote density" % i)
        total += part.score
    return total
