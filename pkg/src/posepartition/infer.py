"""Greedy per-partition pose assembly and the decode energy.

Within one partition, poses are grown joint by joint: the root is the
highest-confidence candidate of the earliest joint category still present
(neck first, torso and limb categories as fallbacks), and every later
category contributes its candidate whose centroid vote lies closest to the
running mean of the accepted votes.  Accepting a candidate always lowers
the decode energy, so the recorded energy trace is strictly decreasing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .detect import JointCandidate
from .errors import ParameterError
from .maps import ConfidenceMapSet, RegressionMapSet
from .partition import Partition, partition_score
from .scene import JointSpec

DEFAULT_TAU = 0.1


@dataclass(frozen=True)
class JointEstimate:
    """A decoded joint: grid position (x, y) and its confidence score."""

    position: tuple[int, int]
    score: float


@dataclass(frozen=True)
class PersonPose:
    """One decoded person: an optional estimate per joint category."""

    joints: tuple[JointEstimate | None, ...]
    final_centroid: tuple[float, float]

    def present_count(self) -> int:
        return sum(1 for j in self.joints if j is not None)


@dataclass(frozen=True)
class PoseSet:
    """All decoded persons of one scene."""

    poses: tuple[PersonPose, ...]


def unary(candidate: JointCandidate, conf: ConfidenceMapSet) -> float:
    """Confidence map value at the candidate's position."""
    x, y = candidate.position
    if not (0 <= candidate.joint_id < conf.num_joints):
        raise ParameterError("candidate joint id %d outside confidence maps" % candidate.joint_id)
    if not (0 <= x < conf.width and 0 <= y < conf.height):
        raise ParameterError("candidate position (%d, %d) outside the grid" % (x, y))
    return float(conf.values[candidate.joint_id, y, x])


def _embed_point(candidate: JointCandidate, reg: RegressionMapSet) -> tuple[float, float]:
    x, y = candidate.position
    z = reg.norm_factor
    tx = float(reg.values[candidate.joint_id, y, x, 0])
    ty = float(reg.values[candidate.joint_id, y, x, 1])
    return (x + z * tx, y + z * ty)


def pairwise(
    a: JointCandidate,
    b: JointCandidate,
    reg: RegressionMapSet,
    tau: float = DEFAULT_TAU,
) -> float:
    """Vote agreement between two candidates, gated by the score threshold.

    Returns exp(-squared distance between the two centroid votes) when both
    candidate scores reach tau, else 0.
    """
    if a.score < tau or b.score < tau:
        return 0.0
    ha = _embed_point(a, reg)
    hb = _embed_point(b, reg)
    dx = ha[0] - hb[0]
    dy = ha[1] - hb[1]
    return math.exp(-(dx * dx + dy * dy))


@dataclass(frozen=True)
class ProximityReport:
    """Diagnostic unary/pairwise tables over all partition members.

    The pairwise matrix is zero across partitions, symmetric, and has ones
    on the diagonal for above-threshold candidates.
    """

    candidates: tuple[JointCandidate, ...]
    unary: np.ndarray
    pairwise: np.ndarray


def proximity_report(
    partitions: Sequence[Partition],
    conf: ConfidenceMapSet,
    reg: RegressionMapSet,
    tau: float = DEFAULT_TAU,
) -> ProximityReport:
    """Tabulate unary scores and pairwise vote agreements for inspection."""
    cands: list[JointCandidate] = []
    part_of: list[int] = []
    for pi, part in enumerate(partitions):
        for cand in part.members:
            cands.append(cand)
            part_of.append(pi)
    n = len(cands)
    un = np.zeros(n)
    pw = np.zeros((n, n))
    for i, cand in enumerate(cands):
        un[i] = unary(cand, conf)
    for i in range(n):
        for j in range(i, n):
            if part_of[i] != part_of[j]:
                continue
            val = pairwise(cands[i], cands[j], reg, tau)
            pw[i, j] = val
            pw[j, i] = val
    un.flags.writeable = False
    pw.flags.writeable = False
    return ProximityReport(candidates=tuple(cands), unary=un, pairwise=pw)


def _rank_ordered(layout: Sequence[JointSpec]) -> list[JointSpec]:
    return sorted(layout, key=lambda js: js.inference_rank)


def _greedy_one_partition(
    partition: Partition,
    conf: ConfidenceMapSet,
    reg: RegressionMapSet,
    layout: Sequence[JointSpec],
    tau: float,
) -> tuple[list[PersonPose], list[float]]:
    """Consume a partition into poses, returning per-acceptance energy deltas."""
    for cand in partition.members:
        if cand.score < tau:
            raise ParameterError(
                "partition member at %s scores %g, below tau %g"
                % (cand.position, cand.score, tau)
            )
    by_rank = _rank_ordered(layout)
    pool = list(partition.members)
    poses: list[PersonPose] = []
    deltas: list[float] = []
    k = len(layout)

    while pool:
        # Root: best candidate of the earliest category that still has one.
        root = None
        root_rank = -1
        for js in by_rank:
            group = [c for c in pool if c.joint_id == js.joint_id]
            if group:
                root = min(group, key=lambda c: (-c.score, c.position[1], c.position[0]))
                root_rank = js.inference_rank
                break
        assert root is not None
        pool.remove(root)
        accepted = [root]
        embeds = [_embed_point(root, reg)]
        center = embeds[0]
        deltas.append(-unary(root, conf))

        for js in by_rank:
            if js.inference_rank <= root_rank:
                continue
            group = [c for c in pool if c.joint_id == js.joint_id]
            if not group:
                continue
            scored = []
            for c in group:
                h = _embed_point(c, reg)
                dx = h[0] - center[0]
                dy = h[1] - center[1]
                scored.append(((dx * dx + dy * dy, -c.score, c.position[1], c.position[0]), c, h))
            scored.sort(key=lambda t: t[0])
            _, chosen, h = scored[0]
            pool.remove(chosen)
            delta = -unary(chosen, conf)
            for prev in accepted:
                delta -= pairwise(chosen, prev, reg, tau)
            deltas.append(delta)
            accepted.append(chosen)
            embeds.append(h)
            center = (
                sum(e[0] for e in embeds) / len(embeds),
                sum(e[1] for e in embeds) / len(embeds),
            )

        slots: list[JointEstimate | None] = [None] * k
        for cand in accepted:
            slots[cand.joint_id] = JointEstimate(position=cand.position, score=cand.score)
        poses.append(PersonPose(joints=tuple(slots), final_centroid=center))
    return poses, deltas


def greedy_infer(
    partition: Partition,
    conf: ConfidenceMapSet,
    reg: RegressionMapSet,
    layout: Sequence[JointSpec],
    tau: float = DEFAULT_TAU,
) -> list[PersonPose]:
    """Assemble poses from one partition until its candidate pool is empty.

    Every pass roots a new pose, so a partition holding candidates of n
    distinct copies of some category yields at least n poses.  A pose is
    emitted even when only the root was assigned.
    """
    poses, _ = _greedy_one_partition(partition, conf, reg, layout, tau)
    return poses


def infer_all(
    partitions: Sequence[Partition],
    conf: ConfidenceMapSet,
    reg: RegressionMapSet,
    layout: Sequence[JointSpec],
    tau: float = DEFAULT_TAU,
) -> tuple[PoseSet, list[float]]:
    """Decode every partition in order.

    Returns the concatenated poses plus the energy trace: the decode energy
    before any assignment followed by its value after each accepted joint.
    """
    base = -partition_score(partitions)
    trace = [base]
    poses: list[PersonPose] = []
    for part in partitions:
        part_poses, deltas = _greedy_one_partition(part, conf, reg, layout, tau)
        poses.extend(part_poses)
        for d in deltas:
            trace.append(trace[-1] + d)
    return PoseSet(poses=tuple(poses)), trace


def energy(
    poses: PoseSet,
    partitions: Sequence[Partition],
    conf: ConfidenceMapSet,
    reg: RegressionMapSet,
    tau: float = DEFAULT_TAU,
) -> float:
    """Decode energy of a finished assignment.

    Negative partition score, minus every assigned joint's confidence, minus
    the pairwise vote agreement over unordered joint pairs within each pose.
    Lower is better; each greedy acceptance strictly lowers it.
    """
    total = -partition_score(partitions)
    for pose in poses.poses:
        present = [
            JointCandidate(joint_id=j, position=est.position, score=est.score)
            for j, est in enumerate(pose.joints)
            if est is not None
        ]
        for cand in present:
            total -= unary(cand, conf)
        for i in range(len(present)):
            for j in range(i + 1, len(present)):
                total -= pairwise(present[i], present[j], reg, tau)
    return total
