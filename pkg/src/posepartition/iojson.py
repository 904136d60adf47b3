"""JSON interchange for intermediate pipeline artifacts.

Candidates, partitions, poses, and evaluation reports all travel as small
JSON documents so every pipeline stage can be run, inspected, and replayed
from files.
"""
from __future__ import annotations

import json
from typing import Sequence

import numpy as np

from .detect import JointCandidate
from .errors import SchemaError
from .evaluate import EvalReport
from .infer import JointEstimate, PersonPose, PoseSet
from .partition import Partition

__all__ = [
    "candidates_to_doc",
    "candidates_from_doc",
    "partitions_to_doc",
    "partitions_from_doc",
    "poses_to_doc",
    "poses_from_doc",
    "report_to_doc",
    "load_json",
    "save_json",
]


def load_json(path) -> dict | list:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError("%s is not valid JSON: %s" % (path, exc)) from exc


def save_json(doc, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise SchemaError(msg)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


# --- candidates -------------------------------------------------------------


def candidates_to_doc(candidates: Sequence[JointCandidate]) -> list:
    return [
        {
            "joint": c.joint_id,
            "x": c.position[0],
            "y": c.position[1],
            "score": c.score,
        }
        for c in candidates
    ]


def candidates_from_doc(doc) -> list[JointCandidate]:
    _require(isinstance(doc, list), "candidates document must be a list")
    out = []
    for i, entry in enumerate(doc):
        _require(isinstance(entry, dict), "candidates[%d] must be an object" % i)
        for key in ("joint", "x", "y", "score"):
            _require(key in entry, "candidates[%d] is missing %r" % (i, key))
        _require(
            isinstance(entry["joint"], int)
            and isinstance(entry["x"], int)
            and isinstance(entry["y"], int),
            "candidates[%d] joint and position must be integers" % i,
        )
        _require(_is_num(entry["score"]), "candidates[%d].score must be a number" % i)
        out.append(
            JointCandidate(
                joint_id=entry["joint"],
                position=(entry["x"], entry["y"]),
                score=float(entry["score"]),
            )
        )
    return out


# --- partitions -------------------------------------------------------------


def partitions_to_doc(partitions: Sequence[Partition], candidates: Sequence[JointCandidate]) -> dict:
    """Store partitions as indices into a shared candidate list."""
    index_of = {cand: i for i, cand in enumerate(candidates)}
    entries = []
    for pi, part in enumerate(partitions):
        members = []
        for cand in part.members:
            if cand not in index_of:
                raise SchemaError("partition %d member %r is not in the candidate list" % (pi, cand))
            members.append(index_of[cand])
        entries.append(
            {
                "members": members,
                "centroid": [part.centroid[0], part.centroid[1]],
                "score": part.score,
            }
        )
    return {"partitions": entries}


def partitions_from_doc(doc, candidates: Sequence[JointCandidate]) -> list[Partition]:
    _require(isinstance(doc, dict) and "partitions" in doc, "partitions document must have 'partitions'")
    _require(isinstance(doc["partitions"], list), "'partitions' must be a list")
    out = []
    for pi, entry in enumerate(doc["partitions"]):
        _require(isinstance(entry, dict), "partitions[%d] must be an object" % pi)
        for key in ("members", "centroid", "score"):
            _require(key in entry, "partitions[%d] is missing %r" % (pi, key))
        _require(
            isinstance(entry["members"], list)
            and all(isinstance(m, int) and 0 <= m < len(candidates) for m in entry["members"]),
            "partitions[%d].members must be valid candidate indices" % pi,
        )
        cent = entry["centroid"]
        _require(
            isinstance(cent, list) and len(cent) == 2 and all(_is_num(v) for v in cent),
            "partitions[%d].centroid must be [x, y]" % pi,
        )
        _require(_is_num(entry["score"]), "partitions[%d].score must be a number" % pi)
        out.append(
            Partition(
                members=tuple(candidates[m] for m in entry["members"]),
                centroid=(float(cent[0]), float(cent[1])),
                score=float(entry["score"]),
            )
        )
    return out


# --- poses -------------------------------------------------------------------


def poses_to_doc(poses: PoseSet, height: int, width: int) -> dict:
    entries = []
    for pose in poses.poses:
        entries.append(
            {
                "joints": [
                    None if est is None else [est.position[0], est.position[1]]
                    for est in pose.joints
                ],
                "scores": [None if est is None else est.score for est in pose.joints],
                "centroid": [pose.final_centroid[0], pose.final_centroid[1]],
            }
        )
    return {"height": height, "width": width, "poses": entries}


def poses_from_doc(doc) -> tuple[PoseSet, int, int]:
    _require(isinstance(doc, dict), "poses document must be an object")
    for key in ("height", "width", "poses"):
        _require(key in doc, "poses document is missing %r" % key)
    _require(
        isinstance(doc["height"], int) and isinstance(doc["width"], int),
        "height and width must be integers",
    )
    _require(isinstance(doc["poses"], list), "'poses' must be a list")
    poses = []
    for pi, entry in enumerate(doc["poses"]):
        _require(isinstance(entry, dict), "poses[%d] must be an object" % pi)
        for key in ("joints", "scores", "centroid"):
            _require(key in entry, "poses[%d] is missing %r" % (pi, key))
        joints = entry["joints"]
        scores = entry["scores"]
        _require(
            isinstance(joints, list) and isinstance(scores, list) and len(joints) == len(scores),
            "poses[%d] joints and scores must be lists of equal length" % pi,
        )
        slots = []
        for j, (pos, sc) in enumerate(zip(joints, scores)):
            if pos is None:
                _require(sc is None, "poses[%d].scores[%d] must be null for an absent joint" % (pi, j))
                slots.append(None)
                continue
            _require(
                isinstance(pos, list) and len(pos) == 2
                and all(isinstance(v, int) for v in pos) and _is_num(sc),
                "poses[%d].joints[%d] must be [x, y] integers with a numeric score" % (pi, j),
            )
            slots.append(JointEstimate(position=(pos[0], pos[1]), score=float(sc)))
        cent = entry["centroid"]
        _require(
            isinstance(cent, list) and len(cent) == 2 and all(_is_num(v) for v in cent),
            "poses[%d].centroid must be [x, y]" % pi,
        )
        poses.append(
            PersonPose(joints=tuple(slots), final_centroid=(float(cent[0]), float(cent[1])))
        )
    return PoseSet(poses=tuple(poses)), doc["height"], doc["width"]


# --- evaluation report --------------------------------------------------------


def report_to_doc(report: EvalReport) -> dict:
    return {
        "joint_names": list(report.joint_names),
        "per_joint_ap": [None if ap is None else ap for ap in report.per_joint_ap],
        "total_ap": report.total_ap,
        "count_confusion": np.asarray(report.count_confusion).tolist(),
        "count_mse": report.count_mse,
    }
