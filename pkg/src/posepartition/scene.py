"""Annotated multi-person scenes and their geometric transformations.

A scene is a pixel canvas plus a joint layout (one JointSpec per joint
category) and a list of person annotations.  Coordinates are (x, y) with x
growing rightward, y growing downward, and the origin at the center of the
top-left pixel, so valid positions live in [0, W) x [0, H).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .errors import AnnotationError, ParameterError, SchemaError

Position = tuple[float, float]


class JointGroup(str, Enum):
    """Coarse joint category used to order greedy assembly."""

    NECK = "neck"
    TORSO = "torso"
    LIMB = "limb"


@dataclass(frozen=True)
class JointSpec:
    """Static description of one joint category.

    inference_rank is the position of the category in the greedy assembly
    order (0 first).  mirror_id names the partner category under a horizontal
    flip; midline joints point at themselves.
    """

    joint_id: int
    name: str
    group: JointGroup
    inference_rank: int
    mirror_id: int


def validate_joint_layout(layout: Sequence[JointSpec]) -> None:
    """Check the structural invariants of a joint layout.

    Ids and ranks must each be a permutation of 0..K-1, exactly one joint is
    the neck, the rank order must visit neck, then torso, then limb joints,
    and the mirror table must be an involution.
    """
    k = len(layout)
    if k == 0:
        raise AnnotationError("joint layout is empty")
    ids = sorted(js.joint_id for js in layout)
    if ids != list(range(k)):
        raise AnnotationError("joint ids must be a permutation of 0..K-1, got %s" % ids)
    ranks = sorted(js.inference_rank for js in layout)
    if ranks != list(range(k)):
        raise AnnotationError("inference ranks must be a permutation of 0..K-1")
    necks = [js for js in layout if js.group is JointGroup.NECK]
    if len(necks) != 1:
        raise AnnotationError("layout must contain exactly one neck joint, got %d" % len(necks))
    by_rank = sorted(layout, key=lambda js: js.inference_rank)
    group_order = [JointGroup.NECK, JointGroup.TORSO, JointGroup.LIMB]
    seen = 0
    for js in by_rank:
        idx = group_order.index(js.group)
        if idx < seen:
            raise AnnotationError(
                "inference ranks must order groups neck, torso, limb; "
                "%s (rank %d) comes after a later group" % (js.name, js.inference_rank)
            )
        seen = idx
    by_id = {js.joint_id: js for js in layout}
    for js in layout:
        if js.mirror_id not in by_id:
            raise AnnotationError("mirror id %d of %s is not a joint id" % (js.mirror_id, js.name))
        if by_id[js.mirror_id].mirror_id != js.joint_id:
            raise AnnotationError("mirror table is not an involution at %s" % js.name)


def mpii_joint_layout() -> tuple[JointSpec, ...]:
    """Default 16-joint layout with MPII ordering and left/right pairing."""
    # (joint_id, name, group, inference_rank, mirror_id)
    rows = [
        (0, "r_ankle", JointGroup.LIMB, 10, 5),
        (1, "r_knee", JointGroup.LIMB, 8, 4),
        (2, "r_hip", JointGroup.TORSO, 4, 3),
        (3, "l_hip", JointGroup.TORSO, 5, 2),
        (4, "l_knee", JointGroup.LIMB, 9, 1),
        (5, "l_ankle", JointGroup.LIMB, 11, 0),
        (6, "pelvis", JointGroup.TORSO, 2, 6),
        (7, "thorax", JointGroup.TORSO, 1, 7),
        (8, "neck", JointGroup.NECK, 0, 8),
        (9, "head_top", JointGroup.TORSO, 3, 9),
        (10, "r_wrist", JointGroup.LIMB, 14, 15),
        (11, "r_elbow", JointGroup.LIMB, 12, 14),
        (12, "r_shoulder", JointGroup.TORSO, 6, 13),
        (13, "l_shoulder", JointGroup.TORSO, 7, 12),
        (14, "l_elbow", JointGroup.LIMB, 13, 11),
        (15, "l_wrist", JointGroup.LIMB, 15, 10),
    ]
    return tuple(JointSpec(*row) for row in rows)


@dataclass(frozen=True)
class PersonAnnotation:
    """One person: a joint position (or None) per category.

    centroid is optional; when None the person's reference point is derived
    as the mean of the annotated joints.  head_box is an optional (x0, y0,
    x1, y1) head bounding box used only by box-based evaluation.
    """

    joints: tuple[Position | None, ...]
    centroid: Position | None = None
    head_box: tuple[float, float, float, float] | None = None

    def present(self) -> list[tuple[int, Position]]:
        """Annotated (joint_id, position) pairs in id order."""
        return [(j, p) for j, p in enumerate(self.joints) if p is not None]


def derive_centroid(person: PersonAnnotation) -> Position:
    """Arithmetic mean of the annotated joint positions.

    Raises AnnotationError when the person has no annotated joints.
    """
    pts = [p for p in person.joints if p is not None]
    if not pts:
        raise AnnotationError("person has no annotated joints")
    sx = sum(p[0] for p in pts)
    sy = sum(p[1] for p in pts)
    n = len(pts)
    return (sx / n, sy / n)


def person_centroid(person: PersonAnnotation) -> Position:
    """Explicit centroid if stored, else the derived joint mean."""
    if person.centroid is not None:
        return person.centroid
    return derive_centroid(person)


@dataclass(frozen=True)
class Scene:
    """Canvas dimensions, joint layout, and person annotations."""

    height: int
    width: int
    joint_layout: tuple[JointSpec, ...]
    persons: tuple[PersonAnnotation, ...]

    @property
    def num_joints(self) -> int:
        return len(self.joint_layout)

    @property
    def norm_factor(self) -> float:
        """Length of the canvas diagonal, used to normalize offsets."""
        return math.hypot(self.height, self.width)

    def validate(self) -> None:
        """Check all structural scene invariants, raising AnnotationError."""
        if self.height < 1 or self.width < 1:
            raise AnnotationError("canvas must be at least 1x1, got %dx%d" % (self.height, self.width))
        validate_joint_layout(self.joint_layout)
        k = self.num_joints
        for i, person in enumerate(self.persons):
            if len(person.joints) != k:
                raise AnnotationError(
                    "person %d has %d joint slots, layout has %d" % (i, len(person.joints), k)
                )
            if not any(p is not None for p in person.joints):
                raise AnnotationError("person %d has no annotated joints" % i)
            for j, pos in enumerate(person.joints):
                if pos is None:
                    continue
                x, y = pos
                if not (math.isfinite(x) and math.isfinite(y)):
                    raise AnnotationError("person %d joint %d is not finite" % (i, j))
                if not (0.0 <= x < self.width and 0.0 <= y < self.height):
                    raise AnnotationError(
                        "person %d joint %d at (%g, %g) is outside the canvas" % (i, j, x, y)
                    )
            if person.centroid is not None:
                cx, cy = person.centroid
                if not (math.isfinite(cx) and math.isfinite(cy)):
                    raise AnnotationError("person %d centroid is not finite" % i)


def perturb_overlapping_centroids(scene: Scene, min_sep: float) -> Scene:
    """Push person centroids apart until all pairwise distances reach min_sep.

    Groups of centroids closer than min_sep are spread onto a small circle
    around their mean, visiting members in declaration order with fixed
    angular offsets, so the result is deterministic.  Centroids already at
    least min_sep apart are left untouched.  Moved persons get an explicit
    centroid in the returned scene; positions are clamped to the canvas.
    """
    if min_sep <= 0:
        raise ParameterError("min_sep must be positive, got %g" % min_sep)
    n = len(scene.persons)
    if n < 2:
        return scene
    cents = [person_centroid(p) for p in scene.persons]

    # Union-find over pairs closer than min_sep.
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        for j in range(i + 1, n):
            if math.dist(cents[i], cents[j]) < min_sep:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)

    moved = [False] * n
    new = list(cents)
    xmax, ymax = scene.width - 1.0, scene.height - 1.0

    def clamp(p: Position) -> Position:
        return (min(max(p[0], 0.0), xmax), min(max(p[1], 0.0), ymax))

    for members in groups.values():
        if len(members) < 2:
            continue
        m = len(members)
        mx = sum(cents[i][0] for i in members) / m
        my = sum(cents[i][1] for i in members) / m
        # Circumradius of a regular m-gon with side min_sep, padded a hair so
        # rounding cannot land just below the separation target.
        rho = min_sep / (2.0 * math.sin(math.pi / m)) * (1.0 + 1e-9)
        for k, i in enumerate(members):
            ang = 2.0 * math.pi * k / m
            new[i] = clamp((mx + rho * math.cos(ang), my + rho * math.sin(ang)))
            moved[i] = True

    # Clamping (or chained groups) can leave residual violations; repair with
    # deterministic pairwise pushes along the joining line.
    for _ in range(64):
        worst = None
        for i in range(n):
            for j in range(i + 1, n):
                if math.dist(new[i], new[j]) < min_sep:
                    worst = (i, j)
                    break
            if worst:
                break
        if worst is None:
            break
        i, j = worst
        d = math.dist(new[i], new[j])
        if d == 0.0:
            ux, uy = 1.0, 0.0
        else:
            ux = (new[j][0] - new[i][0]) / d
            uy = (new[j][1] - new[i][1]) / d
        push = (min_sep - d) / 2.0 * (1.0 + 1e-9)
        new[i] = clamp((new[i][0] - push * ux, new[i][1] - push * uy))
        new[j] = clamp((new[j][0] + push * ux, new[j][1] + push * uy))
        moved[i] = moved[j] = True

    persons = tuple(
        replace(p, centroid=new[i]) if moved[i] else p for i, p in enumerate(scene.persons)
    )
    return replace(scene, persons=persons)


@dataclass(frozen=True)
class AugmentParams:
    """Similarity transform about the canvas center plus optional mirroring.

    rotation is in degrees, translate in pixels.  Mirroring happens first
    (x -> W-1-x with left/right label swap), then rotation and scale about
    the canvas center, then translation.
    """

    rotation: float = 0.0
    scale: float = 1.0
    translate: tuple[float, float] = (0.0, 0.0)
    mirror: bool = False

    ROTATION_RANGE = (-40.0, 40.0)
    SCALE_RANGE = (0.7, 1.3)
    TRANSLATE_RANGE = (-40.0, 40.0)

    def check_ranges(self) -> None:
        """Enforce the training-time parameter ranges."""
        lo, hi = self.ROTATION_RANGE
        if not lo <= self.rotation <= hi:
            raise ParameterError("rotation %g outside [%g, %g]" % (self.rotation, lo, hi))
        lo, hi = self.SCALE_RANGE
        if not lo <= self.scale <= hi:
            raise ParameterError("scale %g outside [%g, %g]" % (self.scale, lo, hi))
        lo, hi = self.TRANSLATE_RANGE
        for t in self.translate:
            if not lo <= t <= hi:
                raise ParameterError("translation %g outside [%g, %g]" % (t, lo, hi))

    def inverse(self) -> AugmentParams:
        """Params undoing this transform. Only defined for non-mirroring params."""
        if self.mirror:
            raise ParameterError("mirrored transforms have no single-step inverse")
        if self.scale <= 0:
            raise ParameterError("scale must be positive, got %g" % self.scale)
        th = math.radians(-self.rotation)
        tx, ty = self.translate
        c, s = math.cos(th), math.sin(th)
        # Undoing translate t requires pre-rotating it back and rescaling.
        itx = -(c * tx - s * ty) / self.scale
        ity = -(s * tx + c * ty) / self.scale
        return AugmentParams(
            rotation=-self.rotation,
            scale=1.0 / self.scale,
            translate=(itx, ity),
        )


def augment(scene: Scene, params: AugmentParams, *, enforce_ranges: bool = False) -> Scene:
    """Apply a similarity transform (and optional mirror) to all annotations.

    Joints that land outside the canvas become absent; persons losing all
    joints are dropped.  Explicit centroids are transformed along and clamped
    to the canvas, derived centroids stay derived.
    """
    if params.scale <= 0:
        raise ParameterError("scale must be positive, got %g" % params.scale)
    if enforce_ranges:
        params.check_ranges()
    w, h = scene.width, scene.height
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    th = math.radians(params.rotation)
    cth, sth = math.cos(th), math.sin(th)
    s = params.scale
    tx, ty = params.translate

    def warp(p: Position) -> Position:
        x, y = p
        if params.mirror:
            x = (w - 1) - x
        dx, dy = x - cx, y - cy
        return (
            cx + s * (cth * dx - sth * dy) + tx,
            cy + s * (sth * dx + cth * dy) + ty,
        )

    k = scene.num_joints
    mirror_of = {js.joint_id: js.mirror_id for js in scene.joint_layout}
    persons = []
    for person in scene.persons:
        slots: list[Position | None] = [None] * k
        for j, pos in enumerate(person.joints):
            if pos is None:
                continue
            target = mirror_of[j] if params.mirror else j
            q = warp(pos)
            if 0.0 <= q[0] < w and 0.0 <= q[1] < h:
                slots[target] = q
        if not any(p is not None for p in slots):
            continue
        cent = None
        if person.centroid is not None:
            qc = warp(person.centroid)
            cent = (min(max(qc[0], 0.0), w - 1.0), min(max(qc[1], 0.0), h - 1.0))
        persons.append(PersonAnnotation(joints=tuple(slots), centroid=cent, head_box=None))
    return replace(scene, persons=tuple(persons))


# --- JSON codec ------------------------------------------------------------

_GROUP_NAMES = {g.value: g for g in JointGroup}


def _num(value: float) -> float | int:
    """Emit integral floats as ints for compact, stable files."""
    f = float(value)
    return int(f) if f.is_integer() else f


def scene_to_dict(scene: Scene) -> dict:
    layout = [
        {
            "id": js.joint_id,
            "name": js.name,
            "group": js.group.value,
            "rank": js.inference_rank,
            "mirror_id": js.mirror_id,
        }
        for js in scene.joint_layout
    ]
    persons = []
    for person in scene.persons:
        entry: dict = {
            "joints": [
                None if p is None else [_num(p[0]), _num(p[1])] for p in person.joints
            ],
            "centroid": None
            if person.centroid is None
            else [_num(person.centroid[0]), _num(person.centroid[1])],
        }
        if person.head_box is not None:
            entry["head_box"] = [_num(v) for v in person.head_box]
        persons.append(entry)
    return {
        "height": scene.height,
        "width": scene.width,
        "joint_spec": layout,
        "persons": persons,
    }


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise SchemaError(msg)


def _parse_position(obj, what: str) -> Position:
    _require(
        isinstance(obj, (list, tuple)) and len(obj) == 2
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj),
        "%s must be a [x, y] number pair" % what,
    )
    return (float(obj[0]), float(obj[1]))


def scene_from_dict(doc: dict) -> Scene:
    """Parse and validate a scene document, raising SchemaError on misuse."""
    _require(isinstance(doc, dict), "scene document must be a JSON object")
    for key in ("height", "width", "joint_spec", "persons"):
        _require(key in doc, "scene document is missing %r" % key)
    _require(
        isinstance(doc["height"], int) and isinstance(doc["width"], int),
        "height and width must be integers",
    )
    _require(isinstance(doc["joint_spec"], list), "joint_spec must be a list")
    layout = []
    for i, entry in enumerate(doc["joint_spec"]):
        _require(isinstance(entry, dict), "joint_spec[%d] must be an object" % i)
        for key in ("id", "name", "group", "rank", "mirror_id"):
            _require(key in entry, "joint_spec[%d] is missing %r" % (i, key))
        _require(entry["group"] in _GROUP_NAMES, "joint_spec[%d] has unknown group %r" % (i, entry["group"]))
        layout.append(
            JointSpec(
                joint_id=int(entry["id"]),
                name=str(entry["name"]),
                group=_GROUP_NAMES[entry["group"]],
                inference_rank=int(entry["rank"]),
                mirror_id=int(entry["mirror_id"]),
            )
        )
    _require(isinstance(doc["persons"], list), "persons must be a list")
    persons = []
    for i, entry in enumerate(doc["persons"]):
        _require(isinstance(entry, dict) and "joints" in entry, "persons[%d] must have joints" % i)
        _require(isinstance(entry["joints"], list), "persons[%d].joints must be a list" % i)
        joints = tuple(
            None if p is None else _parse_position(p, "persons[%d].joints[%d]" % (i, j))
            for j, p in enumerate(entry["joints"])
        )
        cent = entry.get("centroid")
        centroid = None if cent is None else _parse_position(cent, "persons[%d].centroid" % i)
        head_box = None
        if entry.get("head_box") is not None:
            hb = entry["head_box"]
            _require(
                isinstance(hb, list) and len(hb) == 4
                and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in hb),
                "persons[%d].head_box must be [x0, y0, x1, y1]" % i,
            )
            head_box = tuple(float(v) for v in hb)
        persons.append(PersonAnnotation(joints=joints, centroid=centroid, head_box=head_box))
    scene = Scene(
        height=doc["height"],
        width=doc["width"],
        joint_layout=tuple(layout),
        persons=tuple(persons),
    )
    try:
        scene.validate()
    except AnnotationError as exc:
        raise SchemaError("invalid scene: %s" % exc) from exc
    return scene


def dump_scene(scene: Scene) -> str:
    return json.dumps(scene_to_dict(scene), indent=2)


def save_scene(scene: Scene, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_scene(scene))
        fh.write("\n")


def load_scene(path) -> Scene:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError("%s is not valid JSON: %s" % (path, exc)) from exc
    try:
        return scene_from_dict(doc)
    except SchemaError as exc:
        raise SchemaError("%s: %s" % (path, exc)) from exc
