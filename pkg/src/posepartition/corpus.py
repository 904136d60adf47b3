"""Seeded synthetic scene generation.

Scenes hold 1..N copies of a jittered humanoid joint template placed by
rejection sampling so person centroids keep a minimum separation.  All
coordinates are integers and every draw comes from one seeded generator, so
a given (spec, seed) pair always produces the same scenes byte for byte.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import ConfigurationError, ParameterError
from .scene import PersonAnnotation, Scene, mpii_joint_layout

# Joint offsets (dx, dy) in pixels relative to the placement anchor, loosely
# matching frontal standing proportions.  Keys follow the default layout
# names.
HUMANOID_TEMPLATE: dict[str, tuple[float, float]] = {
    "head_top": (0.0, -62.0),
    "neck": (0.0, -46.0),
    "thorax": (0.0, -38.0),
    "r_shoulder": (-17.0, -36.0),
    "l_shoulder": (17.0, -36.0),
    "r_elbow": (-25.0, -16.0),
    "l_elbow": (25.0, -16.0),
    "r_wrist": (-31.0, 6.0),
    "l_wrist": (31.0, 6.0),
    "pelvis": (0.0, -2.0),
    "r_hip": (-10.0, 0.0),
    "l_hip": (10.0, 0.0),
    "r_knee": (-13.0, 30.0),
    "l_knee": (13.0, 30.0),
    "r_ankle": (-15.0, 60.0),
    "l_ankle": (15.0, 60.0),
}


@dataclass(frozen=True)
class CorpusSpec:
    """What to generate: scene count, canvas, crowding, and jitter."""

    num_scenes: int = 200
    min_persons: int = 1
    max_persons: int = 5
    min_separation: float = 60.0
    height: int = 256
    width: int = 256
    jitter: int = 4
    max_attempts: int = 2000

    def __post_init__(self) -> None:
        if self.num_scenes < 0:
            raise ParameterError("num_scenes must be non-negative")
        if not 1 <= self.min_persons <= self.max_persons:
            raise ParameterError(
                "person range must satisfy 1 <= min <= max, got [%d, %d]"
                % (self.min_persons, self.max_persons)
            )
        if self.min_separation < 0:
            raise ParameterError("min_separation must be non-negative")
        if self.height < 1 or self.width < 1:
            raise ParameterError("canvas must be at least 1x1")
        if self.jitter < 0:
            raise ParameterError("jitter must be non-negative")
        if self.max_attempts < 1:
            raise ParameterError("max_attempts must be positive")


def _anchor_box(
    spec: CorpusSpec, template: Mapping[str, tuple[float, float]]
) -> tuple[int, int, int, int]:
    """Inclusive anchor bounds keeping every jittered joint inside the canvas."""
    pad = spec.jitter
    xlo = -min(dx for dx, _ in template.values()) + pad
    xhi = spec.width - 1 - (max(dx for dx, _ in template.values()) + pad)
    ylo = -min(dy for _, dy in template.values()) + pad
    yhi = spec.height - 1 - (max(dy for _, dy in template.values()) + pad)
    xlo, ylo = math.ceil(xlo), math.ceil(ylo)
    xhi, yhi = math.floor(xhi), math.floor(yhi)
    if xlo > xhi or ylo > yhi:
        raise ConfigurationError(
            "canvas %dx%d cannot fit the joint template with jitter %d"
            % (spec.width, spec.height, spec.jitter)
        )
    return xlo, xhi, ylo, yhi


def generate_corpus(
    spec: CorpusSpec,
    seed: int,
    template: Mapping[str, tuple[float, float]] | None = None,
) -> list[Scene]:
    """Generate the corpus deterministically from one seed.

    Raises ConfigurationError when a scene's rejection sampling budget runs
    out, which signals an infeasible crowding/separation combination.
    """
    template = dict(template) if template is not None else dict(HUMANOID_TEMPLATE)
    layout = mpii_joint_layout()
    missing = [js.name for js in layout if js.name not in template]
    if missing:
        raise ConfigurationError("template lacks offsets for joints: %s" % ", ".join(missing))
    rng = np.random.default_rng(seed)
    xlo, xhi, ylo, yhi = _anchor_box(spec, template)
    offsets = [template[js.name] for js in layout]

    scenes = []
    for _ in range(spec.num_scenes):
        n_persons = int(rng.integers(spec.min_persons, spec.max_persons + 1))
        persons: list[PersonAnnotation] = []
        centroids: list[tuple[float, float]] = []
        attempts = 0
        while len(persons) < n_persons:
            if attempts >= spec.max_attempts:
                raise ConfigurationError(
                    "failed to place %d persons with separation %g after %d attempts"
                    % (n_persons, spec.min_separation, spec.max_attempts)
                )
            attempts += 1
            ax = int(rng.integers(xlo, xhi + 1))
            ay = int(rng.integers(ylo, yhi + 1))
            joints = []
            for dx, dy in offsets:
                jx = ax + dx + int(rng.integers(-spec.jitter, spec.jitter + 1))
                jy = ay + dy + int(rng.integers(-spec.jitter, spec.jitter + 1))
                joints.append((float(jx), float(jy)))
            cx = sum(p[0] for p in joints) / len(joints)
            cy = sum(p[1] for p in joints) / len(joints)
            if any(math.dist((cx, cy), c) < spec.min_separation for c in centroids):
                continue
            centroids.append((cx, cy))
            persons.append(PersonAnnotation(joints=tuple(joints)))
        scene = Scene(
            height=spec.height,
            width=spec.width,
            joint_layout=layout,
            persons=tuple(persons),
        )
        scene.validate()
        scenes.append(scene)
    return scenes
