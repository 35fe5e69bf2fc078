"""Scene data model: floor plans, 7D placements, normalization and augmentation.

A scene is a floor polygon plus an unordered set of furniture instances.
Each instance carries a 7D placement: translation (3), half-extent size (3)
and yaw about the vertical axis (1). All downstream consumers treat the
instance collection as order-free.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
from shapely.geometry import Point, Polygon

ROOM_TYPES = ("bedroom", "dining", "library", "living", "toy")

DEFAULT_MASK_RESOLUTION = 64
DEFAULT_EXTENT = 6.4

TWO_PI = 2.0 * math.pi


class SceneFormatError(ValueError):
    """Raised when a scene file violates the schema; carries the field path."""

    def __init__(self, path: str, message: str):
        self.field_path = path
        super().__init__(f"{path}: {message}")


def wrap_angle(theta: float) -> float:
    """Wrap an angle to the principal range [-pi, pi)."""
    wrapped = math.fmod(theta + math.pi, TWO_PI)
    if wrapped < 0:
        wrapped += TWO_PI
    return wrapped - math.pi


@dataclass(frozen=True)
class Transform7:
    """World-frame placement: translation, AABB half-extents and yaw."""

    translation: tuple[float, float, float]
    size: tuple[float, float, float]
    yaw: float

    def __post_init__(self):
        if any(s <= 0 for s in self.size):
            raise ValueError(f"size components must be strictly positive, got {self.size}")
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    def to_vector(self) -> np.ndarray:
        return np.array([*self.translation, *self.size, self.yaw], dtype=np.float64)

    @staticmethod
    def from_vector(v: Sequence[float]) -> "Transform7":
        v = [float(x) for x in v]
        if len(v) != 7:
            raise ValueError(f"expected 7 components, got {len(v)}")
        return Transform7(translation=(v[0], v[1], v[2]), size=(v[3], v[4], v[5]), yaw=v[6])


@dataclass(frozen=True)
class NormalizedTransform7:
    """Transform7 mapped componentwise into [0, 1] by NormalizationBounds."""

    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != 7:
            raise ValueError(f"expected 7 components, got {len(self.values)}")

    def to_vector(self) -> np.ndarray:
        return np.array(self.values, dtype=np.float64)


@dataclass(frozen=True)
class NormalizationBounds:
    """Per-component (min, max) for the 7 placement attributes.

    Translation x/z bounds are expanded to the circumscribed-circle radius of
    the training data so arbitrarily rotated scenes never clip.
    """

    mins: tuple[float, ...]
    maxs: tuple[float, ...]

    def __post_init__(self):
        if len(self.mins) != 7 or len(self.maxs) != 7:
            raise ValueError("bounds must have 7 components")
        for lo, hi in zip(self.mins, self.maxs):
            if not hi > lo:
                raise ValueError(f"max must exceed min, got ({lo}, {hi})")

    def to_json(self) -> dict:
        return {"mins": list(self.mins), "maxs": list(self.maxs)}

    @staticmethod
    def from_json(d: dict) -> "NormalizationBounds":
        return NormalizationBounds(tuple(d["mins"]), tuple(d["maxs"]))


@dataclass(frozen=True)
class FloorPlan:
    """Simple polygon footprint plus its rasterized binary occupancy mask."""

    polygon: tuple[tuple[float, float], ...]
    mask: np.ndarray
    extent: float

    def __post_init__(self):
        vals = np.unique(self.mask)
        if not np.all(np.isin(vals, (0, 1))):
            raise ValueError("mask must be binary")

    def shapely(self) -> Polygon:
        return Polygon(self.polygon)

    def __eq__(self, other):
        if not isinstance(other, FloorPlan):
            return NotImplemented
        return (
            self.polygon == other.polygon
            and self.extent == other.extent
            and np.array_equal(self.mask, other.mask)
        )


@dataclass(frozen=True)
class FurnitureInstance:
    asset_id: str
    transform: Transform7


@dataclass
class Scene:
    id: str
    room_type: str
    floor: FloorPlan
    instances: list[FurnitureInstance] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.room_type not in ROOM_TYPES:
            raise ValueError(f"unknown room_type {self.room_type!r}")


def rasterize_floor(
    polygon: Sequence[tuple[float, float]],
    resolution: int = DEFAULT_MASK_RESOLUTION,
    extent: float = DEFAULT_EXTENT,
) -> np.ndarray:
    """Rasterize a simple polygon to a binary occupancy mask.

    The grid covers an ``extent`` x ``extent`` square centered on the polygon
    centroid; a cell is 1 iff its center lies inside the polygon. Row index
    runs along +z, column index along +x.
    """
    if resolution < 8:
        raise ValueError(f"resolution must be >= 8, got {resolution}")
    poly = Polygon(polygon)
    if poly.area <= 0:
        raise ValueError("degenerate polygon with zero area")
    if not poly.is_valid:
        raise ValueError("polygon must be simple (non-self-intersecting)")
    cx, cz = poly.centroid.x, poly.centroid.y
    half = extent / 2.0
    minx, minz, maxx, maxz = poly.bounds
    if maxx - minx > extent or maxz - minz > extent:
        raise ValueError("polygon does not fit inside extent")
    cell = extent / resolution
    centers = (np.arange(resolution) + 0.5) * cell - half
    xs = cx + centers
    zs = cz + centers
    gx, gz = np.meshgrid(xs, zs)
    from shapely import contains_xy

    inside = contains_xy(poly, gx.ravel(), gz.ravel())
    return inside.reshape(resolution, resolution).astype(np.uint8)


def compute_bounds(
    scenes: Iterable[Scene],
    pad: float = 1e-3,
) -> NormalizationBounds:
    """Compute augmentation-aware normalization bounds over a training set.

    Raw min/max per component, with translation x/z replaced by the
    symmetric circumscribed radius so any rotation augmentation stays
    in-bounds. Yaw bounds are fixed to [-pi, pi).
    """
    vecs = []
    for s in scenes:
        for inst in s.instances:
            vecs.append(inst.transform.to_vector())
    if not vecs:
        raise ValueError("no instances in training scenes")
    arr = np.stack(vecs)
    mins = arr.min(axis=0)
    maxs = arr.max(axis=0)
    radius = float(np.max(np.hypot(arr[:, 0], arr[:, 2]))) + pad
    mins[0], maxs[0] = -radius, radius
    mins[2], maxs[2] = -radius, radius
    # keep y and size bounds non-degenerate
    for i in (1, 3, 4, 5):
        if maxs[i] - mins[i] < pad:
            mins[i] -= pad
            maxs[i] += pad
    mins[6], maxs[6] = -math.pi, math.pi
    return NormalizationBounds(tuple(mins.tolist()), tuple(maxs.tolist()))


def normalize_transform(
    t: Transform7,
    b: NormalizationBounds,
    strict: bool = True,
) -> NormalizedTransform7:
    """Map each placement component linearly into [0, 1].

    With ``strict`` (training mode) out-of-bounds components raise; otherwise
    they clamp with a warning so retrieval of unseen large assets degrades
    gracefully.
    """
    x = t.to_vector()
    lo = np.array(b.mins)
    hi = np.array(b.maxs)
    v = (x - lo) / (hi - lo)
    if np.any(v < 0) or np.any(v > 1):
        if strict:
            raise ValueError(f"transform out of bounds: {x} not within {b.mins}..{b.maxs}")
        warnings.warn("transform out of bounds, clamping to [0, 1]", stacklevel=2)
        v = np.clip(v, 0.0, 1.0)
    return NormalizedTransform7(tuple(v.tolist()))


def denormalize_transform(v: NormalizedTransform7, b: NormalizationBounds) -> Transform7:
    lo = np.array(b.mins)
    hi = np.array(b.maxs)
    x = lo + np.asarray(v.values) * (hi - lo)
    return Transform7.from_vector(x)


def _rotate_xz(x: float, z: float, theta: float) -> tuple[float, float]:
    c, s = math.cos(theta), math.sin(theta)
    return c * x - s * z, s * x + c * z


def augment_scene(
    scene: Scene,
    op: str,
    theta: float = 0.0,
    resolution: int | None = None,
) -> Scene:
    """Apply a scene-level augmentation: ``rotate``, ``mirror_x`` or ``mirror_z``.

    Rotation is about the world origin in the xz plane. Sizes are half-extents
    in the object frame and are untouched by every op. The floor mask is
    re-rasterized from the transformed polygon.
    """
    if op == "rotate":
        def pt(x, z):
            return _rotate_xz(x, z, theta)

        def yaw(a):
            return wrap_angle(a + theta)
    elif op == "mirror_x":
        def pt(x, z):
            return (-x, z)

        def yaw(a):
            return wrap_angle(math.pi - a)
    elif op == "mirror_z":
        def pt(x, z):
            return (x, -z)

        def yaw(a):
            return wrap_angle(-a)
    else:
        raise ValueError(f"unknown augmentation {op!r}")

    polygon = tuple(pt(x, z) for x, z in scene.floor.polygon)
    res = resolution or scene.floor.mask.shape[0]
    mask = rasterize_floor(polygon, res, scene.floor.extent)
    instances = []
    for inst in scene.instances:
        tx, ty, tz = inst.transform.translation
        nx, nz = pt(tx, tz)
        instances.append(
            FurnitureInstance(
                asset_id=inst.asset_id,
                transform=Transform7((nx, ty, nz), inst.transform.size, yaw(inst.transform.yaw)),
            )
        )
    return Scene(
        id=scene.id,
        room_type=scene.room_type,
        floor=FloorPlan(polygon=polygon, mask=mask, extent=scene.floor.extent),
        instances=instances,
        extra=dict(scene.extra),
    )


# --- JSON serialization ------------------------------------------------------

_SCENE_KEYS = ("id", "room_type", "floor", "instances")


def scene_to_json(scene: Scene) -> dict:
    d = {
        "id": scene.id,
        "room_type": scene.room_type,
        "floor": {
            "polygon": [list(p) for p in scene.floor.polygon],
            "extent": scene.floor.extent,
            "resolution": int(scene.floor.mask.shape[0]),
        },
        "instances": [
            {
                "asset_id": inst.asset_id,
                "translation": list(inst.transform.translation),
                "size": list(inst.transform.size),
                "yaw": inst.transform.yaw,
            }
            for inst in scene.instances
        ],
    }
    d.update(scene.extra)
    return d


def _require(d: dict, key: str, path: str):
    if key not in d:
        raise SceneFormatError(f"{path}.{key}" if path else key, "missing field")
    return d[key]


def scene_from_json(d: dict) -> Scene:
    if not isinstance(d, dict):
        raise SceneFormatError("", "scene record must be an object")
    sid = _require(d, "id", "")
    room_type = _require(d, "room_type", "")
    floor_d = _require(d, "floor", "")
    polygon = _require(floor_d, "polygon", "floor")
    extent = float(_require(floor_d, "extent", "floor"))
    resolution = int(floor_d.get("resolution", DEFAULT_MASK_RESOLUTION))
    instances_d = _require(d, "instances", "")
    if not isinstance(instances_d, list):
        raise SceneFormatError("instances", "must be a list")
    polygon = tuple(tuple(float(c) for c in p) for p in polygon)
    mask = rasterize_floor(polygon, resolution, extent)
    instances = []
    for i, rec in enumerate(instances_d):
        path = f"instances[{i}]"
        try:
            t = Transform7(
                translation=tuple(float(x) for x in _require(rec, "translation", path)),
                size=tuple(float(x) for x in _require(rec, "size", path)),
                yaw=float(_require(rec, "yaw", path)),
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, SceneFormatError):
                raise
            raise SceneFormatError(path, str(e)) from e
        instances.append(FurnitureInstance(asset_id=str(_require(rec, "asset_id", path)), transform=t))
    extra = {k: v for k, v in d.items() if k not in _SCENE_KEYS}
    try:
        return Scene(
            id=str(sid),
            room_type=str(room_type),
            floor=FloorPlan(polygon=polygon, mask=mask, extent=extent),
            instances=instances,
            extra=extra,
        )
    except ValueError as e:
        raise SceneFormatError("room_type", str(e)) from e


def save_scene(scene: Scene, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scene_to_json(scene), indent=2, sort_keys=True))


def load_scene(path: str | Path) -> Scene:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise SceneFormatError("", f"invalid JSON: {e}") from e
    return scene_from_json(d)


def load_front_scene(path: str | Path, room_type: str = "bedroom") -> Scene:
    """Map a 3D-FRONT-style scene record onto the internal Scene type.

    Expects the external layout convention: a JSON file with a ``room`` object
    holding ``floor_polygon`` (list of [x, z]) and ``furniture`` entries with
    ``jid``, ``pos``, ``scale`` (full extents) and ``rot`` (yaw radians).
    This loader is format-compatible plumbing only; the external dataset is
    not bundled.
    """
    d = json.loads(Path(path).read_text())
    room = _require(d, "room", "")
    polygon = tuple(tuple(float(c) for c in p) for p in _require(room, "floor_polygon", "room"))
    minx = min(p[0] for p in polygon)
    maxx = max(p[0] for p in polygon)
    minz = min(p[1] for p in polygon)
    maxz = max(p[1] for p in polygon)
    extent = max(maxx - minx, maxz - minz) * 1.05
    mask = rasterize_floor(polygon, DEFAULT_MASK_RESOLUTION, extent)
    instances = []
    for i, f in enumerate(room.get("furniture", [])):
        path_i = f"room.furniture[{i}]"
        scale = [float(x) for x in _require(f, "scale", path_i)]
        instances.append(
            FurnitureInstance(
                asset_id=str(_require(f, "jid", path_i)),
                transform=Transform7(
                    translation=tuple(float(x) for x in _require(f, "pos", path_i)),
                    size=tuple(s / 2.0 for s in scale),
                    yaw=float(f.get("rot", 0.0)),
                ),
            )
        )
    return Scene(
        id=str(d.get("uid", Path(path).stem)),
        room_type=room_type,
        floor=FloorPlan(polygon=polygon, mask=mask, extent=extent),
        instances=instances,
    )
