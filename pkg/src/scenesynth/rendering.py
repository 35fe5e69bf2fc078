"""Headless deterministic rendering: parametric meshes and a z-buffer rasterizer.

Byte-identical output for identical input is a hard requirement (embeddings,
index files and evaluation renders must reproduce), so everything is plain
numpy with flat shading and no anti-aliasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .scene import Scene
from .toyworld import ToyAssetSpec, asset_dimensions

BACKGROUND = np.array([1.0, 1.0, 1.0])
FLOOR_COLOR = np.array([0.82, 0.80, 0.78])  # fixed floor texture for evaluation
LIGHT_DIR = np.array([0.5, 0.8, 0.3]) / np.linalg.norm([0.5, 0.8, 0.3])


@dataclass(frozen=True)
class MaterialOverride:
    """Fixed material ratios applied to all meshes before rendering."""

    ambient: float = 0.4
    diffuse: float = 0.4
    specular: float = 0.1


@dataclass(frozen=True)
class ViewConfig:
    distance: float = 3.0
    elevation: float = 1.0
    look_at: tuple[float, float, float] = (0.0, 0.0, 0.0)
    azimuths: tuple[float, ...] = tuple(k * math.pi / 4 for k in range(8))
    image_size: int = 128

    def __post_init__(self):
        if len(self.azimuths) != 8:
            raise ValueError("exactly 8 azimuths required")
        steps = np.diff(list(self.azimuths) + [self.azimuths[0] + 2 * math.pi])
        if not np.allclose(steps, steps[0]):
            raise ValueError("azimuths must be uniformly spaced")

    def key(self) -> str:
        return (
            f"d={self.distance},e={self.elevation},at={self.look_at},"
            f"n={len(self.azimuths)},s={self.image_size}"
        )


OBJECT_VIEW = ViewConfig(distance=3.0, elevation=1.0, look_at=(0.0, 0.0, 0.0))
SCENE_VIEW = ViewConfig(distance=8.0, elevation=2.5, look_at=(0.0, 1.0, 0.0), image_size=512)


@dataclass
class Mesh:
    vertices: np.ndarray  # (V, 3) float64
    faces: np.ndarray  # (F, 3) int
    color: np.ndarray  # (3,) in [0, 1]

    def transformed(self, scale=None, yaw: float = 0.0, translation=None) -> "Mesh":
        v = self.vertices.copy()
        if scale is not None:
            v = v * np.asarray(scale)
        if yaw:
            c, s = math.cos(yaw), math.sin(yaw)
            rot = np.array([[c, 0, -s], [0, 1, 0], [s, 0, c]])
            v = v @ rot.T
        if translation is not None:
            v = v + np.asarray(translation)
        return Mesh(v, self.faces, self.color)


def box_mesh(color=(0.5, 0.5, 0.5)) -> Mesh:
    v = np.array(
        [[x, y, z] for x in (-1, 1) for y in (-1, 1) for z in (-1, 1)], dtype=np.float64
    )
    f = np.array(
        [
            [0, 1, 3], [0, 3, 2],  # x = -1
            [4, 6, 7], [4, 7, 5],  # x = +1
            [0, 4, 5], [0, 5, 1],  # y = -1
            [2, 3, 7], [2, 7, 6],  # y = +1
            [0, 2, 6], [0, 6, 4],  # z = -1
            [1, 5, 7], [1, 7, 3],  # z = +1
        ]
    )
    return Mesh(v, f, np.asarray(color, dtype=np.float64))


def cylinder_mesh(color=(0.5, 0.5, 0.5), segments: int = 24) -> Mesh:
    angles = np.linspace(0, 2 * math.pi, segments, endpoint=False)
    ring = np.stack([np.cos(angles), np.zeros(segments), np.sin(angles)], axis=1)
    bottom = ring + [0, -1, 0]
    top = ring + [0, 1, 0]
    verts = np.concatenate([bottom, top, [[0, -1, 0]], [[0, 1, 0]]])
    cb, ct = 2 * segments, 2 * segments + 1
    faces = []
    for i in range(segments):
        j = (i + 1) % segments
        faces += [[i, i + segments, j], [j, i + segments, j + segments]]
        faces += [[cb, i, j], [ct, j + segments, i + segments]]
    return Mesh(verts, np.array(faces), np.asarray(color, dtype=np.float64))


def wedge_mesh(color=(0.5, 0.5, 0.5)) -> Mesh:
    # triangular prism: rectangular base, sloped face from the +z top edge
    v = np.array(
        [
            [-1, -1, -1], [1, -1, -1], [1, -1, 1], [-1, -1, 1],  # base
            [-1, 1, -1], [1, 1, -1],  # top edge at z = -1
        ],
        dtype=np.float64,
    )
    f = np.array(
        [
            [0, 2, 1], [0, 3, 2],  # bottom
            [0, 1, 5], [0, 5, 4],  # back (z = -1)
            [3, 5, 2], [3, 4, 5],  # slope
            [0, 4, 3],  # left
            [1, 2, 5],  # right
        ]
    )
    return Mesh(v, f, np.asarray(color, dtype=np.float64))


def sphere_mesh(color=(0.5, 0.5, 0.5), segments: int = 16) -> Mesh:
    us = np.linspace(0, 2 * math.pi, segments, endpoint=False)
    vs = np.linspace(0, math.pi, segments + 1)
    verts = []
    for vv in vs:
        for uu in us:
            verts.append(
                [math.sin(vv) * math.cos(uu), math.cos(vv), math.sin(vv) * math.sin(uu)]
            )
    faces = []
    for i in range(segments):
        for j in range(segments):
            a = i * segments + j
            b = i * segments + (j + 1) % segments
            c = (i + 1) * segments + j
            d = (i + 1) * segments + (j + 1) % segments
            faces += [[a, b, d], [a, d, c]]
    return Mesh(np.array(verts, dtype=np.float64), np.array(faces), np.asarray(color, dtype=np.float64))


_SHAPE_BUILDERS = {"box": box_mesh, "cylinder": cylinder_mesh, "wedge": wedge_mesh}


def asset_mesh(asset: ToyAssetSpec) -> Mesh:
    dims = asset_dimensions(asset)
    return _SHAPE_BUILDERS[asset.shape](color=asset.color).transformed(scale=dims)


def normalize_to_unit_cube(mesh: Mesh) -> Mesh:
    """Center the mesh and scale uniformly so it fits the unit cube."""
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    center = (lo + hi) / 2
    span = float((hi - lo).max())
    if span <= 0:
        raise ValueError("degenerate mesh")
    v = (mesh.vertices - center) / span
    return Mesh(v, mesh.faces, mesh.color)


def _camera(azimuth: float, cfg: ViewConfig):
    at = np.asarray(cfg.look_at, dtype=np.float64)
    eye = at + np.array(
        [cfg.distance * math.cos(azimuth), cfg.elevation, cfg.distance * math.sin(azimuth)]
    )
    forward = at - eye
    forward = forward / np.linalg.norm(forward)
    up = np.array([0.0, 1.0, 0.0])
    right = np.cross(forward, up)
    right = right / np.linalg.norm(right)
    true_up = np.cross(right, forward)
    return eye, right, true_up, forward


def render_meshes(
    meshes: list[Mesh],
    azimuth: float,
    cfg: ViewConfig,
    mat: MaterialOverride = MaterialOverride(),
    fov: float = math.radians(45),
) -> np.ndarray:
    """Render a mesh list to an RGB uint8 image with flat shading."""
    size = cfg.image_size
    img = np.tile(BACKGROUND, (size, size, 1)).astype(np.float64)
    zbuf = np.full((size, size), np.inf)
    eye, right, true_up, forward = _camera(azimuth, cfg)
    focal = 1.0 / math.tan(fov / 2)

    for mesh in meshes:
        if len(mesh.faces) == 0:
            raise ValueError("unrenderable mesh with no faces")
        rel = mesh.vertices - eye
        cam = np.stack([rel @ right, rel @ true_up, rel @ forward], axis=1)
        tri = cam[mesh.faces]  # (F, 3, 3)
        wtri = mesh.vertices[mesh.faces]
        # world-space face normals for lighting
        n = np.cross(wtri[:, 1] - wtri[:, 0], wtri[:, 2] - wtri[:, 0])
        norms = np.linalg.norm(n, axis=1, keepdims=True)
        valid = norms[:, 0] > 1e-12
        n = np.where(norms > 1e-12, n / np.maximum(norms, 1e-12), 0.0)
        lambert = np.abs(n @ LIGHT_DIR)
        view_dir = eye - wtri.mean(axis=1)
        view_dir = view_dir / np.maximum(np.linalg.norm(view_dir, axis=1, keepdims=True), 1e-12)
        half = LIGHT_DIR + view_dir
        half = half / np.maximum(np.linalg.norm(half, axis=1, keepdims=True), 1e-12)
        spec = np.abs(np.sum(n * half, axis=1)) ** 16
        shade = (
            mesh.color[None, :] * (mat.ambient + mat.diffuse * lambert[:, None])
            + mat.specular * spec[:, None]
        )
        shade = np.clip(shade, 0.0, 1.0)

        z = tri[:, :, 2]
        in_front = np.all(z > 1e-6, axis=1) & valid
        if not np.any(in_front):
            continue
        px = (tri[:, :, 0] * focal / z * 0.5 + 0.5) * size
        py = (0.5 - tri[:, :, 1] * focal / z * 0.5) * size
        for fi in np.nonzero(in_front)[0]:
            xs, ys, zs = px[fi], py[fi], z[fi]
            x0 = max(int(np.floor(xs.min())), 0)
            x1 = min(int(np.ceil(xs.max())) + 1, size)
            y0 = max(int(np.floor(ys.min())), 0)
            y1 = min(int(np.ceil(ys.max())) + 1, size)
            if x0 >= x1 or y0 >= y1:
                continue
            gx, gy = np.meshgrid(
                np.arange(x0, x1) + 0.5, np.arange(y0, y1) + 0.5
            )
            d = (ys[1] - ys[2]) * (xs[0] - xs[2]) + (xs[2] - xs[1]) * (ys[0] - ys[2])
            if abs(d) < 1e-12:
                continue
            w0 = ((ys[1] - ys[2]) * (gx - xs[2]) + (xs[2] - xs[1]) * (gy - ys[2])) / d
            w1 = ((ys[2] - ys[0]) * (gx - xs[2]) + (xs[0] - xs[2]) * (gy - ys[2])) / d
            w2 = 1.0 - w0 - w1
            inside = (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
            if not np.any(inside):
                continue
            # perspective-correct depth via interpolated 1/z
            inv_z = w0 / zs[0] + w1 / zs[1] + w2 / zs[2]
            depth = np.where(inv_z > 0, 1.0 / np.maximum(inv_z, 1e-12), np.inf)
            sub_z = zbuf[y0:y1, x0:x1]
            win = inside & (depth < sub_z)
            sub_z[win] = depth[win]
            img[y0:y1, x0:x1][win] = shade[fi]

    return (img * 255.0 + 0.5).astype(np.uint8)


def render_object_views(
    mesh: Mesh,
    cfg: ViewConfig = OBJECT_VIEW,
    mat: MaterialOverride = MaterialOverride(),
) -> list[np.ndarray]:
    """Eight canonical upper-hemisphere views of a unit-cube-normalized mesh."""
    norm = normalize_to_unit_cube(mesh)
    return [render_meshes([norm], az, cfg, mat) for az in cfg.azimuths]


def floor_mesh(scene: Scene) -> Mesh:
    """Fan-triangulated floor polygon at y=0 with the fixed evaluation texture."""
    poly = list(scene.floor.polygon)
    cx = sum(p[0] for p in poly) / len(poly)
    cz = sum(p[1] for p in poly) / len(poly)
    verts = [[cx, 0.0, cz]] + [[x, 0.0, z] for x, z in poly]
    faces = []
    for i in range(len(poly)):
        j = (i + 1) % len(poly)
        faces.append([0, i + 1, j + 1])
    return Mesh(np.array(verts, dtype=np.float64), np.array(faces), FLOOR_COLOR.copy())


def scene_meshes(scene: Scene, asset_lookup) -> list[Mesh]:
    """Instantiate meshes for a scene; asset_lookup maps asset_id -> ToyAssetSpec."""
    meshes = [floor_mesh(scene)]
    for inst in scene.instances:
        asset = asset_lookup(inst.asset_id)
        if asset is None:
            raise KeyError(f"unresolvable asset {inst.asset_id!r}")
        base = _SHAPE_BUILDERS[asset.shape](color=asset.color)
        meshes.append(
            base.transformed(
                scale=inst.transform.size,
                yaw=inst.transform.yaw,
                translation=inst.transform.translation,
            )
        )
    return meshes


def render_scene_views(
    scene: Scene,
    asset_lookup,
    cfg: ViewConfig = SCENE_VIEW,
    mat: MaterialOverride = MaterialOverride(),
) -> list[np.ndarray]:
    meshes = scene_meshes(scene, asset_lookup)
    return [render_meshes(meshes, az, cfg, mat) for az in cfg.azimuths]


def save_png(image: np.ndarray, path) -> None:
    from PIL import Image

    Image.fromarray(image, mode="RGB").save(path)
