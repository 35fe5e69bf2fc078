"""HTTP facade: sessions, synthesis, replacement, asset search, previews.

Every mutation carries a seed (client-supplied or server-generated and echoed
back) and is appended to a per-session JSON-lines event log, so any session
can be replayed deterministically from its initial scene.
"""

from __future__ import annotations

import json
import secrets
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Response
from pydantic import BaseModel

from .embedding import EmbeddingIndex, EncoderBackend, embed_text, rank_assets
from .model import SceneModel
from .rendering import SCENE_VIEW, MaterialOverride, render_meshes, scene_meshes
from .scene import (
    DEFAULT_EXTENT,
    ROOM_TYPES,
    FloorPlan,
    NormalizationBounds,
    Scene,
    SceneFormatError,
    rasterize_floor,
    scene_from_json,
    scene_to_json,
)
from .synthesis import GuidanceConfig, SynthesisLimits, complete_scene, replace_instance
from .toyworld import ToyAssetSpec

# hooks have the signatures of the default implementations below; tests can
# substitute stubs (e.g. a stop-always completer) without a trained model
Completer = Callable[[Scene, str | None, float, int], tuple[Scene, dict]]
Replacer = Callable[[Scene, int, str, int], Scene]


class CreateSessionRequest(BaseModel):
    scene: dict | None = None
    floor: list[tuple[float, float]] | None = None
    room_type: str = "toy"


class GenerateRequest(BaseModel):
    prompt: str | None = None
    w0: float = 0.35
    seed: int | None = None


class ReplaceRequest(BaseModel):
    instance_id: int
    prompt: str
    seed: int | None = None


@dataclass
class Session:
    id: str
    scene: Scene
    log_path: Path
    lock: threading.Lock = field(default_factory=threading.Lock)

    def append_event(self, event: dict) -> None:
        with open(self.log_path, "a") as f:
            f.write(json.dumps(event, sort_keys=True) + "\n")


@dataclass
class ServiceState:
    model: SceneModel | None
    index: EmbeddingIndex
    bounds: NormalizationBounds
    encoder: EncoderBackend
    assets: dict[str, ToyAssetSpec]
    data_dir: Path
    limits: SynthesisLimits = field(default_factory=SynthesisLimits)
    completer: Completer | None = None
    replacer: Replacer | None = None
    sessions: dict[str, Session] = field(default_factory=dict)
    registry_lock: threading.Lock = field(default_factory=threading.Lock)

    def run_generate(self, scene: Scene, prompt: str | None, w0: float, seed: int):
        if self.completer is not None:
            return self.completer(scene, prompt, w0, seed)
        guidance = GuidanceConfig(prompt=prompt or None, w0=w0)
        out, trace = complete_scene(
            self.model,
            self.index,
            scene,
            self.bounds,
            guidance=guidance,
            rng=np.random.default_rng(seed),
            limits=self.limits,
            encoder=self.encoder,
        )
        return out, trace.to_json()

    def run_replace(self, scene: Scene, instance_id: int, prompt: str, seed: int) -> Scene:
        if self.replacer is not None:
            return self.replacer(scene, instance_id, prompt, seed)
        return replace_instance(
            self.model,
            self.index,
            scene,
            instance_id,
            prompt,
            self.bounds,
            self.encoder,
            rng=np.random.default_rng(seed),
        )


def replay_events(state: ServiceState, events: list[dict]) -> Scene:
    """Re-execute a session event log from scratch; the result is deterministic
    because every mutating event stores its seed."""
    if not events or events[0]["op"] != "create":
        raise ValueError("event log must start with a create event")
    scene = scene_from_json(events[0]["scene"])
    for event in events[1:]:
        if event["op"] == "generate":
            scene, _ = state.run_generate(
                scene, event.get("prompt"), event.get("w0", 0.35), event["seed"]
            )
        elif event["op"] == "replace":
            scene = state.run_replace(
                scene, event["instance_id"], event["prompt"], event["seed"]
            )
        else:
            raise ValueError(f"unknown event op {event['op']!r}")
    return scene


def _scene_from_request(req: CreateSessionRequest) -> Scene:
    if req.room_type not in ROOM_TYPES:
        raise HTTPException(422, f"unknown room_type {req.room_type!r}")
    if req.scene is not None:
        try:
            return scene_from_json(req.scene)
        except SceneFormatError as e:
            raise HTTPException(400, str(e)) from e
    if req.floor is not None:
        try:
            polygon = tuple((float(x), float(z)) for x, z in req.floor)
            mask = rasterize_floor(polygon)
        except (ValueError, TypeError) as e:
            raise HTTPException(400, f"invalid floor polygon: {e}") from e
        return Scene(
            id="session",
            room_type=req.room_type,
            floor=FloorPlan(polygon=polygon, mask=mask, extent=DEFAULT_EXTENT),
            instances=[],
        )
    raise HTTPException(400, "request must carry either a scene or a floor polygon")


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="scenesynth service", version="0.1.0")
    app.state.svc = state
    state.data_dir.mkdir(parents=True, exist_ok=True)

    def get_session(session_id: str) -> Session:
        with state.registry_lock:
            sess = state.sessions.get(session_id)
            if sess is None:
                # lazily rebuild from a persisted event log (survives restarts)
                log_path = state.data_dir / f"{session_id}.jsonl"
                if not log_path.exists():
                    raise HTTPException(404, f"unknown session {session_id!r}")
                events = [json.loads(line) for line in log_path.read_text().splitlines()]
                sess = Session(id=session_id, scene=replay_events(state, events), log_path=log_path)
                state.sessions[session_id] = sess
            return sess

    @app.post("/sessions", status_code=201)
    def create_session(req: CreateSessionRequest):
        scene = _scene_from_request(req)
        session_id = secrets.token_hex(8)
        sess = Session(
            id=session_id, scene=scene, log_path=state.data_dir / f"{session_id}.jsonl"
        )
        sess.append_event({"op": "create", "scene": scene_to_json(scene)})
        with state.registry_lock:
            state.sessions[session_id] = sess
        return {"session_id": session_id}

    @app.get("/sessions/{session_id}")
    def get_scene(session_id: str):
        sess = get_session(session_id)
        return {"scene": scene_to_json(sess.scene)}

    @app.get("/sessions/{session_id}/history")
    def get_history(session_id: str):
        sess = get_session(session_id)
        events = [json.loads(line) for line in sess.log_path.read_text().splitlines()]
        return {"events": events}

    @app.post("/sessions/{session_id}/generate")
    def generate(session_id: str, req: GenerateRequest):
        sess = get_session(session_id)
        if not sess.lock.acquire(blocking=False):
            raise HTTPException(409, "session is being mutated by another request")
        try:
            seed = req.seed if req.seed is not None else secrets.randbelow(2**31)
            scene, trace = state.run_generate(sess.scene, req.prompt, req.w0, seed)
            sess.scene = scene
            sess.append_event(
                {"op": "generate", "prompt": req.prompt, "w0": req.w0, "seed": seed}
            )
            return {"scene": scene_to_json(scene), "trace": trace, "seed": seed}
        finally:
            sess.lock.release()

    @app.post("/sessions/{session_id}/replace")
    def replace(session_id: str, req: ReplaceRequest):
        sess = get_session(session_id)
        if not sess.lock.acquire(blocking=False):
            raise HTTPException(409, "session is being mutated by another request")
        try:
            if not 0 <= req.instance_id < len(sess.scene.instances):
                raise HTTPException(404, f"unknown instance {req.instance_id}")
            seed = req.seed if req.seed is not None else secrets.randbelow(2**31)
            scene = state.run_replace(sess.scene, req.instance_id, req.prompt, seed)
            sess.scene = scene
            sess.append_event(
                {
                    "op": "replace",
                    "instance_id": req.instance_id,
                    "prompt": req.prompt,
                    "seed": seed,
                }
            )
            return {"scene": scene_to_json(scene), "seed": seed}
        finally:
            sess.lock.release()

    @app.get("/sessions/{session_id}/render")
    def render(session_id: str, view: int = Query(0)):
        sess = get_session(session_id)
        if not 0 <= view < len(SCENE_VIEW.azimuths):
            raise HTTPException(400, f"view must be in 0..{len(SCENE_VIEW.azimuths) - 1}")
        meshes = scene_meshes(sess.scene, state.assets.get)
        image = render_meshes(meshes, SCENE_VIEW.azimuths[view], SCENE_VIEW, MaterialOverride())
        from io import BytesIO

        from PIL import Image

        buf = BytesIO()
        Image.fromarray(image, mode="RGB").save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.get("/assets/search")
    def search(q: str = Query(...), k: int = Query(5)):
        if k < 1:
            raise HTTPException(400, "k must be >= 1")
        if not q.strip():
            raise HTTPException(400, "query must be non-empty")
        query = embed_text(q, state.encoder)
        ids = rank_assets(state.index, query, k)
        scores = [float(state.index.row(i) @ query) for i in ids]
        return {"ids": ids, "scores": scores}

    return app


def load_service_state(
    checkpoint_path: str,
    index_path: str,
    library_path: str,
    data_dir: str,
) -> ServiceState:
    """Wire a service from artifact files (used by the CLI entry point)."""
    from .embedding import StubEncoder, load_index
    from .model import load_checkpoint
    from .toyworld import load_library

    model, bounds, _ = load_checkpoint(checkpoint_path)
    index = load_index(index_path)
    assets = {a.id: a for a in load_library(library_path)}
    return ServiceState(
        model=model,
        index=index,
        bounds=bounds,
        encoder=StubEncoder(),
        assets=assets,
        data_dir=Path(data_dir),
    )
