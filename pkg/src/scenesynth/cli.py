"""Command-line entry points for dataset generation, indexing, training,
synthesis, evaluation and serving."""

from __future__ import annotations

import json
from dataclasses import fields
from pathlib import Path

import click
import numpy as np


@click.group()
def main():
    """Style-consistent autoregressive scene synthesis toolkit."""


@main.group()
def toyworld():
    """Deterministic toy dataset generation."""


@toyworld.command("gen")
@click.option("--scenes", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--shapes", type=int, default=3, show_default=True)
@click.option("--colors", type=int, default=4, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def toyworld_gen(scenes, seed, shapes, colors, out):
    """Emit a toy asset library plus style-themed scenes as JSON files."""
    from .scene import save_scene
    from .toyworld import generate_dataset, generate_library, save_library

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    library = generate_library(n_shapes=shapes, n_colors=colors, seed=seed)
    save_library(library, out_dir / "library.json")
    dataset = generate_dataset(scenes, seed, library)
    scene_dir = out_dir / "scenes"
    scene_dir.mkdir(exist_ok=True)
    for scene in dataset:
        save_scene(scene, scene_dir / f"{scene.id}.json")
    click.echo(f"wrote {len(library)} assets and {len(dataset)} scenes to {out_dir}")


@main.group()
def embed():
    """Asset embedding index construction and querying."""


@embed.command("build")
@click.option("--library", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--room-type", default="toy", show_default=True)
def embed_build(library, out, room_type):
    """Render each library asset from 8 canonical views and build the index."""
    from .embedding import StubEncoder, build_index, save_index
    from .toyworld import load_library

    assets = load_library(library)
    index = build_index(
        assets, StubEncoder(), room_types={a.id: [room_type] for a in assets}
    )
    save_index(index, out)
    click.echo(f"indexed {len(index)} assets -> {out}")


@embed.command("query")
@click.option("--index", "index_path", type=click.Path(exists=True), required=True)
@click.option("--text", required=True)
@click.option("-k", type=int, default=5, show_default=True)
def embed_query(index_path, text, k):
    """Deterministic top-k asset ranking for a text query."""
    from .embedding import StubEncoder, embed_text, load_index, rank_assets

    index = load_index(index_path)
    query = embed_text(text, StubEncoder())
    for asset_id in rank_assets(index, query, k):
        click.echo(f"{asset_id}\t{float(index.row(asset_id) @ query):.4f}")


def _load_scene_dir(data_dir: Path):
    from .scene import load_scene

    paths = sorted((data_dir / "scenes").glob("*.json")) or sorted(data_dir.glob("*.json"))
    scenes = [load_scene(p) for p in paths if p.name != "library.json"]
    if not scenes:
        raise click.ClickException(f"no scene JSON files under {data_dir}")
    return scenes


def _config_from_dict(cls, d: dict):
    names = {f.name for f in fields(cls)}
    unknown = set(d) - names
    if unknown:
        raise click.ClickException(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return cls(**d)


@main.command("train")
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--index", "index_path", type=click.Path(exists=True), required=True)
@click.option("--room-type", default=None, help="restrict training to one room type")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help='JSON file with optional "model" and "train" key-value sections')
@click.option("--out", type=click.Path(), required=True)
@click.option("--resume-from", type=click.Path(exists=True), default=None)
def train_cmd(data, index_path, room_type, config_path, out, resume_from):
    """Train the scene model on a directory of scene JSON files."""
    from .embedding import load_index
    from .model import ModelConfig
    from .training import TrainConfig, train

    scenes = _load_scene_dir(Path(data))
    if room_type:
        scenes = [s for s in scenes if s.room_type == room_type]
        if not scenes:
            raise click.ClickException(f"no scenes of room type {room_type!r}")
    cfg = json.loads(Path(config_path).read_text()) if config_path else {}
    model_config = _config_from_dict(ModelConfig, cfg.get("model", {}))
    train_config = _config_from_dict(TrainConfig, {**cfg.get("train", {}), "out_dir": out})
    index = load_index(index_path)
    _, _, reports = train(
        scenes, index, model_config, train_config, resume_from=resume_from
    )
    click.echo(f"final loss {reports[-1].total:.4f}; artifacts in {out}")


def _load_synthesis_deps(checkpoint, index_path):
    from .embedding import StubEncoder, load_index
    from .model import load_checkpoint

    model, bounds, _ = load_checkpoint(checkpoint)
    return model, load_index(index_path), bounds, StubEncoder()


def _write_result(scene, trace, out):
    from .scene import save_scene

    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_scene(scene, out)
    trace_path = out.with_suffix(".trace.json")
    trace_path.write_text(json.dumps(trace.to_json(), indent=2, sort_keys=True))
    click.echo(f"scene -> {out}; trace -> {trace_path}")


@main.group()
def synth():
    """Scene synthesis, completion and instance replacement."""


@synth.command("generate")
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--index", "index_path", type=click.Path(exists=True), required=True)
@click.option("--floor", type=click.Path(exists=True), required=True,
              help="scene JSON whose floor plan seeds the synthesis")
@click.option("--prompt", default=None)
@click.option("--w0", type=float, default=0.35, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def synth_generate(checkpoint, index_path, floor, prompt, w0, seed, out):
    from .scene import load_scene
    from .synthesis import GuidanceConfig, generate_scene

    model, index, bounds, encoder = _load_synthesis_deps(checkpoint, index_path)
    scene, trace = generate_scene(
        model, index, load_scene(floor), bounds,
        guidance=GuidanceConfig(prompt=prompt, w0=w0),
        rng=np.random.default_rng(seed), encoder=encoder,
    )
    _write_result(scene, trace, out)


@synth.command("complete")
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--index", "index_path", type=click.Path(exists=True), required=True)
@click.option("--scene", "scene_path", type=click.Path(exists=True), required=True)
@click.option("--prompt", default=None)
@click.option("--w0", type=float, default=0.35, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def synth_complete(checkpoint, index_path, scene_path, prompt, w0, seed, out):
    from .scene import load_scene
    from .synthesis import GuidanceConfig, complete_scene

    model, index, bounds, encoder = _load_synthesis_deps(checkpoint, index_path)
    scene, trace = complete_scene(
        model, index, load_scene(scene_path), bounds,
        guidance=GuidanceConfig(prompt=prompt, w0=w0),
        rng=np.random.default_rng(seed), encoder=encoder,
    )
    _write_result(scene, trace, out)


@synth.command("replace")
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--index", "index_path", type=click.Path(exists=True), required=True)
@click.option("--scene", "scene_path", type=click.Path(exists=True), required=True)
@click.option("--instance", type=int, required=True)
@click.option("--prompt", required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def synth_replace(checkpoint, index_path, scene_path, instance, prompt, seed, out):
    from .scene import load_scene, save_scene
    from .synthesis import replace_instance

    model, index, bounds, encoder = _load_synthesis_deps(checkpoint, index_path)
    scene = replace_instance(
        model, index, load_scene(scene_path), instance, prompt, bounds, encoder,
        rng=np.random.default_rng(seed),
    )
    save_scene(scene, out)
    click.echo(f"scene -> {out}")


@main.command("eval")
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--index", "index_path", type=click.Path(exists=True), required=True)
@click.option("--test", "test_dir", type=click.Path(exists=True), required=True)
@click.option("--keep", default="1,2,3,4,5", show_default=True,
              help="comma-separated prepopulated instance counts")
@click.option("--seeds", type=int, default=5, show_default=True)
@click.option("--render-metrics/--no-render-metrics", default=False, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def eval_cmd(checkpoint, index_path, test_dir, keep, seeds, render_metrics, out):
    """Scene-completion evaluation sweep; CSV report per (keep, decoding)."""
    from .embedding import StubEncoder, load_index
    from .evaluation import evaluate_completion, summarize_rows, write_completion_csv
    from .model import load_checkpoint
    from .toyworld import load_library

    model, bounds, _ = load_checkpoint(checkpoint)
    index = load_index(index_path)
    scenes = _load_scene_dir(Path(test_dir))
    keep_counts = [int(x) for x in keep.split(",") if x.strip()]
    assets = {}
    lib = Path(test_dir) / "library.json"
    if lib.exists():
        assets = {a.id: a for a in load_library(lib)}
    elif render_metrics:
        raise click.ClickException("render metrics need a library.json in the test dir")
    rows = evaluate_completion(
        model, index, scenes, bounds, assets.get, StubEncoder(),
        keep_counts=keep_counts, seeds=list(range(seeds)),
        render_metrics=render_metrics,
    )
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_completion_csv(rows, out_dir / "completion.csv")
    summary = summarize_rows(rows)
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    for keep_n, stats in sorted(summary.items()):
        click.echo(f"keep={keep_n}: " + ", ".join(f"{k}={v:.4f}" for k, v in stats.items()))


@main.command("serve")
@click.option("--checkpoint", type=click.Path(exists=True), required=True,
              envvar="SCENESYNTH_CHECKPOINT")
@click.option("--index", "index_path", type=click.Path(exists=True), required=True,
              envvar="SCENESYNTH_INDEX")
@click.option("--library", type=click.Path(exists=True), required=True,
              envvar="SCENESYNTH_LIBRARY")
@click.option("--data-dir", type=click.Path(), default="sessions", show_default=True,
              envvar="SCENESYNTH_DATA_DIR")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True,
              envvar="SCENESYNTH_PORT")
def serve(checkpoint, index_path, library, data_dir, host, port):
    """Run the HTTP synthesis service."""
    import uvicorn

    from .service import create_app, load_service_state

    state = load_service_state(checkpoint, index_path, library, data_dir)
    uvicorn.run(create_app(state), host=host, port=port)


if __name__ == "__main__":
    main()
