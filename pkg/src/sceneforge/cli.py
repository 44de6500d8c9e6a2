"""Operator-facing command line chaining the pipeline stages.

Stages talk through files only. Every subcommand is deterministic given
(--seed, --config, inputs) except `generate --backend real`. Exit codes:
0 success, 1 validation/pipeline failure, 2 usage error. Logs are JSON
lines on stderr.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from . import actions as actions_mod
from . import assess as assess_mod
from . import balance as balance_mod
from . import emit as emit_mod
from . import gateway, pipeline, qa_match
from . import refine as refine_mod
from . import sampler as sampler_mod
from .config import load_config
from .errors import SceneForgeError
from .prompts import DemoLibrary, TaskKind
from .scene_graph import dump_scene_graph, load_scene_graph

def log_event(event: str, **fields) -> None:
    sys.stderr.write(json.dumps({"event": event, **fields}, sort_keys=True) + "\n")


def pipeline_errors(fn):
    """Convert domain errors into exit code 1 with a structured message."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (SceneForgeError, OSError) as exc:
            log_event("error", kind=type(exc).__name__, message=str(exc))
            sys.exit(1)

    return wrapper


def _make_backend(name: str, cfg: dict, seed: int, record_store: str | None):
    gw = cfg["gateway"]
    limiter = gateway.RateLimiter(
        max_in_flight=int(gw["max_in_flight"]),
        per_minute=int(gw["per_minute"]) or None,
    )
    if name == "mock":
        mock = cfg["mock"]
        backend = gateway.MockBackend(
            gateway.MockConfig(
                seed=seed,
                questions_per_scene=int(mock["questions_per_scene"]),
                dialogue_rounds=int(mock["dialogue_rounds"]),
                counting_error_rate=float(mock["counting_error_rate"]),
                existence_error_rate=float(mock["existence_error_rate"]),
                id_leak_rate=float(mock["id_leak_rate"]),
                refusal_rate=float(mock["refusal_rate"]),
            ),
            limiter=limiter,
        )
    elif name == "replay":
        if not record_store:
            raise SceneForgeError("--record-store is required for the replay backend")
        backend = gateway.ReplayBackend(record_store, limiter=limiter)
        return backend
    elif name == "real":
        backend = gateway.HttpBackend(
            model=gw["model"],
            max_retries=int(gw["max_retries"]),
            backoff_base=float(gw["backoff_base"]),
            timeout=float(gw["timeout"]),
            limiter=limiter,
        )
    else:  # pragma: no cover - click enum guards this
        raise SceneForgeError(f"unknown backend {name!r}")
    if record_store:
        backend = gateway.RecordingBackend(backend, record_store)
    return backend


@click.group()
def main():
    """Scene-graph-grounded 3D-language data factory."""


@main.command()
@click.argument("scenes", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", default=None, type=click.Path(), help="Write the validation report as JSONL.")
@click.option("--seed", default=0, type=int, help="Accepted for stage-interface uniformity.")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@pipeline_errors
def ingest(scenes, out_path, seed, config_path):
    """Validate scene-graph files (directories are scanned for *.json)."""
    del seed, config_path
    files = []
    for entry in scenes:
        files.extend(pipeline.scene_files(entry))
    report = []
    for file in files:
        graph = load_scene_graph(file)
        entry = {
            "path": str(file),
            "scene_id": graph.scene_id,
            "nodes": len(graph.nodes),
            "relations": len(graph.relations),
        }
        report.append(entry)
        log_event("ingested", **entry)
    if out_path:
        pipeline.write_rows(report, out_path)
    click.echo(f"ok: {len(files)} scene(s) valid")


@main.command()
@click.option("--scene", "scene_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@pipeline_errors
def sample(scene_path, out_dir, seed, config_path):
    """Subgraph sweep of one scene per the node-count rate table."""
    cfg = load_config(config_path)
    policy_path = cfg["sampler"]["policy"]
    if policy_path:
        policy = sampler_mod.policy_from_file(policy_path, seed=seed)
    else:
        policy = sampler_mod.SamplingPolicy(seed=seed)
    graph = load_scene_graph(scene_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    index = []
    for rate, sub_seed in sampler_mod.sweep_plan(graph, policy):
        sub = sampler_mod.sample_subgraph(graph, rate, sub_seed)
        tagged_id = f"{graph.scene_id}#r{rate:g}s{sub_seed}"
        sub = type(sub)(
            scene_id=tagged_id,
            nodes=sub.nodes,
            relations=sub.relations,
            room_type=sub.room_type,
        )
        name = f"{graph.scene_id}__r{rate:g}_s{sub_seed}.json"
        dump_scene_graph(sub, out / name)
        index.append({"path": name, "rate": rate, "seed": sub_seed, "nodes": len(sub.nodes)})
    (out / "index.json").write_text(
        json.dumps({"scene_id": graph.scene_id, "subgraphs": index}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    log_event("sampled", scene_id=graph.scene_id, subgraphs=len(index))
    click.echo(f"wrote {len(index)} subgraph(s) to {out}")


@main.command()
@click.option("--task", required=True, type=click.Choice([t.value for t in TaskKind]))
@click.option("--backend", "backend_name", required=True, type=click.Choice(["real", "replay", "mock"]))
@click.option("--scenes", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--demos", "demos_path", default=None, type=click.Path(exists=True))
@click.option("--n-demos", default=None, type=int)
@click.option("--record-store", default=None, type=click.Path())
@click.option("--jobs", default=1, show_default=True, type=int)
@pipeline_errors
def generate(task, backend_name, scenes, out_path, seed, config_path, demos_path, n_demos, record_store, jobs):
    """Prompt the backend per scene and parse responses into rows."""
    cfg = load_config(config_path)
    graphs = pipeline.load_scene_collection(scenes)
    backend = _make_backend(backend_name, cfg, seed, record_store)
    demos = DemoLibrary.load(demos_path or cfg["prompts"]["demos"])
    rows = pipeline.generate_rows(
        graphs,
        TaskKind(task),
        backend,
        demos=demos,
        n_demos=n_demos if n_demos is not None else int(cfg["generate"]["n_demos"]),
        seed=seed,
        temperature=float(cfg["generate"]["temperature"]),
        max_tokens=int(cfg["generate"]["max_tokens"]),
        jobs=jobs,
    )
    pipeline.write_rows(rows, out_path)
    log_event("generated", task=task, scenes=len(graphs), rows=len(rows), backend=backend_name)
    click.echo(f"wrote {len(rows)} row(s) to {out_path}")


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--scenes", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--verdicts", "verdicts_path", default=None, type=click.Path())
@click.option("--backend", "backend_name", default="mock", show_default=True, type=click.Choice(["real", "replay", "mock"]))
@click.option("--record-store", default=None, type=click.Path())
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@pipeline_errors
def refine(in_path, scenes, out_path, verdicts_path, backend_name, record_store, seed, config_path):
    """Classify and fix/drop/rewrite rows against scene-graph ground truth."""
    cfg = load_config(config_path)
    graphs = pipeline.load_scene_collection(scenes)
    rewriter = _make_backend(backend_name, cfg, seed, record_store)
    lexicons = None
    if cfg["refiner"]["lexicons"]:
        lexicons = refine_mod.Lexicons.load(cfg["refiner"]["lexicons"])
    rows = pipeline.read_rows(in_path)
    refined, verdict_log = pipeline.refine_rows(
        rows, graphs, rewriter,
        lexicons=lexicons,
        rewrite_rounds=int(cfg["refiner"]["rewrite_rounds"]),
    )
    pipeline.write_rows(refined, out_path)
    if verdicts_path:
        pipeline.write_rows(verdict_log, verdicts_path)
    actions = {}
    for entry in verdict_log:
        actions[entry["action"]] = actions.get(entry["action"], 0) + 1
    log_event("refined", rows_in=len(rows), rows_out=len(refined), actions=actions)
    click.echo(f"wrote {len(refined)} row(s) to {out_path}")


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--scenes", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--shard-size", default=None, type=int)
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@pipeline_errors
def emit(in_path, scenes, out_path, seed, shard_size, config_path):
    """Assemble refined rows into dataset shards plus a manifest."""
    cfg = load_config(config_path)
    graphs = pipeline.load_scene_collection(scenes)
    rows = pipeline.read_rows(in_path)
    records = pipeline.rows_to_records(rows, graphs, seed=seed)
    manifest = emit_mod.write_dataset(
        records, out_path,
        shard_size=shard_size if shard_size is not None else int(cfg["emitter"]["shard_size"]),
    )
    log_event("emitted", records=manifest["total_records"], shards=len(manifest["shards"]))
    click.echo(f"wrote {manifest['total_records']} record(s) to {out_path}")


@main.command()
@click.option("--in", "in_path", default=None, type=click.Path(exists=True))
@click.option("--scenes", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--ratio", default=None, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--build-eval", is_flag=True, default=False)
@click.option("--n-per-subset", default=50, show_default=True, type=int)
@click.option("--distractors", "distractors_path", default=None, type=click.Path(exists=True))
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@pipeline_errors
def balance(in_path, scenes, out_path, ratio, seed, build_eval, n_per_subset, distractors_path, config_path):
    """Augment negative existence records, or build the Yes/No-1/No-2 eval."""
    cfg = load_config(config_path)
    graphs = pipeline.load_scene_collection(scenes)
    if build_eval:
        distractors = balance_mod.load_distractors(
            distractors_path or cfg["balancer"]["distractors"]
        )
        items = balance_mod.build_existence_eval(graphs, n_per_subset, seed, distractors)
        with Path(out_path).open("w", encoding="utf-8") as fh:
            for item in items:
                fh.write(json.dumps(item.to_dict(), sort_keys=True) + "\n")
        log_event("eval_split", questions=len(items))
        click.echo(f"wrote {len(items)} question(s) to {out_path}")
        return
    if not in_path:
        raise SceneForgeError("--in is required unless --build-eval is given")
    records = emit_mod.read_dataset(in_path)
    ratio_value = ratio if ratio is not None else float(cfg["balancer"]["ratio"])
    augmented = balance_mod.augment_negatives(records, graphs, ratio_value, seed)
    manifest = emit_mod.write_dataset(augmented, out_path, shard_size=int(cfg["emitter"]["shard_size"]))
    log_event(
        "balanced",
        records=manifest["total_records"],
        no_fraction=round(balance_mod.no_fraction(augmented), 4),
    )
    click.echo(f"wrote {manifest['total_records']} record(s) to {out_path}")


def _report_csv(report: dict) -> str:
    lines = ["category,count,accuracy"]
    for name, row in report["categories"].items():
        acc = "N/A" if row["accuracy"] is None else f"{row['accuracy']:.6f}"
        lines.append(f"{name},{row['count']},{acc}")
    overall = report["overall"]
    acc = "N/A" if overall["accuracy"] is None else f"{overall['accuracy']:.6f}"
    lines.append(f"overall,{overall['count']},{acc}")
    return "\n".join(lines) + "\n"


@main.command()
@click.option("--pairs", "pairs_path", default=None, type=click.Path(exists=True))
@click.option("--scenes", "scenes_path", default=None, type=click.Path(exists=True))
@click.option("--out", "out_path", default=None, type=click.Path())
@click.option("--csv", "csv_path", default=None, type=click.Path())
@click.option("--corpus", "corpus_path", default=None, type=click.Path(exists=True))
@click.option("--stats-out", "stats_path", default=None, type=click.Path())
@click.option("--seed", default=0, type=int, help="Accepted for stage-interface uniformity.")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@pipeline_errors
def assess(pairs_path, scenes_path, out_path, csv_path, corpus_path, stats_path, seed, config_path):
    """Accuracy of QA rows against ground truth; corpus statistics."""
    del seed, config_path
    did_anything = False
    if pairs_path:
        if not scenes_path:
            raise SceneForgeError("--scenes is required with --pairs")
        graphs = pipeline.load_scene_collection(scenes_path)
        rows = pipeline.read_rows(pairs_path)
        report = assess_mod.accuracy_report(pipeline.assessment_pairs(rows), graphs)
        text = json.dumps(report, indent=2, sort_keys=True)
        click.echo(text)
        if out_path:
            Path(out_path).write_text(text + "\n", encoding="utf-8")
        if csv_path:
            Path(csv_path).write_text(_report_csv(report), encoding="utf-8")
        did_anything = True
    if corpus_path:
        records = emit_mod.read_dataset(corpus_path)
        stats = assess_mod.corpus_stats(records)
        text = json.dumps(stats, indent=2, sort_keys=True)
        if stats_path:
            Path(stats_path).write_text(text + "\n", encoding="utf-8")
        else:
            click.echo(text)
        did_anything = True
    if not did_anything:
        raise click.UsageError("nothing to do: pass --pairs and/or --corpus")


@main.command(name="eval-qa")
@click.option("--protocol", required=True, type=click.Choice(["strict", "refined"]))
@click.option("--preds", "preds_path", required=True, type=click.Path(exists=True))
@click.option("--refs", "refs_path", required=True, type=click.Path(exists=True))
@click.option("--out", "--verdicts-out", "verdicts_path", default=None, type=click.Path(),
              help="Write per-item verdicts as JSONL.")
@click.option("--no-lowercase", is_flag=True, default=False)
@click.option("--seed", default=0, type=int, help="Accepted for stage-interface uniformity.")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@pipeline_errors
def eval_qa(protocol, preds_path, refs_path, verdicts_path, no_lowercase, seed, config_path):
    """Strict / refined exact-match scoring of a predictions file."""
    del seed, config_path
    accuracy, verdicts = qa_match.score_file(
        preds_path, refs_path, protocol, lowercase=not no_lowercase
    )
    if verdicts_path:
        with Path(verdicts_path).open("w", encoding="utf-8") as fh:
            for verdict in verdicts:
                fh.write(json.dumps(verdict, sort_keys=True) + "\n")
    log_event("eval_qa", protocol=protocol, items=len(verdicts), accuracy=accuracy)
    click.echo(f"EM@1: {accuracy:.4f}")


@main.group()
def actions():
    """Encode and decode discrete action tokens."""


@actions.command("encode")
@click.option("--nav", "nav_action", default=None, type=click.Choice([a.value for a in actions_mod.NavAction]))
@click.option("--pose", nargs=3, type=float, default=None)
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--out", "out_path", default=None, type=click.Path())
@click.option("--seed", default=0, type=int, help="Accepted for stage-interface uniformity.")
@pipeline_errors
def actions_encode(nav_action, pose, config_path, out_path, seed):
    """Encode a navigation command or an x/y/rotation pose."""
    del seed
    cfg = actions_mod.load_action_config(config_path)
    if nav_action:
        text = actions_mod.encode_nav(actions_mod.NavAction(nav_action), cfg).rendered
    elif pose:
        x, y, rot = pose
        text = " ".join(t.rendered for t in actions_mod.encode_pose(x, y, rot, cfg))
    else:
        raise click.UsageError("pass --nav or --pose X Y ROT")
    if out_path:
        Path(out_path).write_text(text + "\n", encoding="utf-8")
    click.echo(text)


@actions.command("decode")
@click.option("--tokens", "tokens_text", required=True)
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--out", "out_path", default=None, type=click.Path())
@click.option("--seed", default=0, type=int, help="Accepted for stage-interface uniformity.")
@pipeline_errors
def actions_decode(tokens_text, config_path, out_path, seed):
    """Decode rendered tokens back into a command or pose."""
    del seed
    cfg = actions_mod.load_action_config(config_path)
    tokens = actions_mod.parse_rendered(tokens_text)
    if len(tokens) == 1 and cfg.axis_of(tokens[0].token_id) == "nav":
        text = actions_mod.decode_nav(tokens[0], cfg).value
    elif len(tokens) == 3:
        x, y, rot = actions_mod.decode_pose((tokens[0], tokens[1], tokens[2]), cfg)
        text = f"x={x:.6f} y={y:.6f} rot={rot:.6f}"
    else:
        raise click.UsageError("pass one nav token or exactly three pose tokens")
    if out_path:
        Path(out_path).write_text(text + "\n", encoding="utf-8")
    click.echo(text)


if __name__ == "__main__":
    main()
