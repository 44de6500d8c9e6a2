"""Diversity-enhancing subgraph sampling.

Large scenes are subsampled at several rates before prompting so the
language model does not keep attending to the same salient objects. The
rate sweep depends on the scene's node count via a bracket table; each rate
is run under four derived seeds.

The preserved-node count for rate r over N nodes is ``max(1, floor(r * N))``
and node selection is uniform without replacement under a SplitMix64 stream,
so a (graph, rate, seed) triple maps to exactly one subgraph everywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple

from .rng import SplitMix64
from .scene_graph import SceneGraph

SEEDS_PER_RATE = 4

# Bracket rows: (lowest node count, highest node count or None for open end).
# Brackets partition [10, inf); scenes below 10 nodes are never subsampled.
DEFAULT_RATE_TABLE: Tuple[Tuple[int, int | None, Tuple[float, ...]], ...] = (
    (10, 19, (0.8, 0.9)),
    (20, 29, (0.7, 0.8, 0.9)),
    (30, 39, (0.6, 0.7, 0.8, 0.9)),
    (40, 49, (0.6, 0.7, 0.8, 0.9)),
    (50, 59, (0.5, 0.6, 0.7, 0.8, 0.9)),
    (60, 70, (0.5, 0.6, 0.7, 0.8, 0.9)),
    (71, None, (0.4, 0.5, 0.6, 0.7, 0.8, 0.9)),
)


@dataclass(frozen=True)
class SamplingPolicy:
    """Rate table plus the base seed for the four-seed sweep."""

    rate_table: Tuple[Tuple[int, int | None, Tuple[float, ...]], ...] = DEFAULT_RATE_TABLE
    seed: int = 0

    def __post_init__(self):
        prev_hi = 9
        for lo, hi, rates in self.rate_table:
            if lo != prev_hi + 1:
                raise ValueError(
                    f"rate table brackets must partition [10, inf); gap before {lo}"
                )
            if hi is not None and hi < lo:
                raise ValueError(f"bracket [{lo}, {hi}] is empty")
            if not rates or any(not (0.0 < r <= 1.0) for r in rates):
                raise ValueError(f"bracket [{lo}, {hi}] has rates outside (0, 1]")
            prev_hi = hi if hi is not None else None
            if prev_hi is None and (lo, hi, rates) != self.rate_table[-1]:
                raise ValueError("only the last bracket may be open-ended")
        if prev_hi is not None:
            raise ValueError("last bracket must be open-ended")


def policy_from_file(path: str | Path, seed: int = 0) -> SamplingPolicy:
    """Load a policy override; JSON or TOML depending on the file suffix.

    Expected shape: ``{"brackets": [{"min": 10, "max": 19, "rates": [0.8, 0.9]},
    ...]}`` with ``max`` omitted or null on the final open bracket.
    """
    p = Path(path)
    if p.suffix == ".toml":
        try:
            import tomllib  # Python >= 3.11
        except ModuleNotFoundError:
            import tomli as tomllib
        data = tomllib.loads(p.read_text(encoding="utf-8"))
    else:
        data = json.loads(p.read_text(encoding="utf-8"))
    table = tuple(
        (row["min"], row.get("max"), tuple(row["rates"])) for row in data["brackets"]
    )
    return SamplingPolicy(rate_table=table, seed=seed)


def rates_for(policy: SamplingPolicy, node_count: int) -> List[float]:
    """The rate sweep for the bracket containing node_count.

    Counts below the table's first bracket get [1.0]: small scenes are kept
    whole.
    """
    if node_count < 1:
        raise ValueError(f"node_count must be positive, got {node_count}")
    first_lo = policy.rate_table[0][0]
    if node_count < first_lo:
        return [1.0]
    for lo, hi, rates in policy.rate_table:
        if node_count >= lo and (hi is None or node_count <= hi):
            return list(rates)
    raise AssertionError("rate table does not cover node count")  # unreachable


def preserved_count(node_count: int, rate: float) -> int:
    return max(1, int(rate * node_count))


def sample_subgraph(graph: SceneGraph, rate: float, seed: int) -> SceneGraph:
    """Keep a uniform random node subset and the relations it closes over.

    Selection: Fisher-Yates shuffle of node positions under
    SplitMix64(seed), take the first k, keep the graph's original node
    order. rate=1.0 therefore returns a graph identical to the input.
    """
    if not (0.0 < rate <= 1.0):
        raise ValueError(f"rate must be in (0, 1], got {rate}")
    n = len(graph.nodes)
    k = preserved_count(n, rate)
    positions = list(range(n))
    SplitMix64(seed).shuffle(positions)
    keep_positions = sorted(positions[:k])
    kept_nodes = tuple(graph.nodes[i] for i in keep_positions)
    kept_ids = {node.id for node in kept_nodes}
    kept_relations = tuple(
        r
        for r in graph.relations
        if r.subject_id in kept_ids and r.object_id in kept_ids
    )
    return SceneGraph(
        scene_id=graph.scene_id,
        nodes=kept_nodes,
        relations=kept_relations,
        room_type=graph.room_type,
    )


def sweep_plan(graph: SceneGraph, policy: SamplingPolicy) -> List[Tuple[float, int]]:
    """(rate, derived seed) pairs in sweep order; seeds are policy.seed + 0..3."""
    return [
        (rate, policy.seed + k)
        for rate in rates_for(policy, len(graph.nodes))
        for k in range(SEEDS_PER_RATE)
    ]


def sweep(graph: SceneGraph, policy: SamplingPolicy) -> List[SceneGraph]:
    """One subgraph per (rate, derived seed) pair of sweep_plan."""
    return [sample_subgraph(graph, rate, seed) for rate, seed in sweep_plan(graph, policy)]


def closure_holds(graph: SceneGraph) -> bool:
    """Brute-force relation-closure check, used as the test oracle."""
    ids = {n.id for n in graph.nodes}
    return all(r.subject_id in ids and r.object_id in ids for r in graph.relations)


def is_node_subset(sub: SceneGraph, full: SceneGraph) -> bool:
    return set(sub.nodes).issubset(set(full.nodes))
