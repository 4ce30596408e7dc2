"""Command-line entry points for batch work and for launching the service.

Exit codes: 0 success, 1 runtime failure, 2 usage error. ``--mock --seed N``
makes every subcommand reproducible without network access.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from pathlib import Path

import click

from .errors import StoryEngineError
from .evaluation import diversity_report, judge_narrative
from .expansion import ExpansionParams, expand_backward, expand_forward
from .experiments import (
    ProviderPair,
    load_stubs,
    run_diversity_comparison,
    run_suite,
    table1_strategies,
)
from .graph import EntityGraph
from .llm import MockProvider, Provider
from .mcts import SearchConfig, run_mcts
from .project_io import deserialize_project, serialize_project
from .service import config_from_env, create_app
from .tree import EventTree, ancestor_chain, chains_of_length, max_chain_length, story_order_texts


def provider_options(fn):
    @click.option("--mock", is_flag=True, help="Use the deterministic seeded mock provider.")
    @click.option("--seed", type=int, default=0, show_default=True, help="Mock provider seed.")
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        return fn(*args, **kwargs)

    return wrapper


def _provider(mock: bool, seed: int) -> Provider:
    if mock:
        return MockProvider(seed=seed)
    return config_from_env().provider


def _load_project(path: Path, init_root: str | None):
    if path.exists():
        return deserialize_project(path.read_bytes())
    if init_root:
        return EventTree.new(init_root), EntityGraph.empty([], []), {}
    raise click.UsageError(f"project file {path} does not exist (pass --init-root to create it)")


def _save_project(path: Path, tree, graph, settings) -> None:
    path.write_bytes(serialize_project(tree, graph, settings))


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


@click.group()
def main() -> None:
    """Branching story engine: expansion, search, judging, experiments."""


@main.command()
@click.option("--host", default=lambda: os.environ.get("STORYSEARCH_HOST", "127.0.0.1"), show_default="127.0.0.1")
@click.option("--port", type=int, default=lambda: int(os.environ.get("STORYSEARCH_PORT", "8000")), show_default="8000")
@click.option("--data-dir", type=click.Path(path_type=Path), default=None)
@click.option("--mock-delay", type=float, default=0.0, help="Seconds of simulated latency per mock call.")
@provider_options
def serve(host: str, port: int, data_dir: Path | None, mock_delay: float, mock: bool, seed: int) -> None:
    """Launch the HTTP service."""
    import uvicorn

    from .service import ServiceConfig

    if mock or data_dir is not None:
        base = config_from_env()
        config = ServiceConfig(
            data_dir=data_dir or base.data_dir,
            provider=MockProvider(seed=seed, delay_seconds=mock_delay) if mock else base.provider,
        )
        app = create_app(config)
    else:
        app = create_app()
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.option("--project", "project_path", type=click.Path(path_type=Path), required=True)
@click.option("--node", "node_id", default=None, help="Node to expand from (default: root).")
@click.option("--direction", type=click.Choice(["forward", "backward"]), default="forward")
@click.option("--guide", default=None, help="Optional guide prompt.")
@click.option("--likelihood", type=click.IntRange(1, 5), default=3, show_default=True)
@click.option("--severity", type=click.IntRange(1, 5), default=3, show_default=True)
@click.option("--temperature", type=click.FloatRange(0.0, 2.0), default=1.0, show_default=True)
@click.option("--use-graph", is_flag=True, help="Ground the prompt in the entity graph.")
@click.option("--init-root", default=None, help="Create the project with this root text if missing.")
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Output project path.")
@provider_options
def expand(
    project_path: Path,
    node_id: str | None,
    direction: str,
    guide: str | None,
    likelihood: int,
    severity: int,
    temperature: float,
    use_graph: bool,
    init_root: str | None,
    out: Path | None,
    mock: bool,
    seed: int,
) -> None:
    """Generate and commit one event."""
    try:
        tree, graph, settings = _load_project(project_path, init_root)
        params = ExpansionParams(
            guide_prompt=guide,
            likelihood=likelihood,
            severity=severity,
            temperature=temperature,
            use_entity_graph=use_graph,
        )
        provider = _provider(mock, seed)
        target = node_id or tree.root_id
        if direction == "forward":
            new_id = expand_forward(tree, target, params, graph, provider)
        else:
            new_id = expand_backward(tree, target, params, graph, provider)
        _save_project(out or project_path, tree, graph, settings)
    except StoryEngineError as exc:
        _fail(str(exc))
        return
    click.echo(f"expanded {target} -> {new_id}: {tree.nodes[new_id].text}")


@main.command()
@click.option("--project", "project_path", type=click.Path(path_type=Path), required=True)
@click.option("--node", "node_id", default=None, help="Search scope root (default: tree root).")
@click.option("--scoring-prompt", default="Rate events from 1..10 based on interestingness.")
@click.option("--max-children", type=click.IntRange(min=1), default=3, show_default=True)
@click.option("--iterations", type=click.IntRange(min=1), default=25, show_default=True)
@click.option("--scoring-depth", type=click.IntRange(min=0), default=1, show_default=True)
@click.option("--rollout-depth", type=click.IntRange(min=0), default=1, show_default=True)
@click.option("--exploration-c", type=float, default=None, help="UCB1 exploration constant.")
@click.option("--desired-length", type=click.IntRange(min=1), default=None)
@click.option("--min-chains", type=click.IntRange(min=1), default=None)
@click.option("--init-root", default=None)
@click.option("--out", type=click.Path(path_type=Path), default=None)
@provider_options
def mcts(
    project_path: Path,
    node_id: str | None,
    scoring_prompt: str,
    max_children: int,
    iterations: int,
    scoring_depth: int,
    rollout_depth: int,
    exploration_c: float | None,
    desired_length: int | None,
    min_chains: int | None,
    init_root: str | None,
    out: Path | None,
    mock: bool,
    seed: int,
) -> None:
    """Run the search loop and report the best chain."""
    try:
        tree, graph, settings = _load_project(project_path, init_root)
        kwargs = dict(
            scoring_prompt=scoring_prompt,
            max_children=max_children,
            iterations=iterations,
            scoring_depth=scoring_depth,
            rollout_depth=rollout_depth,
            desired_chain_length=desired_length,
            min_num_chains=min_chains,
        )
        if exploration_c is not None:
            kwargs["exploration_c"] = exploration_c
        config = SearchConfig(**kwargs)
        report = run_mcts(tree, node_id or tree.root_id, config, _provider(mock, seed), graph=graph)
        _save_project(out or project_path, tree, graph, settings)
    except StoryEngineError as exc:
        _fail(str(exc))
        return
    stopped = " (stopped early)" if report.stopped_early else ""
    click.echo(
        f"ran {report.iterations_run} iterations{stopped}; "
        f"best chain has {len(report.best_chain)} events, leaf {report.best_chain.leaf_id}"
    )


@main.command()
@click.option("--project", "project_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--leaf", "leaf_id", default=None, help="Chain leaf (default: deepest chain's leaf).")
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Write the report JSON here.")
@provider_options
def judge(project_path: Path, leaf_id: str | None, out: Path | None, mock: bool, seed: int) -> None:
    """Judge the narrative ending at a leaf on seven 1-10 dimensions."""
    try:
        tree, graph, settings = deserialize_project(project_path.read_bytes())
        if leaf_id is None:
            leaf_id = chains_of_length(tree, max_chain_length(tree))[0].leaf_id
        chain = ancestor_chain(tree, leaf_id)
        prose = "\n\n".join(story_order_texts(tree, chain))
        report = judge_narrative(prose, _provider(mock, seed))
    except StoryEngineError as exc:
        _fail(str(exc))
        return
    if out is not None:
        out.write_text(json.dumps(report.to_document(), indent=2, sort_keys=True) + "\n")
    scores = " ".join(f"{k}={v}" for k, v in report.scores().items())
    click.echo(f"judged chain to {leaf_id}: {scores}")


@main.command()
@click.option("--stubs", "stubs_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--count", type=click.IntRange(min=1), default=20, show_default=True)
@click.option(
    "--strategies",
    type=click.Choice(["table1"]),
    default="table1",
    show_default=True,
    help="Named strategy preset.",
)
@click.option("--out", type=click.Path(path_type=Path), default=Path("suite-out"), show_default=True)
@click.option("--parallel", type=click.IntRange(min=1), default=1, show_default=True)
@provider_options
def suite(
    stubs_path: Path,
    count: int,
    strategies: str,
    out: Path,
    parallel: int,
    mock: bool,
    seed: int,
) -> None:
    """Run the full strategy-comparison experiment and write report files."""
    try:
        stubs = load_stubs(stubs_path, count=count, seed=seed)
        provider = _provider(mock, seed)
        report = run_suite(
            stubs,
            table1_strategies(seed=seed),
            ProviderPair(generator=provider, judge=provider),
            out_dir=out,
            parallel=parallel,
        )
    except StoryEngineError as exc:
        _fail(str(exc))
        return
    ok = sum(1 for c in report.cells if c.ok)
    click.echo(
        f"suite complete: {len(report.strategy_labels)} strategies x {count} stubs, "
        f"{ok}/{len(report.cells)} cells ok, reports in {out}"
    )


@main.command()
@click.option("--project", "project_path", type=click.Path(path_type=Path), default=None)
@click.option("--leaf", "leaf_id", default=None)
@click.option("--compare", is_flag=True, help="Run the search-vs-baseline comparison pipeline.")
@click.option("--stubs", "stubs_path", type=click.Path(path_type=Path), default=None)
@click.option("--runs", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--length", type=click.IntRange(min=2), default=6, show_default=True)
@click.option("--num-children", type=click.IntRange(min=1), default=3, show_default=True)
@click.option("--iterations", type=click.IntRange(min=1), default=60, show_default=True)
@click.option("--scoring-depth", type=click.IntRange(min=0), default=1, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=None)
@provider_options
def diversity(
    project_path: Path | None,
    leaf_id: str | None,
    compare: bool,
    stubs_path: Path | None,
    runs: int,
    length: int,
    num_children: int,
    iterations: int,
    scoring_depth: int,
    out: Path | None,
    mock: bool,
    seed: int,
) -> None:
    """Distinct-n diversity of a project chain, or a repeated comparison run."""
    if compare:
        if stubs_path is None:
            raise click.UsageError("--compare requires --stubs")
        if not mock:
            raise click.UsageError("--compare currently requires --mock (seeded repetitions)")
        try:
            stub = load_stubs(stubs_path, count=1, seed=seed)[0]
            comparison = run_diversity_comparison(
                stub,
                runs=runs,
                target_length=length,
                provider_factory=lambda s: MockProvider(seed=s),
                seed=seed,
                num_children=num_children,
                iterations=iterations,
                scoring_depth=scoring_depth,
            )
        except StoryEngineError as exc:
            _fail(str(exc))
            return
        table = comparison.to_markdown()
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
            (out / "diversity_comparison.md").write_text(table)
        click.echo(table.rstrip("\n"))
        return

    if project_path is None:
        raise click.UsageError("pass --project, or --compare with --stubs")
    try:
        tree, _graph, _settings = deserialize_project(project_path.read_bytes())
        if leaf_id is None:
            leaf_id = chains_of_length(tree, max_chain_length(tree))[0].leaf_id
        chain = ancestor_chain(tree, leaf_id)
        generated = " ".join(chain.texts[1:]) if len(chain) > 1 else chain.texts[0]
        report = diversity_report(generated)
    except StoryEngineError as exc:
        _fail(str(exc))
        return
    values = " ".join(f"distinct-{n}={report.distinct[n]:.4f}" for n in sorted(report.distinct))
    click.echo(f"chain to {leaf_id} ({report.token_count} tokens): {values}")


if __name__ == "__main__":
    main()
