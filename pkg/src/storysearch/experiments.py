"""Batch experiment harness: strategy runs, judging, diversity, report files.

A suite crosses story stubs with expansion strategies, grows each story to a
target event count, judges the assembled narrative, measures distinct-n, and
writes aggregate tables plus raw per-cell records. Under the seeded mock the
whole pipeline is byte-deterministic (timestamps live only in the metadata
file).
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import random
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

from .errors import InvalidInputError, IoError, StoryEngineError, StrategyError
from .evaluation import (
    JUDGE_SCORE_KEYS,
    JudgeReport,
    aggregate_reports,
    distinct_n,
    judge_narrative,
)
from .expansion import ExpansionParams, expand_forward
from .llm import Provider
from .mcts import SearchConfig, run_mcts
from .tree import EventTree, StoryChain, ancestor_chain

logger = logging.getLogger(__name__)

DEFAULT_SCORING_PROMPT = "Rate events from 1..10 based on interestingness."
DEFAULT_TARGET_LENGTH = 10
DEFAULT_GENERATION_TEMPERATURE = 1.3
MIN_STUB_CHARS = 200
DIVERSITY_ORDERS = (1, 2, 3, 4)

# Search settings the strategy rows do not name themselves. The exploration
# constant is deliberately far below sqrt(2): strategy runs must reach the
# target chain length within their iteration budget, which needs
# exploitation-heavy descent. Both values are recorded in the suite metadata.
STRATEGY_ROLLOUT_DEPTH = 1
STRATEGY_EXPLORATION_C = 0.01

BASELINE = "baseline"
MCTS = "mcts"


@dataclass(frozen=True)
class StrategyConfig:
    kind: str
    num_children: int
    iterations: int | None = None
    scoring_depth: int | None = None
    target_length: int = DEFAULT_TARGET_LENGTH
    generation_temperature: float = DEFAULT_GENERATION_TEMPERATURE
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (BASELINE, MCTS):
            raise InvalidInputError(f"unknown strategy kind {self.kind!r}")
        if self.num_children < 1:
            raise InvalidInputError("num_children must be >= 1")
        if self.target_length < 1:
            raise InvalidInputError("target_length must be >= 1")
        if self.kind == MCTS and (self.iterations is None or self.scoring_depth is None):
            raise InvalidInputError("mcts strategies need iterations and scoring_depth")

    @property
    def label(self) -> str:
        if self.kind == BASELINE:
            return f"baseline (num_children={self.num_children})"
        return (
            f"mcts (num_children={self.num_children}, iterations={self.iterations}, "
            f"scoring_depth={self.scoring_depth})"
        )

    @property
    def slug(self) -> str:
        return re.sub(r"[^a-z0-9]+", "_", self.label.lower()).strip("_")


def table1_strategies(seed: int = 0) -> list[StrategyConfig]:
    """The seven standard rows: three baselines and four search configurations."""
    return [
        StrategyConfig(kind=BASELINE, num_children=1, seed=seed),
        StrategyConfig(kind=BASELINE, num_children=3, seed=seed),
        StrategyConfig(kind=BASELINE, num_children=6, seed=seed),
        StrategyConfig(kind=MCTS, num_children=3, iterations=60, scoring_depth=1, seed=seed),
        StrategyConfig(kind=MCTS, num_children=3, iterations=60, scoring_depth=3, seed=seed),
        StrategyConfig(kind=MCTS, num_children=6, iterations=100, scoring_depth=1, seed=seed),
        StrategyConfig(kind=MCTS, num_children=6, iterations=100, scoring_depth=3, seed=seed),
    ]


def load_stubs(path: str | Path, count: int, seed: int) -> list[str]:
    """Deterministic seeded sample of story stubs from a corpus file.

    A corpus file holds records separated by blank-line runs; a directory is
    treated as one record per file. A stub is a record's leading paragraph of
    at least 200 characters, whitespace-collapsed.
    """
    if count < 1:
        raise InvalidInputError("count must be >= 1")
    path = Path(path)
    try:
        if path.is_dir():
            blocks = [p.read_text("utf-8") for p in sorted(path.iterdir()) if p.is_file()]
        else:
            blocks = re.split(r"\n\s*\n", path.read_text("utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read corpus at {path}: {exc}") from exc

    candidates = []
    for block in blocks:
        paragraph = re.split(r"\n\s*\n", block.strip())[0] if block.strip() else ""
        stub = " ".join(paragraph.split())
        if len(stub) >= MIN_STUB_CHARS:
            candidates.append(stub)
    if count > len(candidates):
        raise InvalidInputError(
            f"corpus has only {len(candidates)} usable stubs, {count} requested"
        )
    return random.Random(seed).sample(candidates, count)


def render_chain(chain: StoryChain) -> str:
    """Assembled narrative: stub first, events joined by blank lines."""
    return "\n\n".join(chain.texts)


def run_strategy(stub: str, strategy: StrategyConfig, provider: Provider) -> StoryChain:
    """Grow one story from ``stub`` to the strategy's target length.

    Baselines expand ``num_children`` forward children at every step and walk
    to a seeded-random child. MCTS strategies run the search with early
    stopping at the target length and return its best chain.
    """
    tree = EventTree.new(stub)
    params = ExpansionParams(temperature=strategy.generation_temperature)
    try:
        if strategy.kind == BASELINE:
            rng = random.Random(strategy.seed)
            current = tree.root_id
            for _ in range(strategy.target_length - 1):
                children = [
                    expand_forward(tree, current, params, None, provider)
                    for _ in range(strategy.num_children)
                ]
                current = rng.choice(children)
            return ancestor_chain(tree, current)

        config = SearchConfig(
            scoring_prompt=DEFAULT_SCORING_PROMPT,
            max_children=strategy.num_children,
            iterations=strategy.iterations,
            scoring_depth=strategy.scoring_depth,
            rollout_depth=STRATEGY_ROLLOUT_DEPTH,
            exploration_c=STRATEGY_EXPLORATION_C,
            desired_chain_length=strategy.target_length,
            min_num_chains=1,
            expansion_params=params,
        )
        report = run_mcts(tree, tree.root_id, config, provider)
        if report.incomplete:
            raise StrategyError(
                f"search exceeded its failure budget for {strategy.label!r}",
                partial=report.score_trace,
            )
        # Every judged story must have exactly target_length events, so when
        # the iteration budget leaves the best chain short, finish it with
        # plain forward expansion from its leaf.
        chain = report.best_chain
        while len(chain) < strategy.target_length:
            new_id = expand_forward(tree, chain.leaf_id, params, None, provider)
            chain = ancestor_chain(tree, new_id)
        return chain
    except StrategyError:
        raise
    except StoryEngineError as exc:
        raise StrategyError(f"strategy {strategy.label!r} failed: {exc}") from exc


@dataclass(frozen=True)
class ProviderPair:
    generator: Provider
    judge: Provider


@dataclass
class CellResult:
    stub_index: int
    strategy_label: str
    seed: int
    chain_texts: list[str] = field(default_factory=list)
    judge_document: dict | None = None
    diversity: dict[int, float] = field(default_factory=dict)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class SuiteReport:
    strategy_labels: list[str]
    judge_means: dict[str, dict[str, float]]
    judge_stddevs: dict[str, dict[str, float]]
    diversity_means: dict[str, dict[int, float]]
    diversity_stddevs: dict[str, dict[int, float]]
    cells: list[CellResult]
    metadata: dict


def _cell_seed(strategy: StrategyConfig, stub_index: int) -> int:
    return strategy.seed * 1_000_003 + stub_index


def _run_cell(
    stub_index: int, stub: str, strategy: StrategyConfig, providers: ProviderPair
) -> CellResult:
    seed = _cell_seed(strategy, stub_index)
    cell = CellResult(stub_index=stub_index, strategy_label=strategy.label, seed=seed)
    try:
        chain = run_strategy(stub, replace(strategy, seed=seed), providers.generator)
        cell.chain_texts = list(chain.texts)
        report = judge_narrative(render_chain(chain), providers.judge)
        cell.judge_document = report.to_document()
        generated = " ".join(chain.texts[1:])  # diversity excludes the stub
        cell.diversity = {n: distinct_n(generated, n) for n in DIVERSITY_ORDERS}
    except StoryEngineError as exc:
        logger.warning("cell (%s, stub %d) failed: %s", strategy.label, stub_index, exc)
        cell.error = str(exc)
    return cell


def run_suite(
    stubs: list[str],
    strategies: list[StrategyConfig],
    providers: ProviderPair,
    out_dir: str | Path | None = None,
    parallel: int = 1,
) -> SuiteReport:
    """Run every (stub, strategy) cell, aggregate per strategy, write reports.

    Individual cell failures are recorded and skipped; the suite itself fails
    only when more than a quarter of all cells failed.
    """
    if not stubs or not strategies:
        raise InvalidInputError("stubs and strategies must be nonempty")
    jobs = [
        (stub_index, stub, strategy)
        for stub_index, stub in enumerate(stubs)
        for strategy in strategies
    ]
    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            cells = list(
                pool.map(lambda job: _run_cell(job[0], job[1], job[2], providers), jobs)
            )
    else:
        cells = [_run_cell(*job, providers) for job in jobs]

    failed = [c for c in cells if not c.ok]
    if len(failed) > 0.25 * len(cells):
        raise StrategyError(
            f"{len(failed)} of {len(cells)} suite cells failed", partial=cells
        )

    judge_means: dict[str, dict[str, float]] = {}
    judge_stddevs: dict[str, dict[str, float]] = {}
    diversity_means: dict[str, dict[int, float]] = {}
    diversity_stddevs: dict[str, dict[int, float]] = {}
    for strategy in strategies:
        ok_cells = [c for c in cells if c.strategy_label == strategy.label and c.ok]
        if not ok_cells:
            # every cell of this strategy failed (but the suite-wide budget held)
            judge_means[strategy.label] = {k: float("nan") for k in JUDGE_SCORE_KEYS}
            judge_stddevs[strategy.label] = {k: float("nan") for k in JUDGE_SCORE_KEYS}
            diversity_means[strategy.label] = {n: float("nan") for n in DIVERSITY_ORDERS}
            diversity_stddevs[strategy.label] = {n: float("nan") for n in DIVERSITY_ORDERS}
            continue
        reports = [JudgeReport.from_document(c.judge_document) for c in ok_cells]
        aggregate = aggregate_reports(reports)
        judge_means[strategy.label] = aggregate.means
        judge_stddevs[strategy.label] = aggregate.stddevs
        diversity_means[strategy.label] = {
            n: _mean([c.diversity[n] for c in ok_cells]) for n in DIVERSITY_ORDERS
        }
        diversity_stddevs[strategy.label] = {
            n: _stddev([c.diversity[n] for c in ok_cells]) for n in DIVERSITY_ORDERS
        }

    report = SuiteReport(
        strategy_labels=[s.label for s in strategies],
        judge_means=judge_means,
        judge_stddevs=judge_stddevs,
        diversity_means=diversity_means,
        diversity_stddevs=diversity_stddevs,
        cells=cells,
        metadata={
            "stub_count": len(stubs),
            "stub_ids": [hashlib.sha256(s.encode("utf-8")).hexdigest()[:12] for s in stubs],
            "strategies": [s.label for s in strategies],
            "seeds": sorted({c.seed for c in cells}),
            "generator_model": providers.generator.generator_model,
            "judge_model": providers.judge.judge_model,
            "rollout_depth": STRATEGY_ROLLOUT_DEPTH,
            "exploration_c": STRATEGY_EXPLORATION_C,
            "early_stopping": {"min_num_chains": 1},
            "diversity_excludes_stub": True,
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        },
    )
    if out_dir is not None:
        write_suite_reports(report, Path(out_dir))
    return report


def _mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def _stddev(values: list[float]) -> float:
    if len(values) < 2:
        return 0.0
    mean = _mean(values)
    return (sum((v - mean) ** 2 for v in values) / (len(values) - 1)) ** 0.5


def write_suite_reports(report: SuiteReport, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)

    with (out_dir / "suite_report.csv").open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["strategy", "dimension", "mean", "stddev"])
        for label in report.strategy_labels:
            for key in JUDGE_SCORE_KEYS:
                writer.writerow(
                    [
                        label,
                        key,
                        f"{report.judge_means[label][key]:.4f}",
                        f"{report.judge_stddevs[label][key]:.4f}",
                    ]
                )

    headers = ["Strategy", *(k.replace("_", " ").title() for k in JUDGE_SCORE_KEYS)]
    lines = ["| " + " | ".join(headers) + " |", "|" + "---|" * len(headers)]
    for label in report.strategy_labels:
        row = [label] + [f"{report.judge_means[label][k]:.2f}" for k in JUDGE_SCORE_KEYS]
        lines.append("| " + " | ".join(row) + " |")
    (out_dir / "suite_report.md").write_text("\n".join(lines) + "\n", encoding="utf-8")

    with (out_dir / "diversity_report.csv").open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["strategy", "n", "mean", "stddev"])
        for label in report.strategy_labels:
            for n in DIVERSITY_ORDERS:
                writer.writerow(
                    [
                        label,
                        n,
                        f"{report.diversity_means[label][n]:.4f}",
                        f"{report.diversity_stddevs[label][n]:.4f}",
                    ]
                )

    cells_dir = out_dir / "cells"
    cells_dir.mkdir(exist_ok=True)
    for cell in report.cells:
        slug = re.sub(r"[^a-z0-9]+", "_", cell.strategy_label.lower()).strip("_")
        payload = {
            "stub_index": cell.stub_index,
            "strategy": cell.strategy_label,
            "seed": cell.seed,
            "chain_texts": cell.chain_texts,
            "judge_document": cell.judge_document,
            "diversity": {str(n): v for n, v in cell.diversity.items()},
            "error": cell.error,
        }
        (cells_dir / f"cell_{cell.stub_index:03d}_{slug}.json").write_text(
            json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    (out_dir / "run_metadata.json").write_text(
        json.dumps(report.metadata, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


@dataclass
class DiversityComparison:
    """Per-n distinct-n means and deviations for search vs baseline runs."""

    runs: int
    target_length: int
    rows: list[dict]

    def to_markdown(self) -> str:
        lines = [
            "| n-grams | MCTS avg | Baseline avg | Difference |",
            "|---|---|---|---|",
        ]
        for row in self.rows:
            lines.append(
                f"| {row['n']}-grams | {row['mcts_mean']:.4f} (±{row['mcts_stddev']:.4f}) "
                f"| {row['baseline_mean']:.4f} (±{row['baseline_stddev']:.4f}) "
                f"| {row['difference']:+.4f} |"
            )
        return "\n".join(lines) + "\n"


def run_diversity_comparison(
    stub: str,
    runs: int,
    target_length: int,
    provider_factory: Callable[[int], Provider],
    seed: int = 0,
    num_children: int = 3,
    iterations: int = 60,
    scoring_depth: int = 1,
) -> DiversityComparison:
    """Repeat search and baseline generation ``runs`` times and compare distinct-n.

    Each repetition gets a fresh provider from ``provider_factory`` so mock
    runs actually vary; a live factory can return the same client every time.
    """
    if runs < 1:
        raise InvalidInputError("runs must be >= 1")
    mcts_values: dict[int, list[float]] = {n: [] for n in DIVERSITY_ORDERS}
    baseline_values: dict[int, list[float]] = {n: [] for n in DIVERSITY_ORDERS}
    for repetition in range(runs):
        rep_seed = seed * 7_919 + repetition
        provider = provider_factory(rep_seed)
        mcts_chain = run_strategy(
            stub,
            StrategyConfig(
                kind=MCTS,
                num_children=num_children,
                iterations=iterations,
                scoring_depth=scoring_depth,
                target_length=target_length,
                seed=rep_seed,
            ),
            provider,
        )
        baseline_chain = run_strategy(
            stub,
            StrategyConfig(
                kind=BASELINE,
                num_children=num_children,
                target_length=target_length,
                seed=rep_seed,
            ),
            provider,
        )
        for n in DIVERSITY_ORDERS:
            mcts_values[n].append(distinct_n(" ".join(mcts_chain.texts[1:]), n))
            baseline_values[n].append(distinct_n(" ".join(baseline_chain.texts[1:]), n))

    rows = []
    for n in DIVERSITY_ORDERS:
        mcts_mean = _mean(mcts_values[n])
        baseline_mean = _mean(baseline_values[n])
        rows.append(
            {
                "n": n,
                "mcts_mean": mcts_mean,
                "mcts_stddev": _stddev(mcts_values[n]),
                "baseline_mean": baseline_mean,
                "baseline_stddev": _stddev(baseline_values[n]),
                "difference": mcts_mean - baseline_mean,
            }
        )
    return DiversityComparison(runs=runs, target_length=target_length, rows=rows)
