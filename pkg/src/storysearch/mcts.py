"""Autonomous branch discovery over the event tree.

The loop is the classic four phases. Selection walks the committed tree by
UCB1 until it reaches a node that still has room for children. Expansion
commits exactly one new forward event there. Simulation grows a short chain
of ephemeral look-ahead events under the new node, has the LLM score the
mini-chain as one integer in 1..10, then discards every ephemeral node.
Backpropagation adds the normalized score to every node on the committed
path. Early stopping halts the loop once enough root-to-leaf chains of the
desired length exist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

from .errors import InvalidInputError, UpstreamError
from .expansion import ExpansionParams, expand_forward, generate_forward_text
from .graph import EntityGraph
from .llm import CompletionRequest, Provider, complete_integer
from .prompts import load_template, render
from .tree import (
    EventTree,
    StoryChain,
    add_event,
    ancestor_chain,
    chains_of_length,
    committed_children,
    delete_subtree,
    max_chain_length,
)

DEFAULT_EXPLORATION_C = math.sqrt(2)
SCORING_TEMPERATURE = 0.0
SCORING_ATTEMPTS = 2
SCORE_MAX_TOKENS = 8
SCORE_LOW, SCORE_HIGH = 1, 10

ProgressObserver = Callable[[dict], None]


@dataclass(frozen=True)
class SearchConfig:
    scoring_prompt: str
    max_children: int = 3
    iterations: int = 25
    scoring_depth: int = 1
    rollout_depth: int = 1
    exploration_c: float = DEFAULT_EXPLORATION_C
    desired_chain_length: int | None = None
    min_num_chains: int | None = None
    expansion_params: ExpansionParams = field(default_factory=ExpansionParams)
    domain_constraints: str | None = None
    failure_budget: int = 10

    def __post_init__(self):
        if not self.scoring_prompt.strip():
            raise InvalidInputError("scoring_prompt must be nonempty")
        if self.max_children < 1:
            raise InvalidInputError("max_children must be >= 1")
        if self.iterations < 1:
            raise InvalidInputError("iterations must be >= 1")
        if self.scoring_depth < 0 or self.rollout_depth < 0:
            raise InvalidInputError("scoring_depth and rollout_depth must be >= 0")
        if self.exploration_c <= 0:
            raise InvalidInputError("exploration_c must be positive")
        if (self.desired_chain_length is None) != (self.min_num_chains is None):
            raise InvalidInputError(
                "desired_chain_length and min_num_chains must be set together"
            )
        if self.desired_chain_length is not None and self.desired_chain_length < 1:
            raise InvalidInputError("desired_chain_length must be >= 1")
        if self.min_num_chains is not None and self.min_num_chains < 1:
            raise InvalidInputError("min_num_chains must be >= 1")

    @property
    def early_stopping(self) -> bool:
        return self.desired_chain_length is not None


@dataclass
class NodeStats:
    visits: int = 0
    value_sum: float = 0.0

    @property
    def mean_value(self) -> float:
        return self.value_sum / self.visits if self.visits else 0.0


_UNVISITED = NodeStats()


class SearchStats:
    """Per-node visit/value bookkeeping for one search."""

    def __init__(self):
        self.nodes: dict[str, NodeStats] = {}

    def for_node(self, node_id: str) -> NodeStats:
        if node_id not in self.nodes:
            self.nodes[node_id] = NodeStats()
        return self.nodes[node_id]

    def read(self, node_id: str) -> NodeStats:
        """Read-only view; never inserts an entry for an untouched node."""
        return self.nodes.get(node_id, _UNVISITED)

    def mean_value(self, node_id: str) -> float:
        return self.read(node_id).mean_value

    def snapshot(self) -> dict[str, NodeStats]:
        return {nid: replace(s) for nid, s in self.nodes.items()}


@dataclass(frozen=True)
class ScoreTraceEntry:
    iteration: int
    node_id: str
    raw_score: int
    fallback: bool = False


@dataclass(frozen=True)
class SimulationResult:
    score: float
    raw_score: int
    fallback: bool


@dataclass
class SearchReport:
    iterations_run: int
    stopped_early: bool
    best_chain: StoryChain
    stats: dict[str, NodeStats]
    score_trace: list[ScoreTraceEntry]
    incomplete: bool = False
    cancelled: bool = False


def ucb1(child: NodeStats, parent_visits: int, c: float) -> float:
    """Mean value plus the exploration bonus; unvisited children rank first."""
    if child.visits == 0:
        return math.inf
    return child.mean_value + c * math.sqrt(math.log(parent_visits) / child.visits)


def select(tree: EventTree, stats: SearchStats, root_scope: str, config: SearchConfig) -> str:
    """Walk from ``root_scope`` by argmax UCB1 to a node that can take a child.

    Stops at a leaf or at the first node with fewer than max_children
    committed children; ties break toward the earliest-created child.
    """
    node_id = tree.node(root_scope).id
    while True:
        kids = committed_children(tree, node_id)
        if not kids or len(kids) < config.max_children:
            return node_id
        parent_visits = max(1, stats.read(node_id).visits)
        node_id = max(
            kids,
            key=lambda k: (
                ucb1(stats.read(k), parent_visits, config.exploration_c),
                -tree.nodes[k].created_seq,
            ),
        )


def _scoring_request(
    tree: EventTree, node_id: str, config: SearchConfig, provider: Provider, rollout_texts: list[str]
) -> CompletionRequest:
    chain = ancestor_chain(tree, node_id)
    ancestors = [
        text
        for nid, text in zip(chain.node_ids[:-1], chain.texts[:-1])
        if not tree.nodes[nid].ephemeral
    ]
    context = ancestors[-config.scoring_depth :] if config.scoring_depth > 0 else []
    mini_chain = context + [tree.node(node_id).text] + rollout_texts
    template = load_template("scoring")
    user_text = render(
        template.user_text,
        {
            "user_criteria": config.scoring_prompt,
            "domain_constraints_line": (config.domain_constraints or "").strip(),
            "event_text": "\n".join(mini_chain),
        },
    )
    return CompletionRequest(
        system_text=template.system_text,
        user_text=user_text,
        temperature=SCORING_TEMPERATURE,
        model_id=provider.generator_model,
        max_output_tokens=SCORE_MAX_TOKENS,
    )


def simulate(
    tree: EventTree,
    node_id: str,
    config: SearchConfig,
    provider: Provider,
    graph: EntityGraph | None = None,
) -> SimulationResult:
    """Score ``node_id`` after an ephemeral look-ahead of ``rollout_depth`` events.

    Ephemeral nodes never touch prior guesses and are deleted before this
    returns, even on error. Provider failure is absorbed as the pessimal
    score so the search loop keeps its iteration count.
    """
    tree.node(node_id)
    first_ephemeral: str | None = None
    try:
        tip = node_id
        rollout_texts: list[str] = []
        for _ in range(config.rollout_depth):
            text = generate_forward_text(tree, tip, config.expansion_params, graph, provider)
            tip = add_event(tree, tip, text, "forward", ephemeral=True)
            if first_ephemeral is None:
                first_ephemeral = tip
            rollout_texts.append(text)
        request = _scoring_request(tree, node_id, config, provider, rollout_texts)
        reply = complete_integer(provider, request, SCORE_LOW, SCORE_HIGH, attempts=SCORING_ATTEMPTS)
        return SimulationResult(
            score=reply.value / 10.0, raw_score=reply.value, fallback=reply.fallback
        )
    except UpstreamError:
        return SimulationResult(score=SCORE_LOW / 10.0, raw_score=SCORE_LOW, fallback=True)
    finally:
        if first_ephemeral is not None and first_ephemeral in tree.nodes:
            delete_subtree(tree, first_ephemeral)


def backpropagate(stats: SearchStats, path: list[str], score: float) -> None:
    """Add one visit and the score to every node on the root-to-node path."""
    for node_id in path:
        node_stats = stats.for_node(node_id)
        node_stats.visits += 1
        node_stats.value_sum += score


def _enough_chains(tree: EventTree, config: SearchConfig) -> bool:
    if not config.early_stopping:
        return False
    return len(chains_of_length(tree, config.desired_chain_length)) >= config.min_num_chains


def best_chain(tree: EventTree, stats: SearchStats, config: SearchConfig) -> StoryChain:
    """Highest mean-of-mean-values chain at the target (or deepest) length."""
    chains: list[StoryChain] = []
    if config.desired_chain_length is not None:
        chains = chains_of_length(tree, config.desired_chain_length)
    if not chains:
        chains = chains_of_length(tree, max_chain_length(tree))

    def key(chain: StoryChain) -> tuple[float, int]:
        mean = sum(stats.mean_value(nid) for nid in chain.node_ids) / len(chain.node_ids)
        return (mean, -tree.nodes[chain.leaf_id].created_seq)

    return max(chains, key=key)


def run_mcts(
    tree: EventTree,
    root_scope: str,
    config: SearchConfig,
    provider: Provider,
    graph: EntityGraph | None = None,
    observer: ProgressObserver | None = None,
    cancel: Callable[[], bool] | None = None,
) -> SearchReport:
    """Run the search loop; returns the report with per-node stats and trace.

    ``observer`` receives one record per phase; ``cancel`` is polled between
    phases so a stop request takes effect within one iteration boundary.
    """
    tree.node(root_scope)
    stats = SearchStats()
    trace: list[ScoreTraceEntry] = []
    emit = observer or (lambda record: None)
    cancelled = False
    stopped_early = False
    incomplete = False
    failures = 0
    iterations_run = 0

    def is_cancelled() -> bool:
        return bool(cancel and cancel())

    for iteration in range(1, config.iterations + 1):
        if is_cancelled():
            cancelled = True
            break
        selected = select(tree, stats, root_scope, config)
        emit({"iteration": iteration, "phase": "selected", "node_id": selected})
        if is_cancelled():
            cancelled = True
            break

        start = selected
        if len(committed_children(tree, selected)) < config.max_children:
            try:
                start = expand_forward(tree, selected, config.expansion_params, graph, provider)
            except UpstreamError:
                failures += 1
                if failures > config.failure_budget:
                    incomplete = True
                    break
                continue
            emit({"iteration": iteration, "phase": "expanded", "node_id": start})
        if is_cancelled():
            cancelled = True
            break

        result = simulate(tree, start, config, provider, graph)
        if result.fallback:
            failures += 1
        emit(
            {
                "iteration": iteration,
                "phase": "scored",
                "node_id": start,
                "raw_score": result.raw_score,
            }
        )
        trace.append(
            ScoreTraceEntry(
                iteration=iteration,
                node_id=start,
                raw_score=result.raw_score,
                fallback=result.fallback,
            )
        )

        chain = ancestor_chain(tree, start)
        path = chain.node_ids[chain.node_ids.index(root_scope) :]
        backpropagate(stats, path, result.score)
        iterations_run += 1
        emit(
            {
                "iteration": iteration,
                "phase": "backpropagated",
                "node_id": start,
                "raw_score": result.raw_score,
            }
        )

        if failures > config.failure_budget:
            incomplete = True
            break
        if _enough_chains(tree, config):
            stopped_early = True
            emit({"iteration": iteration, "phase": "stopped", "node_id": start})
            break

    return SearchReport(
        iterations_run=iterations_run,
        stopped_early=stopped_early,
        best_chain=best_chain(tree, stats, config),
        stats=stats.snapshot(),
        score_trace=trace,
        incomplete=incomplete,
        cancelled=cancelled,
    )
