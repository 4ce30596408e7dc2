"""Prompt assembly and tree expansion.

Prompt building is pure: the same chain, parameters, prior guesses, and graph
summary always produce the identical bundle, which keeps snapshot tests valid.
Committing happens only after the provider returns, so a failed call leaves
the tree untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidInputError
from .graph import EntityGraph, summarize_for_prompt
from .llm import CompletionRequest, Provider
from .prompts import load_template, render
from .tree import Direction, EventTree, StoryChain, add_event, ancestor_chain, record_prior_guess

EVENT_MAX_TOKENS = 400


@dataclass(frozen=True)
class ExpansionParams:
    """User-facing knobs for one generation call."""

    guide_prompt: str | None = None
    likelihood: int = 3
    severity: int = 3
    temperature: float = 1.0
    use_entity_graph: bool = False

    def __post_init__(self):
        if not 1 <= self.likelihood <= 5:
            raise InvalidInputError(f"likelihood {self.likelihood} outside [1, 5]")
        if not 1 <= self.severity <= 5:
            raise InvalidInputError(f"severity {self.severity} outside [1, 5]")
        if not 0.0 <= self.temperature <= 2.0:
            raise InvalidInputError(f"temperature {self.temperature} outside [0, 2]")


@dataclass(frozen=True)
class PromptBundle:
    system_text: str
    user_text: str
    direction: Direction


def _numbered_context(texts: list[str]) -> str:
    return "\n".join(f"{i + 1}. {text}" for i, text in enumerate(texts))


def _guide_line(params: ExpansionParams) -> str:
    if params.guide_prompt and params.guide_prompt.strip():
        return f"• {params.guide_prompt.strip()}"
    return ""


def _graph_section(graph_summary: str | None) -> str:
    if graph_summary and graph_summary.strip():
        return "Known entities and relationships:\n" + graph_summary.strip()
    return ""


def build_forward_prompt(
    chain: StoryChain,
    params: ExpansionParams,
    prior_guesses: list[str],
    graph_summary: str | None = None,
) -> PromptBundle:
    """Assemble the next-event prompt from the ancestor chain and parameters."""
    if not chain.node_ids:
        raise InvalidInputError("chain must be nonempty")
    avoid = ""
    if prior_guesses:
        avoid = "Avoid repeating these prior candidate events:\n" + "\n".join(
            f"- {g}" for g in prior_guesses
        )
    template = load_template("forward")
    user_text = render(
        template.user_text,
        {
            "story_context": _numbered_context(chain.texts),
            "guide": _guide_line(params),
            "likelihood": str(params.likelihood),
            "severity": str(params.severity),
            "avoid_list": avoid,
            "graph_summary": _graph_section(graph_summary),
        },
    )
    return PromptBundle(template.system_text, user_text, Direction.FORWARD)


def build_backward_prompt(
    chain: StoryChain,
    params: ExpansionParams,
    graph_summary: str | None = None,
) -> PromptBundle:
    """Assemble the precursor-event prompt; mirrors the forward layout."""
    if not chain.node_ids:
        raise InvalidInputError("chain must be nonempty")
    template = load_template("backward")
    user_text = render(
        template.user_text,
        {
            "story_context": _numbered_context(chain.texts),
            "guide": _guide_line(params),
            "likelihood": str(params.likelihood),
            "severity": str(params.severity),
            "graph_summary": _graph_section(graph_summary),
        },
    )
    return PromptBundle(template.system_text, user_text, Direction.BACKWARD)


def _summary_for(params: ExpansionParams, graph: EntityGraph | None) -> str | None:
    if params.use_entity_graph and graph is not None:
        return summarize_for_prompt(graph)
    return None


def generate_forward_text(
    tree: EventTree,
    node_id: str,
    params: ExpansionParams,
    graph: EntityGraph | None,
    provider: Provider,
) -> str:
    """Run one forward generation without committing anything to the tree."""
    chain = ancestor_chain(tree, node_id)
    bundle = build_forward_prompt(
        chain, params, tree.node(node_id).prior_guesses, _summary_for(params, graph)
    )
    request = CompletionRequest(
        system_text=bundle.system_text,
        user_text=bundle.user_text,
        temperature=params.temperature,
        model_id=provider.generator_model,
        max_output_tokens=EVENT_MAX_TOKENS,
    )
    return provider.complete(request)


def expand_forward(
    tree: EventTree,
    node_id: str,
    params: ExpansionParams,
    graph: EntityGraph | None,
    provider: Provider,
) -> str:
    """Generate and commit a forward child; records the text as a prior guess."""
    text = generate_forward_text(tree, node_id, params, graph, provider)
    new_id = add_event(tree, node_id, text, Direction.FORWARD)
    record_prior_guess(tree, node_id, text)
    return new_id


def expand_backward(
    tree: EventTree,
    node_id: str,
    params: ExpansionParams,
    graph: EntityGraph | None,
    provider: Provider,
) -> str:
    """Generate and commit a backward (cause) child of ``node_id``."""
    chain = ancestor_chain(tree, node_id)
    bundle = build_backward_prompt(chain, params, _summary_for(params, graph))
    request = CompletionRequest(
        system_text=bundle.system_text,
        user_text=bundle.user_text,
        temperature=params.temperature,
        model_id=provider.generator_model,
        max_output_tokens=EVENT_MAX_TOKENS,
    )
    text = provider.complete(request)
    return add_event(tree, node_id, text, Direction.BACKWARD)
