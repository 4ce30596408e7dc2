"""Typed entity/relationship graph used to ground event generation.

Graphs are built by hand or generated by the LLM from an instruction plus
declared type lists, then summarized into plain prompt text.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import (
    IntegrityError,
    InvalidInputError,
    InvalidTypeError,
    NotFoundError,
    ParseError,
    SelfLoopError,
    UpstreamError,
    ValidationError,
)
from .llm import CompletionRequest, Provider, strip_code_fences
from .prompts import load_template, render

GRAPH_TEMPERATURE = 0.2
GRAPH_MAX_TOKENS = 2000
# One repair retry: validation errors are appended to the prompt, then we give up.
REPAIR_RETRIES = 1


@dataclass
class Entity:
    id: str
    label: str
    entity_type: str


@dataclass(frozen=True)
class Relationship:
    source_id: str
    target_id: str
    relationship_type: str


@dataclass
class EntityGraph:
    entity_types: list[str]
    relationship_types: list[str]
    entities: dict[str, Entity] = field(default_factory=dict)
    relationships: list[Relationship] = field(default_factory=list)

    @classmethod
    def empty(cls, entity_types: list[str], relationship_types: list[str]) -> "EntityGraph":
        return cls(entity_types=list(entity_types), relationship_types=list(relationship_types))


def add_entity(graph: EntityGraph, label: str, entity_type: str) -> str:
    """Add one entity; returns its generated id."""
    if not label or not label.strip():
        raise InvalidInputError("entity label must be nonempty")
    if entity_type not in graph.entity_types:
        raise InvalidTypeError(f"entity type {entity_type!r} is not declared")
    n = len(graph.entities) + 1
    entity_id = f"ent{n}"
    while entity_id in graph.entities:
        n += 1
        entity_id = f"ent{n}"
    graph.entities[entity_id] = Entity(id=entity_id, label=label, entity_type=entity_type)
    return entity_id


def add_relationship(
    graph: EntityGraph,
    source_id: str,
    target_id: str,
    relationship_type: str,
    allow_self_loop: bool = False,
) -> None:
    """Link two existing entities; exact duplicates are idempotent no-ops."""
    if relationship_type not in graph.relationship_types:
        raise InvalidTypeError(f"relationship type {relationship_type!r} is not declared")
    for endpoint in (source_id, target_id):
        if endpoint not in graph.entities:
            raise NotFoundError(f"unknown entity id {endpoint!r}")
    if source_id == target_id and not allow_self_loop:
        raise SelfLoopError(f"self-loop on {source_id!r} is not allowed")
    rel = Relationship(source_id=source_id, target_id=target_id, relationship_type=relationship_type)
    if rel not in graph.relationships:
        graph.relationships.append(rel)


def validate_graph(graph: EntityGraph) -> list[str]:
    """Return invariant violations; empty when the graph is sound."""
    problems: list[str] = []
    for entity in graph.entities.values():
        if not entity.label or not entity.label.strip():
            problems.append(f"entity {entity.id!r} has an empty label")
        if entity.entity_type not in graph.entity_types:
            problems.append(f"entity {entity.id!r} has undeclared type {entity.entity_type!r}")
    for rel in graph.relationships:
        if rel.relationship_type not in graph.relationship_types:
            problems.append(f"relationship uses undeclared type {rel.relationship_type!r}")
        for endpoint in (rel.source_id, rel.target_id):
            if endpoint not in graph.entities:
                problems.append(f"relationship endpoint {endpoint!r} does not exist")
        if rel.source_id == rel.target_id:
            problems.append(f"self-loop on {rel.source_id!r} is not allowed")
    return problems


def summarize_for_prompt(graph: EntityGraph) -> str:
    """Deterministic text rendering: one line per entity, one per relationship."""
    entities = sorted(graph.entities.values(), key=lambda e: (e.label, e.id))
    lines = [f"{e.label} ({e.entity_type})" for e in entities]

    def rel_key(rel: Relationship) -> tuple:
        src = graph.entities[rel.source_id]
        tgt = graph.entities[rel.target_id]
        return (src.label, rel.relationship_type, tgt.label, src.id, tgt.id)

    for rel in sorted(graph.relationships, key=rel_key):
        src = graph.entities[rel.source_id]
        tgt = graph.entities[rel.target_id]
        lines.append(f"{src.label} —{rel.relationship_type}→ {tgt.label}")
    return "\n".join(lines)


def graph_to_doc(graph: EntityGraph) -> dict:
    """Graph section of the project file."""
    return {
        "entity_types": list(graph.entity_types),
        "relationship_types": list(graph.relationship_types),
        "entities": [
            {"id": e.id, "label": e.label, "type": e.entity_type}
            for e in sorted(graph.entities.values(), key=lambda e: e.id)
        ],
        "relationships": [
            {"source": r.source_id, "target": r.target_id, "type": r.relationship_type}
            for r in sorted(
                graph.relationships,
                key=lambda r: (r.source_id, r.relationship_type, r.target_id),
            )
        ],
    }


def graph_from_doc(doc: object) -> EntityGraph:
    """Parse and validate the graph section; strict about keys at version 1."""
    graph, problems = _build_graph(doc, strict_keys=True)
    if graph is None:
        raise ParseError("; ".join(problems))
    if problems:
        raise IntegrityError("; ".join(problems))
    return graph


def _build_graph(doc: object, strict_keys: bool) -> tuple[EntityGraph | None, list[str]]:
    """Builder for the project-file graph section.

    Returns (graph, problems); graph is None when the document shape is
    unusable, otherwise problems are invariant violations on a built graph.
    """
    if not isinstance(doc, dict):
        return None, ["graph section must be an object"]
    known = {"entity_types", "relationship_types", "entities", "relationships"}
    if strict_keys:
        unknown = set(doc) - known
        if unknown:
            return None, [f"unknown graph key {k!r}" for k in sorted(unknown)]
    entity_types = doc.get("entity_types")
    relationship_types = doc.get("relationship_types")
    if not isinstance(entity_types, list) or not all(isinstance(t, str) for t in entity_types):
        return None, ["entity_types must be a list of strings"]
    if not isinstance(relationship_types, list) or not all(
        isinstance(t, str) for t in relationship_types
    ):
        return None, ["relationship_types must be a list of strings"]

    graph = EntityGraph.empty(entity_types, relationship_types)
    problems = _fill_from_records(graph, doc.get("entities", []), doc.get("relationships", []))
    if problems is None:
        return None, ["entities and relationships must be arrays"]
    return graph, problems


def _fill_from_records(
    graph: EntityGraph, entities: object, relationships: object
) -> list[str] | None:
    """Populate a typed graph from raw record arrays; returns violations."""
    if not isinstance(entities, list) or not isinstance(relationships, list):
        return None
    problems: list[str] = []
    for item in entities:
        if not isinstance(item, dict) or set(item) != {"id", "label", "type"}:
            problems.append(f"entity record must have exactly id/label/type: {item!r}")
            continue
        entity_id, label, etype = str(item["id"]), str(item["label"]), str(item["type"])
        if entity_id in graph.entities:
            problems.append(f"duplicate entity id {entity_id!r}")
            continue
        graph.entities[entity_id] = Entity(id=entity_id, label=label, entity_type=etype)
    for item in relationships:
        if not isinstance(item, dict) or set(item) != {"source", "target", "type"}:
            problems.append(f"relationship record must have exactly source/target/type: {item!r}")
            continue
        rel = Relationship(
            source_id=str(item["source"]),
            target_id=str(item["target"]),
            relationship_type=str(item["type"]),
        )
        if rel not in graph.relationships:
            graph.relationships.append(rel)

    problems.extend(validate_graph(graph))
    return problems


def generate_graph(
    instruction: str,
    entity_types: list[str],
    relationship_types: list[str],
    provider: Provider,
) -> EntityGraph:
    """Ask the LLM for a graph matching the declared type lists.

    Invalid output triggers one repair retry with the validation errors
    appended to the prompt; a second failure raises ValidationError.
    """
    if not instruction or not instruction.strip():
        raise InvalidInputError("instruction must be nonempty")
    if not entity_types or not relationship_types:
        raise InvalidInputError("both type lists must be nonempty")

    template = load_template("graph_generation")
    feedback = ""
    last_problems: list[str] = []
    for _ in range(REPAIR_RETRIES + 1):
        user_text = render(
            template.user_text,
            {
                "instruction": instruction,
                "entity_types": ", ".join(entity_types),
                "relationship_types": ", ".join(relationship_types),
                "retry_feedback": feedback,
            },
        )
        request = CompletionRequest(
            system_text=template.system_text,
            user_text=user_text,
            temperature=GRAPH_TEMPERATURE,
            model_id=provider.generator_model,
            max_output_tokens=GRAPH_MAX_TOKENS,
        )
        response = provider.complete(request)  # UpstreamError propagates
        try:
            doc = json.loads(strip_code_fences(response))
        except json.JSONDecodeError as exc:
            last_problems = [f"response was not valid JSON: {exc.msg} at position {exc.pos}"]
        else:
            if not isinstance(doc, dict) or set(doc) - {"entities", "relationships"}:
                last_problems = ["output must be an object with only entities and relationships"]
            else:
                graph = EntityGraph.empty(entity_types, relationship_types)
                problems = _fill_from_records(
                    graph, doc.get("entities", []), doc.get("relationships", [])
                )
                if problems == []:
                    return graph
                last_problems = problems if problems else ["entities and relationships must be arrays"]
        feedback = "Your previous output was rejected. Fix these problems:\n" + "\n".join(
            f"- {p}" for p in last_problems
        )
    raise ValidationError(
        "generated graph failed validation after retry: " + "; ".join(last_problems),
        violations=tuple(last_problems),
    )
