"""Project file format: canonical UTF-8 JSON, version 1, strict about keys.

A project bundles the event tree, the entity graph, and a free-form settings
document. Canonical serialization (sorted keys, nodes in creation order) makes
re-serialization byte-stable, so round-trips are testable exactly.
"""

from __future__ import annotations

import json

from .errors import IntegrityError, ParseError
from .graph import EntityGraph, graph_from_doc, graph_to_doc, validate_graph
from .tree import Direction, EventNode, EventTree, validate_tree

PROJECT_VERSION = 1

_TOP_KEYS = {"version", "tree", "graph", "settings"}
_TREE_KEYS = {"root_id", "nodes"}
_NODE_KEYS = {"id", "text", "direction", "parent_id", "children", "seq", "prior_guesses"}


def serialize_project(tree: EventTree, graph: EntityGraph, settings: dict) -> bytes:
    """Canonical project bytes; refuses trees that violate invariants."""
    problems = validate_tree(tree) + validate_graph(graph)
    problems.extend(
        f"ephemeral node {n.id!r} cannot be persisted"
        for n in tree.nodes.values()
        if n.ephemeral
    )
    if problems:
        raise IntegrityError("; ".join(problems))
    if not isinstance(settings, dict):
        raise IntegrityError("settings must be a JSON object")

    nodes = sorted(tree.nodes.values(), key=lambda n: n.created_seq)
    doc = {
        "version": PROJECT_VERSION,
        "tree": {
            "root_id": tree.root_id,
            "nodes": [
                {
                    "id": n.id,
                    "text": n.text,
                    "direction": n.direction.value,
                    "parent_id": n.parent_id,
                    "children": list(n.child_ids),
                    "seq": n.created_seq,
                    "prior_guesses": list(n.prior_guesses),
                }
                for n in nodes
            ],
        },
        "graph": graph_to_doc(graph),
        "settings": settings,
    }
    return (json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True) + "\n").encode("utf-8")


def deserialize_project(data: bytes | str) -> tuple[EventTree, EntityGraph, dict]:
    """Parse project bytes back into live structures, verifying every invariant."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})", position=exc.pos)

    if not isinstance(doc, dict):
        raise ParseError("project document must be a JSON object")
    _check_keys(doc, _TOP_KEYS, "project")
    if doc["version"] != PROJECT_VERSION:
        raise ParseError(f"unsupported project version {doc['version']!r}")

    tree = _tree_from_doc(doc["tree"])
    graph = graph_from_doc(doc["graph"])
    settings = doc["settings"]
    if not isinstance(settings, dict):
        raise ParseError("settings must be a JSON object")

    problems = validate_tree(tree)
    if problems:
        raise IntegrityError("; ".join(problems))
    return tree, graph, settings


def _check_keys(doc: dict, expected: set[str], where: str) -> None:
    unknown = set(doc) - expected
    if unknown:
        raise ParseError(f"unknown {where} key(s): {sorted(unknown)}")
    missing = expected - set(doc)
    if missing:
        raise ParseError(f"missing {where} key(s): {sorted(missing)}")


def _tree_from_doc(doc: object) -> EventTree:
    if not isinstance(doc, dict):
        raise ParseError("tree section must be an object")
    _check_keys(doc, _TREE_KEYS, "tree")
    raw_nodes = doc["nodes"]
    if not isinstance(raw_nodes, list) or not raw_nodes:
        raise ParseError("tree.nodes must be a nonempty array")

    nodes: dict[str, EventNode] = {}
    for raw in raw_nodes:
        if not isinstance(raw, dict):
            raise ParseError("each node must be an object")
        _check_keys(raw, _NODE_KEYS, "node")
        try:
            direction = Direction(raw["direction"])
        except ValueError:
            raise ParseError(f"node {raw.get('id')!r} has unknown direction {raw['direction']!r}")
        if not isinstance(raw["seq"], int):
            raise ParseError(f"node {raw.get('id')!r} seq must be an integer")
        if not isinstance(raw["children"], list) or not isinstance(raw["prior_guesses"], list):
            raise ParseError(f"node {raw.get('id')!r} children and prior_guesses must be arrays")
        node = EventNode(
            id=str(raw["id"]),
            text=str(raw["text"]),
            direction=direction,
            parent_id=None if raw["parent_id"] is None else str(raw["parent_id"]),
            child_ids=[str(c) for c in raw["children"]],
            created_seq=raw["seq"],
            prior_guesses=[str(g) for g in raw["prior_guesses"]],
        )
        if node.id in nodes:
            raise IntegrityError(f"duplicate node id {node.id!r}")
        nodes[node.id] = node

    root_id = str(doc["root_id"])
    next_seq = max(n.created_seq for n in nodes.values()) + 1
    return EventTree(nodes=nodes, root_id=root_id, next_seq=next_seq)
