import json

import pytest

from storysearch.errors import IntegrityError, ParseError
from storysearch.graph import EntityGraph
from storysearch.project_io import deserialize_project, serialize_project
from storysearch.tree import Direction, EventTree, add_event

from conftest import build_random_graph, build_random_tree


def empty_graph():
    return EntityGraph.empty(["person"], ["knows"])


def assert_trees_structurally_equal(a: EventTree, b: EventTree):
    assert a.root_id == b.root_id
    assert set(a.nodes) == set(b.nodes)
    for node_id, node in a.nodes.items():
        other = b.nodes[node_id]
        assert (node.text, node.direction, node.parent_id) == (
            other.text,
            other.direction,
            other.parent_id,
        )
        assert node.child_ids == other.child_ids
        assert node.created_seq == other.created_seq
        assert node.prior_guesses == other.prior_guesses
        assert other.ephemeral is False


def test_empty_project_roundtrips_byte_identically():
    tree = EventTree.new("A single root event that stands alone.")
    data = serialize_project(tree, empty_graph(), {})
    tree2, graph2, settings2 = deserialize_project(data)
    assert serialize_project(tree2, graph2, settings2) == data


def test_random_tree_roundtrips_structurally():
    tree = build_random_tree(seed=13, node_count=50)
    graph = build_random_graph(seed=13, entity_count=10)
    settings = {"theme": "forest", "nested": {"k": [1, 2, 3]}}
    tree2, graph2, settings2 = deserialize_project(serialize_project(tree, graph, settings))
    assert_trees_structurally_equal(tree, tree2)
    assert settings2 == settings
    assert {e.id: (e.label, e.entity_type) for e in graph.entities.values()} == {
        e.id: (e.label, e.entity_type) for e in graph2.entities.values()
    }
    assert set(graph.relationships) == set(graph2.relationships)


def test_child_with_missing_parent_is_integrity_error():
    tree = EventTree.new("Root text.")
    add_event(tree, tree.root_id, "child", Direction.FORWARD)
    doc = json.loads(serialize_project(tree, empty_graph(), {}))
    doc["tree"]["nodes"][1]["parent_id"] = "missing"
    with pytest.raises(IntegrityError):
        deserialize_project(json.dumps(doc).encode())


def test_malformed_json_reports_position():
    with pytest.raises(ParseError) as excinfo:
        deserialize_project(b'{"version": 1, "tree": ')
    assert excinfo.value.position is not None


def test_unknown_top_level_key_rejected():
    tree = EventTree.new("Root text.")
    doc = json.loads(serialize_project(tree, empty_graph(), {}))
    doc["extra"] = True
    with pytest.raises(ParseError, match="extra"):
        deserialize_project(json.dumps(doc).encode())


def test_unknown_node_key_rejected():
    tree = EventTree.new("Root text.")
    doc = json.loads(serialize_project(tree, empty_graph(), {}))
    doc["tree"]["nodes"][0]["surprise"] = 1
    with pytest.raises(ParseError, match="surprise"):
        deserialize_project(json.dumps(doc).encode())


def test_wrong_version_rejected():
    tree = EventTree.new("Root text.")
    doc = json.loads(serialize_project(tree, empty_graph(), {}))
    doc["version"] = 2
    with pytest.raises(ParseError, match="version"):
        deserialize_project(json.dumps(doc).encode())


def test_ephemeral_node_cannot_be_persisted():
    tree = EventTree.new("Root text.")
    add_event(tree, tree.root_id, "ghost", Direction.FORWARD, ephemeral=True)
    with pytest.raises(IntegrityError, match="ephemeral"):
        serialize_project(tree, empty_graph(), {})


def test_graph_self_loop_in_file_rejected():
    tree = EventTree.new("Root text.")
    graph = build_random_graph(seed=2, entity_count=3)
    doc = json.loads(serialize_project(tree, graph, {}))
    entity_id = doc["graph"]["entities"][0]["id"]
    doc["graph"]["relationships"].append(
        {"source": entity_id, "target": entity_id, "type": "knows"}
    )
    with pytest.raises(IntegrityError, match="self-loop"):
        deserialize_project(json.dumps(doc).encode())
