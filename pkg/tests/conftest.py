import random

import pytest

from storysearch.graph import EntityGraph, add_entity, add_relationship
from storysearch.llm import MockProvider
from storysearch.tree import Direction, EventTree, add_event

# Public-domain Andersen opening (also used as a corpus record in loader tests).
FIR_TREE_STUB = (
    "Out in the woods stood a nice little Fir Tree. The place he had was a very good one: "
    "the sun shone on him: as to fresh air, there was enough of that, and round him grew many "
    "large-sized comrades, pines as well as firs. But the little Fir wanted so very much to be "
    "a grown-up tree."
)


@pytest.fixture
def mock_provider():
    return MockProvider(seed=7)


@pytest.fixture
def stub_tree():
    return EventTree.new(FIR_TREE_STUB)


def build_random_tree(seed: int, node_count: int, backward_ratio: float = 0.2) -> EventTree:
    """Random tree via the public API only; deterministic for a given seed."""
    rng = random.Random(seed)
    tree = EventTree.new(f"Seed story {seed} begins with a long-enough opening line.")
    for i in range(node_count - 1):
        parent = rng.choice(list(tree.nodes))
        direction = Direction.BACKWARD if rng.random() < backward_ratio else Direction.FORWARD
        node_id = add_event(tree, parent, f"Event {seed}-{i} text.", direction)
        if rng.random() < 0.3:
            tree.nodes[node_id].prior_guesses.extend(
                f"guess {i}-{j}" for j in range(rng.randint(1, 3))
            )
    return tree


def build_random_graph(seed: int, entity_count: int) -> EntityGraph:
    rng = random.Random(seed)
    types = ["person", "place", "thing"]
    rel_types = ["knows", "holds", "lives_in"]
    graph = EntityGraph.empty(types, rel_types)
    ids = [
        add_entity(graph, f"Entity {seed}-{i}", rng.choice(types)) for i in range(entity_count)
    ]
    for _ in range(entity_count):
        a, b = rng.sample(ids, 2) if len(ids) >= 2 else (None, None)
        if a is not None:
            add_relationship(graph, a, b, rng.choice(rel_types))
    return graph


@pytest.fixture
def corpus_file(tmp_path):
    """Corpus with blank-line-separated records; several pass the stub length rule."""
    records = [FIR_TREE_STUB]
    rng = random.Random(11)
    for i in range(30):
        words = " ".join(f"word{rng.randint(0, 50)}" for _ in range(60))
        records.append(f"Story {i} starts here. {words}.")
    records.append("Too short to qualify.")
    path = tmp_path / "corpus.txt"
    path.write_text("\n\n".join(records), encoding="utf-8")
    return path
