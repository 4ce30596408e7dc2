"""Branching event tree: nodes, directional cause/effect links, chain extraction.

Every narrative is a root-to-leaf chain through the tree. Backward ("cause")
events are stored as children of the event they explain; story-order rendering
places their text before the parent's.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import IntegrityError, InvalidInputError, NotFoundError

# Oldest prior guesses are evicted beyond this cap to bound prompt size.
PRIOR_GUESS_CAP = 20


class Direction(str, Enum):
    ROOT = "root"
    FORWARD = "forward"
    BACKWARD = "backward"


@dataclass
class EventNode:
    """One short story event plus its position in the tree."""

    id: str
    text: str
    direction: Direction
    parent_id: str | None = None
    child_ids: list[str] = field(default_factory=list)
    created_seq: int = 0
    prior_guesses: list[str] = field(default_factory=list)
    ephemeral: bool = False


@dataclass
class EventTree:
    nodes: dict[str, EventNode]
    root_id: str
    next_seq: int

    @classmethod
    def new(cls, root_text: str) -> "EventTree":
        if not root_text or not root_text.strip():
            raise InvalidInputError("root text must be nonempty")
        root = EventNode(id="e0", text=root_text, direction=Direction.ROOT, created_seq=0)
        return cls(nodes={root.id: root}, root_id=root.id, next_seq=1)

    @property
    def root(self) -> EventNode:
        return self.nodes[self.root_id]

    def node(self, node_id: str) -> EventNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise NotFoundError(f"unknown node id {node_id!r}") from None


@dataclass
class StoryChain:
    """A root-to-descendant path; texts are in path order."""

    node_ids: list[str]
    texts: list[str]

    def __len__(self) -> int:
        return len(self.node_ids)

    @property
    def leaf_id(self) -> str:
        return self.node_ids[-1]


def add_event(
    tree: EventTree,
    parent_id: str,
    text: str,
    direction: Direction | str,
    ephemeral: bool = False,
) -> str:
    """Append a new event as the last child of ``parent_id``; return its id."""
    try:
        direction = Direction(direction)
    except ValueError:
        raise InvalidInputError(f"unknown direction {direction!r}") from None
    if direction is Direction.ROOT:
        raise InvalidInputError("only the initial event may have direction 'root'")
    parent = tree.node(parent_id)
    if not text or not text.strip():
        raise InvalidInputError("event text must be nonempty")

    seq = tree.next_seq
    node_id = f"e{seq}"
    bump = 0
    while node_id in tree.nodes:  # only possible after loading foreign ids
        bump += 1
        node_id = f"e{seq}-{bump}"
    tree.nodes[node_id] = EventNode(
        id=node_id,
        text=text,
        direction=direction,
        parent_id=parent_id,
        created_seq=seq,
        ephemeral=ephemeral,
    )
    parent.child_ids.append(node_id)
    tree.next_seq = seq + 1
    return node_id


def record_prior_guess(tree: EventTree, node_id: str, text: str) -> None:
    """Remember a generated candidate for the avoid-list, evicting the oldest past the cap."""
    node = tree.node(node_id)
    node.prior_guesses.append(text)
    if len(node.prior_guesses) > PRIOR_GUESS_CAP:
        del node.prior_guesses[: len(node.prior_guesses) - PRIOR_GUESS_CAP]


def ancestor_chain(tree: EventTree, node_id: str) -> StoryChain:
    """Return the root-to-``node_id`` path inclusive, in path order."""
    ids: list[str] = []
    current: EventNode | None = tree.node(node_id)
    while current is not None:
        ids.append(current.id)
        if len(ids) > len(tree.nodes):
            raise IntegrityError("parent links form a cycle")
        current = tree.nodes.get(current.parent_id) if current.parent_id else None
    ids.reverse()
    if ids[0] != tree.root_id:
        raise IntegrityError(f"node {node_id!r} is not reachable from the root")
    return StoryChain(node_ids=ids, texts=[tree.nodes[i].text for i in ids])


def committed_children(tree: EventTree, node_id: str) -> list[str]:
    """Child ids excluding ephemeral rollout nodes, in creation order."""
    return [c for c in tree.node(node_id).child_ids if not tree.nodes[c].ephemeral]


def chains_of_length(tree: EventTree, length: int) -> list[StoryChain]:
    """Every committed root-to-leaf chain with at least ``length`` nodes,
    truncated to exactly ``length`` nodes from the root and de-duplicated.

    Ordered by the created_seq of the chain's last (length-th) node.
    """
    if length < 1:
        raise InvalidInputError("length must be >= 1")
    seen: dict[tuple[str, ...], StoryChain] = {}
    stack: list[tuple[str, list[str]]] = [(tree.root_id, [tree.root_id])]
    while stack:
        node_id, path = stack.pop()
        kids = committed_children(tree, node_id)
        if not kids:
            if len(path) >= length:
                prefix = tuple(path[:length])
                if prefix not in seen:
                    seen[prefix] = StoryChain(
                        node_ids=list(prefix),
                        texts=[tree.nodes[i].text for i in prefix],
                    )
            continue
        for child in kids:
            stack.append((child, path + [child]))
    return sorted(seen.values(), key=lambda ch: tree.nodes[ch.leaf_id].created_seq)


def max_chain_length(tree: EventTree) -> int:
    """Node count of the deepest committed root-to-leaf chain."""
    best = 1
    stack: list[tuple[str, int]] = [(tree.root_id, 1)]
    while stack:
        node_id, depth = stack.pop()
        best = max(best, depth)
        for child in committed_children(tree, node_id):
            stack.append((child, depth + 1))
    return best


def delete_subtree(tree: EventTree, node_id: str) -> int:
    """Remove ``node_id`` and all descendants; returns the number of removed nodes."""
    node = tree.node(node_id)
    if node_id == tree.root_id:
        raise InvalidInputError("the root event cannot be deleted")
    doomed: list[str] = []
    stack = [node_id]
    while stack:
        nid = stack.pop()
        doomed.append(nid)
        stack.extend(tree.nodes[nid].child_ids)
    parent = tree.nodes[node.parent_id]
    parent.child_ids.remove(node_id)
    for nid in doomed:
        del tree.nodes[nid]
    return len(doomed)


def story_order_texts(tree: EventTree, chain: StoryChain) -> list[str]:
    """Chain texts in reading order: each backward event before its parent's text."""
    order: list[str] = []
    position: dict[str, int] = {}
    for node_id in chain.node_ids:
        node = tree.node(node_id)
        if node.direction is Direction.BACKWARD and node.parent_id in position:
            index = position[node.parent_id]
        else:
            index = len(order)
        order.insert(index, node_id)
        position = {nid: i for i, nid in enumerate(order)}
    return [tree.nodes[nid].text for nid in order]


def validate_tree(tree: EventTree) -> list[str]:
    """Return a list of invariant violations; empty when the tree is sound."""
    problems: list[str] = []
    if tree.root_id not in tree.nodes:
        return [f"root id {tree.root_id!r} is not a node"]
    roots = [n for n in tree.nodes.values() if n.direction is Direction.ROOT]
    if len(roots) != 1 or roots[0].id != tree.root_id:
        problems.append("exactly one node must have direction 'root' and match root_id")
    if tree.root.parent_id is not None:
        problems.append("root node must not have a parent")

    seqs: set[int] = set()
    for node in tree.nodes.values():
        if node.id != tree.root_id:
            if node.parent_id is None:
                problems.append(f"node {node.id!r} has no parent")
            elif node.parent_id not in tree.nodes:
                problems.append(f"node {node.id!r} references missing parent {node.parent_id!r}")
            elif node.id not in tree.nodes[node.parent_id].child_ids:
                problems.append(f"node {node.id!r} missing from its parent's child list")
        if node.created_seq in seqs:
            problems.append(f"duplicate created_seq {node.created_seq}")
        seqs.add(node.created_seq)
        kid_seqs = [tree.nodes[c].created_seq for c in node.child_ids if c in tree.nodes]
        if kid_seqs != sorted(kid_seqs):
            problems.append(f"children of {node.id!r} are not ordered by created_seq")
        for child in node.child_ids:
            if child not in tree.nodes:
                problems.append(f"node {node.id!r} lists missing child {child!r}")
            elif tree.nodes[child].parent_id != node.id:
                problems.append(f"child {child!r} does not point back to {node.id!r}")

    reachable: set[str] = set()
    stack = [tree.root_id]
    while stack:
        nid = stack.pop()
        if nid in reachable:
            problems.append(f"cycle detected at node {nid!r}")
            break
        reachable.add(nid)
        stack.extend(c for c in tree.nodes[nid].child_ids if c in tree.nodes)
    unreachable = set(tree.nodes) - reachable
    if unreachable:
        problems.append(f"unreachable nodes: {sorted(unreachable)}")

    if seqs and tree.next_seq <= max(seqs):
        problems.append("next_seq must exceed every created_seq")
    return problems
